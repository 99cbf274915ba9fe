"""Detector memory kernels for weak-measurement operator orderings.

A measurement record taken with memory function f mixes the backaction
channel into the readout:

    A_w(t) = A_c(t) + (1/2) integral dt' f(t - t') A_q(t')

f == 0 is the memoryless detector (symmetrized ordering).  A detector in
equilibrium at temperature Td has

    f(omega) = i coth(omega / 2 Td),      f(t) = Td coth(pi t Td),

purely imaginary and odd in frequency, real and odd in time; the Td -> 0
limit is f(omega) = i sgn(omega), f(t) = 1/(pi t), which orders correlators
as pure emission noise.  Reversing the overall sign gives absorption
ordering instead.  Frequency and time forms are a Fourier pair under
f(t) = integral domega/2pi e^{-i omega t} f(omega).

Temperatures are energies (k_B = 1) and Td < 0 is deliberately not a valid
field value: an inverted detector is expressed as sign = -1 with Td >= 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

VARIANTS = ("markovian", "equilibrium", "tabulated")


@dataclass(frozen=True)
class MemoryKernel:
    """Detector memory function.

    variant: "markovian" (f == 0), "equilibrium" (Td, sign), or "tabulated"
    (imaginary f(omega) sampled on an ascending grid of positive frequencies
    and extended oddly, frequency domain only; meant for CLI what-if runs,
    not for the time-domain solvers).
    """

    variant: str
    Td: float = 0.0
    sign: int = 1
    omega_grid: np.ndarray | None = None
    f_imag: np.ndarray | None = None

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown kernel variant {self.variant!r}")
        if self.Td < 0:
            raise ValueError("Td must be >= 0; use sign=-1 for inverted detectors")
        if self.sign not in (1, -1):
            raise ValueError("sign must be +1 or -1")
        if self.variant == "tabulated":
            if self.omega_grid is None or self.f_imag is None:
                raise ValueError("tabulated kernel needs omega_grid and f_imag")
            w = np.asarray(self.omega_grid, dtype=float)
            g = np.asarray(self.f_imag, dtype=float)
            if w.ndim != 1 or w.shape != g.shape or w.size < 2:
                raise ValueError("tabulated kernel arrays must be matching 1d grids")
            if not np.all(np.diff(w) > 0):
                raise ValueError("tabulated omega grid must be strictly ascending")
            if w[0] <= 0:
                raise ValueError(
                    "tabulated grid covers positive frequencies only; "
                    "negative ones come from the odd extension"
                )
            w.setflags(write=False)
            g.setflags(write=False)
            object.__setattr__(self, "omega_grid", w)
            object.__setattr__(self, "f_imag", g)


def markovian() -> MemoryKernel:
    return MemoryKernel("markovian")


def equilibrium(Td: float, sign: int = 1) -> MemoryKernel:
    return MemoryKernel("equilibrium", Td=Td, sign=sign)


def tabulated(omega_grid, f_imag) -> MemoryKernel:
    return MemoryKernel("tabulated", omega_grid=omega_grid, f_imag=f_imag)


def f_omega(kernel: MemoryKernel, omega: float) -> complex:
    """Frequency-domain memory function; odd and purely imaginary."""
    if kernel.variant == "markovian":
        return 0j
    if kernel.variant == "equilibrium":
        if omega == 0:
            raise ValueError("f(omega) diverges at omega = 0")
        if kernel.Td == 0:
            return kernel.sign * 1j * math.copysign(1.0, omega)
        return kernel.sign * 1j / math.tanh(omega / (2 * kernel.Td))
    lo, hi = kernel.omega_grid[0], kernel.omega_grid[-1]
    if not lo <= abs(omega) <= hi:
        raise ValueError(f"|omega| = {abs(omega)} outside tabulated range [{lo}, {hi}]")
    val = float(np.interp(abs(omega), kernel.omega_grid, kernel.f_imag))
    return kernel.sign * 1j * math.copysign(1.0, omega) * val


def f_time(kernel: MemoryKernel, t: float) -> float:
    """Time-domain memory function; real and odd, singular like 1/(pi t)."""
    if kernel.variant == "markovian":
        return 0.0
    if kernel.variant == "tabulated":
        raise ValueError("tabulated kernels are frequency-domain only")
    if t == 0:
        raise ValueError("f(t) diverges at t = 0")
    if kernel.Td == 0:
        return kernel.sign / (math.pi * t)
    x = math.pi * t * kernel.Td
    # coth saturates at sign(t); write it via tanh to avoid overflow.
    return kernel.sign * kernel.Td / math.tanh(x)


@dataclass(frozen=True)
class CalibrationReport:
    """Residuals of the no-information condition for a probe two-level system.

    Feeding the probe's thermal line weights through the weak combination
    leaves the factor residual_plus = 1 - Im(f) tanh(omega/2T) on an
    emission-ordered (sign +1) detector and residual_minus = 1 + Im(f)
    tanh(omega/2T) on an absorption-ordered (sign -1) one; the same probe
    value can only calibrate one branch (plus zeroes at Im f = +coth, minus
    at -coth, and plus + minus = 2 always).  A nonzero real part of f is
    unconditionally unphysical.
    """

    omega: float
    T: float
    residual_plus: float
    residual_minus: float
    residual_real: float

    def sign_residual(self, sign: int = 1) -> float:
        """Calibration defect of the chosen ordering branch."""
        if sign not in (1, -1):
            raise ValueError("sign must be +1 or -1")
        line = self.residual_plus if sign == 1 else self.residual_minus
        return max(abs(line), self.residual_real)


def _tanh_half(omega: float, T: float) -> float:
    if omega <= 0:
        raise ValueError("probe frequency must be > 0")
    if T < 0:
        raise ValueError("temperature must be >= 0")
    if T == 0:
        return 1.0
    return math.tanh(omega / (2 * T))


def calibration_residual(f_probe: complex, omega: float, T: float) -> CalibrationReport:
    th = _tanh_half(omega, T)
    return CalibrationReport(
        omega=omega,
        T=T,
        residual_plus=1.0 - f_probe.imag * th,
        residual_minus=1.0 + f_probe.imag * th,
        residual_real=abs(f_probe.real),
    )


BRACKET = (1.0, 1e6)


def solve_kernel(omega: float, T: float) -> MemoryKernel:
    """Find the equilibrium kernel that silences a thermal probe at (omega, T).

    Root-finds Im f on the bracket [1, 1e6] so that the probe's emission-line
    residual vanishes, then cross-checks against the closed form
    Im f = coth(omega/2T) before returning equilibrium(Td=T).
    """
    th = _tanh_half(omega, T)

    def res(im_f: float) -> float:
        return calibration_residual(1j * im_f, omega, T).residual_plus

    lo, hi = BRACKET
    if res(lo) == 0.0:
        root = lo
    else:
        if res(lo) < 0 or res(hi) > 0:
            raise ValueError(
                f"no calibration root in Im f bracket {BRACKET} for omega={omega}, T={T}"
            )
        root = brentq(res, lo, hi, xtol=1e-14, rtol=1e-15)
    closed = 1.0 / th
    if abs(root - closed) > 1e-10 * closed:
        raise RuntimeError(
            f"calibration root {root!r} disagrees with coth(omega/2T) = {closed!r}"
        )
    return equilibrium(Td=T, sign=1)


# JSON config form used by the CLI.

def kernel_to_config(kernel: MemoryKernel) -> dict:
    if kernel.variant == "markovian":
        return {"variant": "markovian"}
    if kernel.variant == "equilibrium":
        return {"variant": "equilibrium", "Td": kernel.Td, "sign": kernel.sign}
    return {
        "variant": "tabulated",
        "sign": kernel.sign,
        "omega": [float(w) for w in kernel.omega_grid],
        "imag": [float(g) for g in kernel.f_imag],
    }


def kernel_from_config(obj: dict) -> MemoryKernel:
    if "variant" not in obj:
        raise ValueError("kernel config needs a 'variant' key")
    variant = obj["variant"]
    allowed = {
        "markovian": set(),
        "equilibrium": {"Td", "sign"},
        "tabulated": {"omega", "imag", "sign"},
    }
    if variant not in allowed:
        raise ValueError(f"unknown kernel variant {variant!r}")
    unknown = set(obj) - {"variant"} - allowed[variant]
    if unknown:
        raise ValueError(f"unknown kernel config keys: {sorted(unknown)}")
    if variant == "markovian":
        return markovian()
    if variant == "equilibrium":
        return equilibrium(Td=float(obj.get("Td", 0.0)), sign=int(obj.get("sign", 1)))
    return MemoryKernel(
        "tabulated",
        sign=int(obj.get("sign", 1)),
        omega_grid=obj["omega"],
        f_imag=obj["imag"],
    )
