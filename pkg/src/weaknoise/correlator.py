"""Noise spectra and time-domain correlators of weakly measured observables.

Spectra of small closed systems are exact line sums: for a stationary state
(rho commuting with H) the correlator of centered observables is

    S_AB(omega) = integral dt e^{i omega t} <dA(t) dB(0)>
                = sum_k 2 pi w_k delta(omega - omega_k)

with lines at the Bohr gaps omega = E_n - E_m and weights
w = sum_m p_m dA_mn dB_nm (generalized below to degenerate spectra).
LineSpectrum stores the (omega_k, w_k) pairs.

The weak-measurement spectrum of a record taken with memory kernel f mixes
the two operator orders.  Writing a = w_AB(omega) and b = w_BA(-omega) per
line, the measured weight is

    w_weak = (a + b)/2 - Im f(omega) * (a - b)/2

which for a detector in equilibrium at Td is the ratio
[e^x b - e^{-x} a] / (2 sinh x) with x = omega/2Td, reduces to plain
emission/absorption selection at Td = 0, and to the symmetrized average for
a memoryless detector.  A probe in equilibrium at the detector temperature
produces no lines at all: the record carries no information.

Time-domain correlators of n <= 4 measurements at arbitrary times are
evaluated on a uniform grid by the event sweep in _grid: each measurement
contributes its classical superoperator at t_j plus kernel-weighted
backaction samples at the midpoints t_j +/- (k + 1/2) dt, everything is
globally time-ordered, and the subset sweep accumulates the full
product-of-sums expansion in one pass over the events.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import hilbert
from ._grid import GRID_BACKEND, KIND_C, KIND_Q, grid_sweep
from .hilbert import DensityMatrix, Operator
from .kernel import MemoryKernel, f_omega, f_time

LINE_MERGE_TOL = 1e-9
STATIONARITY_TOL = 1e-10


@dataclass(frozen=True)
class LineSpectrum:
    """Discrete spectrum S(omega) = sum_k 2 pi w_k delta(omega - omega_k)."""

    omegas: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.omegas, dtype=float)
        c = np.asarray(self.weights, dtype=complex)
        if w.ndim != 1 or w.shape != c.shape:
            raise ValueError("omegas and weights must be matching 1d arrays")
        if w.size > 1 and not np.all(np.diff(w) > 0):
            raise ValueError("line frequencies must be strictly ascending")
        w.setflags(write=False)
        c.setflags(write=False)
        object.__setattr__(self, "omegas", w)
        object.__setattr__(self, "weights", c)

    @classmethod
    def from_lines(cls, omegas, weights, merge_tol: float = LINE_MERGE_TOL):
        """Sort and merge lines closer than merge_tol (weights add)."""
        w = np.asarray(omegas, dtype=float)
        c = np.asarray(weights, dtype=complex)
        order = np.argsort(w, kind="stable")
        w, c = w[order], c[order]
        out_w, out_c = [], []
        for wi, ci in zip(w, c):
            if out_w and wi - out_w[-1] <= merge_tol:
                out_c[-1] += ci
            else:
                out_w.append(float(wi))
                out_c.append(complex(ci))
        return cls(np.array(out_w), np.array(out_c, dtype=complex))

    def mirrored(self) -> "LineSpectrum":
        """The spectrum with omega -> -omega (weights follow their lines)."""
        return LineSpectrum(-self.omegas[::-1], self.weights[::-1].copy())

    def weight_at(self, omega: float, tol: float = LINE_MERGE_TOL) -> complex:
        hits = np.nonzero(np.abs(self.omegas - omega) <= tol)[0]
        if hits.size == 0:
            return 0j
        return complex(self.weights[hits].sum())

    def time_correlator(self, t: float) -> complex:
        """Inverse transform: C(t) = sum_k w_k e^{-i omega_k t}."""
        return complex(np.sum(self.weights * np.exp(-1j * self.omegas * t)))

    def max_abs_weight(self) -> float:
        return float(np.max(np.abs(self.weights))) if self.weights.size else 0.0


def _check_stationary(es: hilbert.EigenSystem, rho: np.ndarray, scale: float):
    comm = es.energies[:, None] * rho - rho * es.energies[None, :]
    if np.max(np.abs(comm)) > STATIONARITY_TOL * max(1.0, scale):
        raise ValueError("state is not stationary: [rho, H] != 0")


def lehmann_spectrum(
    H: Operator,
    rho: DensityMatrix,
    A: Operator,
    B: Operator,
    subtract_means: bool = True,
) -> LineSpectrum:
    """Line spectrum of <dA(t) dB(0)> in the stationary state rho.

    subtract_means=False keeps the means, which for nonzero <A><B> adds a
    static line at omega = 0.
    """
    if not (H.dim == rho.dim == A.dim == B.dim):
        raise ValueError("dimension mismatch")
    es = hilbert.eigensystem(H)
    r = es.to_eigenbasis(rho.entries)
    scale = float(np.max(np.abs(es.energies))) if es.energies.size else 1.0
    _check_stationary(es, r, scale)
    a = es.to_eigenbasis(A.entries)
    b = es.to_eigenbasis(B.entries)
    if subtract_means:
        a = a - np.trace(r @ a) * np.eye(H.dim)
        b = b - np.trace(r @ b) * np.eye(H.dim)
    # Line at omega = E_n - E_m picks up (rho a)_mn b_nm; degenerate blocks
    # of rho are handled by the matrix product, no per-level populations.
    gaps = es.energies[None, :] - es.energies[:, None]
    w = (r @ a) * b.T
    return LineSpectrum.from_lines(gaps.ravel(), w.ravel())


def weak_spectrum(
    S_AB: LineSpectrum,
    S_BA: LineSpectrum,
    kern: MemoryKernel,
) -> LineSpectrum:
    """Spectrum of the weak measurement record built from the two orderings.

    S_AB and S_BA are both forward spectra (time argument on the first
    operator); the reflection that puts them on a common frequency axis
    happens here.  Zero-frequency lines take the symmetrized weight, since
    the antisymmetric part of a stationary correlator vanishes at omega = 0.
    """
    S_BA_m = S_BA.mirrored()
    if S_AB.omegas.shape != S_BA_m.omegas.shape or (
        S_AB.omegas.size
        and np.max(np.abs(S_AB.omegas - S_BA_m.omegas)) > LINE_MERGE_TOL
    ):
        raise ValueError("input spectra have misaligned line sets")
    out = np.empty_like(S_AB.weights)
    for i, om in enumerate(S_AB.omegas):
        a = S_AB.weights[i]
        b = S_BA_m.weights[i]
        if abs(om) <= LINE_MERGE_TOL:
            out[i] = (a + b) / 2
        else:
            im_f = f_omega(kern, float(om)).imag
            out[i] = (a + b) / 2 - im_f * (a - b) / 2
    return LineSpectrum(S_AB.omegas.copy(), out)


def fdt_residual(H: Operator, T: float, A: Operator, B: Operator, omega: float) -> complex:
    """Detailed-balance defect S_AB(omega) - e^{omega/T} S_BA(-omega) at one line."""
    if T <= 0:
        raise ValueError("detailed balance needs T > 0")
    rho = hilbert.thermal_state(H, T)
    s_ab = lehmann_spectrum(H, rho, A, B)
    s_ba = lehmann_spectrum(H, rho, B, A)
    return s_ab.weight_at(omega) - math.exp(omega / T) * s_ba.weight_at(-omega)


def fdt_max_residual(H: Operator, T: float, A: Operator, B: Operator) -> float:
    """Largest detailed-balance defect over every line of the thermal pair."""
    rho = hilbert.thermal_state(H, T)
    s_ab = lehmann_spectrum(H, rho, A, B)
    worst = 0.0
    for om in s_ab.omegas:
        worst = max(worst, abs(fdt_residual(H, T, A, B, float(om))))
    return worst


@dataclass(frozen=True)
class WeakCorrelatorRequest:
    """Time-domain weak correlator job for the grid sweep.

    observables: up to four (Operator, time) pairs, in measurement order.
    window: (t_min, t_max) simulation window containing every time; the
    backaction integral is truncated to it.  dt: grid step, required to
    resolve the fastest system scale (dt <= 0.2 / ||H||).
    """

    H: Operator
    rho: DensityMatrix
    observables: tuple
    kern: MemoryKernel
    dt: float
    window: tuple

    def __post_init__(self):
        obs = tuple((op, float(t)) for op, t in self.observables)
        object.__setattr__(self, "observables", obs)
        object.__setattr__(self, "window", (float(self.window[0]), float(self.window[1])))
        if not 1 <= len(obs) <= 4:
            raise ValueError("between 1 and 4 measurements supported")
        for op, _ in obs:
            if not op.hermitian:
                raise ValueError("measured observables must be hermitian")
            if op.dim != self.H.dim:
                raise ValueError("dimension mismatch")
        if self.rho.dim != self.H.dim:
            raise ValueError("dimension mismatch")
        t_min, t_max = self.window
        if not t_min < t_max:
            raise ValueError("empty window")
        if self.dt <= 0:
            raise ValueError("dt must be > 0")
        norm = float(np.max(np.abs(np.linalg.eigvalsh(self.H.entries))))
        if norm > 0 and self.dt > 0.2 / norm:
            raise ValueError(f"grid too coarse: dt = {self.dt} > 0.2/||H|| = {0.2 / norm}")
        for _, t in obs:
            if not t_min <= t <= t_max:
                raise ValueError(f"measurement time {t} outside window {self.window}")


def _grid_events(req: WeakCorrelatorRequest):
    """Sorted (time, measurement, kind, coeff) arrays for the sweep."""
    t_min, t_max = req.window
    times, meas, kinds, coeffs = [], [], [], []
    for j, (_, tj) in enumerate(req.observables):
        times.append(tj)
        meas.append(j)
        kinds.append(KIND_C)
        coeffs.append(1.0)
        if req.kern.variant == "markovian":
            continue
        k = 0
        while True:
            off = (k + 0.5) * req.dt
            hit = False
            for tp in (tj - off, tj + off):
                if t_min <= tp <= t_max:
                    times.append(tp)
                    meas.append(j)
                    kinds.append(KIND_Q)
                    coeffs.append(f_time(req.kern, tj - tp) * req.dt / 2)
                    hit = True
            if not hit:
                break
            k += 1
    order = np.lexsort((np.array(meas), np.array(times)))
    return (
        np.asarray(times, dtype=np.float64)[order],
        np.asarray(meas, dtype=np.int32)[order],
        np.asarray(kinds, dtype=np.uint8)[order],
        np.asarray(coeffs, dtype=np.float64)[order],
    )


def weak_correlator_grid(req: WeakCorrelatorRequest, backend=None) -> complex:
    """<a_1(t_1) ... a_n(t_n)>_w of the weak measurement record.

    Means are not subtracted; feed centered observables if that is wanted.
    backend overrides the compiled/fallback selection (for parity tests).
    """
    es = hilbert.eigensystem(req.H)
    obs = np.stack([es.to_eigenbasis(op.entries) for op, _ in req.observables])
    rho = es.to_eigenbasis(req.rho.entries)
    ev = _grid_events(req)
    sweep = grid_sweep if backend is None else backend
    return sweep(np.ascontiguousarray(es.energies), np.ascontiguousarray(obs),
                 np.ascontiguousarray(rho), *ev)


def tls_equal_time_variance(omega: float, t_inf: float) -> float:
    """Weak variance of one circularly precessing two-level observable.

    The emission-ordered equal-time second moment of A = sigma_x + sigma_z
    measured on the state (1 + sigma_y)/2 while A precesses at omega is

        2 + (2/pi) integral_0^{t_inf} (cos(omega t) - 1)/t dt,

    where t_inf is the backaction-memory truncation time.  The integral
    grows like -(2/pi) log(omega t_inf), so a long enough memory window
    drives the variance of this positive-operator moment negative: the
    emission-ordered quasiprobability is not a probability.
    """
    if omega <= 0 or t_inf <= 0:
        raise ValueError("omega and t_inf must be > 0")
    from scipy.integrate import quad

    def head_integrand(u: float) -> float:
        if u < 1e-12:
            return -u / 2  # (cos u - 1)/u is regular at 0
        return (math.cos(u) - 1.0) / u

    x = omega * t_inf
    split = min(x, 1.0)
    head, _ = quad(head_integrand, 0.0, split, limit=200)
    tail = 0.0
    if x > split:
        # cos(u)/u with the oscillatory weight handled by the cos-weighted
        # rule; the -1/u part integrates to -log in closed form.
        part, _ = quad(lambda u: 1.0 / u, split, x, weight="cos", wvar=1.0,
                       limit=400, limlst=400)
        tail = part - math.log(x / split)
    return 2.0 + (2.0 / math.pi) * (head + tail)


def tls_variance_asymptote(omega: float, t_inf: float) -> float:
    """Large-window form 2 - (2/pi)(log(omega t_inf) + gamma_Euler)."""
    x = omega * t_inf
    return 2.0 - (2.0 / math.pi) * (math.log(x) + float(np.euler_gamma))


def weak_positivity_check(matrix: np.ndarray, tol: float = 1e-10):
    """(is_nonnegative, min_eigenvalue) of a hermitian moment matrix."""
    m = np.asarray(matrix, dtype=complex)
    if np.max(np.abs(m - m.conj().T)) > 1e-9 * max(1.0, np.max(np.abs(m))):
        raise ValueError("moment matrix must be hermitian")
    lo = float(np.linalg.eigvalsh((m + m.conj().T) / 2).min())
    return lo >= -tol, lo
