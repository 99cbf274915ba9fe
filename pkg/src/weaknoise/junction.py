"""Tunnel-junction current noise under AC drive: photon-assisted squeezing.

Normalization: hbar = k_B = e = 1, angular frequencies, and every spectral
line delta(omega + omega' - 2 m Omega) is reported through its coefficient
with the t0 = 2 pi delta(0) bookkeeping, so the numbers here are the
dimensionless curves of the driven-junction squeezing figure
(units 2 pi G hbar Omega t0).

The building block is the equilibrium-ordered junction kernel

    w(alpha, T) = alpha coth(alpha / 2T),   w(alpha, 0) = |alpha|,

whose argument carries the factor 2 so that an undriven junction at the
detector temperature is exactly silent in weak order and the zero-frequency
limit reproduces Johnson-Nyquist noise 2GT.  An AC bias V(t) = V_ac cos
(Omega t) dresses tunneling with Bessel-function sidebands of argument
z = V_ac / Omega; the symmetrized noise lines are

    sum_n J_n(z) J_{n-2m}(z) w(omega - n Omega, T)

and at T_d = 0 the emission-ordered diagonal line differs from the
symmetrized one only by the vacuum term |omega|.  Squeezing of the current
quadratures shows up as emission noise dipping below the squeezing
correlator Re<dI(Omega)^2>, equivalently a quadrature variance below the
commutator bound 1/2; the whole point of the scan is that this violation of
the classical inequality exists for a finite drive window starting at
infinitesimal z.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np
from scipy.optimize import brentq
from scipy.special import jv

BESSEL_TAIL = 1e-14
CLOSURE_TOL = 1e-12
TIE_TOL = 1e-12


@dataclass(frozen=True)
class JunctionConfig:
    """Junction parameters; energies in units of the drive quantum Omega."""

    G: float = 1.0
    T: float = 0.0
    T_d: float = 0.0
    Omega: float = 1.0
    z: float = 0.0
    V_dc: float = 0.0

    def __post_init__(self):
        if self.G <= 0:
            raise ValueError("conductance G must be > 0")
        if self.z < 0:
            raise ValueError("drive amplitude z must be >= 0")
        if self.Omega <= 0:
            raise ValueError("Omega must be > 0")
        if self.T < 0 or self.T_d < 0:
            raise ValueError("temperatures must be >= 0")


def w(alpha: float, T: float) -> float:
    """Equilibrium noise kernel alpha coth(alpha/2T); |alpha| at T = 0."""
    if T < 0:
        raise ValueError("temperature must be >= 0")
    if T == 0:
        return abs(alpha)
    x = alpha / (2 * T)
    if abs(x) < 1e-7:
        return 2 * T * (1 + x * x / 3)
    return alpha / math.tanh(x)


def dc_noise(cfg: JunctionConfig, omega: float, ordering: str) -> float:
    """DC-bias current noise; 'symmetrized' or 'weak' (detector at cfg.T_d)."""
    if cfg.z != 0:
        raise ValueError("dc_noise needs an undriven junction (z = 0)")
    sym = cfg.G * (w(omega + cfg.V_dc, cfg.T) + w(omega - cfg.V_dc, cfg.T)) / 2
    if ordering == "symmetrized":
        return sym
    if ordering == "weak":
        return sym - cfg.G * w(omega, cfg.T_d)
    raise ValueError(f"unknown ordering {ordering!r}")


def _bessel_cutoff(z: float) -> int:
    n = max(12, int(math.ceil(z + 10 * z ** (1.0 / 3.0) + 12)))
    while abs(jv(n, z)) >= BESSEL_TAIL:
        n += 8
    return n


def pat_weight(cfg: JunctionConfig, m: int, omega: float, cutoff: int | None = None) -> float:
    """Coefficient of 2 pi delta(omega + omega' - 2 m Omega) in the driven noise."""
    if cfg.V_dc != 0:
        raise ValueError("photon-assisted formulas assume V_dc = 0")
    n_max = _bessel_cutoff(cfg.z) if cutoff is None else cutoff
    n = np.arange(-n_max, n_max + 1)
    j_n = jv(n, cfg.z)
    closure = float(np.sum(j_n * j_n))
    if abs(closure - 1.0) > CLOSURE_TOL:
        raise RuntimeError(f"Bessel truncation too tight: sum J_n^2 = {closure!r}")
    j_shift = jv(n - 2 * m, cfg.z)
    kern = np.array([w(omega - k * cfg.Omega, cfg.T) for k in n])
    return cfg.G * float(np.sum(j_n * j_shift * kern))


@dataclass(frozen=True)
class SqueezingReport:
    """One row of the driven-junction squeezing scan (units 2 pi G hbar Omega t0)."""

    z: float
    sym_abs: float
    re_sq: float
    emission: float
    quad_var: float
    bound: float
    violated: bool

    def __post_init__(self):
        # The two violation criteria are the same statement; wiring must agree.
        d = self.re_sq - self.emission
        if abs((self.bound - self.quad_var) - d / 2) > 1e-12:
            raise AssertionError("quadrature and emission criteria disagree")
        if self.violated != (d > TIE_TOL):
            raise AssertionError("violated flag inconsistent with weights")


def squeezing_report(cfg: JunctionConfig, omega: float | None = None) -> SqueezingReport:
    """Squeezing diagnostics of the driven junction at the first harmonic."""
    if cfg.T_d != 0:
        raise ValueError("emission branch needs T_d = 0")
    if cfg.V_dc != 0:
        raise ValueError("squeezing scan assumes V_dc = 0")
    om = cfg.Omega if omega is None else omega
    scale = cfg.G * om
    sym_abs = pat_weight(cfg, 0, om) / scale
    re_sq = pat_weight(cfg, 1, om) / scale
    emission = sym_abs - abs(om) / om  # vacuum line removed in weak order
    quad_var = (sym_abs - re_sq) / 2
    return SqueezingReport(
        z=cfg.z,
        sym_abs=sym_abs,
        re_sq=re_sq,
        emission=emission,
        quad_var=quad_var,
        bound=0.5,
        violated=(re_sq - emission) > TIE_TOL,
    )


@dataclass(frozen=True)
class Fig1Scan:
    rows: tuple
    z_lo: float
    z_hi: float


def _violation_gap(cfg: JunctionConfig, z: float) -> float:
    """emission - re_sq; negative inside the violation window."""
    r = squeezing_report(replace(cfg, z=float(z)))
    return r.emission - r.re_sq


def fig1_scan(cfg: JunctionConfig, z_grid, threads: int = 1) -> Fig1Scan:
    """Squeezing reports over a drive grid plus the violation interval.

    The interval endpoints come from bisection of emission - re_sq between
    neighboring grid points, so the grid must straddle the upper endpoint.
    """
    if cfg.T != 0 or cfg.T_d != 0:
        raise ValueError("the driven squeezing scan is a T = T_d = 0 result")
    zs = [float(z) for z in z_grid]
    if not zs:
        raise ValueError("empty z grid")
    if sorted(zs) != zs:
        raise ValueError("z grid must be ascending")

    def row(z: float) -> SqueezingReport:
        return squeezing_report(replace(cfg, z=z))

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = tuple(pool.map(row, zs))
    else:
        rows = tuple(row(z) for z in zs)

    flags = [r.violated for r in rows]
    if not any(flags):
        return Fig1Scan(rows=rows, z_lo=math.nan, z_hi=math.nan)
    first = flags.index(True)
    if first <= 1 and zs[0] == 0.0:
        # Quartic-vs-quadratic onset: violated from infinitesimal drive.
        z_lo = 0.0
    elif first == 0:
        z_lo = zs[0]
    else:
        z_lo = float(brentq(lambda z: _violation_gap(cfg, z),
                            zs[first - 1], zs[first], xtol=1e-9))
    try:
        last = next(i for i in range(first, len(flags)) if not flags[i]) - 1
    except StopIteration:
        raise ValueError("z grid does not straddle the upper violation endpoint")
    z_hi = float(brentq(lambda z: _violation_gap(cfg, z),
                        zs[last], zs[last + 1], xtol=1e-9))
    return Fig1Scan(rows=rows, z_lo=z_lo, z_hi=z_hi)
