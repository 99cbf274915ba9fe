"""Finite-coupling Gaussian detector model realizing the weak-record POVM.

Each measurement time t_j gets its own one-dimensional pointer with initial
wavefunction phi(x) ~ exp(-x^2) on a position grid.  The system couples to
pointer j through

    H_I(t') = eta * (delta(t_j - t') p_j + 2 f(t_j - t') x_j) A_j(t'),

discretized as a single position kick exp(-i eta A_j p_j) at t_j plus pure
phase factors exp(-2i eta f(t_j - t') dt x_j A_j) at the step midpoints t'
(the same principal-value midpoint rule as the grid correlator, so the
eta -> 0 limit of the pointer statistics reproduces weak_correlator_grid on
the identical lattice, not just in the continuum limit).  The pointer is
read projectively at the end of the window and the outcome reported as
a = x / eta, which makes the detection noise a zero-mean Gaussian of
variance 1/(4 eta^2): large, system-independent, and removed analytically.

Everything is propagated as joint pure branches Psi[s, x_1, .., x_n]
(system index times one grid axis per pointer), so memory is
dim * points^n complex amplitudes per branch of the initial mixture and
exact outcome distributions stay cheap for one or two pointers.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, replace

import numpy as np

from . import hilbert
from .hilbert import DensityMatrix, Operator
from .kernel import markovian, f_time
from .correlator import WeakCorrelatorRequest, weak_correlator_grid

NORM_TOL = 1e-10
EDGE_TOL = 1e-7
OVERFLOW_TOL = 1e-8
BRANCH_CUTOFF = 1e-14
LATTICE_TOL = 1e-9
MAX_JOINT = 50_000_000


@dataclass(frozen=True)
class DetectorGrid:
    """Pointer position lattice with the Gaussian ready state.

    The lattice is FFT-periodic: x = -L + dx*i, i < points, dx = 2L/points.
    Kicks are applied spectrally, so the ready state must vanish at the
    boundary to keep wrap-around below the overflow tolerance.
    """

    points: int = 128
    half_width: float = 6.0

    def __post_init__(self):
        if self.points < 16 or self.points % 2:
            raise ValueError("points must be an even integer >= 16")
        if self.half_width <= 0:
            raise ValueError("half_width must be > 0")
        dx = 2 * self.half_width / self.points
        x = -self.half_width + dx * np.arange(self.points)
        phi = np.exp(-x * x)
        phi = phi / math.sqrt(float(np.sum(phi * phi) * dx))
        object.__setattr__(self, "dx", dx)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "k", 2 * np.pi * np.fft.fftfreq(self.points, d=dx))
        object.__setattr__(self, "phi", phi)
        for arr in (self.x, self.k, self.phi):
            arr.setflags(write=False)
        if abs(float(np.sum(self.phi ** 2) * dx) - 1.0) > NORM_TOL:
            raise ValueError("ready state failed to normalize")
        if max(abs(self.phi[0]), abs(self.phi[-1])) >= EDGE_TOL:
            raise ValueError("ready state does not vanish at the grid boundary")

    @property
    def detection_variance(self) -> float:
        """<x^2> of the ready pointer; 1/4 for the Gaussian, to rounding."""
        return float(np.sum(self.x ** 2 * self.phi ** 2) * self.dx)


@dataclass(frozen=True)
class MeasurementPlan:
    """Finite-coupling realization of a weak correlator request.

    observables: (A_j, t_j) pairs, one pointer each, t_j on the window
    lattice.  eta is the coupling; the weak record is the eta -> 0 limit.
    """

    H: Operator
    rho0: DensityMatrix
    observables: tuple
    kern: MemoryKernel
    dt: float
    window: tuple
    eta: float
    grid: DetectorGrid = DetectorGrid()

    def __post_init__(self):
        # Reuse the grid-correlator validation wholesale; the plan is that
        # request plus a pointer per measurement.
        req = WeakCorrelatorRequest(self.H, self.rho0, self.observables,
                                    self.kern, self.dt, self.window)
        object.__setattr__(self, "observables", req.observables)
        object.__setattr__(self, "window", req.window)
        if not 0 < self.eta <= 1:
            raise ValueError("eta must be in (0, 1]")
        t_min, t_max = self.window
        span = t_max - t_min
        steps = span / self.dt
        if abs(steps - round(steps)) > LATTICE_TOL:
            raise ValueError("window length must be a whole number of steps")
        for _, tj in self.observables:
            r = (tj - t_min) / self.dt
            if abs(r - round(r)) > LATTICE_TOL:
                raise ValueError(f"measurement time {tj} is off the step lattice")
        if self.H.dim * self.grid.points ** len(self.observables) > MAX_JOINT:
            raise ValueError("joint state too large; reduce pointers or grid")

    @property
    def steps(self) -> int:
        return int(round((self.window[1] - self.window[0]) / self.dt))

    def request(self) -> WeakCorrelatorRequest:
        return WeakCorrelatorRequest(self.H, self.rho0, self.observables,
                                     self.kern, self.dt, self.window)


def _axis_phase(values: np.ndarray, axis: int, ndim: int) -> np.ndarray:
    """Reshape a (dim, points) factor to broadcast over axes (0, axis)."""
    shape = [1] * ndim
    shape[0] = values.shape[0]
    shape[axis] = values.shape[1]
    return values.reshape(shape)


class _Propagation:
    """Joint pure-branch evolution over the plan window."""

    def __init__(self, plan: MeasurementPlan):
        self.plan = plan
        grid = plan.grid
        d = plan.H.dim
        n = len(plan.observables)
        es = hilbert.eigensystem(plan.H)
        t_min, _ = plan.window

        self.obs_basis = []
        for op, tj in plan.observables:
            alpha, vec = np.linalg.eigh(op.entries)
            self.obs_basis.append((alpha, vec, tj))

        # State of the system when the window opens; rho0 is the state at
        # time zero, consistent with the Heisenberg picture of the
        # line-spectrum and grid correlators.
        phase = np.exp(-1j * es.energies * t_min)
        u_start = (es.vectors * phase) @ es.vectors.conj().T
        rho_s = u_start @ plan.rho0.entries @ u_start.conj().T
        pops, kets = np.linalg.eigh(rho_s)
        self.u_half = (es.vectors * np.exp(-1j * es.energies * plan.dt / 2)) @ es.vectors.conj().T
        self.u_total = (es.vectors * np.exp(-1j * es.energies * (plan.window[1] - t_min))) @ es.vectors.conj().T

        self.branches = []
        for p, ket in zip(pops, kets.T):
            if p < BRANCH_CUTOFF:
                continue
            psi = math.sqrt(float(p)) * ket.astype(np.complex128)
            for _ in range(n):
                psi = np.multiply.outer(psi, grid.phi.astype(np.complex128))
            self.branches.append(psi)
        assert self.branches, "initial state has no populated branches"
        self.ndim = 1 + n

        kick_steps = {}
        for j, (_, tj) in enumerate(plan.observables):
            kick_steps.setdefault(int(round((tj - t_min) / plan.dt)), []).append(j)
        self.kick_steps = kick_steps

    def _to_obs(self, psi, j):
        _, vec, _ = self.obs_basis[j]
        return np.tensordot(vec.conj().T, psi, axes=(1, 0))

    def _from_obs(self, psi, j):
        _, vec, _ = self.obs_basis[j]
        return np.tensordot(vec, psi, axes=(1, 0))

    def _kick(self, psi, j):
        plan, grid = self.plan, self.plan.grid
        alpha, _, _ = self.obs_basis[j]
        axis = 1 + j
        psi = self._to_obs(psi, j)
        spec = np.fft.fft(psi, axis=axis)
        shift = np.exp(-1j * plan.eta * np.multiply.outer(alpha, grid.k))
        spec *= _axis_phase(shift, axis, self.ndim)
        return self._from_obs(np.fft.ifft(spec, axis=axis), j)

    def _memory_phase(self, psi, j, coef):
        grid = self.plan.grid
        alpha, _, _ = self.obs_basis[j]
        axis = 1 + j
        psi = self._to_obs(psi, j)
        phase = np.exp(-1j * coef * np.multiply.outer(alpha, grid.x))
        psi = psi * _axis_phase(phase, axis, self.ndim)
        return self._from_obs(psi, j)

    def run(self):
        plan = self.plan
        t_min, _ = plan.window
        markov = plan.kern.variant == "markovian"
        out = []
        for psi in self.branches:
            if 0 in self.kick_steps:
                for j in self.kick_steps[0]:
                    psi = self._kick(psi, j)
            for step in range(plan.steps):
                psi = np.tensordot(self.u_half, psi, axes=(1, 0))
                if not markov:
                    tm = t_min + (step + 0.5) * plan.dt
                    for j, (_, _, tj) in enumerate(self.obs_basis):
                        coef = 2 * plan.eta * f_time(plan.kern, tj - tm) * plan.dt
                        psi = self._memory_phase(psi, j, coef)
                psi = np.tensordot(self.u_half, psi, axes=(1, 0))
                for j in self.kick_steps.get(step + 1, ()):
                    psi = self._kick(psi, j)
            out.append(psi)
        self._check_overflow(out)
        return out

    def _check_overflow(self, branches):
        n = self.ndim - 1
        total = sum(float(np.sum(np.abs(b) ** 2)) for b in branches)
        for axis in range(1, 1 + n):
            for edge in (0, -1):
                mass = sum(float(np.sum(np.abs(np.take(b, edge, axis=axis)) ** 2))
                           for b in branches)
                if mass > OVERFLOW_TOL * total:
                    raise RuntimeError("detector grid overflow: wavepacket reached the boundary")


@dataclass(frozen=True)
class JointOutcomes:
    """Exact outcome statistics of one propagated plan.

    a_axis: outcome values x/eta per pointer (same lattice for all);
    mass[i_1, .., i_n]: Born probability of the outcome cell; masses sum
    to one up to truncation leakage.
    """

    a_axis: np.ndarray
    cell_width: float
    mass: np.ndarray
    eta: float

    def moment(self, exponents) -> float:
        out = self.mass
        for axis, e in enumerate(exponents):
            if e:
                shape = [1] * out.ndim
                shape[axis] = self.a_axis.size
                out = out * (self.a_axis.reshape(shape) ** e)
        return float(np.sum(out))


def joint_outcomes(plan: MeasurementPlan) -> JointOutcomes:
    """Propagate the plan and integrate out everything but the pointers."""
    prop = _Propagation(plan)
    n = len(plan.observables)
    mass = None
    for psi in prop.run():
        m = np.sum(np.abs(psi) ** 2, axis=0)
        mass = m if mass is None else mass + m
    mass *= plan.grid.dx ** n
    return JointOutcomes(a_axis=plan.grid.x / plan.eta,
                         cell_width=plan.grid.dx / plan.eta,
                         mass=mass, eta=plan.eta)


def completeness_defect(plan: MeasurementPlan) -> float:
    """|sum of outcome masses - 1|; POVM completeness on the grid."""
    return abs(float(np.sum(joint_outcomes(plan).mass)) - 1.0)


def kraus_apply(plan: MeasurementPlan, outcomes) -> tuple:
    """Unnormalized post-measurement system state for given outcomes.

    Outcomes are snapped to the nearest grid cell.  Returns (sigma, density)
    where density is the joint outcome density in the a variables and
    trace(sigma) = density, so integrating the density over all cells
    gives 1 (completeness).
    """
    outcomes = np.atleast_1d(np.asarray(outcomes, dtype=np.float64))
    n = len(plan.observables)
    if outcomes.shape != (n,):
        raise ValueError(f"expected {n} outcomes")
    grid = plan.grid
    idx = []
    for a in outcomes:
        x = a * plan.eta
        if not grid.x[0] <= x <= grid.x[-1]:
            raise ValueError(f"outcome {a} maps off the pointer grid")
        idx.append(int(np.argmin(np.abs(grid.x - x))))
    prop = _Propagation(plan)
    d = plan.H.dim
    sigma = np.zeros((d, d), dtype=np.complex128)
    for psi in prop.run():
        vec = psi[(slice(None), *idx)]
        sigma += np.outer(vec, vec.conj())
    sigma *= plan.eta ** n
    return sigma, float(np.trace(sigma).real)


def weak_reference(plan: MeasurementPlan, pair=None) -> float:
    """Weak-limit value on the identical lattice, from the grid sweep.

    This is the eta -> 0 target of the finite-coupling record: same window,
    same dt, same midpoint kernel rule, so discretization bias cancels in
    the comparison and what remains is the pure coupling bias.
    """
    if pair is None:
        req = plan.request()
    else:
        j, k = pair
        obs = (plan.observables[j], plan.observables[k])
        req = WeakCorrelatorRequest(plan.H, plan.rho0, obs, plan.kern,
                                    plan.dt, plan.window)
    val = weak_correlator_grid(req)
    if abs(val.imag) > 1e-9 * max(1.0, abs(val.real)):
        raise RuntimeError(f"weak reference came out complex: {val!r}")
    return float(val.real)


def finite_eta_correlator(plan: MeasurementPlan, pair, samples: int = 0,
                          seed: int = 0, tol: float | None = None) -> tuple:
    """<a_j a_k> at finite coupling, detection noise removed.

    samples = 0 integrates the exact outcome distribution (no Monte Carlo
    error); samples >= 1e4 draws that distribution multinomially.  For the
    autocorrelation (j == k) the ready-pointer variance <x^2>/eta^2 is
    subtracted; cross-correlations need no subtraction because the two
    pointers' noises are independent.  Returns (estimate, stderr).
    """
    j, k = pair
    n = len(plan.observables)
    if not (0 <= j < n and 0 <= k < n):
        raise ValueError("pair indexes a missing pointer")
    if samples and samples < 10_000:
        raise ValueError("Monte Carlo mode needs samples >= 1e4")
    dist = joint_outcomes(plan)
    exponents = [0] * n
    exponents[j] += 1
    exponents[k] += 1
    offset = dist.moment([0] * n) * plan.grid.detection_variance / plan.eta ** 2 if j == k else 0.0

    if samples == 0:
        est = dist.moment(exponents) - offset
        return est, 0.0

    rng = np.random.default_rng(seed)
    p = dist.mass.ravel()
    scale = float(np.sum(p))
    counts = rng.multinomial(samples, p / scale)
    values = np.ones_like(dist.mass)
    for axis, e in enumerate(exponents):
        if e:
            shape = [1] * dist.mass.ndim
            shape[axis] = dist.a_axis.size
            values = values * (dist.a_axis.reshape(shape) ** e)
    v = values.ravel()
    mean = float(np.dot(counts, v)) / samples
    second = float(np.dot(counts, v * v)) / samples
    stderr = math.sqrt(max(second - mean * mean, 0.0) / samples)
    est = mean * scale - offset
    if tol is not None and stderr > tol:
        raise RuntimeError(f"undersampled: stderr {stderr:.3e} > tol {tol:.3e}")
    return est, stderr


def sample_outcomes(plan: MeasurementPlan, samples: int, seed: int = 0,
                    jitter: bool = True) -> np.ndarray:
    """Draw outcome tuples from the exact joint distribution.

    With jitter, outcomes are spread uniformly inside their cell so that
    empirical distribution tests see a continuous variable; moments should
    instead use finite_eta_correlator, which integrates the cells exactly.
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    dist = joint_outcomes(plan)
    n = dist.mass.ndim
    rng = np.random.default_rng(seed)
    p = dist.mass.ravel()
    flat = rng.choice(p.size, size=samples, p=p / np.sum(p))
    idx = np.column_stack(np.unravel_index(flat, dist.mass.shape))
    out = dist.a_axis[idx]
    if jitter:
        out = out + rng.uniform(-0.5, 0.5, size=out.shape) * dist.cell_width
    return out.reshape(samples, n)


@dataclass(frozen=True)
class TrajectoryRecord:
    """One sampled measurement record with its Born-rule bookkeeping."""

    seed: int
    outcomes: tuple
    weight: float
    probability: float
    state_hash: str


def sample_records(plan: MeasurementPlan, samples: int, seed: int = 0) -> list:
    """Unweighted Born samples as audit records (weights sum to one).

    The joint state is propagated once; conditional post-states for the
    sampled cells are read off the stored branch vectors.
    """
    n = len(plan.observables)
    branches = _Propagation(plan).run()
    mass = None
    for psi in branches:
        m = np.sum(np.abs(psi) ** 2, axis=0)
        mass = m if mass is None else mass + m
    mass *= plan.grid.dx ** n
    a_axis = plan.grid.x / plan.eta

    rng = np.random.default_rng(seed)
    p = mass.ravel()
    flat = rng.choice(p.size, size=samples, p=p / np.sum(p))
    records = []
    cache = {}
    for cell in flat:
        if cell not in cache:
            idx = np.unravel_index(int(cell), mass.shape)
            outcomes = tuple(float(a_axis[i]) for i in idx)
            sigma = np.zeros((plan.H.dim, plan.H.dim), dtype=np.complex128)
            for psi in branches:
                vec = psi[(slice(None), *idx)]
                sigma += np.outer(vec, vec.conj())
            density = float(np.trace(sigma).real)
            post = sigma / max(density, 1e-300)
            digest = hashlib.sha256(np.round(post, 12).tobytes()).hexdigest()[:16]
            cache[cell] = (outcomes, float(p[cell]), digest)
        outcomes, prob, digest = cache[cell]
        records.append(TrajectoryRecord(seed=seed, outcomes=outcomes,
                                        weight=1.0 / samples,
                                        probability=prob, state_hash=digest))
    return records


@dataclass(frozen=True)
class ExpansionReport:
    """Residuals of the first-order weak expansion of the Kraus map."""

    eta: float
    residual: float
    q_residual: float


def expansion_check(plan: MeasurementPlan) -> ExpansionReport:
    """Compare the propagated Kraus map against its first-order expansion.

    For a single pointer with outcome a the normalized conditional map is

        K rho K^dag / |k(a)|^2 = rho + 4 eta^2 a A^c(t_j) rho
                                + sum_mid 2 eta^2 a f(t_j - t') dt A^q(t') rho
                                + O(eta^2 A^2),

    the discretized form of the continuum expansion in the record a(t).
    The residual is the detector-density-weighted integral of the Frobenius
    norm of the difference (the expansion is an in-distribution statement;
    a sup over far-tail outcomes with eta*x = O(1) would test nothing), and
    the O(eta^2 A^2) backaction makes it shrink by 4 when eta is halved.
    q_residual isolates the memory-phase channel and is identically zero
    for a Markovian kernel.
    """
    if len(plan.observables) != 1:
        raise ValueError("expansion check is defined for a single pointer")
    grid = plan.grid
    eta = plan.eta
    (op, tj), = plan.observables
    es = hilbert.eigensystem(plan.H)
    t_min, t_max = plan.window

    phase0 = np.exp(-1j * es.energies * t_min)
    u_start = (es.vectors * phase0) @ es.vectors.conj().T
    rho_s = u_start @ plan.rho0.entries @ u_start.conj().T

    def conditional(p: MeasurementPlan):
        prop = _Propagation(p)
        branches = prop.run()
        u_tot = prop.u_total
        out = np.empty((grid.points, p.H.dim, p.H.dim), dtype=np.complex128)
        for i in range(grid.points):
            sigma = np.zeros((p.H.dim, p.H.dim), dtype=np.complex128)
            for psi in branches:
                vec = psi[:, i]
                sigma += np.outer(vec, vec.conj())
            out[i] = u_tot.conj().T @ sigma @ u_tot
        return out

    full = conditional(plan)

    # Superoperator pieces in the interaction picture anchored at the
    # window opening, matching the pulled-back conditional states.
    a_c = np.empty_like(full)
    a_q_sum = np.zeros_like(full)
    ah_j = hilbert.evolve_heisenberg(op, plan.H, tj - t_min).entries
    for i, x in enumerate(grid.x):
        a = x / eta
        a_c[i] = 4 * eta ** 2 * a * hilbert.apply_c(ah_j, rho_s)
    if plan.kern.variant != "markovian":
        for step in range(plan.steps):
            tm = t_min + (step + 0.5) * plan.dt
            coef = 2 * eta ** 2 * f_time(plan.kern, tj - tm) * plan.dt
            ah = hilbert.evolve_heisenberg(op, plan.H, tm - t_min).entries
            q = hilbert.apply_q(ah, rho_s)
            for i, x in enumerate(grid.x):
                a_q_sum[i] += coef * (x / eta) * q

    density = grid.phi ** 2
    residual = 0.0
    for i in range(grid.points):
        rhs = density[i] * (rho_s + a_c[i] + a_q_sum[i])
        residual += float(np.linalg.norm(full[i] - rhs)) * grid.dx

    if plan.kern.variant == "markovian":
        q_residual = 0.0
    else:
        stripped = conditional(replace(plan, kern=markovian()))
        q_residual = 0.0
        for i in range(grid.points):
            diff = full[i] - stripped[i] - density[i] * a_q_sum[i]
            q_residual += float(np.linalg.norm(diff)) * grid.dx
    return ExpansionReport(eta=eta, residual=residual, q_residual=q_residual)
