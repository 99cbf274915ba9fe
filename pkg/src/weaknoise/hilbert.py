"""Finite-dimensional operators, states, and measurement superoperators.

Everything downstream works in units hbar = k_B = 1, with frequencies angular
and temperatures in energy units.  Operators are dense complex matrices; the
dimensions of interest here (two-level systems, truncated oscillators) never
exceed a few tens, so eigendecomposition is the workhorse instead of matrix
exponentials.

The four superoperators attached to an observable A are the building blocks
of every weak-measurement formula in this package:

    apply_c(A, X)     = {A, X}/2      classical (symmetrized) readout
    apply_q(A, X)     = [A, X]/i      quantum backaction channel
    apply_plus(A, X)  = A X           left multiplication
    apply_minus(A, X) = X A           right multiplication

so that apply_c = (apply_plus + apply_minus)/2 and
apply_q = (apply_plus - apply_minus)/i.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

HERMITICITY_TOL = 1e-12
TRACE_TOL = 1e-12
POSITIVITY_TOL = 1e-10


def _as_matrix(entries) -> np.ndarray:
    m = np.asarray(entries, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] < 1:
        raise ValueError(f"expected a square matrix, got shape {m.shape}")
    return m


def _max_abs(m: np.ndarray) -> float:
    return float(np.max(np.abs(m))) if m.size else 0.0


@dataclass(frozen=True)
class Operator:
    """Dense operator; hermitian=True validates and symmetrizes the entries.

    Symmetrization is only applied when the defect is within HERMITICITY_TOL;
    anything larger is rejected rather than silently repaired.
    """

    entries: np.ndarray
    hermitian: bool = False

    def __post_init__(self):
        m = _as_matrix(self.entries)
        if self.hermitian:
            defect = _max_abs(m - m.conj().T)
            scale = max(1.0, _max_abs(m))
            if defect > HERMITICITY_TOL * scale:
                raise ValueError(
                    f"operator tagged hermitian but max |A - A^dag| = {defect:.3e}"
                )
            m = (m + m.conj().T) / 2
        m.setflags(write=False)
        object.__setattr__(self, "entries", m)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]


@dataclass(frozen=True)
class DensityMatrix:
    """State matrix: hermitian, unit trace, nonnegative spectrum."""

    entries: np.ndarray

    def __post_init__(self):
        m = _as_matrix(self.entries)
        defect = _max_abs(m - m.conj().T)
        if defect > HERMITICITY_TOL * max(1.0, _max_abs(m)):
            raise ValueError(f"density matrix not hermitian: defect {defect:.3e}")
        m = (m + m.conj().T) / 2
        tr = np.trace(m).real
        if abs(tr - 1.0) > TRACE_TOL:
            raise ValueError(f"density matrix trace {tr!r} != 1")
        lo = float(np.linalg.eigvalsh(m).min())
        if lo < -POSITIVITY_TOL:
            raise ValueError(f"density matrix has eigenvalue {lo:.3e} < 0")
        m.setflags(write=False)
        object.__setattr__(self, "entries", m)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]


@dataclass(frozen=True)
class EigenSystem:
    """Spectral data of a hermitian operator: energies ascending, vectors in columns."""

    energies: np.ndarray
    vectors: np.ndarray

    def to_eigenbasis(self, m: np.ndarray) -> np.ndarray:
        return self.vectors.conj().T @ m @ self.vectors

    def from_eigenbasis(self, m: np.ndarray) -> np.ndarray:
        return self.vectors @ m @ self.vectors.conj().T


def _require_physics_dim(*ops):
    for op in ops:
        d = op.entries.shape[0] if hasattr(op, "entries") else op.shape[0]
        if d < 2:
            raise ValueError("physics operations need dim >= 2")


def eigensystem(H: Operator) -> EigenSystem:
    if not H.hermitian:
        raise ValueError("eigensystem needs a hermitian-tagged operator")
    energies, vectors = np.linalg.eigh(H.entries)
    return EigenSystem(energies=energies, vectors=vectors)


def evolve_heisenberg(A: Operator, H: Operator, t: float) -> Operator:
    """A(t) = exp(iHt) A exp(-iHt), computed through the eigenbasis of H."""
    _require_physics_dim(A, H)
    if A.dim != H.dim:
        raise ValueError("dimension mismatch")
    es = eigensystem(H)
    a = es.to_eigenbasis(A.entries)
    phases = np.exp(1j * es.energies * t)
    a = (phases[:, None] * a) * phases.conj()[None, :]
    return Operator(es.from_eigenbasis(a), hermitian=A.hermitian)


def thermal_state(H: Operator, T: float) -> DensityMatrix:
    """Gibbs state at temperature T >= 0; T = 0 gives the ground-space projector.

    Populations are computed relative to the ground energy so large spectra do
    not underflow.  Degeneracy at T = 0 is resolved by even weight over all
    levels within 1e-10 * max(1, spread) of the bottom.
    """
    _require_physics_dim(H)
    if T < 0:
        raise ValueError("temperature must be >= 0")
    es = eigensystem(H)
    e = es.energies - es.energies[0]
    if T == 0:
        spread = max(1.0, float(e[-1]))
        p = (e <= 1e-10 * spread).astype(float)
    else:
        p = np.exp(-e / T)
    p /= p.sum()
    return DensityMatrix(es.from_eigenbasis(np.diag(p.astype(complex))))


def expectation(rho: DensityMatrix, A: Operator) -> complex:
    return complex(np.trace(rho.entries @ A.entries))


# Measurement superoperators.  These act on plain matrices: callers that loop
# over many applications should not pay the validation cost per call.

def apply_plus(A: np.ndarray, X: np.ndarray) -> np.ndarray:
    return A @ X


def apply_minus(A: np.ndarray, X: np.ndarray) -> np.ndarray:
    return X @ A


def apply_c(A: np.ndarray, X: np.ndarray) -> np.ndarray:
    return (A @ X + X @ A) / 2


def apply_q(A: np.ndarray, X: np.ndarray) -> np.ndarray:
    return -1j * (A @ X - X @ A)


# Standard two-level operators.

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)


def sigma_x() -> Operator:
    return Operator(SIGMA_X, hermitian=True)


def sigma_y() -> Operator:
    return Operator(SIGMA_Y, hermitian=True)


def sigma_z() -> Operator:
    return Operator(SIGMA_Z, hermitian=True)


def identity(dim: int) -> Operator:
    return Operator(np.eye(dim, dtype=complex), hermitian=True)


def tls_hamiltonian(omega: float) -> Operator:
    """H = omega sigma_z / 2."""
    return Operator(omega * SIGMA_Z / 2, hermitian=True)


def tls_thermal(omega: float, T: float) -> DensityMatrix:
    """Thermal two-level state (1 - sigma_z tanh(omega/2T))/2 for H = omega sigma_z/2."""
    return thermal_state(tls_hamiltonian(omega), T)


# JSON round-trip form used by the CLI: row-major nested lists of [re, im].

def operator_to_json(A: Operator) -> dict:
    return {
        "dim": A.dim,
        "hermitian": A.hermitian,
        "entries": [[[float(z.real), float(z.imag)] for z in row] for row in A.entries],
    }


def operator_from_json(obj: dict) -> Operator:
    unknown = set(obj) - {"dim", "hermitian", "entries"}
    if unknown:
        raise ValueError(f"unknown operator keys: {sorted(unknown)}")
    rows = obj["entries"]
    m = np.array([[complex(re, im) for re, im in row] for row in rows], dtype=complex)
    if m.shape[0] != obj["dim"]:
        raise ValueError("dim field disagrees with entries")
    return Operator(m, hermitian=bool(obj.get("hermitian", False)))
