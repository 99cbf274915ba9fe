"""Truncated harmonic oscillator: quasiprobability moments and weak moments.

Conventions: a = (x + ip)/sqrt(2) lowering, a_dag = (x - ip)/sqrt(2), so
[x, p] = i and [a, a_dag] = 1 away from the truncation edge.  Free evolution
at frequency Omega is the classical rotation a(t) = a e^{-i Omega t}; the
two-time machinery below uses that rotation in closed form rather than a
truncated Hamiltonian, so the only truncation effects live in the states.

The point of this module is the quasiprobability dictionary for weak
measurements of a single mode read out through an equilibrium zero
temperature kernel, where f(Omega) = +/- i collapses the per-letter
superoperator algebra:

    sign +1:  a-letters become left factors, a_dag-letters right factors,
              so every word averages to Tr[a^n rho a_dag^k]: moments of the
              Glauber-Sudarshan P function (normal order).
    sign -1:  the opposite assignment gives Tr[rho a^n a_dag^k]: moments of
              the Husimi-Kano Q function (antinormal order).

A memoryless detector (f = 0) symmetrizes instead and lands on Wigner-Weyl
moments.  weak_moment builds the letter superoperators literally and
composes them, so those identities stay test subjects instead of shortcuts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from .hilbert import DensityMatrix, Operator, apply_c, apply_q
from .kernel import MemoryKernel, f_omega

TAIL_GUARD = 9.0  # |beta|^2 and e^{2|r|} must stay below dim/TAIL_GUARD


@dataclass(frozen=True)
class FockSpace:
    """Number-basis ladder and quadrature operators at truncation dim >= 8."""

    dim: int

    def __post_init__(self):
        if self.dim < 8:
            raise ValueError("Fock truncation below 8 levels is not supported")

    @property
    def lower(self) -> np.ndarray:
        m = np.zeros((self.dim, self.dim), dtype=complex)
        n = np.arange(1, self.dim)
        m[n - 1, n] = np.sqrt(n)
        return m

    @property
    def a(self) -> Operator:
        return Operator(self.lower)

    @property
    def a_dag(self) -> Operator:
        return Operator(self.lower.conj().T)

    @property
    def x(self) -> Operator:
        m = self.lower
        return Operator((m + m.conj().T) / math.sqrt(2), hermitian=True)

    @property
    def p(self) -> Operator:
        m = self.lower
        return Operator((m - m.conj().T) / (1j * math.sqrt(2)), hermitian=True)


def coherent_state(beta: complex, dim: int) -> DensityMatrix:
    """Projector onto the truncated coherent state |beta>, renormalized."""
    if abs(beta) ** 2 > dim / TAIL_GUARD:
        raise ValueError(f"|beta|^2 = {abs(beta)**2:.3f} too large for dim {dim}")
    n = np.arange(dim)
    log_fact = np.concatenate(([0.0], np.cumsum(np.log(np.arange(1, dim)))))
    if beta == 0:
        amps = np.zeros(dim, dtype=complex)
        amps[0] = 1.0
    else:
        amps = np.exp(n * np.log(complex(beta)) - abs(beta) ** 2 / 2 - log_fact / 2)
    amps /= np.linalg.norm(amps)
    return DensityMatrix(np.outer(amps, amps.conj()))


def squeezed_vacuum(r: float, dim: int) -> DensityMatrix:
    """exp[r(a^2 - a_dag^2)/2] |0>, squeezing x for r > 0."""
    # factor 8, not TAIL_GUARD: r = 1 at dim 64 must construct (amplitudes
    # fall like tanh(r)^n, so low-order moments are still converged there)
    if math.exp(2 * abs(r)) > dim / 8.0:
        raise ValueError(f"squeezing r = {r} too large for dim {dim}")
    a = FockSpace(dim).lower
    gen = (r / 2) * (a @ a - a.conj().T @ a.conj().T)
    psi = expm(gen)[:, 0]
    psi /= np.linalg.norm(psi)
    return DensityMatrix(np.outer(psi, psi.conj()))


def thermal_osc(nbar: float, dim: int) -> DensityMatrix:
    """Geometric number populations with mean nbar, renormalized."""
    if nbar < 0:
        raise ValueError("nbar must be >= 0")
    if nbar == 0:
        p = np.zeros(dim)
        p[0] = 1.0
    else:
        q = nbar / (1.0 + nbar)
        p = q ** np.arange(dim)
    p = p / p.sum()
    return DensityMatrix(np.diag(p.astype(complex)))


def _check_word_budget(dim: int, n: int, k: int):
    if n + k > dim / 4:
        raise ValueError(f"moment order n+k = {n + k} exceeds dim/4 = {dim / 4}")


def quasi_moment(space: FockSpace, rho: DensityMatrix, n: int, k: int,
                 ordering: str) -> complex:
    """<alpha^n alpha*^k> under the P, Q, or Wigner quasiprobability."""
    if n < 0 or k < 0:
        raise ValueError("moment orders must be >= 0")
    _check_word_budget(space.dim, n, k)
    if rho.dim != space.dim:
        raise ValueError("dimension mismatch")
    a = space.lower
    ad = a.conj().T
    r = rho.entries
    if ordering == "P":
        an = np.linalg.matrix_power(a, n)
        adk = np.linalg.matrix_power(ad, k)
        return complex(np.trace(an @ r @ adk))
    if ordering == "Q":
        an = np.linalg.matrix_power(a, n)
        adk = np.linalg.matrix_power(ad, k)
        return complex(np.trace(r @ an @ adk))
    if ordering == "wigner":
        # Sum over all distinct interleavings of n a's and k a_dag's by the
        # first-letter recursion M(i,j) = a M(i-1,j) + a_dag M(i,j-1).
        eye = np.eye(space.dim, dtype=complex)
        table: dict[tuple, np.ndarray] = {(0, 0): eye}
        for i in range(n + 1):
            for j in range(k + 1):
                if i == j == 0:
                    continue
                m = np.zeros_like(eye)
                if i > 0:
                    m += a @ table[(i - 1, j)]
                if j > 0:
                    m += ad @ table[(i, j - 1)]
                table[(i, j)] = m
        count = math.comb(n + k, n)
        return complex(np.trace(r @ table[(n, k)])) / count
    raise ValueError(f"unknown ordering {ordering!r}; use 'P', 'Q', or 'wigner'")


LOWER_TOKENS = {"a"}
RAISE_TOKENS = {"a+", "a^+", "a†", "ad"}


def parse_word(word) -> tuple:
    """Normalize a moment word to a tuple of 'a'/'a+' tokens.

    Accepts an iterable of tokens or a whitespace-separated string, e.g.
    "a a+ a" for the lowering-raising-lowering word.
    """
    tokens = word.split() if isinstance(word, str) else list(word)
    out = []
    for tok in tokens:
        if tok in LOWER_TOKENS:
            out.append("a")
        elif tok in RAISE_TOKENS:
            out.append("a+")
        else:
            raise ValueError(f"unknown word letter {tok!r}")
    if not out:
        raise ValueError("empty moment word")
    return tuple(out)


def weak_moment(space: FockSpace, rho: DensityMatrix, word,
                kernel_sign: int = 1) -> complex:
    """Equal-time weak moment of a ladder word under the zero-Td kernel.

    Each letter contributes its classical superoperator plus the backaction
    term with f(Omega) = kernel_sign * i; letters are applied rightmost
    first.  The composition is provably order-independent, which the tests
    check rather than assume.
    """
    if kernel_sign not in (1, -1):
        raise ValueError("kernel_sign must be +1 or -1")
    letters = parse_word(word)
    _check_word_budget(space.dim, sum(1 for l in letters if l == "a"),
                       sum(1 for l in letters if l == "a+"))
    if rho.dim != space.dim:
        raise ValueError("dimension mismatch")
    a = space.lower
    ad = a.conj().T
    state = rho.entries.copy()
    for letter in reversed(letters):
        # a-type: A_c + (s i/2) A_q;  a_dag-type: A_c - (s i/2) A_q.
        op, rel_sign = (a, 1.0) if letter == "a" else (ad, -1.0)
        state = apply_c(op, state) + (kernel_sign * rel_sign * 0.5j) * apply_q(op, state)
    return complex(np.trace(state))


def _linear_combo(space: FockSpace, coeffs) -> complex:
    cx, cp = (float(c) for c in coeffs)
    return complex(cx, -cp) / math.sqrt(2)  # A = mu a + conj(mu) a_dag


def _weak_apply_rotating(space: FockSpace, mu: complex, t: float, Omega: float,
                         kern: MemoryKernel, X: np.ndarray) -> np.ndarray:
    """One application of the weak superoperator of A(t) = mu e^{-iwt} a + h.c.

    The backaction convolution collapses to the single frequency Omega
    because the rotated observable is monochromatic.
    """
    a = space.lower
    ad = a.conj().T
    phase = np.exp(-1j * Omega * t)
    a_t = mu * phase * a + np.conj(mu * phase) * ad
    out = apply_c(a_t, X)
    f_om = f_omega(kern, Omega)
    if f_om != 0:
        out = out + (f_om / 2) * (
            mu * phase * apply_q(a, X) - np.conj(mu * phase) * apply_q(ad, X)
        )
    return out


def weak_pair_correlator(space: FockSpace, A_spec, B_spec, t: float, s: float,
                         kern: MemoryKernel, rho: DensityMatrix,
                         Omega: float = 1.0, time_ordered: bool = True) -> complex:
    """<a_A(t) a_B(s)>_w for observables linear in x, p, rotating at Omega.

    A_spec and B_spec are (x-coefficient, p-coefficient) pairs.  With
    time_ordered=False the B factor is applied first regardless of times,
    which is how the order-irrelevance identity gets probed.
    """
    mu_a = _linear_combo(space, A_spec)
    mu_b = _linear_combo(space, B_spec)
    if rho.dim != space.dim:
        raise ValueError("dimension mismatch")
    if Omega <= 0:
        raise ValueError("Omega must be > 0")
    first, second = (mu_b, s), (mu_a, t)
    if time_ordered and t < s:
        first, second = (mu_a, t), (mu_b, s)
    state = _weak_apply_rotating(space, first[0], first[1], Omega, kern, rho.entries)
    state = _weak_apply_rotating(space, second[0], second[1], Omega, kern, state)
    return complex(np.trace(state))


def time_order_invariance(space: FockSpace, A_spec, B_spec, t: float, s: float,
                          kern: MemoryKernel, rho: DensityMatrix,
                          Omega: float = 1.0) -> float:
    """|time-ordered minus fixed-order| two-time weak correlator; zero in exact math."""
    for spec in (A_spec, B_spec):
        if len(tuple(spec)) != 2:
            raise ValueError("observables must be (x, p) coefficient pairs")
    ordered = weak_pair_correlator(space, A_spec, B_spec, t, s, kern, rho,
                                   Omega, time_ordered=True)
    fixed = weak_pair_correlator(space, A_spec, B_spec, t, s, kern, rho,
                                 Omega, time_ordered=False)
    return abs(ordered - fixed)


def x_variance(space: FockSpace, rho: DensityMatrix) -> float:
    """Operator average <x^2> (mean not subtracted)."""
    x = space.x.entries
    return float(np.trace(rho.entries @ x @ x).real)


def x_variance_p_ordered(space: FockSpace, rho: DensityMatrix) -> float:
    """<x^2> under the P function: (P20 + P02 + 2 P11)/2 = <x^2> - 1/2."""
    p20 = quasi_moment(space, rho, 2, 0, "P")
    p02 = quasi_moment(space, rho, 0, 2, "P")
    p11 = quasi_moment(space, rho, 1, 1, "P")
    return float(((p20 + p02 + 2 * p11) / 2).real)
