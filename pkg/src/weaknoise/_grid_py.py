"""Pure numpy event sweep for time-ordered weak correlators.

Reference implementation of the kernel also provided compiled in _grid_cy.
Both walk the same sorted event list and must produce identical sums; the
compiled one just removes the per-event Python overhead.

Events live in the eigenbasis of the Hamiltonian.  Event e with time t,
measurement index j, kind k and coefficient c updates every subset S of
measurements that does not yet contain j:

    cur[S | {j}] += c * G_k(A_j(t)) cur[S]

where G_c(A) X = {A, X}/2 and G_q(A) X = [A, X]/i, and
A_j(t) = exp(iHt) A_j exp(-iHt) enters as an elementwise phase twist of the
eigenbasis matrix.  Processing events in ascending time makes every term of
the accumulated sum time-ordered; the full-subset accumulator then holds the
entire product-of-sums expansion and its trace is the correlator.
"""

from __future__ import annotations

import numpy as np

BACKEND = "python"

KIND_C = 0
KIND_Q = 1


def grid_sweep(
    energies: np.ndarray,
    obs: np.ndarray,
    rho: np.ndarray,
    ev_time: np.ndarray,
    ev_meas: np.ndarray,
    ev_kind: np.ndarray,
    ev_coeff: np.ndarray,
) -> complex:
    n = obs.shape[0]
    d = rho.shape[0]
    gaps = energies[:, None] - energies[None, :]
    cur = np.zeros((1 << n, d, d), dtype=complex)
    cur[0] = rho
    active = np.zeros(1 << n, dtype=bool)
    active[0] = True

    for t, j, kind, coeff in zip(ev_time, ev_meas, ev_kind, ev_coeff):
        bit = 1 << int(j)
        a_t = obs[int(j)] * np.exp(1j * t * gaps)
        # Reads touch only subsets without j, writes only subsets with j,
        # so the update order within one event cannot feed back.
        for s in range(1 << n):
            if (s & bit) or not active[s]:
                continue
            left = a_t @ cur[s]
            right = cur[s] @ a_t
            if kind == KIND_C:
                cur[s | bit] += (0.5 * coeff) * (left + right)
            else:
                cur[s | bit] += (-1j * coeff) * (left - right)
            active[s | bit] = True

    return complex(np.trace(cur[(1 << n) - 1]))
