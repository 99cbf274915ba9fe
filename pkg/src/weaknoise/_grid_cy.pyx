# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled event sweep for time-ordered weak correlators.

Same contract as _grid_py.grid_sweep; see that module for the algorithm.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport cos, sin

BACKEND = "cython"

KIND_C = 0
KIND_Q = 1


def grid_sweep(
    cnp.ndarray[cnp.float64_t, ndim=1] energies,
    cnp.ndarray[cnp.complex128_t, ndim=3] obs,
    cnp.ndarray[cnp.complex128_t, ndim=2] rho,
    cnp.ndarray[cnp.float64_t, ndim=1] ev_time,
    cnp.ndarray[cnp.int32_t, ndim=1] ev_meas,
    cnp.ndarray[cnp.uint8_t, ndim=1] ev_kind,
    cnp.ndarray[cnp.float64_t, ndim=1] ev_coeff,
):
    cdef int n = obs.shape[0]
    cdef int d = rho.shape[0]
    cdef int nsub = 1 << n
    cdef Py_ssize_t n_events = ev_time.shape[0]

    cdef cnp.ndarray[cnp.complex128_t, ndim=3] cur_arr = np.zeros(
        (nsub, d, d), dtype=np.complex128)
    cur_arr[0] = rho
    cdef cnp.ndarray[cnp.uint8_t, ndim=1] active_arr = np.zeros(nsub, dtype=np.uint8)
    active_arr[0] = 1

    cdef double complex[:, :, :] cur = cur_arr
    cdef unsigned char[:] active = active_arr
    cdef double complex[:, :, :] A = obs

    cdef cnp.ndarray[cnp.complex128_t, ndim=2] at_arr = np.empty((d, d), dtype=np.complex128)
    cdef double complex[:, :] a_t = at_arr

    cdef double[:] E = energies
    cdef double[:] times = ev_time
    cdef int[:] meas = ev_meas
    cdef unsigned char[:] kinds = ev_kind
    cdef double[:] coeffs = ev_coeff

    cdef Py_ssize_t e
    cdef int j, s, bit, kind, m, k, l
    cdef double t, coeff, phase
    cdef double complex acc, scale_c, scale_q, tr

    for e in range(n_events):
        t = times[e]
        j = meas[e]
        kind = kinds[e]
        coeff = coeffs[e]
        bit = 1 << j

        for m in range(d):
            for k in range(d):
                phase = (E[m] - E[k]) * t
                a_t[m, k] = A[j, m, k] * (cos(phase) + 1j * sin(phase))

        scale_c = 0.5 * coeff
        scale_q = -1j * coeff

        for s in range(nsub):
            if (s & bit) or not active[s]:
                continue
            # A_t @ cur[s] +/- cur[s] @ A_t, fused into the target subset.
            if kind == KIND_C:
                for m in range(d):
                    for k in range(d):
                        acc = 0
                        for l in range(d):
                            acc = acc + a_t[m, l] * cur[s, l, k] + cur[s, m, l] * a_t[l, k]
                        cur[s | bit, m, k] = cur[s | bit, m, k] + scale_c * acc
            else:
                for m in range(d):
                    for k in range(d):
                        acc = 0
                        for l in range(d):
                            acc = acc + a_t[m, l] * cur[s, l, k] - cur[s, m, l] * a_t[l, k]
                        cur[s | bit, m, k] = cur[s | bit, m, k] + scale_q * acc
            active[s | bit] = 1

    tr = 0
    for m in range(d):
        tr = tr + cur[nsub - 1, m, m]
    return complex(tr)
