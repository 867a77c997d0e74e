# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled forward-pass kernel.

Computes the normalized forward tables alpha[t, s, r] over full states
(state s, remaining duration r) given slice variables u:

    alpha_t(s, r) propto p(y_t | s) * [ countdown + boundary ]
    countdown = I(u_t < 1) * pbeta(u_t) * alpha_{t-1}(s, r+1)
    boundary  = sum_{s'} I(u_t < pi[s', s] * F_s(r))
                         * pbeta(u_t / (pi[s', s] * F_s(r))) * alpha_{t-1}(s', 0)

with pbeta the Beta(1/temp, temp) density of the slice ratio (identically 1
at temperature 1). Time 0 uses the initial-state distribution in place of a
transition row. Everything runs through logs of u, pi and the duration pmfs,
so structural zeros are exact and tail products cannot underflow.

Per-state bounds keep the loops off dead columns: ``r_start``/``r_stop``
delimit the durations any fresh draw could take at the loosest slice (mass
drifts below r_start by countdown, never above r_stop), and ``r_break`` is
the index past which the pmf is known non-increasing, allowing an early exit
once an indicator fails.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport exp, log1p, INFINITY

from .errors import ConsistencyError

BACKEND_NAME = "cython"

cdef double LOG_TINY = -690.77552789821368  # log(1e-300)


cdef inline double pbeta_w(double lx, double au, double bu, double lbn) noexcept nogil:
    if au == 1.0 and bu == 1.0:
        return 1.0
    if lx < LOG_TINY:
        lx = LOG_TINY
    elif lx > -1e-16:
        lx = -1e-16
    return exp((au - 1.0) * lx + (bu - 1.0) * log1p(-exp(lx)) - lbn)


def forward(double[:, ::1] log_emit, double[:, ::1] log_dur, double[:, ::1] log_pi,
            double[::1] log_init, double[::1] log_u, double au, double bu, double lbn,
            long[::1] r_break, long[::1] r_start, long[::1] r_stop):
    cdef Py_ssize_t T = log_emit.shape[0]
    cdef Py_ssize_t M = log_emit.shape[1]
    cdef Py_ssize_t R1 = log_dur.shape[1]
    alpha_arr = np.zeros((T, M, R1))
    cdef double[:, :, ::1] alpha = alpha_arr
    cdef Py_ssize_t t, s, sp, r, stop
    cdef double lp, lpi, a0, cd
    cdef int empty_t = -1

    with nogil:
        # t = 0: initial-state distribution plays the transition role
        for s in range(M):
            lpi = log_init[s]
            if lpi == -INFINITY:
                continue
            stop = r_stop[s]
            for r in range(r_start[s], stop + 1):
                lp = lpi + log_dur[s, r]
                if log_u[0] < lp:
                    alpha[0, s, r] = pbeta_w(log_u[0] - lp, au, bu, lbn)
                elif r > r_break[s]:
                    break
        empty_t = _scale_and_norm(alpha, log_emit, 0, M, r_stop)

        for t in range(1, T):
            if empty_t >= 0:
                break
            cd = pbeta_w(log_u[t], au, bu, lbn)
            for s in range(M):
                stop = r_stop[s]
                for r in range(stop):
                    a0 = alpha[t - 1, s, r + 1]
                    if a0 > 0.0:
                        alpha[t, s, r] = a0 * cd
            for sp in range(M):
                a0 = alpha[t - 1, sp, 0]
                if a0 <= 0.0:
                    continue
                for s in range(M):
                    lpi = log_pi[sp, s]
                    if lpi == -INFINITY:
                        continue
                    stop = r_stop[s]
                    for r in range(r_start[s], stop + 1):
                        lp = lpi + log_dur[s, r]
                        if log_u[t] < lp:
                            alpha[t, s, r] += a0 * pbeta_w(log_u[t] - lp, au, bu, lbn)
                        elif r > r_break[s]:
                            break
            empty_t = _scale_and_norm(alpha, log_emit, t, M, r_stop)

    if empty_t >= 0:
        raise ConsistencyError(f"forward support empty at t={empty_t}")
    return alpha_arr


cdef int _scale_and_norm(double[:, :, ::1] alpha, double[:, ::1] log_emit,
                         Py_ssize_t t, Py_ssize_t M, long[::1] r_stop) noexcept nogil:
    cdef Py_ssize_t s, r, stop
    cdef double top = -INFINITY
    cdef double tot = 0.0
    cdef double e
    for s in range(M):
        if log_emit[t, s] > top:
            top = log_emit[t, s]
    for s in range(M):
        e = exp(log_emit[t, s] - top)
        stop = r_stop[s]
        for r in range(stop + 1):
            if alpha[t, s, r] != 0.0:
                alpha[t, s, r] *= e
                tot += alpha[t, s, r]
    if tot <= 0.0 or tot != tot:
        return <int> t
    for s in range(M):
        stop = r_stop[s]
        for r in range(stop + 1):
            if alpha[t, s, r] != 0.0:
                alpha[t, s, r] /= tot
    return -1
