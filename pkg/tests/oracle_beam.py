"""Independent brute-force oracle for the beam sampler tests.

Enumerates every slice-admissible path prefix explicitly (no dynamic
programming) and accumulates per-time weights and full-path weights. Kept
deliberately separate from the library's forward recursion.
"""

from collections import defaultdict

import numpy as np

from ihsmm.beam import slice_beta_params

LOG_TINY = np.log(1e-300)


def _pb_scalar(lx, au, bu, lbn):
    if au == 1.0 and bu == 1.0:
        return 1.0
    lx = min(max(lx, LOG_TINY), -1e-16)
    x = np.exp(lx)
    return float(np.exp((au - 1.0) * lx + (bu - 1.0) * np.log1p(-x) - lbn))


def enumerate_paths(log_emit, log_dur, log_pi, log_init, log_u, temperature, max_paths=2_000_000):
    """Returns (per_time_weights, full_path_weights).

    per_time_weights[t] maps (s, r) -> unnormalized prefix mass;
    full_path_weights maps the complete ((s, r), ...) tuple -> weight.
    """
    T, M = log_emit.shape
    R1 = log_dur.shape[1]
    au, bu, lbn = slice_beta_params(temperature)
    per_time = [defaultdict(float) for _ in range(T)]
    full = defaultdict(float)
    counter = [0]

    def boundary_candidates(t, lp_incoming):
        out = []
        for s in range(M):
            if not np.isfinite(lp_incoming[s]):
                continue
            for r in range(R1):
                lp = lp_incoming[s] + log_dur[s, r]
                if log_u[t] < lp:
                    out.append((s, r, _pb_scalar(log_u[t] - lp, au, bu, lbn)))
        return out

    def extend(t, s, r, weight, prefix):
        weight = weight * np.exp(log_emit[t, s])
        prefix = prefix + ((s, r),)
        per_time[t][(s, r)] += weight
        counter[0] += 1
        if counter[0] > max_paths:
            raise RuntimeError("oracle instance too large")
        if t == T - 1:
            full[prefix] += weight
            return
        if r > 0:
            extend(t + 1, s, r - 1, weight * _pb_scalar(log_u[t + 1], au, bu, lbn), prefix)
        else:
            for s2, r2, w in boundary_candidates(t + 1, log_pi[s]):
                extend(t + 1, s2, r2, weight * w, prefix)

    for s, r, w in boundary_candidates(0, log_init):
        extend(0, s, r, w, ())
    return per_time, full


def normalized_tables(per_time, M, R1):
    T = len(per_time)
    alpha = np.zeros((T, M, R1))
    for t, row in enumerate(per_time):
        for (s, r), w in row.items():
            alpha[t, s, r] = w
        alpha[t] /= alpha[t].sum()
    return alpha
