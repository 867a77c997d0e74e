"""Pure-Python (numpy) forward-pass kernel: the fallback used when the
compiled extension is unavailable. Semantics are identical to
``_forward_cy.forward``; see that module for the loop-level contract."""

import numpy as np

from .distributions import LOG_TINY
from .errors import ConsistencyError

BACKEND_NAME = "python"


def _pbeta(log_x, au, bu, lbn):
    """Density of Beta(au, bu) at exp(log_x), elementwise; 1 when au=bu=1."""
    log_x = np.clip(log_x, LOG_TINY, -1e-16)
    if au == 1.0 and bu == 1.0:
        return np.ones_like(log_x)
    x = np.exp(log_x)
    return np.exp((au - 1.0) * log_x + (bu - 1.0) * np.log1p(-x) - lbn)


def forward(log_emit, log_dur, log_pi, log_init, log_u, au, bu, lbn,
            r_break=None, r_start=None, r_stop=None):
    T, M = log_emit.shape
    R1 = log_dur.shape[1]
    alpha = np.zeros((T, M, R1))
    if r_start is not None and M and r_start.min() > 0:
        log_dur = log_dur.copy()  # nothing below a state's first admissible r can pass
        for s in range(M):
            log_dur[s, : min(r_start[s], R1)] = -np.inf

    with np.errstate(invalid="ignore"):
        lp0 = log_init[:, None] + log_dur
        mask = log_u[0] < lp0
        w = np.zeros((M, R1))
        if mask.any():
            w[mask] = _pbeta(log_u[0] - lp0[mask], au, bu, lbn)
        _scale_and_store(alpha, 0, w, log_emit[0])

        for t in range(1, T):
            acc = np.zeros((M, R1))
            acc[:, : R1 - 1] = alpha[t - 1][:, 1:] * _pbeta(np.array(log_u[t]), au, bu, lbn)
            a0 = alpha[t - 1][:, 0]
            act = np.nonzero(a0 > 0.0)[0]
            if act.size:
                lp = log_pi[act][:, :, None] + log_dur[None, :, :]
                mask = log_u[t] < lp
                w = np.zeros_like(lp)
                if mask.any():
                    w[mask] = _pbeta(log_u[t] - lp[mask], au, bu, lbn)
                acc += np.einsum("a,asr->sr", a0[act], w)
            _scale_and_store(alpha, t, acc, log_emit[t])
    return alpha


def _scale_and_store(alpha, t, acc, log_emit_t):
    top = log_emit_t.max()
    acc *= np.exp(log_emit_t - top)[:, None]
    total = acc.sum()
    if not np.isfinite(total) or total <= 0.0:
        raise ConsistencyError(f"forward support empty at t={t}")
    alpha[t] = acc / total
