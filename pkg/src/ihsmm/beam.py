"""Beam (slice) sampling of the full latent path.

Auxiliary variables u_t truncate the infinite forward recursion over full
states z_t = (state, remaining duration) to finitely many candidates: only
transitions with probability above u_t are considered. A single temperature
parameter temp sets the slice ratio's Beta(1/temp, temp) distribution;
temp = 1 recovers the plain uniform slice.

The forward pass is the hot kernel: a compiled extension is used when
available and a numpy fallback otherwise (``IHSMM_FORCE_PY=1`` forces the
fallback; both produce the same tables up to summation order).
"""

import os
from dataclasses import dataclass

import numpy as np
from scipy.special import betaln

from .distributions import TINY
from .errors import ConsistencyError, ParameterError
from .paths import LatentPath
from . import _forward_py

if os.environ.get("IHSMM_FORCE_PY"):
    _impl = _forward_py
else:
    try:
        from . import _forward_cy as _impl
    except ImportError:
        _impl = _forward_py

MAX_TABLE_ELEMENTS = 250_000_000

# Fresh (data-free) states redraw duration parameters from broad priors every
# sweep; without a horizon their admissible-duration bands can sit at
# thousands of steps. No segment can exceed T observed steps, so candidate
# durations are capped at HORIZON_MULT * T: this only excludes imputed
# censored dwells several times longer than the data, whose slice-admissible
# mass is negligible for any family the experiments use.
HORIZON_MULT = 4


def forward_backend():
    """Name of the forward-kernel implementation selected at import."""
    return _impl.BACKEND_NAME


def slice_beta_params(temperature):
    if temperature <= 0:
        raise ParameterError("temperature must be positive")
    au = 1.0 / temperature
    bu = float(temperature)
    return au, bu, float(betaln(au, bu))


def pbeta_weights(log_x, temperature):
    """Beta(1/temp, temp) density at exp(log_x), elementwise."""
    au, bu, lbn = slice_beta_params(temperature)
    return _forward_py._pbeta(np.asarray(log_x, dtype=float), au, bu, lbn)


@dataclass
class SliceVars:
    log_u: np.ndarray
    temperature: float

    @property
    def u(self):
        return np.exp(self.log_u)


class ForwardTable:
    """Normalized forward weights per time over (state, remaining duration).

    Dense storage with exact zeros off the support; ``support(t)`` lists the
    live full states at time t.
    """

    def __init__(self, alpha, slices):
        self.alpha = alpha
        self.slices = slices

    @property
    def T(self):
        return self.alpha.shape[0]

    @property
    def n_states(self):
        return self.alpha.shape[1]

    @property
    def r_cap(self):
        return self.alpha.shape[2] - 1

    def support(self, t):
        s, r = np.nonzero(self.alpha[t])
        return list(zip(s.tolist(), r.tolist()))

    def weights(self, t):
        return {(s, r): float(self.alpha[t, s, r]) for s, r in self.support(t)}


# ---------------------------------------------------------------------------
# slice variables
# ---------------------------------------------------------------------------

def conditioning_log_probs(path, log_pi, log_init, duration, lams):
    """log p(z_t | z_{t-1}) along a fixed path (log initial prob at t=0)."""
    T = path.T
    log_p = np.zeros(T)
    log_p[0] = log_init[path.s[0]] + duration.logpmf(lams[path.s[0]], int(path.r[0]))
    boundary = np.nonzero(path.r[:-1] == 0)[0] + 1
    for t in boundary:
        s_prev, s = int(path.s[t - 1]), int(path.s[t])
        log_p[t] = log_pi[s_prev, s] + duration.logpmf(lams[s], int(path.r[t]))
    return log_p


def sample_slices(path, log_pi, log_init, duration, lams, temperature, rng):
    """u_t = p_t * B_t with B_t ~ Beta(1/temp, temp), stored in log space.

    B is kept at or below 1 - 1e-9 so that log u stays strictly below log p
    in double precision (the conditioning path must always pass its own
    indicators); at vanishing temperatures this clamp is the limit behaviour.
    """
    au, bu, _ = slice_beta_params(temperature)
    log_p = conditioning_log_probs(path, log_pi, log_init, duration, lams)
    if not np.all(np.isfinite(log_p)):
        t = int(np.nonzero(~np.isfinite(log_p))[0][0])
        raise ConsistencyError(f"conditioning path has zero transition probability at t={t}")
    b = np.clip(rng.beta(au, bu, size=path.T), TINY, 1.0 - 1e-9)
    return SliceVars(log_p + np.log(b), temperature)


# ---------------------------------------------------------------------------
# duration window for the dense tables
# ---------------------------------------------------------------------------

def duration_window(duration, lams, log_pi, log_init, slices, path_r_max, horizon_mult=None):
    """Smallest r-cap covering the conditioning path and every slice-admissible
    fresh duration draw, bounded by the data horizon."""
    M = len(lams)
    T = slices.log_u.size
    log_u_min = float(slices.log_u.min())
    horizon = int(horizon_mult if horizon_mult is not None else HORIZON_MULT) * T
    r_cap = int(path_r_max)
    with np.errstate(invalid="ignore"):
        incoming = np.maximum(log_init, log_pi.max(axis=0) if M else log_init)
    support_lower = getattr(duration, "support_lower", lambda lam, thresh: 0)
    for s in range(M):
        if not np.isfinite(incoming[s]):
            continue
        thresh = log_u_min - incoming[s]
        if support_lower(lams[s], thresh) > horizon:
            continue  # admissible band sits entirely past the data horizon
        r_cap = max(r_cap, min(duration.support_upper(lams[s], thresh), horizon))
    if (r_cap + 1) * T * max(M, 1) > MAX_TABLE_ELEMENTS:
        raise ConsistencyError(
            f"forward table would need {(r_cap + 1) * T * M} cells; "
            "duration priors admit implausibly long dwells for this slice"
        )
    return r_cap


def admissible_bands(log_dur, log_pi, log_init, log_u_min):
    """Per state, the first and last duration indices that any predecessor
    could reach at the loosest slice; indicators cannot pass outside the band
    (fresh draws, that is: countdown carries mass below it, never above)."""
    M, R1 = log_dur.shape
    with np.errstate(invalid="ignore"):
        incoming = np.maximum(log_init, log_pi.max(axis=0) if M else log_init)
    lo = np.empty(M, dtype=np.int64)
    hi = np.empty(M, dtype=np.int64)
    for s in range(M):
        admissible = np.nonzero(log_dur[s] > log_u_min - incoming[s])[0]
        if admissible.size:
            lo[s], hi[s] = int(admissible[0]), int(admissible[-1])
        else:
            lo[s], hi[s] = R1, -1
    return lo, hi


def duration_log_table(duration, lams, r_cap):
    M = len(lams)
    table = np.full((max(M, 1), r_cap + 1), -np.inf)
    for s in range(M):
        table[s] = duration.logpmf_vector(lams[s], r_cap)
    return table


def break_indices(log_dur):
    """Per state, the last index after which the pmf is verified non-increasing
    (enables the kernel's early break); falls back to no-break otherwise."""
    M, R1 = log_dur.shape
    out = np.empty(M, dtype=np.int64)
    with np.errstate(invalid="ignore"):
        for s in range(M):
            peak = int(np.argmax(log_dur[s]))
            tail = np.diff(log_dur[s, peak:])
            monotone = bool(np.all((tail <= 0) | np.isnan(tail)))  # -inf runs
            out[s] = peak if monotone else R1 - 1
    return out


# ---------------------------------------------------------------------------
# forward / backward
# ---------------------------------------------------------------------------

def forward_pass(log_emit, log_dur, log_pi, log_init, slices, impl=None):
    au, bu, lbn = slice_beta_params(slices.temperature)
    kernel = impl if impl is not None else _impl
    r_start, r_stop = admissible_bands(log_dur, log_pi, log_init, float(slices.log_u.min()))
    alpha = kernel.forward(
        np.ascontiguousarray(log_emit),
        np.ascontiguousarray(log_dur),
        np.ascontiguousarray(log_pi),
        np.ascontiguousarray(log_init),
        np.ascontiguousarray(slices.log_u),
        au,
        bu,
        lbn,
        break_indices(log_dur),
        r_start,
        r_stop,
    )
    return ForwardTable(alpha, slices)


def backward_sample(table, log_dur, log_pi, log_init, slices, rng):
    """Joint draw of the full path given the forward tables, walking the
    backward kernel I(u_{t+1} < p_{t+1}) * pbeta * alpha_t."""
    alpha = table.alpha
    T, M, R1 = alpha.shape
    au, bu, lbn = slice_beta_params(slices.temperature)
    s_out = np.empty(T, dtype=np.int64)
    r_out = np.empty(T, dtype=np.int64)

    flat = alpha[T - 1].ravel()
    idx = _draw_index(flat, rng, T - 1)
    s_out[T - 1], r_out[T - 1] = divmod(idx, R1)

    for t in range(T - 2, -1, -1):
        s_next, r_next = int(s_out[t + 1]), int(r_out[t + 1])
        cand_idx = []
        cand_w = []
        if r_next + 1 < R1 and alpha[t, s_next, r_next + 1] > 0.0:
            w = _forward_py._pbeta(np.array(slices.log_u[t + 1]), au, bu, lbn)
            cand_idx.append((s_next, r_next + 1))
            cand_w.append(float(w) * alpha[t, s_next, r_next + 1])
        ldur = log_dur[s_next, r_next]
        for sp in range(M):
            a0 = alpha[t, sp, 0]
            if a0 <= 0.0:
                continue
            lp = log_pi[sp, s_next] + ldur
            if slices.log_u[t + 1] < lp:
                w = _forward_py._pbeta(np.array(slices.log_u[t + 1] - lp), au, bu, lbn)
                cand_idx.append((sp, 0))
                cand_w.append(float(w) * a0)
        pick = _draw_index(np.array(cand_w), rng, t)
        s_out[t], r_out[t] = cand_idx[pick]
    return LatentPath(s_out, r_out)


def _draw_index(weights, rng, t):
    total = weights.sum()
    if not np.isfinite(total) or total <= 0.0:
        raise ConsistencyError(f"backward kernel has no admissible predecessor at t={t}")
    cdf = np.cumsum(weights)
    return int(np.searchsorted(cdf, rng.random() * total, side="right").clip(0, len(weights) - 1))


def transition_prob(z_prev, z, pi, duration, lams):
    """p(z | z_prev): deterministic countdown inside a segment, transition
    probability times fresh-duration pmf at a boundary."""
    s_prev, r_prev = z_prev
    s, r = z
    if r_prev > 0:
        return 1.0 if (s == s_prev and r == r_prev - 1) else 0.0
    return float(pi.P[s_prev, s] * np.exp(duration.logpmf(lams[s], r)))
