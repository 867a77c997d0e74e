"""Primitive distributions: seeded sampling, log densities, conjugate updates.

Parameterization is fixed repo-wide as (shape, scale) for gamma-family
quantities; rate forms are converted at the call site. All densities are
evaluated in log space and probability ratios are formed as exp of log
differences, because duration tail products underflow otherwise.

Gamma sampling delegates to numpy's PCG64 ``Generator``, which uses the
Marsaglia-Tsang squeeze method with the ``G(a+1) * U^(1/a)`` boost for
shape < 1 (no rejection-loop pathologies for tiny shapes). The boost
transform can underflow to exactly 0.0 for shapes below ~1e-2, so draws are
floored at ``TINY`` to keep downstream logs finite.
"""

from dataclasses import dataclass

import numpy as np
from scipy.special import betaln, gammaln

from .errors import ParameterError

TINY = 1e-300
LOG_TINY = np.log(TINY)


# ---------------------------------------------------------------------------
# parameter containers
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class NigParams:
    """Normal-scaled-inverse-gamma prior for a Gaussian mean/variance pair."""

    mu0: float
    nu0: float
    a: float
    b: float

    def __post_init__(self):
        if self.nu0 <= 0 or self.a <= 0 or self.b <= 0:
            raise ParameterError("NigParams requires nu0, a, b > 0")


@dataclass(frozen=True)
class GammaPrior:
    shape: float
    scale: float

    def __post_init__(self):
        if self.shape <= 0 or self.scale <= 0:
            raise ParameterError("GammaPrior requires shape, scale > 0")

    @property
    def rate(self):
        return 1.0 / self.scale

    @property
    def mean(self):
        return self.shape * self.scale


# ---------------------------------------------------------------------------
# sampling
# ---------------------------------------------------------------------------

def sample_gamma(shape, scale, rng, size=None):
    """Gamma(shape, scale) draw(s), valid for any shape > 0 including << 1."""
    if shape <= 0 or scale <= 0:
        raise ParameterError(f"gamma parameters must be positive, got shape={shape} scale={scale}")
    draw = rng.gamma(shape, scale, size)
    return np.maximum(draw, TINY) if size is not None else max(float(draw), TINY)


def sample_dirichlet(alpha, rng):
    """Dirichlet draw with exact structural zeros for zero-concentration entries.

    Entries with alpha == 0 come back exactly 0. If every entry below 1e-300
    except one is (numerically) dead, the surviving coordinate gets the whole
    mass deterministically, which keeps extreme-concentration rows finite.
    """
    alpha = np.asarray(alpha, dtype=float)
    if np.any(alpha < 0):
        raise ParameterError("dirichlet concentrations must be nonnegative")
    live = alpha > 0.0
    if not live.any():
        raise ParameterError("dirichlet needs at least one positive concentration")
    out = np.zeros_like(alpha)
    if live.sum() == 1:
        out[live] = 1.0
        return out
    parts = np.maximum(rng.gamma(alpha[live], 1.0), 0.0)
    total = parts.sum()
    if total <= 0.0:
        # all draws underflowed; fall back to the largest concentration
        fallback = np.zeros(live.sum())
        fallback[int(np.argmax(alpha[live]))] = 1.0
        out[live] = fallback
        return out
    out[live] = parts / total
    return out


def stick_breaking_py(c, d, n, rng):
    """First ``n`` weights of the two-parameter (Pitman-Yor) stick-breaking
    prior: v_k ~ Beta(1-d, c+k*d), w_k = v_k * prod_{j<k}(1-v_j)."""
    v = stick_breaking_fractions(c, d, n, rng)
    return sticks_to_weights(v)


def stick_breaking_fractions(c, d, n, rng):
    if not (0.0 <= d < 1.0):
        raise ParameterError(f"discount must lie in [0, 1), got {d}")
    if c <= -d:
        raise ParameterError(f"concentration must exceed -discount, got c={c} d={d}")
    if n < 1:
        raise ParameterError("need n >= 1 sticks")
    ks = np.arange(1, n + 1)
    v = rng.beta(1.0 - d, c + ks * d)
    return np.clip(v, TINY, 1.0 - 1e-16)


def sticks_to_weights(v):
    v = np.asarray(v, dtype=float)
    carry = np.concatenate([[1.0], np.cumprod(1.0 - v)[:-1]])
    return v * carry


def weights_to_sticks(w):
    """Inverse of ``sticks_to_weights`` for a partial weight vector (sum < 1)."""
    w = np.asarray(w, dtype=float)
    remaining = 1.0 - np.concatenate([[0.0], np.cumsum(w)[:-1]])
    return np.clip(w / np.maximum(remaining, TINY), TINY, 1.0 - 1e-16)


def stick_predictive_fraction(c, d, k):
    """Beta parameters for the k-th stick (1-based) of SB(c, d)."""
    return 1.0 - d, c + k * d


# ---------------------------------------------------------------------------
# log densities
# ---------------------------------------------------------------------------

def normal_logpdf(y, mean, var):
    return -0.5 * (np.log(2.0 * np.pi * var) + (y - mean) ** 2 / var)


def gamma_logpdf(x, shape, scale):
    x = np.asarray(x, dtype=float)
    return (shape - 1.0) * np.log(x) - x / scale - gammaln(shape) - shape * np.log(scale)


def beta_logpdf(x, a, b):
    return (a - 1.0) * np.log(x) + (b - 1.0) * np.log1p(-x) - betaln(a, b)


def poisson_logpmf(k, lam):
    k = np.asarray(k, dtype=float)
    return k * np.log(lam) - lam - gammaln(k + 1.0)


# ---------------------------------------------------------------------------
# conjugate updates
# ---------------------------------------------------------------------------

def nig_update(prior, data):
    """Exact normal-scaled-inverse-gamma posterior after observing ``data``."""
    data = np.asarray(data, dtype=float)
    n = data.size
    if n == 0:
        return prior
    ybar = data.mean()
    ss = float(((data - ybar) ** 2).sum())
    nu_n = prior.nu0 + n
    mu_n = (prior.nu0 * prior.mu0 + n * ybar) / nu_n
    a_n = prior.a + 0.5 * n
    b_n = prior.b + 0.5 * ss + 0.5 * (prior.nu0 * n / nu_n) * (ybar - prior.mu0) ** 2
    return NigParams(mu_n, nu_n, a_n, b_n)


def sample_nig(params, rng):
    """Draw (mean, variance) from a normal-scaled-inverse-gamma distribution."""
    var = 1.0 / sample_gamma(params.a, 1.0 / params.b, rng)
    mean = rng.normal(params.mu0, np.sqrt(var / params.nu0))
    return float(mean), float(var)


def gamma_poisson_update(prior, durations):
    """Conjugate gamma posterior for a Poisson rate (rate-form accumulation:
    shape += sum(durations), rate += count; returned in (shape, scale) form)."""
    durations = np.asarray(durations, dtype=float)
    if durations.size and durations.min() < 0:
        raise ParameterError("durations must be nonnegative")
    if durations.size == 0:
        return prior
    shape = prior.shape + float(durations.sum())
    rate = prior.rate + durations.size
    return GammaPrior(shape, 1.0 / rate)


def beta_binomial_update(a, b, successes, failures):
    return a + successes, b + failures
