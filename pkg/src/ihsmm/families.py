"""Pluggable per-state emission and duration families.

Duration convention (fixed repo-wide): the value drawn at a segment start is
the number of *remaining* steps, so a draw of r means r+1 observations in the
segment. Families are therefore fit to (segment length - 1); the final
segment's datum is the sampled remaining-duration at its start, which imputes
the full (right-censored) dwell.
"""

import numpy as np
from scipy.special import betaln, gammaln

from .distributions import (
    GammaPrior,
    NigParams,
    gamma_poisson_update,
    nig_update,
    normal_logpdf,
    poisson_logpmf,
    sample_gamma,
    sample_nig,
)
from .errors import ParameterError

NEG_INF = -np.inf


# ---------------------------------------------------------------------------
# emissions
# ---------------------------------------------------------------------------

class GaussianEmission:
    """Gaussian observations with a normal-scaled-inverse-gamma prior on
    (mean, variance); variance can be pinned with ``fixed_variance``."""

    name = "gaussian"

    def __init__(self, prior, fixed_variance=None):
        if not isinstance(prior, NigParams):
            raise ParameterError("GaussianEmission needs NigParams")
        self.prior = prior
        self.fixed_variance = fixed_variance

    def sample_prior_params(self, rng):
        if self.fixed_variance is not None:
            var = float(self.fixed_variance)
            mean = rng.normal(self.prior.mu0, np.sqrt(var / self.prior.nu0))
            return float(mean), var
        return sample_nig(self.prior, rng)

    def sample_posterior_params(self, data, rng):
        data = np.asarray(data, dtype=float)
        if data.size == 0:
            return self.sample_prior_params(rng)
        post = nig_update(self.prior, data)
        if self.fixed_variance is not None:
            var = float(self.fixed_variance)
            mean = rng.normal(post.mu0, np.sqrt(var / post.nu0))
            return float(mean), var
        return sample_nig(post, rng)

    def loglik(self, theta, y):
        mean, var = theta
        return normal_logpdf(y, mean, var)

    def loglik_matrix(self, y, thetas):
        y = np.asarray(y, dtype=float)
        out = np.empty((y.size, len(thetas)))
        for m, (mean, var) in enumerate(thetas):
            out[:, m] = normal_logpdf(y, mean, var)
        return out

    def sample_obs(self, theta, rng, size=None):
        mean, var = theta
        return rng.normal(mean, np.sqrt(var), size)

    def location(self, theta):
        return theta[0]

    def describe(self, theta):
        return {"mean": theta[0], "var": theta[1]}

    def param_from_json(self, d):
        return (float(d["mean"]), float(d["var"]))


class PoissonEmission:
    """Poisson count observations with a gamma prior on the rate."""

    name = "poisson"

    def __init__(self, prior):
        if not isinstance(prior, GammaPrior):
            raise ParameterError("PoissonEmission needs GammaPrior")
        self.prior = prior

    def sample_prior_params(self, rng):
        return sample_gamma(self.prior.shape, self.prior.scale, rng)

    def sample_posterior_params(self, data, rng):
        data = np.asarray(data, dtype=float)
        if data.size == 0:
            return self.sample_prior_params(rng)
        if data.min() < 0 or np.any(data != np.floor(data)):
            raise ParameterError("poisson emissions require nonnegative integers")
        post = gamma_poisson_update(self.prior, data)
        return sample_gamma(post.shape, post.scale, rng)

    def loglik(self, rate, y):
        return poisson_logpmf(y, rate)

    def loglik_matrix(self, y, rates):
        y = np.asarray(y, dtype=float)
        base = -gammaln(y + 1.0)
        out = np.empty((y.size, len(rates)))
        for m, rate in enumerate(rates):
            out[:, m] = y * np.log(rate) - rate + base
        return out

    def sample_obs(self, rate, rng, size=None):
        return rng.poisson(rate, size)

    def location(self, rate):
        return rate

    def describe(self, rate):
        return {"rate": rate}

    def param_from_json(self, d):
        return float(d["rate"])


# ---------------------------------------------------------------------------
# durations
# ---------------------------------------------------------------------------

class PoissonDuration:
    """Remaining-duration r ~ Poisson(rate), gamma prior on the rate."""

    name = "poisson"

    def __init__(self, prior):
        self.prior = prior

    def sample_prior_params(self, rng):
        return sample_gamma(self.prior.shape, self.prior.scale, rng)

    def sample_posterior_params(self, durations, rng):
        post = gamma_poisson_update(self.prior, np.asarray(durations, dtype=float))
        return sample_gamma(post.shape, post.scale, rng)

    def logpmf(self, rate, r):
        return poisson_logpmf(r, rate) if r >= 0 else NEG_INF

    def logpmf_vector(self, rate, rmax):
        return poisson_logpmf(np.arange(rmax + 1), rate)

    def sample(self, rate, rng):
        return int(rng.poisson(rate))

    def support_upper(self, rate, log_thresh):
        mode = int(np.floor(rate))
        hi = mode
        while True:
            block = np.arange(hi + 1, hi + 65)
            admissible = poisson_logpmf(block, rate) >= log_thresh
            if not admissible.any():
                return hi
            hi = int(block[admissible][-1])

    def support_lower(self, rate, log_thresh):
        mode = int(np.floor(rate))
        lo = mode
        while lo > 0:
            block = np.arange(max(lo - 64, 0), lo)
            admissible = poisson_logpmf(block, rate) >= log_thresh
            if not admissible.any():
                return lo
            lo = int(block[admissible][0])
        return 0

    def rate_stat(self, rate):
        return rate

    def describe(self, rate):
        return {"rate": rate}

    def param_from_json(self, d):
        return float(d["rate"])


class GeometricDuration:
    """r ~ Geometric(q) on {0, 1, ...}, Beta(a, b) prior on q."""

    name = "geometric"

    def __init__(self, a=1.0, b=1.0):
        if a <= 0 or b <= 0:
            raise ParameterError("beta prior parameters must be positive")
        self.a, self.b = a, b

    def sample_prior_params(self, rng):
        return float(np.clip(rng.beta(self.a, self.b), 1e-12, 1.0 - 1e-12))

    def sample_posterior_params(self, durations, rng):
        durations = np.asarray(durations, dtype=float)
        q = rng.beta(self.a + durations.size, self.b + durations.sum())
        return float(np.clip(q, 1e-12, 1.0 - 1e-12))

    def logpmf(self, q, r):
        return np.log(q) + r * np.log1p(-q) if r >= 0 else NEG_INF

    def logpmf_vector(self, q, rmax):
        return np.log(q) + np.arange(rmax + 1) * np.log1p(-q)

    def sample(self, q, rng):
        return int(rng.geometric(q)) - 1

    def support_upper(self, q, log_thresh):
        if log_thresh >= np.log(q):
            return 0
        return int(np.floor((log_thresh - np.log(q)) / np.log1p(-q)))

    def rate_stat(self, q):
        return (1.0 - q) / q  # mean remaining duration

    def describe(self, q):
        return {"q": q}

    def param_from_json(self, d):
        return float(d["q"])


class DelayedGeometricDuration:
    """r ~ d + Geometric(q): zero mass below the per-state delay d.

    d is uniform on {0..dmax}; q has a Beta(a, b) prior. The posterior draw is
    exact: d from its q-marginalized discrete conditional, then q | d.
    """

    name = "delayed-geometric"

    def __init__(self, dmax, a=1.0, b=1.0):
        if dmax < 0:
            raise ParameterError("dmax must be >= 0")
        self.dmax = int(dmax)
        self.a, self.b = a, b

    def sample_prior_params(self, rng):
        d = int(rng.integers(0, self.dmax + 1))
        q = float(np.clip(rng.beta(self.a, self.b), 1e-12, 1.0 - 1e-12))
        return (d, q)

    def sample_posterior_params(self, durations, rng):
        durations = np.asarray(durations, dtype=float)
        if durations.size == 0:
            return self.sample_prior_params(rng)
        n = durations.size
        total = durations.sum()
        ds = np.arange(0, min(self.dmax, int(durations.min())) + 1)
        logw = betaln(self.a + n, self.b + total - n * ds) - betaln(self.a, self.b)
        logw -= logw.max()
        w = np.exp(logw)
        d = int(ds[_categorical(w, rng)])
        q = rng.beta(self.a + n, self.b + (total - n * d))
        return (d, float(np.clip(q, 1e-12, 1.0 - 1e-12)))

    def logpmf(self, lam, r):
        d, q = lam
        if r < d:
            return NEG_INF
        return np.log(q) + (r - d) * np.log1p(-q)

    def logpmf_vector(self, lam, rmax):
        d, q = lam
        out = np.full(rmax + 1, NEG_INF)
        if rmax >= d:
            out[d:] = np.log(q) + np.arange(rmax + 1 - d) * np.log1p(-q)
        return out

    def sample(self, lam, rng):
        d, q = lam
        return d + int(rng.geometric(q)) - 1

    def support_upper(self, lam, log_thresh):
        d, q = lam
        if log_thresh >= np.log(q):
            return d
        return d + int(np.floor((log_thresh - np.log(q)) / np.log1p(-q)))

    def rate_stat(self, lam):
        d, q = lam
        return d + (1.0 - q) / q

    def describe(self, lam):
        return {"delay": lam[0], "q": lam[1]}

    def param_from_json(self, d):
        return (int(d["delay"]), float(d["q"]))


class DeltaZeroDuration:
    """Degenerate duration at zero: every step is a segment boundary, which
    collapses the dynamics to an ordinary Markov chain."""

    name = "delta-zero"

    def prefix_support_cap(self):
        return 0

    def sample_prior_params(self, rng):
        return None

    def sample_posterior_params(self, durations, rng):
        return None

    def logpmf(self, lam, r):
        return 0.0 if r == 0 else NEG_INF

    def logpmf_vector(self, lam, rmax):
        out = np.full(rmax + 1, NEG_INF)
        out[0] = 0.0
        return out

    def sample(self, lam, rng):
        return 0

    def support_upper(self, lam, log_thresh):
        return 0

    def rate_stat(self, lam):
        return 0.0

    def describe(self, lam):
        return {}

    def param_from_json(self, d):
        return None


class FixedCategoricalDuration:
    """Fixed pmf on {0..len(pmf)-1}, no learnable parameters.

    Validation family: gives exact finite duration support for tests that
    compare the sampler against exhaustive path enumeration.
    """

    name = "categorical"

    def __init__(self, pmf):
        pmf = np.asarray(pmf, dtype=float)
        if pmf.min() < 0 or pmf.sum() <= 0:
            raise ParameterError("pmf must be nonnegative with positive mass")
        self.pmf = pmf / pmf.sum()
        self._log = np.where(self.pmf > 0, np.log(np.maximum(self.pmf, 1e-300)), NEG_INF)

    def prefix_support_cap(self):
        """Largest r such that every duration 0..r has positive mass."""
        positive = self.pmf > 0
        return int(np.argmin(positive)) - 1 if not positive.all() else len(self.pmf) - 1

    def sample_prior_params(self, rng):
        return None

    def sample_posterior_params(self, durations, rng):
        return None

    def logpmf(self, lam, r):
        return self._log[r] if 0 <= r < len(self.pmf) else NEG_INF

    def logpmf_vector(self, lam, rmax):
        out = np.full(rmax + 1, NEG_INF)
        n = min(rmax + 1, len(self.pmf))
        out[:n] = self._log[:n]
        return out

    def sample(self, lam, rng):
        return _categorical(self.pmf, rng)

    def support_upper(self, lam, log_thresh):
        idx = np.nonzero(self._log >= log_thresh)[0]
        return int(idx[-1]) if idx.size else 0

    def rate_stat(self, lam):
        return float(np.dot(np.arange(len(self.pmf)), self.pmf))

    def describe(self, lam):
        return {}

    def param_from_json(self, d):
        return None


def _categorical(weights, rng):
    cdf = np.cumsum(weights)
    return int(np.searchsorted(cdf, rng.random() * cdf[-1], side="right").clip(0, len(cdf) - 1))


# ---------------------------------------------------------------------------
# per-state posterior refresh
# ---------------------------------------------------------------------------

def group_emissions(y, states, n_states):
    """Observations assigned to each state by the current path."""
    y = np.asarray(y)
    states = np.asarray(states)
    return [y[states == m] for m in range(n_states)]


def group_durations(path, n_states):
    """Drawn remaining-durations per state: the r value at every fresh-draw
    time (t=0 and every t whose predecessor had r=0). The final segment
    contributes its sampled (imputed) duration, never the truncated length."""
    starts = segment_starts(path.r)
    out = [[] for _ in range(n_states)]
    for t in starts:
        out[path.s[t]].append(path.r[t])
    return [np.asarray(v, dtype=float) for v in out]


def segment_starts(r):
    r = np.asarray(r)
    fresh = np.ones(len(r), dtype=bool)
    fresh[1:] = r[:-1] == 0
    return np.nonzero(fresh)[0]


def sample_params_posterior(emission, duration, y, path, n_states, rng):
    """Conjugate/exact Gibbs refresh of every tracked state's (theta, lambda).

    States with no assigned data get prior draws.
    """
    edata = group_emissions(y, path.s, n_states)
    ddata = group_durations(path, n_states)
    thetas = [emission.sample_posterior_params(edata[m], rng) for m in range(n_states)]
    lams = [duration.sample_posterior_params(ddata[m], rng) for m in range(n_states)]
    return thetas, lams
