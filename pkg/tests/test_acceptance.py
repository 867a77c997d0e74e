"""Acceptance suite: every gate prints one pass/fail line.

Run with ``pytest tests/test_acceptance.py -s`` to see the lines as they
complete. The experiment-backed gates (four-state chain, left-to-right chain,
coal, tone/silence) run the full pipelines at their documented scales, so the
module takes several minutes.
"""

from collections import Counter

import numpy as np
import pytest
from scipy import stats as ss

from ihsmm.distributions import NigParams
from ihsmm.families import (
    FixedCategoricalDuration,
    GaussianEmission,
    GeometricDuration,
)
from ihsmm.gibbs import (
    ModelConfig,
    gibbs_sweep,
    generate_obs,
    init_chain,
    prior_generate,
)
from ihsmm.diagnostics import joint_loglik
from ihsmm.rng import RngStream
from ihsmm.topology import FINITE, FULL, IED, Topology
from ihsmm.transitions import TransitionMatrix
from ihsmm.weights import WeightState, sample_gamma_prior
from ihsmm import experiments


def _report(name, passed, detail):
    print(f"\n[{name}] {'PASS' if passed else 'FAIL'}: {detail}")
    return passed


# ---------------------------------------------------------------------------
# A1 + A8: four-state explicit-duration chain
# ---------------------------------------------------------------------------

@pytest.fixture(scope="module")
def ied_results(tmp_path_factory):
    out = tmp_path_factory.mktemp("ied-synth")
    return experiments.run_ied_synth(out, seed=0, burn=100, samples=1000, T=500)


def test_a1_ied_synthetic(ied_results):
    r = ied_results
    ok_modal = r["modal_state_count"] == 4 and r["modal_state_count_mass"] >= 0.5
    ok_mean = all(m["mean_inside"] for m in r["matched_states"])
    ok_rate = all(m["rate_inside"] for m in r["matched_states"])
    detail = (
        f"modal occupied-state count {r['modal_state_count']} "
        f"(mass {r['modal_state_count_mass']:.2f}); "
        f"means inside 95% interval: {sum(m['mean_inside'] for m in r['matched_states'])}/4; "
        f"rates inside: {sum(m['rate_inside'] for m in r['matched_states'])}/4"
    )
    assert _report("A1 explicit-duration synthetic", ok_modal and ok_mean and ok_rate, detail)


def test_a8_mixing_proxy(ied_results):
    lag = ied_results["acf_location_first_below_0.2"]
    ok = 0 <= lag < 50
    _report("A8 mixing proxy (soft gate)", ok, f"fixed-time location trace acf < 0.2 at lag {lag}")
    if not ok:
        import warnings

        warnings.warn(f"autocorrelation gate outside tolerance (lag {lag}); soft gate only")


# ---------------------------------------------------------------------------
# A2: left-to-right synthetic
# ---------------------------------------------------------------------------

def test_a2_left_to_right_synthetic(tmp_path):
    # reference seed 1 (see docs/experiments.md): the 150-point realization
    # must actually exhibit the designed four-boundary structure
    r = experiments.run_ilr_synth(tmp_path, seed=1, burn=100, samples=1000, T=150)
    ok_modal = r["modal_changepoint_count"] == 4 and r["modal_changepoint_count_mass"] >= 0.5
    ok_var = bool(r["final_position_variance_is_largest"])
    detail = (
        f"modal change-point count {r['modal_changepoint_count']} "
        f"(mass {r['modal_changepoint_count_mass']:.2f}); "
        f"duration-rate variances by position {np.round(r['duration_rate_variance_by_position'], 1)}"
    )
    assert _report("A2 left-to-right synthetic", ok_modal and ok_var, detail)


# ---------------------------------------------------------------------------
# A3: coal-mining disasters
# ---------------------------------------------------------------------------

def test_a3_coal(tmp_path):
    r = experiments.run_coal(tmp_path, seed=0, burn=100, samples=1000)
    ok_modal = r["modal_changepoint_count"] == 2
    ok_support = r["support_mass_1_to_5"] >= 0.95
    peaks = sorted(r["top_peaks_years_after_start"])
    ok_peaks = (
        len(peaks) == 2
        and abs(peaks[0] - 40) <= 8
        and abs(peaks[1] - 100) <= 8
    )
    detail = (
        f"modal change-point count {r['modal_changepoint_count']} "
        f"(mass {r['modal_changepoint_count_mass']:.2f}); "
        f"mass on 1..5 change-points {r['support_mass_1_to_5']:.3f}; "
        f"location peaks at years {peaks} after 1851"
    )
    assert _report("A3 coal change-points", ok_modal and ok_support and ok_peaks, detail)


# ---------------------------------------------------------------------------
# A4: states distinguishable only by duration
# ---------------------------------------------------------------------------

def test_a4_duration_distinguishable(tmp_path):
    r = experiments.run_morse_synth(tmp_path, seed=0, burn=100, samples=500, T=420)
    ed, dz = r["explicit_duration"], r["delta_zero"]
    ok = (
        ed["modal_state_count"] == 3
        and ed["modal_state_count_mass"] >= 0.5
        and dz["modal_state_count"] == 2
        and dz["modal_state_count_mass"] >= 0.5
    )
    detail = (
        f"explicit-duration fit: modal {ed['modal_state_count']} states "
        f"(mass {ed['modal_state_count_mass']:.2f}); "
        f"zero-duration fit: modal {dz['modal_state_count']} states "
        f"(mass {dz['modal_state_count_mass']:.2f})"
    )
    assert _report("A4 duration-distinguishable states", ok, detail)


# ---------------------------------------------------------------------------
# A5: sampler exactness against exhaustive enumeration
# ---------------------------------------------------------------------------

def _a5_model():
    """Finite two-state model, categorical durations on {0..4}, T=8, all
    parameters fixed: the path posterior is exactly enumerable."""
    T = 8
    duration = FixedCategoricalDuration([0.3, 0.25, 0.2, 0.15, 0.1])
    P = np.array([[0.6, 0.4], [0.3, 0.7]])
    init_p = np.array([0.5, 0.5])
    means = np.array([-1.0, 1.0])
    rng = np.random.default_rng(424)
    y = np.where(rng.random(T) < 0.5, -1, 1) + rng.normal(0, 1.2, T)
    log_emit = np.array([-0.5 * (y - mu) ** 2 for mu in means]).T.copy()
    return T, duration, P, init_p, means, y, log_emit


def _a5_enumerate(T, duration, P, init_p, log_emit):
    """Exact posterior over state sequences by exhaustive enumeration of full
    (state, duration) paths, marginalizing the auxiliary duration coordinate.

    The raw full-state space has ~20k classes here, whose Monte-Carlo noise
    floor alone exceeds the tolerance at 1e5 draws; the state-sequence
    marginal (256 classes) is the meaningful path posterior.
    """
    R = len(duration.pmf)
    pmf = duration.pmf
    post = {}

    def rec(t, s, r, logw, states):
        logw = logw + log_emit[t, s]
        states = states + (s,)
        if t == T - 1:
            post[states] = post.get(states, 0.0) + np.exp(logw)
            return
        if r > 0:
            rec(t + 1, s, r - 1, logw, states)
        else:
            for s2 in range(2):
                for r2 in range(R):
                    rec(t + 1, s2, r2, logw + np.log(P[s, s2] * pmf[r2]), states)

    for s in range(2):
        for r in range(R):
            rec(0, s, r, np.log(init_p[s] * pmf[r]), ())
    total = sum(post.values())
    return {k: v / total for k, v in post.items()}


def test_a5_path_posterior_matches_enumeration():
    T, duration, P, init_p, means, y, log_emit = _a5_model()
    exact = _a5_enumerate(T, duration, P, init_p, log_emit)

    config = ModelConfig(
        topology=Topology(FINITE, K=2),
        emission=GaussianEmission(NigParams(0.0, 0.25, 1.0, 1.0)),
        duration=duration,
        temperature=1.5,
        alpha0=1.0,
        alpha1=1.0,
        sample_alpha0=False,
        sample_alpha1=False,
    )
    state = init_chain(config, y, 2024)
    # pin every parameter: only the path moves
    state.thetas = [(float(means[0]), 1.0), (float(means[1]), 1.0)]
    state.lams = [None, None]
    state.pi = TransitionMatrix(P.copy(), np.zeros((2, 0)))
    state.ws.gamma = init_p.copy()  # initial distribution = normalized masses

    n_sweeps = 100_000
    freq = Counter()
    for _ in range(n_sweeps):
        gibbs_sweep(state, y, path_only=True)
        freq[tuple(state.path.s.tolist())] += 1

    tv = 0.5 * sum(
        abs(exact.get(k, 0.0) - freq.get(k, 0) / n_sweeps) for k in set(exact) | set(freq)
    )
    ok = tv < 0.03
    assert _report(
        "A5 sampler exactness",
        ok,
        f"TV(exact, chain) = {tv:.4f} over {len(exact)} state sequences after {n_sweeps} sweeps",
    )


# ---------------------------------------------------------------------------
# A6: whole-model coherence (independent-replica design)
# ---------------------------------------------------------------------------

def _a6_config():
    return ModelConfig(
        topology=Topology(IED),
        emission=GaussianEmission(NigParams(0.0, 2.0, 3.0, 3.0)),
        duration=GeometricDuration(2.0, 2.0),
        c=2.0,
        d=0.0,
        temperature=1.5,
        alpha0=2.0,
        alpha1=2.0,
        sample_alpha0=False,
        sample_alpha1=False,
        w_passes=3,
        duration_horizon_mult=400,
    )


def _a6_stats(state, y):
    """Representation-invariant statistics of (w, gamma, pi, theta, lambda, z, y).

    Transition-row functionals are clipped away from the spurious float atom
    at exactly 1 (sub-ulp off-support mass rounds away in doubles).
    """
    T = y.size
    path = state.path
    segs = path.segments()
    occ = sorted(set(path.s.tolist()))
    t_star = T // 2
    m = int(path.s[t_star])
    theta = state.thetas[m]
    row = state.pi.P[m]
    others = [k for k in occ if k != m]
    clip = 1.0 - 1e-9
    durations = [seg[3] for seg in segs]
    return [
        len(occ),
        len(segs),
        float(np.mean([g[2] for g in segs])),
        float(np.mean(durations)),
        float(np.max(durations)),
        float(path.r[0]),
        float(np.mean(y)),
        float(np.var(y)),
        float(np.mean((y[1:] - y.mean()) * (y[:-1] - y.mean()))),
        float(np.max(np.abs(y))),
        float(np.min(y)),
        float(y[t_star]),
        float(state.ws.total_gamma()),
        float(state.ws.gamma[occ].sum() / state.ws.total_gamma()),
        float(state.ws.w[occ].sum()),
        float(theta[0]),
        float(theta[1]),
        float(state.lams[m]),
        min(float(row[others].sum()), clip),
        float(joint_loglik(state, y)),
    ]


A6_STAT_NAMES = [
    "occupied-states", "segments", "mean-segment-length", "mean-drawn-duration",
    "max-drawn-duration", "first-drawn-duration", "y-mean", "y-var", "y-lag1-autocov",
    "y-max-abs", "y-min", "y-at-midpoint", "total-mass", "occupied-mass-fraction",
    "occupied-stick-mass", "emission-mean-at-midpoint", "emission-var-at-midpoint",
    "duration-param-at-midpoint", "row-mass-on-other-occupied", "joint-loglik",
]


def test_a6_geweke_coherence():
    T = 14
    marginal = []
    rng_m = RngStream(101)
    for i in range(4000):
        state, y = prior_generate(_a6_config(), T, seed_or_rng=rng_m.substream(i))
        marginal.append(_a6_stats(state, y))
    marginal = np.array(marginal)

    successive = []
    rng_c = RngStream(555)
    for chain in range(700):
        state, y = prior_generate(_a6_config(), T, seed_or_rng=rng_c.substream(chain))
        for _ in range(25):
            gibbs_sweep(state, y)
            y = generate_obs(state)
        successive.append(_a6_stats(state, y))
    successive = np.array(successive)

    pvals = np.array(
        [ss.ks_2samp(marginal[:, j], successive[:, j]).pvalue for j in range(len(A6_STAT_NAMES))]
    )
    frac = float(np.mean(pvals > 0.01))
    failing = [A6_STAT_NAMES[j] for j in np.nonzero(pvals <= 0.01)[0]]
    ok = frac >= 0.95
    assert _report(
        "A6 whole-model coherence",
        ok,
        f"{(pvals > 0.01).sum()}/{len(pvals)} statistics pass at p>0.01"
        + (f"; failing: {failing}" if failing else ""),
    )


# ---------------------------------------------------------------------------
# A7: model reductions
# ---------------------------------------------------------------------------

def test_a7_reductions():
    # (i) delta-at-zero durations: every sampled duration is exactly zero
    from ihsmm.families import DeltaZeroDuration

    cfg = ModelConfig(
        topology=Topology(FULL),
        emission=GaussianEmission(NigParams(0.0, 0.25, 2.0, 2.0)),
        duration=DeltaZeroDuration(),
        temperature=1.5,
        alpha0=2.0,
        alpha1=2.0,
    )
    state, y = prior_generate(cfg, 60, seed_or_rng=7)
    ok_i = int(np.abs(state.path.r).max()) == 0
    for _ in range(10):
        gibbs_sweep(state, y)
        ok_i = ok_i and int(np.abs(state.path.r).max()) == 0

    # (ii) finite + full topology: rows are plain Dirichlet(alpha1 * beta)
    from ihsmm.transitions import sample_pi
    from ihsmm.weights import compute_beta

    rng = RngStream(11)
    topo = Topology(FINITE, K=3)
    ws = WeightState.for_finite(topo, 1.0, 0.0, rng)
    sample_gamma_prior(ws, 2.0, rng)
    beta = compute_beta(ws)
    alpha1 = 3.0
    draws = np.array([sample_pi(beta, alpha1, None, rng).P[0] for _ in range(40_000)])
    expect_mean = beta.B[0]
    expect_var = expect_mean * (1 - expect_mean) / (alpha1 + 1.0)
    se_mean = np.sqrt(expect_var / draws.shape[0])
    ok_ii = np.all(np.abs(draws.mean(axis=0) - expect_mean) < 4 * se_mean + 1e-12)
    ok_ii = ok_ii and np.all(
        np.abs(draws.var(axis=0) - expect_var) < 0.05 * expect_var + 1e-12
    )

    # (iii) zero discount, growing alpha0: normalized masses pin to the sticks
    rng = RngStream(12)
    ws = WeightState.empty(Topology(IED), 1.0, 0.0)
    ws.positions, ws.birth_ids, ws._next_birth = [1.0, 2.0], [0, 1], 2
    ws.w = np.array([0.45, 0.35])
    ws.w_resid = np.array([0.2])
    spreads = []
    for alpha0 in (1e2, 1e3, 1e4):
        devs = []
        for _ in range(4000):
            sample_gamma_prior(ws, alpha0, rng)
            devs.append(ws.gamma[0] / ws.total_gamma() - 0.45)
        spreads.append(float(np.var(devs)))
    ok_iii = spreads[0] > spreads[1] > spreads[2]

    detail = (
        f"(i) zero-duration reduction exact: {ok_i}; "
        f"(ii) finite rows match Dirichlet moments: {bool(ok_ii)}; "
        f"(iii) mass-around-stick variance decreasing: {np.format_float_scientific(spreads[0], 2)} > "
        f"{np.format_float_scientific(spreads[1], 2)} > {np.format_float_scientific(spreads[2], 2)}"
    )
    assert _report("A7 model reductions", ok_i and ok_ii and ok_iii, detail)
