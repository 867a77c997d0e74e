import numpy as np
import pytest
from scipy import stats

from ihsmm.distributions import GammaPrior, NigParams
from ihsmm.errors import ParameterError
from ihsmm.families import (
    DeltaZeroDuration,
    GaussianEmission,
    GeometricDuration,
    PoissonDuration,
)
from ihsmm.gibbs import (
    ModelConfig,
    gibbs_sweep,
    init_chain,
    map_sample,
    mh_concentration,
    prior_generate,
    run_chain,
)
from ihsmm.rng import RngStream
from ihsmm.topology import FINITE, FULL, IED, LEFT_TO_RIGHT, Topology


def small_config(topology=None, duration=None, temperature=2.0, **kw):
    return ModelConfig(
        topology=topology or Topology(IED),
        emission=GaussianEmission(NigParams(0.0, 0.25, 2.0, 2.0)),
        duration=duration or PoissonDuration(GammaPrior(2.0, 3.0)),
        c=2.0,
        d=0.0,
        temperature=temperature,
        alpha0=3.0,
        alpha1=3.0,
        **kw,
    )


def test_sweep_preserves_invariants():
    cfg = small_config()
    state, y = prior_generate(cfg, T=60, seed_or_rng=1)
    state = init_chain(cfg, y, 2)
    for _ in range(25):
        gibbs_sweep(state, y)
        state.check()
        assert np.isfinite(state.alpha0) and state.alpha0 > 0
        assert np.isfinite(state.alpha1) and state.alpha1 > 0


def test_prior_generate_delta_zero_reduces_to_markov_chain():
    cfg = small_config(topology=Topology(FULL), duration=DeltaZeroDuration())
    state, y = prior_generate(cfg, T=80, seed_or_rng=3)
    assert np.all(state.path.r == 0)


def test_prior_generate_ied_never_repeats_consecutive_segments():
    cfg = small_config()
    state, y = prior_generate(cfg, T=120, seed_or_rng=4)
    segs = state.path.segments()
    for a, b in zip(segs, segs[1:]):
        assert a[0] != b[0]


def test_prior_generate_left_to_right_monotone():
    cfg = small_config(topology=Topology(LEFT_TO_RIGHT), duration=PoissonDuration(GammaPrior(2.0, 5.0)))
    state, y = prior_generate(cfg, T=80, seed_or_rng=5)
    pos = [state.ws.positions[m] for m in state.path.s]
    assert all(a <= b for a, b in zip(pos, pos[1:]))
    seg_pos = [state.ws.positions[s[0]] for s in state.path.segments()]
    assert all(a < b for a, b in zip(seg_pos, seg_pos[1:]))


def test_prior_generate_rejects_bad_T():
    with pytest.raises(ParameterError):
        prior_generate(small_config(), T=0, seed_or_rng=0)


def test_run_chain_deterministic_given_seed():
    cfg = small_config()
    _, y = prior_generate(cfg, T=50, seed_or_rng=6)
    s1, _ = run_chain(cfg, y, n_burn=5, n_samples=5, thin=1, seed=77)
    s2, _ = run_chain(cfg, y, n_burn=5, n_samples=5, thin=1, seed=77)
    for a, b in zip(s1, s2):
        assert a.loglik == b.loglik
        assert np.array_equal(a.path.s, b.path.s)
        assert np.array_equal(a.path.r, b.path.r)
        assert a.alpha0 == b.alpha0


def test_run_chain_zero_samples_still_burns():
    cfg = small_config()
    _, y = prior_generate(cfg, T=40, seed_or_rng=7)
    samples, state = run_chain(cfg, y, n_burn=3, n_samples=0, seed=1)
    assert samples == []
    assert state.sweep_idx == 3


def test_loglik_improves_on_structured_data():
    # data from the model: held-out fit quality rises then plateaus
    cfg = small_config()
    rng = np.random.default_rng(8)
    y = np.concatenate([rng.normal(m, 1.0, 25) for m in (-4.0, 4.0, -4.0, 4.0)])
    samples, _ = run_chain(cfg, y, n_burn=0, n_samples=40, seed=9)
    early = np.mean([s.loglik for s in samples[:5]])
    late = np.mean([s.loglik for s in samples[-10:]])
    assert late > early


def test_map_sample_selects_argmax_and_breaks_ties_left():
    cfg = small_config()
    _, y = prior_generate(cfg, T=40, seed_or_rng=10)
    samples, _ = run_chain(cfg, y, n_burn=2, n_samples=8, seed=3)
    best = map_sample(samples)
    assert best.loglik == max(s.loglik for s in samples)
    scan = samples[int(np.argmax([s.loglik for s in samples]))]
    assert best.sweep == scan.sweep
    assert map_sample([samples[0]]) is samples[0]


def test_map_sample_rejects_empty():
    with pytest.raises(ParameterError):
        map_sample([])


def test_mh_concentration_tiny_step_accepts():
    rng = RngStream(11)
    prior = GammaPrior(1.0, 1.0)
    accepted = 0
    x = 1.0
    for _ in range(200):
        new = mh_concentration(x, lambda a: 0.0, prior, 1e-9, rng)
        accepted += new != x
        x = new
    assert accepted >= 199  # symmetric tiny proposals are all but surely kept


def test_mh_concentration_always_positive():
    rng = RngStream(12)
    x = 0.5
    for _ in range(500):
        x = mh_concentration(x, lambda a: 0.0, GammaPrior(1.0, 1.0), 2.0, rng)
        assert x > 0


def test_mh_concentration_recovers_prior_under_flat_likelihood():
    rng = RngStream(13)
    prior = GammaPrior(2.0, 1.5)
    x = 1.0
    chain = []
    for _ in range(100_000):
        x = mh_concentration(x, lambda a: 0.0, prior, 0.8, rng)
        chain.append(x)
    draws = np.array(chain[2000::20])
    assert stats.kstest(draws, "gamma", args=(2.0, 0.0, 1.5)).pvalue > 0.01


def test_finite_topology_chain_runs():
    cfg = small_config(topology=Topology(FINITE, K=3))
    state, y = prior_generate(cfg, T=50, seed_or_rng=14)
    samples, final = run_chain(cfg, y, n_burn=5, n_samples=5, seed=4)
    assert final.n_tracked == 3
    for s in samples:
        assert s.path.s.max() < 3


def test_slice_validity_after_every_sweep():
    # with parameters held fixed, the new path and the sweep's slice
    # variables must satisfy every indicator
    cfg = small_config(duration=GeometricDuration())
    _, y = prior_generate(cfg, T=50, seed_or_rng=15)
    state = init_chain(cfg, y, 5)
    from ihsmm import beam

    for _ in range(10):
        gibbs_sweep(state, y, path_only=True)
        log_p = beam.conditioning_log_probs(
            state.path, state.log_pi(), state.log_init()[0], cfg.duration, state.lams
        )
        assert np.all(state.slices.log_u < log_p)
    # full sweeps keep the path consistent with the refreshed parameters too
    for _ in range(5):
        gibbs_sweep(state, y)
        state.check()
