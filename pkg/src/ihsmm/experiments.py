"""One-command desk-scale experiments.

Each experiment writes a complete artifact set (series, samples.jsonl,
diagnostics CSVs, summary.json, config.echo) plus a machine-readable
results.json with the quantities the acceptance gates assert on.

* ied-synth    four-state explicit-duration chain, Gaussian emissions
* ilr-synth    five-state left-to-right chain (change-point structure)
* coal         yearly mining disaster counts, 1851-1962 (bundled)
* morse-synth  three states distinguishable only by dwell time, fit with
               explicit durations vs. a zero-duration (plain Markov) model
"""

import hashlib
import json
from importlib import resources
from pathlib import Path

import numpy as np
from scipy.optimize import linear_sum_assignment

from . import diagnostics
from .config import RunConfig, build_model_config, write_series, write_truth
from .errors import ParameterError
from .gibbs import map_sample
from .paths import LatentPath
from .rng import RngStream
from .runio import run_fit

COAL_SHA256 = "f0c042c7bf4457388b72ec77d0000fd981665fc81da43a8e229b5265dffc81fc"
COAL_FIRST_YEAR = 1851

EXPERIMENT_NAMES = ("ied-synth", "ilr-synth", "coal", "morse-synth")


# ---------------------------------------------------------------------------
# fixed-parameter generation
# ---------------------------------------------------------------------------

def generate_fixed(cfg, T, seed):
    """Ancestral draw from a fully specified finite model (no hierarchy):
    per-state emission/duration parameters from the gen_* config fields."""
    if T < 1:
        raise ParameterError("T must be >= 1")
    means = list(cfg.gen_means)
    if not means:
        raise ParameterError("fixed generation needs gen_means")
    K = len(means)
    rng = RngStream(seed)

    def draw_duration(state):
        if cfg.gen_rates:
            return int(rng.poisson(cfg.gen_rates[state]))
        if cfg.gen_qs:
            delay = int(cfg.gen_delays[state]) if cfg.gen_delays else 0
            return delay + int(rng.geometric(cfg.gen_qs[state])) - 1
        return 0  # delta at zero

    def next_state(state):
        if cfg.gen_transition == "chain":
            return min(state + 1, K - 1)
        if cfg.gen_transition == "cycle":
            return (state + 1) % K
        choices = [k for k in range(K) if k != state]
        return choices[rng.categorical(np.ones(len(choices)))]

    s = np.empty(T, dtype=np.int64)
    r = np.empty(T, dtype=np.int64)
    if cfg.gen_transition == "chain":
        # every state must appear with a *representative* dwell (within a
        # factor two of its mean), and the tail state needs room
        for _ in range(1000):
            dwells = [draw_duration(k) + 1 for k in range(K - 1)]
            typical = all(
                0.5 * (cfg.gen_rates[k] + 1) <= dwells[k] <= 2.0 * (cfg.gen_rates[k] + 1)
                for k in range(K - 1)
            ) if cfg.gen_rates else True
            if typical and sum(dwells) <= T - max(5, T // 30):
                break
        else:
            raise ParameterError("chain dwells do not fit the series length")
        t = 0
        for k, dwell in enumerate(dwells):
            s[t : t + dwell] = k
            r[t : t + dwell] = np.arange(dwell - 1, -1, -1)
            t += dwell
        s[t:] = K - 1
        r[t:] = np.arange(T - t - 1, -1, -1)
    else:
        t = 0
        state = int(rng.categorical(np.ones(K)))
        while t < T:
            dur = draw_duration(state)
            dwell = min(dur + 1, T - t)
            s[t : t + dwell] = state
            r[t : t + dwell] = np.arange(dur, dur - dwell, -1)
            t += dwell
            state = next_state(state)
    path = LatentPath(s, r)

    if cfg.emission == "poisson":
        y = np.array([rng.poisson(means[int(m)]) for m in s], dtype=float)
    else:
        sd = np.sqrt(cfg.gen_var)
        y = np.array([rng.normal(means[int(m)], sd) for m in s])
    return y, path


# ---------------------------------------------------------------------------
# bundled data
# ---------------------------------------------------------------------------

def coal_series():
    """Yearly count of major mining disasters, 1851-1962; checksum-pinned."""
    ref = resources.files("ihsmm").joinpath("data/coal_disasters.csv")
    payload = ref.read_bytes()
    digest = hashlib.sha256(payload).hexdigest()
    if digest != COAL_SHA256:
        raise ParameterError(f"coal dataset checksum mismatch: {digest}")
    values = [int(v) for v in payload.decode().strip().splitlines()[1:]]
    return np.array(values, dtype=np.int64)


# ---------------------------------------------------------------------------
# experiment configurations
# ---------------------------------------------------------------------------

def ied_synth_config(seed=0, burn=100, samples=1000):
    return RunConfig(
        topology="ied",
        emission="gaussian",
        duration="poisson",
        emission_mu0=0.0, emission_nu0=0.25, emission_a=1.0, emission_b=1.0,
        duration_shape=1.0, duration_scale=1000.0,
        c=2.0, d=0.0, alpha0=2.0, alpha1=2.0,
        temperature=3.0, burn=burn, samples=samples, seed=seed,
        gen_means=[-6.0, -2.0, 2.0, 6.0],
        gen_rates=[10.0, 20.0, 3.0, 7.0],
        gen_var=1.0,
        gen_transition="uniform",
    )


def ilr_synth_config(seed=0, burn=100, samples=1000):
    return RunConfig(
        topology="left-to-right",
        emission="gaussian",
        duration="poisson",
        emission_mu0=0.0, emission_nu0=0.25, emission_a=1.0, emission_b=1.0,
        duration_shape=1.0, duration_scale=1000.0,
        c=2.0, d=0.0, alpha0=2.0, alpha1=2.0,
        temperature=3.0, burn=burn, samples=samples, seed=seed,
        gen_means=[-4.0, 0.0, 4.0, 0.0, -4.0],
        gen_rates=[30.0, 10.0, 50.0, 30.0, 1.0],  # last rate unused (censored)
        gen_var=1.0,
        gen_transition="chain",
    )


def coal_config(seed=0, burn=100, samples=1000):
    return RunConfig(
        topology="left-to-right",
        emission="poisson",
        duration="poisson",
        emission_rate_shape=1.0, emission_rate_scale=10.0,
        duration_shape=1.0, duration_scale=100.0,
        c=2.0, d=0.0, alpha0=2.0, alpha1=2.0,
        temperature=3.0, burn=burn, samples=samples, seed=seed,
    )


def morse_synth_config(seed=0, burn=100, samples=500):
    # three latent states: silence, dot, dash. The tones share an emission
    # mean AND a mean dwell; they differ only in dwell *shape* (dot: delay 4
    # plus a short geometric tail; dash: plain geometric). A zero-duration
    # chain sees identical emissions and identical self-transition rates, so
    # it can only merge them; the explicit-duration fit separates the shapes.
    return RunConfig(
        topology="ied",
        emission="gaussian",
        duration="delayed-geometric",
        emission_mu0=0.0, emission_nu0=0.25, emission_a=1.0, emission_b=1.0,
        duration_dmax=30, duration_q_a=1.0, duration_q_b=1.0,
        c=2.0, d=0.0, alpha0=2.0, alpha1=2.0,
        temperature=3.0, burn=burn, samples=samples, seed=seed,
        gen_means=[0.0, 4.0, 4.0],
        gen_delays=[0.0, 4.0, 0.0],
        gen_qs=[0.25, 0.9, 0.196],
        gen_var=1.0,
        gen_transition="cycle",
    )


def morse_delta_config(seed=0, burn=100, samples=500):
    # duration-blind baseline: zero durations (plain Markov dynamics) with a
    # large fixed row concentration. Tying every transition row to the shared
    # measure is the analog of a shared self-transition bias: it stops the
    # chain from specializing per-state dwells or chaining states to mimic a
    # dwell shape, so states are distinguishable by emissions alone.
    return RunConfig(
        topology="full",
        emission="gaussian",
        duration="delta-zero",
        emission_mu0=0.0, emission_nu0=0.25, emission_a=1.0, emission_b=1.0,
        c=2.0, d=0.0, alpha0=2.0, alpha1=20.0, sample_alpha1=False,
        temperature=1.0, burn=burn, samples=samples, seed=seed,
    )


def _morse_generate(cfg, T, seed):
    """Silence alternating with a coin-flip choice of short or long tone."""
    rng = RngStream(seed)
    s, r = [], []
    state = 0
    while len(s) < T:
        delay = int(cfg.gen_delays[state])
        q = cfg.gen_qs[state]
        dur = delay + int(rng.geometric(q)) - 1
        dwell = min(dur + 1, T - len(s))
        s.extend([state] * dwell)
        r.extend(range(dur, dur - dwell, -1))
        state = 1 + int(rng.random() < 0.5) if state == 0 else 0
    path = LatentPath(np.array(s), np.array(r))
    y = np.array([rng.normal(cfg.gen_means[int(m)], np.sqrt(cfg.gen_var)) for m in path.s])
    return y, path


# ---------------------------------------------------------------------------
# result assembly
# ---------------------------------------------------------------------------

def _matched_state_intervals(samples, emission, duration, true_means, true_rates):
    """Match true states to MAP-sample states by mean proximity, then read the
    matched states' central 95% posterior intervals."""
    best = map_sample(samples)
    occupied = sorted(set(int(v) for v in np.unique(best.path.s)))
    map_means = [emission.location(best.thetas[i]) for i in occupied]
    cost = np.abs(np.subtract.outer(true_means, map_means))
    rows, cols = linear_sum_assignment(cost)
    posterior = {r["birth_id"]: r for r in diagnostics.state_posteriors(samples, emission, duration)}
    matched = []
    for i, j in zip(rows, cols):
        bid = best.birth_ids[occupied[j]]
        stats = posterior[bid]
        matched.append(
            {
                "true_mean": float(true_means[i]),
                "true_rate": float(true_rates[i]) if true_rates is not None else None,
                "birth_id": bid,
                "map_mean": float(map_means[j]),
                "mean_q025": stats["location_q025"],
                "mean_q975": stats["location_q975"],
                "rate_q025": stats["rate_q025"],
                "rate_q975": stats["rate_q975"],
                "mean_inside": bool(stats["location_q025"] <= true_means[i] <= stats["location_q975"]),
                "rate_inside": (
                    bool(stats["rate_q025"] <= true_rates[i] <= stats["rate_q975"])
                    if true_rates is not None
                    else None
                ),
            }
        )
    return matched


def _acf_first_below(samples, emission, duration, t_star, threshold=0.2, max_lag=50):
    means, _ = diagnostics.fixed_time_traces(samples, emission, duration, t_star)
    acf = diagnostics.autocorrelation(means, min(max_lag, len(means) - 1))
    below = np.nonzero(acf < threshold)[0]
    return int(below[0]) if below.size else -1


# ---------------------------------------------------------------------------
# the experiments
# ---------------------------------------------------------------------------

def run_ied_synth(outdir, seed=0, burn=100, samples=1000, T=500):
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    cfg = ied_synth_config(seed=seed, burn=burn, samples=samples)
    y, truth = generate_fixed(cfg, T, seed)
    write_series(outdir / "series.csv", y)
    write_truth(outdir / "truth.csv", truth)
    posterior, state, summary = run_fit(cfg, y, outdir)
    model = build_model_config(cfg)
    matched = _matched_state_intervals(
        posterior, model.emission, model.duration, cfg.gen_means, cfg.gen_rates
    )
    results = {
        "experiment": "ied-synth",
        "modal_state_count": summary["modal_state_count"],
        "modal_state_count_mass": summary["modal_state_count_mass"],
        "true_means": cfg.gen_means,
        "true_rates": cfg.gen_rates,
        "matched_states": matched,
        "acf_location_first_below_0.2": _acf_first_below(
            posterior, model.emission, model.duration, T // 2
        ),
    }
    (outdir / "results.json").write_text(json.dumps(results, indent=2))
    return results


def run_ilr_synth(outdir, seed=0, burn=100, samples=1000, T=150):
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    cfg = ilr_synth_config(seed=seed, burn=burn, samples=samples)
    y, truth = generate_fixed(cfg, T, seed)
    write_series(outdir / "series.csv", y)
    write_truth(outdir / "truth.csv", truth)
    posterior, state, summary = run_fit(cfg, y, outdir)

    # per-ordinal duration-rate variance among samples with the modal segment count
    modal_cp = summary["modal_changepoint_count"]
    rates_by_position = [[] for _ in range(modal_cp + 1)]
    for s in posterior:
        segs = s.path.segments()
        if len(segs) != modal_cp + 1:
            continue
        for k, seg in enumerate(segs):
            rates_by_position[k].append(float(s.lams[seg[0]]))
    variances = [float(np.var(v)) if v else float("nan") for v in rates_by_position]
    results = {
        "experiment": "ilr-synth",
        "modal_changepoint_count": modal_cp,
        "modal_changepoint_count_mass": summary["modal_changepoint_count_mass"],
        "duration_rate_variance_by_position": variances,
        "final_position_variance_is_largest": bool(
            np.nanargmax(variances) == len(variances) - 1
        ),
    }
    (outdir / "results.json").write_text(json.dumps(results, indent=2))
    return results


def run_coal(outdir, seed=0, burn=100, samples=1000):
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    y = coal_series()
    cfg = coal_config(seed=seed, burn=burn, samples=samples)
    write_series(outdir / "series.csv", y, header="count")
    posterior, state, summary = run_fit(cfg, y.astype(float), outdir)

    counts = diagnostics.changepoint_count_hist(posterior)
    total = sum(counts.values())
    support_1_5 = sum(v for k, v in counts.items() if 1 <= k <= 5) / total
    locs = diagnostics.changepoint_location_hist(posterior, len(y))
    peaks = _top_two_separated_peaks(locs, min_separation=20)
    results = {
        "experiment": "coal",
        "modal_changepoint_count": summary["modal_changepoint_count"],
        "modal_changepoint_count_mass": summary["modal_changepoint_count_mass"],
        "changepoint_count_hist": {str(k): v for k, v in sorted(counts.items())},
        "support_mass_1_to_5": support_1_5,
        "top_peaks_years_after_start": peaks,
        "first_year": COAL_FIRST_YEAR,
    }
    (outdir / "results.json").write_text(json.dumps(results, indent=2))
    return results


def _top_two_separated_peaks(hist, min_separation=20):
    order = np.argsort(hist)[::-1]
    peaks = []
    for t in order:
        if hist[t] == 0:
            break
        if all(abs(int(t) - p) >= min_separation for p in peaks):
            peaks.append(int(t))
        if len(peaks) == 2:
            break
    return peaks


def run_morse_synth(outdir, seed=0, burn=100, samples=500, T=420):
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    cfg = morse_synth_config(seed=seed, burn=burn, samples=samples)
    y, truth = _morse_generate(cfg, T, seed)
    write_series(outdir / "series.csv", y)
    write_truth(outdir / "truth.csv", truth)

    posterior, _, summary = run_fit(cfg, y, outdir / "explicit-duration")
    delta_cfg = morse_delta_config(seed=seed, burn=burn, samples=samples)
    posterior_d, _, summary_d = run_fit(delta_cfg, y, outdir / "delta-zero")

    results = {
        "experiment": "morse-synth",
        "explicit_duration": {
            "modal_state_count": summary["modal_state_count"],
            "modal_state_count_mass": summary["modal_state_count_mass"],
        },
        "delta_zero": {
            "modal_state_count": summary_d["modal_state_count"],
            "modal_state_count_mass": summary_d["modal_state_count_mass"],
        },
    }
    (outdir / "results.json").write_text(json.dumps(results, indent=2))
    return results


def run_experiment(name, outdir, seed=0, burn=None, samples=None):
    if name == "ied-synth":
        return run_ied_synth(outdir, seed=seed, burn=burn or 100, samples=samples or 1000)
    if name == "ilr-synth":
        return run_ilr_synth(outdir, seed=seed, burn=burn or 100, samples=samples or 1000)
    if name == "coal":
        return run_coal(outdir, seed=seed, burn=burn or 100, samples=samples or 1000)
    if name == "morse-synth":
        return run_morse_synth(outdir, seed=seed, burn=burn or 100, samples=samples or 500)
    raise ParameterError(f"unknown experiment {name!r}; choose from {EXPERIMENT_NAMES}")
