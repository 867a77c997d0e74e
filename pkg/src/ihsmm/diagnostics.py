"""Posterior summaries: traces, autocorrelations, state-count and
change-point histograms, per-state posterior intervals.

Everything here is a pure function of the sample list, so summaries
recomputed from persisted output are identical to the ones written during
the run.
"""

import csv
import json
from collections import Counter
from pathlib import Path

import numpy as np

from . import beam
from .errors import ParameterError


def autocorrelation(series, max_lag):
    """Biased-normalized sample autocorrelation, rho(0) = 1.

    Convention: a constant series has rho(lag) = 0 for lag > 0.
    """
    x = np.asarray(series, dtype=float)
    if x.size <= max_lag:
        raise ParameterError("series shorter than max_lag")
    x = x - x.mean()
    denom = float(np.dot(x, x))
    out = np.zeros(max_lag + 1)
    out[0] = 1.0
    if denom <= 0.0:
        return out
    for lag in range(1, max_lag + 1):
        out[lag] = float(np.dot(x[:-lag], x[lag:])) / denom
    return out


def state_count_hist(samples):
    """Histogram of states actually occupied by each sample's path."""
    if not samples:
        raise ParameterError("no samples")
    return dict(Counter(s.n_occupied for s in samples))


def changepoints(path):
    """Times where a new segment begins (segment starts after t=0)."""
    return [int(t) for t in path.segment_starts() if t > 0]


def changepoint_count_hist(samples):
    return dict(Counter(len(changepoints(s.path)) for s in samples))


def changepoint_location_hist(samples, T):
    hist = np.zeros(T, dtype=np.int64)
    for s in samples:
        for t in changepoints(s.path):
            hist[t] += 1
    return hist


def joint_loglik(state, y):
    """log p(y, z | pi, theta, lambda) with the documented initial-state term."""
    y = np.asarray(y)
    log_pi = state.log_pi()
    log_init, _ = state.log_init()
    lp = beam.conditioning_log_probs(
        state.path, log_pi, log_init, state.config.duration, state.lams
    )
    emis = state.config.emission.loglik_matrix(y, state.thetas)
    picked = emis[np.arange(y.size), state.path.s]
    return float(lp.sum() + picked.sum())


def fixed_time_traces(samples, emission, duration, t_star):
    """Per-sample emission location and duration statistic of whichever state
    occupies time index t_star."""
    means, rates = [], []
    for s in samples:
        m = int(s.path.s[t_star])
        means.append(float(emission.location(s.thetas[m])))
        rates.append(float(duration.rate_stat(s.lams[m])))
    return np.array(means), np.array(rates)


def state_posteriors(samples, emission, duration):
    """Per birth-id posterior summaries over the sweeps where the state was
    occupied: occupancy count and central 95% intervals."""
    acc = {}
    for s in samples:
        occupied = set(int(v) for v in np.unique(s.path.s))
        for idx in occupied:
            bid = s.birth_ids[idx]
            rec = acc.setdefault(bid, {"locations": [], "rates": []})
            rec["locations"].append(float(emission.location(s.thetas[idx])))
            rec["rates"].append(float(duration.rate_stat(s.lams[idx])))
    rows = []
    for bid in sorted(acc):
        loc = np.array(acc[bid]["locations"])
        rate = np.array(acc[bid]["rates"])
        rows.append(
            {
                "birth_id": bid,
                "occupied_in": loc.size,
                "location_mean": float(loc.mean()),
                "location_q025": float(np.quantile(loc, 0.025)),
                "location_q975": float(np.quantile(loc, 0.975)),
                "rate_mean": float(rate.mean()),
                "rate_q025": float(np.quantile(rate, 0.025)),
                "rate_q975": float(np.quantile(rate, 0.975)),
            }
        )
    return rows


def modal(hist):
    """(mode, posterior mass of the mode) of an integer histogram."""
    total = sum(hist.values())
    mode, count = max(hist.items(), key=lambda kv: (kv[1], -kv[0]))
    return int(mode), count / total


# ---------------------------------------------------------------------------
# plot-ready files
# ---------------------------------------------------------------------------

def _write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def write_diagnostics(outdir, samples, emission, duration, T, t_star=None, max_lag=100):
    """One CSV per figure analog plus a machine-readable summary document."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    t_star = T // 2 if t_star is None else t_star

    _write_csv(
        outdir / "loglik_trace.csv",
        ["sweep", "joint_loglik"],
        [(s.sweep, s.loglik) for s in samples],
    )

    means, rates = fixed_time_traces(samples, emission, duration, t_star)
    lag_cap = min(max_lag, len(samples) - 1)
    ac_mean = autocorrelation(means, lag_cap)
    ac_rate = autocorrelation(rates, lag_cap)
    _write_csv(
        outdir / "autocorrelation.csv",
        ["lag", "acf_location", "acf_duration"],
        list(zip(range(lag_cap + 1), ac_mean, ac_rate)),
    )

    counts = state_count_hist(samples)
    _write_csv(
        outdir / "state_count_hist.csv",
        ["n_states", "n_samples"],
        sorted(counts.items()),
    )

    cp_counts = changepoint_count_hist(samples)
    _write_csv(
        outdir / "changepoint_count_hist.csv",
        ["n_changepoints", "n_samples"],
        sorted(cp_counts.items()),
    )

    loc_hist = changepoint_location_hist(samples, T)
    _write_csv(
        outdir / "changepoint_location_hist.csv",
        ["t", "n_samples"],
        list(enumerate(loc_hist.tolist())),
    )

    rows = state_posteriors(samples, emission, duration)
    _write_csv(
        outdir / "state_posteriors.csv",
        [
            "birth_id", "occupied_in", "location_mean", "location_q025",
            "location_q975", "rate_mean", "rate_q025", "rate_q975",
        ],
        [[r[k] for k in (
            "birth_id", "occupied_in", "location_mean", "location_q025",
            "location_q975", "rate_mean", "rate_q025", "rate_q975",
        )] for r in rows],
    )

    mode_states, mass_states = modal(counts)
    mode_cp, mass_cp = modal(cp_counts)
    summary = {
        "n_samples": len(samples),
        "modal_state_count": mode_states,
        "modal_state_count_mass": mass_states,
        "modal_changepoint_count": mode_cp,
        "modal_changepoint_count_mass": mass_cp,
        "map_loglik": max(s.loglik for s in samples),
        "map_sweep": max(samples, key=lambda s: s.loglik).sweep,
        "t_star": t_star,
        "forward_backend": beam.forward_backend(),
    }
    with open(outdir / "summary.json", "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
    return summary
