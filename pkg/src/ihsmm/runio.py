"""Run artifacts: the JSONL sample stream and the fit/diagnostics pipeline.

One JSON object per retained sample: run-length-encoded path, per-state
parameters, weights, hyperparameters, joint log-likelihood. Reading the
stream back reconstructs samples that reproduce every diagnostic exactly.
"""

import json
from pathlib import Path

import numpy as np

from . import diagnostics
from .config import build_model_config, config_echo
from .gibbs import ChainSample, run_chain
from .paths import path_from_segments

SCHEMA_VERSION = 1


def sample_to_record(sample, emission, duration):
    occupied = set(int(v) for v in np.unique(sample.path.s))
    states = {}
    for idx, bid in enumerate(sample.birth_ids):
        states[str(bid)] = {
            "emission": emission.describe(sample.thetas[idx]),
            "duration": duration.describe(sample.lams[idx]),
            "w": float(sample.w[idx]),
            "gamma": float(sample.gamma[idx]),
            "position": float(sample.positions[idx]),
            "occupied": idx in occupied,
        }
    return {
        "schema_version": SCHEMA_VERSION,
        "sweep": sample.sweep,
        "loglik": sample.loglik,
        "alpha0": sample.alpha0,
        "alpha1": sample.alpha1,
        "path": [
            [sample.birth_ids[seg[0]], seg[1], seg[2], seg[3]]
            for seg in sample.path.segments()
        ],
        "w_resid": [float(v) for v in sample.w_resid],
        "gamma_resid": [float(v) for v in sample.gamma_resid],
        "states": states,
    }


def record_to_sample(record, emission, duration):
    bids = [int(b) for b in record["states"]]
    index_of = {b: i for i, b in enumerate(bids)}
    segments = [
        (index_of[int(bid)], start, length, r0)
        for bid, start, length, r0 in record["path"]
    ]
    info = [record["states"][str(b)] for b in bids]
    return ChainSample(
        sweep=int(record["sweep"]),
        loglik=float(record["loglik"]),
        path=path_from_segments(segments),
        birth_ids=tuple(bids),
        positions=tuple(v["position"] for v in info),
        w=np.array([v["w"] for v in info]),
        w_resid=np.array(record["w_resid"]),
        gamma=np.array([v["gamma"] for v in info]),
        gamma_resid=np.array(record["gamma_resid"]),
        thetas=tuple(emission.param_from_json(v["emission"]) for v in info),
        lams=tuple(duration.param_from_json(v["duration"]) for v in info),
        alpha0=float(record["alpha0"]),
        alpha1=float(record["alpha1"]),
    )


def write_samples_jsonl(path, samples, emission, duration):
    with open(path, "w") as fh:
        for sample in samples:
            fh.write(json.dumps(sample_to_record(sample, emission, duration)) + "\n")


def read_samples_jsonl(path, emission, duration):
    out = []
    with open(path) as fh:
        for line in fh:
            if line.strip():
                out.append(record_to_sample(json.loads(line), emission, duration))
    return out


def run_fit(run_cfg, y, outdir, progress=None):
    """Fit a series and write the full artifact set into ``outdir``:
    samples.jsonl, diagnostics/*.csv, summary.json, config.echo."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    model_cfg = build_model_config(run_cfg)
    samples, state = run_chain(
        model_cfg,
        y,
        n_burn=run_cfg.burn,
        n_samples=run_cfg.samples,
        thin=run_cfg.thin,
        seed=run_cfg.seed,
        progress=progress,
    )
    (outdir / "config.echo").write_text(config_echo(run_cfg))
    write_samples_jsonl(outdir / "samples.jsonl", samples, model_cfg.emission, model_cfg.duration)
    t_star = run_cfg.t_star if run_cfg.t_star >= 0 else len(y) // 2
    summary = diagnostics.write_diagnostics(
        outdir / "diagnostics",
        samples,
        model_cfg.emission,
        model_cfg.duration,
        T=len(y),
        t_star=t_star,
    )
    with open(outdir / "summary.json", "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
    return samples, state, summary
