"""Run configuration: a flat key/value document (TOML-compatible grammar)
mirrored by :class:`RunConfig`, plus observation-series file I/O.

Every run is reproducible from (config file, seed): the effective
configuration is echoed into the output directory as ``config.echo``.
"""

import sys
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib as _toml
else:
    import tomli as _toml

from .distributions import GammaPrior, NigParams
from .errors import ParameterError
from .families import (
    DelayedGeometricDuration,
    DeltaZeroDuration,
    GaussianEmission,
    GeometricDuration,
    PoissonDuration,
    PoissonEmission,
)
from .gibbs import ModelConfig
from .topology import FINITE, KINDS, Topology

TOPOLOGIES = KINDS
EMISSIONS = ("gaussian", "poisson")
DURATIONS = ("poisson", "geometric", "delayed-geometric", "delta-zero")


@dataclass
class RunConfig:
    # model structure
    topology: str = "ied"
    finite_k: int = 0
    emission: str = "gaussian"
    duration: str = "poisson"
    # gaussian emission prior (normal-scaled-inverse-gamma) and variance pin
    emission_mu0: float = 0.0
    emission_nu0: float = 0.25
    emission_a: float = 1.0
    emission_b: float = 1.0
    emission_fixed_variance: float = 0.0  # 0 = learn the variance
    # poisson emission prior
    emission_rate_shape: float = 1.0
    emission_rate_scale: float = 10.0
    # duration priors
    duration_shape: float = 1.0
    duration_scale: float = 1000.0
    duration_q_a: float = 1.0
    duration_q_b: float = 1.0
    duration_dmax: int = 30
    # weights / concentrations
    c: float = 1.0
    d: float = 0.0
    alpha0: float = 1.0
    alpha1: float = 1.0
    sample_alpha0: bool = True
    sample_alpha1: bool = True
    alpha0_prior_shape: float = 1.0
    alpha0_prior_scale: float = 1.0
    alpha1_prior_shape: float = 1.0
    alpha1_prior_scale: float = 1.0
    # sampler controls
    temperature: float = 1.0
    burn: int = 100
    samples: int = 1000
    thin: int = 1
    seed: int = 0
    t_star: int = -1  # fixed diagnostic time index; -1 = midpoint
    prune_mode: str = "auto"
    # fixed-parameter generation mode (used when gen_means is nonempty)
    gen_means: list = field(default_factory=list)
    gen_var: float = 1.0
    gen_rates: list = field(default_factory=list)
    gen_delays: list = field(default_factory=list)
    gen_qs: list = field(default_factory=list)
    gen_transition: str = "uniform"  # uniform | cycle | chain

    def validate(self):
        if self.topology not in TOPOLOGIES:
            raise ParameterError(f"topology must be one of {TOPOLOGIES}, got {self.topology!r}")
        if self.topology == FINITE and self.finite_k < 1:
            raise ParameterError("finite topology needs finite_k >= 1")
        if self.emission not in EMISSIONS:
            raise ParameterError(f"emission must be one of {EMISSIONS}")
        if self.duration not in DURATIONS:
            raise ParameterError(f"duration must be one of {DURATIONS}")
        if self.temperature <= 0:
            raise ParameterError("temperature must be positive")
        if self.burn < 0 or self.samples < 0 or self.thin < 1:
            raise ParameterError("burn >= 0, samples >= 0, thin >= 1 required")
        return self


def load_config(path):
    with open(path, "rb") as fh:
        raw = _toml.load(fh)
    known = {f.name for f in fields(RunConfig)}
    unknown = set(raw) - known
    if unknown:
        raise ParameterError(f"unknown config keys: {sorted(unknown)}")
    return RunConfig(**raw).validate()


def config_echo(cfg):
    """Effective configuration as a flat TOML document."""
    lines = []
    for key, value in asdict(cfg).items():
        if isinstance(value, bool):
            lines.append(f"{key} = {str(value).lower()}")
        elif isinstance(value, (int, float)):
            lines.append(f"{key} = {value}")
        elif isinstance(value, str):
            lines.append(f'{key} = "{value}"')
        elif isinstance(value, list):
            lines.append(f"{key} = [{', '.join(repr(float(v)) for v in value)}]")
        else:
            raise ParameterError(f"unserializable config value for {key}")
    return "\n".join(lines) + "\n"


def build_emission(cfg):
    if cfg.emission == "gaussian":
        prior = NigParams(cfg.emission_mu0, cfg.emission_nu0, cfg.emission_a, cfg.emission_b)
        fixed = cfg.emission_fixed_variance if cfg.emission_fixed_variance > 0 else None
        return GaussianEmission(prior, fixed_variance=fixed)
    return PoissonEmission(GammaPrior(cfg.emission_rate_shape, cfg.emission_rate_scale))


def build_duration(cfg):
    if cfg.duration == "poisson":
        return PoissonDuration(GammaPrior(cfg.duration_shape, cfg.duration_scale))
    if cfg.duration == "geometric":
        return GeometricDuration(cfg.duration_q_a, cfg.duration_q_b)
    if cfg.duration == "delayed-geometric":
        return DelayedGeometricDuration(cfg.duration_dmax, cfg.duration_q_a, cfg.duration_q_b)
    return DeltaZeroDuration()


def build_model_config(cfg):
    cfg.validate()
    topology = Topology(cfg.topology, K=cfg.finite_k if cfg.topology == FINITE else None)
    return ModelConfig(
        topology=topology,
        emission=build_emission(cfg),
        duration=build_duration(cfg),
        c=cfg.c,
        d=cfg.d,
        temperature=cfg.temperature,
        alpha0=cfg.alpha0,
        alpha1=cfg.alpha1,
        sample_alpha0=cfg.sample_alpha0,
        sample_alpha1=cfg.sample_alpha1,
        alpha0_prior=GammaPrior(cfg.alpha0_prior_shape, cfg.alpha0_prior_scale),
        alpha1_prior=GammaPrior(cfg.alpha1_prior_shape, cfg.alpha1_prior_scale),
        prune_mode=cfg.prune_mode,
    )


# ---------------------------------------------------------------------------
# observation series files
# ---------------------------------------------------------------------------

def read_series(path, integer=False):
    """One observation per row, single numeric column, optional header row.
    Parse failures report the offending row number (1-based)."""
    values = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            text = line.strip()
            if not text or text.startswith("#"):
                continue
            try:
                value = float(text)
            except ValueError:
                if lineno == 1:
                    continue  # header row
                raise ParameterError(f"{path}: row {lineno}: not a number: {text!r}")
            if integer and value != int(value):
                raise ParameterError(f"{path}: row {lineno}: integer required, got {text!r}")
            values.append(value)
    if not values:
        raise ParameterError(f"{path}: no observations")
    arr = np.array(values)
    return arr.astype(np.int64) if integer else arr


def write_series(path, y, header="value"):
    with open(path, "w") as fh:
        fh.write(header + "\n")
        for v in np.asarray(y).ravel():
            fh.write(f"{v}\n")


def write_truth(path, path_obj, state_labels=None):
    """Ground-truth latent path: time, state, remaining duration."""
    with open(path, "w") as fh:
        fh.write("t,state,remaining\n")
        for t, (s, r) in enumerate(zip(path_obj.s, path_obj.r)):
            label = s if state_labels is None else state_labels[int(s)]
            fh.write(f"{t},{label},{r}\n")


def read_truth(path):
    rows = Path(path).read_text().strip().splitlines()[1:]
    s, r = [], []
    for row in rows:
        _, state, rem = row.split(",")
        s.append(int(state))
        r.append(int(rem))
    return np.array(s), np.array(r)
