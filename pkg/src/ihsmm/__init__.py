"""Infinite hidden semi-Markov models with structured transitions.

Generative sampling and blocked-Gibbs posterior inference for explicit
duration infinite HMMs built on a shared gamma process over partition cells:
no-self-transition chains with per-state dwell distributions, infinite
left-to-right chains for change-point analysis, and their full / finite
degenerations. The latent path is resampled jointly by a temperature
controlled beam (slice) sampler whose forward pass runs in a compiled kernel
when available.
"""

from .beam import (
    ForwardTable,
    SliceVars,
    backward_sample,
    forward_backend,
    forward_pass,
    sample_slices,
    transition_prob,
)
from .distributions import (
    GammaPrior,
    NigParams,
    gamma_poisson_update,
    nig_update,
    sample_dirichlet,
    sample_gamma,
    stick_breaking_py,
)
from .errors import ConsistencyError, ParameterError
from .families import (
    DelayedGeometricDuration,
    DeltaZeroDuration,
    FixedCategoricalDuration,
    GaussianEmission,
    GeometricDuration,
    PoissonDuration,
    PoissonEmission,
    sample_params_posterior,
)
from .gibbs import (
    ChainSample,
    ChainState,
    ModelConfig,
    gibbs_sweep,
    init_chain,
    map_sample,
    mh_concentration,
    prior_generate,
    run_chain,
)
from .paths import LatentPath
from .rng import RngStream
from .topology import Topology, partition, reachable
from .transitions import CountMatrix, TransitionMatrix, count_transitions, sample_pi
from .weights import (
    BetaRows,
    WeightState,
    compute_beta,
    gibbs_gamma,
    init_distribution,
    instantiate_state,
    mh_stick_weights,
    prune_states,
    sample_gamma_prior,
    sample_table_counts,
)
from .diagnostics import autocorrelation, changepoints, joint_loglik, state_count_hist

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
