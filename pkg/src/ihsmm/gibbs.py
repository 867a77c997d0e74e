"""Blocked-Gibbs sweeps, ancestral generation, and chain management.

One sweep resamples, in order: slice variables; any states the slice bound
demands (residual transition mass must sit below every u_t before the forward
pass); the full path by forward filtering / backward sampling; then prunes
trailing unused states, reseats transition counts in the restaurant
representation, Gibbs-samples the cell masses, random-walks the stick weights
and concentrations, redraws the transition rows, and refreshes per-state
emission/duration parameters. Concentration and table-count updates happen
*before* the transition rows are redrawn: their collapsed likelihoods are
only valid conditionals when pi is reinstantiated afterwards.
"""

import copy
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln

from . import beam, diagnostics
from .distributions import GammaPrior, TINY, gamma_logpdf
from .errors import ConsistencyError, ParameterError
from .paths import LatentPath
from .rng import RngStream
from .topology import FINITE, FULL, IED
from .transitions import TransitionMatrix, count_transitions, sample_pi
from .weights import (
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

MAX_INSTANTIATIONS = 10_000


@dataclass
class ModelConfig:
    """Everything that determines a model instance."""

    topology: object
    emission: object
    duration: object
    c: float = 1.0
    d: float = 0.0
    temperature: float = 1.0
    alpha0: float = 1.0
    alpha1: float = 1.0
    sample_alpha0: bool = True
    sample_alpha1: bool = True
    alpha0_prior: GammaPrior = field(default_factory=lambda: GammaPrior(1.0, 1.0))
    alpha1_prior: GammaPrior = field(default_factory=lambda: GammaPrior(1.0, 1.0))
    alpha_step: float = 0.4
    w_step: float = 0.6
    w_passes: int = 2
    prune_mode: str = "auto"  # tail | all | auto (all for left-to-right)
    duration_horizon_mult: int = 4  # candidate-duration cap, in multiples of T

    def resolved_prune_mode(self):
        if self.prune_mode != "auto":
            return self.prune_mode
        return "all" if self.topology.kind == "left-to-right" else "tail"


@dataclass
class ChainState:
    config: ModelConfig
    ws: WeightState
    pi: TransitionMatrix
    thetas: list
    lams: list
    path: LatentPath | None
    alpha0: float
    alpha1: float
    rng: RngStream
    slices: object = None
    beta: object = None
    sweep_idx: int = 0

    @property
    def n_tracked(self):
        return self.ws.n_tracked

    def log_pi(self):
        with np.errstate(divide="ignore"):
            return np.log(self.pi.P)

    def log_init(self):
        p_tracked, p_resid = init_distribution(self.ws)
        with np.errstate(divide="ignore"):
            return np.log(p_tracked), p_resid

    def check(self):
        self.ws.check()
        self.pi.check()
        if self.path is not None:
            self.path.validate()
            if self.path.s.max() >= self.n_tracked:
                raise ConsistencyError("path references an untracked state")


@dataclass(frozen=True)
class ChainSample:
    """Immutable posterior snapshot."""

    sweep: int
    loglik: float
    path: LatentPath
    birth_ids: tuple
    positions: tuple
    w: np.ndarray
    w_resid: np.ndarray
    gamma: np.ndarray
    gamma_resid: np.ndarray
    thetas: tuple
    lams: tuple
    alpha0: float
    alpha1: float

    @property
    def n_occupied(self):
        return int(np.unique(self.path.s).size)


# ---------------------------------------------------------------------------
# construction
# ---------------------------------------------------------------------------

def _fresh_weights(config, rng):
    if config.topology.kind == FINITE:
        ws = WeightState.for_finite(config.topology, config.c, config.d, rng)
    else:
        ws = WeightState.empty(config.topology, config.c, config.d)
    sample_gamma_prior(ws, config.alpha0, rng)
    return ws


def _empty_pi(ws):
    return TransitionMatrix(np.zeros((0, 0)), np.zeros((0, ws.n_cells)))


def _instantiate(state, cell_idx):
    idx = instantiate_state(state.ws, state.pi, state.alpha0, state.alpha1, cell_idx, state.rng)
    state.thetas.append(state.config.emission.sample_prior_params(state.rng))
    state.lams.append(state.config.duration.sample_prior_params(state.rng))
    return idx


def init_chain(config, y, seed_or_rng):
    """Initial chain state: hierarchical prior draw for the weights, one
    tracked state occupying the whole sequence, parameters refreshed from
    their posteriors given that assignment."""
    rng = seed_or_rng if isinstance(seed_or_rng, RngStream) else RngStream(seed_or_rng)
    y = np.asarray(y)
    if y.size == 0:
        raise ParameterError("need a nonempty observation sequence")
    config = copy.deepcopy(config)
    ws = _fresh_weights(config, rng)
    state = ChainState(
        config=config,
        ws=ws,
        pi=_empty_pi(ws),
        thetas=[],
        lams=[],
        path=None,
        alpha0=config.alpha0,
        alpha1=config.alpha1,
        rng=rng,
    )
    if config.topology.kind == FINITE:
        state.beta = compute_beta(ws)
        state.pi = sample_pi(state.beta, state.alpha1, None, rng)
        state.thetas = [config.emission.sample_prior_params(rng) for _ in range(ws.n_tracked)]
        state.lams = [config.duration.sample_prior_params(rng) for _ in range(ws.n_tracked)]
    else:
        _instantiate(state, 0)
        state.beta = compute_beta(state.ws)
    state.path = _init_path(state, y)
    _parameter_block(state, y, count_transitions(state.path, state.n_tracked))
    return state


INIT_BLOCK = 8  # initial paths start finely segmented: coarsening mixes fast,
                # but a coarse start locks duration rates too high for the
                # slice to ever admit short segments


def _init_path(state, y):
    """Data-driven initial segmentation: short blocks assigned to states by
    block-mean quantile (left-to-right: one fresh state per block, in order).

    Any valid path works as an MCMC start; this one seeds distinct emission
    levels and small duration rates so early sweeps can move.
    """
    config = state.config
    T = y.size
    cap = getattr(config.duration, "prefix_support_cap", lambda: None)()
    L = max(1, min(INIT_BLOCK, T, (cap + 1) if cap is not None else INIT_BLOCK))
    starts = list(range(0, T, L))
    block_means = np.array([float(np.mean(y[a : min(a + L, T)])) for a in starts])
    n_blocks = len(starts)

    lr = config.topology.kind == "left-to-right"
    if lr:
        labels = np.arange(n_blocks)
        n_states = n_blocks
    elif config.topology.kind == FINITE:
        n_states = state.config.topology.K
        labels = _quantile_bins(block_means, n_states)
    else:
        n_states = int(min(10, max(2, round(np.sqrt(n_blocks)))))
        labels = _quantile_bins(block_means, n_states)
        # adjacent same-label blocks merge into one segment below
    if cap == 0 and config.topology.kind == IED:
        for i in range(1, n_blocks):  # no self-transitions at zero duration
            if labels[i] == labels[i - 1]:
                labels[i] = (labels[i] + 1) % n_states
    while state.n_tracked < n_states:
        cell = state.ws.n_cells - 1 if lr else int(np.argmax(state.ws.gamma_resid))
        _instantiate(state, cell)  # left-to-right: tail keeps positions ordered

    s = np.empty(T, dtype=np.int64)
    for a, lab in zip(starts, labels):
        s[a : a + L] = lab
    if cap == 0:
        return LatentPath(s, np.zeros(T, dtype=np.int64))
    r = np.empty(T, dtype=np.int64)
    seg_end = T
    for t in range(T - 1, -1, -1):
        if t + 1 < T and s[t] != s[t + 1]:
            seg_end = t + 1
        r[t] = seg_end - t - 1
    return LatentPath(s, r)


def _quantile_bins(values, n_bins):
    order = np.argsort(np.argsort(values, kind="stable"), kind="stable")
    return (order * n_bins) // len(values)


def _ancestral_path(state, T):
    """Path drawn from the model dynamics; residual states are instantiated as
    the trajectory needs them."""
    s = np.empty(T, dtype=np.int64)
    r = np.empty(T, dtype=np.int64)
    duration = state.config.duration
    s[0] = _draw_cell(state, lambda: state.ws.gamma, lambda: state.ws.gamma_resid)
    r[0] = duration.sample(state.lams[s[0]], state.rng)
    for t in range(1, T):
        if r[t - 1] > 0:
            s[t] = s[t - 1]
            r[t] = r[t - 1] - 1
        else:
            m = int(s[t - 1])
            s[t] = _draw_cell(state, lambda: state.pi.P[m], lambda: state.pi.P_resid[m])
            r[t] = duration.sample(state.lams[s[t]], state.rng)
    return LatentPath(s, r)


# ---------------------------------------------------------------------------
# the sweep
# ---------------------------------------------------------------------------

SUPPORT_FLOOR = 1e-12


def _row_u_mins(table, log_u):
    """Per tracked row, the smallest u_t over the times where the row carries
    forward mass at r=0 (inf if never supported).

    Only predecessors with non-negligible forward mass (relative floor
    ``SUPPORT_FLOOR``) can demand materialization; candidates reachable solely
    through sub-floor mass contribute O(T * floor) total variation. Without
    the floor a left-to-right chain would have to materialize states forever,
    since the rightmost row always concentrates on its tail cell.
    """
    a0 = table.alpha[:-1, :, 0] > SUPPORT_FLOOR  # predecessor support for t = 1..T-1
    u = np.exp(log_u[1:])
    out = np.full(table.n_states, np.inf)
    for m in range(table.n_states):
        ts = a0[:, m]
        if ts.any():
            out[m] = float(u[ts].min())
    return out


def _has_violation(state, row_u, init_resid, u0):
    if init_resid.size and float(init_resid.max()) >= u0:
        return True
    resid = state.pi.P_resid
    if not resid.size:
        return False
    rows = np.isfinite(row_u)
    return bool(np.any(resid[rows] >= row_u[rows, None]))


def _shrink_residuals(state, row_u, u0, log_emit, y):
    """Split states off residual cells until every cell's mass sits below the
    supported per-row u minima (and below u_1 for the initial row). Splits
    leave existing forward-table entries untouched, so no re-run is needed
    between them; new states start unsupported."""
    n_new = 0
    config = state.config
    while True:
        _, init_resid = state.log_init()
        worst_ratio, cell = 0.0, -1
        if init_resid.size:
            j = int(np.argmax(init_resid))
            worst_ratio = float(init_resid[j]) / u0
            cell = j
        resid = state.pi.P_resid
        if resid.size and np.isfinite(row_u).any():
            rows = np.isfinite(row_u)
            ratio = resid[rows] / row_u[rows, None]
            j = int(np.argmax(ratio.max(axis=0)))
            r = float(ratio[:, j].max())
            if r > worst_ratio:
                worst_ratio, cell = r, j
        if worst_ratio < 1.0 or cell < 0:
            return log_emit, n_new
        idx = _instantiate(state, cell)
        row_u = np.append(row_u, np.inf)  # fresh states carry no support yet
        log_emit = np.concatenate(
            [log_emit, config.emission.loglik_matrix(y, [state.thetas[idx]])], axis=1
        )
        n_new += 1
        if n_new > MAX_INSTANTIATIONS:
            raise ConsistencyError("slice bound unreachable; residual mass will not shrink")


def sample_path(state, y, log_emit=None):
    """Slice draw, state instantiation to the slice bound, forward pass, and
    backward path draw (in place).

    Instantiation runs to a fixpoint around the forward pass: the pass is
    repeated whenever a residual cell's mass reaches some u_t from a supported
    predecessor, with one state split off each offending cell. Existing table
    entries are unaffected by a split, so iterating is sound.
    """
    config = state.config
    rng = state.rng
    if log_emit is None:
        log_emit = config.emission.loglik_matrix(y, state.thetas)

    log_pi = state.log_pi()
    log_init, init_resid = state.log_init()
    slices = beam.sample_slices(
        state.path, log_pi, log_init, config.duration, state.lams, config.temperature, rng
    )

    u0 = float(np.exp(slices.log_u[0]))
    if config.topology.kind in (IED, FULL):
        # single shared residual cell: the global bound (every row's residual
        # below min_t u_t) terminates, and no forward re-runs are needed
        u_min = float(np.exp(slices.log_u.min()))
        log_emit, _ = _shrink_residuals(
            state, np.full(state.n_tracked, u_min), u_min, log_emit, y
        )
    else:
        # clear the initial row so the first forward pass is valid
        log_emit, _ = _shrink_residuals(
            state, np.full(state.n_tracked, np.inf), u0, log_emit, y
        )

    while True:
        log_pi = state.log_pi()
        log_init, init_resid = state.log_init()
        r_cap = beam.duration_window(
            config.duration, state.lams, log_pi, log_init, slices,
            int(state.path.r.max()), horizon_mult=config.duration_horizon_mult,
        )
        log_dur = beam.duration_log_table(config.duration, state.lams, r_cap)
        table = beam.forward_pass(log_emit, log_dur, log_pi, log_init, slices)

        row_u = _row_u_mins(table, slices.log_u)
        if not _has_violation(state, row_u, init_resid, u0):
            break
        log_emit, _ = _shrink_residuals(state, row_u, u0, log_emit, y)

    state.path = beam.backward_sample(table, log_dur, log_pi, log_init, slices, rng)
    state.slices = slices
    return table


def gibbs_sweep(state, y, path_only=False):
    """One full blocked-Gibbs sweep (in place). ``path_only`` limits the sweep
    to the slice/path update with all parameters held fixed."""
    config = state.config
    rng = state.rng
    y = np.asarray(y)

    sample_path(state, y)

    removed = prune_states(
        state.ws, state.pi, state.path.occupied(state.n_tracked),
        mode=config.resolved_prune_mode(),
    )
    for idx in removed:
        del state.thetas[idx]
        del state.lams[idx]
        state.path.s[state.path.s > idx] -= 1

    if not path_only:
        _parameter_block(state, y, count_transitions(state.path, state.n_tracked))
    state.sweep_idx += 1
    return state


def _parameter_block(state, y, counts):
    """Everything downstream of the path update: table counts, cell masses,
    stick weights, concentrations, transition rows, per-state parameters."""
    config = state.config
    rng = state.rng
    state.beta = compute_beta(state.ws)
    tables = sample_table_counts(counts, state.alpha1, state.beta, rng)
    gibbs_gamma(state.ws, tables, counts.init_state, state.alpha0, rng)
    mh_stick_weights(state.ws, state.alpha0, rng, step=config.w_step, n_passes=config.w_passes)
    if config.sample_alpha0:
        state.alpha0 = mh_concentration(
            state.alpha0,
            lambda a: _alpha0_loglik(state.ws, a),
            config.alpha0_prior,
            config.alpha_step,
            rng,
        )
    if config.sample_alpha1:
        state.alpha1 = mh_concentration(
            state.alpha1,
            lambda a: _alpha1_loglik(tables, counts, a),
            config.alpha1_prior,
            config.alpha_step,
            rng,
        )
    state.ws.renormalize()
    state.beta = compute_beta(state.ws)
    state.pi = sample_pi(state.beta, state.alpha1, counts, rng)
    from .families import sample_params_posterior

    state.thetas, state.lams = sample_params_posterior(
        config.emission, config.duration, y, state.path, state.n_tracked, rng
    )


def _alpha0_loglik(ws, alpha0):
    logp = gamma_logpdf(ws.gamma, alpha0 * ws.w, 1.0).sum()
    if ws.gamma_resid.size:
        logp += gamma_logpdf(ws.gamma_resid, alpha0 * ws.w_resid, 1.0).sum()
    return float(logp)


def _alpha1_loglik(tables, counts, alpha1):
    """Restaurant-franchise marginal over table counts: alpha1^(#tables) *
    prod_m Gamma(alpha1) / Gamma(alpha1 + C_m.)."""
    row_tot = counts.C.sum(axis=1)
    return float(
        tables.sum() * np.log(alpha1)
        + (gammaln(alpha1) - gammaln(alpha1 + row_tot)).sum()
    )


def mh_concentration(alpha, loglik, prior, step, rng):
    """One log-space random-walk Metropolis step for a concentration parameter
    (proposals are always positive; step -> 0 gives acceptance -> 1)."""
    if alpha <= 0:
        raise ParameterError("concentration must be positive")
    prop = alpha * np.exp(step * rng.normal())
    delta = (
        loglik(prop)
        - loglik(alpha)
        + gamma_logpdf(prop, prior.shape, prior.scale)
        - gamma_logpdf(alpha, prior.shape, prior.scale)
        + np.log(prop)
        - np.log(alpha)
    )
    if np.log(max(rng.random(), TINY)) < delta:
        return float(prop)
    return float(alpha)


# ---------------------------------------------------------------------------
# ancestral generation
# ---------------------------------------------------------------------------

def _draw_cell(state, weights_tracked, weights_resid):
    """Lazy draw from an infinite categorical over tracked atoms and residual
    cells, under whatever measure the accessors expose (a transition row, or
    the global masses for the initial draw). A draw landing in a residual
    cell *descends into that cell*: refine once, then choose the fresh atom
    against the cell's remainder(s) under the same measure, recursing until
    an atom wins. Both redrawing from the whole measure and descending by the
    wrong measure (e.g. the global masses during a row draw) would bias the
    atom choice."""
    lr = state.config.topology.kind == "left-to-right"
    j = state.rng.categorical(np.concatenate([weights_tracked(), weights_resid()]))
    if j < state.n_tracked:
        return j
    cell = j - state.n_tracked
    for _ in range(MAX_INSTANTIATIONS):
        idx = _instantiate(state, cell)
        w_atom = weights_tracked()[idx]
        resid = weights_resid()
        if lr:
            # the cell split into (left, right) around the new atom
            pick = state.rng.categorical(np.array([w_atom, resid[cell], resid[cell + 1]]))
            if pick == 0:
                return idx
            cell = cell if pick == 1 else cell + 1
        else:
            if state.rng.random() * (w_atom + resid[cell]) < w_atom:
                return idx
    raise ConsistencyError("state draw failed to settle on a tracked atom")


def prior_generate(config, T, n_tracked_init=0, seed_or_rng=0):
    """Ancestral draw of a full chain state and observations of length T,
    instantiating residual states as the trajectory needs them."""
    if T < 1:
        raise ParameterError("T must be >= 1")
    rng = seed_or_rng if isinstance(seed_or_rng, RngStream) else RngStream(seed_or_rng)
    config = copy.deepcopy(config)
    ws = _fresh_weights(config, rng)
    state = ChainState(
        config=config,
        ws=ws,
        pi=_empty_pi(ws),
        thetas=[],
        lams=[],
        path=None,
        alpha0=config.alpha0,
        alpha1=config.alpha1,
        rng=rng,
    )
    if config.topology.kind == FINITE:
        state.beta = compute_beta(ws)
        state.pi = sample_pi(state.beta, state.alpha1, None, rng)
        state.thetas = [config.emission.sample_prior_params(rng) for _ in range(ws.n_tracked)]
        state.lams = [config.duration.sample_prior_params(rng) for _ in range(ws.n_tracked)]
    for _ in range(n_tracked_init):
        if config.topology.kind == FINITE:
            break
        _instantiate(state, int(np.argmax(state.ws.gamma_resid)))

    state.path = _ancestral_path(state, T)
    y = generate_obs(state, rng)
    state.beta = compute_beta(state.ws)
    return state, y


def generate_obs(state, rng=None):
    """Draw observations given the current path and emission parameters."""
    rng = rng or state.rng
    emission = state.config.emission
    return np.array(
        [emission.sample_obs(state.thetas[int(m)], rng) for m in state.path.s]
    )


# ---------------------------------------------------------------------------
# chain management
# ---------------------------------------------------------------------------

def snapshot(state, y):
    return ChainSample(
        sweep=state.sweep_idx,
        loglik=float(diagnostics.joint_loglik(state, y)),
        path=state.path.copy(),
        birth_ids=tuple(state.ws.birth_ids),
        positions=tuple(state.ws.positions),
        w=state.ws.w.copy(),
        w_resid=state.ws.w_resid.copy(),
        gamma=state.ws.gamma.copy(),
        gamma_resid=state.ws.gamma_resid.copy(),
        thetas=tuple(state.thetas),
        lams=tuple(state.lams),
        alpha0=float(state.alpha0),
        alpha1=float(state.alpha1),
    )


def run_chain(config, y, n_burn=100, n_samples=1000, thin=1, seed=0, progress=None):
    """Deterministic-for-a-seed chain: burn-in, then thinned snapshots."""
    y = np.asarray(y)
    state = init_chain(config, y, seed)
    for i in range(n_burn):
        gibbs_sweep(state, y)
        if progress:
            progress("burn", i, state)
    samples = []
    for j in range(n_samples):
        for _ in range(max(thin, 1)):
            gibbs_sweep(state, y)
        samples.append(snapshot(state, y))
        if progress:
            progress("sample", j, state)
    return samples, state


def map_sample(samples):
    """Highest joint-log-likelihood sample; ties break to the earliest sweep."""
    if not samples:
        raise ParameterError("map_sample needs at least one sample")
    best = samples[0]
    for s in samples[1:]:
        if s.loglik > best.loglik:
            best = s
    return best
