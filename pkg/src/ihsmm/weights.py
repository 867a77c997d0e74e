"""Gamma-process masses over partition cells and the derived transition prior.

The infinite state space is represented by a finite quotient: tracked states
carry individual stick weights w_m and masses gamma_m; every residual cell
aggregates its untracked states into one (w, gamma) pair. All refinements
(state instantiation) and coarsenings (pruning) below conserve total w and
gamma exactly and use the exact conditional splits, so the quotient stays
distributionally consistent with the underlying measure:

* new stick weight: predictive Beta(1-d, c+(K+1)d) fraction of its cell,
* gamma splits: Beta/Dirichlet with shapes alpha0*w (gamma-process additivity),
* transition-row splits: Beta/Dirichlet with shapes alpha1*beta (Dirichlet
  aggregation), which leaves every existing entry and row normalizer intact.

Pruning removes zero-occupancy tracked states from the tail of birth order
only: dropping the last-born stick is the exact inverse of instantiation,
whereas removing an interior stick would distort the stick prior.
"""

import math
from dataclasses import dataclass

import numpy as np

from .distributions import (
    TINY,
    beta_logpdf,
    gamma_logpdf,
    sample_dirichlet,
    sample_gamma,
    stick_breaking_fractions,
    sticks_to_weights,
)
from .errors import ConsistencyError, ParameterError
from .topology import FINITE, IED, LEFT_TO_RIGHT, ComplementCell, IntervalCell, reachable

SIMPLEX_TOL = 1e-9


@dataclass
class BetaRows:
    """Per-row mean transition measure over cells; rows sum to 1 with exact
    structural zeros off the reachable set."""

    B: np.ndarray        # (M, M) tracked targets
    B_resid: np.ndarray  # (M, n_cells)

    def check(self, tol=SIMPLEX_TOL):
        if self.B.shape[0] == 0:
            return
        sums = self.B.sum(axis=1) + (self.B_resid.sum(axis=1) if self.B_resid.size else 0.0)
        if np.abs(sums - 1.0).max() > tol:
            raise ConsistencyError("beta rows not normalized")


class WeightState:
    """Tracked sticks, residual cells, and their gamma-process masses."""

    def __init__(self, topology, c, d):
        self.topology = topology
        self.c = float(c)
        self.d = float(d)
        if not (0.0 <= self.d < 1.0) or self.c <= -self.d:
            raise ParameterError("stick parameters need d in [0,1) and c > -d")
        self.positions = []
        self.birth_ids = []
        self._next_birth = 0
        self.w = np.zeros(0)
        self.gamma = np.zeros(0)
        if topology.kind == LEFT_TO_RIGHT:
            self.cells = [IntervalCell(0.0, math.inf, owner=None)]
        elif topology.kind == FINITE:
            self.cells = []
        else:
            self.cells = [ComplementCell()]
        self.w_resid = np.ones(len(self.cells))
        self.gamma_resid = np.ones(len(self.cells))

    # -- construction ---------------------------------------------------

    @classmethod
    def empty(cls, topology, c, d):
        if topology.kind == FINITE:
            raise ParameterError("finite topology starts fully tracked; use for_finite")
        return cls(topology, c, d)

    @classmethod
    def for_finite(cls, topology, c, d, rng):
        ws = cls(topology, c, d)
        K = topology.K
        ws.positions = [float(k) for k in range(1, K + 1)]
        ws.birth_ids = list(range(K))
        ws._next_birth = K
        if K == 1:
            ws.w = np.ones(1)
        else:
            v = stick_breaking_fractions(ws.c, ws.d, K - 1, rng)
            w = sticks_to_weights(v)
            ws.w = np.append(w, 1.0 - w.sum())
        ws.gamma = np.ones(K)
        return ws

    # -- basic views ------------------------------------------------------

    @property
    def n_tracked(self):
        return len(self.positions)

    @property
    def n_cells(self):
        return len(self.cells)

    def w_resid_total(self):
        return float(self.w_resid.sum()) if self.w_resid.size else 0.0

    def total_w(self):
        return float(self.w.sum()) + self.w_resid_total()

    def total_gamma(self):
        return float(self.gamma.sum()) + float(self.gamma_resid.sum())

    def check(self, tol=SIMPLEX_TOL):
        if abs(self.total_w() - 1.0) > tol:
            raise ConsistencyError(f"stick weights sum to {self.total_w()}, not 1")
        if (self.w.size and self.w.min() <= 0) or (self.w_resid.size and self.w_resid.min() <= 0):
            raise ConsistencyError("nonpositive stick weight")
        if (self.gamma.size and self.gamma.min() <= 0) or (
            self.gamma_resid.size and self.gamma_resid.min() <= 0
        ):
            raise ConsistencyError("nonpositive gamma mass")

    def renormalize(self):
        total = self.total_w()
        self.w /= total
        self.w_resid /= total

    # -- partition masks ---------------------------------------------------

    def a_masks(self, m):
        """Boolean masks (tracked, resid) of the cells composing V_m."""
        kind = self.topology.kind
        M = self.n_tracked
        if kind == LEFT_TO_RIGHT:
            pos = self.positions[m]
            tr = np.asarray(self.positions) > pos
            rc = np.array([cell.lo for cell in self.cells]) >= pos
            return tr, rc
        tr = np.ones(M, dtype=bool)
        if kind == IED:
            tr[m] = False
        return tr, np.ones(self.n_cells, dtype=bool)

    def reach_matrices(self):
        """Stacked a_masks: (M, M) tracked-cell membership, (M, n_cells) residual."""
        M = self.n_tracked
        kind = self.topology.kind
        if kind == LEFT_TO_RIGHT:
            pos = np.asarray(self.positions)
            los = np.array([cell.lo for cell in self.cells])
            return pos[:, None] < pos[None, :], los[None, :] >= pos[:, None]
        A_tr = np.ones((M, M), dtype=bool)
        if kind == IED:
            np.fill_diagonal(A_tr, False)
        return A_tr, np.ones((M, self.n_cells), dtype=bool)

    def cell_index_at(self, lo=None, hi=None):
        for j, cell in enumerate(self.cells):
            if isinstance(cell, IntervalCell):
                if lo is not None and cell.lo == lo:
                    return j
                if hi is not None and cell.hi == hi:
                    return j
        raise ConsistencyError("residual cell not found")


# ---------------------------------------------------------------------------
# prior draws and the derived mean measure
# ---------------------------------------------------------------------------

def sample_gamma_prior(ws, alpha0, rng):
    """Independent Gamma(alpha0 * w_cell, 1) mass per partition cell."""
    if alpha0 <= 0:
        raise ParameterError("alpha0 must be positive")
    ws.gamma = np.array([sample_gamma(alpha0 * wk, 1.0, rng) for wk in ws.w])
    ws.gamma_resid = np.array([sample_gamma(alpha0 * wr, 1.0, rng) for wr in ws.w_resid])
    return ws


def compute_beta(ws):
    """Deterministic per-row normalization of gamma over the cells of V_m."""
    M = ws.n_tracked
    B = np.zeros((M, M))
    B_resid = np.zeros((M, ws.n_cells))
    for m in range(M):
        tr, rc = ws.a_masks(m)
        denom = ws.gamma[tr].sum() + (ws.gamma_resid[rc].sum() if rc.size else 0.0)
        if denom <= 0:
            raise ConsistencyError("row normalizer vanished")
        B[m, tr] = ws.gamma[tr] / denom
        if rc.size:
            B_resid[m, rc] = ws.gamma_resid[rc] / denom
    rows = BetaRows(B, B_resid)
    rows.check()
    return rows


def init_distribution(ws):
    """Initial-state distribution: the normalized global measure over cells."""
    total = ws.total_gamma()
    return ws.gamma / total, ws.gamma_resid / total


# ---------------------------------------------------------------------------
# table counts (Chinese-restaurant seating per transition row)
# ---------------------------------------------------------------------------

def sample_table_counts(counts, alpha1, beta, rng):
    """Seat each observed transition count sequentially; l[m, k] is the number
    of tables serving target k in restaurant m."""
    C = counts.C
    M = C.shape[0]
    if np.any((C > 0) & (beta.B <= 0.0)):
        raise ConsistencyError("counts on a zero-probability transition")
    l = np.zeros((M, M), dtype=np.int64)
    for m, k in zip(*np.nonzero(C)):
        n = int(C[m, k])
        a = alpha1 * beta.B[m, k]
        if n == 1:
            l[m, k] = 1
            continue
        j = np.arange(1, n)
        l[m, k] = 1 + int((rng.random(n - 1) < a / (a + j)).sum())
    return l


# ---------------------------------------------------------------------------
# gamma Gibbs scan (auxiliary-variable form)
# ---------------------------------------------------------------------------

def gibbs_gamma(ws, tables, init_state, alpha0, rng):
    """One Gibbs scan of all cell masses given table counts.

    Auxiliary L_j ~ Gamma(l_j., 1/sum of gamma over V_j) per restaurant with
    any tables, then gamma_R ~ Gamma(alpha0*w_R + l_.R, 1/(1 + sum of L_j over
    restaurants whose menu contains R)). The initial state acts as one direct
    customer of a restaurant whose menu is every cell.
    """
    M = ws.n_tracked
    A_tr, A_rc = ws.reach_matrices()
    l = tables if tables is not None else np.zeros((M, M), dtype=np.int64)
    l_row = l.sum(axis=1)
    l_col = l.sum(axis=0).astype(float)
    if init_state is not None:
        l_col[init_state] += 1.0

    L = np.zeros(M)
    for j in range(M):
        if l_row[j] > 0:
            denom = ws.gamma[A_tr[j]].sum() + ws.gamma_resid[A_rc[j]].sum()
            L[j] = sample_gamma(float(l_row[j]), 1.0 / denom, rng)
    L_init = 0.0
    if init_state is not None:
        L_init = sample_gamma(1.0, 1.0 / ws.total_gamma(), rng)

    # restaurants serving each cell: transpose of the reach matrices
    load_tr = A_tr.T @ L + L_init
    load_rc = (A_rc.T @ L + L_init) if ws.n_cells else np.zeros(0)

    ws.gamma = np.array(
        [
            sample_gamma(alpha0 * ws.w[k] + l_col[k], 1.0 / (1.0 + load_tr[k]), rng)
            for k in range(M)
        ]
    )
    ws.gamma_resid = np.array(
        [
            sample_gamma(alpha0 * ws.w_resid[j], 1.0 / (1.0 + load_rc[j]), rng)
            for j in range(ws.n_cells)
        ]
    )
    return ws


# ---------------------------------------------------------------------------
# Metropolis-Hastings update of the stick weights
# ---------------------------------------------------------------------------

def _stick_count(ws):
    return ws.n_tracked - 1 if ws.topology.kind == FINITE else ws.n_tracked


def effective_sticks(ws):
    """Stick fractions in birth order; the residual total is the remainder
    (for finite topologies the last tracked state absorbs it)."""
    n = _stick_count(ws)
    v = np.empty(n)
    remaining = 1.0
    for k in range(n):
        v[k] = ws.w[k] / max(remaining, TINY)
        remaining -= ws.w[k]
    return np.clip(v, TINY, 1.0 - 1e-16)


def _weights_from_sticks(ws, v):
    w = sticks_to_weights(v)
    remainder = max(1.0 - w.sum(), TINY)
    if ws.topology.kind == FINITE:
        w_tracked = np.append(w, remainder)
        w_res = np.zeros(0)
    else:
        w_tracked = w
        shares = ws.w_resid / max(ws.w_resid.sum(), TINY)
        w_res = shares * remainder
    return w_tracked, w_res


def _stick_log_target(ws, v, alpha0):
    w_tracked, w_res = _weights_from_sticks(ws, v)
    ks = np.arange(1, len(v) + 1)
    logp = beta_logpdf(v, 1.0 - ws.d, ws.c + ks * ws.d).sum()
    logp += gamma_logpdf(ws.gamma, alpha0 * w_tracked, 1.0).sum()
    if w_res.size:
        logp += gamma_logpdf(ws.gamma_resid, alpha0 * w_res, 1.0).sum()
    return float(logp)


def mh_stick_weights(ws, alpha0, rng, step=0.6, n_passes=1):
    """Per-coordinate logit random walk on the effective sticks, targeting the
    stick prior times the gamma likelihoods of the cell masses."""
    n = _stick_count(ws)
    if n == 0:
        return 0.0
    v = effective_sticks(ws)
    logp = _stick_log_target(ws, v, alpha0)
    accepted = 0
    for _ in range(n_passes):
        for k in range(n):
            logit = math.log(v[k]) - math.log1p(-v[k])
            prop = logit + step * rng.normal()
            vk_new = 1.0 / (1.0 + math.exp(-prop))
            vk_new = min(max(vk_new, TINY), 1.0 - 1e-16)
            v_new = v.copy()
            v_new[k] = vk_new
            logp_new = _stick_log_target(ws, v_new, alpha0)
            # logit-walk Jacobian: dv/dlogit = v(1-v)
            delta = (
                logp_new
                - logp
                + math.log(vk_new) + math.log1p(-vk_new)
                - math.log(v[k]) - math.log1p(-v[k])
            )
            if math.log(max(rng.random(), TINY)) < delta:
                v, logp = v_new, logp_new
                accepted += 1
    ws.w, ws.w_resid = _weights_from_sticks(ws, v)
    return accepted / (n * n_passes)


# ---------------------------------------------------------------------------
# on-the-fly state instantiation and pruning
# ---------------------------------------------------------------------------

def instantiate_state(ws, pi, alpha0, alpha1, cell_idx, rng):
    """Split a new tracked state off residual cell ``cell_idx``.

    Mutates ``ws`` and ``pi`` in place and returns the new state's index.
    Existing tracked entries of pi and the beta normalizers are untouched;
    total w and gamma are conserved exactly.
    """
    if ws.topology.kind == FINITE:
        raise ParameterError("finite topology has no residual states")
    M = ws.n_tracked
    cell = ws.cells[cell_idx]
    lr = ws.topology.kind == LEFT_TO_RIGHT

    # stick-predictive weight for the new state, then exact mass splits
    a_v, b_v = 1.0 - ws.d, ws.c + (M + 1) * ws.d
    v = _safe_beta(a_v, b_v, rng)
    w_cell = ws.w_resid[cell_idx]
    w_new = v * w_cell
    leftover = max(w_cell - w_new, TINY)

    gamma_cell = ws.gamma_resid[cell_idx]
    if lr:
        xi = rng.random()
        w_left = max(xi * leftover, TINY)
        w_right = max(leftover - w_left, TINY)
        parts = sample_dirichlet(alpha0 * np.array([w_new, w_left, w_right]), rng)
        g_new, g_left, g_right = np.maximum(gamma_cell * parts, TINY)
    else:
        b = _safe_beta(alpha0 * w_new, alpha0 * leftover, rng)
        g_new = max(b * gamma_cell, TINY)
        g_rest = max(gamma_cell - g_new, TINY)

    # position and cell bookkeeping
    if lr:
        pos = cell.lo + 1.0 if math.isinf(cell.hi) else 0.5 * (cell.lo + cell.hi)
        if not (cell.lo < pos < cell.hi):
            raise ConsistencyError("residual interval exhausted float precision")
        left = IntervalCell(cell.lo, pos, owner=cell.owner)
        right = IntervalCell(pos, cell.hi, owner=pos)
        ws.cells[cell_idx : cell_idx + 1] = [left, right]
        ws.w_resid = np.concatenate(
            [ws.w_resid[:cell_idx], [w_left, w_right], ws.w_resid[cell_idx + 1 :]]
        )
        ws.gamma_resid = np.concatenate(
            [ws.gamma_resid[:cell_idx], [g_left, g_right], ws.gamma_resid[cell_idx + 1 :]]
        )
    else:
        pos = float(ws._next_birth + 1)
        ws.w_resid[cell_idx] = leftover
        ws.gamma_resid[cell_idx] = g_rest

    ws.positions.append(pos)
    ws.birth_ids.append(ws._next_birth)
    ws._next_birth += 1
    ws.w = np.append(ws.w, w_new)
    ws.gamma = np.append(ws.gamma, g_new)
    new_idx = M

    # split every reachable row's residual mass onto the new state
    n_cells_new = ws.n_cells
    P = np.zeros((M + 1, M + 1))
    P[:M, :M] = pi.P
    P_resid = np.zeros((M + 1, n_cells_new))
    if lr:
        old_cols = list(range(cell_idx)) + list(range(cell_idx + 2, n_cells_new))
        src_cols = list(range(cell_idx)) + list(range(cell_idx + 1, n_cells_new - 1))
        P_resid[:M, old_cols] = pi.P_resid[:, src_cols]
    else:
        P_resid[:M, :] = pi.P_resid

    A_tr, A_rc = ws.reach_matrices()
    denoms = np.maximum(A_tr @ ws.gamma + A_rc @ ws.gamma_resid, TINY)
    for m in range(M):
        if lr and ws.cells[cell_idx].lo < ws.positions[m]:
            continue  # cell (and the new state) not reachable from m
        denom = denoms[m]
        if lr:
            mass = pi.P_resid[m, cell_idx]
            conc = alpha1 * np.array([g_new, g_left, g_right]) / denom
            share = sample_dirichlet(np.maximum(conc, TINY), rng)
            P[m, new_idx] = share[0] * mass
            P_resid[m, cell_idx] = share[1] * mass
            P_resid[m, cell_idx + 1] = share[2] * mass
        else:
            mass = pi.P_resid[m, cell_idx]
            beta_new = g_new / denom
            beta_rest = ws.gamma_resid[cell_idx] / denom
            b_pi = _safe_beta(alpha1 * beta_new, alpha1 * beta_rest, rng)
            P[m, new_idx] = b_pi * mass
            P_resid[m, cell_idx] = (1.0 - b_pi) * mass

    # fresh row for the new state
    tr, rc = A_tr[new_idx], A_rc[new_idx]
    denom = denoms[new_idx]
    conc = np.zeros(M + 1 + n_cells_new)
    conc[: M + 1][tr] = np.maximum(alpha1 * ws.gamma[tr] / denom, TINY)
    conc[M + 1 :][rc] = np.maximum(alpha1 * ws.gamma_resid[rc] / denom, TINY)
    row = sample_dirichlet(conc, rng)
    P[new_idx, :] = row[: M + 1]
    P_resid[new_idx, :] = row[M + 1 :]

    pi.P = P
    pi.P_resid = P_resid
    return new_idx


def _safe_beta(a, b, rng):
    """Beta draw via the gamma ratio; stable for arbitrarily small shapes."""
    g1 = sample_gamma(max(a, TINY), 1.0, rng)
    g2 = sample_gamma(max(b, TINY), 1.0, rng)
    x = g1 / (g1 + g2)
    return min(max(x, TINY), 1.0 - 1e-16)


def _remove_state(ws, pi, idx):
    """Merge tracked state ``idx`` (which must be unoccupied) back into its
    residual cell(s); gamma and transition-row merges are exact aggregations."""
    pos = ws.positions[idx]
    if ws.topology.kind == LEFT_TO_RIGHT:
        jl = ws.cell_index_at(hi=pos)
        jr = ws.cell_index_at(lo=pos)
        if jr != jl + 1:
            raise ConsistencyError("residual cells out of order")
        left, right = ws.cells[jl], ws.cells[jr]
        merged = IntervalCell(left.lo, right.hi, owner=left.owner)
        w_m = ws.w_resid[jl] + ws.w[idx] + ws.w_resid[jr]
        g_m = ws.gamma_resid[jl] + ws.gamma[idx] + ws.gamma_resid[jr]
        ws.cells[jl : jr + 1] = [merged]
        ws.w_resid = np.concatenate([ws.w_resid[:jl], [w_m], ws.w_resid[jr + 1 :]])
        ws.gamma_resid = np.concatenate([ws.gamma_resid[:jl], [g_m], ws.gamma_resid[jr + 1 :]])
        resid_new = np.concatenate(
            [pi.P_resid[:, :jl],
             (pi.P_resid[:, jl] + pi.P[:, idx] + pi.P_resid[:, jr])[:, None],
             pi.P_resid[:, jr + 1 :]],
            axis=1,
        )
    else:
        ws.w_resid[0] += ws.w[idx]
        ws.gamma_resid[0] += ws.gamma[idx]
        resid_new = pi.P_resid.copy()
        resid_new[:, 0] += pi.P[:, idx]
    keep = np.arange(ws.n_tracked) != idx
    pi.P = pi.P[keep][:, keep]
    pi.P_resid = resid_new[keep]
    ws.w = ws.w[keep]
    ws.gamma = ws.gamma[keep]
    ws.positions.pop(idx)
    ws.birth_ids.pop(idx)


def prune_states(ws, pi, occupied, mode="tail"):
    """Merge zero-occupancy tracked states back into residual cells.

    ``tail`` removes only trailing states in birth order, which is the exact
    inverse of instantiation under the stick prior. ``all`` removes every
    unoccupied state; the gamma/transition merges stay exact but the stick
    prior's birth-order bookkeeping becomes approximate. Left-to-right chains
    need ``all``: their paths march into young states and would strand old
    ones forever under the tail rule. Removed indices are returned in
    descending order.
    """
    if ws.topology.kind == FINITE:
        return []
    removed = []
    occupied = list(occupied)
    while ws.n_tracked > 0 and not occupied[-1]:
        last = ws.n_tracked - 1
        _remove_state(ws, pi, last)
        occupied.pop()
        removed.append(last)
    if mode == "all":
        for idx in range(len(occupied) - 1, -1, -1):
            if not occupied[idx]:
                _remove_state(ws, pi, idx)
                removed.append(idx)
    return removed


def prune_tail(ws, pi, occupied):
    return prune_states(ws, pi, occupied, mode="tail")
