"""Finite-plus-residual representation of the infinite transition matrix.

Each tracked row holds probabilities over tracked targets plus an aggregate
mass per residual cell. Rows are exactly row-stochastic over their support,
with structural zeros wherever the topology forbids a transition.
"""

import numpy as np

from .distributions import sample_dirichlet
from .errors import ConsistencyError

SIMPLEX_TOL = 1e-9


class TransitionMatrix:
    def __init__(self, P, P_resid):
        self.P = np.asarray(P, dtype=float)
        self.P_resid = np.asarray(P_resid, dtype=float)

    @property
    def n_states(self):
        return self.P.shape[0]

    def row_sums(self):
        return self.P.sum(axis=1) + (self.P_resid.sum(axis=1) if self.P_resid.size else 0.0)

    def check(self, tol=SIMPLEX_TOL):
        sums = self.row_sums()
        if self.n_states and np.abs(sums - 1.0).max() > tol:
            raise ConsistencyError(f"transition rows not stochastic: {sums}")

    def copy(self):
        return TransitionMatrix(self.P.copy(), self.P_resid.copy())


class CountMatrix:
    """Observed transition counts of the current path plus the initial state
    (the one direct draw from the global measure)."""

    def __init__(self, C, init_state):
        self.C = np.asarray(C, dtype=np.int64)
        self.init_state = int(init_state)

    @property
    def total(self):
        return int(self.C.sum())


def count_transitions(path, n_states):
    """One count per segment boundary (time t with r[t-1] == 0, t >= 1);
    deterministic countdown steps contribute nothing."""
    path.validate()
    if path.s.max() >= n_states:
        raise ConsistencyError("path references an untracked state")
    C = np.zeros((n_states, n_states), dtype=np.int64)
    boundary = np.nonzero(path.r[:-1] == 0)[0]
    np.add.at(C, (path.s[boundary], path.s[boundary + 1]), 1)
    return CountMatrix(C, path.s[0])


def sample_pi(beta, alpha1, counts, rng):
    """Per-row Dirichlet draw with concentration C_m + alpha1 * beta_m.

    Residual entries carry only the prior pseudo-count alpha1 * beta (data
    never lands on a residual cell: states are instantiated first).
    """
    M = beta.B.shape[0]
    n_resid = beta.B_resid.shape[1] if beta.B_resid.size else 0
    C = counts.C if counts is not None else np.zeros((M, M), dtype=np.int64)
    if np.any((C > 0) & (beta.B <= 0.0)):
        raise ConsistencyError("transition counts on a structurally-zero entry")
    P = np.zeros((M, M))
    P_resid = np.zeros((M, n_resid))
    for m in range(M):
        conc = np.concatenate([alpha1 * beta.B[m] + C[m], alpha1 * beta.B_resid[m]])
        row = sample_dirichlet(conc, rng)
        P[m] = row[:M]
        P_resid[m] = row[M:]
    pi = TransitionMatrix(P, P_resid)
    pi.check()
    return pi
