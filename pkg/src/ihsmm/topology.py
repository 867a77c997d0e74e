"""Transition-structure topologies.

A topology fixes, for every state m, the set V_m of states reachable from m,
and a partition of the state space into disjoint cells (tracked singletons
plus residual cells) such that each V_m is a union of cells. Residual cells
aggregate the infinitely many untracked states.

Supported kinds:

* ``ied``            V_m = everything except m (no self-transitions)
* ``left-to-right``  V_m = everything greater than m (states never revisited)
* ``full``           V_m = everything
* ``finite``         K states, V_m = all K (finite auxiliary space)
"""

import math
from dataclasses import dataclass

from .errors import ParameterError

IED = "ied"
LEFT_TO_RIGHT = "left-to-right"
FULL = "full"
FINITE = "finite"

KINDS = (IED, LEFT_TO_RIGHT, FULL, FINITE)


@dataclass(frozen=True)
class Topology:
    kind: str
    K: int | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ParameterError(f"unknown topology kind {self.kind!r}")
        if self.kind == FINITE:
            if self.K is None or self.K < 1:
                raise ParameterError("finite topology requires K >= 1")
        elif self.K is not None:
            raise ParameterError(f"{self.kind} topology takes no K")

    @property
    def has_residual(self):
        return self.kind != FINITE


def reachable(topology, m, k):
    """True iff state ``k`` lies in V_m. Ids are state labels (positions)."""
    if topology.kind == FINITE:
        if not (1 <= m <= topology.K and 1 <= k <= topology.K):
            raise ParameterError(f"state out of range for finite({topology.K}): ({m}, {k})")
        return True
    if topology.kind == FULL:
        return True
    if topology.kind == IED:
        return k != m
    return k > m  # left-to-right


# ---------------------------------------------------------------------------
# partition cells
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class StateCell:
    """Singleton cell {m} for a tracked state."""

    state: float

    def contains(self, k, tracked):
        return k == self.state

    def describe(self):
        return f"{{{self.state:g}}}"


@dataclass(frozen=True)
class ComplementCell:
    """All untracked states (the single residual cell of ied/full)."""

    def contains(self, k, tracked):
        return k not in tracked

    def describe(self):
        return "R+"


@dataclass(frozen=True)
class IntervalCell:
    """Untracked states in the open interval (lo, hi); used by left-to-right.
    ``owner`` is the tracked state immediately to the left, or None for the
    region before the first tracked state."""

    lo: float
    hi: float
    owner: float | None = None

    def contains(self, k, tracked):
        return self.lo < k < self.hi and k not in tracked

    def describe(self):
        hi = "inf" if math.isinf(self.hi) else f"{self.hi:g}"
        return f"R({self.lo:g},{hi})"


class PartitionView:
    """Partition of the state space for a given tracked set.

    ``cells`` come tracked-singletons first (in the order of ``tracked``),
    residual cells after. ``A(m)`` gives the indices of the cells whose union
    is V_m; ``A_init()`` is the full menu (used by the initial-state draw).
    """

    def __init__(self, topology, tracked, cells, a_map):
        self.topology = topology
        self.tracked = list(tracked)
        self.cells = cells
        self._a_map = a_map

    def A(self, m):
        if m not in self._a_map:
            raise ParameterError(f"state {m} is not tracked")
        return self._a_map[m]

    def A_init(self):
        return list(range(len(self.cells)))

    def residual_indices(self):
        return [i for i, c in enumerate(self.cells) if not isinstance(c, StateCell)]

    def describe(self):
        return [c.describe() for c in self.cells]


def partition(topology, tracked):
    """Build the partition and the per-state cell collections A_m.

    ``tracked`` is a nonempty iterable of distinct state ids (sorted
    internally; for left-to-right the order is the state order).
    """
    tracked = sorted(set(tracked))
    if not tracked:
        raise ParameterError("tracked set must be nonempty")

    if topology.kind == FINITE:
        if tracked != list(range(1, topology.K + 1)):
            raise ParameterError("finite topology tracks exactly the states 1..K")
        cells = [StateCell(m) for m in tracked]
        a_map = {m: list(range(topology.K)) for m in tracked}
        return PartitionView(topology, tracked, cells, a_map)

    if topology.kind in (IED, FULL):
        cells = [StateCell(m) for m in tracked] + [ComplementCell()]
        resid = len(cells) - 1
        a_map = {}
        for i, m in enumerate(tracked):
            idx = [j for j, k in enumerate(tracked) if reachable(topology, m, k)]
            a_map[m] = idx + [resid]
        return PartitionView(topology, tracked, cells, a_map)

    # left-to-right: interval residuals between consecutive tracked states
    cells = [StateCell(m) for m in tracked]
    intervals = []
    first = tracked[0]
    if first > 1:  # integer ids start at 1; anything below the first tracked state
        intervals.append(IntervalCell(0.0, float(first), owner=None))
    for i, m in enumerate(tracked):
        hi = float(tracked[i + 1]) if i + 1 < len(tracked) else math.inf
        if hi > m + 1 or math.isinf(hi):
            intervals.append(IntervalCell(float(m), hi, owner=float(m)))
    cells = cells + intervals
    a_map = {}
    for m in tracked:
        idx = [j for j, k in enumerate(tracked) if k > m]
        for j, cell in enumerate(intervals):
            if cell.lo >= m:  # interval entirely to the right of m
                idx.append(len(tracked) + j)
        a_map[m] = sorted(idx)
    return PartitionView(topology, tracked, cells, a_map)
