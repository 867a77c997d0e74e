"""Latent paths: per-time (state, remaining-duration) pairs.

``s[t]`` is the internal index of the tracked state occupying time t and
``r[t]`` the remaining-duration countdown. Dynamics: r decrements
deterministically until 0; a transition and a fresh duration draw happen at
the next step, and only then.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ConsistencyError


@dataclass
class LatentPath:
    s: np.ndarray
    r: np.ndarray

    def __post_init__(self):
        self.s = np.asarray(self.s, dtype=np.int64)
        self.r = np.asarray(self.r, dtype=np.int64)
        if self.s.shape != self.r.shape or self.s.ndim != 1 or self.s.size == 0:
            raise ConsistencyError("path needs matching nonempty s and r vectors")

    @property
    def T(self):
        return self.s.size

    def copy(self):
        return LatentPath(self.s.copy(), self.r.copy())

    def validate(self):
        """Check the countdown dynamics hold at every step."""
        if self.r.min() < 0:
            raise ConsistencyError("negative remaining duration")
        inside = self.r[:-1] > 0
        if inside.any():
            bad_s = self.s[1:][inside] != self.s[:-1][inside]
            bad_r = self.r[1:][inside] != self.r[:-1][inside] - 1
            if bad_s.any() or bad_r.any():
                t = int(np.nonzero(inside)[0][(bad_s | bad_r).argmax()]) + 1
                raise ConsistencyError(f"countdown dynamics violated at t={t}")

    def segment_starts(self):
        fresh = np.ones(self.T, dtype=bool)
        fresh[1:] = self.r[:-1] == 0
        return np.nonzero(fresh)[0]

    def segments(self):
        """(state, start, length, drawn_r) per segment; re-expanding them
        reproduces the path exactly."""
        starts = self.segment_starts()
        ends = np.append(starts[1:], self.T)
        return [
            (int(self.s[a]), int(a), int(b - a), int(self.r[a]))
            for a, b in zip(starts, ends)
        ]

    def occupied(self, n_states):
        mask = np.zeros(n_states, dtype=bool)
        mask[np.unique(self.s)] = True
        return mask


def path_from_segments(segments):
    """Inverse of ``LatentPath.segments``."""
    s, r = [], []
    for state, _start, length, drawn_r in segments:
        s.extend([state] * length)
        r.extend(range(drawn_r, drawn_r - length, -1))
    return LatentPath(np.array(s), np.array(r))
