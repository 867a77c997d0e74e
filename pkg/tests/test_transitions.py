import numpy as np
import pytest

from ihsmm.errors import ConsistencyError
from ihsmm.paths import LatentPath, path_from_segments
from ihsmm.rng import RngStream
from ihsmm.topology import IED, Topology
from ihsmm.transitions import count_transitions, sample_pi
from ihsmm.weights import WeightState, compute_beta


def small_beta(gammas=(1.0, 1.0), resid=1.0):
    ws = WeightState.empty(Topology(IED), 1.0, 0.0)
    n = len(gammas)
    ws.positions = [float(i + 1) for i in range(n)]
    ws.birth_ids = list(range(n))
    ws._next_birth = n
    ws.w = np.full(n, 0.5 / n)
    ws.w_resid = np.array([0.5])
    ws.gamma = np.asarray(gammas, dtype=float)
    ws.gamma_resid = np.array([resid])
    return compute_beta(ws)


def test_count_single_segment_is_zero():
    path = path_from_segments([(0, 0, 6, 5)])
    counts = count_transitions(path, 2)
    assert counts.C.sum() == 0
    assert counts.init_state == 0


def test_count_hand_traced_segments():
    # states 1,1,2,2,2,1 with boundaries forced by the countdown
    path = path_from_segments([(0, 0, 2, 1), (1, 2, 3, 2), (0, 5, 1, 0)])
    counts = count_transitions(path, 2)
    assert counts.C[0, 1] == 1
    assert counts.C[1, 0] == 1
    assert counts.C.sum() == 2


def test_count_ied_paths_have_zero_diagonal():
    rng = RngStream(1)
    segs = []
    state, start = 0, 0
    for _ in range(30):
        length = int(rng.integers(1, 5))
        segs.append((state, start, length, length - 1))
        start += length
        state = (state + int(rng.integers(1, 3))) % 3
        # next state always differs mod 3 because increment is 1 or 2
    path = path_from_segments(segs)
    counts = count_transitions(path, 3)
    assert np.all(np.diag(counts.C) == 0)


def test_count_rejects_invalid_countdown():
    bad = LatentPath(np.array([0, 0, 1]), np.array([2, 1, 3]))
    with pytest.raises(ConsistencyError):
        count_transitions(bad, 2)


def test_sample_pi_prior_mean_is_beta():
    beta = small_beta()
    rng = RngStream(2)
    n = 20_000
    rows = np.array([sample_pi(beta, 5.0, None, rng).P[0] for _ in range(n)])
    expect = beta.B[0]
    se = np.sqrt(np.maximum(expect * (1 - expect), 1e-12) / (5.0 + 1) / n)
    assert np.all(np.abs(rows.mean(axis=0) - expect) <= 4 * se + 1e-12)


def test_sample_pi_structural_zeros_exact():
    beta = small_beta()
    rng = RngStream(3)
    for _ in range(200):
        pi = sample_pi(beta, 2.0, None, rng)
        assert pi.P[0, 0] == 0.0
        assert pi.P[1, 1] == 0.0


def test_sample_pi_concentrates_at_huge_alpha1():
    beta = small_beta(gammas=(2.0, 1.0), resid=0.5)
    rng = RngStream(4)
    worst = 0.0
    for _ in range(50):
        pi = sample_pi(beta, 1e6, None, rng)
        worst = max(worst, np.abs(pi.P - beta.B).max())
    assert worst < 0.01


def test_sample_pi_rejects_counts_on_zero_support():
    beta = small_beta()

    class Counts:
        C = np.array([[1, 0], [0, 0]])  # count on the structural zero

    with pytest.raises(ConsistencyError):
        sample_pi(beta, 2.0, Counts(), RngStream(0))


def test_sample_pi_rows_stochastic_with_counts():
    beta = small_beta()
    rng = RngStream(5)

    class Counts:
        C = np.array([[0, 7], [3, 0]])

    pi = sample_pi(beta, 2.0, Counts(), rng)
    assert np.allclose(pi.row_sums(), 1.0, atol=1e-12)
