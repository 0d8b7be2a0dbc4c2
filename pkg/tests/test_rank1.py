import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lowrankcut.core import Assignment, DimensionMismatchError, canonical_form, quadratic_form
from lowrankcut.parallel import ParallelConfig
from lowrankcut.pipeline import brute_force_oracle
from lowrankcut.rank1 import (
    boundary_schedule,
    candidate_labels,
    enumerate_rank1_candidates,
    rank1_scores,
    solve_rank1,
)

from conftest import rand_complex


def test_schedule_examples():
    s = boundary_schedule([1.0, -1.0, np.exp(1j * np.pi / 3)], 3)
    assert s.phi == pytest.approx([np.pi / 3, 0.0, 0.0], abs=1e-12)
    assert list(s.k0) == [0, 1, 0]


def test_schedule_zero_entry_and_ranges():
    rng = np.random.default_rng(0)
    q = rand_complex(rng, 50)
    q[3] = 0
    for K in (2, 3, 5):
        s = boundary_schedule(q, K)
        assert s.theta[3] == 0.0
        assert ((s.theta >= 0) & (s.theta < 2 * np.pi)).all()
        assert ((s.phi > -np.pi / K - 1e-12) & (s.phi <= np.pi / K + 1e-12)).all()
        assert ((s.k0 >= 0) & (s.k0 < K)).all()
        assert (np.diff(s.phi[s.order]) >= 0).all()


def test_order_ties_by_index():
    s = boundary_schedule(np.ones(4), 3)
    assert list(s.order) == [0, 1, 2, 3]


def test_candidate_stream_examples():
    c = list(enumerate_rank1_candidates(boundary_schedule([1j], 3)))
    assert len(c) == 2 and (c[1].labels[0] - c[0].labels[0]) % 3 == 1
    rng = np.random.default_rng(1)
    s = boundary_schedule(rand_complex(rng, 3), 3)
    c = list(enumerate_rank1_candidates(s))
    assert len(c) == 4
    for a, b in zip(c, c[1:]):
        assert (a.labels != b.labels).sum() == 1
    for pos, a in enumerate(c):
        assert np.array_equal(candidate_labels(s, pos), a.labels)
    assert not list(enumerate_rank1_candidates(boundary_schedule(np.ones(5), 3)))[0].labels.any()


def test_scores_match_direct():
    rng = np.random.default_rng(2)
    q = rand_complex(rng, 20)
    s = boundary_schedule(q, 4)
    direct = [abs(np.vdot(a.z, q)) ** 2 for a in enumerate_rank1_candidates(s)]
    assert np.allclose(rank1_scores(s, q), direct)


def test_all_ones():
    lam = 2.5
    Q = lam * np.ones((6, 6))
    sol = solve_rank1(Q, np.ones(6), 3)
    assert len(set(sol.assignment.labels)) == 1
    assert sol.objective == pytest.approx(lam * 36)
    assert sol.candidate_count == 7


def test_seed42_oracle():
    rng = np.random.default_rng(42)
    q = rand_complex(rng, 5)
    Q = np.outer(q, q.conj())
    sol = solve_rank1(Q, q, 3)
    _, opt = brute_force_oracle(Q, 3)
    assert sol.objective == pytest.approx(opt, rel=1e-9)


def test_real_k2_sign_pattern():
    rng = np.random.default_rng(3)
    q = rng.standard_normal(9)
    sol = solve_rank1(None, q, 2)
    expect = canonical_form(Assignment((q < 0).astype(int), 2))
    assert canonical_form(sol.assignment) == expect


def test_dimension_mismatch():
    with pytest.raises(DimensionMismatchError):
        solve_rank1(np.eye(3), np.ones(4), 3)


@settings(max_examples=120, deadline=None)
@given(n=st.integers(3, 8), K=st.integers(2, 5), seed=st.integers(0, 2**31))
def test_exact_vs_oracle(n, K, seed):
    rng = np.random.default_rng(seed)
    q = rand_complex(rng, n)
    Q = np.outer(q, q.conj())
    sol = solve_rank1(Q, q, K)
    _, opt = brute_force_oracle(Q, K)
    assert sol.objective == pytest.approx(opt, rel=1e-9)
    assert sol.candidate_count == n + 1
    assert sol.objective == pytest.approx(quadratic_form(Q, sol.assignment), rel=1e-12)


@settings(max_examples=40, deadline=None)
@given(n=st.integers(2, 30), K=st.integers(2, 6), seed=st.integers(0, 2**31),
       alpha=st.floats(0, 2 * np.pi), scale=st.floats(0.01, 100))
def test_phase_and_scale_invariance(n, K, seed, alpha, scale):
    rng = np.random.default_rng(seed)
    q = rand_complex(rng, n)
    base = solve_rank1(None, q, K)
    rot = solve_rank1(None, np.exp(1j * alpha) * q, K)
    assert rot.objective == pytest.approx(base.objective, rel=1e-9)
    scaled = solve_rank1(None, scale * q, K)
    assert canonical_form(scaled.assignment) == canonical_form(base.assignment)


@pytest.mark.parametrize("workers,batch", [(1, None), (2, 3), (8, 1)])
def test_worker_independence(workers, batch):
    rng = np.random.default_rng(8)
    q = rand_complex(rng, 40)
    ref = solve_rank1(None, q, 3)
    sol = solve_rank1(None, q, 3, ParallelConfig(workers=workers, batch_size=batch))
    assert sol.assignment == ref.assignment and sol.objective == ref.objective
