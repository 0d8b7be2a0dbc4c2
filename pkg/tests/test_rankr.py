import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lowrankcut.core import DimensionMismatchError, canonical_form, factor_quadratic_form
from lowrankcut.parallel import ParallelConfig
from lowrankcut.pipeline import brute_force_oracle
from lowrankcut.rank1 import solve_rank1
from lowrankcut.rankr import (
    build_augmented,
    candidate_count_bound,
    count_valid_index_sets,
    expand_vertex,
    solve_rankr,
    stream_valid_index_sets,
    to_complex,
    vertex_nullvector,
)

from conftest import rand_complex, rand_psd


def test_augmented_shape_and_blocks():
    rng = np.random.default_rng(0)
    V = rand_complex(rng, (2, 1))
    sys = build_augmented(V, 3)
    assert sys.rows.shape == (6, 2)
    for m, rho in enumerate(sys.rotations):
        blk = sys.rows[m * 2:(m + 1) * 2]
        assert np.allclose(blk, np.hstack([(rho * V).real, (rho * V).imag]))
    assert np.allclose(sys.rotations, np.exp(-1j * np.pi * (2 * np.arange(3) + 1) / 3))
    assert (np.bincount(sys.group_of_row) == 3).all()
    with pytest.raises(ValueError):
        build_augmented(np.zeros((3, 2)), 3)


def _brute_valid(sys, size):
    out = []
    for I in itertools.combinations(range(sys.n_rows), size):
        if np.bincount(sys.group_of_row[list(I)], minlength=sys.n).max() <= 2:
            out.append(I)
    return out


@pytest.mark.parametrize("n,K,r,expect", [(2, 3, 1, 6), (2, 3, 2, 18), (3, 2, 2, 1)])
def test_stream_examples(n, K, r, expect):
    sys = build_augmented(np.ones((n, r)) + 1j, K)
    got = list(stream_valid_index_sets(sys))
    assert len(got) == expect
    assert got == _brute_valid(sys, 2 * r - 1)
    assert count_valid_index_sets(n, sys.b_k, 2 * r - 1) == expect


@pytest.mark.parametrize("n,K,size", [(4, 3, 3), (5, 4, 3), (4, 5, 5), (6, 2, 3)])
def test_stream_matches_brute_enumeration(n, K, size):
    sys = build_augmented(np.ones((n, 3)) + 1j, K)
    got = list(stream_valid_index_sets(sys, size))
    assert got == _brute_valid(sys, size)
    assert count_valid_index_sets(n, sys.b_k, size) == len(got)


def test_nullvector_examples():
    # r = 1: a single row [1, 0] has null vector (0, 1)
    sys = build_augmented(np.array([[np.exp(1j * np.pi / 3)]]), 3)
    row = int(np.flatnonzero(np.abs(sys.rows[:, 1]) < 1e-12)[0])
    ct = vertex_nullvector(sys, [row])
    assert np.abs(sys.rows[row] @ ct) < 1e-12 and np.linalg.norm(ct) == pytest.approx(1.0)
    # duplicated row: rank deficient
    V = np.array([[1.0 + 1j, 0.5], [1.0 + 1j, 0.5], [0.3, 1j]])
    sys = build_augmented(V, 3)
    assert vertex_nullvector(sys, [0, 1, 3]) is None


def test_nullvector_two_rows_same_group():
    rng = np.random.default_rng(5)
    V = rand_complex(rng, (3, 2))
    sys = build_augmented(V, 3)
    I = [0, 3, 1]  # rows 0 and 3 both belong to coordinate 0
    ct = vertex_nullvector(sys, I)
    assert ct is not None
    assert np.abs(sys.rows[I] @ ct).max() <= 1e-8
    c = to_complex(ct, 2)
    assert abs(V[0] @ c) <= 1e-8 * np.linalg.norm(V[0])


def test_to_complex_is_boundary_condition():
    rng = np.random.default_rng(6)
    V = rand_complex(rng, (4, 2))
    sys = build_augmented(V, 3)
    ct = rng.standard_normal(4)
    c = to_complex(ct, 2)
    y = (sys.rotations[:, None] * (V @ c)[None, :]).reshape(-1)
    assert np.allclose(sys.rows @ ct, y.imag)


def test_expand_vertex_examples():
    sys = build_augmented(np.ones((1, 1), dtype=complex), 3)
    one = expand_vertex(np.array([[1.0]]), np.array([1.0]), [], sys)
    assert [a.key() for a in one] == [(0,)]
    rot = expand_vertex(np.array([[np.exp(2j * np.pi / 3)]]), np.array([1.0]), [], sys)
    assert [a.key() for a in rot] == [(1,)]
    # phase exactly pi/3 sits on the boundary between labels 0 and 1
    V = np.array([[np.exp(1j * np.pi / 3)]])
    sysb = build_augmented(V, 3)
    row = int(np.argmin(np.abs(sysb.rows @ np.array([0.0, 1.0]))))
    both = expand_vertex(V, np.array([1.0]), [row], sysb)
    assert sorted(a.key() for a in both) == [(0,), (1,)]


def test_expand_vertex_double_row_gives_all_labels():
    rng = np.random.default_rng(5)
    V = rand_complex(rng, (3, 2))
    sys = build_augmented(V, 3)
    c = to_complex(vertex_nullvector(sys, [0, 3, 1]), 2)
    cells = expand_vertex(V, c, [0, 3, 1], sys)
    assert {a.labels[0] for a in cells} == {0, 1, 2}
    # coordinate 1 has one row in I: one label per side, merged for the antipodal ray
    assert len(cells) in (3, 6)


def test_bound_values():
    assert candidate_count_bound(7, 1, 3, "final") == 7
    assert candidate_count_bound(7, 1, 3) == 7 * 3
    assert candidate_count_bound(4, 2, 3) == 336
    assert candidate_count_bound(4, 2, 3) >= candidate_count_bound(4, 2, 3, "final")
    with pytest.raises(ValueError):
        candidate_count_bound(0, 1, 3)


def test_rank_deficient_second_column_matches_rank1():
    rng = np.random.default_rng(11)
    q = rand_complex(rng, 6)
    V = np.column_stack([q, np.zeros(6)])
    assert solve_rankr(None, V, 2, 3).objective == pytest.approx(solve_rank1(None, q, 3).objective)


def test_seeded_examples():
    for n, r, seed in ((4, 2, 7), (5, 3, 7)):
        Q, V = rand_psd(np.random.default_rng(seed), n, r)
        sol = solve_rankr(Q, V, r, 3)
        _, opt = brute_force_oracle(Q, 3)
        assert sol.objective == pytest.approx(opt, rel=1e-9)


def test_errors():
    V = np.ones((3, 2), dtype=complex)
    with pytest.raises(DimensionMismatchError):
        solve_rankr(np.eye(4), V, 2, 3)
    with pytest.raises(ValueError):
        solve_rankr(None, np.ones((1, 2)), 2, 2)  # 2r-1 = 3 > n B_K = 1
    with pytest.raises(ValueError):
        solve_rankr(None, V, 3, 3)
    with pytest.raises(ValueError):
        solve_rankr(None, V, 2, 3, method="nope")


def _brute_factor(V, K):
    n = V.shape[0]
    roots = np.exp(2j * np.pi * np.arange(K) / K)
    L = np.array(list(itertools.product(range(K), repeat=n - 1)), dtype=int).reshape(-1, n - 1)
    L = np.hstack([np.zeros((len(L), 1), int), L])
    return float((np.abs(roots[L].conj() @ V) ** 2).sum(axis=1).max())


@settings(max_examples=150, deadline=None)
@given(r=st.integers(2, 3), K=st.integers(2, 3), n=st.integers(3, 6), seed=st.integers(0, 2**31),
       real=st.booleans())
def test_exact_vs_oracle(r, K, n, seed, real):
    if 2 * r - 1 > n * (K // 2 if K % 2 == 0 else K):
        n = 2 * r - 1
    rng = np.random.default_rng(seed)
    V = rand_complex(rng, (n, r))
    if real:
        V = V.real.astype(complex)
    sol = solve_rankr(None, V, r, K)
    assert sol.objective == pytest.approx(_brute_factor(V, K), rel=1e-9)
    assert sol.max_vertex_residual <= 1e-8
    assert sol.max_norm_deviation <= 1e-12
    assert sol.objective >= solve_rankr(None, V[:, : r - 1], r - 1, K).objective * (1 - 1e-12)
    if not real and n * (K // 2 if K % 2 == 0 else K) >= 2 * r:
        assert sol.candidate_count <= candidate_count_bound(n, r, K)


@settings(max_examples=25, deadline=None)
@given(r=st.integers(2, 3), K=st.integers(2, 4), seed=st.integers(0, 2**31))
def test_vertex_path_agrees_with_sweep(r, K, seed):
    rng = np.random.default_rng(seed)
    n = 5
    V = rand_complex(rng, (n, r))
    a = solve_rankr(None, V, r, K, method="sweep")
    b = solve_rankr(None, V, r, K, method="vertex")
    assert a.objective == pytest.approx(b.objective, rel=1e-12)
    assert canonical_form(a.assignment) == canonical_form(b.assignment)
    assert a.candidate_count == b.candidate_count


def test_group_structure_of_double_rows():
    rng = np.random.default_rng(21)
    V = rand_complex(rng, (4, 2))
    sys = build_augmented(V, 3)
    checked = 0
    for I in stream_valid_index_sets(sys):
        groups = np.bincount(sys.group_of_row[list(I)], minlength=4)
        ct = vertex_nullvector(sys, I)
        if ct is None or groups.max() < 2:
            continue
        c = to_complex(ct, 2)
        i = int(np.argmax(groups))
        assert abs(V[i] @ c) <= 1e-8 * np.linalg.norm(V[i])
        checked += 1
    assert checked > 0


def test_determinism_across_workers():
    rng = np.random.default_rng(31)
    V = rand_complex(rng, (14, 2))
    ref = solve_rankr(None, V, 2, 3)
    for w, b in ((2, 7), (8, 1), (3, 50)):
        sol = solve_rankr(None, V, 2, 3, ParallelConfig(workers=w, batch_size=b))
        assert (sol.assignment, sol.objective, sol.candidate_count) == \
            (ref.assignment, ref.objective, ref.candidate_count)


def test_timeout_returns_partial():
    rng = np.random.default_rng(32)
    V = rand_complex(rng, (30, 2))
    sol = solve_rankr(None, V, 2, 3, ParallelConfig(batch_size=1).with_timeout(0.0))
    assert sol.timed_out
    assert sol.objective == pytest.approx(factor_quadratic_form(V, sol.assignment))


def test_count_scaling_slope():
    rng = np.random.default_rng(404)
    ns = np.array([4, 6, 8, 10])
    counts = [solve_rankr(None, rand_complex(rng, (n, 2)), 2, 3).candidate_count for n in ns]
    slope = np.polyfit(np.log(ns), np.log(counts), 1)[0]
    assert abs(slope - 3) <= 0.5
    assert all(c <= candidate_count_bound(int(n), 2, 3) for n, c in zip(ns, counts))
