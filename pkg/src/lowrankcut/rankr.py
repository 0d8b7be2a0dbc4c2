"""Exact maximiser of z^H Q z over A_K^n for rank-r PSD Q = V V^H.

``||V^H z||`` is maximised jointly over z and a unit auxiliary vector c in
C^r. For fixed c every z_i snaps to the root nearest V_i c, and the label of
coordinate i only changes where V_i c crosses one of the B_K boundary lines,
i.e. where Im(rho_m V_i c) = 0. Those conditions are the rows of a real
(n B_K) x 2r matrix; vertices of the resulting arrangement on the unit sphere
are its rank-(2r-1) row subsets, and every cell touches a vertex. Cells on
the boundary of the parameter box reduce to the rank-(r-1) problem on the
leading r-1 columns, which is solved recursively.

Two evaluation paths share that candidate set:

* ``method="vertex"``: solve every valid index set for its null vector and
  expand the ambiguous coordinates (the literal enumeration);
* ``method="sweep"``: for each (2r-2)-row prefix walk the circle of its null
  space, visiting the cells next to all vertices on it (compiled, default).
"""

from __future__ import annotations

import itertools
from collections.abc import Iterator
from dataclasses import dataclass, field

import numpy as np

from .core import (
    Assignment,
    DimensionMismatchError,
    as_operand,
    better,
    factor_quadratic_form,
    make_alphabet,
    n_choose_k,
    nearest_label,
    quadratic_form,
)
from .parallel import ParallelConfig, chunked, run_batches
from .rank1 import Solution, solve_rank1

RANK_TOL = 1e-9
EXPANSION_CAP = 4096
FALLBACK_PERTURBATIONS = 64
EXPAND_DELTA = 1e-7


@dataclass(frozen=True)
class AugmentedSystem:
    """Stacked real boundary conditions; row ``m * n + i`` is coordinate i, line m."""

    K: int
    n: int
    r: int
    rows: np.ndarray = field(repr=False)
    group_of_row: np.ndarray = field(repr=False)
    rotations: np.ndarray = field(repr=False)

    @property
    def b_k(self) -> int:
        return int(self.rotations.size)

    @property
    def n_rows(self) -> int:
        return int(self.rows.shape[0])


def build_augmented(V, K: int) -> AugmentedSystem:
    V = np.asarray(V, dtype=complex)
    if V.ndim == 1:
        V = V[:, None]
    if not np.any(V):
        raise ValueError("factor matrix is zero")
    alpha = make_alphabet(K)
    n, r = V.shape
    rho = np.exp(-1j * alpha.boundary_angles)
    blocks = [np.hstack([(rm * V).real, (rm * V).imag]) for rm in rho]
    rows = np.vstack(blocks)
    group = np.tile(np.arange(n), alpha.b_k)
    return AugmentedSystem(K=K, n=n, r=r, rows=rows, group_of_row=group, rotations=rho)


def to_complex(ct: np.ndarray, r: int) -> np.ndarray:
    """Auxiliary vector c from its real null vector: c = ct[r:] + i ct[:r].

    With rows [Re(rho V) | Im(rho V)] this pairing makes each row product
    equal Im(rho V_i c), the boundary condition.
    """
    ct = np.asarray(ct, dtype=float)
    return ct[r:] + 1j * ct[:r]


def stream_valid_index_sets(sys: AugmentedSystem, size: int | None = None,
                            last_below: int | None = None) -> Iterator[tuple[int, ...]]:
    """Lexicographic stream of row subsets with at most two rows per coordinate.

    ``size`` defaults to 2r - 1; ``last_below`` keeps only sets whose largest
    row is below that bound.
    """
    size = 2 * sys.r - 1 if size is None else size
    N = sys.n_rows
    top = N if last_below is None else min(N, last_below)
    if size == 0:
        yield ()
        return
    group = sys.group_of_row.tolist()
    counts = [0] * sys.n
    chosen: list[int] = []

    def rec(start: int):
        depth = len(chosen)
        if depth == size:
            yield tuple(chosen)
            return
        lim = N - (size - depth) + 1
        if depth == size - 1:
            lim = min(lim, top)
        for j in range(start, lim):
            g = group[j]
            if counts[g] >= 2:
                continue
            counts[g] += 1
            chosen.append(j)
            yield from rec(j + 1)
            chosen.pop()
            counts[g] -= 1

    yield from rec(0)


def count_valid_index_sets(n: int, b_k: int, size: int) -> int:
    """Coefficient of x^size in (1 + B x + C(B, 2) x^2)^n."""
    poly = [1]
    step = [1, b_k, n_choose_k(b_k, 2)]
    for _ in range(n):
        nxt = [0] * min(len(poly) + 2, size + 1)
        for a, ca in enumerate(poly):
            for b, cb in enumerate(step):
                if a + b <= size:
                    nxt[a + b] += ca * cb
        poly = nxt
    return poly[size] if size < len(poly) else 0


def vertex_nullvector(sys: AugmentedSystem, I, rank_tol: float = RANK_TOL):
    """Unit real null vector of the (2r-1) x 2r submatrix, or None if rank deficient."""
    A = sys.rows[list(I)]
    if A.shape[0] != 2 * sys.r - 1:
        raise ValueError(f"index set must hold {2 * sys.r - 1} rows")
    _, s, vt = np.linalg.svd(A, full_matrices=True)
    scale = np.abs(sys.rows).max()
    if s[0] <= 1e-14 * scale or s[-1] <= rank_tol * s[0]:
        return None
    ct = vt[-1]
    k = np.flatnonzero(np.abs(ct) > 1e-12)
    if k.size and ct[k[0]] < 0:
        ct = -ct
    return ct / np.linalg.norm(ct)


def _label_options(y: complex, rows_in_I: int, K: int, scale: float) -> list[int]:
    if rows_in_I >= 2 or abs(y) <= 1e-9 * scale:
        return list(range(K))
    ph = np.angle(y)
    opts = [nearest_label(ph + EXPAND_DELTA, K), nearest_label(ph - EXPAND_DELTA, K)]
    return sorted(set(opts))


def expand_vertex(V, c, I, sys: AugmentedSystem, cap: int = EXPANSION_CAP) -> list[Assignment]:
    """Assignments of every cell adjacent to the vertex c.

    Coordinates without a row in ``I`` take the nearest root of V_i c.
    A coordinate with one row in ``I`` sits on that boundary line and keeps
    the labels on both sides of it (a single label when the line is met on
    the antipodal ray, which for odd K points at a root). Two rows force
    V_i c = 0 and all K labels.
    """
    V = np.asarray(V, dtype=complex)
    K = sys.K
    y = V @ np.asarray(c, dtype=complex)
    base = np.asarray(nearest_label(np.angle(y), K), dtype=np.int64).reshape(-1)
    rows_per = np.bincount(sys.group_of_row[list(I)], minlength=sys.n)
    amb = np.flatnonzero(rows_per)
    scale = np.abs(V).sum(axis=1) * np.linalg.norm(c)
    options = [_label_options(y[i], rows_per[i], K, scale[i]) for i in amb]
    total = int(np.prod([len(o) for o in options])) if options else 1
    if total > cap:
        return _perturbed_cells(V, c, I, K)
    out = []
    for combo in itertools.product(*options):
        labels = base.copy()
        labels[amb] = combo
        out.append(Assignment(labels, K))
    return out


def _perturbed_cells(V, c, I, K) -> list[Assignment]:
    seed = int(np.frombuffer(np.asarray(sorted(I), dtype=np.int64).tobytes(), dtype=np.uint8).sum())
    rng = np.random.default_rng(seed)
    eps = 1e-6 * np.linalg.norm(c)
    out = []
    for _ in range(FALLBACK_PERTURBATIONS):
        cp = c + eps * (rng.standard_normal(c.size) + 1j * rng.standard_normal(c.size))
        out.append(Assignment(nearest_label(np.angle(V @ cp), K), K))
    return out


def candidate_count_bound(n: int, r: int, K: int, variant: str = "max") -> int:
    """Upper bound on the candidate set size, summed over ranks 1..r.

    Two closed forms are in circulation for the level-d term: ``"final"``
    without and ``"proof"`` with a C(B_K, 2)^i factor for doubled
    coordinates (and one extra power of B_K). ``"max"`` returns the larger.
    """
    if n < 1 or r < 1:
        raise ValueError("n and r must be positive")
    if variant not in ("max", "final", "proof"):
        raise ValueError(f"unknown variant {variant!r}")
    B = make_alphabet(K).b_k
    final = 0
    proof = 0
    for d in range(1, r + 1):
        for i in range(d):
            rest = n_choose_k(n - i, 2 * (d - i) - 1)
            final += n_choose_k(n, i) * rest * B ** (2 * (d - i) - 2) * (B - 1) ** i
            proof += (n_choose_k(n, i) * n_choose_k(B, 2) ** i * rest
                      * B ** (2 * d - 1 - 2 * i) * (B - 1) ** i)
    return {"final": final, "proof": proof, "max": max(final, proof)}[variant]


# --------------------------------------------------------------------------- solver

@dataclass
class _Best:
    K: int
    obj: float = -np.inf
    labels: np.ndarray | None = None
    count: int = 0
    scored: int = 0
    residual: float = 0.0
    norm_dev: float = 0.0

    def merge(self, other: "_Best") -> "_Best":
        if other.labels is not None and better(other.obj, other.labels, self.obj, self.labels, self.K):
            self.obj, self.labels = other.obj, other.labels
        self.count += other.count
        self.scored += other.scored
        self.residual = max(self.residual, other.residual)
        self.norm_dev = max(self.norm_dev, other.norm_dev)
        return self


def _row_space(sys: AugmentedSystem, tol: float = RANK_TOL):
    """Rows in coordinates of their own span, and the lift back to R^{2r}.

    Labels depend only on the sign pattern of the rows applied to c~, so
    directions outside the row space (real V with K = 2, for instance)
    carry no information and are dropped; the arrangement is then in
    general position again in dimension ``d`` = rank of the rows.
    """
    _, s, vt = np.linalg.svd(sys.rows, full_matrices=False)
    d = int((s > tol * s[0]).sum()) if s.size and s[0] > 0 else 0
    if d == 2 * sys.r:
        return np.ascontiguousarray(sys.rows), np.eye(d), d
    B = np.ascontiguousarray(vt[:d].T)
    return np.ascontiguousarray(sys.rows @ B), B, d


def _vertex_work(V, sys, W, Bm, rank_tol):
    r = sys.r
    K = sys.K
    scale = np.abs(W).max()

    def work(batch):
        out = _Best(K)
        A = W[np.asarray(batch)]
        _, s, vt = np.linalg.svd(A, full_matrices=True)
        for I, sv, v_ in zip(batch, s, vt):
            if sv[0] <= 1e-14 * scale or sv[-1] <= rank_tol * sv[0]:
                continue
            y = v_[-1] / np.linalg.norm(v_[-1])
            ct = Bm @ y
            out.count += 1
            res = np.abs(sys.rows[list(I)] @ ct).max()
            out.residual = max(out.residual, float(res))
            out.norm_dev = max(out.norm_dev, abs(float(np.linalg.norm(ct)) - 1.0))
            c = to_complex(ct, r)
            for sign in (1.0, -1.0):
                for a in expand_vertex(V, sign * c, I, sys):
                    obj = factor_quadratic_form(V, a)
                    out.scored += 1
                    if better(obj, a.labels, out.obj, out.labels, K):
                        out.obj, out.labels = obj, a.labels
        return out

    return work


def _sweep_work(V, sys, W, Bm, rank_tol):
    from ._sweep import sweep_batch

    wnorm = np.linalg.norm(W, axis=1)
    grp = np.ascontiguousarray(sys.group_of_row, dtype=np.int64)
    Vc = np.ascontiguousarray(V, dtype=np.complex128)
    Bm = np.ascontiguousarray(Bm, dtype=float)
    K = sys.K
    plen = W.shape[1] - 2

    def work(batch):
        prefixes = np.asarray(batch, dtype=np.int64).reshape(len(batch), plen)
        labels = np.zeros(sys.n, dtype=np.int64)
        stats = np.array([-np.inf, 0.0, 0.0, 0.0, 0.0])
        sweep_batch(Vc, W, Bm, wnorm, grp, K, prefixes, rank_tol, labels, stats)
        out = _Best(K)
        if stats[0] > -np.inf:
            # re-score from scratch so the value does not depend on the walk
            out.labels = labels
            out.obj = factor_quadratic_form(Vc, Assignment(labels, K))
        out.count = int(stats[1])
        out.scored = int(stats[2])
        out.residual = float(stats[3])
        out.norm_dev = float(stats[4])
        return out

    return work


def _line_cells(V, sys, Bm) -> _Best:
    # one-dimensional row space: the two half-lines are the only cells
    out = _Best(sys.K)
    for sign in (1.0, -1.0):
        a = Assignment(nearest_label(np.angle(V @ to_complex(sign * Bm[:, 0], sys.r)), sys.K), sys.K)
        obj = factor_quadratic_form(V, a)
        out.scored += 1
        if better(obj, a.labels, out.obj, out.labels, sys.K):
            out.obj, out.labels = obj, a.labels
    return out


def solve_rankr(Q, V, r: int, K: int, engine: ParallelConfig | None = None,
                method: str = "sweep", rank_tol: float = RANK_TOL) -> Solution:
    """Exact solver for Q = V V^H of rank r (approximate otherwise).

    ``V`` holds at least r columns ordered by decreasing weight; only the
    first r are used. Candidates are ranked by ||V^H z||^2 and the winner
    is re-scored as Re(z^H Q z) when ``Q`` is given. ``candidate_count``
    counts the vertices visited at every rank level plus the n distinct
    rank-1 boundary candidates (the last of the n + 1 rank-1 candidates
    is a global rotation of the first).
    """
    engine = engine or ParallelConfig()
    V = np.asarray(V, dtype=complex)
    if V.ndim == 1:
        V = V[:, None]
    n = V.shape[0]
    if r < 1 or V.shape[1] < r:
        raise ValueError(f"need 1 <= r <= {V.shape[1]} factor columns, got r={r}")
    V = np.ascontiguousarray(V[:, :r])
    op = None
    if Q is not None:
        op = as_operand(Q)
        if op.n != n:
            raise DimensionMismatchError(f"factor has {n} rows but matrix is {op.n}x{op.n}")
    B = make_alphabet(K).b_k
    if 2 * r - 1 > n * B:
        raise ValueError(f"rank {r} needs 2r-1 <= n*B_K = {n * B} boundary rows")
    if method not in ("sweep", "vertex"):
        raise ValueError(f"unknown method {method!r}")

    if r == 1:
        sol = solve_rank1(None, V[:, 0], K, engine)
        return _finish(op, V, sol.assignment, sol.candidate_count, sol.assignments_scored,
                       0.0, 0.0, sol.timed_out)

    sub = solve_rankr(None, V[:, : r - 1], r - 1, K, engine, method, rank_tol)

    best = _Best(K)
    timed_out = sub.timed_out
    if not np.any(V[:, r - 1]):
        # the factor really has rank below r; the recursion is exhaustive
        pass
    elif not timed_out:
        sys = build_augmented(V, K)
        W, Bm, d = _row_space(sys)
        if d <= 1:
            best = _line_cells(V, sys, Bm)
        else:
            size = d - 1 if method == "vertex" else d - 2
            total = count_valid_index_sets(n, B, size)
            if method == "vertex":
                stream = stream_valid_index_sets(sys, size)
                work = _vertex_work(V, sys, W, Bm, rank_tol)
            else:
                stream = stream_valid_index_sets(sys, size, last_below=sys.n_rows - 1)
                work = _sweep_work(V, sys, W, Bm, rank_tol)
            batches = chunked(stream, engine.resolve_batch(total))
            best, timed_out = run_batches(batches, work, _Best.merge, best, engine)

    sub_count = sub.candidate_count - (1 if r == 2 else 0)
    sub_labels = sub.assignment.labels
    sub_obj = factor_quadratic_form(V, sub.assignment)
    if best.labels is None or better(sub_obj, sub_labels, best.obj, best.labels, K):
        winner = sub_labels
    else:
        winner = best.labels
    return _finish(op, V, Assignment(winner, K), best.count + sub_count,
                   best.scored + sub.assignments_scored,
                   max(best.residual, sub.max_vertex_residual),
                   max(best.norm_dev, sub.max_norm_deviation), timed_out)


def _finish(op, V, a: Assignment, count, scored, residual, norm_dev, timed_out) -> Solution:
    objective = quadratic_form(op, a) if op is not None else factor_quadratic_form(V, a)
    return Solution(a, objective, candidate_count=int(count), timed_out=bool(timed_out),
                    assignments_scored=int(scored), max_vertex_residual=float(residual),
                    max_norm_deviation=float(norm_dev))
