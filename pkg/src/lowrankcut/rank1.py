"""Exact maximiser of z^H Q z over A_K^n for rank-1 PSD Q.

With Q = lam * q q^H the objective is lam * |z^H q|^2. Rotating z^H q by a
phase phi and letting every z_i snap to the root nearest q_i e^{i phi}, the
optimal assignment is piecewise constant in phi on an interval of width
2 pi / K, changing one coordinate at a time at n sorted boundary points.
The n + 1 resulting assignments contain the maximiser.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from collections.abc import Iterator

import numpy as np

from .core import (
    Assignment,
    DimensionMismatchError,
    as_operand,
    better,
    canonical_labels,
    make_alphabet,
    quadratic_form,
)
from .parallel import ParallelConfig, run_batches

TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class BoundarySchedule:
    theta: np.ndarray = field(repr=False)
    phi: np.ndarray = field(repr=False)
    k0: np.ndarray = field(repr=False)
    order: np.ndarray = field(repr=False)
    K: int

    @property
    def n(self) -> int:
        return int(self.theta.size)


@dataclass(frozen=True)
class Solution:
    """Winner of an exact solver together with its bookkeeping."""

    assignment: Assignment
    objective: float
    candidate_count: int
    timed_out: bool = False
    assignments_scored: int = 0
    max_vertex_residual: float = 0.0
    max_norm_deviation: float = 0.0

    def __iter__(self):
        return iter((self.assignment, self.objective))


def boundary_schedule(q, K: int) -> BoundarySchedule:
    q = np.asarray(q, dtype=complex).reshape(-1)
    make_alphabet(K)
    theta = np.mod(np.arctan2(q.imag, q.real), TWO_PI)
    theta[theta >= TWO_PI] = 0.0
    theta[q == 0] = 0.0
    x = K * theta / TWO_PI
    fl = np.floor(x)
    phi = (TWO_PI / K) * (0.5 + fl - x)
    k0 = fl.astype(np.int64) % K
    order = np.argsort(phi, kind="stable")
    return BoundarySchedule(theta=theta, phi=phi, k0=k0, order=order, K=K)


def enumerate_rank1_candidates(sched: BoundarySchedule) -> Iterator[Assignment]:
    """The k0 assignment, then one label bump per boundary point in sorted order."""
    labels = sched.k0.copy()
    yield Assignment(labels, sched.K)
    for i in sched.order:
        labels[i] = (labels[i] + 1) % sched.K
        yield Assignment(labels, sched.K)


def candidate_labels(sched: BoundarySchedule, position: int) -> np.ndarray:
    """Labels of the candidate at stream ``position`` (0 .. n)."""
    labels = sched.k0.copy()
    idx = sched.order[:position]
    labels[idx] = (labels[idx] + 1) % sched.K
    return labels


def rank1_scores(sched: BoundarySchedule, q) -> np.ndarray:
    """|z^H q|^2 for all n + 1 candidates, via a running inner product."""
    q = np.asarray(q, dtype=complex).reshape(-1)
    K = sched.K
    w = np.exp(-2j * np.pi * np.arange(K) / K)  # conj of the roots
    k0 = sched.k0
    start = np.sum(w[k0] * q)
    i = sched.order
    steps = (w[(k0[i] + 1) % K] - w[k0[i]]) * q[i]
    s = np.concatenate([[start], start + np.cumsum(steps)])
    return (s * s.conj()).real


def solve_rank1(Q, q, K: int, engine: ParallelConfig | None = None) -> Solution:
    """Best of the n + 1 boundary candidates for eigenvector ``q``.

    Candidates are ranked by |z^H q|; the winner is re-scored as Re(z^H Q z)
    (or lam-free |z^H q|^2 when ``Q`` is None).
    """
    engine = engine or ParallelConfig()
    q = np.asarray(q, dtype=complex).reshape(-1)
    n = q.size
    op = None
    if Q is not None:
        op = as_operand(Q)
        if op.n != n:
            raise DimensionMismatchError(f"vector has {n} entries but matrix is {op.n}x{op.n}")
    sched = boundary_schedule(q, K)
    scores = rank1_scores(sched, q)

    size = engine.resolve_batch(n + 1)
    chunks = ((lo, min(lo + size, n + 1)) for lo in range(0, n + 1, size))

    def work(bounds):
        lo, hi = bounds
        seg = scores[lo:hi]
        top = seg.max()
        best_labels = None
        for pos in np.flatnonzero(seg == top) + lo:
            labels = candidate_labels(sched, int(pos))
            if better(top, labels, top, best_labels, K):
                best_labels = labels
        return top, best_labels, hi - lo

    def fold(acc, res):
        best_obj, best_labels, count = acc
        obj, labels, c = res
        if better(obj, labels, best_obj, best_labels, K):
            best_obj, best_labels = obj, labels
        return best_obj, best_labels, count + c

    (best_obj, best_labels, count), timed_out = run_batches(
        chunks, work, fold, (-np.inf, None, 0), engine)
    if best_labels is None:
        best_labels = sched.k0.copy()
    winner = Assignment(best_labels, K)
    objective = quadratic_form(op, winner) if op is not None else float(best_obj)
    return Solution(winner, objective, candidate_count=count, timed_out=timed_out,
                    assignments_scored=count)


def canonical_winner(sol: Solution) -> tuple:
    return tuple(canonical_labels(sol.assignment.labels, sol.assignment.K))
