"""Low-rank approximate solver, baselines, exhaustive oracle and bound diagnostics."""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .core import (
    Assignment,
    HermitianOperand,
    as_operand,
    canonical_form,
    quadratic_form,
)
from .graph import Laplacian, WeightedGraph, cut_value, laplacian
from .parallel import ParallelConfig
from .rankr import solve_rankr
from .spectra import eigengap, top_r_factor

ORACLE_LIMIT = 10**7
ORACLE_CHUNK = 1 << 14


class InstanceTooLargeError(ValueError):
    pass


@dataclass(frozen=True)
class SolveReport:
    algorithm: str
    rank: int | None
    K: int
    n: int
    objective: float
    assignment: Assignment
    candidates_evaluated: int
    wall_time_ms: int
    cut_value: float | None = None
    seed: int | None = None
    workers: int = 1
    timed_out: bool = False

    def to_dict(self, input_name: str = "", m: int | None = None) -> dict:
        return {
            "input": input_name,
            "algorithm": self.algorithm,
            "rank": self.rank,
            "k": self.K,
            "n": self.n,
            "m": m,
            "objective": float(self.objective),
            "cut_value": None if self.cut_value is None else float(self.cut_value),
            "assignment": [int(v) for v in self.assignment.labels],
            "candidates_evaluated": int(self.candidates_evaluated),
            "wall_time_ms": int(self.wall_time_ms),
            "workers": int(self.workers),
            "seed": self.seed,
            "timed_out": bool(self.timed_out),
        }


def _elapsed_ms(t0: float) -> int:
    return int(round((time.perf_counter() - t0) * 1000))


def _unwrap(Q):
    if isinstance(Q, Laplacian):
        return Q.operand
    return as_operand(Q)


def approximate_low_rank(Q, r: int, K: int, engine: ParallelConfig | None = None,
                         graph: WeightedGraph | None = None, seed: int | None = 0,
                         method: str = "sweep") -> SolveReport:
    """Solve exactly on the rank-r truncation of Q and score the result on Q itself."""
    t0 = time.perf_counter()
    engine = engine or ParallelConfig()
    op = _unwrap(Q)
    if not 1 <= r <= op.n:
        raise ValueError(f"rank must satisfy 1 <= r <= n (r={r}, n={op.n})")
    f = top_r_factor(op, r, seed=seed)
    sol = solve_rankr(None, f.scaled, r, K, engine, method=method)
    a = canonical_form(sol.assignment)
    obj = quadratic_form(op, a)
    cut = cut_value(graph, a) if graph is not None and K == 3 else None
    return SolveReport("rank1" if r == 1 else "rankr", r, K, op.n, obj, a, sol.candidate_count,
                       _elapsed_ms(t0), cut_value=cut, seed=seed, workers=engine.workers,
                       timed_out=sol.timed_out)


# --------------------------------------------------------------------------- oracle

def _labels_block(lo: int, hi: int, n: int, K: int) -> np.ndarray:
    """Assignments lo..hi-1 in lexicographic order with the first label fixed to 0."""
    idx = np.arange(lo, hi, dtype=np.int64)
    out = np.zeros((idx.size, n), dtype=np.int64)
    for col in range(n - 1, 0, -1):
        out[:, col] = idx % K
        idx //= K
    return out


def brute_force_oracle(Q, K: int, limit: int = ORACLE_LIMIT) -> tuple[Assignment, float]:
    """Exhaustive maximiser of Re(z^H Q z) with z_1 = 1; first maximiser in lexicographic order."""
    op = _unwrap(Q)
    n = op.n
    total = K ** (n - 1)
    if total > limit:
        raise InstanceTooLargeError(f"oracle needs {K}^{n - 1} = {total} evaluations (limit {limit})")
    M = op.dense()
    roots = np.exp(2j * np.pi * np.arange(K) / K)
    best_val, best_labels = -np.inf, None
    for lo in range(0, total, ORACLE_CHUNK):
        labs = _labels_block(lo, min(total, lo + ORACLE_CHUNK), n, K)
        Z = roots[labs]
        vals = np.einsum("bi,bi->b", Z.conj(), Z @ M.T).real
        k = int(np.argmax(vals))
        if vals[k] > best_val:
            best_val, best_labels = vals[k], labs[k]
    a = Assignment(best_labels, K)
    return a, quadratic_form(op, a)


# --------------------------------------------------------------------------- baselines

def random_baseline(g: WeightedGraph, seed: int, K: int = 3,
                    engine: ParallelConfig | None = None) -> SolveReport:
    """Best of n + 1 uniform random assignments by cut value."""
    t0 = time.perf_counter()
    engine = engine or ParallelConfig()
    rng = np.random.default_rng(seed)
    n = g.n
    best_cut, best = -np.inf, None
    drawn = 0
    timed_out = False
    chunk = max(1, (1 << 20) // n)
    while drawn < n + 1:
        if engine.expired():
            timed_out = True
            break
        size = min(chunk, n + 1 - drawn)
        labs = rng.integers(0, K, size=(size, n))
        cuts = (labs[:, g.src] != labs[:, g.dst]) @ g.weight if g.m else np.zeros(size)
        k = int(np.argmax(cuts))
        if cuts[k] > best_cut:
            best_cut, best = float(cuts[k]), labs[k]
        drawn += size
    if best is None:
        best, best_cut = np.zeros(n, dtype=np.int64), 0.0
    a = Assignment(best, K)
    obj = quadratic_form(laplacian(g).operand, a)
    return SolveReport("random", None, K, n, obj, a, drawn, _elapsed_ms(t0),
                       cut_value=best_cut, seed=seed, workers=engine.workers, timed_out=timed_out)


def greedy_baseline(g: WeightedGraph, seed: int | None = None, K: int = 3,
                    engine: ParallelConfig | None = None) -> SolveReport:
    """Lock one (node, label) pair at a time, always the one with the largest cut gain.

    The highest-degree node goes first with label 0; ties prefer the lower
    node index, then the lower label. Deterministic, so ``seed`` is only
    echoed into the report.
    """
    t0 = time.perf_counter()
    engine = engine or ParallelConfig()
    n = g.n
    A = g.adjacency().tocsr()
    S = np.zeros((n, K))  # weight towards locked neighbours, per label
    locked = np.zeros(n, dtype=bool)
    labels = np.zeros(n, dtype=np.int64)
    timed_out = False

    def lock(v, lab):
        locked[v] = True
        labels[v] = lab
        lo, hi = A.indptr[v], A.indptr[v + 1]
        np.add.at(S[:, lab], A.indices[lo:hi], A.data[lo:hi])

    lock(int(np.argmax(g.degrees())), 0)
    steps = 1
    while steps < n:
        if steps % 64 == 0 and engine.expired():
            timed_out = True
            break
        gain = S.sum(axis=1, keepdims=True) - S
        gain[locked] = -np.inf
        k = int(np.argmax(gain))
        lock(k // K, k % K)
        steps += 1
    a = Assignment(labels, K)
    obj = quadratic_form(laplacian(g).operand, a)
    return SolveReport("greedy", None, K, n, obj, a, steps * K, _elapsed_ms(t0),
                       cut_value=cut_value(g, a), seed=seed, workers=engine.workers,
                       timed_out=timed_out)


# --------------------------------------------------------------------------- perturbation harness

@dataclass(frozen=True)
class PerturbationInstance:
    Qstar: HermitianOperand
    H: np.ndarray = field(repr=False)
    delta: float
    spectrum: np.ndarray
    mu_hat: float
    frame: np.ndarray = field(repr=False)
    hermitian_noise: bool = True

    @property
    def n(self) -> int:
        return self.Qstar.n

    @property
    def Q(self) -> HermitianOperand:
        M = self.Qstar.dense() + self.H
        return HermitianOperand(M, hermitian=self.hermitian_noise)

    @property
    def noise_norm(self) -> float:
        return float(np.linalg.norm(self.H, 2))


def complex_gaussian(rng: np.random.Generator, shape, scale: float) -> np.ndarray:
    """Entries with independent N(0, scale^2 / 2) real and imaginary parts."""
    s = scale / np.sqrt(2.0)
    return s * rng.standard_normal(shape) + 1j * s * rng.standard_normal(shape)


def make_perturbation(n: int, rstar: int, spectrum, noise_scale: float,
                      hermitian_noise: bool = True, seed: int | None = 0) -> PerturbationInstance:
    lam = np.asarray(spectrum, dtype=float)
    if lam.size != rstar or (lam <= 0).any() or (np.diff(lam) > 0).any():
        raise ValueError("spectrum must hold rstar positive non-increasing values")
    if rstar > n:
        raise ValueError("rstar cannot exceed n")
    rng = np.random.default_rng(seed)
    U, _ = np.linalg.qr(complex_gaussian(rng, (n, rstar), 1.0))
    Qs = (U * lam) @ U.conj().T
    Qs = 0.5 * (Qs + Qs.conj().T)
    H = complex_gaussian(rng, (n, n), noise_scale)
    if hermitian_noise:
        # keeps the off-diagonal entry variance at noise_scale^2
        H = (H + H.conj().T) / np.sqrt(2.0)
    mu = float(np.abs(U[:, 0]).max() * np.sqrt(n))
    return PerturbationInstance(HermitianOperand(Qs, is_psd_hint=True), H, eigengap(lam, rstar),
                                lam, mu, U, hermitian_noise)


def _lambda_after(inst: PerturbationInstance, r: int) -> float:
    return float(inst.spectrum[r]) if r < inst.spectrum.size else 0.0


def _opt_and_rank_r(inst: PerturbationInstance, r: int, K: int):
    opt_a, _ = brute_force_oracle(inst.Qstar, K)
    rep = approximate_low_rank(inst.Q, r, K)
    opt = quadratic_form(inst.Qstar, canonical_form(opt_a))
    val = quadratic_form(inst.Qstar, canonical_form(rep.assignment))
    return opt, val


def check_additive_bound(inst: PerturbationInstance, r: int, K: int) -> dict:
    """|OPT - z_r^H Q* z_r| against n (lam_{r+1} + lam_1 ||H|| / delta)."""
    h = inst.noise_norm
    opt, val = _opt_and_rank_r(inst, r, K)
    lhs = abs(opt - val)
    rhs = inst.n * (_lambda_after(inst, r) + inst.spectrum[0] / inst.delta * h)
    if rhs > 0:
        const = lhs / rhs
    else:
        const = 0.0 if lhs == 0 else float("inf")
    return {
        "status": "ok" if h <= inst.delta / 2 else "inconclusive",
        "n": inst.n, "r": r, "k": K,
        "opt": float(opt), "value": float(val),
        "lhs": float(lhs), "rhs_core": float(rhs), "implied_constant": float(const),
        "noise_norm": h, "delta": float(inst.delta),
    }


def check_multiplicative_bound(inst: PerturbationInstance, r: int, K: int) -> dict:
    """z_r^H Q* z_r / OPT beside 1 - (lam_{r+1}/lam_1 + ||H|| / delta); mu_hat is reported only."""
    if K < 3:
        raise ValueError("multiplicative bound is stated for K >= 3")
    h = inst.noise_norm
    opt, val = _opt_and_rank_r(inst, r, K)
    ratio = val / opt if opt > 0 else 1.0
    ref = 1.0 - (_lambda_after(inst, r) / inst.spectrum[0] + h / inst.delta)
    return {
        "status": "ok" if h <= inst.delta / 2 else "inconclusive",
        "n": inst.n, "r": r, "k": K,
        "ratio": float(ratio), "reference": float(ref), "mu_hat": inst.mu_hat,
        "noise_norm": h, "delta": float(inst.delta),
    }
