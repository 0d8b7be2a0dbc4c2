"""Top-r spectral factorisation of the objective matrix."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse.linalg as spla

from .core import HermitianOperand, as_operand


class ConvergenceError(RuntimeError):
    pass


ITERATIVE_TOL = 1e-10
ITERATIVE_MAXITER = 10_000


@dataclass(frozen=True)
class SpectralFactor:
    """Leading eigen/singular pairs; ``Q_r = vectors @ diag(values) @ vectors^H``."""

    n: int
    r: int
    values: np.ndarray
    vectors: np.ndarray = field(repr=False)
    residual_estimate: float
    hermitian: bool = True

    @property
    def scaled(self) -> np.ndarray:
        """Factor V with V V^H = Q_r (negative values are truncated to zero)."""
        return self.vectors * np.sqrt(np.clip(self.values, 0.0, None))[None, :]


def _fix_phase(U: np.ndarray) -> np.ndarray:
    U = np.array(U, dtype=complex)
    for j in range(U.shape[1]):
        col = U[:, j]
        k = int(np.argmax(np.abs(col)))
        if abs(col[k]) > 0:
            U[:, j] = col * (abs(col[k]) / col[k])
    return U


def top_r_factor(Q, r: int, seed: int | None = 0) -> SpectralFactor:
    """Leading rank-r factor of ``Q``.

    Hermitian inputs are ordered by algebraic eigenvalue, others by singular
    value with the left singular vectors used on both sides. Dense operands
    go through LAPACK; sparse ones through ARPACK with a seeded start vector.
    """
    op = as_operand(Q)
    n = op.n
    if not 1 <= r <= n:
        raise ValueError(f"rank must satisfy 1 <= r <= n (r={r}, n={n})")

    if op.hermitian:
        vals, vecs, resid = _top_eigh(op, r, seed)
    else:
        vals, vecs, resid = _top_svd(op, r, seed)
    vals = np.asarray(vals, dtype=float)
    # near-PSD truncation: anything below zero carries no weight in V V^H
    floor = -1e-8 * max(abs(vals[0]), 1e-300)
    vals = np.where(vals < floor, vals, np.maximum(vals, 0.0)) if vals.size else vals
    return SpectralFactor(n=n, r=r, values=vals, vectors=_fix_phase(vecs),
                          residual_estimate=float(resid), hermitian=op.hermitian)


def _start_vector(n: int, seed, complex_: bool) -> np.ndarray:
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(n)
    if complex_:
        v = v + 1j * rng.standard_normal(n)
    return v


def _top_eigh(op: HermitianOperand, r: int, seed):
    n = op.n
    if not op.is_sparse or r + 1 >= n - 1:
        w, U = np.linalg.eigh(op.dense())
        order = np.argsort(-w, kind="stable")
        w, U = w[order], U[:, order]
        resid = w[r] if r < n else 0.0
        return w[:r], U[:, :r], resid
    A = op.entries
    k = min(r + 1, n - 1)
    try:
        w, U = spla.eigsh(A, k=k, which="LA", tol=ITERATIVE_TOL, maxiter=ITERATIVE_MAXITER,
                          v0=_start_vector(n, seed, np.iscomplexobj(A.data)))
    except spla.ArpackNoConvergence as exc:
        raise ConvergenceError(f"eigensolver did not converge for r={r}") from exc
    order = np.argsort(-w, kind="stable")
    w, U = w[order], U[:, order]
    resid = w[r] if k > r else 0.0
    return w[:r], U[:, :r], resid


def _top_svd(op: HermitianOperand, r: int, seed):
    n = op.n
    if not op.is_sparse or r + 1 >= n - 1:
        U, s, _ = np.linalg.svd(op.dense())
        resid = s[r] if r < n else 0.0
        return s[:r], U[:, :r], resid
    k = min(r + 1, n - 1)
    try:
        U, s, _ = spla.svds(op.entries, k=k, tol=ITERATIVE_TOL, maxiter=ITERATIVE_MAXITER,
                            v0=_start_vector(n, seed, np.iscomplexobj(op.entries.data)))
    except spla.ArpackNoConvergence as exc:
        raise ConvergenceError(f"SVD did not converge for r={r}") from exc
    order = np.argsort(-s, kind="stable")
    s, U = s[order], U[:, order]
    return s[:r], U[:, :r], s[r] if k > r else 0.0


def low_rank_reconstruct(f: SpectralFactor) -> HermitianOperand:
    """Dense V_r diag(values) V_r^H, symmetrised to be exactly Hermitian."""
    U = f.vectors
    A = (U * f.values[None, :]) @ U.conj().T
    A = 0.5 * (A + A.conj().T)
    psd = bool((f.values >= 0).all())
    return HermitianOperand(A, hermitian=True, is_psd_hint=psd)


def eigengap(values_full, r: int) -> float:
    """min(min_{j<r} |lam_j - lam_{j+1}|, lam_r); the inner min is empty for r = 1."""
    lam = np.asarray(values_full, dtype=float)
    if not 1 <= r <= lam.size:
        raise ValueError(f"rank {r} out of range for {lam.size} eigenvalues")
    gaps = np.abs(np.diff(lam[:r]))
    return float(min(gaps.min(), lam[r - 1])) if gaps.size else float(lam[r - 1])
