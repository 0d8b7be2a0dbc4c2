"""Alphabet geometry, assignments and complex quadratic forms."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla


class InvalidAlphabetError(ValueError):
    pass


class DimensionMismatchError(ValueError):
    pass


@dataclass(frozen=True)
class Alphabet:
    """The K-th roots of unity together with their decision boundaries.

    ``boundary_angles`` holds the geometrically distinct boundary rays
    ``pi * (2m + 1) / K``; for even K the rays at ``angle + pi`` describe the
    same line and are dropped, which leaves ``b_k`` of them.
    """

    K: int
    roots: np.ndarray = field(repr=False)
    boundary_angles: np.ndarray = field(repr=False)
    b_k: int

    def symbols(self, labels) -> np.ndarray:
        return self.roots[np.asarray(labels, dtype=np.int64) % self.K]

    def nearest_label(self, phase):
        """Label of the root closest in phase; exact ties go to the smaller label."""
        return nearest_label(phase, self.K)


def make_alphabet(K: int) -> Alphabet:
    if not isinstance(K, (int, np.integer)) or K < 2:
        raise InvalidAlphabetError(f"alphabet size must be an integer >= 2, got {K!r}")
    K = int(K)
    b_k = K // 2 if K % 2 == 0 else K
    roots = np.exp(2j * np.pi * np.arange(K) / K)
    roots[0] = 1.0
    angles = np.pi * (2 * np.arange(b_k) + 1) / K
    return Alphabet(K=K, roots=roots, boundary_angles=angles, b_k=b_k)


def nearest_label(phase, K: int):
    """Vectorised nearest-root label for phases in radians.

    A phase lying exactly on a bisector rounds to the smaller label; the
    bisector between K-1 and 0 resolves to 0.
    """
    x = np.asarray(phase, dtype=float) * (K / (2.0 * np.pi))
    lower = np.ceil(x - 0.5)
    lab = lower.astype(np.int64) % K
    lab = np.where((lower == x - 0.5) & (lab == K - 1), 0, lab)
    if np.ndim(lab) == 0:
        return int(lab)
    return lab


@dataclass(frozen=True)
class Assignment:
    labels: np.ndarray
    K: int

    def __post_init__(self):
        lab = np.asarray(self.labels, dtype=np.int64).reshape(-1)
        if lab.size and (lab.min() < 0 or lab.max() >= self.K):
            raise ValueError("assignment label out of range")
        lab = lab.copy()
        lab.setflags(write=False)
        object.__setattr__(self, "labels", lab)

    @property
    def n(self) -> int:
        return int(self.labels.size)

    @property
    def z(self) -> np.ndarray:
        return np.exp(2j * np.pi * self.labels / self.K)

    def rotate(self, t: int) -> "Assignment":
        return Assignment((self.labels + t) % self.K, self.K)

    def key(self) -> tuple:
        return tuple(int(v) for v in self.labels)

    def __eq__(self, other):
        if not isinstance(other, Assignment):
            return NotImplemented
        return self.K == other.K and np.array_equal(self.labels, other.labels)

    def __hash__(self):
        return hash((self.K, self.labels.tobytes()))


def symbols_from_labels(labels, K: int) -> np.ndarray:
    return np.exp(2j * np.pi * np.asarray(labels) / K)


@dataclass(frozen=True)
class HermitianOperand:
    """Square complex objective matrix, dense ndarray or scipy sparse.

    ``hermitian`` records that the caller asserts Q = Q^H (checked at
    construction against ``hermitian_tol`` for dense inputs).
    """

    entries: object
    hermitian: bool = True
    hermitian_tol: float = 1e-10
    is_psd_hint: bool = False

    def __post_init__(self):
        Q = self.entries
        if not sp.issparse(Q):
            Q = np.asarray(Q)
            if not np.iscomplexobj(Q):
                Q = Q.astype(float)
            object.__setattr__(self, "entries", Q)
        if Q.ndim != 2 or Q.shape[0] != Q.shape[1]:
            raise DimensionMismatchError(f"objective must be square, got shape {Q.shape}")
        if self.hermitian:
            dev = hermitian_deviation(Q)
            scale = max(1.0, frobenius_norm(Q))
            if dev > self.hermitian_tol * scale:
                raise ValueError(f"matrix is not Hermitian (max deviation {dev:.3g})")

    @property
    def n(self) -> int:
        return int(self.entries.shape[0])

    @property
    def is_sparse(self) -> bool:
        return sp.issparse(self.entries)

    def matvec(self, x: np.ndarray) -> np.ndarray:
        return self.entries @ x

    def dense(self) -> np.ndarray:
        if self.is_sparse:
            return self.entries.toarray()
        return self.entries

    def frobenius(self) -> float:
        return frobenius_norm(self.entries)


def as_operand(Q, hermitian: bool | None = None) -> HermitianOperand:
    """Coerce arrays, sparse matrices and Laplacian-like objects to an operand."""
    if isinstance(Q, HermitianOperand):
        return Q
    op = getattr(Q, "operand", None)
    if isinstance(op, HermitianOperand):
        return op
    if hermitian is None:
        hermitian = hermitian_deviation(Q) <= 1e-10 * max(1.0, frobenius_norm(Q))
    return HermitianOperand(Q, hermitian=hermitian)


def frobenius_norm(Q) -> float:
    if sp.issparse(Q):
        return float(spla.norm(Q))
    return float(np.linalg.norm(Q))


def hermitian_deviation(Q) -> float:
    if sp.issparse(Q):
        d = (Q - Q.conj().T).tocoo()
        return float(np.abs(d.data).max()) if d.nnz else 0.0
    Q = np.asarray(Q)
    return float(np.abs(Q - Q.conj().T).max()) if Q.size else 0.0


def quadratic_form(Q, a: Assignment) -> float:
    """Re(z^H Q z) for the symbol vector of ``a``."""
    op = as_operand(Q)
    if op.n != a.n:
        raise DimensionMismatchError(f"matrix is {op.n}x{op.n} but assignment has {a.n} labels")
    z = a.z
    val = np.vdot(z, op.matvec(z))
    if op.hermitian:
        tol = 1e-8 * max(op.frobenius(), 1e-300)
        if abs(val.imag) > tol and abs(val.imag) > 1e-12 * abs(val.real):
            raise ArithmeticError(f"imaginary part {val.imag:.3g} too large for a Hermitian form")
    return float(val.real)


def factor_quadratic_form(V: np.ndarray, a: Assignment) -> float:
    """||V^H z||^2, the form of Q = V V^H evaluated in O(n r)."""
    V = np.asarray(V)
    if V.ndim == 1:
        V = V[:, None]
    if V.shape[0] != a.n:
        raise DimensionMismatchError(f"factor has {V.shape[0]} rows but assignment has {a.n} labels")
    s = V.conj().T @ a.z
    return float(np.vdot(s, s).real)


def canonical_form(a: Assignment) -> Assignment:
    """Rotate labels so the first coordinate is 0 (global-phase representative)."""
    if a.n == 0:
        return a
    return Assignment((a.labels - a.labels[0]) % a.K, a.K)


def canonical_labels(labels: np.ndarray, K: int) -> np.ndarray:
    labels = np.asarray(labels, dtype=np.int64)
    if labels.size == 0:
        return labels
    return (labels - labels[0]) % K


def better(obj: float, labels: np.ndarray, best_obj: float, best_labels, K: int) -> bool:
    """Deterministic winner rule: larger objective, then smaller canonical labels."""
    if best_labels is None or obj > best_obj:
        return True
    if obj < best_obj:
        return False
    a = canonical_labels(labels, K)
    b = canonical_labels(best_labels, K)
    diff = np.nonzero(a != b)[0]
    return bool(diff.size) and a[diff[0]] < b[diff[0]]


def n_choose_k(n: int, k: int) -> int:
    if k < 0 or n < 0 or k > n:
        return 0
    return math.comb(n, k)
