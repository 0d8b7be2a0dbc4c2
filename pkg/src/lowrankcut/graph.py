"""Weighted graphs, GSet I/O, generators, Laplacians and 3-cut accounting."""

from __future__ import annotations

import io
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .core import Assignment, DimensionMismatchError, HermitianOperand, quadratic_form

DENSE_THRESHOLD = 4096
REGULAR_MAX_RETRIES = 100


class GraphError(ValueError):
    pass


class GSetParseError(GraphError):
    """Malformed GSet / edge-list input; ``line`` is 1-based."""

    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


class HeaderError(GSetParseError):
    pass


class NodeIndexError(GSetParseError):
    pass


class SelfLoopError(GSetParseError):
    pass


class DuplicateEdgeError(GSetParseError):
    pass


@dataclass(frozen=True)
class WeightedGraph:
    """Undirected simple graph with edges stored as parallel arrays, ``src < dst``."""

    n: int
    src: np.ndarray = field(repr=False)
    dst: np.ndarray = field(repr=False)
    weight: np.ndarray = field(repr=False)

    def __post_init__(self):
        src = np.asarray(self.src, dtype=np.int64).reshape(-1)
        dst = np.asarray(self.dst, dtype=np.int64).reshape(-1)
        w = np.asarray(self.weight, dtype=float).reshape(-1)
        if self.n < 1:
            raise GraphError("graph needs at least one node")
        if not (src.size == dst.size == w.size):
            raise GraphError("edge arrays differ in length")
        if src.size:
            if (src >= dst).any():
                raise GraphError("edges must satisfy i < j (no self-loops)")
            if src.min() < 0 or dst.max() >= self.n:
                raise GraphError("edge endpoint out of range")
            keys = src * self.n + dst
            if np.unique(keys).size != keys.size:
                raise GraphError("duplicate edge")
        for a in (src, dst, w):
            a.setflags(write=False)
        object.__setattr__(self, "src", src)
        object.__setattr__(self, "dst", dst)
        object.__setattr__(self, "weight", w)

    @classmethod
    def from_edges(cls, n: int, edges) -> "WeightedGraph":
        edges = list(edges)
        if not edges:
            return cls(n, np.zeros(0, int), np.zeros(0, int), np.zeros(0))
        arr = np.array([(min(i, j), max(i, j), w) for i, j, w in edges], dtype=float)
        return cls(n, arr[:, 0].astype(np.int64), arr[:, 1].astype(np.int64), arr[:, 2])

    @property
    def m(self) -> int:
        return int(self.src.size)

    @property
    def edges(self) -> list[tuple[int, int, float]]:
        return [(int(i), int(j), float(w)) for i, j, w in zip(self.src, self.dst, self.weight)]

    def degrees(self) -> np.ndarray:
        """Unweighted degree of each node."""
        return np.bincount(np.concatenate([self.src, self.dst]), minlength=self.n)

    def adjacency(self) -> sp.csr_matrix:
        W = sp.coo_matrix((self.weight, (self.src, self.dst)), shape=(self.n, self.n))
        return (W + W.T).tocsr()


# --------------------------------------------------------------------------- I/O

_FIELD_SEP = re.compile(r"[ \t]+")


def _decode(text) -> str:
    if isinstance(text, (bytes, bytearray)):
        return text.decode("ascii")
    if hasattr(text, "read"):
        return _decode(text.read())
    return str(text)


def _number(tok: str, lineno: int, what: str):
    try:
        return int(tok)
    except ValueError:
        pass
    try:
        return float(tok)
    except ValueError:
        raise GSetParseError(f"cannot parse {what} {tok!r}", lineno) from None


def _parse(text, *, zero_indexed: bool, allow_missing_weight: bool) -> WeightedGraph:
    lines = _decode(text).replace("\r\n", "\n").replace("\r", "\n").split("\n")
    records = []
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip(" \t")
        if not line:
            continue
        if line.startswith("#"):
            if records:
                raise GSetParseError("comment after data", lineno)
            if line.lower().lstrip("# ").startswith("zero-indexed"):
                zero_indexed = True
            continue
        records.append((lineno, _FIELD_SEP.split(line)))
    if not records:
        raise HeaderError("missing 'n m' header", 1)

    lineno, head = records[0]
    if len(head) != 2:
        raise HeaderError("header must be 'n m'", lineno)
    n, m = (_number(t, lineno, "header field") for t in head)
    if not isinstance(n, int) or not isinstance(m, int) or n < 1 or m < 0:
        raise HeaderError("header must hold a positive node count and edge count", lineno)
    body = records[1:]
    if len(body) != m:
        where = body[m][0] if len(body) > m else (body[-1][0] if body else lineno)
        raise HeaderError(f"header announces {m} edges but {len(body)} edge lines follow", where)

    offset = 0 if zero_indexed else 1
    src = np.empty(m, dtype=np.int64)
    dst = np.empty(m, dtype=np.int64)
    w = np.empty(m)
    seen: set[tuple[int, int]] = set()
    for k, (lineno, toks) in enumerate(body):
        if len(toks) == 2 and allow_missing_weight:
            toks = toks + ["1"]
        if len(toks) != 3:
            raise GSetParseError("edge line must be 'i j w'", lineno)
        i, j = (_number(t, lineno, "node index") for t in toks[:2])
        if not isinstance(i, int) or not isinstance(j, int):
            raise NodeIndexError("node indices must be integers", lineno)
        i -= offset
        j -= offset
        if not (0 <= i < n and 0 <= j < n):
            raise NodeIndexError(f"node index out of range for n={n}", lineno)
        if i == j:
            raise SelfLoopError(f"self-loop on node {i + offset}", lineno)
        a, b = (i, j) if i < j else (j, i)
        if (a, b) in seen:
            raise DuplicateEdgeError(f"duplicate edge ({i + offset}, {j + offset})", lineno)
        seen.add((a, b))
        src[k], dst[k], w[k] = a, b, float(_number(toks[2], lineno, "weight"))
    return WeightedGraph(n, src, dst, w)


def parse_gset(text) -> WeightedGraph:
    """Parse the GSet text format: header ``n m`` then ``i j w`` lines, 1-indexed."""
    return _parse(text, zero_indexed=False, allow_missing_weight=False)


def parse_edgelist(text) -> WeightedGraph:
    """GSet-like edge list; ``# zero-indexed`` switches indexing, missing weights are 1."""
    return _parse(text, zero_indexed=False, allow_missing_weight=True)


def load_graph(path, fmt: str = "gset") -> WeightedGraph:
    data = Path(path).read_bytes()
    if fmt == "gset":
        return parse_gset(data)
    if fmt == "edgelist":
        return parse_edgelist(data)
    raise ValueError(f"unknown graph format {fmt!r}")


def _fmt_weight(w: float) -> str:
    return str(int(w)) if float(w).is_integer() else repr(float(w))


def format_gset(g: WeightedGraph) -> str:
    buf = io.StringIO()
    buf.write(f"{g.n} {g.m}\n")
    for i, j, w in zip(g.src, g.dst, g.weight):
        buf.write(f"{i + 1} {j + 1} {_fmt_weight(w)}\n")
    return buf.getvalue()


def format_edgelist(g: WeightedGraph) -> str:
    buf = io.StringIO()
    buf.write(f"# zero-indexed\n{g.n} {g.m}\n")
    for i, j, w in zip(g.src, g.dst, g.weight):
        buf.write(f"{i} {j} {_fmt_weight(w)}\n")
    return buf.getvalue()


# --------------------------------------------------------------------------- generators

def generate_er(n: int, p: float, seed: int) -> WeightedGraph:
    """G(n, p) with unit weights."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"edge probability must lie in [0, 1], got {p}")
    rng = np.random.default_rng(seed)
    iu, ju = np.triu_indices(n, k=1)
    keep = rng.random(iu.size) < p
    return WeightedGraph(n, iu[keep], ju[keep], np.ones(int(keep.sum())))


def generate_regular(n: int, d: int, seed: int) -> WeightedGraph:
    """Random simple d-regular graph from the configuration (pairing) model.

    Stubs are shuffled and paired; pairs forming loops or repeated edges are
    put back and re-paired. If the leftover stubs cannot be paired the whole
    attempt restarts, at most ``REGULAR_MAX_RETRIES`` times.
    """
    if d < 0 or d >= n:
        raise GraphError(f"degree must satisfy 0 <= d < n (d={d}, n={n})")
    if (n * d) % 2:
        raise GraphError(f"n*d must be even for a {d}-regular graph on {n} nodes")
    rng = np.random.default_rng(seed)
    for _ in range(REGULAR_MAX_RETRIES):
        edges = _try_pairing(n, d, rng)
        if edges is not None:
            e = np.array(sorted(edges), dtype=np.int64).reshape(-1, 2)
            return WeightedGraph(n, e[:, 0], e[:, 1], np.ones(len(e)))
    raise GraphError(f"pairing model failed {REGULAR_MAX_RETRIES} times for n={n}, d={d}")


def _try_pairing(n: int, d: int, rng: np.random.Generator):
    stubs = np.repeat(np.arange(n), d)
    edges: set[tuple[int, int]] = set()
    while stubs.size:
        rng.shuffle(stubs)
        a, b = stubs[0::2], stubs[1::2]
        lo, hi = np.minimum(a, b), np.maximum(a, b)
        leftover = []
        for u, v in zip(lo.tolist(), hi.tolist()):
            if u != v and (u, v) not in edges:
                edges.add((u, v))
            else:
                leftover.extend((u, v))
        if len(leftover) == stubs.size:
            return None
        stubs = np.array(leftover, dtype=np.int64)
        if stubs.size and not _pairable(stubs, edges):
            return None
    return edges


def _pairable(stubs: np.ndarray, edges) -> bool:
    nodes = np.unique(stubs)
    for x in range(nodes.size):
        for y in range(x + 1, nodes.size):
            if (int(nodes[x]), int(nodes[y])) not in edges:
                return True
    return False


def generate_torus(rows: int, cols: int) -> WeightedGraph:
    """4-regular toroidal grid, node index ``r * cols + c``."""
    if rows < 3 or cols < 3:
        raise GraphError("torus needs at least 3 rows and 3 columns")
    r, c = np.divmod(np.arange(rows * cols), cols)
    right = r * cols + (c + 1) % cols
    down = ((r + 1) % rows) * cols + c
    node = np.arange(rows * cols)
    a = np.concatenate([node, node])
    b = np.concatenate([right, down])
    src, dst = np.minimum(a, b), np.maximum(a, b)
    order = np.lexsort((dst, src))
    return WeightedGraph(rows * cols, src[order], dst[order], np.ones(a.size))


# --------------------------------------------------------------------------- Laplacian and cuts

@dataclass(frozen=True)
class Laplacian:
    operand: HermitianOperand
    degree: np.ndarray = field(repr=False)

    @property
    def n(self) -> int:
        return self.operand.n


def laplacian(g: WeightedGraph, dense_threshold: int = DENSE_THRESHOLD) -> Laplacian:
    """Q = D - W; dense up to ``dense_threshold`` nodes, CSR beyond."""
    W = g.adjacency()
    deg = np.asarray(W.sum(axis=1)).ravel()
    L = (sp.diags(deg) - W).tocsr()
    psd = bool((g.weight >= 0).all())
    Q = L.toarray() if g.n <= dense_threshold else L
    return Laplacian(HermitianOperand(Q, hermitian=True, is_psd_hint=psd), deg)


def _check_labels(g: WeightedGraph, a) -> np.ndarray:
    labels = a.labels if isinstance(a, Assignment) else np.asarray(a, dtype=np.int64)
    if labels.size != g.n:
        raise DimensionMismatchError(f"graph has {g.n} nodes but assignment has {labels.size} labels")
    return labels


def cut_value(g: WeightedGraph, a) -> float:
    """Total weight of edges whose endpoints carry different labels."""
    labels = _check_labels(g, a)
    crossing = labels[g.src] != labels[g.dst]
    return float(g.weight[crossing].sum())


def cut_from_form(g: WeightedGraph, a: Assignment, L: Laplacian | None = None) -> float:
    """3-cut value recovered from the Laplacian form: Re(z^H L z) / 3."""
    if a.K != 3:
        raise ValueError("cut semantics require K = 3")
    _check_labels(g, a)
    L = laplacian(g) if L is None else L
    return quadratic_form(L.operand, a) / 3.0
