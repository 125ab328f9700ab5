"""Weighted undirected graphs, cuts, and the exact small-instance oracle."""
from __future__ import annotations

import io
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from . import kernels

BRUTE_FORCE_MAX_N = 24


class GraphFormatError(ValueError):
    """Raised for malformed edge-list input; carries the offending line number."""

    def __init__(self, message, lineno=None):
        self.lineno = lineno
        prefix = f"line {lineno}: " if lineno is not None else ""
        super().__init__(prefix + message)


@dataclass(frozen=True)
class WeightedGraph:
    """Max-Cut instance: ``n`` vertices and a list of ``(u, v, w)`` edges.

    Vertices are ``0 .. n-1``; isolated vertices are allowed. Edges are
    undirected, without self-loops or duplicates, with ``w >= 0``.
    """

    n: int
    edges: tuple = field(default=())

    def __post_init__(self):
        if self.n < 0:
            raise ValueError("vertex count must be nonnegative")
        clean = []
        seen = set()
        for u, v, w in self.edges:
            u, v, w = int(u), int(v), float(w)
            if not (0 <= u < self.n and 0 <= v < self.n):
                raise ValueError(f"edge ({u}, {v}) has an endpoint outside 0..{self.n - 1}")
            if u == v:
                raise ValueError(f"self-loop at vertex {u}")
            if not w >= 0:
                raise ValueError(f"edge ({u}, {v}) has negative weight {w}")
            key = (min(u, v), max(u, v))
            if key in seen:
                raise ValueError(f"duplicate edge {key}")
            seen.add(key)
            clean.append((u, v, w))
        object.__setattr__(self, "edges", tuple(clean))

    @property
    def m(self):
        return len(self.edges)

    @cached_property
    def edge_arrays(self):
        """``(u, v, w)`` as numpy arrays."""
        if not self.edges:
            return np.zeros(0, np.int64), np.zeros(0, np.int64), np.zeros(0)
        u, v, w = zip(*self.edges)
        return np.array(u, np.int64), np.array(v, np.int64), np.array(w, np.float64)

    @cached_property
    def adjacency(self):
        """Dense symmetric weight matrix with zero diagonal (read-only)."""
        A = np.zeros((self.n, self.n))
        u, v, w = self.edge_arrays
        A[u, v] = w
        A[v, u] = w
        A.setflags(write=False)
        return A

    @cached_property
    def csr(self):
        """``(indptr, indices, weights)`` of the symmetric adjacency, neighbours sorted."""
        u, v, w = self.edge_arrays
        rows = np.concatenate([u, v])
        cols = np.concatenate([v, u])
        ws = np.concatenate([w, w])
        order = np.lexsort((cols, rows))
        indptr = np.zeros(self.n + 1, np.int64)
        np.add.at(indptr, rows + 1, 1)
        return np.cumsum(indptr), cols[order].copy(), ws[order].copy()

    def neighbors(self, i):
        indptr, indices, weights = self.csr
        return indices[indptr[i] : indptr[i + 1]], weights[indptr[i] : indptr[i + 1]]


@dataclass(frozen=True, eq=False)
class Cut:
    """A +-1 label per vertex."""

    labels: np.ndarray

    def __post_init__(self):
        arr = np.array(self.labels, dtype=np.int8).ravel()
        if arr.size and not np.all((arr == 1) | (arr == -1)):
            raise ValueError("cut labels must be +1 or -1")
        arr.setflags(write=False)
        object.__setattr__(self, "labels", arr)

    def __len__(self):
        return self.labels.size

    def __eq__(self, other):
        if not isinstance(other, Cut):
            return NotImplemented
        return np.array_equal(self.labels, other.labels)

    def __hash__(self):
        return hash(self.labels.tobytes())

    def __neg__(self):
        return Cut(-self.labels)

    def __repr__(self):
        return f"Cut({self.labels.tolist()})"

    def tolist(self):
        return self.labels.tolist()


def parse_graph(text):
    """Parse the edge-list format.

    The first non-comment line is ``n m``; then ``m`` lines ``u v w``. Lines
    starting with ``#`` and blank lines are ignored.

    Parameters
    ----------
    text : str or file-like

    Raises
    ------
    GraphFormatError
        With the line number of the first offending line.
    """
    stream = io.StringIO(text) if isinstance(text, str) else text
    header = None
    edges = []
    seen = {}
    for lineno, raw in enumerate(stream, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if header is None:
            if len(parts) != 2:
                raise GraphFormatError("header must be 'n m'", lineno)
            try:
                header = (int(parts[0]), int(parts[1]))
            except ValueError:
                raise GraphFormatError("header must be two integers", lineno) from None
            if header[0] < 0 or header[1] < 0:
                raise GraphFormatError("n and m must be nonnegative", lineno)
            continue
        if len(parts) != 3:
            raise GraphFormatError("edge line must be 'u v w'", lineno)
        try:
            u, v = int(parts[0]), int(parts[1])
            w = float(parts[2])
        except ValueError:
            raise GraphFormatError(f"cannot parse edge {line!r}", lineno) from None
        n = header[0]
        if not (0 <= u < n and 0 <= v < n):
            raise GraphFormatError(f"vertex index out of range 0..{n - 1}", lineno)
        if u == v:
            raise GraphFormatError(f"self-loop at vertex {u}", lineno)
        if not w >= 0 or not np.isfinite(w):
            raise GraphFormatError(f"invalid weight {parts[2]}", lineno)
        key = (min(u, v), max(u, v))
        if key in seen:
            raise GraphFormatError(f"duplicate edge {key} (first on line {seen[key]})", lineno)
        seen[key] = lineno
        edges.append((u, v, w))
    if header is None:
        raise GraphFormatError("missing header line")
    if len(edges) != header[1]:
        raise GraphFormatError(f"header declares {header[1]} edges, found {len(edges)}")
    return WeightedGraph(header[0], tuple(edges))


def format_graph(G):
    lines = [f"{G.n} {G.m}"]
    lines += [f"{u} {v} {w!r}" for u, v, w in G.edges]
    return "\n".join(lines) + "\n"


def _labels(G, x):
    arr = x.labels if isinstance(x, Cut) else Cut(x).labels
    if arr.size != G.n:
        raise ValueError(f"cut has {arr.size} labels, graph has {G.n} vertices")
    return arr


def cut_value(G, x):
    """Total weight of edges whose endpoints get different labels."""
    labels = _labels(G, x)
    u, v, w = G.edge_arrays
    return float(np.sum(w[labels[u] != labels[v]]))


def cut_values(G, X):
    """Cut value of each row of a ``(trials, n)`` label array."""
    X = np.asarray(X)
    u, v, w = G.edge_arrays
    if w.size == 0:
        return np.zeros(X.shape[0])
    return (X[:, u] != X[:, v]) @ w


def vertex_weight(G, i):
    if not 0 <= i < G.n:
        raise IndexError(f"vertex {i} out of range")
    return float(G.neighbors(i)[1].sum())


def vertex_weights(G):
    return G.adjacency.sum(axis=1)


def total_weight(G):
    return float(G.edge_arrays[2].sum())


def brute_force_maxcut(G):
    """Exact maximum cut by enumerating all ``2**(n-1)`` bipartitions.

    Returns ``(value, cut)``. Limited to ``n <= 24``.
    """
    if G.n > BRUTE_FORCE_MAX_N:
        raise ValueError(f"instance too large for brute force (n={G.n} > {BRUTE_FORCE_MAX_N})")
    _, labels = kernels.maxcut_enumerate(np.ascontiguousarray(G.adjacency))
    cut = Cut(labels)
    return cut_value(G, cut), cut


# -- small instance builders ------------------------------------------------


def complete_graph(n, weight=1.0):
    return WeightedGraph(n, tuple((i, j, weight) for i in range(n) for j in range(i + 1, n)))


def cycle_graph(n, weight=1.0):
    return WeightedGraph(n, tuple((i, (i + 1) % n, weight) for i in range(n)))


def path_graph(weights):
    return WeightedGraph(len(weights) + 1, tuple((i, i + 1, w) for i, w in enumerate(weights)))


def star_graph(leaves, weight=1.0):
    """Center 0 joined to vertices ``1 .. leaves``."""
    return WeightedGraph(leaves + 1, tuple((0, i, weight) for i in range(1, leaves + 1)))


def random_graph(n, p, rng, weighted=False):
    """Erdos-Renyi graph; weights uniform on (0, 1] when ``weighted``."""
    rng = np.random.default_rng(rng)
    edges = []
    for i in range(n):
        for j in range(i + 1, n):
            if rng.random() < p:
                edges.append((i, j, 1.0 - rng.random() if weighted else 1.0))
    return WeightedGraph(n, tuple(edges))
