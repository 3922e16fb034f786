"""Parity-check matrices, Tanner graphs, and short-cycle analysis.

Everything here is plain combinatorics on the bipartite graph of a binary
matrix H: parsing/serializing the alist interchange format, enumerating
4-cycles, computing girth and GF(2) rank, and selecting the "culprit"
edges whose removal leaves a 4-cycle-free graph.

Indices are 0-based internally; the alist format and all user-facing
output are 1-based.
"""

from __future__ import annotations

import hashlib
import math
import warnings
from collections import deque
from dataclasses import dataclass, field
from itertools import combinations
from typing import NamedTuple

import numpy as np


class AlistFormatError(ValueError):
    """Raised when alist text violates the format contract."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class EdgeRef(NamedTuple):
    """One edge of the Tanner graph: a 1-entry of H at (check row, variable column)."""

    check: int
    var: int


class FourCycle(NamedTuple):
    """A 4-cycle: two checks sharing two variables; all four (check, var) pairs are edges."""

    checks: tuple[int, int]
    vars: tuple[int, int]

    def edges(self) -> tuple[EdgeRef, EdgeRef, EdgeRef, EdgeRef]:
        (j1, j2), (i1, i2) = self.checks, self.vars
        return (EdgeRef(j1, i1), EdgeRef(j1, i2), EdgeRef(j2, i1), EdgeRef(j2, i2))


@dataclass(frozen=True)
class ParityCheckMatrix:
    """Sparse binary matrix stored as per-row sorted column-index lists."""

    n_rows: int
    n_cols: int
    rows: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        if self.n_rows < 1 or self.n_cols < 1:
            raise ValueError("matrix must have at least one row and one column")
        if len(self.rows) != self.n_rows:
            raise ValueError(f"expected {self.n_rows} rows, got {len(self.rows)}")
        object.__setattr__(self, "rows", tuple(tuple(sorted(r)) for r in self.rows))
        seen_cols: set[int] = set()
        for j, row in enumerate(self.rows):
            if any(i < 0 or i >= self.n_cols for i in row):
                raise ValueError(f"row {j}: column index out of range")
            if len(set(row)) != len(row):
                raise ValueError(f"row {j}: duplicate column index")
            seen_cols.update(row)
        empty_rows = [j for j, row in enumerate(self.rows) if not row]
        empty_cols = [i for i in range(self.n_cols) if i not in seen_cols]
        if empty_rows:
            warnings.warn(f"rows with no nonzero entry: {empty_rows}", stacklevel=2)
        if empty_cols:
            warnings.warn(f"columns with no nonzero entry: {empty_cols}", stacklevel=2)

    @classmethod
    def from_dense(cls, array) -> "ParityCheckMatrix":
        a = np.asarray(array)
        rows = tuple(tuple(int(i) for i in np.flatnonzero(a[j])) for j in range(a.shape[0]))
        return cls(a.shape[0], a.shape[1], rows)

    def to_dense(self) -> np.ndarray:
        h = np.zeros((self.n_rows, self.n_cols), dtype=np.uint8)
        for j, row in enumerate(self.rows):
            h[j, list(row)] = 1
        return h

    @property
    def n_edges(self) -> int:
        return sum(len(r) for r in self.rows)


@dataclass(frozen=True)
class TannerGraph:
    """Bipartite adjacency of a parity-check matrix.

    ``edges`` is the canonical row-major list of (check, var) pairs; the
    position of an edge in this list is its canonical edge index, used by
    every weight and message array in the package.
    """

    n_checks: int
    n_vars: int
    var_adj: tuple[tuple[int, ...], ...]   # variable -> neighboring checks
    chk_adj: tuple[tuple[int, ...], ...]   # check -> neighboring variables
    edges: tuple[EdgeRef, ...]
    edge_index: dict[EdgeRef, int] = field(repr=False)

    def __post_init__(self):
        for i, checks in enumerate(self.var_adj):
            for j in checks:
                if i not in self.chk_adj[j]:
                    raise ValueError(f"inconsistent adjacency at check {j}, var {i}")
        for j, vs in enumerate(self.chk_adj):
            for i in vs:
                if j not in self.var_adj[i]:
                    raise ValueError(f"inconsistent adjacency at check {j}, var {i}")
        if len(self.edges) != sum(len(r) for r in self.chk_adj):
            raise ValueError("edge list does not cover all adjacencies")

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def has_edge(self, check: int, var: int) -> bool:
        return EdgeRef(check, var) in self.edge_index


def build_graph(pcm: ParityCheckMatrix) -> TannerGraph:
    """Build the Tanner graph of H with row-major canonical edge order."""
    var_adj: list[list[int]] = [[] for _ in range(pcm.n_cols)]
    edges: list[EdgeRef] = []
    for j, row in enumerate(pcm.rows):
        for i in row:
            var_adj[i].append(j)
            edges.append(EdgeRef(j, i))
    return TannerGraph(
        n_checks=pcm.n_rows,
        n_vars=pcm.n_cols,
        var_adj=tuple(tuple(a) for a in var_adj),
        chk_adj=tuple(tuple(r) for r in pcm.rows),
        edges=tuple(edges),
        edge_index={e: k for k, e in enumerate(edges)},
    )


def remove_edges(graph: TannerGraph, removed) -> TannerGraph:
    """Copy of the graph without the given edges."""
    removed = {EdgeRef(*e) for e in removed}
    unknown = removed - set(graph.edges)
    if unknown:
        raise ValueError(f"edges not in graph: {sorted(unknown)}")
    kept = [e for e in graph.edges if e not in removed]
    var_adj: list[list[int]] = [[] for _ in range(graph.n_vars)]
    chk_adj: list[list[int]] = [[] for _ in range(graph.n_checks)]
    for j, i in kept:
        var_adj[i].append(j)
        chk_adj[j].append(i)
    return TannerGraph(
        n_checks=graph.n_checks,
        n_vars=graph.n_vars,
        var_adj=tuple(tuple(a) for a in var_adj),
        chk_adj=tuple(tuple(a) for a in chk_adj),
        edges=tuple(kept),
        edge_index={e: k for k, e in enumerate(kept)},
    )


# ---------------------------------------------------------------------------
# alist interchange format
# ---------------------------------------------------------------------------

def parse_alist(text: str) -> ParityCheckMatrix:
    """Parse alist text into a matrix.

    Layout: line 1 ``n m``; line 2 ``max_col_degree max_row_degree``;
    line 3: n column degrees; line 4: m row degrees; then n lines of
    1-based check neighbors per column and m lines of 1-based variable
    neighbors per row.  Zero-padded neighbor lists are accepted (trailing
    zeros ignored).
    """
    lines = text.splitlines()

    def ints(idx: int, what: str) -> list[int]:
        if idx >= len(lines):
            raise AlistFormatError(f"unexpected end of file, expected {what}", idx + 1)
        try:
            return [int(tok) for tok in lines[idx].split()]
        except ValueError:
            raise AlistFormatError(f"non-integer token in {what}", idx + 1) from None

    header = ints(0, "header 'n m'")
    if len(header) != 2:
        raise AlistFormatError("header must be exactly 'n m'", 1)
    n, m = header
    if n < 1 or m < 1:
        raise AlistFormatError("matrix dimensions must be positive", 1)
    maxdeg = ints(1, "max degrees")
    if len(maxdeg) != 2:
        raise AlistFormatError("expected 'max_col_degree max_row_degree'", 2)
    col_deg = ints(2, "column degrees")
    if len(col_deg) != n:
        raise AlistFormatError(f"expected {n} column degrees, got {len(col_deg)}", 3)
    row_deg = ints(3, "row degrees")
    if len(row_deg) != m:
        raise AlistFormatError(f"expected {m} row degrees, got {len(row_deg)}", 4)
    if col_deg and max(col_deg) != maxdeg[0]:
        raise AlistFormatError(
            f"declared max column degree {maxdeg[0]} but actual is {max(col_deg)}", 2)
    if row_deg and max(row_deg) != maxdeg[1]:
        raise AlistFormatError(
            f"declared max row degree {maxdeg[1]} but actual is {max(row_deg)}", 2)

    def neighbor_list(idx: int, degree: int, bound: int, what: str) -> list[int]:
        vals = ints(idx, what)
        # zero padding variant: trailing zeros up to the declared max
        while vals and vals[-1] == 0:
            vals.pop()
        if len(vals) != degree:
            raise AlistFormatError(
                f"{what}: declared degree {degree} but {len(vals)} neighbors listed",
                idx + 1)
        out = []
        for v in vals:
            if v < 1 or v > bound:
                raise AlistFormatError(f"{what}: neighbor index {v} out of range", idx + 1)
            out.append(v - 1)
        if len(set(out)) != len(out):
            raise AlistFormatError(f"{what}: duplicate neighbor", idx + 1)
        return out

    col_lists = [
        neighbor_list(4 + i, col_deg[i], m, f"column {i + 1}") for i in range(n)
    ]
    row_lists = [
        neighbor_list(4 + n + j, row_deg[j], n, f"row {j + 1}") for j in range(m)
    ]
    for tail in range(4 + n + m, len(lines)):
        if lines[tail].strip():
            raise AlistFormatError("unexpected trailing content", tail + 1)

    # the two adjacency sections must describe the same matrix
    from_cols = {(j, i) for i, checks in enumerate(col_lists) for j in checks}
    from_rows = {(j, i) for j, vs in enumerate(row_lists) for i in vs}
    if from_cols != from_rows:
        bad = sorted(from_cols.symmetric_difference(from_rows))[0]
        raise AlistFormatError(
            f"column and row adjacency disagree at check {bad[0] + 1}, variable {bad[1] + 1}",
            4 + n + 1 + bad[0])

    rows = tuple(tuple(sorted(r)) for r in row_lists)
    return ParityCheckMatrix(n_rows=m, n_cols=n, rows=rows)


def serialize_alist(pcm: ParityCheckMatrix) -> str:
    """Canonical (unpadded) alist text; parse_alist inverts it exactly."""
    cols: list[list[int]] = [[] for _ in range(pcm.n_cols)]
    for j, row in enumerate(pcm.rows):
        for i in row:
            cols[i].append(j)
    col_deg = [len(c) for c in cols]
    row_deg = [len(r) for r in pcm.rows]
    out = [
        f"{pcm.n_cols} {pcm.n_rows}",
        f"{max(col_deg, default=0)} {max(row_deg, default=0)}",
        " ".join(str(d) for d in col_deg),
        " ".join(str(d) for d in row_deg),
    ]
    out += [" ".join(str(j + 1) for j in c) for c in cols]
    out += [" ".join(str(i + 1) for i in r) for r in pcm.rows]
    return "\n".join(out) + "\n"


def matrix_digest(pcm: ParityCheckMatrix) -> str:
    """SHA-256 hex digest of the canonical alist serialization."""
    return hashlib.sha256(serialize_alist(pcm).encode("utf-8")).hexdigest()


# ---------------------------------------------------------------------------
# cycle analysis
# ---------------------------------------------------------------------------

def enumerate_4cycles(graph: TannerGraph) -> list[FourCycle]:
    """All 4-cycles, each reported once, ordered by (j1, j2, i1, i2)."""
    out: list[FourCycle] = []
    sets = [set(vs) for vs in graph.chk_adj]
    for j1, j2 in combinations(range(graph.n_checks), 2):
        shared = sorted(sets[j1] & sets[j2])
        for i1, i2 in combinations(shared, 2):
            out.append(FourCycle(checks=(j1, j2), vars=(i1, i2)))
    return out


def girth(graph: TannerGraph) -> int | float:
    """Length of the shortest cycle, or math.inf for a forest.

    BFS from every node; the minimum over roots of d(u) + d(v) + 1 taken
    over non-tree edges attains the girth (exact when the root lies on a
    shortest cycle).  Always even here since the graph is bipartite.
    """
    # nodes: 0..n_vars-1 variables, n_vars..n_vars+n_checks-1 checks
    nv = graph.n_vars
    adj: list[list[int]] = [[] for _ in range(nv + graph.n_checks)]
    for j, i in graph.edges:
        adj[i].append(nv + j)
        adj[nv + j].append(i)
    best = math.inf
    for root in range(len(adj)):
        dist = {root: 0}
        parent = {root: -1}
        queue = deque([root])
        while queue:
            u = queue.popleft()
            if dist[u] * 2 >= best:
                continue
            for v in adj[u]:
                if v not in dist:
                    dist[v] = dist[u] + 1
                    parent[v] = u
                    queue.append(v)
                elif parent[u] != v and parent[v] != u:
                    best = min(best, dist[u] + dist[v] + 1)
    return best


@dataclass(frozen=True)
class CulpritSet:
    """Edges carrying trainable input weights; removing them clears all 4-cycles."""

    edges: frozenset[EdgeRef]

    def __len__(self) -> int:
        return len(self.edges)

    def sorted_edges(self) -> tuple[EdgeRef, ...]:
        return tuple(sorted(self.edges))


def culprit_set_from_edges(graph: TannerGraph, edges) -> CulpritSet:
    """Validate a manually supplied culprit set against the graph.

    Raises if an edge is not in the graph or if the remainder still
    contains a 4-cycle.
    """
    refs = frozenset(EdgeRef(*e) for e in edges)
    unknown = refs - set(graph.edges)
    if unknown:
        raise ValueError(f"culprit edges not in graph: {sorted(unknown)}")
    leftover = enumerate_4cycles(remove_edges(graph, refs))
    if leftover:
        c = leftover[0]
        raise ValueError(
            f"removing the supplied edges leaves a 4-cycle on checks {c.checks}, "
            f"variables {c.vars}")
    return CulpritSet(edges=refs)


def select_culprits(graph: TannerGraph) -> CulpritSet:
    """Greedy cover: repeatedly drop the edge hitting the most remaining 4-cycles.

    Ties break toward the smaller check index, then the smaller variable
    index, so the result is deterministic.  The returned set is not
    guaranteed minimum (set cover is hard), only 4-cycle-clearing.
    """
    cycles = [set(c.edges()) for c in enumerate_4cycles(graph)]
    chosen: set[EdgeRef] = set()
    while cycles:
        counts: dict[EdgeRef, int] = {}
        for cyc in cycles:
            for e in cyc:
                counts[e] = counts.get(e, 0) + 1
        best = min(counts.items(), key=lambda kv: (-kv[1], kv[0].check, kv[0].var))[0]
        chosen.add(best)
        cycles = [cyc for cyc in cycles if best not in cyc]
    return CulpritSet(edges=frozenset(chosen))


def edge_cycle_counts(graph: TannerGraph) -> dict[EdgeRef, int]:
    """How many 4-cycles each edge participates in (zero entries omitted)."""
    counts: dict[EdgeRef, int] = {}
    for c in enumerate_4cycles(graph):
        for e in c.edges():
            counts[e] = counts.get(e, 0) + 1
    return counts


def parse_culprit_lines(text: str) -> list[EdgeRef]:
    """Parse a culprit override file: one 1-based ``check var`` pair per line."""
    out = []
    for ln, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise ValueError(f"line {ln}: expected 'check var', got {raw!r}")
        j, i = (int(p) for p in parts)
        if j < 1 or i < 1:
            raise ValueError(f"line {ln}: indices are 1-based and positive")
        out.append(EdgeRef(j - 1, i - 1))
    return out


# ---------------------------------------------------------------------------
# GF(2) linear algebra
# ---------------------------------------------------------------------------

def gf2_rank(pcm: ParityCheckMatrix) -> int:
    """Rank of H over GF(2) by Gaussian elimination with XOR rows."""
    r = pcm.to_dense().copy()
    m, n = r.shape
    rank = 0
    for col in range(n):
        pivot = None
        for row in range(rank, m):
            if r[row, col]:
                pivot = row
                break
        if pivot is None:
            continue
        r[[rank, pivot]] = r[[pivot, rank]]
        for row in range(m):
            if row != rank and r[row, col]:
                r[row] ^= r[rank]
        rank += 1
        if rank == m:
            break
    return rank


def gf2_nullspace(pcm: ParityCheckMatrix) -> np.ndarray:
    """Basis of the GF(2) nullspace of H, shape (k, n) with k = n - rank."""
    h = pcm.to_dense().copy()
    m, n = h.shape
    pivots: list[int] = []
    rank = 0
    for col in range(n):
        pivot = None
        for row in range(rank, m):
            if h[row, col]:
                pivot = row
                break
        if pivot is None:
            continue
        h[[rank, pivot]] = h[[pivot, rank]]
        for row in range(m):
            if row != rank and h[row, col]:
                h[row] ^= h[rank]
        pivots.append(col)
        rank += 1
    free = [c for c in range(n) if c not in pivots]
    basis = np.zeros((len(free), n), dtype=np.uint8)
    for b, fc in enumerate(free):
        basis[b, fc] = 1
        for row, pc in enumerate(pivots):
            if h[row, fc]:
                basis[b, pc] = 1
    return basis
