"""Unrolled message-passing network and its trainable weight space.

A Tanner graph unrolled for L decoding iterations becomes a 3L+1 layer
network: the input layer of n channel values, then per iteration a
variable-to-check layer and a check-to-variable layer (one node per
edge each) and an output layer (one node per variable).  Each edge owns
one (w, w') weight pair shared by every iteration: w multiplies the
edge's check-to-variable message wherever a variable layer consumes it
(only culprit edges carry a trainable w; all others are fixed at 1),
and w' scales the same message entering the output layers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Mapping

import numpy as np

from .tanner import (
    CulpritSet,
    EdgeRef,
    ParityCheckMatrix,
    TannerGraph,
    build_graph,
    matrix_digest,
)

ROLE_INPUT = "input"
ROLE_VAR_TO_CHK = "var_to_chk"
ROLE_CHK_TO_VAR = "chk_to_var"
ROLE_OUTPUT = "output"

WEIGHTS_HEADER = "neurolat-weights v1"


class WeightsFormatError(ValueError):
    """Raised when a weights file violates the format contract."""


class DigestMismatchError(WeightsFormatError):
    """Weights file was produced for a different matrix."""


@dataclass(frozen=True)
class TrellisLayer:
    """One layer of the unrolled network.

    ``sources[k]`` lists, for node k, the node indices of the layer it
    draws messages from (the previous check-to-variable layer for
    variable layers, the same-iteration layers otherwise).  ``llr_source``
    maps nodes to input-layer positions where the layer consumes the
    channel value directly.
    """

    role: str
    size: int
    sources: tuple[tuple[int, ...], ...]
    llr_source: tuple[int, ...] | None = None


@dataclass(frozen=True)
class TrellisSpec:
    """Layer plan for L iterations over a Tanner graph."""

    graph: TannerGraph
    iterations: int
    culprits: CulpritSet
    layers: tuple[TrellisLayer, ...]

    @property
    def n_layers(self) -> int:
        return len(self.layers)

    @property
    def n_parameters(self) -> int:
        return len(self.culprits) + self.graph.n_edges

    @cached_property
    def culprit_edge_ids(self) -> np.ndarray:
        """Canonical (row-major) edge indices of the culprit edges."""
        return np.array(
            sorted(self.graph.edge_index[e] for e in self.culprits.edges), dtype=int)

    @cached_property
    def culprit_edges_ordered(self) -> tuple[EdgeRef, ...]:
        return tuple(self.graph.edges[k] for k in self.culprit_edge_ids)

    @cached_property
    def edge_vars(self) -> np.ndarray:
        return np.array([i for _, i in self.graph.edges], dtype=int)

    @cached_property
    def edge_checks(self) -> np.ndarray:
        return np.array([j for j, _ in self.graph.edges], dtype=int)

    @cached_property
    def chk_edge_ids(self) -> tuple[np.ndarray, ...]:
        return tuple(
            np.flatnonzero(self.edge_checks == j) for j in range(self.graph.n_checks))

    @cached_property
    def var_edge_ids(self) -> tuple[np.ndarray, ...]:
        return tuple(
            np.flatnonzero(self.edge_vars == i) for i in range(self.graph.n_vars))


def build_trellis(graph: TannerGraph, iterations: int, culprits: CulpritSet) -> TrellisSpec:
    """Unroll the graph into the 3L+1 layer plan.

    Connection rules, with e = (check j, variable i):
      * variable-layer node e reads the channel value of variable i and,
        from iteration 2 on, the previous check layer's nodes (k, i), k != j;
      * check-layer node e reads the same-iteration variable nodes (j, k), k != i;
      * output node v reads every same-iteration check node (k, v) plus
        the channel value of v.
    """
    if iterations < 1:
        raise ValueError("iterations must be >= 1")
    missing = culprits.edges - set(graph.edges)
    if missing:
        raise ValueError(f"culprit edges not in graph: {sorted(missing)}")

    idx = graph.edge_index
    vn_sources_first = tuple(() for _ in graph.edges)
    vn_sources_later = tuple(
        tuple(idx[EdgeRef(k, i)] for k in graph.var_adj[i] if k != j)
        for j, i in graph.edges)
    cn_sources = tuple(
        tuple(idx[EdgeRef(j, k)] for k in graph.chk_adj[j] if k != i)
        for j, i in graph.edges)
    out_sources = tuple(
        tuple(idx[EdgeRef(k, i)] for k in graph.var_adj[i])
        for i in range(graph.n_vars))
    edge_llr = tuple(i for _, i in graph.edges)
    var_llr = tuple(range(graph.n_vars))

    layers = [TrellisLayer(ROLE_INPUT, graph.n_vars, tuple(() for _ in range(graph.n_vars)))]
    for ell in range(1, iterations + 1):
        layers.append(TrellisLayer(
            ROLE_VAR_TO_CHK, graph.n_edges,
            vn_sources_first if ell == 1 else vn_sources_later,
            llr_source=edge_llr))
        layers.append(TrellisLayer(ROLE_CHK_TO_VAR, graph.n_edges, cn_sources))
        layers.append(TrellisLayer(
            ROLE_OUTPUT, graph.n_vars, out_sources, llr_source=var_llr))
    return TrellisSpec(
        graph=graph, iterations=iterations, culprits=culprits, layers=tuple(layers))


# ---------------------------------------------------------------------------
# weights
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ConstantInit:
    value: float = 1.0


@dataclass(frozen=True)
class GaussianInit:
    mean: float = 1.0
    std: float = 0.1


@dataclass(eq=False)
class WeightVector:
    """Per-edge weight pairs in canonical order.

    ``w[k]`` belongs to ``culprit_edges[k]`` (input-side multiplicative
    weight); ``wp[k]`` belongs to ``edges[k]`` (output-layer weight).
    Total trainable parameter count is len(w) + len(wp).
    """

    culprit_edges: tuple[EdgeRef, ...]
    edges: tuple[EdgeRef, ...]
    w: np.ndarray
    wp: np.ndarray

    def __post_init__(self):
        self.w = np.asarray(self.w, dtype=float)
        self.wp = np.asarray(self.wp, dtype=float)
        if self.w.shape != (len(self.culprit_edges),):
            raise ValueError("w must hold exactly one value per culprit edge")
        if self.wp.shape != (len(self.edges),):
            raise ValueError("wp must hold exactly one value per edge")

    @property
    def n_parameters(self) -> int:
        return len(self.w) + len(self.wp)

    def full_input_weights(self) -> np.ndarray:
        """Input-side weights for every edge: 1 everywhere except culprits."""
        full = np.ones(len(self.edges))
        pos = {e: k for k, e in enumerate(self.edges)}
        for k, e in enumerate(self.culprit_edges):
            full[pos[e]] = self.w[k]
        return full

    def w_map(self) -> dict[EdgeRef, float]:
        return {e: float(v) for e, v in zip(self.culprit_edges, self.w)}

    def wp_map(self) -> dict[EdgeRef, float]:
        return {e: float(v) for e, v in zip(self.edges, self.wp)}

    def packed(self) -> np.ndarray:
        """Culprit weights followed by output weights, canonical order."""
        return np.concatenate([self.w, self.wp])

    def replace(self, w: np.ndarray, wp: np.ndarray) -> "WeightVector":
        return WeightVector(self.culprit_edges, self.edges, w.copy(), wp.copy())

    @classmethod
    def unit(cls, spec: TrellisSpec) -> "WeightVector":
        return cls(
            culprit_edges=spec.culprit_edges_ordered,
            edges=spec.graph.edges,
            w=np.ones(len(spec.culprit_edges_ordered)),
            wp=np.ones(spec.graph.n_edges))

    @classmethod
    def from_maps(cls, spec: TrellisSpec,
                  w: Mapping[EdgeRef, float],
                  wp: Mapping[EdgeRef, float]) -> "WeightVector":
        culprits = spec.culprit_edges_ordered
        if set(w) != set(culprits):
            raise ValueError("w must be keyed by exactly the culprit edges")
        if set(wp) != set(spec.graph.edges):
            raise ValueError("wp must be keyed by exactly the edge list")
        return cls(
            culprit_edges=culprits,
            edges=spec.graph.edges,
            w=np.array([w[e] for e in culprits], dtype=float),
            wp=np.array([wp[e] for e in spec.graph.edges], dtype=float))


def init_weights(spec: TrellisSpec,
                 distribution: ConstantInit | GaussianInit = GaussianInit(),
                 seed: int = 0) -> WeightVector:
    """Fresh weights; deterministic for a given seed.

    Gaussian draws are clamped to (0, 2] so an initial weight can never
    flip a message sign; unit mean keeps the untrained network at the
    plain sum-product behavior.
    """
    n_w = len(spec.culprit_edges_ordered)
    n_wp = spec.graph.n_edges
    if isinstance(distribution, ConstantInit):
        vals = np.full(n_w + n_wp, float(distribution.value))
    elif isinstance(distribution, GaussianInit):
        if distribution.std < 0:
            raise ValueError("std must be >= 0")
        rng = np.random.default_rng(seed)
        vals = rng.normal(distribution.mean, distribution.std, size=n_w + n_wp)
        vals = np.clip(vals, 1e-6, 2.0)
    else:
        raise TypeError(f"unknown init distribution: {distribution!r}")
    return WeightVector(
        culprit_edges=spec.culprit_edges_ordered,
        edges=spec.graph.edges,
        w=vals[:n_w],
        wp=vals[n_w:])


# ---------------------------------------------------------------------------
# weights file format
# ---------------------------------------------------------------------------

def save_weights(weights: WeightVector, iterations: int, digest: str) -> str:
    """Render the weights-file text (version, matrix digest, weight lines)."""
    lines = [WEIGHTS_HEADER, f"matrix_digest {digest}", f"L {iterations}"]
    for e, v in zip(weights.culprit_edges, weights.w):
        lines.append(f"w {e.check + 1} {e.var + 1} {v:.12g}")
    for e, v in zip(weights.edges, weights.wp):
        lines.append(f"wp {e.check + 1} {e.var + 1} {v:.12g}")
    return "\n".join(lines) + "\n"


@dataclass
class LoadedWeights:
    weights: WeightVector
    iterations: int


def load_weights(text: str, pcm: ParityCheckMatrix) -> LoadedWeights:
    """Parse a weights file and validate it against the given matrix."""
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0].strip() != WEIGHTS_HEADER:
        raise WeightsFormatError(f"missing header {WEIGHTS_HEADER!r}")
    if len(lines) < 3:
        raise WeightsFormatError("truncated weights file")
    tok = lines[1].split()
    if len(tok) != 2 or tok[0] != "matrix_digest":
        raise WeightsFormatError("second line must be 'matrix_digest <hex>'")
    expected = matrix_digest(pcm)
    if tok[1] != expected:
        raise DigestMismatchError(
            f"weights were written for matrix digest {tok[1][:12]}..., "
            f"supplied matrix has {expected[:12]}...")
    tok = lines[2].split()
    if len(tok) != 2 or tok[0] != "L":
        raise WeightsFormatError("third line must be 'L <count>'")
    iterations = int(tok[1])

    graph = build_graph(pcm)
    w_entries: list[tuple[EdgeRef, float]] = []
    wp_entries: list[tuple[EdgeRef, float]] = []
    for ln, raw in enumerate(lines[3:], start=4):
        parts = raw.split()
        if len(parts) != 4 or parts[0] not in ("w", "wp"):
            raise WeightsFormatError(f"line {ln}: expected 'w|wp check var value'")
        edge = EdgeRef(int(parts[1]) - 1, int(parts[2]) - 1)
        if edge not in graph.edge_index:
            raise WeightsFormatError(
                f"line {ln}: ({parts[1]}, {parts[2]}) is not an edge of the matrix")
        value = float(parts[3])
        if not math.isfinite(value):
            raise WeightsFormatError(f"line {ln}: non-finite weight")
        (w_entries if parts[0] == "w" else wp_entries).append((edge, value))

    if [e for e, _ in wp_entries] != list(graph.edges):
        raise WeightsFormatError(
            "wp lines must cover every edge exactly once in canonical order")
    culprits = [e for e, _ in w_entries]
    if culprits != sorted(set(culprits)):
        raise WeightsFormatError("w lines must be unique and in canonical edge order")
    weights = WeightVector(
        culprit_edges=tuple(culprits),
        edges=graph.edges,
        w=np.array([v for _, v in w_entries], dtype=float),
        wp=np.array([v for _, v in wp_entries], dtype=float))
    return LoadedWeights(weights=weights, iterations=iterations)
