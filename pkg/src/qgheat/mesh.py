"""Mass-lumped linear finite elements for the Kirchhoff Laplacian.

The stiffness matrix ``S`` of the form ``int |f'|^2`` is assembled edge by
edge, endpoint nodes shared between all edges meeting at a vertex.  With
the lumped (diagonal) mass ``W`` the generalized problem ``S v = lam W v``
becomes the standard symmetric problem for ``W^-1/2 S W^-1/2``.  Kirchhoff
flux balance is the natural boundary condition of this assembly, so no
vertex needs special treatment.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .errors import GraphError, MeshError
from .graph import CombinatorialGraph, MetricGraph, PointOnGraph, PotentialSpec, Sampled

__all__ = [
    "Mesh",
    "IntervalMesh",
    "DiscreteOperator",
    "build_mesh",
    "assemble_h0",
    "assemble_h",
    "assemble_combinatorial",
    "assemble_dirichlet_interval",
    "node_potential",
]

KINDS = ("h0", "h", "combinatorial", "dirichlet-interval")


def _subintervals(length: float, target_h: float) -> int:
    # guard against 1/0.001 -> 1000.0000000000001 style round-up
    n = math.ceil(length / target_h * (1.0 - 1e-12))
    return max(n, 2)


@dataclass(frozen=True, eq=False)
class Mesh:
    """Nodes of a metric graph.

    Vertex nodes come first (in ``graph.vertices`` order), followed by the
    interior nodes of each edge in ``graph.edges`` order.  ``edge_nodes[e]``
    lists the global indices of the nodes of edge ``e`` from ``s = 0`` to
    ``s = length``.
    """

    graph: MetricGraph
    target_h: float
    edge_nodes: Mapping[str, np.ndarray]
    edge_h: Mapping[str, float]
    weights: np.ndarray
    n_vertices: int
    _coords: tuple = field(repr=False)

    @property
    def n(self) -> int:
        return self.weights.shape[0]

    @property
    def h_max(self) -> float:
        return max(self.edge_h.values())

    def is_vertex_node(self, i: int) -> bool:
        return i < self.n_vertices

    def node_point(self, i: int) -> PointOnGraph:
        """A representative point for node ``i``."""
        eid, s = self._coords[i]
        return PointOnGraph(eid, s)

    def node_points(self) -> list[PointOnGraph]:
        return [self.node_point(i) for i in range(self.n)]

    def locate(self, p: PointOnGraph) -> tuple[int, int, float]:
        """Nodes ``(i, j)`` bracketing ``p`` and the weight ``theta`` of ``j``."""
        self.graph.check_point(p)
        nodes = self.edge_nodes[p.edge]
        h = self.edge_h[p.edge]
        m = nodes.shape[0] - 1
        pos = p.s / h
        k = min(int(math.floor(pos)), m - 1)
        theta = pos - k
        if theta <= 1e-12:
            return int(nodes[k]), int(nodes[k]), 0.0
        if theta >= 1.0 - 1e-12:
            return int(nodes[k + 1]), int(nodes[k + 1]), 0.0
        return int(nodes[k]), int(nodes[k + 1]), theta

    def edge_coordinates(self, edge_id: str) -> np.ndarray:
        nodes = self.edge_nodes[edge_id]
        return np.arange(nodes.shape[0]) * self.edge_h[edge_id]


@dataclass(frozen=True, eq=False)
class IntervalMesh:
    """Interior nodes of ``(-a, a)`` with Dirichlet (zero) end values."""

    a: float
    h: float
    weights: np.ndarray

    @property
    def n(self) -> int:
        return self.weights.shape[0]

    @property
    def h_max(self) -> float:
        return self.h

    @property
    def coordinates(self) -> np.ndarray:
        return -self.a + self.h * np.arange(1, self.n + 1)

    def is_vertex_node(self, i: int) -> bool:
        return False

    def locate(self, x: float) -> tuple[int, int, float]:
        """Like :meth:`Mesh.locate`; index ``-1`` stands for a boundary zero."""
        if not (-self.a <= x <= self.a):
            raise GraphError(f"x={x!r} outside [-{self.a!r}, {self.a!r}]")
        pos = (x + self.a) / self.h
        k = min(int(math.floor(pos)), self.n)
        theta = pos - k
        # node k of the full grid is unknown k - 1; full-grid ends are -1
        i = k - 1 if 1 <= k <= self.n else -1
        j = k if k + 1 <= self.n else -1
        if theta <= 1e-12:
            return i, i, 0.0
        if theta >= 1.0 - 1e-12:
            return j, j, 0.0
        return i, j, theta


def build_mesh(g: MetricGraph, target_h: float) -> Mesh:
    if not (math.isfinite(target_h) and target_h > 0):
        raise MeshError(f"target h must be positive, got {target_h!r}")
    if target_h >= g.min_length:
        raise MeshError(
            f"target h={target_h!r} too coarse for shortest edge {g.min_length!r}"
        )
    vindex = {v: i for i, v in enumerate(g.vertices)}
    coords: list[tuple[str, float]] = [None] * len(g.vertices)  # type: ignore[list-item]
    for e in g.edges:
        if coords[vindex[e.tail]] is None:
            coords[vindex[e.tail]] = (e.id, 0.0)
        if coords[vindex[e.head]] is None:
            coords[vindex[e.head]] = (e.id, e.length)
    edge_nodes: dict[str, np.ndarray] = {}
    edge_h: dict[str, float] = {}
    nxt = len(g.vertices)
    for e in g.edges:
        m = _subintervals(e.length, target_h)
        h = e.length / m
        interior = np.arange(nxt, nxt + m - 1)
        nxt += m - 1
        edge_nodes[e.id] = np.concatenate(([vindex[e.tail]], interior, [vindex[e.head]]))
        edge_h[e.id] = h
        coords.extend((e.id, k * h) for k in range(1, m))
    weights = np.zeros(nxt)
    for e in g.edges:
        nodes, h = edge_nodes[e.id], edge_h[e.id]
        np.add.at(weights, nodes[:-1], 0.5 * h)
        np.add.at(weights, nodes[1:], 0.5 * h)
    if np.any(weights <= 0):
        raise MeshError("degenerate mesh: node with zero weight")
    weights.setflags(write=False)
    for arr in edge_nodes.values():
        arr.setflags(write=False)
    return Mesh(g, target_h, edge_nodes, edge_h, weights, len(g.vertices), tuple(coords))


@dataclass(frozen=True, eq=False)
class DiscreteOperator:
    """Symmetric matrix acting on nodal values in the ``W^1/2``-scaled basis.

    A nodal function ``f`` corresponds to the coefficient vector
    ``W^1/2 f``; the weighted inner product ``sum w f g`` becomes the
    Euclidean one.
    """

    matrix: np.ndarray
    kind: str
    weights: np.ndarray
    mesh: Mesh | IntervalMesh | None = None
    potential: np.ndarray | None = None
    potential_sup: float = 0.0
    d: int = 1

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown operator kind {self.kind!r}")
        self.matrix.setflags(write=False)

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    @property
    def h(self) -> float | None:
        return None if self.mesh is None else self.mesh.h_max

    def stiffness(self) -> np.ndarray:
        """``W^1/2 (A - diag V) W^1/2``: the un-scaled form matrix."""
        r = np.sqrt(self.weights)
        a = self.matrix
        if self.potential is not None:
            a = a - np.diag(self.potential)
        return a * np.outer(r, r)


def _stiffness(mesh: Mesh) -> np.ndarray:
    n = mesh.n
    s = np.zeros((n, n))
    for eid, nodes in mesh.edge_nodes.items():
        k = 1.0 / mesh.edge_h[eid]
        i, j = nodes[:-1], nodes[1:]
        np.add.at(s, (i, i), k)
        np.add.at(s, (j, j), k)
        np.add.at(s, (i, j), -k)
        np.add.at(s, (j, i), -k)
    return s


def _symmetrize(s: np.ndarray, weights: np.ndarray) -> np.ndarray:
    r = 1.0 / np.sqrt(weights)
    return s * np.outer(r, r)


def assemble_h0(g: MetricGraph, target_h: float) -> DiscreteOperator:
    mesh = build_mesh(g, target_h)
    a = _symmetrize(_stiffness(mesh), mesh.weights)
    return DiscreteOperator(a, "h0", mesh.weights, mesh)


def node_potential(spec: PotentialSpec, mesh: Mesh) -> np.ndarray:
    """Potential sampled at the nodes.

    At a vertex the incident edge values are averaged with the lumped
    weights they contribute, so ``sum(w * V)`` is the composite trapezoid
    rule edge by edge even when ``V`` jumps at the vertex.
    """
    if spec.graph is not mesh.graph and spec.graph != mesh.graph:
        raise GraphError("potential and mesh belong to different graphs")
    acc = np.zeros(mesh.n)
    for e in mesh.graph.edges:
        nodes, h = mesh.edge_nodes[e.id], mesh.edge_h[e.id]
        term = spec.term(e.id)
        if isinstance(term, Sampled) and len(term.values) != nodes.shape[0]:
            raise GraphError(
                f"sampled potential on {e.id!r} has {len(term.values)} values, "
                f"mesh has {nodes.shape[0]} nodes"
            )
        vals = np.asarray(term(mesh.edge_coordinates(e.id), e.length), dtype=float)
        side = np.full(nodes.shape[0], h)
        side[0] = side[-1] = 0.5 * h
        np.add.at(acc, nodes, side * vals)
    return acc / mesh.weights


def assemble_h(g: MetricGraph, potential: PotentialSpec, target_h: float) -> DiscreteOperator:
    base = assemble_h0(g, target_h)
    v = node_potential(potential, base.mesh)
    a = np.array(base.matrix)
    a[np.diag_indices_from(a)] += v
    v.setflags(write=False)
    return DiscreteOperator(a, "h", base.weights, base.mesh, v, potential.sup_norm)


def assemble_combinatorial(cg: CombinatorialGraph, include_potential: bool = True) -> DiscreteOperator:
    """``L = D - A`` plus ``diag(V)`` (unless ``include_potential`` is false)."""
    w = cg.weights
    lap = np.diag(w.sum(axis=1)) - w
    v = cg.potential if include_potential else np.zeros(cg.n)
    lap[np.diag_indices_from(lap)] += v
    return DiscreteOperator(
        lap,
        "combinatorial",
        np.ones(cg.n),
        None,
        np.array(v),
        float(np.max(np.abs(v))) if v.size else 0.0,
    )


def assemble_dirichlet_interval(a: float, target_h: float) -> DiscreteOperator:
    """``-d^2/dx^2`` on ``(-a, a)``, Dirichlet ends removed from the unknowns."""
    if not (math.isfinite(a) and a > 0):
        raise MeshError(f"half-width must be positive, got {a!r}")
    if not (math.isfinite(target_h) and 0 < target_h < a):
        raise MeshError(f"target h={target_h!r} too coarse for half-width {a!r}")
    m = _subintervals(2.0 * a, target_h)
    h = 2.0 * a / m
    n = m - 1
    main = np.full(n, 2.0 / h**2)
    off = np.full(n - 1, -1.0 / h**2)
    mat = np.diag(main) + np.diag(off, 1) + np.diag(off, -1)
    weights = np.full(n, h)
    weights.setflags(write=False)
    return DiscreteOperator(mat, "dirichlet-interval", weights, IntervalMesh(a, h, weights))
