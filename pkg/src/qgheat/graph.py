"""Metric graphs, combinatorial graphs, points and potentials.

A metric graph is a finite set of vertices joined by edges of positive
length.  Every edge ``e = (tail, head)`` is parametrised by arclength
``s in [0, length]`` with ``s = 0`` at ``tail``.  Vertex conditions are
always Kirchhoff, which at a degree-1 vertex is the Neumann condition.

The line-oriented GRAPH format understood by :func:`parse_graph` is::

    # comment
    vertex <id>
    edge <id> <vid> <vid> length=<positive float>
    potential <edge-id> const <c>
    potential <edge-id> cos amp=<a> mode=<k>
    potential <edge-id> bump amp=<a> center=<s> width=<w>
"""

from __future__ import annotations

import math
from collections import defaultdict, deque
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Union

import numpy as np

from .errors import GraphError

__all__ = [
    "Edge",
    "MetricGraph",
    "PointOnGraph",
    "Constant",
    "CosineMode",
    "GaussianBump",
    "Sampled",
    "PotentialSpec",
    "CombinatorialGraph",
    "parse_graph",
    "parse_potential",
    "parse_graph_file",
    "parse_potential_term",
    "serialize_graph",
    "total_volume",
    "evaluate_potential",
    "builtin_graph",
    "BUILTINS",
    "interval_graph",
    "loop_graph",
    "star_graph",
    "lasso_graph",
]

# Trapezoid subintervals per edge for potentials without a closed-form integral.
_QUAD_PANELS = 8192


@dataclass(frozen=True)
class Edge:
    id: str
    tail: str
    head: str
    length: float

    @property
    def is_loop(self) -> bool:
        return self.tail == self.head


def _connected(vertices: Iterable[str], pairs: Iterable[tuple[str, str]]) -> bool:
    adj: dict[str, set[str]] = defaultdict(set)
    verts = list(vertices)
    for u, v in pairs:
        adj[u].add(v)
        adj[v].add(u)
    if not verts:
        return False
    seen = {verts[0]}
    queue = deque([verts[0]])
    while queue:
        u = queue.popleft()
        for v in adj[u] - seen:
            seen.add(v)
            queue.append(v)
    return len(seen) == len(verts)


@dataclass(frozen=True)
class MetricGraph:
    """Compact connected metric graph with Kirchhoff vertex conditions."""

    vertices: tuple[str, ...]
    edges: tuple[Edge, ...]
    _by_id: Mapping[str, Edge] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "vertices", tuple(self.vertices))
        object.__setattr__(self, "edges", tuple(self.edges))
        if len(set(self.vertices)) != len(self.vertices):
            raise GraphError("duplicate vertex id")
        if not self.edges:
            raise GraphError("graph has no edges")
        by_id = {}
        known = set(self.vertices)
        for e in self.edges:
            if e.id in by_id:
                raise GraphError(f"duplicate edge id {e.id!r}")
            for v in (e.tail, e.head):
                if v not in known:
                    raise GraphError(f"edge {e.id!r} references unknown vertex {v!r}")
            if not (math.isfinite(e.length) and e.length > 0):
                raise GraphError(f"edge {e.id!r} has non-positive length {e.length!r}")
            by_id[e.id] = e
        if not _connected(self.vertices, ((e.tail, e.head) for e in self.edges)):
            raise GraphError("graph is disconnected")
        object.__setattr__(self, "_by_id", by_id)

    def edge(self, edge_id: str) -> Edge:
        try:
            return self._by_id[edge_id]
        except KeyError:
            raise GraphError(f"unknown edge {edge_id!r}") from None

    @property
    def volume(self) -> float:
        return math.fsum(e.length for e in self.edges)

    @property
    def min_length(self) -> float:
        return min(e.length for e in self.edges)

    def degree(self, vertex: str) -> int:
        """Number of edge ends at ``vertex`` (a loop counts twice)."""
        return sum((e.tail == vertex) + (e.head == vertex) for e in self.edges)

    def vertex_at(self, p: "PointOnGraph") -> str | None:
        """Vertex id if ``p`` sits on an edge end, else ``None``."""
        e = self.edge(p.edge)
        self.check_point(p)
        if p.s == 0.0:
            return e.tail
        if p.s == e.length:
            return e.head
        return None

    def check_point(self, p: "PointOnGraph") -> None:
        e = self.edge(p.edge)
        if not (0.0 <= p.s <= e.length):
            raise GraphError(
                f"point s={p.s!r} lies off edge {e.id!r} of length {e.length!r}"
            )

    def same_point(self, p: "PointOnGraph", q: "PointOnGraph") -> bool:
        vp, vq = self.vertex_at(p), self.vertex_at(q)
        if vp is not None or vq is not None:
            return vp == vq
        return p.edge == q.edge and p.s == q.s

    def distance_to_vertices(self, p: "PointOnGraph") -> float:
        """Distance from ``p`` to the nearest vertex along its own edge."""
        e = self.edge(p.edge)
        self.check_point(p)
        return min(p.s, e.length - p.s)


@dataclass(frozen=True)
class PointOnGraph:
    edge: str
    s: float


def total_volume(g: MetricGraph) -> float:
    """Sum of edge lengths."""
    return g.volume


# ---------------------------------------------------------------------------
# potentials


@dataclass(frozen=True)
class Constant:
    value: float

    def __call__(self, s, length: float):
        return np.full_like(np.asarray(s, dtype=float), self.value)

    def sup(self) -> float:
        return abs(self.value)

    def integral(self, length: float) -> float:
        return self.value * length


@dataclass(frozen=True)
class CosineMode:
    """``amplitude * cos(2 pi mode s / length)``."""

    amplitude: float
    mode: int

    def __post_init__(self):
        if int(self.mode) != self.mode or self.mode < 0:
            raise GraphError(f"cosine mode must be a non-negative integer, got {self.mode!r}")
        object.__setattr__(self, "mode", int(self.mode))

    def __call__(self, s, length: float):
        s = np.asarray(s, dtype=float)
        return self.amplitude * np.cos(2.0 * math.pi * self.mode * s / length)

    def sup(self) -> float:
        return abs(self.amplitude)

    def integral(self, length: float) -> float:
        return self.amplitude * length if self.mode == 0 else 0.0


@dataclass(frozen=True)
class GaussianBump:
    """``amplitude * exp(-(s - center)**2 / (2 width**2))``."""

    amplitude: float
    center: float
    width: float

    def __post_init__(self):
        if not self.width > 0:
            raise GraphError(f"bump width must be positive, got {self.width!r}")

    def __call__(self, s, length: float):
        s = np.asarray(s, dtype=float)
        return self.amplitude * np.exp(-0.5 * ((s - self.center) / self.width) ** 2)

    def sup(self) -> float:
        return abs(self.amplitude)

    def integral(self, length: float) -> float:
        s = np.linspace(0.0, length, _QUAD_PANELS + 1)
        return float(np.trapezoid(self(s, length), s))


@dataclass(frozen=True)
class Sampled:
    """Values at uniformly spaced nodes ``0, L/m, ..., L`` (``m + 1`` samples)."""

    values: tuple[float, ...]

    def __post_init__(self):
        vals = tuple(float(v) for v in self.values)
        if len(vals) < 2:
            raise GraphError("sampled potential needs at least two values")
        if not all(math.isfinite(v) for v in vals):
            raise GraphError("sampled potential values must be finite")
        object.__setattr__(self, "values", vals)

    def __call__(self, s, length: float):
        nodes = np.linspace(0.0, length, len(self.values))
        return np.interp(np.asarray(s, dtype=float), nodes, self.values)

    def sup(self) -> float:
        return max(abs(v) for v in self.values)

    def integral(self, length: float) -> float:
        nodes = np.linspace(0.0, length, len(self.values))
        return float(np.trapezoid(self.values, nodes))


PotentialTerm = Union[Constant, CosineMode, GaussianBump, Sampled]


@dataclass(frozen=True)
class PotentialSpec:
    """Per-edge potential on a metric graph; edges without a term carry zero."""

    graph: MetricGraph
    terms: Mapping[str, PotentialTerm] = field(default_factory=dict)

    def __post_init__(self):
        terms = dict(self.terms)
        for eid in terms:
            self.graph.edge(eid)
        object.__setattr__(self, "terms", terms)

    @classmethod
    def zero(cls, graph: MetricGraph) -> "PotentialSpec":
        return cls(graph, {})

    @classmethod
    def uniform(cls, graph: MetricGraph, term: PotentialTerm) -> "PotentialSpec":
        """Same term on every edge."""
        return cls(graph, {e.id: term for e in graph.edges})

    def term(self, edge_id: str) -> PotentialTerm:
        return self.terms.get(edge_id, Constant(0.0))

    @property
    def sup_norm(self) -> float:
        return max((t.sup() for t in self.terms.values()), default=0.0)

    @property
    def is_zero(self) -> bool:
        return self.sup_norm == 0.0

    def integral(self) -> float:
        """Integral of V over the whole graph."""
        return math.fsum(
            self.term(e.id).integral(e.length) for e in self.graph.edges
        )

    def on_edge(self, edge_id: str, s) -> np.ndarray:
        e = self.graph.edge(edge_id)
        return self.term(edge_id)(s, e.length)

    def __call__(self, p: PointOnGraph) -> float:
        return evaluate_potential(self, p)


def evaluate_potential(spec: PotentialSpec, p: PointOnGraph) -> float:
    spec.graph.check_point(p)
    return float(spec.on_edge(p.edge, p.s))


# ---------------------------------------------------------------------------
# GRAPH text format


def _parse_kv(tokens: list[str], keys: tuple[str, ...], lineno: int) -> dict[str, str]:
    out = {}
    for tok in tokens:
        key, sep, val = tok.partition("=")
        if not sep or key not in keys:
            raise GraphError(f"unexpected token {tok!r}", lineno)
        if key in out:
            raise GraphError(f"repeated key {key!r}", lineno)
        out[key] = val
    missing = [k for k in keys if k not in out]
    if missing:
        raise GraphError(f"missing {', '.join(missing)}", lineno)
    return out


def _float(text: str, what: str, lineno: int | None) -> float:
    try:
        val = float(text)
    except ValueError:
        raise GraphError(f"{what} is not a number: {text!r}", lineno) from None
    if not math.isfinite(val):
        raise GraphError(f"{what} must be finite", lineno)
    return val


def parse_potential_term(tokens: list[str], lineno: int | None = None) -> PotentialTerm:
    """Parse ``const <c>``, ``cos amp=.. mode=..`` or ``bump amp=.. center=.. width=..``."""
    if not tokens:
        raise GraphError("missing potential kind", lineno)
    kind, rest = tokens[0], tokens[1:]
    if kind == "const":
        if len(rest) != 1:
            raise GraphError("const takes exactly one value", lineno)
        return Constant(_float(rest[0], "constant", lineno))
    if kind == "cos":
        kv = _parse_kv(rest, ("amp", "mode"), lineno)
        mode = _float(kv["mode"], "mode", lineno)
        if mode != int(mode) or mode < 0:
            raise GraphError("mode must be a non-negative integer", lineno)
        return CosineMode(_float(kv["amp"], "amp", lineno), int(mode))
    if kind == "bump":
        kv = _parse_kv(rest, ("amp", "center", "width"), lineno)
        width = _float(kv["width"], "width", lineno)
        if width <= 0:
            raise GraphError("width must be positive", lineno)
        return GaussianBump(
            _float(kv["amp"], "amp", lineno), _float(kv["center"], "center", lineno), width
        )
    raise GraphError(f"unknown potential kind {kind!r}", lineno)


def parse_graph_file(text: str) -> tuple[MetricGraph, PotentialSpec]:
    vertices: list[str] = []
    edges: list[Edge] = []
    pots: list[tuple[str, PotentialTerm, int]] = []
    seen_v: set[str] = set()
    seen_e: set[str] = set()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tok = line.split()
        if tok[0] == "vertex":
            if len(tok) != 2:
                raise GraphError("expected: vertex <id>", lineno)
            if tok[1] in seen_v:
                raise GraphError(f"duplicate vertex {tok[1]!r}", lineno)
            seen_v.add(tok[1])
            vertices.append(tok[1])
        elif tok[0] == "edge":
            if len(tok) != 5:
                raise GraphError("expected: edge <id> <vid> <vid> length=<float>", lineno)
            _, eid, u, v, spec = tok
            if eid in seen_e:
                raise GraphError(f"duplicate edge {eid!r}", lineno)
            for w in (u, v):
                if w not in seen_v:
                    raise GraphError(f"unknown vertex {w!r}", lineno)
            length = _float(_parse_kv([spec], ("length",), lineno)["length"], "length", lineno)
            if length <= 0:
                raise GraphError(f"non-positive length {length!r}", lineno)
            seen_e.add(eid)
            edges.append(Edge(eid, u, v, length))
        elif tok[0] == "potential":
            if len(tok) < 3:
                raise GraphError("expected: potential <edge-id> <kind> ...", lineno)
            pots.append((tok[1], parse_potential_term(tok[2:], lineno), lineno))
        else:
            raise GraphError(f"unknown directive {tok[0]!r}", lineno)
    graph = MetricGraph(tuple(vertices), tuple(edges))
    terms: dict[str, PotentialTerm] = {}
    for eid, term, lineno in pots:
        if eid not in seen_e:
            raise GraphError(f"potential on unknown edge {eid!r}", lineno)
        if eid in terms:
            raise GraphError(f"second potential for edge {eid!r}", lineno)
        terms[eid] = term
    return graph, PotentialSpec(graph, terms)


def parse_graph(text: str) -> MetricGraph:
    return parse_graph_file(text)[0]


def parse_potential(text: str) -> PotentialSpec:
    return parse_graph_file(text)[1]


def _term_line(eid: str, term: PotentialTerm) -> str:
    if isinstance(term, Constant):
        return f"potential {eid} const {term.value!r}"
    if isinstance(term, CosineMode):
        return f"potential {eid} cos amp={term.amplitude!r} mode={term.mode}"
    if isinstance(term, GaussianBump):
        return (
            f"potential {eid} bump amp={term.amplitude!r} "
            f"center={term.center!r} width={term.width!r}"
        )
    raise GraphError(f"{type(term).__name__} potentials have no text form")


def serialize_graph(g: MetricGraph, potential: PotentialSpec | None = None) -> str:
    lines = [f"vertex {v}" for v in g.vertices]
    lines += [f"edge {e.id} {e.tail} {e.head} length={e.length!r}" for e in g.edges]
    if potential is not None:
        lines += [_term_line(eid, t) for eid, t in potential.terms.items()]
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# builtin graphs


def interval_graph(length: float = 1.0) -> MetricGraph:
    return MetricGraph(("a", "b"), (Edge("e1", "a", "b", length),))


def loop_graph(length: float = 1.0) -> MetricGraph:
    return MetricGraph(("a",), (Edge("e1", "a", "a", length),))


def star_graph(lengths=(1.0, 1.0, 1.0)) -> MetricGraph:
    """Star with centre ``c``; edge ``e<k>`` runs from ``c`` to leaf ``v<k>``."""
    leaves = tuple(f"v{k}" for k in range(1, len(lengths) + 1))
    edges = tuple(
        Edge(f"e{k}", "c", leaf, float(L))
        for k, (leaf, L) in enumerate(zip(leaves, lengths), start=1)
    )
    return MetricGraph(("c",) + leaves, edges)


def lasso_graph(loop_length: float = 1.0, tail_length: float = 1.0) -> MetricGraph:
    return MetricGraph(
        ("a", "b"),
        (Edge("loop", "a", "a", loop_length), Edge("tail", "a", "b", tail_length)),
    )


BUILTINS = {
    "interval": interval_graph,
    "loop": loop_graph,
    "star3": star_graph,
    "lasso": lasso_graph,
}


def builtin_graph(name: str) -> MetricGraph:
    try:
        return BUILTINS[name]()
    except KeyError:
        raise GraphError(
            f"unknown builtin {name!r}; choose from {', '.join(sorted(BUILTINS))}"
        ) from None


# ---------------------------------------------------------------------------
# combinatorial graphs


@dataclass(frozen=True, eq=False)
class CombinatorialGraph:
    """Finite weighted graph with a potential value at each vertex.

    The diagonal of ``weights`` is ignored: self-loops cancel in ``D - A``.
    """

    weights: np.ndarray
    potential: np.ndarray

    def __post_init__(self):
        w = np.array(self.weights, dtype=float)
        if w.ndim != 2 or w.shape[0] != w.shape[1] or w.shape[0] == 0:
            raise GraphError("adjacency weights must be a non-empty square matrix")
        if not np.all(np.isfinite(w)):
            raise GraphError("adjacency weights must be finite")
        if not np.array_equal(w, w.T):
            raise GraphError("adjacency weights are not symmetric")
        if np.any(w < 0):
            raise GraphError("adjacency weights must be non-negative")
        np.fill_diagonal(w, 0.0)
        n = w.shape[0]
        v = np.zeros(n) if self.potential is None else np.array(self.potential, dtype=float)
        if v.shape != (n,):
            raise GraphError(f"potential must have {n} entries")
        if not np.all(np.isfinite(v)):
            raise GraphError("potential values must be finite")
        rows, cols = np.nonzero(w)
        if not _connected(range(n), zip(rows.tolist(), cols.tolist())):
            raise GraphError("combinatorial graph is disconnected")
        w.setflags(write=False)
        v.setflags(write=False)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "potential", v)

    @property
    def n(self) -> int:
        return self.weights.shape[0]

    def with_potential(self, potential) -> "CombinatorialGraph":
        return CombinatorialGraph(self.weights, potential)

    @classmethod
    def path(cls, n: int, potential=None) -> "CombinatorialGraph":
        w = np.zeros((n, n))
        idx = np.arange(n - 1)
        w[idx, idx + 1] = w[idx + 1, idx] = 1.0
        return cls(w, potential)
