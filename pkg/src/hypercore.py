# ============================================================
# src/hypercore.py
# Spatial hypergraph state: ordered hyperedges, canonical keys,
# hop distances and ball growth counts
# ============================================================
from __future__ import annotations

import hashlib
import logging
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence, Tuple

import networkx as nx

from src.errors import InputError

logger = logging.getLogger(__name__)

VertexId = int
CanonicalKey = bytes

# unreachable marker for hop distances
INF = math.inf


@dataclass(frozen=True, order=True)
class Hyperedge:
    id: int
    vertices: Tuple[VertexId, ...]
    creator_event: Optional[int] = field(default=None, compare=False)

    def __post_init__(self):
        if len(self.vertices) < 1:
            raise InputError(f"Hyperedge {self.id} must have at least one vertex")

    @property
    def tail(self) -> Tuple[VertexId, ...]:
        """All but the last vertex; a unary edge is its own tail."""
        return self.vertices[:-1] if len(self.vertices) > 1 else self.vertices

    @property
    def head(self) -> Tuple[VertexId, ...]:
        return self.vertices[-1:]


@dataclass(frozen=True)
class Hypergraph:
    """Immutable multiset of ordered hyperedges. Edges are kept sorted by id."""

    edges: Tuple[Hyperedge, ...] = ()
    next_vertex: int = 0
    next_edge: int = 0
    isolated: FrozenSet[VertexId] = frozenset()

    def __post_init__(self):
        ids = [e.id for e in self.edges]
        if len(set(ids)) != len(ids):
            raise InputError("Hyperedge ids must be unique")
        if list(ids) != sorted(ids):
            object.__setattr__(self, "edges", tuple(sorted(self.edges, key=lambda e: e.id)))
        if ids and max(ids) >= self.next_edge:
            raise InputError("next_edge must exceed every edge id in use")
        verts = self.vertex_set
        if verts and max(verts) >= self.next_vertex:
            raise InputError("next_vertex must exceed every vertex id in use")
        if any(v < 0 for v in verts):
            raise InputError("Vertex ids must be non-negative")

    # --------- construction ----------
    @classmethod
    def from_edges(cls, edges: Iterable[Sequence[int]], isolated: Iterable[int] = ()) -> "Hypergraph":
        hes = tuple(Hyperedge(i, tuple(int(v) for v in vs)) for i, vs in enumerate(edges))
        iso = frozenset(int(v) for v in isolated)
        verts = {v for e in hes for v in e.vertices} | iso
        return cls(
            edges=hes,
            next_vertex=(max(verts) + 1) if verts else 0,
            next_edge=len(hes),
            isolated=iso - {v for e in hes for v in e.vertices},
        )

    @classmethod
    def from_json_obj(cls, obj: dict) -> "Hypergraph":
        if not isinstance(obj, dict) or "edges" not in obj:
            raise InputError('Hypergraph JSON must be an object with an "edges" list')
        try:
            return cls.from_edges(obj["edges"], obj.get("isolated", ()))
        except (TypeError, ValueError) as e:
            raise InputError(f"Malformed hypergraph JSON: {e}")

    def to_json_obj(self) -> dict:
        obj: dict = {"edges": [list(e.vertices) for e in self.edges]}
        if self.isolated:
            obj["isolated"] = sorted(self.isolated)
        return obj

    # --------- basic views ----------
    @cached_property
    def vertex_set(self) -> FrozenSet[VertexId]:
        return frozenset(v for e in self.edges for v in e.vertices) | self.isolated

    def vertices(self) -> List[VertexId]:
        return sorted(self.vertex_set)

    @cached_property
    def edge_index(self) -> Dict[int, Hyperedge]:
        return {e.id: e for e in self.edges}

    def __len__(self) -> int:
        return len(self.edges)

    def has_vertex(self, v: VertexId) -> bool:
        return v in self.vertex_set

    def require_vertex(self, v: VertexId) -> None:
        if v not in self.vertex_set:
            raise InputError(f"Unknown vertex {v}", vertex=v)

    def edge_tuples(self) -> List[Tuple[int, ...]]:
        return [e.vertices for e in self.edges]

    # --------- functional updates ----------
    def replace(self, consumed: Iterable[int], created: Sequence[Sequence[int]],
                creator_event: Optional[int] = None, next_vertex: Optional[int] = None
                ) -> Tuple["Hypergraph", Tuple[int, ...]]:
        """Drop `consumed` edge ids and append `created` vertex tuples with fresh ids."""
        gone = set(consumed)
        kept = [e for e in self.edges if e.id not in gone]
        new_ids = tuple(range(self.next_edge, self.next_edge + len(created)))
        new_edges = [Hyperedge(i, tuple(vs), creator_event) for i, vs in zip(new_ids, created)]
        nv = self.next_vertex if next_vertex is None else max(next_vertex, self.next_vertex)
        used = {v for vs in created for v in vs}
        if used and max(used) >= nv:
            nv = max(used) + 1
        h = Hypergraph(
            edges=tuple(kept + new_edges),
            next_vertex=nv,
            next_edge=self.next_edge + len(created),
            isolated=self.isolated - used,
        )
        return h, new_ids

    def replace_with_ids(self, consumed: Iterable[int],
                         created: Sequence[Tuple[int, Sequence[int]]],
                         creator_event: Optional[int] = None) -> "Hypergraph":
        """Like `replace`, but with caller-chosen ids for the created edges (event replay)."""
        gone = set(consumed)
        missing = gone - set(self.edge_index)
        if missing:
            raise InputError(f"Edges {sorted(missing)} are not present", edges=sorted(missing))
        kept = [e for e in self.edges if e.id not in gone]
        new_edges = [Hyperedge(i, tuple(vs), creator_event) for i, vs in created]
        used = {v for _, vs in created for v in vs}
        ids = [i for i, _ in created]
        return Hypergraph(
            edges=tuple(kept + new_edges),
            next_vertex=max([self.next_vertex] + [v + 1 for v in used]),
            next_edge=max([self.next_edge] + [i + 1 for i in ids]),
            isolated=self.isolated - used,
        )

    # --------- adjacency ----------
    @cached_property
    def _undirected_adj(self) -> Dict[VertexId, Tuple[VertexId, ...]]:
        adj: Dict[VertexId, set] = {v: set() for v in self.vertex_set}
        for e in self.edges:
            vs = set(e.vertices)
            for a in vs:
                adj[a].update(vs - {a})
        return {v: tuple(sorted(ns)) for v, ns in adj.items()}

    @cached_property
    def _directed_adj(self) -> Dict[VertexId, Tuple[VertexId, ...]]:
        adj: Dict[VertexId, set] = {v: set() for v in self.vertex_set}
        for e in self.edges:
            for a in e.tail:
                adj[a].update(b for b in e.head if b != a)
        return {v: tuple(sorted(ns)) for v, ns in adj.items()}

    def neighbors(self, v: VertexId, directed: bool = False) -> Tuple[VertexId, ...]:
        self.require_vertex(v)
        return (self._directed_adj if directed else self._undirected_adj)[v]

    def degree(self, v: VertexId) -> int:
        """Skeleton degree (distinct neighbours other than v)."""
        return len(self.neighbors(v))

    def in_edges(self, v: VertexId) -> List[Hyperedge]:
        return [e for e in self.edges if v in e.head and len(e.vertices) > 1]

    def out_edges(self, v: VertexId) -> List[Hyperedge]:
        return [e for e in self.edges if v in e.tail and len(e.vertices) > 1]

    @cached_property
    def _skeleton_graph(self) -> nx.Graph:
        g = nx.Graph()
        g.add_nodes_from(self.vertices())
        for v, ns in self._undirected_adj.items():
            g.add_edges_from((v, w) for w in ns if v < w)
        return g

    @cached_property
    def _directed_graph(self) -> nx.DiGraph:
        g = nx.DiGraph()
        g.add_nodes_from(self.vertices())
        for v, ns in self._directed_adj.items():
            g.add_edges_from((v, w) for w in ns)
        return g

    def skeleton(self) -> nx.Graph:
        """Undirected simple graph: clique expansion of every hyperedge, self-loops dropped."""
        return self._skeleton_graph.copy()

    # --------- metric ----------
    def bfs_distances(self, source: VertexId, directed: bool = False,
                      cutoff: Optional[int] = None) -> Dict[VertexId, int]:
        self.require_vertex(source)
        g = self._directed_graph if directed else self._skeleton_graph
        return dict(nx.single_source_shortest_path_length(g, source, cutoff=cutoff))


def distance(h: Hypergraph, u: VertexId, v: VertexId, directed: bool = False):
    """Hop count between u and v, each hyperedge traversal costing one; INF when unreachable."""
    h.require_vertex(u)
    h.require_vertex(v)
    if u == v:
        return 0
    return h.bfs_distances(u, directed=directed).get(v, INF)


def ball_counts(h: Hypergraph, center: VertexId, r_max: int, directed: bool = False) -> List[int]:
    """N(r) for r = 0..r_max: vertices within hop distance r of center."""
    if r_max < 0:
        raise InputError(f"r_max must be >= 0, got {r_max}")
    dist = h.bfs_distances(center, directed=directed, cutoff=r_max)
    shells = [0] * (r_max + 1)
    for d in dist.values():
        shells[d] += 1
    counts, total = [], 0
    for s in shells:
        total += s
        counts.append(total)
    return counts


# ============================================================
# Canonical labelling: colour refinement + individualisation
# ============================================================
Relation = Tuple[str, Tuple[int, ...]]


def _refine(n: int, relations: Sequence[Relation], incidence, colors: List[int]) -> List[int]:
    while True:
        sigs = []
        for v in range(n):
            parts = sorted(
                (tag, pos, tuple(colors[w] for w in tup))
                for tag, tup, pos in ((relations[i][0], relations[i][1], p) for i, p in incidence[v])
            )
            sigs.append((colors[v], tuple(parts)))
        ranking = {sig: i for i, sig in enumerate(sorted(set(sigs)))}
        refined = [ranking[s] for s in sigs]
        if len(ranking) == len(set(colors)):
            return refined
        colors = refined


def _individualize(colors: List[int], v: int) -> List[int]:
    c = colors[v]
    return [2 * k + (1 if (k == c and w != v) else 0) for w, k in enumerate(colors)]


def _leaf_certificate(n: int, relations: Sequence[Relation], labels: List[int]) -> tuple:
    return (n, tuple(sorted((tag, tuple(labels[w] for w in tup)) for tag, tup in relations)))


def _orbit_roots(candidates: List[int], generators: List[List[int]]) -> Dict[int, int]:
    parent = {c: c for c in candidates}

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for g in generators:
        for c in candidates:
            img = g[c]
            if img in parent:
                ra, rb = find(c), find(img)
                if ra != rb:
                    parent[max(ra, rb)] = min(ra, rb)
    return {c: find(c) for c in candidates}


def canonical_certificate(n: int, relations: Sequence[Relation],
                          colors: Optional[Sequence[int]] = None) -> tuple:
    """
    Lexicographically least relabelled relation multiset over an
    individualisation-refinement search tree. Equal for isomorphic inputs.
    """
    rels = [(tag, tuple(tup)) for tag, tup in relations]
    incidence: List[List[Tuple[int, int]]] = [[] for _ in range(n)]
    for i, (_, tup) in enumerate(rels):
        for p, v in enumerate(tup):
            incidence[v].append((i, p))
    start = list(colors) if colors is not None else [0] * n
    # normalise supplied colours to ranks
    ranks = {c: i for i, c in enumerate(sorted(set(start)))}
    start = [ranks[c] for c in start]

    best: List[Optional[tuple]] = [None]
    best_labels: List[Optional[List[int]]] = [None]
    generators: List[List[int]] = []

    def search(cols: List[int], fixed: Tuple[int, ...]):
        cols = _refine(n, rels, incidence, cols)
        cells: Dict[int, List[int]] = {}
        for v, c in enumerate(cols):
            cells.setdefault(c, []).append(v)
        target = None
        for c in sorted(cells):
            if len(cells[c]) > 1:
                target = cells[c]
                break
        if target is None:
            cert = _leaf_certificate(n, rels, cols)
            if best[0] is None or cert < best[0]:
                best[0], best_labels[0] = cert, cols
            elif cert == best[0]:
                # same certificate: the two labellings differ by an automorphism
                inv = {lab: v for v, lab in enumerate(best_labels[0])}
                generators.append([inv[cols[v]] for v in range(n)])
            return
        explored: List[int] = []
        for v in target:
            stab = [g for g in generators if all(g[f] == f for f in fixed)]
            roots = _orbit_roots(target, stab)
            if roots[v] in {roots[u] for u in explored}:
                continue
            explored.append(v)
            search(_individualize(cols, v), fixed + (v,))

    if n == 0:
        return (0, tuple(sorted(rels)))
    search(start, ())
    return best[0]


def key_from_certificate(cert: tuple, prefix: str = "hg") -> CanonicalKey:
    return hashlib.sha256(f"{prefix}:{cert!r}".encode("utf-8")).digest()


def canonical_form(h: Hypergraph) -> CanonicalKey:
    """Key equal for two hypergraphs iff isomorphic under vertex relabelling."""
    verts = h.vertices()
    index = {v: i for i, v in enumerate(verts)}
    rels = [("e", tuple(index[v] for v in e.vertices)) for e in h.edges]
    return key_from_certificate(canonical_certificate(len(verts), rels), "hg")


def digraph_canonical_form(nodes: Sequence[int], arcs: Iterable[Tuple[int, int]],
                           labels: Optional[Dict[int, int]] = None) -> CanonicalKey:
    """Canonical key of a directed graph (optionally node-coloured)."""
    index = {v: i for i, v in enumerate(sorted(nodes))}
    rels = [("a", (index[a], index[b])) for a, b in arcs]
    colors = None
    if labels is not None:
        colors = [labels.get(v, 0) for v in sorted(nodes)]
    return key_from_certificate(canonical_certificate(len(index), rels, colors), "dag")


def relabel(h: Hypergraph, mapping: Dict[VertexId, VertexId]) -> Hypergraph:
    """Hypergraph with vertex ids renamed through `mapping` (edge order kept)."""
    return Hypergraph.from_edges(
        [[mapping[v] for v in e.vertices] for e in h.edges],
        isolated=[mapping[v] for v in h.isolated],
    )


__all__ = [
    "VertexId",
    "CanonicalKey",
    "INF",
    "Hyperedge",
    "Hypergraph",
    "distance",
    "ball_counts",
    "canonical_form",
    "canonical_certificate",
    "digraph_canonical_form",
    "key_from_certificate",
    "relabel",
]
