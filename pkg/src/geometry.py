# ============================================================
# src/geometry.py
# Geodesics, geodesic bundles and Kuratowski tangle detection
# on hypergraph skeletons
# ============================================================
from __future__ import annotations

import logging
from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

import networkx as nx
import pandas as pd

from src.errors import InputError, UnreachableError
from src.hypercore import Hypergraph, VertexId

logger = logging.getLogger(__name__)

K5 = "K5"
K33 = "K33"

Edge = Tuple[VertexId, VertexId]


@dataclass(frozen=True)
class GeodesicPath:
    vertices: Tuple[VertexId, ...]

    @property
    def length(self) -> int:
        return len(self.vertices) - 1

    def to_dict(self) -> dict:
        return {"vertices": list(self.vertices), "length": self.length}


def geodesic(h: Hypergraph, u: VertexId, v: VertexId) -> GeodesicPath:
    """Shortest path with the lexicographically smallest vertex sequence."""
    h.require_vertex(u)
    to_v = h.bfs_distances(v)
    if u not in to_v:
        raise UnreachableError(f"No path between {u} and {v}", u=u, v=v)
    path = [u]
    cur = u
    while cur != v:
        cur = min(w for w in h.neighbors(cur) if to_v.get(w) == to_v[cur] - 1)
        path.append(cur)
    return GeodesicPath(tuple(path))


# ============================================================
# Geodesic bundles
# ============================================================
@dataclass(frozen=True)
class SeparationProfile:
    rays: Tuple[Tuple[VertexId, ...], ...]
    separations: Tuple[Tuple[int, ...], ...]  # per step, one entry per ray pair
    truncated: bool = False

    @property
    def pairs(self) -> List[Tuple[int, int]]:
        return list(combinations(range(len(self.rays)), 2))

    def to_frame(self) -> pd.DataFrame:
        rows = []
        for step, seps in enumerate(self.separations):
            for (i, j), s in zip(self.pairs, seps):
                rows.append({"step": step, "ray_a": i, "ray_b": j, "separation": s})
        return pd.DataFrame(rows, columns=["step", "ray_a", "ray_b", "separation"])

    def to_dict(self) -> dict:
        return {
            "rays": [list(r) for r in self.rays],
            "separations": [list(s) for s in self.separations],
            "truncated": self.truncated,
        }


def geodesic_ray(h: Hypergraph, start: VertexId, direction: VertexId, steps: int) -> Tuple[Tuple[VertexId, ...], bool]:
    """Greedy ray: step to the neighbour farthest from start, ties to the smallest id."""
    if direction not in h.neighbors(start):
        raise InputError(f"{direction} is not a neighbour of {start}", start=start, direction=direction)
    dist = h.bfs_distances(start)
    ray = [start, direction]
    while len(ray) <= steps:
        cur = ray[-1]
        options = [w for w in h.neighbors(cur) if dist[w] > dist[cur]]
        if not options:
            return tuple(ray), True
        ray.append(min(options, key=lambda w: (-dist[w], w)))
    return tuple(ray[:steps + 1]), False


def bundle_divergence(h: Hypergraph, seeds: Sequence[Tuple[VertexId, VertexId]], steps: int) -> SeparationProfile:
    """Advance one ray per (start, direction) seed and record pairwise separations per step."""
    if len(seeds) < 2:
        raise InputError("A bundle needs at least two seeds")
    if steps < 1:
        raise InputError(f"steps must be >= 1, got {steps}")
    rays, stuck = [], False
    for start, direction in seeds:
        ray, was_stuck = geodesic_ray(h, start, direction, steps)
        rays.append(ray)
        stuck = stuck or was_stuck
    length = min(len(r) for r in rays)
    if stuck:
        logger.warning(f"Geodesic bundle truncated after {length - 1} steps")

    @lru_cache(maxsize=None)
    def dist_from(v: VertexId) -> Dict[VertexId, int]:
        return h.bfs_distances(v)

    separations = []
    for k in range(length):
        separations.append(tuple(dist_from(a[k]).get(b[k], -1) for a, b in combinations(rays, 2)))
    return SeparationProfile(tuple(rays), tuple(separations), stuck)


# ============================================================
# Planarity and tangles
# ============================================================
@dataclass(frozen=True)
class KuratowskiWitness:
    kind: str
    edges: Tuple[Edge, ...]

    def to_dict(self) -> dict:
        return {"kind": self.kind, "edges": [list(e) for e in self.edges]}


@dataclass(frozen=True)
class TangleReport:
    planar: bool
    witnesses: Tuple[KuratowskiWitness, ...] = ()

    @property
    def count(self) -> int:
        return len(self.witnesses)

    def to_dict(self) -> dict:
        return {"planar": self.planar, "count": self.count, "witnesses": [w.to_dict() for w in self.witnesses]}


def _as_graph(g: Union[Hypergraph, nx.Graph]) -> nx.Graph:
    return g.skeleton() if isinstance(g, Hypergraph) else nx.Graph(g)


def _norm(edges: Iterable[Edge]) -> Tuple[Edge, ...]:
    return tuple(sorted(tuple(sorted(e)) for e in edges))


def _branch_kind(sub: nx.Graph) -> str:
    degrees = sorted(d for _, d in sub.degree() if d > 2)
    return K5 if degrees and degrees[0] >= 4 else K33


def _find_witness(g: nx.Graph) -> Optional[KuratowskiWitness]:
    planar, cert = nx.check_planarity(g, counterexample=True)
    if planar:
        return None
    return KuratowskiWitness(_branch_kind(cert), _norm(cert.edges()))


def is_planar(h: Union[Hypergraph, nx.Graph]) -> TangleReport:
    g = _as_graph(h)
    witness = _find_witness(g)
    if witness is None:
        return TangleReport(True)
    if not verify_kuratowski_witness(g, witness):
        logger.warning(f"Kuratowski witness of type {witness.kind} failed independent verification")
    return TangleReport(False, (witness,))


def _smooth(sub: nx.Graph) -> Optional[nx.Graph]:
    """Contract degree-2 vertices; None if that would create a multi-edge."""
    g = nx.Graph(sub)
    changed = True
    while changed:
        changed = False
        for v in sorted(g.nodes()):
            if g.degree(v) == 2:
                a, b = sorted(g.neighbors(v))
                if g.has_edge(a, b):
                    return None
                g.remove_node(v)
                g.add_edge(a, b)
                changed = True
                break
    return g


def verify_kuratowski_witness(h: Union[Hypergraph, nx.Graph], witness: KuratowskiWitness) -> bool:
    """Witness edges lie in the skeleton and smooth to exactly K5 or K3,3 of the stated kind."""
    g = _as_graph(h)
    if not all(g.has_edge(a, b) for a, b in witness.edges):
        return False
    sub = nx.Graph(list(witness.edges))
    if any(d < 2 for _, d in sub.degree()) or not nx.is_connected(sub):
        return False
    core = _smooth(sub)
    if core is None:
        return False
    target = nx.complete_graph(5) if witness.kind == K5 else nx.complete_bipartite_graph(3, 3)
    return nx.is_isomorphic(core, target)


def remove_witness_edges(h: Union[Hypergraph, nx.Graph], witnesses: Iterable[KuratowskiWitness]) -> nx.Graph:
    g = _as_graph(h)
    for w in witnesses:
        g.remove_edges_from(w.edges)
    return g


def count_tangles(h: Union[Hypergraph, nx.Graph]) -> TangleReport:
    """Greedy edge-disjoint extraction of Kuratowski subdivisions until the rest is planar."""
    g = _as_graph(h)
    found: List[KuratowskiWitness] = []
    while True:
        witness = _find_witness(g)
        if witness is None:
            break
        found.append(witness)
        g.remove_edges_from(witness.edges)
    logger.info(f"Found {len(found)} edge-disjoint tangles")
    return TangleReport(not found, tuple(found))
