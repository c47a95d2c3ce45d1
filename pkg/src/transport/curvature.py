# ============================================================
# src/transport/curvature.py
# Ollivier-Ricci curvature, optimal-transport parallel transport
# and sectional / Ricci direction estimates
# ============================================================
from __future__ import annotations

import logging
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

import pandas as pd
from joblib import Parallel, delayed

from src.errors import DegenerateGeometryError, DomainError, UnreachableError
from src.hypercore import INF, Hypergraph, VertexId, distance
from src.transport.measures import (
    hyperedge_measures,
    lookup_edge,
    sphere_measure,
    uniform_ball_measure,
)
from src.transport.wasserstein import Coupling, wasserstein1

logger = logging.getLogger(__name__)

Curvature = Union[Fraction, float]


def ollivier_ricci_pair(h: Hypergraph, p: VertexId, q: VertexId,
                        laziness: Union[float, Fraction, None] = None) -> Curvature:
    """kappa(p, q) = 1 - W1(m_p, m_q) / d(p, q)."""
    if p == q:
        raise DomainError("Ollivier-Ricci curvature needs two distinct points", vertex=p)
    d = distance(h, p, q)
    if d == INF:
        raise UnreachableError(f"Vertices {p} and {q} are not connected", p=p, q=q)
    mp = uniform_ball_measure(h, p, laziness)
    mq = uniform_ball_measure(h, q, laziness)
    plan = wasserstein1(h, mp, mq)
    return 1 - plan.cost / d


def ollivier_ricci_hyperedge(h: Hypergraph, edge: Union[int, object]) -> Curvature:
    """kappa(e) = 1 - W1(mu_tail_in, mu_head_out) under directed hop distance."""
    e = lookup_edge(h, edge) if isinstance(edge, int) else edge
    mu_in, mu_out = hyperedge_measures(h, e)
    plan = wasserstein1(h, mu_in, mu_out, directed=True)
    return 1 - plan.cost


# ============================================================
# Parallel transport
# ============================================================
@dataclass(frozen=True)
class ParallelTransport:
    source: VertexId
    target: VertexId
    coupling: Coupling
    bijection: Optional[Dict[VertexId, VertexId]]

    @property
    def is_bijection(self) -> bool:
        return self.bijection is not None

    def image(self, w: VertexId) -> VertexId:
        """Highest-mass target of w, skipping the back-direction unless it takes all of w's mass."""
        if self.bijection is not None and w in self.bijection:
            return self.bijection[w]
        targets = [(v, m) for (u, v), m in self.coupling.items() if u == w]
        if not targets:
            raise DegenerateGeometryError(f"Direction {w} has no transported image", vertex=w)
        forward = [(v, m) for v, m in targets if v != self.source]
        pool = forward or targets
        return min(pool, key=lambda vm: (-vm[1], vm[0]))[0]

    def to_dict(self) -> dict:
        return {
            "source": self.source,
            "target": self.target,
            "bijection": {str(k): v for k, v in sorted(self.bijection.items())} if self.bijection else None,
            "coupling": [[u, v, str(m)] for (u, v), m in sorted(self.coupling.items())],
        }


def parallel_transport(h: Hypergraph, x: VertexId, y: VertexId) -> ParallelTransport:
    """Optimal coupling between the unit spheres of x and y, read as a transport map."""
    mx = sphere_measure(h, x)
    if x == y:
        ident = {v: v for v in mx.support}
        return ParallelTransport(x, y, {(v, v): m for v, m in zip(mx.support, mx.mass)}, ident)
    if distance(h, x, y) == INF:
        raise UnreachableError(f"Vertices {x} and {y} are not connected", x=x, y=y)
    my = sphere_measure(h, y)
    plan = wasserstein1(h, mx, my)
    bijection = None
    if len(mx) == len(my):
        share = mx.mass[0]
        if all(m == share for m in plan.coupling.values()) and len(plan.coupling) == len(mx):
            bijection = {u: v for (u, v) in plan.coupling}
    return ParallelTransport(x, y, plan.coupling, bijection)


def sectional_curvature(h: Hypergraph, x: VertexId, v_dir: VertexId, w_dir: VertexId) -> Fraction:
    """K = 2 (1 - d(w, w_y)) for unit steps, w_y the transported image of w at y = v_dir."""
    nbrs = h.neighbors(x)
    for name, d in (("v_dir", v_dir), ("w_dir", w_dir)):
        if d not in nbrs:
            raise DomainError(f"{name}={d} is not a neighbour of {x}", vertex=x)
    if v_dir == w_dir:
        raise DomainError("Directions must be distinct (linearly dependent otherwise)", direction=v_dir)
    y = v_dir
    if not h.neighbors(y):
        raise DegenerateGeometryError(f"Unit sphere at {y} is empty", vertex=y)
    w_y = parallel_transport(h, x, y).image(w_dir)
    return Fraction(2) * (1 - distance(h, w_dir, w_y))


def ricci_direction(h: Hypergraph, x: VertexId, v_dir: VertexId) -> Fraction:
    """Mean sectional curvature over every other direction at x."""
    nbrs = h.neighbors(x)
    if len(nbrs) < 2:
        raise DegenerateGeometryError(f"Vertex {x} has fewer than two directions", vertex=x, degree=len(nbrs))
    others = [w for w in nbrs if w != v_dir]
    values = [sectional_curvature(h, x, v_dir, w) for w in others]
    return sum(values, Fraction(0)) / len(values)


@dataclass(frozen=True)
class Holonomy:
    cycle: Tuple[VertexId, ...]
    mapping: Dict[VertexId, VertexId]

    @property
    def is_trivial(self) -> bool:
        return all(w == v for w, v in self.mapping.items())

    @property
    def moved(self) -> Tuple[VertexId, ...]:
        return tuple(sorted(w for w, v in self.mapping.items() if w != v))

    def to_dict(self) -> dict:
        return {
            "cycle": list(self.cycle),
            "mapping": {str(w): v for w, v in sorted(self.mapping.items())},
            "trivial": self.is_trivial,
        }


def holonomy(h: Hypergraph, cycle: Sequence[VertexId]) -> Holonomy:
    """Carry every direction at cycle[0] once around the closed walk; the last step returns to cycle[0]."""
    walk = list(cycle)
    if len(walk) > 1 and walk[0] == walk[-1]:
        walk.pop()
    if len(set(walk)) < 2:
        raise DomainError("A holonomy cycle needs at least two distinct vertices", cycle=list(cycle))
    for a, b in zip(walk, walk[1:] + walk[:1]):
        h.require_vertex(a)
        if b not in h.neighbors(a):
            raise DomainError(f"Cycle step {a} -> {b} is not an edge", vertex=a)
    carried = {w: w for w in h.neighbors(walk[0])}
    for a, b in zip(walk, walk[1:] + walk[:1]):
        pt = parallel_transport(h, a, b)
        carried = {w: pt.image(v) for w, v in carried.items()}
    result = Holonomy(tuple(walk), carried)
    logger.debug(f"Holonomy around {result.cycle}: {len(result.moved)} directions moved")
    return result


# ============================================================
# Aggregates
# ============================================================
def scalar_curvature(h: Hypergraph, x: VertexId, laziness: Union[float, Fraction, None] = None) -> Optional[Curvature]:
    """Mean kappa from x to its neighbours; None for an isolated vertex."""
    nbrs = h.neighbors(x)
    if not nbrs:
        return None
    values = [ollivier_ricci_pair(h, x, y, laziness) for y in nbrs]
    return sum(values, Fraction(0)) / len(values)


def _edge_row(h: Hypergraph, u: VertexId, v: VertexId, laziness) -> Tuple[VertexId, VertexId, Curvature]:
    return u, v, ollivier_ricci_pair(h, u, v, laziness)


def curvature_table(h: Hypergraph, pairs: Optional[Iterable[Tuple[VertexId, VertexId]]] = None,
                    laziness: Union[float, Fraction, None] = None, n_jobs: Optional[int] = None) -> pd.DataFrame:
    """Per-edge kappa over the skeleton (or the given pairs) as a DataFrame (u, v, kappa)."""
    if pairs is None:
        pairs = sorted(h.skeleton().edges())
    pairs = [tuple(sorted(p)) for p in pairs]
    if n_jobs is None:
        from src.config import get_settings

        n_jobs = get_settings().threads
    if n_jobs > 1 and len(pairs) > 1:
        rows = Parallel(n_jobs=n_jobs, backend="threading")(
            delayed(_edge_row)(h, u, v, laziness) for u, v in pairs
        )
    else:
        rows = [_edge_row(h, u, v, laziness) for u, v in pairs]
    logger.info(f"Computed Ollivier-Ricci curvature on {len(rows)} edges")
    df = pd.DataFrame(rows, columns=["u", "v", "kappa"])
    df["kappa_float"] = df["kappa"].astype(float)
    return df


def hyperedge_curvature_table(h: Hypergraph) -> pd.DataFrame:
    rows: List[Tuple[int, Curvature]] = []
    for e in h.edges:
        if len(e.vertices) < 2:
            continue
        rows.append((e.id, ollivier_ricci_hyperedge(h, e)))
    df = pd.DataFrame(rows, columns=["edge", "kappa"])
    df["kappa_float"] = df["kappa"].astype(float)
    return df

