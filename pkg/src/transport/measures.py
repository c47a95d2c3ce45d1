# ============================================================
# src/transport/measures.py
# Discrete probability measures on hypergraph vertices
# ============================================================
from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, Iterable, Optional, Tuple, Union

from src.errors import DomainError, InputError
from src.hypercore import Hyperedge, Hypergraph, VertexId

Mass = Union[Fraction, float]


@dataclass(frozen=True)
class DiscreteMeasure:
    support: Tuple[VertexId, ...]
    mass: Tuple[Mass, ...]

    def __post_init__(self):
        if len(self.support) != len(self.mass):
            raise InputError("Measure support and mass must have the same length")
        if len(set(self.support)) != len(self.support):
            raise InputError(f"Measure support has repeated vertices: {list(self.support)}")
        if any(m < 0 for m in self.mass):
            raise InputError("Measure masses must be non-negative")
        total = sum(self.mass)
        exact = all(isinstance(m, (int, Fraction)) for m in self.mass)
        if (exact and total != 1) or (not exact and abs(total - 1) > 1e-12):
            raise InputError(f"Measure masses must sum to 1, got {total}")

    @classmethod
    def from_dict(cls, masses: Dict[VertexId, Mass]) -> "DiscreteMeasure":
        items = sorted((v, m) for v, m in masses.items() if m != 0)
        return cls(tuple(v for v, _ in items), tuple(m for _, m in items))

    @classmethod
    def dirac(cls, x: VertexId) -> "DiscreteMeasure":
        return cls((x,), (Fraction(1),))

    def as_dict(self) -> Dict[VertexId, Mass]:
        return dict(zip(self.support, self.mass))

    @property
    def exact(self) -> bool:
        return all(isinstance(m, (int, Fraction)) for m in self.mass)

    def __len__(self) -> int:
        return len(self.support)

    def to_dict(self) -> dict:
        return {str(v): str(m) if isinstance(m, Fraction) else m for v, m in zip(self.support, self.mass)}


def _as_fraction(alpha: Union[float, Fraction, None]) -> Fraction:
    if alpha is None:
        from src.config import get_settings

        alpha = get_settings().transport.laziness
    alpha = alpha if isinstance(alpha, Fraction) else Fraction(str(alpha))
    if not 0 <= alpha < 1:
        raise DomainError(f"Laziness must lie in [0, 1), got {alpha}")
    return alpha


def uniform_ball_measure(h: Hypergraph, x: VertexId, laziness: Union[float, Fraction, None] = None) -> DiscreteMeasure:
    """Mass 1/deg on each skeleton neighbour of x; with laziness a, a stays at x."""
    alpha = _as_fraction(laziness)
    nbrs = h.neighbors(x)
    if not nbrs:
        return DiscreteMeasure.dirac(x)
    share = (1 - alpha) / len(nbrs)
    masses: Dict[VertexId, Fraction] = {v: share for v in nbrs}
    if alpha:
        masses[x] = alpha
    return DiscreteMeasure.from_dict(masses)


def sphere_measure(h: Hypergraph, x: VertexId) -> DiscreteMeasure:
    """Uniform measure on the unit sphere S_x (no laziness)."""
    return uniform_ball_measure(h, x, laziness=0)


def _incoming(h: Hypergraph, x: VertexId) -> Iterable[Hyperedge]:
    return [e for e in h.in_edges(x) if x not in e.tail]


def _outgoing(h: Hypergraph, y: VertexId) -> Iterable[Hyperedge]:
    return [e for e in h.out_edges(y) if y not in e.head]


def hyperedge_measures(h: Hypergraph, e: Hyperedge) -> Tuple[DiscreteMeasure, DiscreteMeasure]:
    """Tail measure built from incoming hyperedges, head measure from outgoing ones."""
    tail = sorted(set(e.tail))
    head = sorted(set(e.head))
    if len(e.vertices) < 2 or not tail or not head:
        raise DomainError(f"Hyperedge {e.id} needs a non-empty tail and head", edge=e.id)

    mu_in: Dict[VertexId, Fraction] = defaultdict(Fraction)
    n = len(tail)
    for x in tail:
        into = list(_incoming(h, x))
        if not into:
            mu_in[x] += Fraction(1, n)
            continue
        for other in into:
            sources = set(other.tail)
            for z in sources:
                mu_in[z] += Fraction(1, n * len(into) * len(sources))

    mu_out: Dict[VertexId, Fraction] = defaultdict(Fraction)
    m = len(head)
    for y in head:
        out = list(_outgoing(h, y))
        if not out:
            mu_out[y] += Fraction(1, m)
            continue
        for other in out:
            targets = set(other.head)
            for z in targets:
                mu_out[z] += Fraction(1, m * len(out) * len(targets))

    return DiscreteMeasure.from_dict(mu_in), DiscreteMeasure.from_dict(mu_out)


def lookup_edge(h: Hypergraph, edge_id: int) -> Hyperedge:
    e: Optional[Hyperedge] = h.edge_index.get(edge_id)
    if e is None:
        raise InputError(f"Unknown hyperedge {edge_id}", edge=edge_id)
    return e
