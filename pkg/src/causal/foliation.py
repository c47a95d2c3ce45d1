# ============================================================
# src/causal/foliation.py
# Layered embeddings, interval classification, foliations and
# discrete Lorentz boosts
# ============================================================
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple, Union

import networkx as nx

from src.causal.graph import CausalGraph
from src.errors import DomainError, InputError, ValidationError

logger = logging.getLogger(__name__)

Number = Union[int, Fraction, float]


class Interval(str, Enum):
    TIMELIKE = "timelike"
    LIGHTLIKE = "lightlike"
    SPACELIKE = "spacelike"


@dataclass(frozen=True)
class EventCoordinates:
    t: Dict[int, Number]
    x: Dict[int, Tuple[Number, ...]]
    exact: bool = True

    def __post_init__(self):
        if set(self.t) != set(self.x):
            raise InputError("Time and space coordinates must cover the same events")

    def entry(self, event: int) -> Tuple[Number, Tuple[Number, ...]]:
        return self.t[event], self.x[event]

    def to_dict(self) -> dict:
        def enc(v):
            return str(v) if isinstance(v, Fraction) else v

        return {
            "exact": self.exact,
            "events": {str(e): {"t": enc(self.t[e]), "x": [enc(c) for c in self.x[e]]} for e in sorted(self.t)},
        }


@dataclass(frozen=True)
class Foliation:
    slices: Tuple[Tuple[int, ...], ...]

    def slice_of(self) -> Dict[int, int]:
        return {e: i for i, s in enumerate(self.slices) for e in s}

    def update_order(self) -> List[int]:
        """Total update order induced by the slicing (slice, then event id)."""
        return [e for s in self.slices for e in sorted(s)]

    def to_dict(self) -> dict:
        return {"slices": [list(s) for s in self.slices]}


def minkowski_norm(dt: Number, dx: Sequence[Number]) -> Number:
    """||(t, x)|| = |x|^2 - t^2."""
    return sum(c * c for c in dx) - dt * dt


def classify_interval(p: Tuple[Number, Sequence[Number]], q: Tuple[Number, Sequence[Number]]) -> Interval:
    (tp, xp), (tq, xq) = p, q
    if len(xp) != len(xq):
        raise InputError("Coordinates come from embeddings of different dimension")
    norm = minkowski_norm(tp - tq, [a - b for a, b in zip(xp, xq)])
    if norm < 0:
        return Interval.TIMELIKE
    if norm == 0:
        return Interval.LIGHTLIKE
    return Interval.SPACELIKE


def check_foliation(cg: CausalGraph, foliation: Foliation) -> Optional[Tuple[int, int]]:
    """None when valid, else the first causal edge that does not move to a strictly later slice."""
    where = foliation.slice_of()
    if set(where) != set(cg.events) or sum(len(s) for s in foliation.slices) != len(cg.events):
        raise InputError("Foliation must partition the causal graph's events")
    for a, b in sorted(cg.edges):
        if where[a] >= where[b]:
            return (a, b)
    return None


def foliate_standard(cg: CausalGraph) -> Tuple[Foliation, EventCoordinates]:
    """Longest-path layering; x is the centred in-layer rank."""
    if not cg.is_acyclic:
        raise ValidationError("Causal graph has a cycle; it cannot be layered")
    g = cg.digraph
    layer: Dict[int, int] = {}
    for v in nx.lexicographical_topological_sort(g):
        layer[v] = max((layer[p] + 1 for p in g.predecessors(v)), default=0)
    depth = max(layer.values(), default=-1) + 1
    slices = [sorted(v for v in cg.events if layer[v] == k) for k in range(depth)]
    t: Dict[int, Number] = {}
    x: Dict[int, Tuple[Number, ...]] = {}
    for k, members in enumerate(slices):
        m = len(members)
        for i, v in enumerate(members):
            t[v] = Fraction(k)
            x[v] = (Fraction(2 * i - (m - 1)),)
    return Foliation(tuple(tuple(s) for s in slices)), EventCoordinates(t, x, exact=True)


# ============================================================
# Discrete Lorentz boosts
# ============================================================
def _exact_sqrt(q: Fraction) -> Optional[Fraction]:
    if q < 0:
        return None
    num, den = math.isqrt(q.numerator), math.isqrt(q.denominator)
    if num * num == q.numerator and den * den == q.denominator:
        return Fraction(num, den)
    return None


@dataclass(frozen=True)
class Rapidity:
    """Boost parameter: v = tanh(rho) in [0, 1) along integer direction u."""

    v: Fraction
    u: Tuple[int, ...] = (1,)

    def __post_init__(self):
        v = Fraction(self.v)
        object.__setattr__(self, "v", v)
        if v < 0:
            raise DomainError(f"Boost velocity must be non-negative, got {v}")
        if v >= 1:
            raise DomainError(f"tanh(rho) must stay below 1, got v = {v}", v=str(v))
        if not self.u or all(c == 0 for c in self.u):
            raise DomainError("Boost direction must be a non-zero vector")

    @classmethod
    def parse(cls, text: str, u: Sequence[int] = (1,)) -> "Rapidity":
        try:
            v = Fraction(text.strip())
        except (ValueError, ZeroDivisionError):
            raise InputError(f"Cannot read a velocity from {text!r}")
        return cls(v, tuple(u))

    def factors(self) -> Tuple[Number, Number, bool]:
        """(cosh rho, sinh rho, exact)."""
        root = _exact_sqrt(1 - self.v * self.v)
        if root is not None:
            return 1 / root, self.v / root, True
        gamma = 1.0 / math.sqrt(1.0 - float(self.v) ** 2)
        return gamma, float(self.v) * gamma, False

    def unit_direction(self) -> Tuple[Tuple[Number, ...], bool]:
        norm2 = Fraction(sum(c * c for c in self.u))
        root = _exact_sqrt(norm2)
        if root is not None:
            return tuple(Fraction(c) / root for c in self.u), True
        n = math.sqrt(float(norm2))
        return tuple(c / n for c in self.u), False


def boost(coords: EventCoordinates, r: Rapidity) -> EventCoordinates:
    """t' = cosh(rho) t - sinh(rho) x.u; the spatial part along u is boosted alike."""
    ch, sh, exact_f = r.factors()
    unit, exact_u = r.unit_direction()
    t_new: Dict[int, Number] = {}
    x_new: Dict[int, Tuple[Number, ...]] = {}
    for e in coords.t:
        t, x = coords.t[e], coords.x[e]
        if len(x) != len(unit):
            raise InputError(f"Event {e} has {len(x)} spatial coordinates, direction has {len(unit)}")
        par = sum(a * b for a, b in zip(x, unit))
        t_new[e] = ch * t - sh * par
        shift = (ch - 1) * par - sh * t
        x_new[e] = tuple(a + shift * b for a, b in zip(x, unit))
    exact = coords.exact and exact_f and exact_u
    if not exact:
        logger.info(f"Boost v={r.v} has no rational cosh/sinh; using floating point")
    return EventCoordinates(t_new, x_new, exact=exact)


@dataclass(frozen=True)
class Refoliation:
    accepted: bool
    foliation: Optional[Foliation]
    order: Tuple[int, ...]
    violation: Optional[Tuple[int, int]] = None

    def to_dict(self) -> dict:
        return {
            "accepted": self.accepted,
            "slices": [list(s) for s in self.foliation.slices] if self.foliation else None,
            "order": list(self.order),
            "violation": list(self.violation) if self.violation else None,
        }


def _group_times(times: Dict[int, Number], exact: bool, tol: float) -> Dict[int, int]:
    if exact:
        levels = sorted(set(times.values()))
        rank = {v: i for i, v in enumerate(levels)}
        return {e: rank[v] for e, v in times.items()}
    values = sorted(float(v) for v in times.values())
    gaps = [b - a for a, b in zip(values, values[1:]) if b - a > tol]
    gap = min(gaps) if gaps else 1.0
    lo = values[0] if values else 0.0
    bins = {e: math.floor((float(v) - lo) / gap + tol) for e, v in times.items()}
    levels = sorted(set(bins.values()))
    rank = {b: i for i, b in enumerate(levels)}
    return {e: rank[b] for e, b in bins.items()}


def refoliate(cg: CausalGraph, boosted: EventCoordinates, tolerance: Optional[float] = None) -> Refoliation:
    """Slice by boosted time; accept iff every causal edge moves to a strictly later slice."""
    if set(boosted.t) != set(cg.events):
        raise InputError("Boosted coordinates must cover every event of the causal graph")
    if tolerance is None:
        from src.config import get_settings

        tolerance = get_settings().boost.tie_tolerance
    level = _group_times(boosted.t, boosted.exact, tolerance)
    n_levels = max(level.values(), default=-1) + 1
    slices = tuple(tuple(sorted(e for e in cg.events if level[e] == k)) for k in range(n_levels))
    foliation = Foliation(slices)
    order = tuple(foliation.update_order())
    violation = check_foliation(cg, foliation)
    if violation is not None:
        logger.warning(f"Boosted slicing rejected: causal edge {violation} is not future-directed")
        return Refoliation(False, None, order, violation)
    return Refoliation(True, foliation, order, None)
