# ============================================================
# src/causal/graph.py
# Causal graphs from evolution traces, light-cone sets and
# discrete Cauchy developments
# ============================================================
from __future__ import annotations

import logging
from dataclasses import dataclass
from functools import cached_property
from typing import Dict, FrozenSet, Iterable, Tuple

import networkx as nx

from src.errors import ConflictError, InputError, ValidationError
from src.hypercore import CanonicalKey, digraph_canonical_form
from src.rewrite import EvolutionTrace, replay_events, system_for_trace

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class CausalGraph:
    events: Tuple[int, ...]
    edges: FrozenSet[Tuple[int, int]]

    def __post_init__(self):
        known = set(self.events)
        for a, b in self.edges:
            if a not in known or b not in known:
                raise InputError(f"Causal edge ({a}, {b}) references an unknown event")

    @classmethod
    def from_edges(cls, events: Iterable[int], edges: Iterable[Tuple[int, int]]) -> "CausalGraph":
        return cls(tuple(sorted(set(events))), frozenset((int(a), int(b)) for a, b in edges))

    @cached_property
    def digraph(self) -> nx.DiGraph:
        g = nx.DiGraph()
        g.add_nodes_from(self.events)
        g.add_edges_from(self.edges)
        return g

    @property
    def is_acyclic(self) -> bool:
        return nx.is_directed_acyclic_graph(self.digraph)

    def require(self, x: int) -> None:
        if x not in self.digraph:
            raise InputError(f"Unknown event {x}", event=x)

    def sources(self) -> Tuple[int, ...]:
        return tuple(v for v in self.events if self.digraph.in_degree(v) == 0)

    def sinks(self) -> Tuple[int, ...]:
        return tuple(v for v in self.events if self.digraph.out_degree(v) == 0)

    def canonical_key(self) -> CanonicalKey:
        return digraph_canonical_form(self.events, self.edges)

    def to_dict(self) -> dict:
        return {"events": list(self.events), "edges": [list(e) for e in sorted(self.edges)]}


def validate_trace(trace: EvolutionTrace) -> None:
    """Atom bookkeeping plus a full replay; raises ValidationError on any inconsistency."""
    system = system_for_trace(trace)
    live = set(system.atoms(system.initial(trace.initial)))
    seen = set(live)
    for e in trace.events:
        missing = set(e.consumed) - live
        if missing:
            raise ValidationError(f"Event {e.id} consumes atoms {sorted(missing)} that are not live",
                                  event=e.id)
        reborn = set(e.created) & seen
        if reborn:
            raise ValidationError(f"Event {e.id} re-creates atoms {sorted(reborn)}", event=e.id)
        live -= set(e.consumed)
        live |= set(e.created)
        seen |= set(e.created)
    try:
        final = replay_events(system, trace.initial, trace.events)
    except ConflictError as err:
        raise ValidationError(f"Trace does not replay: {err.message}")
    expected = system.initial(trace.final)
    if system.label(final) != system.label(expected) or system.atoms(final) != system.atoms(expected):
        raise ValidationError("Replaying the trace does not reproduce its final state")


def build_causal_graph(trace: EvolutionTrace, transitive_reduce: bool = False) -> CausalGraph:
    """B depends on A iff B consumes an atom created by A."""
    validate_trace(trace)
    creator: Dict[int, int] = {}
    edges = set()
    for e in trace.events:
        for atom in e.consumed:
            if atom in creator:
                edges.add((creator[atom], e.id))
        for atom in e.created:
            creator[atom] = e.id
    cg = CausalGraph.from_edges((e.id for e in trace.events), edges)
    if transitive_reduce and cg.edges:
        reduced = nx.transitive_reduction(cg.digraph)
        cg = CausalGraph.from_edges(cg.events, reduced.edges())
    logger.info(f"Causal graph: {len(cg.events)} events, {len(cg.edges)} edges")
    return cg


# ============================================================
# Light cones
# ============================================================
@dataclass(frozen=True)
class LightCone:
    i_plus: FrozenSet[int]
    i_minus: FrozenSet[int]
    j_plus: FrozenSet[int]
    j_minus: FrozenSet[int]


def futures_pasts(cg: CausalGraph, x: int) -> LightCone:
    cg.require(x)
    fut = frozenset(nx.descendants(cg.digraph, x))
    past = frozenset(nx.ancestors(cg.digraph, x))
    return LightCone(fut, past, fut | {x}, past | {x})


def futures_pasts_of_set(cg: CausalGraph, s: Iterable[int]) -> LightCone:
    ip, im, jp, jm = set(), set(), set(), set()
    for x in s:
        cone = futures_pasts(cg, x)
        ip |= cone.i_plus
        im |= cone.i_minus
        jp |= cone.j_plus
        jm |= cone.j_minus
    return LightCone(frozenset(ip), frozenset(im), frozenset(jp), frozenset(jm))


def chronologically_precedes(cg: CausalGraph, x: int, y: int) -> bool:
    """x << y: a causal path of at least one edge leads from x to y."""
    cg.require(y)
    return y in futures_pasts(cg, x).i_plus


def causally_precedes(cg: CausalGraph, x: int, y: int) -> bool:
    return x == y or chronologically_precedes(cg, x, y)


def is_achronal(cg: CausalGraph, s: Iterable[int]) -> bool:
    s = set(s)
    for x in s:
        cg.require(x)
    return not (futures_pasts_of_set(cg, s).i_plus & s)


@dataclass(frozen=True)
class CauchyDevelopment:
    plus: FrozenSet[int]
    minus: FrozenSet[int]

    @property
    def total(self) -> FrozenSet[int]:
        return self.plus | self.minus


def _covered(cg: CausalGraph, s: set, order, parents) -> FrozenSet[int]:
    covered = set()
    for x in order:
        ps = parents(x)
        if x in s or (ps and all(p in covered for p in ps)):
            covered.add(x)
    return frozenset(covered)


def cauchy_development(cg: CausalGraph, s: Iterable[int]) -> CauchyDevelopment:
    """D+(S): events whose every maximal past-directed path meets S; D-(S) dually."""
    s = set(s)
    for x in s:
        cg.require(x)
    if not cg.is_acyclic:
        raise ValidationError("Cauchy developments need an acyclic causal graph")
    g = cg.digraph
    order = list(nx.lexicographical_topological_sort(g))
    plus = _covered(cg, s, order, lambda v: list(g.predecessors(v)))
    minus = _covered(cg, s, list(reversed(order)), lambda v: list(g.successors(v)))
    return CauchyDevelopment(plus, minus)


def is_cauchy_surface(cg: CausalGraph, s: Iterable[int]) -> bool:
    s = set(s)
    if not is_achronal(cg, s):
        return False
    return cauchy_development(cg, s).total == frozenset(cg.events)
