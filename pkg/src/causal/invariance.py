# ============================================================
# src/causal/invariance.py
# Causal-invariance testing by enumeration of event histories
# ============================================================
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Any, Dict, FrozenSet, List, Optional, Sequence, Tuple

from src.errors import BudgetExceeded, InputError
from src.hypercore import CanonicalKey, digraph_canonical_form
from src.multiway import Verdict
from src.rewrite import Event, EvolutionTrace, System

logger = logging.getLogger(__name__)

# An event term names an event by its rule and the atoms it consumes; an atom
# is ("p", i) for position i of the state the recursion started from, or
# ("e", term, k) for the k-th atom created by an earlier event.
Ref = tuple
Term = Tuple[int, Tuple[Ref, ...]]
Step = Tuple[int, Tuple[int, ...]]  # (rule index, consumed atom positions)


@dataclass(frozen=True)
class InvarianceReport:
    holds: Verdict
    depth: int
    classes: int
    histories: int
    witness: Optional[Tuple[Tuple[Step, ...], Tuple[Step, ...]]] = None
    note: str = ""

    def to_dict(self) -> dict:
        return {
            "holds": self.holds.value,
            "depth": self.depth,
            "classes": self.classes,
            "histories": self.histories,
            "witness": [[[ri, list(pos)] for ri, pos in order] for order in self.witness]
            if self.witness else None,
            "note": self.note,
        }


def _substitute(term: Term, mapping: Dict[int, Ref], memo: Dict[int, Term]) -> Term:
    cached = memo.get(id(term))
    if cached is not None:
        return cached
    ri, refs = term
    out = []
    for ref in refs:
        if ref[0] == "p":
            out.append(mapping[ref[1]])
        else:
            out.append(("e", _substitute(ref[1], mapping, memo), ref[2]))
    new = (ri, tuple(out))
    memo[id(term)] = new
    return new


class _HistoryEnumerator:
    def __init__(self, system: System, depth: int, budget: int):
        self.system = system
        self.depth = depth
        self.budget = budget
        self.produced = 0
        self.memo: Dict[tuple, Dict[FrozenSet[Term], Tuple[Step, ...]]] = {}

    def run(self, state: Any, gens: Tuple[int, ...]) -> Dict[FrozenSet[Term], Tuple[Step, ...]]:
        key = (self.system.exact_key(state), gens)
        hit = self.memo.get(key)
        if hit is not None:
            return hit
        atoms = self.system.atoms(state)
        position = {a: i for i, a in enumerate(atoms)}
        result: Dict[FrozenSet[Term], Tuple[Step, ...]] = {}
        for site in self.system.sites(state):
            consumed = self.system.consumed(site)
            pos = tuple(position[a] for a in consumed)
            gen = 1 + max(gens[i] for i in pos)
            if gen > self.depth:
                continue
            term: Term = (site[0], tuple(("p", i) for i in pos))
            child, event = self.system.apply(state, site)
            child_atoms = self.system.atoms(child)
            created = {a: k for k, a in enumerate(event.created)}
            mapping: Dict[int, Ref] = {}
            child_gens = []
            for j, a in enumerate(child_atoms):
                if a in created:
                    mapping[j] = ("e", term, created[a])
                    child_gens.append(gen)
                else:
                    mapping[j] = ("p", position[a])
                    child_gens.append(gens[position[a]])
            memo: Dict[int, Term] = {}
            for terms, order in self.run(child, tuple(child_gens)).items():
                lifted = frozenset([term] + [_substitute(t, mapping, memo) for t in terms])
                if lifted not in result:
                    result[lifted] = ((site[0], pos),) + order
                    self.produced += 1
                    if self.produced > self.budget:
                        raise BudgetExceeded(f"More than {self.budget} event histories to depth {self.depth}",
                                             budget=self.budget)
        if not result:
            result = {frozenset(): ()}
        self.memo[key] = result
        return result


def history_causal_key(terms: FrozenSet[Term]) -> CanonicalKey:
    """Canonical key of the causal graph induced by a set of event terms."""
    index = {t: i for i, t in enumerate(sorted(terms, key=repr))}
    arcs = set()
    for t in terms:
        for ref in t[1]:
            if ref[0] == "e":
                arcs.add((index[ref[1]], index[t]))
    return digraph_canonical_form(list(index.values()), arcs)


def causal_invariant(system: System, init: Any, depth: int, max_histories: Optional[int] = None) -> InvarianceReport:
    """Compare the causal graphs of every maximal event history up to generation `depth`."""
    if depth < 0:
        raise InputError(f"depth must be >= 0, got {depth}")
    if max_histories is None:
        from src.config import get_settings

        max_histories = get_settings().invariance.max_event_sets
    state = system.initial(init)
    gens = tuple(0 for _ in system.atoms(state))
    enum = _HistoryEnumerator(system, depth, max_histories)
    try:
        histories = enum.run(state, gens)
    except BudgetExceeded as err:
        logger.warning(f"Causal invariance undecided: {err.message}")
        return InvarianceReport(Verdict.UNKNOWN, depth, 0, enum.produced, None, err.message)

    classes: Dict[CanonicalKey, Tuple[Step, ...]] = {}
    for terms in sorted(histories, key=lambda s: histories[s]):
        classes.setdefault(history_causal_key(terms), histories[terms])
    logger.info(f"Causal invariance at depth {depth}: {len(histories)} histories, {len(classes)} graph classes")
    if len(classes) == 1:
        return InvarianceReport(Verdict.YES, depth, 1, len(histories))
    first, second = sorted(classes.values())[:2]
    return InvarianceReport(Verdict.NO, depth, len(classes), len(histories), (first, second))


def replay_order(system: System, init: Any, order: Sequence[Step]) -> EvolutionTrace:
    """Apply a positional update order from `init` and record the trace."""
    state = system.initial(init)
    initial = state
    events: List[Event] = []
    for step, (ri, pos) in enumerate(order):
        atoms = system.atoms(state)
        try:
            wanted = tuple(atoms[i] for i in pos)
        except IndexError:
            raise InputError(f"Step {step} refers to a position outside the state")
        site = next((s for s in system.sites(state) if s[0] == ri and tuple(system.consumed(s)) == wanted), None)
        if site is None:
            raise InputError(f"Step {step} (rule {ri} at {list(pos)}) does not apply")
        state, event = system.apply(state, site, event_id=len(events), step=step)
        events.append(event)
    return EvolutionTrace(initial=initial, events=tuple(events), final=state, scheme="replay",
                          steps_requested=len(order), kind=system.kind)
