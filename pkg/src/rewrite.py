# ============================================================
# src/rewrite.py
# Rewrite rules, match enumeration, event application and
# seeded evolution (hypergraph and string systems)
# ============================================================
from __future__ import annotations

import logging
import random
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, FrozenSet, List, Sequence, Tuple, Union

from src.errors import ConflictError, InputError, ValidationError
from src.hypercore import CanonicalKey, Hypergraph, canonical_form

logger = logging.getLogger(__name__)

PatternVar = int


class UpdateScheme(str, Enum):
    SEQUENTIAL = "sequential"
    PARALLEL = "parallel"
    RANDOM = "random"


# ============================================================
# Hypergraph rules
# ============================================================
@dataclass(frozen=True)
class Pattern:
    edge_patterns: Tuple[Tuple[PatternVar, ...], ...]

    def variables(self) -> FrozenSet[PatternVar]:
        return frozenset(x for pat in self.edge_patterns for x in pat)

    def __len__(self) -> int:
        return len(self.edge_patterns)


@dataclass(frozen=True)
class Rule:
    lhs: Pattern
    rhs: Pattern
    names: Tuple[str, ...] = ()

    def __post_init__(self):
        if not self.lhs.edge_patterns:
            raise ValidationError("Rule left-hand side must not be empty")
        if any(len(p) == 0 for p in self.lhs.edge_patterns + self.rhs.edge_patterns):
            raise ValidationError("Hyperedge patterns must contain at least one variable")

    @property
    def fresh_vars(self) -> FrozenSet[PatternVar]:
        return self.rhs.variables() - self.lhs.variables()

    def var_name(self, x: PatternVar) -> str:
        return self.names[x] if x < len(self.names) else f"v{x}"

    def _format(self, pattern: Pattern) -> str:
        inner = ",".join("{" + ",".join(self.var_name(x) for x in pat) + "}" for pat in pattern.edge_patterns)
        return "{" + inner + "}"

    def __str__(self) -> str:
        return f"{self._format(self.lhs)} -> {self._format(self.rhs)}"


@dataclass(frozen=True)
class Match:
    binding: Tuple[Tuple[PatternVar, int], ...]
    edge_ids: Tuple[int, ...]

    @property
    def binding_map(self) -> Dict[PatternVar, int]:
        return dict(self.binding)

    def order_key(self) -> tuple:
        return (tuple(sorted(self.edge_ids)), self.edge_ids, self.binding)


@dataclass(frozen=True)
class Event:
    """One applied rewrite. `consumed`/`created` hold edge ids (or token ids for strings)."""

    id: int
    rule_index: int
    consumed: Tuple[int, ...]
    created: Tuple[int, ...]
    step: int
    site: Tuple[Any, ...] = ()
    produced: Tuple[Any, ...] = ()

    def __post_init__(self):
        if set(self.consumed) & set(self.created):
            raise ValidationError(f"Event {self.id} consumes and creates the same atom")

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "rule_index": self.rule_index,
            "step": self.step,
            "consumed": list(self.consumed),
            "created": list(self.created),
            "site": [list(s) if isinstance(s, tuple) else s for s in self.site],
            "produced": [list(p) if isinstance(p, tuple) else p for p in self.produced],
        }


def find_matches(h: Hypergraph, rule: Rule, injective_vars: bool = False) -> List[Match]:
    """All bindings of rule.lhs onto distinct hyperedges of h, in canonical order."""
    lhs = rule.lhs.edge_patterns
    by_arity: Dict[int, list] = {}
    incident: Dict[int, list] = {}
    for e in h.edges:
        by_arity.setdefault(len(e.vertices), []).append(e)
        for v in sorted(set(e.vertices)):
            incident.setdefault(v, []).append(e)

    found: List[Match] = []

    def extend(i: int, binding: Dict[int, int], used: FrozenSet[int], chosen: Tuple[int, ...]):
        if i == len(lhs):
            found.append(Match(tuple(sorted(binding.items())), chosen))
            return
        pat = lhs[i]
        bound = [binding[x] for x in pat if x in binding]
        candidates = incident.get(bound[0], []) if bound else by_arity.get(len(pat), [])
        for e in candidates:
            if e.id in used or len(e.vertices) != len(pat):
                continue
            new = dict(binding)
            ok = True
            for x, v in zip(pat, e.vertices):
                if x in new:
                    if new[x] != v:
                        ok = False
                        break
                else:
                    if injective_vars and v in new.values():
                        ok = False
                        break
                    new[x] = v
            if ok:
                extend(i + 1, new, used | {e.id}, chosen + (e.id,))

    extend(0, {}, frozenset(), ())
    found.sort(key=Match.order_key)
    return found


def apply_event(h: Hypergraph, rule: Rule, m: Match, *, event_id: int = 0,
                step: int = 0, rule_index: int = 0) -> Tuple[Hypergraph, Event]:
    """Consume the matched edges and instantiate rule.rhs, drawing fresh vertices from h's counter."""
    index = h.edge_index
    missing = [i for i in m.edge_ids if i not in index]
    if missing:
        raise ConflictError(f"Stale match: edges {missing} no longer present", edges=missing)
    binding = m.binding_map
    for pat, eid in zip(rule.lhs.edge_patterns, m.edge_ids):
        try:
            expected = tuple(binding[x] for x in pat)
        except KeyError:
            raise ConflictError("Match binding does not cover the rule's left-hand side")
        if index[eid].vertices != expected:
            raise ConflictError(f"Edge {eid} does not instantiate pattern {pat}", edge=eid)

    full = dict(binding)
    fresh = sorted(rule.fresh_vars)
    for k, x in enumerate(fresh):
        full[x] = h.next_vertex + k
    created = [tuple(full[x] for x in pat) for pat in rule.rhs.edge_patterns]
    new_h, new_ids = h.replace(m.edge_ids, created, creator_event=event_id,
                               next_vertex=h.next_vertex + len(fresh))
    event = Event(
        id=event_id,
        rule_index=rule_index,
        consumed=tuple(m.edge_ids),
        created=new_ids,
        step=step,
        site=m.binding,
        produced=tuple(created),
    )
    return new_h, event


# ============================================================
# String rules
# ============================================================
@dataclass(frozen=True)
class StringRule:
    lhs: str
    rhs: str

    def __post_init__(self):
        if not self.lhs:
            raise ValidationError("String rule left-hand side must not be empty")

    def __str__(self) -> str:
        return f"{self.lhs} -> {self.rhs}"


@dataclass(frozen=True)
class StringState:
    """A string whose characters carry token ids, so events can name what they consume."""

    text: str
    tokens: Tuple[int, ...]
    next_token: int

    def __post_init__(self):
        if len(self.text) != len(self.tokens):
            raise ValidationError("StringState text and tokens differ in length")

    @classmethod
    def from_text(cls, text: str) -> "StringState":
        return cls(text, tuple(range(len(text))), len(text))

    def __str__(self) -> str:
        return self.text


def string_matches(s: Union[str, StringState],
                   rules: Union[StringRule, Sequence[StringRule]]) -> List[Tuple[int, StringRule]]:
    """Every (position, rule) occurrence of a rule's lhs in s, ascending by position then rule order."""
    text = s.text if isinstance(s, StringState) else s
    rule_list = [rules] if isinstance(rules, StringRule) else list(rules)
    hits = []
    for ri, rule in enumerate(rule_list):
        start = text.find(rule.lhs)
        while start != -1:
            hits.append((start, ri, rule))
            start = text.find(rule.lhs, start + 1)
    hits.sort(key=lambda t: (t[0], t[1]))
    return [(pos, rule) for pos, _, rule in hits]


# ============================================================
# Systems: a uniform view of hypergraph and string rewriting
# ============================================================
Site = Tuple[int, Any]  # (rule_index, match or (position, token ids))


class HypergraphSystem:
    kind = "hypergraph"

    def __init__(self, rules: Sequence[Rule], injective_vars: bool = False):
        self.rules = tuple(rules)
        self.injective_vars = injective_vars

    def initial(self, init: Union[Hypergraph, Sequence[Sequence[int]]]) -> Hypergraph:
        return init if isinstance(init, Hypergraph) else Hypergraph.from_edges(init)

    def sites(self, state: Hypergraph) -> List[Site]:
        out = []
        for ri, rule in enumerate(self.rules):
            out.extend((ri, m) for m in find_matches(state, rule, self.injective_vars))
        out.sort(key=lambda s: (s[1].order_key()[:2], s[0], s[1].binding))
        return out

    def consumed(self, site: Site) -> Tuple[int, ...]:
        return site[1].edge_ids

    def apply(self, state: Hypergraph, site: Site, event_id: int = 0, step: int = 0):
        ri, m = site
        return apply_event(state, self.rules[ri], m, event_id=event_id, step=step, rule_index=ri)

    def replay(self, state: Hypergraph, event: Event) -> Hypergraph:
        try:
            return state.replace_with_ids(event.consumed, list(zip(event.created, event.produced)),
                                          creator_event=event.id)
        except InputError as e:
            raise ConflictError(f"Event {event.id} cannot be replayed: {e.message}", event=event.id)

    def key(self, state: Hypergraph) -> CanonicalKey:
        return canonical_form(state)

    def exact_key(self, state: Hypergraph) -> tuple:
        return (tuple(e.vertices for e in state.edges), state.next_vertex)

    def atoms(self, state: Hypergraph) -> Tuple[int, ...]:
        return tuple(e.id for e in state.edges)

    def descriptor(self, state: Hypergraph, site: Site) -> Tuple[str, Tuple[int, ...]]:
        return (str(self.rules[site[0]]), tuple(site[1].edge_ids))

    def label(self, state: Hypergraph) -> str:
        return "{" + ",".join("{" + ",".join(map(str, e.vertices)) + "}" for e in state.edges) + "}"

    def to_json(self, state: Hypergraph) -> Any:
        return state.to_json_obj()


class StringSystem:
    kind = "string"

    def __init__(self, rules: Sequence[StringRule]):
        self.rules = tuple(rules)

    def initial(self, init: Union[str, StringState]) -> StringState:
        return init if isinstance(init, StringState) else StringState.from_text(init)

    def sites(self, state: StringState) -> List[Site]:
        out = []
        for ri, rule in enumerate(self.rules):
            n = len(rule.lhs)
            start = state.text.find(rule.lhs)
            while start != -1:
                out.append((ri, (start, state.tokens[start:start + n])))
                start = state.text.find(rule.lhs, start + 1)
        out.sort(key=lambda s: (s[1][0], s[0]))
        return out

    def consumed(self, site: Site) -> Tuple[int, ...]:
        return site[1][1]

    def _splice(self, state: StringState, consumed: Tuple[int, ...], created: Tuple[int, ...],
                chars: str, next_token: int) -> StringState:
        try:
            pos = state.tokens.index(consumed[0])
        except ValueError:
            raise ConflictError(f"Token {consumed[0]} no longer present", token=consumed[0])
        if state.tokens[pos:pos + len(consumed)] != consumed:
            raise ConflictError(f"Tokens {list(consumed)} are not contiguous", tokens=list(consumed))
        return StringState(
            state.text[:pos] + chars + state.text[pos + len(consumed):],
            state.tokens[:pos] + created + state.tokens[pos + len(consumed):],
            next_token,
        )

    def apply(self, state: StringState, site: Site, event_id: int = 0, step: int = 0):
        ri, (_, consumed) = site
        rule = self.rules[ri]
        pos = state.tokens.index(consumed[0]) if consumed[0] in state.tokens else -1
        if pos < 0 or state.text[pos:pos + len(rule.lhs)] != rule.lhs:
            raise ConflictError(f"Stale string match for {rule}", rule=str(rule))
        created = tuple(range(state.next_token, state.next_token + len(rule.rhs)))
        new = self._splice(state, consumed, created, rule.rhs, state.next_token + len(created))
        event = Event(
            id=event_id,
            rule_index=ri,
            consumed=consumed,
            created=created,
            step=step,
            site=(pos,),
            produced=tuple(rule.rhs),
        )
        return new, event

    def replay(self, state: StringState, event: Event) -> StringState:
        if not event.consumed:
            raise ConflictError(f"Event {event.id} consumes nothing")
        fresh = set(event.created) & set(state.tokens)
        if fresh:
            raise ConflictError(f"Event {event.id} re-creates live tokens {sorted(fresh)}")
        nxt = max([state.next_token] + [t + 1 for t in event.created])
        return self._splice(state, event.consumed, event.created, "".join(event.produced), nxt)

    def key(self, state: StringState) -> CanonicalKey:
        return state.text.encode("utf-8")

    def exact_key(self, state: StringState) -> str:
        return state.text

    def atoms(self, state: StringState) -> Tuple[int, ...]:
        return state.tokens

    def descriptor(self, state: StringState, site: Site) -> Tuple[str, Tuple[int, ...]]:
        return (str(self.rules[site[0]]), (site[1][0],))

    def label(self, state: StringState) -> str:
        return state.text

    def to_json(self, state: StringState) -> Any:
        return state.text


System = Union[HypergraphSystem, StringSystem]


def make_system(rules: Sequence[Union[Rule, StringRule]], injective_vars: bool = False) -> System:
    rules = list(rules)
    if not rules:
        raise InputError("At least one rule is required")
    if all(isinstance(r, StringRule) for r in rules):
        return StringSystem(rules)
    if all(isinstance(r, Rule) for r in rules):
        return HypergraphSystem(rules, injective_vars=injective_vars)
    raise InputError("Cannot mix string and hypergraph rules in one system")


# ============================================================
# Evolution
# ============================================================
@dataclass(frozen=True)
class EvolutionTrace:
    initial: Any
    events: Tuple[Event, ...]
    final: Any
    scheme: str = UpdateScheme.SEQUENTIAL.value
    seed: int = 0
    steps_requested: int = 0
    halted: bool = False
    kind: str = field(default="hypergraph")

    def to_dict(self) -> dict:
        def enc(state):
            return state.to_json_obj() if isinstance(state, Hypergraph) else state.text

        return {
            "kind": self.kind,
            "scheme": self.scheme,
            "seed": self.seed,
            "steps_requested": self.steps_requested,
            "halted": self.halted,
            "initial": enc(self.initial),
            "final": enc(self.final),
            "events": [e.to_dict() for e in self.events],
        }


def _choose_parallel(system: System, sites: List[Site]) -> List[Site]:
    taken: set = set()
    chosen = []
    for site in sites:
        atoms = set(system.consumed(site))
        if atoms & taken:
            continue
        taken |= atoms
        chosen.append(site)
    return chosen


def run_system(system: System, init: Any, scheme: Union[str, UpdateScheme] = UpdateScheme.SEQUENTIAL,
               steps: int = 1, seed: int = 0) -> EvolutionTrace:
    if steps < 0:
        raise InputError(f"steps must be >= 0, got {steps}")
    scheme = UpdateScheme(scheme)
    rng = random.Random(seed)
    state = system.initial(init)
    initial = state
    events: List[Event] = []
    halted = False
    for step in range(steps):
        sites = system.sites(state)
        if not sites:
            halted = True
            logger.info(f"Evolution halted at step {step}: no matches remain")
            break
        if scheme is UpdateScheme.SEQUENTIAL:
            chosen = [sites[0]]
        elif scheme is UpdateScheme.RANDOM:
            chosen = [sites[rng.randrange(len(sites))]]
        else:
            chosen = _choose_parallel(system, sites)
        for site in chosen:
            state, event = system.apply(state, site, event_id=len(events), step=step)
            events.append(event)
    logger.debug(f"Evolved {len(events)} events under scheme {scheme.value}")
    return EvolutionTrace(
        initial=initial,
        events=tuple(events),
        final=state,
        scheme=scheme.value,
        seed=seed,
        steps_requested=steps,
        halted=halted,
        kind=system.kind,
    )


def evolve(h: Hypergraph, rules: Sequence[Rule], scheme: Union[str, UpdateScheme] = UpdateScheme.SEQUENTIAL,
           steps: int = 1, seed: int = 0, injective_vars: bool = False) -> EvolutionTrace:
    """Deterministic evolution of a hypergraph given (inputs, seed)."""
    return run_system(HypergraphSystem(rules, injective_vars), h, scheme, steps, seed)


def string_evolve(init: Union[str, StringState], rules: Sequence[StringRule],
                  scheme: Union[str, UpdateScheme] = UpdateScheme.SEQUENTIAL,
                  steps: int = 1, seed: int = 0) -> EvolutionTrace:
    return run_system(StringSystem(rules), init, scheme, steps, seed)


def replay_events(system: System, initial: Any, events: Sequence[Event]) -> Any:
    """Re-apply recorded events, in the given order, from `initial`."""
    state = system.initial(initial)
    for event in events:
        state = system.replay(state, event)
    return state


def system_for_trace(trace: EvolutionTrace) -> System:
    """A replay-only system matching the trace's state kind."""
    return StringSystem(()) if trace.kind == "string" else HypergraphSystem(())


# ============================================================
# Strings as directed path hypergraphs
# ============================================================
def _char_arity(c: str) -> int:
    if not ("A" <= c <= "Z"):
        raise InputError(f"Only uppercase letters can be encoded, got {c!r}")
    return ord(c) - ord("A") + 2


def _encode_chars(chars: str, vertices: Sequence[int]) -> List[Tuple[int, ...]]:
    return [(vertices[i], vertices[i + 1]) + (vertices[i + 1],) * (_char_arity(c) - 2)
            for i, c in enumerate(chars)]


def string_to_path_hypergraph(s: str) -> Hypergraph:
    """Character i becomes an edge (i, i+1) padded with i+1 repeated by its letter index."""
    return Hypergraph.from_edges(_encode_chars(s, list(range(len(s) + 1))))


def path_hypergraph_to_string(h: Hypergraph) -> str:
    if not h.edges:
        return ""
    by_start = {e.vertices[0]: e for e in h.edges}
    ends = {e.vertices[1] for e in h.edges}
    starts = [v for v in by_start if v not in ends]
    if len(starts) != 1 or len(by_start) != len(h.edges):
        raise ValidationError("Hypergraph is not a directed path encoding of a string")
    out, v = [], starts[0]
    while v in by_start:
        e = by_start[v]
        out.append(chr(ord("A") + len(e.vertices) - 2))
        v = e.vertices[1]
    if len(out) != len(h.edges):
        raise ValidationError("Hypergraph is not a single directed path")
    return "".join(out)


def encode_string_rule(rule: StringRule) -> Rule:
    """Hypergraph rule acting on path encodings exactly as `rule` acts on strings."""
    if not rule.rhs:
        raise InputError("Deleting string rules have no path-hypergraph encoding")
    m = len(rule.lhs)
    lhs_vertices = list(range(m + 1))
    rhs_vertices = [0] + [m + k for k in range(1, len(rule.rhs))] + [m]
    return Rule(
        Pattern(tuple(_encode_chars(rule.lhs, lhs_vertices))),
        Pattern(tuple(_encode_chars(rule.rhs, rhs_vertices))),
    )


__all__ = [
    "PatternVar",
    "UpdateScheme",
    "Pattern",
    "Rule",
    "Match",
    "Event",
    "EvolutionTrace",
    "StringRule",
    "StringState",
    "HypergraphSystem",
    "StringSystem",
    "System",
    "make_system",
    "find_matches",
    "apply_event",
    "string_matches",
    "run_system",
    "evolve",
    "string_evolve",
    "replay_events",
    "system_for_trace",
    "string_to_path_hypergraph",
    "path_hypergraph_to_string",
    "encode_string_rule",
]
