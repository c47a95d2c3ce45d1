# ============================================================
# src/multiway.py
# Multiway exploration over canonical states, reachability,
# joinability and confluence checks
# ============================================================
from __future__ import annotations

import logging
from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from itertools import combinations
from typing import Any, Dict, FrozenSet, List, Optional, Set, Tuple, Union

import networkx as nx
from joblib import Parallel, delayed

from src.errors import InputError
from src.hypercore import CanonicalKey
from src.rewrite import StringSystem, System
from src.utils import dump_json

logger = logging.getLogger(__name__)

Transition = Tuple[CanonicalKey, CanonicalKey, str]


class Verdict(str, Enum):
    YES = "yes"
    NO = "no"
    UNKNOWN = "unknown"


class ConfluenceVariant(str, Enum):
    LOCAL = "local"
    SEMI = "semi"
    STRONG = "strong"
    DIAMOND = "diamond"
    GLOBAL = "global"


def transition_label(system: System, state: Any, site) -> str:
    """Rule text, plus the match position for strings."""
    rule = str(system.rules[site[0]])
    if isinstance(system, StringSystem):
        return f"{rule}@{site[1][0]}"
    return rule


def _successors(system: System, state: Any) -> List[Tuple[str, CanonicalKey, Any]]:
    out = []
    for site in system.sites(state):
        new, _ = system.apply(state, site)
        out.append((transition_label(system, state, site), system.key(new), new))
    return out


def _representative_order(system: System, payload: Any) -> Tuple[str, str]:
    """Merged states keep the payload with the smallest JSON form, then the smallest atom ids."""
    return dump_json(system.to_json(payload), indent=None), repr(system.atoms(payload))


@dataclass
class MultiwayGraph:
    system: System
    root: CanonicalKey
    states: Dict[CanonicalKey, Any]
    transitions: Set[Transition]
    depth: Dict[CanonicalKey, int]
    horizon: int
    expanded: FrozenSet[CanonicalKey] = frozenset()
    truncated: bool = False

    @cached_property
    def digraph(self) -> nx.DiGraph:
        g = nx.DiGraph()
        g.add_nodes_from(self.states)
        g.add_edges_from((a, b) for a, b, _ in self.transitions)
        return g

    def resolve(self, x: Union[CanonicalKey, str, Any]) -> CanonicalKey:
        """Accept a key, a literal string state, or a state payload."""
        if isinstance(x, bytes):
            key = x
        else:
            key = self.system.key(self.system.initial(x))
        if key not in self.states:
            raise InputError(f"State {self.node_label(key)} is not in the multiway graph")
        return key

    def node_label(self, key: CanonicalKey) -> str:
        if isinstance(self.system, StringSystem):
            return key.decode("utf-8")
        return key.hex()[:12]

    def successors(self, key: CanonicalKey) -> List[CanonicalKey]:
        return sorted(self.digraph.successors(key))

    def to_dict(self) -> dict:
        return {
            "root": self.node_label(self.root),
            "horizon": self.horizon,
            "truncated": self.truncated,
            "states": [
                {"id": self.node_label(k), "depth": self.depth[k], "state": self.system.to_json(self.states[k])}
                for k in sorted(self.states)
            ],
            "transitions": sorted(
                [self.node_label(a), self.node_label(b), lbl] for a, b, lbl in self.transitions
            ),
        }


def explore(system: System, init: Any, depth: int, max_states: Optional[int] = None,
            n_jobs: Optional[int] = None) -> MultiwayGraph:
    """Breadth-first closure of single-event successors, merging states by canonical key."""
    if depth < 0:
        raise InputError(f"depth must be >= 0, got {depth}")
    from src.config import get_settings

    settings = get_settings()
    max_states = max_states or settings.multiway.max_states
    n_jobs = n_jobs or settings.threads

    state = system.initial(init)
    root = system.key(state)
    states: Dict[CanonicalKey, Any] = {root: state}
    depth_of: Dict[CanonicalKey, int] = {root: 0}
    transitions: Set[Transition] = set()
    expanded: Set[CanonicalKey] = set()
    frontier = [root]
    truncated = False

    for gen in range(depth):
        if not frontier:
            break
        frontier.sort()
        if n_jobs > 1 and len(frontier) > 1:
            batches = Parallel(n_jobs=n_jobs, backend="threading")(
                delayed(_successors)(system, states[k]) for k in frontier
            )
        else:
            batches = [_successors(system, states[k]) for k in frontier]
        candidates: Dict[CanonicalKey, Any] = {}
        arcs: List[Transition] = []
        for key, succ in zip(frontier, batches):
            expanded.add(key)
            for label, child, payload in succ:
                arcs.append((key, child, label))
                if child in states:
                    continue
                best = candidates.get(child)
                if best is None or _representative_order(system, payload) < _representative_order(system, best):
                    candidates[child] = payload
        nxt: List[CanonicalKey] = []
        for child in sorted(candidates):
            if len(states) >= max_states:
                truncated = True
                break
            states[child] = candidates[child]
            depth_of[child] = gen + 1
            nxt.append(child)
        transitions.update(arc for arc in arcs if arc[1] in states)
        frontier = nxt
        logger.debug(f"Generation {gen + 1}: {len(states)} states, {len(transitions)} transitions")
        if truncated:
            logger.warning(f"Multiway exploration truncated at {max_states} states (generation {gen + 1})")
            break

    logger.info(f"Explored {len(states)} states to depth {depth}")
    return MultiwayGraph(system, root, states, transitions, depth_of, depth, frozenset(expanded), truncated)


def reachable(mw: MultiwayGraph, x, y) -> bool:
    """x ->* y inside the explored graph (reflexive)."""
    a, b = mw.resolve(x), mw.resolve(y)
    return a == b or nx.has_path(mw.digraph, a, b)


def joinable(mw: MultiwayGraph, x, y) -> Optional[CanonicalKey]:
    """A common descendant of minimal combined distance (ties by key), or None."""
    a, b = mw.resolve(x), mw.resolve(y)
    da = nx.single_source_shortest_path_length(mw.digraph, a)
    db = nx.single_source_shortest_path_length(mw.digraph, b)
    common = set(da) & set(db)
    if not common:
        return None
    return min(common, key=lambda z: (da[z] + db[z], z))


def terminal_states(mw: MultiwayGraph) -> List[CanonicalKey]:
    """Expanded states with no successor."""
    return sorted(k for k in mw.expanded if mw.digraph.out_degree(k) == 0)


def normal_forms(mw: MultiwayGraph, x=None) -> List[CanonicalKey]:
    """Terminal states reachable from x (default: the root)."""
    start = mw.root if x is None else mw.resolve(x)
    reach = nx.descendants(mw.digraph, start) | {start}
    return sorted(k for k in terminal_states(mw) if k in reach)


# ============================================================
# Confluence
# ============================================================
@dataclass(frozen=True)
class ConfluenceReport:
    variant: ConfluenceVariant
    holds: Verdict
    witness: Optional[Tuple[str, str]] = None
    divergence: Optional[str] = None
    pairs_checked: int = 0
    horizon: int = 0

    def to_dict(self) -> dict:
        return {
            "variant": self.variant.value,
            "holds": self.holds.value,
            "witness": list(self.witness) if self.witness else None,
            "divergence": self.divergence,
            "pairs_checked": self.pairs_checked,
            "horizon": self.horizon,
        }


@dataclass
class _JoinSearch:
    """Forward closures computed with the system, past the explored horizon if needed."""

    mw: MultiwayGraph
    budget: int
    payloads: Dict[CanonicalKey, Any] = field(default_factory=dict)
    succ_cache: Dict[CanonicalKey, FrozenSet[CanonicalKey]] = field(default_factory=dict)
    closure_cache: Dict[CanonicalKey, Tuple[FrozenSet[CanonicalKey], bool]] = field(default_factory=dict)

    def payload(self, key: CanonicalKey) -> Any:
        return self.mw.states.get(key, self.payloads.get(key))

    def step(self, key: CanonicalKey) -> FrozenSet[CanonicalKey]:
        if key not in self.succ_cache:
            out = set()
            for _, child, payload in _successors(self.mw.system, self.payload(key)):
                if child not in self.mw.states:
                    self.payloads.setdefault(child, payload)
                out.add(child)
            self.succ_cache[key] = frozenset(out)
        return self.succ_cache[key]

    def closure(self, key: CanonicalKey) -> Tuple[FrozenSet[CanonicalKey], bool]:
        """(descendants including key, complete?)."""
        if key in self.closure_cache:
            return self.closure_cache[key]
        seen = {key}
        queue = deque([key])
        complete = True
        while queue:
            cur = queue.popleft()
            for child in self.step(cur):
                if child in seen:
                    continue
                if len(seen) >= self.budget:
                    complete = False
                    queue.clear()
                    break
                seen.add(child)
                queue.append(child)
        result = (frozenset(seen), complete)
        self.closure_cache[key] = result
        return result

    def joins(self, b: CanonicalKey, c: CanonicalKey) -> Verdict:
        cb, ok_b = self.closure(b)
        cc, ok_c = self.closure(c)
        if cb & cc:
            return Verdict.YES
        return Verdict.NO if ok_b and ok_c else Verdict.UNKNOWN

    def strong(self, b: CanonicalKey, c: CanonicalKey) -> Verdict:
        cb, ok_b = self.closure(b)
        if cb & ({c} | self.step(c)):
            return Verdict.YES
        return Verdict.NO if ok_b else Verdict.UNKNOWN

    def diamond(self, b: CanonicalKey, c: CanonicalKey) -> Verdict:
        return Verdict.YES if self.step(b) & self.step(c) else Verdict.NO


def _pairs(mw: MultiwayGraph, a: CanonicalKey, variant: ConfluenceVariant):
    succ = mw.successors(a)
    if variant in (ConfluenceVariant.LOCAL, ConfluenceVariant.DIAMOND):
        yield from combinations(succ, 2)
    elif variant is ConfluenceVariant.STRONG:
        for b, c in combinations(succ, 2):
            yield b, c
            yield c, b
    else:
        desc = sorted(nx.descendants(mw.digraph, a) | {a})
        if variant is ConfluenceVariant.SEMI:
            for b in succ:
                for c in desc:
                    if b != c:
                        yield b, c
        else:
            yield from combinations(desc, 2)


def check_confluence(mw: MultiwayGraph, variant: Union[str, ConfluenceVariant],
                     join_budget: Optional[int] = None) -> ConfluenceReport:
    """Tristate check of one confluence variant over divergence points inside the horizon."""
    variant = ConfluenceVariant(variant)
    if join_budget is None:
        from src.config import get_settings

        join_budget = get_settings().multiway.join_state_budget
    search = _JoinSearch(mw, join_budget)
    test = {
        ConfluenceVariant.DIAMOND: search.diamond,
        ConfluenceVariant.STRONG: search.strong,
    }.get(variant, search.joins)

    checked: Set[Tuple[CanonicalKey, CanonicalKey]] = set()
    unknown = False
    for a in sorted(mw.expanded):
        for b, c in _pairs(mw, a, variant):
            pair = (b, c) if variant is ConfluenceVariant.STRONG else tuple(sorted((b, c)))
            if pair in checked:
                continue
            checked.add(pair)
            verdict = test(b, c)
            if verdict is Verdict.NO:
                report = ConfluenceReport(
                    variant, Verdict.NO, (mw.node_label(b), mw.node_label(c)), mw.node_label(a),
                    len(checked), mw.horizon,
                )
                logger.info(f"{variant.value} confluence fails at {report.divergence}: {report.witness}")
                return report
            unknown = unknown or verdict is Verdict.UNKNOWN
    holds = Verdict.UNKNOWN if unknown or mw.truncated else Verdict.YES
    if holds is Verdict.UNKNOWN:
        logger.warning(f"{variant.value} confluence undecided at horizon {mw.horizon}")
    return ConfluenceReport(variant, holds, None, None, len(checked), mw.horizon)


def check_all_variants(mw: MultiwayGraph, join_budget: Optional[int] = None) -> Dict[str, ConfluenceReport]:
    return {v.value: check_confluence(mw, v, join_budget) for v in ConfluenceVariant}
