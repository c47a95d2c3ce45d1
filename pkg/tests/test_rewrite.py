import random
from collections import Counter
from itertools import product

import pytest

from src.errors import ConflictError, InputError, ValidationError
from src.hypercore import Hypergraph
from src.rewrite import (
    HypergraphSystem,
    Pattern,
    Rule,
    StringRule,
    StringSystem,
    apply_event,
    encode_string_rule,
    evolve,
    find_matches,
    make_system,
    path_hypergraph_to_string,
    replay_events,
    string_evolve,
    string_matches,
    string_to_path_hypergraph,
)

# {{x,y},{x,z}} -> {{x,z},{x,w},{y,w},{z,w}}
GROWTH = Rule(Pattern(((0, 1), (0, 2))), Pattern(((0, 2), (0, 3), (1, 3), (2, 3))), ("x", "y", "z", "w"))
# {{x,y}} -> {{x,y},{y,z}}
EXTEND = Rule(Pattern(((0, 1),)), Pattern(((0, 1), (1, 2))), ("x", "y", "z"))


def test_rule_fresh_vars_and_text():
    """rhs-only variables are fresh and the rule prints in brace notation."""
    assert GROWTH.fresh_vars == frozenset({3})
    assert str(GROWTH) == "{{x,y},{x,z}} -> {{x,z},{x,w},{y,w},{z,w}}"


def test_empty_lhs_rejected():
    """Rules need at least one lhs pattern."""
    with pytest.raises(ValidationError):
        Rule(Pattern(()), Pattern(((0,),)))
    with pytest.raises(ValidationError):
        StringRule("", "A")


def test_find_matches_uses_distinct_edges():
    """Two lhs patterns never bind the same edge."""
    h = Hypergraph.from_edges([[1, 2]])
    assert find_matches(h, GROWTH) == []
    h = Hypergraph.from_edges([[1, 2], [1, 3]])
    matches = find_matches(h, GROWTH)
    assert [m.edge_ids for m in matches] == [(0, 1), (1, 0)]


def test_find_matches_respects_repeated_variables():
    """A repeated pattern variable forces equal vertices."""
    loop = Rule(Pattern(((0, 0),)), Pattern(((0, 0), (0, 1))))
    h = Hypergraph.from_edges([[1, 1], [1, 2]])
    assert [m.edge_ids for m in find_matches(h, loop)] == [(0,)]


def test_apply_event_draws_fresh_vertices():
    """Fresh variables receive vertex ids from the hypergraph counter."""
    h = Hypergraph.from_edges([[1, 2], [1, 3]])
    m = find_matches(h, GROWTH)[0]
    new, event = apply_event(h, GROWTH, m, event_id=7)
    assert event.consumed == (0, 1)
    assert event.created == (2, 3, 4, 5)
    assert sorted(new.edge_tuples()) == sorted([(1, 3), (1, 4), (2, 4), (3, 4)])
    assert all(e.creator_event == 7 for e in new.edges)


def test_apply_stale_match_conflicts():
    """Applying a match whose edges are gone raises ConflictError."""
    h = Hypergraph.from_edges([[1, 2]])
    m = find_matches(h, EXTEND)[0]
    h2, _ = apply_event(h, EXTEND, m)
    with pytest.raises(ConflictError):
        apply_event(h2, EXTEND, m)


def test_sequential_evolution_is_deterministic():
    """Same inputs give the same final state and events."""
    h = Hypergraph.from_edges([[1, 2], [1, 3]])
    a = evolve(h, [GROWTH], "sequential", 6)
    b = evolve(h, [GROWTH], "sequential", 6)
    assert a.to_dict() == b.to_dict()
    assert len(a.events) == 6


def test_parallel_scheme_uses_disjoint_matches():
    """Events of one parallel step never share consumed atoms."""
    trace = string_evolve("AB" * 6, [StringRule("AB", "BA"), StringRule("BA", "AB")], "parallel", 4)
    for step in range(4):
        consumed = [a for e in trace.events if e.step == step for a in e.consumed]
        assert len(consumed) == len(set(consumed))


def test_evolution_halts_without_matches():
    """No sites left: the trace stops early and says so."""
    trace = string_evolve("AAB", [StringRule("A", "B")], "sequential", 10)
    assert trace.final.text == "BBB"
    assert trace.halted
    assert len(trace.events) == 2


def test_negative_steps_rejected():
    """steps < 0 is an input error."""
    with pytest.raises(InputError):
        string_evolve("A", [StringRule("A", "AA")], "sequential", -1)


def test_replay_determinism_under_random_scheme():
    """100 seeded runs: same seed gives the same trace, and replay reproduces the final state."""
    rules = [StringRule("AB", "BA"), StringRule("A", "AB"), StringRule("BB", "A")]
    system = StringSystem(rules)
    for seed in range(100):
        a = string_evolve("ABBA", rules, "random", 8, seed)
        b = string_evolve("ABBA", rules, "random", 8, seed)
        assert a.to_dict() == b.to_dict()
        final = replay_events(system, "ABBA", a.events)
        assert final.text == a.final.text
        assert final.tokens == a.final.tokens


def test_hypergraph_replay_reproduces_final():
    """Replaying recorded events yields the same edges and ids."""
    system = HypergraphSystem([GROWTH])
    trace = evolve(Hypergraph.from_edges([[1, 2], [1, 3]]), [GROWTH], "random", 5, seed=3)
    final = replay_events(system, trace.initial, trace.events)
    assert final.edge_tuples() == trace.final.edge_tuples()
    assert [e.id for e in final.edges] == [e.id for e in trace.final.edges]


def test_string_matches_are_ordered_by_position():
    """Occurrences are listed by position, then rule order."""
    hits = string_matches("ABA", [StringRule("AB", "A"), StringRule("BA", "B")])
    assert [(pos, str(r)) for pos, r in hits] == [(0, "AB -> A"), (1, "BA -> B")]


def test_make_system_rejects_mixed_rules():
    """String and hypergraph rules cannot share a system."""
    with pytest.raises(InputError):
        make_system([StringRule("A", "B"), EXTEND])
    with pytest.raises(InputError):
        make_system([])


def test_string_path_encoding_round_trip():
    """A string survives encoding as a directed path hypergraph."""
    for text in ("A", "AB", "BAAB", "CAB"):
        assert path_hypergraph_to_string(string_to_path_hypergraph(text)) == text


def test_encoded_rule_acts_like_string_rule():
    """The hypergraph encoding of AB -> BA rewrites the path of AB into the path of BA."""
    rule = encode_string_rule(StringRule("AB", "BA"))
    trace = evolve(string_to_path_hypergraph("AB"), [rule], "sequential", 1)
    assert path_hypergraph_to_string(trace.final) == "BA"


def test_random_scheme_depends_on_seed():
    """Different seeds pick different sites somewhere among a handful of runs."""
    rules = [StringRule("A", "AB"), StringRule("B", "A")]
    finals = {string_evolve("AAAA", rules, "random", 6, seed).final.text for seed in range(10)}
    assert len(finals) > 1


def test_events_only_touch_their_match():
    """Vertices outside a match keep their degree and unconsumed edges survive unchanged."""
    rng = random.Random(3)
    for _ in range(60):
        n = rng.randint(3, 8)
        h = Hypergraph.from_edges([[rng.randrange(n), rng.randrange(n)] for _ in range(rng.randint(2, 10))])
        for rule in (GROWTH, EXTEND):
            for m in find_matches(h, rule):
                new_h, event = apply_event(h, rule, m)
                touched = set(m.binding_map.values())
                for v in h.vertices():
                    if v not in touched:
                        assert new_h.degree(v) == h.degree(v)
                kept = {e.id: e.vertices for e in h.edges if e.id not in event.consumed}
                assert {e.id: e.vertices for e in new_h.edges if e.id in kept} == kept
                assert set(kept) | set(event.created) == {e.id for e in new_h.edges}


STRING_RULES = [StringRule("BB", "A"), StringRule("AAB", "BAAB"), StringRule("AB", "BA")]


def test_string_engine_matches_path_hypergraph_encoding():
    """Each string rewrite equals the encoded hypergraph rewrite on the path, site for site."""
    string_system = StringSystem(STRING_RULES)
    for n in range(1, 7):
        for chars in product("AB", repeat=n):
            text = "".join(chars)
            state = string_system.initial(text)
            by_strings = Counter(
                string_system.apply(state, site)[0].text for site in string_system.sites(state)
            )
            path = string_to_path_hypergraph(text)
            by_paths = Counter()
            for rule in STRING_RULES:
                encoded = encode_string_rule(rule)
                for m in find_matches(path, encoded):
                    by_paths[path_hypergraph_to_string(apply_event(path, encoded, m)[0])] += 1
            assert by_strings == by_paths, text
