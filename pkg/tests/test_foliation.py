from dataclasses import replace
from fractions import Fraction

import pytest

from src.causal import (
    CausalGraph,
    Foliation,
    Interval,
    Rapidity,
    boost,
    build_causal_graph,
    check_foliation,
    classify_interval,
    foliate_standard,
    refoliate,
)
from src.errors import DomainError, InputError
from src.rewrite import StringRule, StringSystem, replay_events, string_evolve

SWAP = [StringRule("AB", "BA")]


def _swap_graph(pairs: int = 30, steps: int = 14):
    trace = string_evolve("AB" * pairs, SWAP, "parallel", steps)
    return trace, build_causal_graph(trace)


def test_classify_interval():
    """Minkowski signature: |dx|^2 - dt^2 decides the interval type."""
    assert classify_interval((0, (0,)), (2, (1,))) is Interval.TIMELIKE
    assert classify_interval((0, (0,)), (1, (1,))) is Interval.LIGHTLIKE
    assert classify_interval((0, (0,)), (1, (3,))) is Interval.SPACELIKE
    with pytest.raises(InputError):
        classify_interval((0, (0,)), (1, (0, 0)))


def test_standard_foliation_layers_by_longest_path():
    """Layer = longest path from a source; x is centred within the layer."""
    cg = CausalGraph.from_edges(range(4), [(0, 1), (0, 2), (1, 3), (2, 3), (0, 3)])
    foliation, coords = foliate_standard(cg)
    assert foliation.slices == ((0,), (1, 2), (3,))
    assert coords.t[3] == 2
    assert coords.x[1] == (Fraction(-1),) and coords.x[2] == (Fraction(1),)
    assert check_foliation(cg, foliation) is None


def test_check_foliation_reports_violating_edge():
    """An edge inside one slice is the first violation."""
    cg = CausalGraph.from_edges(range(3), [(0, 1), (1, 2)])
    assert check_foliation(cg, Foliation(((0, 1), (2,)))) == (0, 1)
    with pytest.raises(InputError):
        check_foliation(cg, Foliation(((0,), (1,))))


def test_swap_system_edges_are_lightlike():
    """AB->BA under parallel updates: every causal edge moves one layer and one unit sideways."""
    _, cg = _swap_graph(10, 6)
    _, coords = foliate_standard(cg)
    for a, b in cg.edges:
        assert coords.t[b] - coords.t[a] == 1
        assert abs(coords.x[b][0] - coords.x[a][0]) == 1
        assert classify_interval(coords.entry(a), coords.entry(b)) is Interval.LIGHTLIKE


def test_rapidity_domain():
    """v must lie in [0, 1) and the direction must be non-zero."""
    with pytest.raises(DomainError):
        Rapidity(Fraction(1))
    with pytest.raises(DomainError):
        Rapidity.parse("13/12")
    with pytest.raises(DomainError):
        Rapidity(Fraction(-1, 2))
    with pytest.raises(DomainError):
        Rapidity(Fraction(1, 2), (0,))
    with pytest.raises(InputError):
        Rapidity.parse("fast")


def test_rational_boost_is_exact():
    """v = 5/13 gives cosh = 13/12 and sinh = 5/12."""
    ch, sh, exact = Rapidity.parse("5/13").factors()
    assert (ch, sh, exact) == (Fraction(13, 12), Fraction(5, 12), True)
    assert Rapidity.parse("0.3").factors()[2] is False


def test_boost_preserves_interval_classes():
    """Boosting keeps the Minkowski norm of every coordinate difference."""
    _, cg = _swap_graph(6, 4)
    _, coords = foliate_standard(cg)
    boosted = boost(coords, Rapidity(Fraction(3, 5)))
    assert boosted.exact
    events = list(cg.events)
    for a in events[:10]:
        for b in events:
            before = classify_interval(coords.entry(a), coords.entry(b))
            after = classify_interval(boosted.entry(a), boosted.entry(b))
            assert before is after


def test_zero_boost_reproduces_standard_foliation():
    """v = 0 slices exactly like the standard foliation."""
    _, cg = _swap_graph(10, 6)
    foliation, coords = foliate_standard(cg)
    result = refoliate(cg, boost(coords, Rapidity(Fraction(0))))
    assert result.accepted
    assert result.foliation == foliation


def test_boost_five_thirteenths_is_accepted_and_replays():
    """v = 5/13: every slice is achronal and the induced order rebuilds an isomorphic causal graph."""
    trace, cg = _swap_graph()
    _, coords = foliate_standard(cg)
    result = refoliate(cg, boost(coords, Rapidity.parse("5/13")))
    assert result.accepted
    assert result.violation is None
    assert len(result.foliation.slices) > len(foliate_standard(cg)[0].slices)

    by_id = {e.id: e for e in trace.events}
    reordered = tuple(by_id[i] for i in result.order)
    system = StringSystem(SWAP)
    final = replay_events(system, trace.initial, reordered)
    assert final.text == trace.final.text
    again = build_causal_graph(replace(trace, events=reordered, final=final))
    assert again.canonical_key() == cg.canonical_key()


def test_float_boost_is_accepted_on_lightlike_graph():
    """A boost without rational factors falls back to floats and still slices causally."""
    _, cg = _swap_graph(10, 6)
    _, coords = foliate_standard(cg)
    boosted = boost(coords, Rapidity.parse("0.3"))
    assert not boosted.exact
    result = refoliate(cg, boosted)
    assert result.accepted


def test_refoliate_requires_matching_events():
    """Coordinates must cover exactly the causal graph's events."""
    _, cg = _swap_graph(4, 2)
    other = CausalGraph.from_edges(range(2), [(0, 1)])
    _, coords = foliate_standard(other)
    with pytest.raises(InputError):
        refoliate(cg, coords)
