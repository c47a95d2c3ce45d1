import json
import random

import pytest
from typer.testing import CliRunner

from src.cli import build_run_config, format_rules, parse_rule, parse_state, read_rules, rerun_manifest, run
from src.errors import ConfigError, InputError, RuleSyntaxError, ValidationError
from src.hypercore import Hypergraph
from src.main import app
from src.rewrite import Rule, StringRule
from src.utils import save_json


def _random_rule_text(rng: random.Random) -> str:
    if rng.random() < 0.5:
        letters = "ABC"
        lhs = "".join(rng.choice(letters) for _ in range(rng.randint(1, 3)))
        rhs = "".join(rng.choice(letters) for _ in range(rng.randint(0, 3)))
        return f"{lhs} -> {rhs}"
    names = ["x", "y", "z", "w", "v1"]

    def side(min_edges: int) -> str:
        edges = [",".join(rng.choice(names) for _ in range(rng.randint(1, 3)))
                 for _ in range(rng.randint(min_edges, 3))]
        return "{" + ",".join("{" + e + "}" for e in edges) + "}"

    return f"{side(1)} -> {side(0)}"


def test_parse_hypergraph_rule_with_fresh_vertex():
    """w appears only on the right and becomes the single fresh variable."""
    (rule,) = parse_rule("{{x,y},{x,z}} -> {{x,z},{z,w}}")
    assert isinstance(rule, Rule)
    assert rule.lhs.edge_patterns == ((0, 1), (0, 2))
    assert rule.rhs.edge_patterns == ((0, 2), (2, 3))
    assert rule.fresh_vars == {3}
    assert rule.var_name(3) == "w"


def test_parse_multiple_string_rules():
    """Rules split on ';' and on newlines; comments are ignored."""
    assert parse_rule("AB -> A; BA -> B") == [StringRule("AB", "A"), StringRule("BA", "B")]
    assert parse_rule("A -> AA  # doubling\nB -> \n") == [StringRule("A", "AA"), StringRule("B", "")]


def test_unbalanced_rule_reports_position():
    """A missing brace is a syntax error carrying line and column."""
    with pytest.raises(RuleSyntaxError) as err:
        parse_rule("A -> B\n{{x,y} -> {{x}}")
    assert err.value.line == 2
    assert err.value.column >= 1
    assert err.value.exit_code == 2


def test_rule_syntax_errors():
    """Missing arrows, stray characters and empty input are rejected."""
    with pytest.raises(RuleSyntaxError):
        parse_rule("AB")
    with pytest.raises(RuleSyntaxError) as err:
        parse_rule("A! -> B")
    assert err.value.column == 2
    with pytest.raises(RuleSyntaxError):
        parse_rule("  # nothing here")


def test_empty_left_hand_side_is_invalid():
    """A hypergraph rule must consume at least one edge."""
    with pytest.raises(ValidationError):
        parse_rule("{} -> {{x}}")


def test_rule_printing_round_trips():
    """200 random rules: parsing the printed form gives the same rules back."""
    rng = random.Random(31)
    for _ in range(200):
        text = "; ".join(_random_rule_text(rng) for _ in range(rng.randint(1, 3)))
        rules = parse_rule(text)
        assert parse_rule(format_rules(rules)) == rules


def test_read_rules_from_file(tmp_path):
    """A path to a rule file is read like inline text."""
    path = tmp_path / "rules.txt"
    path.write_text("A -> AB\nB -> A\n", encoding="utf-8")
    assert read_rules(str(path)) == [StringRule("A", "AB"), StringRule("B", "A")]


def test_parse_state_forms(tmp_path):
    """Inline edges, generators, JSON files and plain strings are all accepted."""
    inline = parse_state("{{1,2},{2,3,4}}")
    assert isinstance(inline, Hypergraph)
    assert [e.vertices for e in inline.edges] == [(1, 2), (2, 3, 4)]

    torus = parse_state("torus:5x5")
    assert len(torus.vertices()) == 25

    path = tmp_path / "state.json"
    save_json(str(path), inline.to_json_obj())
    assert parse_state(str(path)).to_json_obj() == inline.to_json_obj()

    assert parse_state("ABAAB") == "ABAAB"


def test_parse_state_errors(tmp_path):
    """Unknown generators, symbolic vertices and unreadable text are input errors."""
    with pytest.raises(InputError):
        parse_state("nosuch:3")
    with pytest.raises(InputError):
        parse_state("{{a,b}}")
    with pytest.raises(InputError):
        parse_state("A-B")
    bad = tmp_path / "list.json"
    bad.write_text("[1, 2]", encoding="utf-8")
    with pytest.raises(InputError):
        parse_state(str(bad))


def test_run_config_validation():
    """Out-of-range values become configuration errors."""
    with pytest.raises(ConfigError):
        build_run_config(command="evolve", steps=-1)
    with pytest.raises(ConfigError):
        build_run_config(command="evolve", scheme="bogus")
    with pytest.raises(ConfigError):
        build_run_config(command="evolve", formats=["xml"])
    with pytest.raises(ConfigError):
        build_run_config(command="multiway", variant="weak")
    with pytest.raises(ConfigError):
        build_run_config(command="frobnicate")
    cfg = build_run_config(command="evolve", formats=["csv", "json", "json"], seed=None)
    assert cfg.formats == ["csv", "json"]
    assert cfg.seed == 0


def test_evolve_is_byte_reproducible(tmp_path):
    """Two identical evolve runs write identical manifests and traces."""
    rules = tmp_path / "r.txt"
    rules.write_text("A -> AB\nB -> A\n", encoding="utf-8")
    out = tmp_path / "out"
    cfg = build_run_config(command="evolve", rule=str(rules), init="ABAAB", steps=10, seed=1,
                           scheme="random", output_dir=str(out))
    first = run(cfg)
    manifest = (out / "manifest.json").read_bytes()
    trace = (out / "trace.json").read_bytes()
    second = run(cfg)
    assert first == second
    assert (out / "manifest.json").read_bytes() == manifest
    assert (out / "trace.json").read_bytes() == trace
    assert set(first["artifacts"]) == {"trace.json", "causal_graph.json", "causal_graph.dot"}
    assert first["config"]["seed"] == 1


def test_format_selection_limits_artifacts(tmp_path):
    """Only the requested formats are written."""
    cfg = build_run_config(command="evolve", rule="A -> AA", init="A", steps=2,
                           output_dir=str(tmp_path), formats=["dot"])
    manifest = run(cfg)
    assert set(manifest["artifacts"]) == {"causal_graph.dot"}


def test_hypergraph_evolve_defaults_to_rule_lhs(tmp_path):
    """Without an initial state the first rule's left-hand side is instantiated."""
    cfg = build_run_config(command="evolve", rule="{{x,y}} -> {{x,y},{y,z}}", steps=3,
                           output_dir=str(tmp_path))
    manifest = run(cfg)
    assert manifest["summary"]["events"] == 3


def test_causal_invariance_command(tmp_path):
    """A->AA to depth 4 is reported causal invariant."""
    cfg = build_run_config(command="causal-invariance", rule="A->AA", depth=4, output_dir=str(tmp_path))
    manifest = run(cfg)
    assert manifest["summary"]["verdict"] == "yes"
    report = json.loads((tmp_path / "invariance.json").read_text(encoding="utf-8"))
    assert report["holds"] == "yes"


def test_boost_command_accepts_five_thirteenths(tmp_path):
    """The swap system boosted at v = 5/13 gives an accepted foliation artifact."""
    cfg = build_run_config(command="boost", rule="AB->BA", init="AB" * 30, scheme="parallel", steps=14,
                           velocity="5/13", output_dir=str(tmp_path))
    manifest = run(cfg)
    assert manifest["summary"]["accepted"] is True
    boosted = json.loads((tmp_path / "boosted_foliation.json").read_text(encoding="utf-8"))
    assert boosted["accepted"] is True


def test_graph_commands(tmp_path):
    """Planarity, curvature and bundle run on generator graphs."""
    planar = run(build_run_config(command="planarity", graph="complete:5", output_dir=str(tmp_path / "p")))
    assert planar["summary"] == {"planar": False, "tangles": 1}
    curv = run(build_run_config(command="curvature", graph="cycle:8", output_dir=str(tmp_path / "c")))
    assert curv["summary"]["mean_kappa"] == 0
    bundle = run(build_run_config(command="bundle", graph="grid:8,8", seeds=[(0, 8), (1, 9)], steps=4,
                                  output_dir=str(tmp_path / "b")))
    assert bundle["summary"] == {"steps": 4, "truncated": False}


def test_graph_command_requires_graph(tmp_path):
    """Commands on a spatial graph need --graph."""
    with pytest.raises(ConfigError):
        run(build_run_config(command="curvature", output_dir=str(tmp_path)))


def test_cli_syntax_error_exit_code(tmp_path):
    """A malformed rule exits 2 and leaves a machine-readable error.json."""
    result = CliRunner().invoke(app, ["evolve", "--rule", "{{x,y} -> {{x}}", "--out", str(tmp_path)])
    assert result.exit_code == 2
    payload = json.loads((tmp_path / "error.json").read_text(encoding="utf-8"))
    assert payload["error"] == "syntax"
    assert payload["details"]["line"] == 1


def test_cli_analysis_error_exit_code(tmp_path):
    """A boost at the speed of light is a domain error and exits 3."""
    result = CliRunner().invoke(app, ["boost", "--rule", "AB->BA", "--init", "ABAB", "--velocity", "1",
                                      "--out", str(tmp_path)])
    assert result.exit_code == 3
    payload = json.loads((tmp_path / "error.json").read_text(encoding="utf-8"))
    assert payload["error"] == "domain"


def test_cli_version():
    """--version prints the tool name and version."""
    result = CliRunner().invoke(app, ["--version"])
    assert result.exit_code == 0
    assert "causal-forge v" in result.output


def test_manifest_inlines_rule_file_and_reruns(tmp_path):
    """The manifest holds the rule text, so editing the rule file afterwards does not change a rerun."""
    rules = tmp_path / "r.txt"
    rules.write_text("BB -> A\nAAB -> BAAB\n", encoding="utf-8")
    out = tmp_path / "first"
    manifest = run(build_run_config(command="evolve", rule=str(rules), init="ABAAB", steps=4, seed=1,
                                    scheme="random", output_dir=str(out)))
    assert manifest["config"]["rule"] == "BB -> A; AAB -> BAAB"
    assert manifest["settings"]["random_seed"] == 0
    assert manifest["settings"]["dimension"]["spatial_offset"] == 0.0
    assert "laziness" in manifest["settings"]["transport"]

    rules.write_text("A -> B\n", encoding="utf-8")
    again = rerun_manifest(str(out / "manifest.json"), str(tmp_path / "second"))
    assert again["summary"] == manifest["summary"]
    assert again["artifacts"] == manifest["artifacts"]
    assert (tmp_path / "second" / "trace.json").read_bytes() == (out / "trace.json").read_bytes()


def test_manifest_inlines_graph_file(tmp_path):
    """A graph read from a JSON file is recorded as inline JSON that parses back to the same graph."""
    path = tmp_path / "g.json"
    save_json(str(path), {"edges": [[0, 1], [1, 2], [2, 0]], "isolated": [5]})
    manifest = run(build_run_config(command="planarity", graph=str(path), output_dir=str(tmp_path / "p")))
    recorded = manifest["config"]["graph"]
    assert json.loads(recorded) == {"edges": [[0, 1], [1, 2], [2, 0]], "isolated": [5]}
    assert parse_state(recorded).to_json_obj() == parse_state(str(path)).to_json_obj()


def test_rerun_refuses_changed_settings(tmp_path):
    """Engine settings that differ from the recorded ones make a rerun a config error."""
    manifest = run(build_run_config(command="curvature", graph="cycle:6", output_dir=str(tmp_path / "c")))
    manifest["settings"]["transport"]["laziness"] = 0.5
    path = tmp_path / "edited.json"
    save_json(str(path), manifest)
    with pytest.raises(ConfigError) as err:
        rerun_manifest(str(path), str(tmp_path / "again"))
    assert err.value.details["keys"] == ["transport"]


def test_corrupt_graph_json_reports_position(tmp_path):
    """Truncated JSON is an input error naming where decoding stopped, and the CLI exits 2."""
    path = tmp_path / "broken.json"
    path.write_text('{"edges": [[0, 1]', encoding="utf-8")
    with pytest.raises(InputError) as err:
        parse_state(str(path))
    assert "not valid JSON" in err.value.message
    assert err.value.details["line"] == 1

    out = tmp_path / "out"
    result = CliRunner().invoke(app, ["planarity", "--graph", str(path), "--out", str(out)])
    assert result.exit_code == 2
    payload = json.loads((out / "error.json").read_text(encoding="utf-8"))
    assert payload["error"] == "input"
    assert payload["details"]["column"] >= 1
