# ============================================================
# src/cli.py
# Rule / state parsing, run configuration and the artifact runner
# behind every subcommand
# ============================================================
from __future__ import annotations

import hashlib
import json
import logging
import os
import re
from typing import Any, Dict, List, Literal, Optional, Tuple, Union

from pydantic import BaseModel, Field, ValidationError as PydanticValidationError, field_validator

from src.errors import ConfigError, InputError, RuleSyntaxError
from src.hypercore import Hypergraph
from src.rewrite import Pattern, Rule, StringRule, UpdateScheme
from src.utils import dump_json, save_json

logger = logging.getLogger(__name__)

VERSION = "0.3.0"

COMMANDS = ("evolve", "multiway", "causal-invariance", "boost", "curvature", "dimension", "planarity", "bundle")

_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_]*|[0-9]+")
_STRING_SIDE = re.compile(r"[A-Za-z0-9]*")


# ============================================================
# Rule grammar
# ============================================================
class _SideParser:
    """Recursive descent over one side `{{a,b},{c}}` of a hypergraph rule."""

    def __init__(self, text: str, line: int, col0: int):
        self.text = text
        self.line = line
        self.col0 = col0
        self.i = 0

    def error(self, msg: str):
        raise RuleSyntaxError(msg, self.line, self.col0 + self.i + 1)

    def skip(self):
        while self.i < len(self.text) and self.text[self.i].isspace():
            self.i += 1

    def expect(self, ch: str):
        self.skip()
        if self.i >= len(self.text) or self.text[self.i] != ch:
            found = self.text[self.i] if self.i < len(self.text) else "end of input"
            self.error(f"Expected '{ch}', found {found!r}")
        self.i += 1

    def peek(self) -> str:
        self.skip()
        return self.text[self.i] if self.i < len(self.text) else ""

    def ident(self) -> str:
        self.skip()
        m = _IDENT.match(self.text, self.i)
        if not m:
            self.error("Expected a vertex name")
        self.i = m.end()
        return m.group(0)

    def edge(self) -> List[str]:
        self.expect("{")
        names = [self.ident()]
        while self.peek() == ",":
            self.i += 1
            names.append(self.ident())
        self.expect("}")
        return names

    def side(self) -> List[List[str]]:
        self.expect("{")
        edges: List[List[str]] = []
        if self.peek() == "}":
            self.i += 1
        else:
            edges.append(self.edge())
            while self.peek() == ",":
                self.i += 1
                edges.append(self.edge())
            self.expect("}")
        self.skip()
        if self.i != len(self.text):
            self.error("Unexpected text after pattern")
        return edges


def _split_rules(text: str) -> List[Tuple[str, int, int]]:
    """(chunk, line, column) for every rule separated by ';' or a newline."""
    out = []
    for ln, raw in enumerate(text.splitlines() or [text], start=1):
        line = raw.split("#", 1)[0]
        col = 0
        for chunk in line.split(";"):
            if chunk.strip():
                lead = len(chunk) - len(chunk.lstrip())
                out.append((chunk.strip(), ln, col + lead))
            col += len(chunk) + 1
    return out


def _parse_one(chunk: str, line: int, col: int) -> Union[Rule, StringRule]:
    arrow = chunk.find("->")
    if arrow < 0:
        raise RuleSyntaxError("Missing '->' in rule", line, col + 1)
    lhs, rhs = chunk[:arrow], chunk[arrow + 2:]
    if lhs.strip().startswith("{") or rhs.strip().startswith("{"):
        left = _SideParser(lhs, line, col).side()
        right = _SideParser(rhs, line, col + arrow + 2).side()
        ids: Dict[str, int] = {}
        for name in (n for pat in left + right for n in pat):
            ids.setdefault(name, len(ids))
        names = tuple(sorted(ids, key=ids.get))
        return Rule(
            Pattern(tuple(tuple(ids[n] for n in pat) for pat in left)),
            Pattern(tuple(tuple(ids[n] for n in pat) for pat in right)),
            names,
        )
    for side, offset in ((lhs, col), (rhs, col + arrow + 2)):
        token = side.strip()
        if not _STRING_SIDE.fullmatch(token):
            bad = next(i for i, ch in enumerate(side) if not (ch.isalnum() or ch.isspace()))
            raise RuleSyntaxError(f"Unexpected character {side[bad]!r} in string rule", line, offset + bad + 1)
    return StringRule(lhs.strip(), rhs.strip())


def parse_rule(text: str) -> List[Union[Rule, StringRule]]:
    """Parse one or more rules (`;` or newline separated)."""
    chunks = _split_rules(text)
    if not chunks:
        raise RuleSyntaxError("No rule given", 1, 1)
    return [_parse_one(chunk, line, col) for chunk, line, col in chunks]


def format_rules(rules: List[Union[Rule, StringRule]]) -> str:
    return "; ".join(str(r) for r in rules)


def read_rules(source: str) -> List[Union[Rule, StringRule]]:
    """Rule text, or a path to a file holding it."""
    if os.path.isfile(source):
        with open(source, encoding="utf-8") as f:
            return parse_rule(f.read())
    return parse_rule(source)


# ============================================================
# States
# ============================================================
def _number(tok: str) -> Union[int, float]:
    try:
        return int(tok)
    except ValueError:
        try:
            return float(tok)
        except ValueError:
            raise InputError(f"Generator argument {tok!r} is not a number")


def _hypergraph_json(raw: str, source: str) -> Hypergraph:
    try:
        obj = json.loads(raw)
    except json.JSONDecodeError as e:
        raise InputError(f"{source} is not valid JSON: {e.msg} (line {e.lineno}, column {e.colno})",
                         source=source, line=e.lineno, column=e.colno)
    if not isinstance(obj, dict):
        raise InputError(f"{source} does not hold a hypergraph object", source=source)
    return Hypergraph.from_json_obj(obj)


def state_text(state: Union[Hypergraph, str]) -> str:
    """Inline text that parse_state reads back to the same state."""
    if isinstance(state, Hypergraph):
        return dump_json(state.to_json_obj(), indent=None).strip()
    return state


def parse_state(text: str) -> Union[Hypergraph, str]:
    """Inline edge list `{{1,2},{2,3}}`, generator `torus:50x50`, JSON file, or a literal string."""
    text = text.strip()
    if os.path.isfile(text):
        if text.endswith(".json"):
            with open(text, encoding="utf-8-sig") as f:
                return _hypergraph_json(f.read(), text)
        with open(text, encoding="utf-8") as f:
            return parse_state(f.read())
    if text.startswith("{") and text[1:].lstrip().startswith('"'):
        return _hypergraph_json(text, "inline state")
    if text.startswith("{"):
        parser = _SideParser(text, 1, 0)
        edges = parser.side()
        try:
            return Hypergraph.from_edges([[int(v) for v in e] for e in edges])
        except ValueError:
            raise InputError("Hypergraph vertices must be integers")
    if ":" in text:
        from src.generators import GENERATORS

        name, _, args = text.partition(":")
        fn = GENERATORS.get(name.strip())
        if fn is None:
            raise InputError(f"Unknown generator {name!r}; known: {sorted(GENERATORS)}")
        values = [_number(a) for a in re.split(r"[x,]", args) if a.strip()]
        return fn(*values)
    if not _STRING_SIDE.fullmatch(text):
        raise InputError(f"Cannot read a state from {text!r}")
    return text


# ============================================================
# Run configuration
# ============================================================
class RunConfig(BaseModel):
    command: Literal["evolve", "multiway", "causal-invariance", "boost", "curvature", "dimension",
                     "planarity", "bundle"]
    rule: Optional[str] = None
    init: Optional[str] = None
    graph: Optional[str] = None
    scheme: UpdateScheme = UpdateScheme.SEQUENTIAL
    steps: int = Field(0, ge=0)
    seed: int = Field(0, ge=0, lt=2 ** 64)
    depth: int = Field(4, ge=0)
    variant: Optional[str] = None
    velocity: str = "0"
    direction: List[int] = Field(default_factory=lambda: [1])
    center: int = 0
    r_max: int = Field(10, ge=1)
    window: Optional[Tuple[int, int]] = None
    offset: Optional[float] = None
    hyperedges: bool = False
    laziness: Optional[float] = None
    seeds: List[Tuple[int, int]] = Field(default_factory=list)
    output_dir: str = "outputs"
    formats: List[str] = Field(default_factory=lambda: ["json", "dot", "csv"])

    @field_validator("formats")
    @classmethod
    def _known_formats(cls, v: List[str]) -> List[str]:
        bad = set(v) - {"json", "dot", "csv"}
        if bad:
            raise ValueError(f"unknown formats {sorted(bad)}")
        return sorted(set(v))

    @field_validator("variant")
    @classmethod
    def _known_variant(cls, v: Optional[str]) -> Optional[str]:
        if v is not None and v not in ("local", "semi", "strong", "diamond", "global"):
            raise ValueError(f"unknown confluence variant {v!r}")
        return v


def build_run_config(**kwargs: Any) -> RunConfig:
    if kwargs.get("seed") is None:
        from src.config import get_settings

        kwargs["seed"] = get_settings().random_seed
    try:
        return RunConfig(**{k: v for k, v in kwargs.items() if v is not None})
    except PydanticValidationError as e:
        raise ConfigError(f"Invalid run configuration: {e}")


# ============================================================
# Runner
# ============================================================
class _Artifacts:
    def __init__(self, cfg: RunConfig):
        self.cfg = cfg
        self.paths: Dict[str, str] = {}

    def _path(self, name: str) -> str:
        return os.path.join(self.cfg.output_dir, name)

    def json(self, name: str, data: Any) -> None:
        if "json" in self.cfg.formats:
            self.paths[name] = save_json(self._path(name), data)

    def dot(self, name: str, text: str) -> None:
        if "dot" in self.cfg.formats:
            from src.utils.exporters import write_text

            self.paths[name] = write_text(self._path(name), text)

    def csv(self, name: str, df) -> None:
        if "csv" in self.cfg.formats:
            from src.utils.exporters import write_csv

            self.paths[name] = write_csv(self._path(name), df)

    def digests(self) -> Dict[str, str]:
        out = {}
        for name, path in sorted(self.paths.items()):
            with open(path, "rb") as f:
                out[name] = hashlib.sha256(f.read()).hexdigest()
        return out


def _require(value: Optional[str], flag: str) -> str:
    if value is None:
        raise ConfigError(f"--{flag} is required for this command")
    return value


def _system_and_init(cfg: RunConfig):
    from src.rewrite import make_system

    rules = read_rules(_require(cfg.rule, "rule"))
    system = make_system(rules)
    if cfg.init is None:
        # the first rule's left-hand side, instantiated as is
        first = rules[0]
        init = first.lhs if system.kind == "string" else Hypergraph.from_edges(first.lhs.edge_patterns)
        logger.info(f"No --init given; starting from {system.label(system.initial(init))}")
    else:
        init = parse_state(cfg.init)
    if system.kind == "string" and not isinstance(init, str):
        raise InputError("String rules need a string initial state")
    if system.kind == "hypergraph" and isinstance(init, str):
        raise InputError("Hypergraph rules need a hypergraph initial state")
    return rules, system, init


def _graph(cfg: RunConfig) -> Hypergraph:
    state = parse_state(_require(cfg.graph, "graph"))
    if not isinstance(state, Hypergraph):
        from src.rewrite import string_to_path_hypergraph

        state = string_to_path_hypergraph(state)
    return state


def _evolve(cfg: RunConfig, out: _Artifacts) -> Dict[str, Any]:
    from src.causal.graph import build_causal_graph
    from src.rewrite import run_system
    from src.utils.exporters import causal_dot

    _, system, init = _system_and_init(cfg)
    trace = run_system(system, init, cfg.scheme, cfg.steps, cfg.seed)
    cg = build_causal_graph(trace)
    out.json("trace.json", trace.to_dict())
    out.json("causal_graph.json", cg.to_dict())
    out.dot("causal_graph.dot", causal_dot(cg))
    return {"events": len(trace.events), "halted": trace.halted, "final": system.label(trace.final)}


def _multiway(cfg: RunConfig, out: _Artifacts) -> Dict[str, Any]:
    from src.multiway import check_all_variants, check_confluence, explore, normal_forms
    from src.utils.exporters import multiway_dot

    _, system, init = _system_and_init(cfg)
    mw = explore(system, init, cfg.depth)
    reports = {cfg.variant: check_confluence(mw, cfg.variant)} if cfg.variant else check_all_variants(mw)
    out.json("multiway.json", mw.to_dict())
    out.dot("multiway.dot", multiway_dot(mw))
    result = {
        "states": len(mw.states),
        "truncated": mw.truncated,
        "normal_forms": [mw.node_label(k) for k in normal_forms(mw)],
        "confluence": {k: r.to_dict() for k, r in reports.items()},
    }
    out.json("confluence.json", result)
    return {k: r.holds.value for k, r in reports.items()}


def _causal_invariance(cfg: RunConfig, out: _Artifacts) -> Dict[str, Any]:
    from src.causal.graph import build_causal_graph
    from src.causal.invariance import causal_invariant, replay_order
    from src.utils.exporters import causal_dot

    _, system, init = _system_and_init(cfg)
    report = causal_invariant(system, init, cfg.depth)
    out.json("invariance.json", report.to_dict())
    if report.witness:
        for tag, order in zip(("a", "b"), report.witness):
            cg = build_causal_graph(replay_order(system, init, order))
            out.json(f"witness_{tag}.json", cg.to_dict())
            out.dot(f"witness_{tag}.dot", causal_dot(cg))
    return {"verdict": report.holds.value, "classes": report.classes}


def _boost(cfg: RunConfig, out: _Artifacts) -> Dict[str, Any]:
    from src.causal.foliation import Rapidity, boost, foliate_standard, refoliate
    from src.causal.graph import build_causal_graph
    from src.rewrite import run_system
    from src.utils.exporters import causal_dot

    rapidity = Rapidity.parse(cfg.velocity, cfg.direction)
    _, system, init = _system_and_init(cfg)
    trace = run_system(system, init, cfg.scheme, cfg.steps, cfg.seed)
    cg = build_causal_graph(trace)
    foliation, coords = foliate_standard(cg)
    result = refoliate(cg, boost(coords, rapidity))
    out.json("foliation.json", foliation.to_dict())
    out.json("boosted_foliation.json", result.to_dict())
    out.dot("causal_graph.dot", causal_dot(cg, result.foliation or foliation))
    return {"accepted": result.accepted, "slices": len(result.foliation.slices) if result.foliation else None}


def _curvature(cfg: RunConfig, out: _Artifacts) -> Dict[str, Any]:
    from src.transport.curvature import curvature_table, hyperedge_curvature_table

    h = _graph(cfg)
    df = hyperedge_curvature_table(h) if cfg.hyperedges else curvature_table(h, laziness=cfg.laziness)
    out.csv("curvature.csv", df[[c for c in df.columns if c != "kappa"]].assign(kappa=df["kappa"].astype(str)))
    summary = {"edges": int(len(df)), "mean_kappa": float(df["kappa_float"].mean()) if len(df) else None}
    out.json("curvature.json", summary)
    return summary


def _dimension(cfg: RunConfig, out: _Artifacts) -> Dict[str, Any]:
    from src.dimension import ball_series, cone_counts, fit_curvature_correction, log_dimension

    if cfg.graph:
        series = ball_series(_graph(cfg), cfg.center, cfg.r_max)
    else:
        from src.causal.graph import build_causal_graph
        from src.rewrite import run_system

        _, system, init = _system_and_init(cfg)
        cg = build_causal_graph(run_system(system, init, cfg.scheme, cfg.steps, cfg.seed))
        series = cone_counts(cg, cfg.center, cfg.r_max)
    logdim = log_dimension(series, cfg.window, cfg.offset)
    fit = fit_curvature_correction(series, cfg.window, cfg.offset)
    out.csv("growth.csv", series.to_frame())
    out.json("dimension.json", {"log_dimension": logdim.to_dict(), "fit": fit.to_dict()})
    return {"n_hat": fit.n_hat, "R_hat": fit.R_hat, "slope": logdim.slope}


def _planarity(cfg: RunConfig, out: _Artifacts) -> Dict[str, Any]:
    from src.geometry import count_tangles, is_planar, verify_kuratowski_witness
    from src.utils.exporters import tangle_dot

    h = _graph(cfg)
    report = is_planar(h)
    tangles = count_tangles(h)
    verified = all(verify_kuratowski_witness(h, w) for w in report.witnesses + tangles.witnesses)
    out.json("planarity.json", {"planarity": report.to_dict(), "tangles": tangles.to_dict(), "verified": verified})
    out.dot("tangles.dot", tangle_dot(h, tangles.witnesses))
    return {"planar": report.planar, "tangles": tangles.count}


def _bundle(cfg: RunConfig, out: _Artifacts) -> Dict[str, Any]:
    from src.geometry import bundle_divergence

    h = _graph(cfg)
    profile = bundle_divergence(h, cfg.seeds, max(1, cfg.steps))
    out.json("bundle.json", profile.to_dict())
    out.csv("separation.csv", profile.to_frame())
    return {"steps": len(profile.separations) - 1, "truncated": profile.truncated}


_HANDLERS = {
    "evolve": _evolve,
    "multiway": _multiway,
    "causal-invariance": _causal_invariance,
    "boost": _boost,
    "curvature": _curvature,
    "dimension": _dimension,
    "planarity": _planarity,
    "bundle": _bundle,
}


def resolve_inputs(cfg: RunConfig) -> RunConfig:
    """Inline rule files, state files and generators so the config alone reproduces the run."""
    update: Dict[str, Any] = {}
    if cfg.rule is not None:
        update["rule"] = format_rules(read_rules(cfg.rule))
    if cfg.init is not None:
        update["init"] = state_text(parse_state(cfg.init))
    if cfg.graph is not None:
        update["graph"] = state_text(parse_state(cfg.graph))
    return cfg.model_copy(update=update)


# settings that never change an artifact
_RESULT_NEUTRAL = ("threads", "output_dir")


def _engine_settings() -> Dict[str, Any]:
    from src.config import get_settings

    return get_settings().model_dump(mode="json")


def run(cfg: RunConfig) -> Dict[str, Any]:
    """Execute one subcommand and write its artifacts plus manifest.json."""
    logger.info(f"Running {cfg.command} into {cfg.output_dir}")
    cfg = resolve_inputs(cfg)
    os.makedirs(cfg.output_dir, exist_ok=True)
    out = _Artifacts(cfg)
    summary = _HANDLERS[cfg.command](cfg, out)
    manifest = {
        "tool": "causal-forge",
        "version": VERSION,
        "command": cfg.command,
        "seed": cfg.seed,
        "config": cfg.model_dump(mode="json"),
        "settings": _engine_settings(),
        "summary": summary,
        "artifacts": out.digests(),
    }
    save_json(os.path.join(cfg.output_dir, "manifest.json"), manifest)
    logger.info(f"{cfg.command} done: {dump_json(summary).strip()}")
    return manifest


def rerun_manifest(path: str, output_dir: Optional[str] = None) -> Dict[str, Any]:
    """Repeat a run from its manifest.json; the engine settings in force must match the recorded ones."""
    try:
        with open(path, encoding="utf-8") as f:
            manifest = json.load(f)
    except OSError as e:
        raise InputError(f"Cannot read manifest {path}: {e.strerror}", path=path)
    except json.JSONDecodeError as e:
        raise InputError(f"{path} is not valid JSON: {e.msg} (line {e.lineno}, column {e.colno})",
                         path=path, line=e.lineno, column=e.colno)
    if not isinstance(manifest, dict) or not isinstance(manifest.get("config"), dict):
        raise InputError(f"{path} is not a causal-forge manifest", path=path)

    recorded = {k: v for k, v in (manifest.get("settings") or {}).items() if k not in _RESULT_NEUTRAL}
    current = {k: v for k, v in _engine_settings().items() if k not in _RESULT_NEUTRAL}
    changed = sorted(k for k in set(recorded) | set(current) if recorded.get(k) != current.get(k))
    if changed:
        raise ConfigError(f"Engine settings differ from the manifest in {changed}", keys=changed)

    data = dict(manifest["config"])
    if output_dir is not None:
        data["output_dir"] = output_dir
    logger.info(f"Re-running {data.get('command')} from {path}")
    return run(build_run_config(**data))


def write_error(output_dir: str, payload: Dict[str, Any]) -> str:
    return save_json(os.path.join(output_dir, "error.json"), payload)
