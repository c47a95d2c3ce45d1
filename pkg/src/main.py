# ============================================================
# src/main.py
# ============================================================
import logging
import os
from pathlib import Path
from typing import Callable, List, Optional

import typer

from src import config
from src.errors import CausalForgeError, EXIT_CONFIG
from src.utils import setup_logging

logger = logging.getLogger(__name__)

# ============================================================
# CLI (Typer)
# ============================================================
app = typer.Typer(help="causal-forge: rewriting systems, causal graphs and discrete geometry")

RULE = typer.Option(None, "--rule", help="Rule text (';' or newline separated) or a rule file")
INIT = typer.Option(None, "--init", help="Initial state: {{1,2},...}, generator:args, JSON file or string")
GRAPH = typer.Option(None, "--graph", help="Hypergraph: {{1,2},...}, generator:args or JSON file")
SCHEME = typer.Option("sequential", "--scheme", help="sequential | parallel | random")
STEPS = typer.Option(10, "--steps", min=0)
SEED = typer.Option(None, "--seed", min=0, help="Defaults to random_seed from the engine config")
OUT = typer.Option(None, "--out", help="Output directory (default CAUSAL_FORGE_OUTPUT_DIR)")
FORMATS = typer.Option("json,dot,csv", "--formats", help="Comma separated subset of json,dot,csv")


def _guarded(command: str, output_dir: str, action: Callable[[], dict]) -> None:
    from src.cli import write_error

    try:
        manifest = action()
    except CausalForgeError as e:
        logger.error(f"{command} failed: {e}")
        os.makedirs(output_dir, exist_ok=True)
        write_error(output_dir, e.to_payload())
        raise typer.Exit(code=e.exit_code)
    typer.echo(f"{manifest['command']}: {manifest['summary']}")


def _execute(command: str, out: Optional[str], formats: str, **options) -> None:
    from src.cli import build_run_config, run

    setup_logging(level=config.LOG_LEVEL)
    output_dir = out or str(config.OUTPUT_DIR)

    def action() -> dict:
        cfg = build_run_config(
            command=command,
            output_dir=output_dir,
            formats=[f.strip() for f in formats.split(",") if f.strip()],
            **options,
        )
        return run(cfg)

    _guarded(command, output_dir, action)


@app.command()
def evolve(rule: str = RULE, init: str = INIT, scheme: str = SCHEME, steps: int = STEPS,
           seed: Optional[int] = SEED, out: Optional[str] = OUT, formats: str = FORMATS):
    """Evolve a system and write its trace and causal graph."""
    _execute("evolve", out, formats, rule=rule, init=init, scheme=scheme, steps=steps, seed=seed)


@app.command()
def multiway(rule: str = RULE, init: str = INIT,
             depth: int = typer.Option(4, "--depth", min=0),
             variant: Optional[str] = typer.Option(None, "--variant", help="local | semi | strong | diamond | global"),
             out: Optional[str] = OUT, formats: str = FORMATS):
    """Explore the multiway graph and check confluence."""
    _execute("multiway", out, formats, rule=rule, init=init, depth=depth, variant=variant)


@app.command("causal-invariance")
def causal_invariance(rule: str = RULE, init: str = INIT,
                      depth: int = typer.Option(4, "--depth", min=0),
                      out: Optional[str] = OUT, formats: str = FORMATS):
    """Decide causal invariance up to a generation depth."""
    _execute("causal-invariance", out, formats, rule=rule, init=init, depth=depth)


@app.command()
def boost(rule: str = RULE, init: str = INIT, scheme: str = SCHEME, steps: int = STEPS, seed: Optional[int] = SEED,
          velocity: str = typer.Option("0", "--velocity", help="Speed in [0, 1), e.g. 5/13 or 0.3"),
          direction: str = typer.Option("1", "--direction", help="Comma separated direction vector"),
          out: Optional[str] = OUT, formats: str = FORMATS):
    """Refoliate the causal graph of an evolution under a boost."""
    try:
        vector = [int(c) for c in direction.split(",") if c.strip()]
    except ValueError:
        raise typer.BadParameter(f"direction must be integers, got {direction!r}")
    _execute("boost", out, formats, rule=rule, init=init, scheme=scheme, steps=steps, seed=seed,
             velocity=velocity, direction=vector)


@app.command()
def curvature(graph: str = GRAPH,
              laziness: Optional[float] = typer.Option(None, "--laziness", min=0.0, max=0.999),
              hyperedges: bool = typer.Option(False, "--hyperedges", help="Directed curvature per hyperedge"),
              out: Optional[str] = OUT, formats: str = FORMATS):
    """Ollivier-Ricci curvature of every skeleton edge."""
    _execute("curvature", out, formats, graph=graph, laziness=laziness, hyperedges=hyperedges)


@app.command()
def dimension(graph: Optional[str] = GRAPH, rule: Optional[str] = RULE, init: Optional[str] = INIT,
              scheme: str = SCHEME, steps: int = STEPS, seed: Optional[int] = SEED,
              center: int = typer.Option(0, "--center", help="Ball centre vertex or cone apex event"),
              r_max: int = typer.Option(10, "--r-max", min=1),
              window: Optional[str] = typer.Option(None, "--window", help="lo,hi radii"),
              offset: Optional[float] = typer.Option(None, "--offset"),
              out: Optional[str] = OUT, formats: str = FORMATS):
    """Ball-growth (or causal cone) dimension with curvature correction."""
    bounds = None
    if window:
        try:
            lo, hi = (int(x) for x in window.split(","))
        except ValueError:
            raise typer.BadParameter(f"window must look like lo,hi, got {window!r}")
        bounds = (lo, hi)
    _execute("dimension", out, formats, graph=graph, rule=rule, init=init, scheme=scheme, steps=steps,
             seed=seed, center=center, r_max=r_max, window=bounds, offset=offset)


@app.command()
def planarity(graph: str = GRAPH, out: Optional[str] = OUT, formats: str = FORMATS):
    """Planarity with a verified Kuratowski witness, plus a tangle count."""
    _execute("planarity", out, formats, graph=graph)


@app.command()
def bundle(graph: str = GRAPH,
           seeds: List[str] = typer.Option(..., "--ray", help="start,direction (repeat for each ray)"),
           steps: int = STEPS, out: Optional[str] = OUT, formats: str = FORMATS):
    """Separation profile of a geodesic bundle."""
    pairs = []
    for s in seeds:
        try:
            a, b = (int(x) for x in s.split(","))
        except ValueError:
            raise typer.BadParameter(f"ray must look like start,direction, got {s!r}")
        pairs.append((a, b))
    _execute("bundle", out, formats, graph=graph, seeds=pairs, steps=steps)


@app.command()
def rerun(manifest: str = typer.Argument(..., help="manifest.json written by an earlier run"),
          out: Optional[str] = OUT):
    """Repeat a run from its manifest alone."""
    from src.cli import rerun_manifest

    setup_logging(level=config.LOG_LEVEL)
    error_dir = out or os.path.dirname(os.path.abspath(manifest))
    _guarded("rerun", error_dir, lambda: rerun_manifest(manifest, out))


def version_callback(value: bool):
    if value:
        from src.cli import VERSION

        typer.echo(f"causal-forge v{VERSION}")
        raise typer.Exit()


@app.callback()
def main(
    version: bool = typer.Option(
        None, "--version", callback=version_callback, is_eager=True, help="Show the CLI version"
    ),
    config_path: Optional[str] = typer.Option(None, "--config", help="Engine settings YAML"),
):
    if config_path:
        config.CONFIG_PATH = Path(config_path)
        config.get_settings.cache_clear()
        try:
            config.get_settings()
        except CausalForgeError as e:
            typer.echo(str(e), err=True)
            raise typer.Exit(code=EXIT_CONFIG)


if __name__ == "__main__":
    app()
