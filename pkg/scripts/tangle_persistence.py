# ============================================================
# scripts/tangle_persistence.py
# Evolve a hypergraph system and count Kuratowski tangles in the
# skeleton after every step
# ============================================================
import argparse
import logging
import os
import sys
from pathlib import Path

import pandas as pd

sys.path.append(os.path.abspath(os.path.join(os.path.dirname(__file__), "..")))

from src.cli import parse_state, read_rules
from src.errors import InputError
from src.geometry import count_tangles
from src.rewrite import make_system, run_system
from src.utils import setup_logging
from src.utils.exporters import write_csv

logger = logging.getLogger(__name__)


def tangle_series(rule: str, init: str, steps: int, scheme: str = "sequential", seed: int = 0) -> pd.DataFrame:
    system = make_system(read_rules(rule))
    if system.kind != "hypergraph":
        raise InputError("Tangle persistence needs hypergraph rules")
    trace = run_system(system, parse_state(init), scheme, steps, seed)

    rows = []
    state = trace.initial
    events = list(trace.events)
    for step in range(steps + 1):
        if step > 0:
            batch = [e for e in events if e.step == step - 1]
            if not batch:
                break
            for e in batch:
                state = system.replay(state, e)
        report = count_tangles(state)
        rows.append({
            "step": step,
            "edges": len(state.edges),
            "vertices": len(state.vertices()),
            "tangles": report.count,
            "kinds": ",".join(w.kind for w in report.witnesses),
        })
    return pd.DataFrame(rows, columns=["step", "edges", "vertices", "tangles", "kinds"])


def main():
    ap = argparse.ArgumentParser(description="Tangle count per evolution step")
    ap.add_argument("--rule", required=True)
    ap.add_argument("--init", required=True)
    ap.add_argument("--steps", type=int, default=10)
    ap.add_argument("--scheme", default="sequential", choices=["sequential", "parallel", "random"])
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", default="outputs/tangles.csv")
    args = ap.parse_args()

    setup_logging()
    df = tangle_series(args.rule, args.init, args.steps, args.scheme, args.seed)
    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    write_csv(args.out, df)
    logger.info(f"Wrote {len(df)} rows to {args.out}")


if __name__ == "__main__":
    main()
