# src/utils/exporters.py
"""DOT and CSV writers for multiway graphs, causal graphs and tangles."""
from __future__ import annotations

import os
from typing import Iterable, List, Optional

import pandas as pd

from src.causal.foliation import Foliation
from src.causal.graph import CausalGraph
from src.geometry import KuratowskiWitness
from src.hypercore import Hypergraph
from src.multiway import MultiwayGraph


def _quote(s: str) -> str:
    return '"' + str(s).replace("\\", "\\\\").replace('"', '\\"') + '"'


def multiway_dot(mw: MultiwayGraph) -> str:
    lines = ["digraph multiway {", "  rankdir=TB;"]
    for key in sorted(mw.states):
        lines.append(f"  {_quote(mw.node_label(key))} [rank={mw.depth[key]}];")
    for a, b, label in sorted(mw.transitions):
        lines.append(f"  {_quote(mw.node_label(a))} -> {_quote(mw.node_label(b))} [label={_quote(label)}];")
    lines.append("}")
    return "\n".join(lines) + "\n"


def causal_dot(cg: CausalGraph, foliation: Optional[Foliation] = None) -> str:
    lines = ["digraph causal {", "  rankdir=TB;"]
    if foliation is not None:
        for k, members in enumerate(foliation.slices):
            ids = " ".join(str(e) for e in members)
            lines.append(f"  {{ rank=same; {ids} }}  // layer {k}")
    for e in cg.events:
        lines.append(f"  {e};")
    for a, b in sorted(cg.edges):
        lines.append(f"  {a} -> {b};")
    lines.append("}")
    return "\n".join(lines) + "\n"


def tangle_dot(h: Hypergraph, witnesses: Iterable[KuratowskiWitness]) -> str:
    marked = {e for w in witnesses for e in w.edges}
    lines = ["graph skeleton {"]
    for v in h.vertices():
        lines.append(f"  {v};")
    for a, b in sorted(h.skeleton().edges()):
        a, b = min(a, b), max(a, b)
        style = " [color=red, penwidth=2]" if (a, b) in marked else ""
        lines.append(f"  {a} -- {b}{style};")
    lines.append("}")
    return "\n".join(lines) + "\n"


def write_text(path: str, text: str) -> str:
    os.makedirs(os.path.dirname(str(path)) or ".", exist_ok=True)
    tmp = f"{path}.tmp"
    with open(tmp, "w", encoding="utf-8", newline="\n") as f:
        f.write(text)
    os.replace(tmp, path)
    return str(path)


def write_csv(path: str, df: pd.DataFrame) -> str:
    os.makedirs(os.path.dirname(str(path)) or ".", exist_ok=True)
    df.to_csv(path, index=False, encoding="utf-8", lineterminator="\n")
    return str(path)


__all__: List[str] = ["multiway_dot", "causal_dot", "tangle_dot", "write_text", "write_csv"]
