# ============================================================
# src/transport/wasserstein.py
# 1-Wasserstein distance between vertex measures by min-cost flow
# ============================================================
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, List, Optional, Tuple, Union

import networkx as nx
import numpy as np
from scipy.optimize import linprog

from src.errors import TransportInfeasibleError
from src.hypercore import INF, Hypergraph, VertexId
from src.transport.measures import DiscreteMeasure, Mass

logger = logging.getLogger(__name__)

Coupling = Dict[Tuple[VertexId, VertexId], Mass]


@dataclass(frozen=True)
class TransportPlan:
    cost: Mass
    coupling: Coupling
    exact: bool
    method: str

    def to_dict(self) -> dict:
        def enc(v):
            return str(v) if isinstance(v, Fraction) else v

        return {
            "cost": enc(self.cost),
            "exact": self.exact,
            "method": self.method,
            "coupling": [[u, v, enc(m)] for (u, v), m in sorted(self.coupling.items())],
        }


def ground_costs(h: Hypergraph, mu: DiscreteMeasure, nu: DiscreteMeasure,
                 directed: bool = False) -> List[List[int]]:
    """Hop distances from every source point to every target point."""
    rows = []
    for u in mu.support:
        dist = h.bfs_distances(u, directed=directed)
        row = []
        for v in nu.support:
            d = dist.get(v, INF)
            if d == INF:
                raise TransportInfeasibleError(f"No path from {u} to {v}", source=u, target=v)
            row.append(d)
        rows.append(row)
    return rows


def _ssp_transport(supply: List[Fraction], demand: List[Fraction],
                   cost: List[List[int]]) -> Dict[Tuple[int, int], Fraction]:
    """Successive shortest augmenting paths on the bipartite residual network.

    Bellman-Ford handles the negative reverse arcs; masses stay rational.
    """
    n, m = len(supply), len(demand)
    flow = [[Fraction(0)] * m for _ in range(n)]
    left = list(supply)
    need = list(demand)
    while any(s > 0 for s in left):
        dist = [math.inf] * (n + m)
        prev: List[Optional[int]] = [None] * (n + m)
        for i in range(n):
            if left[i] > 0:
                dist[i] = 0
        for _ in range(n + m):
            changed = False
            for i in range(n):
                if dist[i] == math.inf:
                    continue
                for j in range(m):
                    nd = dist[i] + cost[i][j]
                    if nd < dist[n + j]:
                        dist[n + j], prev[n + j] = nd, i
                        changed = True
            for j in range(m):
                if dist[n + j] == math.inf:
                    continue
                for i in range(n):
                    if flow[i][j] > 0 and dist[n + j] - cost[i][j] < dist[i]:
                        dist[i], prev[i] = dist[n + j] - cost[i][j], n + j
                        changed = True
            if not changed:
                break
        sinks = [j for j in range(m) if need[j] > 0 and dist[n + j] < math.inf]
        target = min(sinks, key=lambda j: (dist[n + j], j))
        # walk back to a source with spare supply (the only nodes without a predecessor)
        path = []
        node = n + target
        while prev[node] is not None:
            path.append((prev[node], node))
            node = prev[node]
        start = node
        amount = min(left[start], need[target])
        for a, b in path:
            if a >= n:  # reverse arc sink a -> source b
                amount = min(amount, flow[b][a - n])
        for a, b in path:
            if a < n:
                flow[a][b - n] += amount
            else:
                flow[b][a - n] -= amount
        left[start] -= amount
        need[target] -= amount
    return {(i, j): flow[i][j] for i in range(n) for j in range(m) if flow[i][j] > 0}


def _network_simplex(supply: List[Fraction], demand: List[Fraction],
                     cost: List[List[int]]) -> Dict[Tuple[int, int], Fraction]:
    """Integer network simplex after scaling rational masses by their common denominator."""
    scale = math.lcm(*[q.denominator for q in supply + demand])
    g = nx.DiGraph()
    for i, s in enumerate(supply):
        g.add_node(("s", i), demand=-int(s * scale))
    for j, d in enumerate(demand):
        g.add_node(("t", j), demand=int(d * scale))
    for i in range(len(supply)):
        for j in range(len(demand)):
            g.add_edge(("s", i), ("t", j), weight=cost[i][j])
    _, flow = nx.network_simplex(g)
    out = {}
    for i in range(len(supply)):
        for j, f in flow[("s", i)].items():
            if f:
                out[(i, j[1])] = Fraction(f, scale)
    return out


def _linprog(supply: List[float], demand: List[float], cost: List[List[int]]) -> Dict[Tuple[int, int], float]:
    n, m = len(supply), len(demand)
    c = np.asarray(cost, dtype=float).reshape(-1)
    a_eq = np.zeros((n + m, n * m))
    for i in range(n):
        a_eq[i, i * m:(i + 1) * m] = 1.0
    for j in range(m):
        a_eq[n + j, j::m] = 1.0
    b_eq = np.concatenate([np.asarray(supply, dtype=float), np.asarray(demand, dtype=float)])
    res = linprog(c, A_eq=a_eq, b_eq=b_eq, bounds=(0, None), method="highs",
                  options={"primal_feasibility_tolerance": 1e-10})
    if not res.success:
        raise TransportInfeasibleError(f"Transport LP failed: {res.message}")
    x = res.x.reshape(n, m)
    return {(i, j): float(x[i, j]) for i in range(n) for j in range(m) if x[i, j] > 1e-15}


def wasserstein1(h: Hypergraph, mu: DiscreteMeasure, nu: DiscreteMeasure, directed: bool = False,
                 float_threshold: Optional[int] = None) -> TransportPlan:
    """Exact W1 under the hop metric, with the optimal coupling."""
    if float_threshold is None:
        from src.config import get_settings

        float_threshold = get_settings().transport.float_threshold
    cost = ground_costs(h, mu, nu, directed)
    exact = mu.exact and nu.exact
    if exact:
        supply = [Fraction(m) for m in mu.mass]
        demand = [Fraction(m) for m in nu.mass]
        if max(len(mu), len(nu)) > float_threshold:
            method, raw = "network_simplex", _network_simplex(supply, demand, cost)
        else:
            method, raw = "ssp", _ssp_transport(supply, demand, cost)
    else:
        method, raw = "linprog", _linprog([float(m) for m in mu.mass], [float(m) for m in nu.mass], cost)
    coupling: Coupling = {}
    total: Union[Fraction, float] = Fraction(0) if exact else 0.0
    for (i, j), f in raw.items():
        u, v = mu.support[i], nu.support[j]
        coupling[(u, v)] = coupling.get((u, v), 0) + f
        total += cost[i][j] * f
    logger.debug(f"W1 via {method}: {len(mu)}x{len(nu)} support, cost {total}")
    return TransportPlan(total, coupling, exact, method)


def coupling_marginals(coupling: Coupling) -> Tuple[Dict[VertexId, Mass], Dict[VertexId, Mass]]:
    rows: Dict[VertexId, Mass] = {}
    cols: Dict[VertexId, Mass] = {}
    for (u, v), m in coupling.items():
        rows[u] = rows.get(u, 0) + m
        cols[v] = cols.get(v, 0) + m
    return rows, cols
