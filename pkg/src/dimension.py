# ============================================================
# src/dimension.py
# Growth series N(r) / C(t), dimension estimates, curvature-corrected
# fits and the global dimension anomaly
# ============================================================
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import networkx as nx
import numpy as np
import pandas as pd
from joblib import Parallel, delayed
from scipy.optimize import least_squares

from src.causal.graph import CausalGraph
from src.errors import FitError, InputError
from src.hypercore import Hypergraph, VertexId, ball_counts
from src.transport.curvature import scalar_curvature

logger = logging.getLogger(__name__)

SPATIAL = "spatial"
CAUSAL = "causal"


@dataclass(frozen=True)
class GrowthSeries:
    radii: Tuple[int, ...]
    counts: Tuple[float, ...]
    kind: str = SPATIAL

    def __post_init__(self):
        if len(self.radii) != len(self.counts):
            raise InputError("Growth series radii and counts differ in length")
        if self.kind not in (SPATIAL, CAUSAL):
            raise InputError(f"Unknown growth series kind {self.kind!r}")
        if any(b <= a for a, b in zip(self.radii, self.radii[1:])):
            raise InputError("Growth series radii must be strictly ascending")
        if any(c <= 0 for c in self.counts):
            raise InputError("Growth series counts must be positive")
        if any(b < a for a, b in zip(self.counts, self.counts[1:])):
            raise InputError("Growth series counts must be nondecreasing")

    def count_at(self, r: int) -> float:
        return self.counts[self.radii.index(r)]

    def restrict(self, window: Tuple[int, int]) -> "GrowthSeries":
        lo, hi = window
        pairs = [(r, c) for r, c in zip(self.radii, self.counts) if lo <= r <= hi]
        return GrowthSeries(tuple(r for r, _ in pairs), tuple(c for _, c in pairs), self.kind)

    def to_frame(self) -> pd.DataFrame:
        column = "N" if self.kind == SPATIAL else "C"
        label = "r" if self.kind == SPATIAL else "t"
        return pd.DataFrame({label: list(self.radii), column: list(self.counts)})


def ball_series(h: Hypergraph, center: VertexId, r_max: int, directed: bool = False) -> GrowthSeries:
    counts = ball_counts(h, center, r_max, directed)
    return GrowthSeries(tuple(range(r_max + 1)), tuple(float(c) for c in counts), SPATIAL)


def mean_ball_series(h: Hypergraph, centers: Sequence[VertexId], r_max: int,
                     n_jobs: Optional[int] = None) -> GrowthSeries:
    """N(r) averaged over several centres."""
    if not centers:
        raise InputError("At least one centre is required")
    if n_jobs is None:
        from src.config import get_settings

        n_jobs = get_settings().threads
    if n_jobs > 1 and len(centers) > 1:
        rows = Parallel(n_jobs=n_jobs, backend="threading")(
            delayed(ball_counts)(h, c, r_max) for c in centers
        )
    else:
        rows = [ball_counts(h, c, r_max) for c in centers]
    mean = np.mean(np.asarray(rows, dtype=float), axis=0)
    return GrowthSeries(tuple(range(r_max + 1)), tuple(float(x) for x in mean), SPATIAL)


def cone_counts(cg: CausalGraph, apex: int, t_max: int) -> GrowthSeries:
    """C(t): events within t causal hops in the future of apex."""
    cg.require(apex)
    if t_max < 0:
        raise InputError(f"t_max must be >= 0, got {t_max}")
    dist = nx.single_source_shortest_path_length(cg.digraph, apex, cutoff=t_max)
    shells = [0] * (t_max + 1)
    for d in dist.values():
        shells[d] += 1
    counts = np.cumsum(shells)
    return GrowthSeries(tuple(range(t_max + 1)), tuple(float(c) for c in counts), CAUSAL)


def _default_offset(series: GrowthSeries, offset: Optional[float]) -> float:
    if offset is not None:
        return offset
    from src.config import get_settings

    dim = get_settings().dimension
    return dim.spatial_offset if series.kind == SPATIAL else dim.causal_offset


def choose_window(series: GrowthSeries, r_min: Optional[int] = None) -> Tuple[int, int]:
    """Drop r < r_min (lattice artefacts) and radii where the ball has stopped growing."""
    if r_min is None:
        from src.config import get_settings

        r_min = get_settings().dimension.min_radius
    counts = series.counts
    exhausted = len(counts) > 1 and counts[-1] == counts[-2]
    usable = [
        r for i, (r, c) in enumerate(zip(series.radii, counts))
        if r >= r_min and i > 0 and c > counts[i - 1] and not (exhausted and c == counts[-1])
    ]
    if not usable and series.radii and series.radii[-1] >= r_min:
        usable = [r for r in series.radii if r >= r_min]
    if len(usable) < 2:
        raise FitError(f"Growth series has fewer than two usable radii above r={r_min}")
    # keep the leading contiguous run
    hi = usable[0]
    for r in usable[1:]:
        if r != hi + 1:
            break
        hi = r
    return usable[0], hi


@dataclass(frozen=True)
class LogDimension:
    per_radius: Tuple[Tuple[int, int, float], ...]
    slope: float
    window: Tuple[int, int]
    offset: float

    def to_dict(self) -> dict:
        return {
            "window": list(self.window),
            "offset": self.offset,
            "slope": self.slope,
            "per_radius": [{"r1": a, "r2": b, "n": n} for a, b, n in self.per_radius],
        }


def log_dimension(series: GrowthSeries, window: Optional[Tuple[int, int]] = None,
                  offset: Optional[float] = None) -> LogDimension:
    """n(r) = log(N(r2)/N(r1)) / log(rho2/rho1) with rho = r + offset, plus the aggregate slope."""
    offset = _default_offset(series, offset)
    window = window or choose_window(series)
    sub = series.restrict(window)
    if len(sub.radii) < 2:
        raise FitError(f"Window {window} holds fewer than two radii")
    rho = np.asarray(sub.radii, dtype=float) + offset
    counts = np.asarray(sub.counts, dtype=float)
    if np.any(rho <= 0) or np.any(counts <= 0):
        raise FitError("Log dimension needs positive radii and counts", window=list(window))
    per_radius = []
    for i in range(len(rho) - 1):
        n = math.log(counts[i + 1] / counts[i]) / math.log(rho[i + 1] / rho[i])
        per_radius.append((sub.radii[i], sub.radii[i + 1], n))
    slope = float(np.polyfit(np.log(rho), np.log(counts), 1)[0])
    return LogDimension(tuple(per_radius), slope, tuple(window), offset)


# ============================================================
# Curvature-corrected fit: N = a rho^n (1 - R rho^2 / (6 (n + 2)))
# ============================================================
@dataclass(frozen=True)
class DimensionFit:
    n_hat: float
    a_hat: float
    R_hat: Optional[float]
    residual: float
    window: Tuple[int, int]
    offset: float = 0.0
    nfev: int = 0
    kind: str = SPATIAL

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "n_hat": self.n_hat,
            "a_hat": self.a_hat,
            "R_hat": self.R_hat,
            "residual": self.residual,
            "window": list(self.window),
            "offset": self.offset,
            "nfev": self.nfev,
        }


def _model(params: np.ndarray, rho: np.ndarray) -> np.ndarray:
    a, n, R = params
    return a * rho ** n * (1.0 - R * rho ** 2 / (6.0 * (n + 2.0)))


def _jacobian(params: np.ndarray, rho: np.ndarray, counts: np.ndarray) -> np.ndarray:
    a, n, R = params
    power = rho ** n
    k = 6.0 * (n + 2.0)
    corr = 1.0 - R * rho ** 2 / k
    d_a = power * corr
    d_n = a * power * (np.log(rho) * corr + R * rho ** 2 * 6.0 / k ** 2)
    d_R = -a * power * rho ** 2 / k
    return np.column_stack([d_a, d_n, d_R]) / counts[:, None]


def fit_curvature_correction(series: GrowthSeries, window: Optional[Tuple[int, int]] = None,
                             offset: Optional[float] = None, max_nfev: Optional[int] = None,
                             gtol: Optional[float] = None) -> DimensionFit:
    """Levenberg-Marquardt fit of (a, n, R) on relative residuals model/N - 1."""
    from src.config import get_settings

    dim = get_settings().dimension
    max_nfev = max_nfev or dim.max_nfev
    gtol = gtol or dim.gtol
    offset = _default_offset(series, offset)
    window = window or choose_window(series)
    sub = series.restrict(window)
    if len(sub.radii) < 4:
        raise FitError(f"Curvature fit needs at least 4 radii, window {window} has {len(sub.radii)}")

    rho = np.asarray(sub.radii, dtype=float) + offset
    counts = np.asarray(sub.counts, dtype=float)
    n0 = log_dimension(sub, window, offset).slope
    a0 = counts[0] / rho[0] ** n0
    x0 = np.array([a0, n0, 0.0])

    def residuals(p):
        return _model(p, rho) / counts - 1.0

    res = least_squares(residuals, x0, jac=lambda p: _jacobian(p, rho, counts), method="lm",
                        max_nfev=max_nfev, gtol=gtol)
    a, n, R = (float(v) for v in res.x)
    residual = float(np.sqrt(np.mean(res.fun ** 2)))
    best = {"a": a, "n": n, "R": R, "residual": residual}
    if res.status <= 0 or not all(math.isfinite(v) for v in (a, n, R)):
        logger.warning(f"Curvature fit did not converge: {res.message}")
        raise FitError(f"Curvature fit did not converge within {max_nfev} evaluations", best=best)
    logger.info(f"Dimension fit on {window}: n={n:.4f}, R={R:.4g}, residual={residual:.3g}")
    return DimensionFit(n, a, R, residual, tuple(window), offset, int(res.nfev), series.kind)


# ============================================================
# Global dimension anomaly
# ============================================================
@dataclass(frozen=True)
class AnomalyReport:
    total: float
    per_vertex: Dict[VertexId, float]
    flagged: Tuple[VertexId, ...] = field(default=())

    @property
    def mean(self) -> float:
        return self.total / max(1, len(self.per_vertex))

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            [(v, k, v in self.flagged) for v, k in sorted(self.per_vertex.items())],
            columns=["vertex", "scalar_curvature", "flagged"],
        )

    def to_dict(self) -> dict:
        return {
            "total": self.total,
            "mean": self.mean,
            "flagged": list(self.flagged),
            "per_vertex": {str(v): k for v, k in sorted(self.per_vertex.items())},
        }


def dimension_anomaly(h: Hypergraph, sample: Optional[Iterable[VertexId]] = None,
                      n_jobs: Optional[int] = None) -> AnomalyReport:
    """Sum over the sample of the mean kappa from each vertex to its neighbours."""
    sample = h.vertices() if sample is None else sorted(set(sample))
    if not sample:
        raise InputError("Dimension anomaly needs a non-empty vertex sample")
    for v in sample:
        h.require_vertex(v)
    if n_jobs is None:
        from src.config import get_settings

        n_jobs = get_settings().threads
    if n_jobs > 1 and len(sample) > 1:
        values = Parallel(n_jobs=n_jobs, backend="threading")(delayed(scalar_curvature)(h, v) for v in sample)
    else:
        values = [scalar_curvature(h, v) for v in sample]
    per_vertex: Dict[VertexId, float] = {}
    flagged: List[VertexId] = []
    for v, k in zip(sample, values):
        if k is None:
            flagged.append(v)
            per_vertex[v] = 0.0
        else:
            per_vertex[v] = float(k)
    if flagged:
        logger.warning(f"{len(flagged)} sampled vertices have no neighbours and contribute 0")
    total = float(sum((Fraction(k) if k is not None else Fraction(0) for k in values), Fraction(0)))
    return AnomalyReport(total, per_vertex, tuple(flagged))
