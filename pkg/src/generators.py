# ============================================================
# src/generators.py
# Fixture hypergraphs: lattices, tori, trees, sphere-like meshes,
# hyperbolic patches and seeded random graphs
# ============================================================
from __future__ import annotations

import cmath
import logging
import math
import random
from collections import deque
from typing import Dict, Iterable, List, Sequence, Tuple

import networkx as nx
import numpy as np

from src.errors import InputError
from src.hypercore import Hypergraph

logger = logging.getLogger(__name__)


def from_networkx(g: nx.Graph) -> Hypergraph:
    """Binary hypergraph of a simple graph; nodes renumbered 0.. in sorted order."""
    g = nx.convert_node_labels_to_integers(g, ordering="sorted")
    edges = sorted(tuple(sorted(e)) for e in g.edges() if e[0] != e[1])
    isolated = [v for v in g.nodes() if g.degree(v) == 0]
    return Hypergraph.from_edges(edges, isolated=isolated)


def from_edge_list(edges: Iterable[Tuple[int, int]]) -> Hypergraph:
    g = nx.Graph()
    g.add_edges_from(edges)
    return from_networkx(g)


def disjoint_union(*graphs: Hypergraph) -> Hypergraph:
    edges, isolated, offset = [], [], 0
    for h in graphs:
        edges.extend([v + offset for v in e.vertices] for e in h.edges)
        isolated.extend(v + offset for v in h.isolated)
        offset += max(h.vertex_set, default=-1) + 1
    return Hypergraph.from_edges(edges, isolated=isolated)


def _positive(name: str, value: int, minimum: int = 1) -> None:
    if value < minimum:
        raise InputError(f"{name} must be >= {minimum}, got {value}")


def path_graph(n: int) -> Hypergraph:
    _positive("n", n, 2)
    return from_networkx(nx.path_graph(n))


def cycle_graph(n: int) -> Hypergraph:
    _positive("n", n, 3)
    return from_networkx(nx.cycle_graph(n))


def grid_graph(w: int, h: int) -> Hypergraph:
    """w x h grid; vertex (i, j) is numbered i * h + j."""
    _positive("w", w)
    _positive("h", h)
    return from_networkx(nx.grid_2d_graph(w, h))


def torus_graph(w: int, h: int) -> Hypergraph:
    """Periodic w x h grid; vertex (i, j) is numbered i * h + j."""
    _positive("w", w, 3)
    _positive("h", h, 3)
    return from_networkx(nx.grid_2d_graph(w, h, periodic=True))


def torus_3d(n: int) -> Hypergraph:
    _positive("n", n, 3)
    return from_networkx(nx.grid_graph(dim=[n, n, n], periodic=True))


def complete_graph(n: int) -> Hypergraph:
    _positive("n", n, 2)
    return from_networkx(nx.complete_graph(n))


def complete_bipartite(a: int, b: int) -> Hypergraph:
    _positive("a", a)
    _positive("b", b)
    return from_networkx(nx.complete_bipartite_graph(a, b))


def regular_tree(degree: int, depth: int) -> Hypergraph:
    """Every internal vertex (root included) has `degree` neighbours; root is 0."""
    _positive("degree", degree, 2)
    _positive("depth", depth)
    edges = []
    frontier, nxt = [0], 1
    for level in range(depth):
        new = []
        for v in frontier:
            for _ in range(degree if level == 0 else degree - 1):
                edges.append((v, nxt))
                new.append(nxt)
                nxt += 1
        frontier = new
    return Hypergraph.from_edges(edges)


def binary_tree(depth: int) -> Hypergraph:
    """Root 0 with two children; internal vertices have degree 3."""
    _positive("depth", depth)
    return from_networkx(nx.balanced_tree(2, depth))


# ============================================================
# Sphere-like meshes
# ============================================================
def _icosahedron() -> Tuple[np.ndarray, List[Tuple[int, int, int]]]:
    phi = (1 + math.sqrt(5)) / 2
    pts = np.array([
        (-1, phi, 0), (1, phi, 0), (-1, -phi, 0), (1, -phi, 0),
        (0, -1, phi), (0, 1, phi), (0, -1, -phi), (0, 1, -phi),
        (phi, 0, -1), (phi, 0, 1), (-phi, 0, -1), (-phi, 0, 1),
    ], dtype=float)
    faces = [
        (0, 11, 5), (0, 5, 1), (0, 1, 7), (0, 7, 10), (0, 10, 11),
        (1, 5, 9), (5, 11, 4), (11, 10, 2), (10, 7, 6), (7, 1, 8),
        (3, 9, 4), (3, 4, 2), (3, 2, 6), (3, 6, 8), (3, 8, 9),
        (4, 9, 5), (2, 4, 11), (6, 2, 10), (8, 6, 7), (9, 8, 1),
    ]
    return pts / np.linalg.norm(pts, axis=1)[:, None], faces


def _icosphere_triangles(freq: int) -> List[Tuple[int, int, int]]:
    _positive("freq", freq)
    corners, faces = _icosahedron()
    index: Dict[Tuple[int, int, int], int] = {}

    def vid(p: np.ndarray) -> int:
        p = p / np.linalg.norm(p)
        key = tuple(int(round(c * 1e6)) for c in p)
        if key not in index:
            index[key] = len(index)
        return index[key]

    for p in corners:
        vid(p)
    triangles = []
    for a, b, c in faces:
        A, B, C = corners[a], corners[b], corners[c]
        grid = {}
        for i in range(freq + 1):
            for j in range(freq + 1 - i):
                grid[(i, j)] = vid(A + (B - A) * i / freq + (C - A) * j / freq)
        for i in range(freq):
            for j in range(freq - i):
                triangles.append((grid[(i, j)], grid[(i + 1, j)], grid[(i, j + 1)]))
                if i + j + 2 <= freq:
                    triangles.append((grid[(i + 1, j)], grid[(i + 1, j + 1)], grid[(i, j + 1)]))
    return triangles


def geodesic_sphere(freq: int) -> Hypergraph:
    """Subdivided icosahedron: triangulated sphere with twelve degree-5 vertices (0..11)."""
    edges = set()
    for a, b, c in _icosphere_triangles(freq):
        edges.update({tuple(sorted((a, b))), tuple(sorted((b, c))), tuple(sorted((a, c)))})
    return Hypergraph.from_edges(sorted(edges))


def uv_sphere(rings: int, sectors: int) -> Hypergraph:
    """Latitude-longitude sphere: pole 0, rings of sectors vertices, pole rings * sectors + 1."""
    _positive("rings", rings)
    _positive("sectors", sectors, 3)
    south = rings * sectors + 1

    def at(r: int, b: int) -> int:
        return 1 + (r - 1) * sectors + b % sectors

    edges = [(0, at(1, b)) for b in range(sectors)]
    edges += [(at(rings, b), south) for b in range(sectors)]
    for r in range(1, rings + 1):
        edges += [(at(r, b), at(r, b + 1)) for b in range(sectors)]
        if r < rings:
            edges += [(at(r, b), at(r + 1, b)) for b in range(sectors)]
    return from_edge_list(edges)


def goldberg_sphere(freq: int) -> Hypergraph:
    """Dual of the geodesic sphere: trivalent hexagon mesh with exactly twelve pentagons."""
    triangles = _icosphere_triangles(freq)
    by_edge: Dict[Tuple[int, int], List[int]] = {}
    for t, (a, b, c) in enumerate(triangles):
        for e in ((a, b), (b, c), (a, c)):
            by_edge.setdefault(tuple(sorted(e)), []).append(t)
    edges = sorted(tuple(ts) for ts in by_edge.values() if len(ts) == 2)
    return Hypergraph.from_edges(edges)


# ============================================================
# Hyperbolic {7,3} patch in the Poincare disk
# ============================================================
def _reflect(z: complex, a: complex, b: complex) -> complex:
    """Reflection in the hyperbolic geodesic through a and b."""
    det = 2 * (a.real * b.imag - a.imag * b.real)
    if abs(det) < 1e-12:
        # geodesic is a diameter: Euclidean reflection in the line through 0
        u = a if abs(a) > abs(b) else b
        u = u / abs(u)
        return u * u * z.conjugate()
    ra, rb = abs(a) ** 2 + 1, abs(b) ** 2 + 1
    cx = (ra * b.imag - rb * a.imag) / det
    cy = (rb * a.real - ra * b.real) / det
    c = complex(cx, cy)
    r2 = abs(c) ** 2 - 1
    return c + r2 / (z - c).conjugate()


def heptagonal_patch(layers: int) -> Hypergraph:
    """{7,3} tiling grown `layers` reflections out from a central heptagon; vertex 0 is on it."""
    _positive("layers", layers)
    p, q = 7, 3
    circum = math.acosh(1 / (math.tan(math.pi / p) * math.tan(math.pi / q)))
    r0 = math.tanh(circum / 2)
    start = tuple(r0 * cmath.exp(2j * math.pi * k / p) for k in range(p))

    index: Dict[Tuple[int, int], int] = {}

    def vid(z: complex) -> int:
        key = (int(round(z.real * 1e8)), int(round(z.imag * 1e8)))
        if key not in index:
            index[key] = len(index)
        return index[key]

    def center_key(poly: Sequence[complex]) -> Tuple[int, int]:
        c = sum(poly) / len(poly)
        return int(round(c.real * 1e7)), int(round(c.imag * 1e7))

    seen = {center_key(start)}
    queue = deque([(start, 0)])
    edges = set()
    while queue:
        poly, depth = queue.popleft()
        ids = [vid(z) for z in poly]
        for k in range(p):
            edges.add(tuple(sorted((ids[k], ids[(k + 1) % p]))))
        if depth >= layers:
            continue
        for k in range(p):
            a, b = poly[k], poly[(k + 1) % p]
            image = tuple(_reflect(z, a, b) for z in poly)
            key = center_key(image)
            if key not in seen:
                seen.add(key)
                queue.append((image, depth + 1))
    logger.debug(f"Heptagonal patch: {len(seen)} faces, {len(index)} vertices")
    return Hypergraph.from_edges(sorted(edges))


# ============================================================
# Seeded random graphs
# ============================================================
def random_planar_triangulation(n: int, seed: int = 0) -> Hypergraph:
    """Stacked triangulation: each new vertex goes inside a uniformly chosen face."""
    _positive("n", n, 3)
    rng = random.Random(seed)
    faces = [(0, 1, 2)]
    edges = {(0, 1), (1, 2), (0, 2)}
    for v in range(3, n):
        a, b, c = faces.pop(rng.randrange(len(faces)))
        faces.extend([(a, b, v), (b, c, v), (a, c, v)])
        edges.update({(a, v), (b, v), (c, v)})
    return Hypergraph.from_edges(sorted(edges))


def random_connected_graph(n: int, p: float = 0.2, seed: int = 0) -> Hypergraph:
    """Random spanning tree plus independent extra edges with probability p."""
    _positive("n", n, 2)
    rng = random.Random(seed)
    edges = set()
    for v in range(1, n):
        edges.add((rng.randrange(v), v))
    for u in range(n):
        for v in range(u + 1, n):
            if (u, v) not in edges and rng.random() < p:
                edges.add((u, v))
    return Hypergraph.from_edges(sorted(edges))


GENERATORS = {
    "path": path_graph,
    "cycle": cycle_graph,
    "grid": grid_graph,
    "torus": torus_graph,
    "torus3d": torus_3d,
    "complete": complete_graph,
    "bipartite": complete_bipartite,
    "tree": regular_tree,
    "binary_tree": binary_tree,
    "sphere": geodesic_sphere,
    "uvsphere": uv_sphere,
    "goldberg": goldberg_sphere,
    "heptagonal": heptagonal_patch,
    "triangulation": random_planar_triangulation,
    "random": random_connected_graph,
}
