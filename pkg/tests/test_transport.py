import random
from fractions import Fraction

import numpy as np
import pytest
from scipy.optimize import linprog

from src.errors import DegenerateGeometryError, DomainError, InputError, TransportInfeasibleError, UnreachableError
from src.generators import (
    binary_tree,
    complete_graph,
    cycle_graph,
    geodesic_sphere,
    grid_graph,
    path_graph,
    random_connected_graph,
    regular_tree,
)
from src.hypercore import Hypergraph
from src.transport import (
    DiscreteMeasure,
    coupling_marginals,
    curvature_table,
    holonomy,
    hyperedge_curvature_table,
    hyperedge_measures,
    ollivier_ricci_hyperedge,
    ollivier_ricci_pair,
    parallel_transport,
    ricci_direction,
    scalar_curvature,
    sectional_curvature,
    uniform_ball_measure,
    wasserstein1,
)
from src.transport.wasserstein import ground_costs


def _random_measure(rng: random.Random, vertices, max_support: int = 4) -> DiscreteMeasure:
    support = rng.sample(vertices, rng.randint(1, min(max_support, len(vertices))))
    weights = [rng.randint(1, 9) for _ in support]
    total = sum(weights)
    return DiscreteMeasure.from_dict({v: Fraction(w, total) for v, w in zip(support, weights)})


def _lp_oracle(h, mu, nu) -> float:
    cost = np.asarray(ground_costs(h, mu, nu), dtype=float)
    n, m = cost.shape
    a_eq = np.zeros((n + m, n * m))
    for i in range(n):
        a_eq[i, i * m:(i + 1) * m] = 1.0
    for j in range(m):
        a_eq[n + j, j::m] = 1.0
    b_eq = np.array([float(x) for x in mu.mass + nu.mass])
    res = linprog(cost.reshape(-1), A_eq=a_eq, b_eq=b_eq, bounds=(0, None), method="highs")
    assert res.success
    return float(res.fun)


def test_measure_validation():
    """Masses must be non-negative, sum to one and sit on distinct vertices."""
    with pytest.raises(InputError):
        DiscreteMeasure((0, 1), (Fraction(1, 2), Fraction(1, 3)))
    with pytest.raises(InputError):
        DiscreteMeasure((0, 0), (Fraction(1, 2), Fraction(1, 2)))
    with pytest.raises(InputError):
        DiscreteMeasure((0, 1), (Fraction(3, 2), Fraction(-1, 2)))
    assert DiscreteMeasure((0, 1), (0.25, 0.75)).exact is False


def test_uniform_ball_measure_with_laziness():
    """Laziness a keeps mass a at the centre and spreads the rest evenly."""
    h = cycle_graph(6)
    mu = uniform_ball_measure(h, 0, laziness=0.5)
    assert mu.as_dict() == {0: Fraction(1, 2), 1: Fraction(1, 4), 5: Fraction(1, 4)}
    with pytest.raises(DomainError):
        uniform_ball_measure(h, 0, laziness=1)


def test_isolated_vertex_measure_is_dirac():
    """No neighbours: all mass stays put."""
    h = Hypergraph.from_edges([[0, 1]], isolated=[4])
    assert uniform_ball_measure(h, 4).as_dict() == {4: 1}


def test_w1_of_dirac_measures_is_distance():
    """W1 between point masses is the hop distance."""
    h = path_graph(6)
    plan = wasserstein1(h, DiscreteMeasure.dirac(0), DiscreteMeasure.dirac(4))
    assert plan.cost == 4
    assert plan.exact
    assert plan.coupling == {(0, 4): 1}


def test_w1_infeasible_across_components():
    """Disconnected supports cannot be coupled."""
    h = Hypergraph.from_edges([[0, 1], [2, 3]])
    with pytest.raises(TransportInfeasibleError):
        wasserstein1(h, DiscreteMeasure.dirac(0), DiscreteMeasure.dirac(3))


def test_w1_matches_lp_oracle_on_random_instances():
    """500 random instances on random connected graphs: exact cost equals the LP optimum, marginals exact."""
    rng = random.Random(4242)
    for k in range(500):
        n = rng.randint(2, 12)
        h = random_connected_graph(n, p=rng.random() * 0.4, seed=k)
        verts = h.vertices()
        mu, nu = _random_measure(rng, verts), _random_measure(rng, verts)
        plan = wasserstein1(h, mu, nu)
        assert plan.exact
        assert abs(float(plan.cost) - _lp_oracle(h, mu, nu)) < 1e-9
        rows, cols = coupling_marginals(plan.coupling)
        assert rows == mu.as_dict()
        assert cols == nu.as_dict()


def test_network_simplex_agrees_with_augmenting_paths():
    """Large-support path gives the same exact cost as the small-support path."""
    rng = random.Random(99)
    for k in range(50):
        h = random_connected_graph(10, p=0.3, seed=k)
        verts = h.vertices()
        mu, nu = _random_measure(rng, verts, 6), _random_measure(rng, verts, 6)
        small = wasserstein1(h, mu, nu, float_threshold=64)
        large = wasserstein1(h, mu, nu, float_threshold=0)
        assert small.method == "ssp" and large.method == "network_simplex"
        assert small.cost == large.cost
        assert coupling_marginals(large.coupling) == (mu.as_dict(), nu.as_dict())


def test_float_measures_use_linear_programming():
    """Float masses go through the LP solver and agree with the rational answer."""
    h = cycle_graph(8)
    mu = DiscreteMeasure((0, 2), (0.5, 0.5))
    nu = DiscreteMeasure((4, 5), (0.5, 0.5))
    plan = wasserstein1(h, mu, nu)
    assert plan.method == "linprog"
    assert not plan.exact
    exact = wasserstein1(h, DiscreteMeasure((0, 2), (Fraction(1, 2),) * 2), DiscreteMeasure((4, 5), (Fraction(1, 2),) * 2))
    assert plan.cost == pytest.approx(float(exact.cost), abs=1e-9)


def test_w1_triangle_inequality():
    """1000 random triples satisfy W(a, c) <= W(a, b) + W(b, c), symmetry and zero on the diagonal."""
    rng = random.Random(2718)
    for k in range(1000):
        h = random_connected_graph(rng.randint(2, 10), p=0.3, seed=k)
        verts = h.vertices()
        a, b, c = (_random_measure(rng, verts) for _ in range(3))
        ab = wasserstein1(h, a, b).cost
        bc = wasserstein1(h, b, c).cost
        ac = wasserstein1(h, a, c).cost
        assert ac <= ab + bc
        assert ab == wasserstein1(h, b, a).cost
        assert wasserstein1(h, a, a).cost == 0


def test_ricci_two_vertex_graph_and_cycle():
    """kappa = 0 on a single edge and on C8."""
    assert ollivier_ricci_pair(path_graph(2), 0, 1) == 0
    c8 = cycle_graph(8)
    for u in range(8):
        assert ollivier_ricci_pair(c8, u, (u + 1) % 8) == 0


def test_ricci_complete_graph():
    """K4 adjacent pairs have kappa = 2/3."""
    k4 = complete_graph(4)
    assert ollivier_ricci_pair(k4, 0, 1) == Fraction(2, 3)


def test_ricci_regular_tree_interior():
    """3-regular tree to depth 5: interior pairs have kappa = -2/3."""
    tree = regular_tree(3, 5)
    interior = [v for v in tree.vertices() if tree.degree(v) == 3]
    for u in interior[:20]:
        for v in tree.neighbors(u):
            if tree.degree(v) == 3:
                assert ollivier_ricci_pair(tree, u, v) == Fraction(-2, 3)


def test_ricci_pair_errors():
    """Equal points and disconnected points are rejected."""
    h = Hypergraph.from_edges([[0, 1], [2, 3]])
    with pytest.raises(DomainError):
        ollivier_ricci_pair(h, 0, 0)
    with pytest.raises(UnreachableError):
        ollivier_ricci_pair(h, 0, 2)


def test_hyperedge_chain_curvature():
    """Chain x->y->z: kappa(y->z) = -1; an isolated hyperedge has kappa = 0."""
    chain = Hypergraph.from_edges([[0, 1], [1, 2]])
    assert ollivier_ricci_hyperedge(chain, 1) == -1
    single = Hypergraph.from_edges([[0, 1]])
    assert ollivier_ricci_hyperedge(single, 0) == 0


def test_hyperedge_measures_casework():
    """Tail mass flows back along incoming edges, head mass forward along outgoing ones."""
    h = Hypergraph.from_edges([[0, 2], [1, 2], [2, 3], [3, 4], [3, 5]])
    mu_in, mu_out = hyperedge_measures(h, h.edge_index[2])
    assert mu_in.as_dict() == {0: Fraction(1, 2), 1: Fraction(1, 2)}
    assert mu_out.as_dict() == {4: Fraction(1, 2), 5: Fraction(1, 2)}
    with pytest.raises(DomainError):
        hyperedge_measures(Hypergraph.from_edges([[7]]), Hypergraph.from_edges([[7]]).edges[0])


def test_hyperedge_curvature_table_skips_unary_edges():
    """Unary edges have no tail/head split and are left out; the chain edges both read -1."""
    h = Hypergraph.from_edges([[0, 1], [1, 2], [2]])
    df = hyperedge_curvature_table(h)
    assert list(df["edge"]) == [0, 1]
    assert list(df["kappa"]) == [-1, -1]


def test_parallel_transport_on_grid_is_translation():
    """Unit sphere of a grid vertex maps by translation to its neighbour's sphere."""
    h = grid_graph(5, 5)
    pt = parallel_transport(h, 12, 13)
    assert pt.is_bijection
    assert pt.bijection == {7: 8, 11: 12, 13: 14, 17: 18}


def test_holonomy_around_grid_square_is_trivial():
    """Translations around an interior unit square compose to the identity."""
    h = grid_graph(5, 5)
    hol = holonomy(h, [12, 13, 18, 17, 12])
    assert hol.cycle == (12, 13, 18, 17)
    assert hol.is_trivial
    assert hol.mapping == {7: 7, 11: 11, 13: 13, 17: 17}


def test_holonomy_around_k4_triangle_swaps_directions():
    """Around a triangle of K4 the two in-cycle directions trade places."""
    hol = holonomy(complete_graph(4), [0, 1, 2])
    assert hol.mapping == {1: 2, 2: 1, 3: 3}
    assert hol.moved == (1, 2)
    assert hol.to_dict()["trivial"] is False


def test_holonomy_rejects_broken_cycles():
    """Every step, including the closing one, must follow an edge."""
    h = grid_graph(5, 5)
    with pytest.raises(DomainError):
        holonomy(h, [12, 13, 19])
    with pytest.raises(DomainError):
        holonomy(h, [12])


def test_sectional_and_ricci_on_flat_grid():
    """Interior grid directions have zero sectional and Ricci curvature."""
    h = grid_graph(5, 5)
    assert sectional_curvature(h, 12, 13, 7) == 0
    assert ricci_direction(h, 12, 13) == 0


def test_sectional_curvature_on_binary_tree_root():
    """Branching at the root of a binary tree gives K = -4."""
    h = binary_tree(4)
    assert sectional_curvature(h, 0, 1, 2) == -4


def test_sectional_curvature_errors():
    """Directions must be distinct neighbours; degree < 2 has no Ricci direction."""
    h = grid_graph(5, 5)
    with pytest.raises(DomainError):
        sectional_curvature(h, 12, 13, 13)
    with pytest.raises(DomainError):
        sectional_curvature(h, 12, 13, 0)
    with pytest.raises(DegenerateGeometryError):
        ricci_direction(path_graph(3), 0, 1)


def test_scalar_curvature_signs():
    """Positive at a pentagonal defect of the geodesic sphere, None when isolated."""
    assert scalar_curvature(geodesic_sphere(3), 0) > 0
    h = Hypergraph.from_edges([[0, 1]], isolated=[3])
    assert scalar_curvature(h, 3) is None
    assert scalar_curvature(complete_graph(4), 0) == Fraction(2, 3)


def test_curvature_table_columns():
    """One row per skeleton edge with exact and float kappa."""
    df = curvature_table(cycle_graph(5), n_jobs=1)
    assert list(df.columns) == ["u", "v", "kappa", "kappa_float"]
    assert len(df) == 5
    parallel = curvature_table(cycle_graph(5), n_jobs=2)
    assert list(parallel["kappa"]) == list(df["kappa"])
