from fractions import Fraction

import pytest

from gspimage.modring import MatrixMod, ResidueRing, unit_group_order
from gspimage.symplectic import NotSimilitude, m1, standard_form
from gspimage.torsion import (
    full_subgroup,
    subgroup_from_generators,
    trivial_subgroup,
)
from gspimage import galois_model as gm
from gspimage.galois_model import (
    CapExceeded,
    ChainNotIncreasing,
    DegreeReport,
    FullGL2Group,
    build_degree_report,
    close,
    cyclo_degree,
    cyclo_intersection_degree,
    degree_KH,
    filtered_subgroup,
    gl2_group,
    gl2_standard_generators,
    mu_s_ratio,
    mu_w_witness,
    scenario_cm,
    scenario_selfproduct,
    stabilizer,
)

from conftest import random_subgroup


def test_close_identity_only():
    ring = ResidueRing(5, 1)
    S = standard_form(1, ring)
    G = close(S, [MatrixMod.identity(ring, 2)])
    assert G.order == 1


def test_from_elements_roundtrip():
    from gspimage.galois_model import MatrixGroup

    ring = ResidueRing(5, 1)
    S = standard_form(1, ring)
    mats = [MatrixMod.identity(ring, 2), MatrixMod(ring, [[2, 0], [0, 3]])]
    G = MatrixGroup.from_elements(S, mats)
    assert G.order == 2
    assert list(G) == mats
    assert mats[1] in G
    with pytest.raises(ValueError):
        MatrixGroup.from_elements(S, mats + [mats[0]])  # duplicates rejected


def test_close_rejects_non_similitude():
    ring = ResidueRing(5, 1)
    S = standard_form(2, ring)
    bad = MatrixMod(ring, [[1, 1, 0, 0], [0, 1, 0, 0], [0, 0, 1, 0], [0, 0, 0, 1]])
    with pytest.raises(NotSimilitude):
        close(S, [bad])


def test_close_gl2_f3_has_order_48():
    ring = ResidueRing(3, 1)
    G = close(standard_form(1, ring), gl2_standard_generators(ring))
    assert G.order == 48
    assert G.order == gl2_group(ring).order


def test_close_cap_exceeded():
    ring = ResidueRing(3, 1)
    with pytest.raises(CapExceeded):
        close(standard_form(1, ring), gl2_standard_generators(ring), cap=10)


def test_cm_scenario_order_and_degrees():
    G, H = scenario_cm(2, 5, 1)
    assert G.order == 64  # (l-1)^(g+1) diagonal similitudes
    T = stabilizer(G, H)
    assert T.order == 1
    assert degree_KH(G, H) == 64
    assert m1(H, G.space) == 0
    assert cyclo_degree(G, 1) == 4
    assert cyclo_intersection_degree(G, H, 1) == 4
    assert mu_s_ratio(G, H) == Fraction(4)


def test_cm_scenario_ell13():
    G, H = scenario_cm(2, 13, 1)
    assert stabilizer(G, H).order == 1
    assert mu_s_ratio(G, H) == Fraction(12)


def test_cm_torus_equals_closure_of_generators():
    # BFS closure from three one-parameter generators rebuilds the torus
    ring = ResidueRing(5, 1)
    G, _ = scenario_cm(2, 5, 1)
    gens = [
        MatrixMod.diagonal(ring, [2, 1, 1, pow(2, -1, 5)]),
        MatrixMod.diagonal(ring, [1, 2, pow(2, -1, 5), 1]),
        MatrixMod.diagonal(ring, [1, 1, 2, 2]),
    ]
    C = close(G.space, gens)
    assert C.order == G.order == 64
    assert {M.flat() for M in C} == {M.flat() for M in G}


def test_cm_rejects_even_prime_and_cap():
    with pytest.raises(ValueError):
        scenario_cm(2, 2, 1)
    with pytest.raises(CapExceeded):
        scenario_cm(2, 13, 1, cap=100)


def test_selfproduct_scenario():
    G, H = scenario_selfproduct(3, 1)
    assert G.order == 48
    # fixing (1,0,0,1) forces g(1,0)=(1,0) and g(0,1)=(0,1), so g = I
    assert stabilizer(G, H).order == 1
    assert m1(H, G.space) == 0
    assert cyclo_intersection_degree(G, H, 1) == 2


def test_stabilizer_of_trivial_subgroup_is_whole_group():
    G, _ = scenario_cm(2, 5, 1)
    T = stabilizer(G, trivial_subgroup(G.ring, 4))
    assert T.order == G.order


def test_stabilizer_matches_full_scan(rng):
    G, _ = scenario_cm(2, 5, 1)
    for _ in range(10):
        H = random_subgroup(G.ring, 4, rng, max_order=10_000)
        T = stabilizer(G, H)
        brute = [
            M for M in G if all(M.apply(v) == v for v in H.iter_elements())
        ]
        assert list(T) == brute


def test_degree_gl2_f3_line_stabilizer():
    ring = ResidueRing(3, 1)
    G = gl2_group(ring)
    H = subgroup_from_generators([(1, 0)], ring)
    assert stabilizer(G, H).order == 6
    assert degree_KH(G, H) == 8


def test_degree_trivial_subgroup():
    G, _ = scenario_cm(2, 5, 1)
    assert degree_KH(G, trivial_subgroup(G.ring, 4)) == 1


def test_cyclo_degree_examples():
    ring5 = ResidueRing(5, 1)
    G = gl2_group(ring5)
    assert cyclo_degree(G, 0) == 1
    assert cyclo_degree(G, 1) == 4
    Gcm, _ = scenario_cm(2, 5, 1)
    assert cyclo_degree(Gcm, 1) == 4


def test_cyclo_intersection_trivial_H():
    G, _ = scenario_cm(2, 5, 1)
    assert cyclo_intersection_degree(G, trivial_subgroup(G.ring, 4), 1) == 1


def test_mu_s_ratio_full_torsion_is_one():
    ring = ResidueRing(5, 1)
    G = gl2_group(ring)
    H = full_subgroup(ring, 2)
    assert mu_s_ratio(G, H) == Fraction(1)


def test_mu_w_witness_examples():
    G, H = scenario_cm(2, 5, 2)
    assert mu_w_witness(G, trivial_subgroup(G.ring, 4), 1) == 0
    # H of order 25: the stabilizer is trivial, the intersection degree is 20
    assert cyclo_intersection_degree(G, H, 2) == 20
    assert mu_w_witness(G, H, 1) == 2
    with pytest.raises(ValueError):
        mu_w_witness(G, H, Fraction(1, 2))


def test_filtered_subgroup_empty_chain_returns_group():
    G, _ = scenario_cm(2, 5, 1)
    assert filtered_subgroup(G, [], []) is G


def test_filtered_subgroup_gl2_mod9():
    ring = ResidueRing(3, 2)
    G = gl2_group(ring)
    assert G.order == 3888
    fix = subgroup_from_generators([(1, 0)], ring)
    F = filtered_subgroup(G, [fix], [1])
    assert F.order == 486
    assert G.order // F.order == 8
    # level-1 comparison: the index ratio across levels is a power of l
    ring1 = ResidueRing(3, 1)
    G1 = gl2_group(ring1)
    fix1 = subgroup_from_generators([(1, 0)], ring1)
    F1 = filtered_subgroup(G1, [fix1], [1])
    ratio = (G.order // F.order) / (G1.order // F1.order)
    assert ratio == 1  # l^0


def test_filtered_subgroup_two_step_chain():
    ring = ResidueRing(3, 2)
    G = gl2_group(ring)
    big = subgroup_from_generators([(1, 0)], ring)
    small = big.slice(1)  # <(3,0)>
    F = filtered_subgroup(G, [big, small], [1, 2])
    for M in F:
        assert all(x % 3 == y % 3 for x, y in zip(M.apply((1, 0)), (1, 0)))
        assert M.apply((3, 0)) == (3, 0)
    assert G.order % F.order == 0


def test_filtered_subgroup_chain_errors():
    ring = ResidueRing(3, 2)
    G = gl2_group(ring)
    big = subgroup_from_generators([(1, 0)], ring)
    small = big.slice(1)
    with pytest.raises(ChainNotIncreasing):
        filtered_subgroup(G, [big, small], [2, 1])  # cutoffs not increasing
    with pytest.raises(ChainNotIncreasing):
        filtered_subgroup(G, [small, big], [1, 2])  # fixers not decreasing


def test_full_gl2_matches_materialized(rng):
    for ell, lvl in [(3, 1), (3, 2), (5, 1)]:
        ring = ResidueRing(ell, lvl)
        full = FullGL2Group(ring)
        mat = gl2_group(ring)
        assert full.order == mat.order
        assert cyclo_degree(full, lvl) == cyclo_degree(mat, lvl)
        for _ in range(10):
            k = rng.randrange(1, 3)
            gens = [
                tuple(rng.randrange(ring.modulus) for _ in range(2)) for _ in range(k)
            ]
            H = subgroup_from_generators(gens, ring, ambient_dim=2)
            assert full.stabilizer_order(H) == stabilizer(mat, H).order
            assert degree_KH(full, H) == degree_KH(mat, H)


def test_full_gl2_trivial_subgroup():
    ring = ResidueRing(5, 3)
    full = FullGL2Group(ring)
    assert full.stabilizer_order(trivial_subgroup(ring, 2)) == full.order
    assert full.order == 5**8 * 480


def test_full_gl2_matches_materialized_level_three(rng):
    # the largest materializable case backing the structured path
    ring = ResidueRing(3, 3)
    full = FullGL2Group(ring)
    mat = gl2_group(ring)
    assert full.order == mat.order == 314928
    for _ in range(6):
        k = rng.randrange(1, 3)
        gens = [tuple(rng.randrange(27) for _ in range(2)) for _ in range(k)]
        H = subgroup_from_generators(gens, ring, ambient_dim=2)
        assert full.stabilizer_order(H) == stabilizer(mat, H).order


def test_reduce_level_is_group_quotient():
    G, _ = scenario_cm(2, 5, 2)
    G1 = G.reduce_level(1)
    assert G1.ring.level == 1
    assert G1.order == 64
    flats = {M.flat() for M in G1}
    for M in G:
        assert M.reduce_level(1).flat() in flats


def test_index_divisibility_under_reduction(rng):
    # a quotient map sends a subgroup-of-bounded-index to one of dividing index
    ring = ResidueRing(3, 2)
    C = gl2_group(ring)
    for _ in range(10):
        H = random_subgroup(ring, 2, rng, max_order=100)
        B = stabilizer(C, H)
        piC = C.reduce_level(1)
        piB = B.reduce_level(1)
        index_top = C.order // B.order
        assert piC.order % piB.order == 0
        assert index_top % (piC.order // piB.order) == 0


def test_tower_and_monotonicity(rng):
    G, _ = scenario_cm(2, 5, 2)
    for _ in range(20):
        H = random_subgroup(G.ring, 4, rng, max_order=10_000)
        T = stabilizer(G, H)
        assert degree_KH(G, H) * T.order == G.order
        bigger = subgroup_from_generators(
            list(H.basis) + [tuple(rng.randrange(G.ring.modulus) for _ in range(4))],
            G.ring,
            ambient_dim=4,
        )
        T2 = stabilizer(G, bigger)
        assert T.contains_group(T2)
        assert degree_KH(G, bigger) % degree_KH(G, H) == 0


def test_multiplier_quotient_shadow(rng):
    # [lambda(U1) : lambda(Um)] divides the prime-to-l part of [U1 : Um]
    ring = ResidueRing(3, 2)
    G = gl2_group(ring)
    for _ in range(10):
        H = random_subgroup(ring, 2, rng, max_order=81)
        U1 = stabilizer(G, H.slice(1))
        Um = stabilizer(G, H)
        lam1 = len({x % 3 for x in U1.multipliers()})
        lamm = len({x % 3 for x in Um.multipliers()})
        assert lam1 % lamm == 0
        index = U1.order // Um.order
        prime_to_l = index
        while prime_to_l % 3 == 0:
            prime_to_l //= 3
        assert prime_to_l % (lam1 // lamm) == 0


def test_degree_report_json_shape():
    G, H = scenario_cm(2, 5, 1)
    rep = build_degree_report(G, H)
    d = rep.to_json_dict()
    assert list(d.keys()) == [
        "ell",
        "level",
        "m1",
        "deg_KH",
        "deg_cyclo_intersection",
        "deg_cyclo_at_m1",
        "ratio",
        "mu_w_witness_n",
    ]
    assert d["ratio"] == "4"
    assert isinstance(rep, DegreeReport)


def test_parse_scenario_text():
    data = gm.parse_scenario_text(
        """
        # a comment
        scenario = cm
        ell = 5
        level = 1
        g = 2
        """
    )
    assert data == {"scenario": "cm", "ell": 5, "level": 1, "g": 2}
    with pytest.raises(ValueError):
        gm.parse_scenario_text("scenario = nope")
    with pytest.raises(ValueError):
        gm.parse_scenario_text("ell = 5")
    custom = gm.parse_scenario_text(
        'scenario = custom\nell = 3\ng = 1\ngenerators = [[[1,1],[0,1]]]\nH = [[1,0]]'
    )
    assert custom["generators"] == [[[1, 1], [0, 1]]]
    assert custom["H"] == [[1, 0]]


def test_unit_group_order():
    assert unit_group_order(5, 0) == 1
    assert unit_group_order(5, 1) == 4
    assert unit_group_order(5, 2) == 20
