import numpy as np
import pytest

from picard_nls.errors import ContractViolationError, UnsupportedRegimeError
from picard_nls.spectral import Grid, random_field
from picard_nls.trees import (DecoratedTree, add_gradient_weight, bare_shape_sets,
                              derive, derive_terms, distribute_weight_terms,
                              evaluate_tree, grow_trees, level_orders,
                              scheme_tables, seed_terms, tree_family)


def coeffs_by_term(terms):
    return {factors: coeff for factors, coeff in terms}


# ---------------------------------------------------------------------------
# golden counts and coefficients for the grown sets
# ---------------------------------------------------------------------------

def test_grow_counts_p3():
    assert len(grow_trees(1, 3)) == 1
    assert len(grow_trees(2, 3)) == 2
    assert len(grow_trees(3, 3)) == 6


def test_t2_coefficients():
    ts = grow_trees(2, 3)
    assert sorted(c.real for c in ts.coefficients()) == [1.0, 2.0]
    # the coefficient-2 member grafts its subtree on an undotted edge
    for t in ts.members:
        sub_edges = [(c, s) for c, _, s in t.edges if s != ()]
        assert len(sub_edges) == 1
        conj, _ = sub_edges[0]
        assert conj == (t.coeff == 1.0)


def test_t3_structures_and_coefficients():
    ts = grow_trees(3, 3)
    assert sorted(c.real for c in ts.coefficients()) == [1.0, 1.0, 2.0, 2.0, 2.0, 4.0]
    assert len(ts.bare_shapes()) == 2  # chain of depth three vs two side-by-side subtrees
    assert sum(c.real for c in ts.coefficients()) == 12  # total ordered graftings


def test_leaf_count_determines_order():
    for p in (3, 5):
        for n in (1, 2, 3):
            for t in grow_trees(n, p).members:
                assert t.leaves == p + (p - 1) * (n - 1)
                assert t.n == n


def test_dotted_edge_counts():
    # every internal node carries (p-1)/2 dotted edges; after q cuts the
    # first floor carries (1+q)(p-1)/2 of them
    for p in (3, 5):
        ts = grow_trees(2, p)
        for beta in range(3):
            for t in ts.members:
                dotted = sum(1 for c, _, _ in t.edges if c)
                assert dotted == (1 + t.q) * (p - 1) // 2
            ts2 = derive(ts)
            ts = ts2


def test_weight_identity_everywhere():
    for p in (3, 5):
        for n in range(1, 5):
            for beta in range(0, 4):
                fam = tree_family(n, beta, 0, p)
                assert len(fam) > 0
                for t in fam.members:
                    assert t.weight_identity_holds(beta)


def test_derive_preserves_leaves():
    ts = grow_trees(3, 3)
    d1 = derive(ts)
    for t in d1.members:
        assert t.leaves == 7


def test_bare_shape_growth():
    # order 2: exactly one new shape (the flat 5-leaf star), then stable
    sets2 = bare_shape_sets(2, 3)
    assert len(sets2[0]) == 1
    assert len(sets2[-1] - sets2[0]) == 1
    # order 3: one new shape after one derivation, one more at stabilization
    sets3 = bare_shape_sets(3, 3)
    assert len(sets3[0]) == 2
    assert len(sets3[1] - sets3[0]) == 1
    assert len(sets3[-1] - sets3[1]) == 1
    star7 = tuple(sorted([()] * 7))
    assert star7 in sets3[-1]


def test_canonicalization_merges_planar_variants():
    ts = grow_trees(2, 3)
    again = grow_trees(2, 3)
    assert {t.edges for t in ts.members} == {t.edges for t in again.members}
    for t in ts.members:
        assert t.edges == tuple(sorted(t.edges))


def test_add_gradient_weight_leibniz():
    ts = grow_trees(1, 3)
    w1 = add_gradient_weight(ts, 1)
    # p slots but two of them identical: two distinct decorated results
    assert len(w1) == 2
    assert sorted(c.real for c in w1.coefficients()) == [1.0, 2.0]
    w0 = add_gradient_weight(ts, 0)
    assert w0.members == ts.members


def test_gradient_pair_annotation():
    ts = derive(grow_trees(1, 3))
    paired = [t for t in ts.members if t.gradient_pairs]
    assert paired and all(len(t.gradient_pairs) == 2 for t in paired)


def test_level_orders():
    assert level_orders(4, 1, 0) == 2
    assert level_orders(4, 1, 2) == 0
    assert level_orders(4, 0, 4) == 0
    assert level_orders(4, 2, 0) == 1
    assert level_orders(3, 1, 0) == 1
    with pytest.raises(ContractViolationError):
        level_orders(4, 4, 0)
    with pytest.raises(ContractViolationError):
        level_orders(4, 2, 1)  # k exceeds the 2(N-n-2) bound for this level


# ---------------------------------------------------------------------------
# scheme terms against the explicitly written fourth-order cubic scheme
# ---------------------------------------------------------------------------

def test_seed_terms_match_forcing_expansions():
    t2 = coeffs_by_term(seed_terms(2, 3))
    assert t2[tuple(sorted(((1, False, 0), (0, True, 0), (0, False, 0))))] == 2
    assert t2[tuple(sorted(((0, False, 0), (1, True, 0), (0, False, 0))))] == 1
    t3 = coeffs_by_term(seed_terms(3, 3))
    assert t3[tuple(sorted(((2, False, 0), (0, True, 0), (0, False, 0))))] == 2
    assert t3[tuple(sorted(((0, False, 0), (2, True, 0), (0, False, 0))))] == 1
    assert t3[tuple(sorted(((1, False, 0), (1, True, 0), (0, False, 0))))] == 2
    assert t3[tuple(sorted(((1, False, 0), (0, True, 0), (1, False, 0))))] == 1


def F(n, c, k):
    return (n, c, k)


def test_first_derivative_of_cubic_f1():
    terms = derive_terms(seed_terms(1, 3), 3)
    got = coeffs_by_term(terms)
    expect = {
        tuple(sorted((F(0, False, 1), F(0, True, 1), F(0, False, 0)))): -4j,
        tuple(sorted((F(0, False, 1), F(0, True, 0), F(0, False, 1)))): -2j,
        tuple(sorted((F(0, False, 0), F(0, True, 2), F(0, False, 0)))): -2j,
    }
    assert got == expect


def test_second_derivative_of_cubic_f1():
    # the six-term bracket of the explicit fourth-order scheme, factor (-2i)^2
    terms = derive_terms(derive_terms(seed_terms(1, 3), 3), 3)
    got = coeffs_by_term(terms)
    expect = {
        tuple(sorted((F(0, False, 2), F(0, True, 0), F(0, False, 2)))): -4 * 1.0,
        tuple(sorted((F(0, False, 2), F(0, True, 2), F(0, False, 0)))): -4 * 2.0,
        tuple(sorted((F(0, False, 1), F(0, True, 2), F(0, False, 1)))): -4 * 4.0,
        tuple(sorted((F(0, False, 2), F(0, True, 1), F(0, False, 1)))): -4 * 4.0,
        tuple(sorted((F(0, False, 0), F(0, True, 4), F(0, False, 0)))): -4 * 1.0,
        tuple(sorted((F(0, False, 1), F(0, True, 3), F(0, False, 0)))): -4 * 4.0,
    }
    assert got == expect


def test_first_derivative_of_cubic_f2():
    # the eight-term bracket driving the second level, overall factor -i,
    # including the quintic term produced by the edge cut
    terms = derive_terms(seed_terms(2, 3), 3)
    got = coeffs_by_term(terms)
    expect = {
        tuple(sorted((F(0, False, 0), F(0, True, 0), F(0, False, 0),
                      F(0, True, 0), F(0, False, 0)))): -1j * 1.0,
        tuple(sorted((F(1, False, 0), F(0, True, 1), F(0, False, 1)))): -1j * 4.0,
        tuple(sorted((F(1, False, 0), F(0, True, 2), F(0, False, 0)))): -1j * 4.0,
        tuple(sorted((F(1, False, 1), F(0, True, 0), F(0, False, 1)))): -1j * 4.0,
        tuple(sorted((F(1, False, 1), F(0, True, 1), F(0, False, 0)))): -1j * 4.0,
        tuple(sorted((F(1, True, 2), F(0, False, 0), F(0, False, 0)))): -1j * 2.0,
        tuple(sorted((F(1, True, 0), F(0, False, 1), F(0, False, 1)))): -1j * 2.0,
        tuple(sorted((F(1, True, 1), F(0, False, 1), F(0, False, 0)))): -1j * 4.0,
    }
    assert got == expect


def test_weight_distribution_on_terms():
    # distributing the gradient weight over |U_0|^2 U_0 gives the two
    # first-derivative products; the Laplacian weight gives four terms
    k1 = coeffs_by_term(distribute_weight_terms(seed_terms(1, 3), 1))
    assert k1[tuple(sorted((F(0, False, 1), F(0, True, 0), F(0, False, 0))))] == 2
    assert k1[tuple(sorted((F(0, False, 0), F(0, True, 1), F(0, False, 0))))] == 1
    k2 = coeffs_by_term(distribute_weight_terms(seed_terms(1, 3), 2))
    assert k2[tuple(sorted((F(0, False, 2), F(0, True, 0), F(0, False, 0))))] == 2
    assert k2[tuple(sorted((F(0, False, 0), F(0, True, 2), F(0, False, 0))))] == 1
    assert k2[tuple(sorted((F(0, False, 1), F(0, True, 1), F(0, False, 0))))] == 4
    assert k2[tuple(sorted((F(0, False, 1), F(0, True, 0), F(0, False, 1))))] == 2


def test_scheme_tables_shape_and_guard():
    tables = scheme_tables(4, 3, 2)
    assert set(tables) == {(1, 0), (1, 1), (1, 2), (2, 0), (3, 0)}
    assert [beta for beta, _ in tables[(1, 0)]] == [0, 1, 2]
    assert [beta for beta, _ in tables[(2, 0)]] == [0, 1]
    assert [beta for beta, _ in tables[(3, 0)]] == [0]
    # weights stay within 2*beta + k on any one edge, and every referenced
    # factor channel is one the state allocates
    from picard_nls.trees import channel_weights
    for (n, k), entries in tables.items():
        for beta, terms in entries:
            for factors, _ in terms:
                assert max(w for _, _, w in factors) <= 2 * beta + k
                for n_e, _, k_e in factors:
                    assert n_e < n and k_e <= channel_weights(4, n_e)
    with pytest.raises(UnsupportedRegimeError):
        scheme_tables(4, 3, 3)  # fourth order unavailable in three dimensions
    with pytest.raises(UnsupportedRegimeError):
        scheme_tables(5, 3, 2)  # ambiguous gradient contraction beyond N=4
    # one dimension has no contraction ambiguity at any order
    assert (1, 0) in scheme_tables(5, 3, 1)


def test_evaluate_tree_cubic_monomial():
    grid = Grid(1, 0.5, 32)
    rng = np.random.default_rng(0)
    u0 = random_field(grid, rng)
    tree = grow_trees(1, 3).members[0]
    out = evaluate_tree(tree, {(0, 0): u0}, d=1)
    np.testing.assert_allclose(out.data, np.abs(u0.data) ** 2 * u0.data, rtol=1e-14)


def test_evaluate_tree_zero_factor():
    grid = Grid(1, 0.5, 32)
    zero = random_field(grid, np.random.default_rng(1))
    zero.data[:] = 0
    tree = grow_trees(1, 3).members[0]
    out = evaluate_tree(tree, {(0, 0): zero}, d=1)
    assert np.all(out.data == 0)


def test_evaluate_tree_missing_factor():
    grid = Grid(1, 0.5, 32)
    u0 = random_field(grid, np.random.default_rng(2))
    tree = grow_trees(2, 3).members[0]
    with pytest.raises(ContractViolationError):
        evaluate_tree(tree, {(0, 0): u0}, d=1)


def test_evaluate_first_derivative_family_matches_hand_bracket():
    # sum over the beta=1 family of |U_0|^2 U_0 against the written-out
    # three-term bracket, with explicit gradient data
    grid = Grid(2, 0.5, 16)
    rng = np.random.default_rng(3)
    u0 = random_field(grid, rng)
    g = (random_field(grid, rng), random_field(grid, rng))
    lap = random_field(grid, rng)
    values = {(0, 0): u0, (0, 1): g, (0, 2): lap}
    fam = derive(grow_trees(1, 3))
    total = None
    for t in fam.members:
        out = evaluate_tree(t, values, d=2).data
        total = out if total is None else total + out
    dot_gg = g[0].data * np.conj(g[0].data) + g[1].data * np.conj(g[1].data)
    sq_g = g[0].data ** 2 + g[1].data ** 2
    hand = -2j * (2 * dot_gg * u0.data + sq_g * np.conj(u0.data)
                  + u0.data**2 * np.conj(lap.data))
    np.testing.assert_allclose(total, hand, rtol=1e-13)
