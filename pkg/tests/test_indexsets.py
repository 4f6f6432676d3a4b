import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rtoeplitz.indexsets import (
    ArithmeticProgression,
    FiniteSet,
    FullN,
    GeometricSet,
    IndexSetParseError,
    PowerSet,
    SymbolicIndexSet,
    generator_subset,
    intersect_generators,
    parse_index_set,
)

N = 1000


def enumerate_generator(g) -> set[int]:
    """Elements in [1, N], listed straight from the definition."""
    if isinstance(g, FullN):
        return set(range(1, N + 1))
    if isinstance(g, ArithmeticProgression):
        return set(range(g.start, N + 1, g.step))
    if isinstance(g, FiniteSet):
        return {v for v in g.values if 1 <= v <= N}
    if isinstance(g, GeometricSet):
        return {g.base**i for i in range(20) if g.base**i <= N}
    if isinstance(g, PowerSet):
        return {i**g.exponent for i in range(1, N + 1) if i**g.exponent <= N}
    raise TypeError(g)


GENERATORS = [
    FullN(),
    ArithmeticProgression(1, 1),
    ArithmeticProgression(3, 7),
    FiniteSet((0, 4, 999, 1000, 5000)),
    GeometricSet(2),
    GeometricSet(5),
    PowerSet(2),
    PowerSet(3),
]


@pytest.mark.parametrize("g", GENERATORS, ids=lambda g: g.expr())
def test_generator_membership_matches_enumeration(g):
    expected = enumerate_generator(g)
    got = {x for x in range(1, N + 1) if g.contains(x)}
    assert got == expected
    assert set(np.flatnonzero(g.mask(N))) - {0} == expected


def test_divergence_table():
    assert FullN().divergent and ArithmeticProgression(2, 5).divergent
    for g in (FiniteSet((1, 2)), GeometricSet(2), PowerSet(2)):
        assert not g.divergent


@pytest.mark.parametrize("n", [1, 2, 3])
def test_product_membership_matches_enumeration(n):
    rng = np.random.default_rng(n)
    for _ in range(6):
        gens = [GENERATORS[i] for i in rng.integers(0, len(GENERATORS), n)]
        E = SymbolicIndexSet.product(*gens)
        members = [enumerate_generator(g) for g in gens]
        pts = rng.integers(1, N + 1, size=(400, n))
        # bias half of the samples onto actual members so both outcomes occur
        for j, m in enumerate(members):
            if m:
                pts[:200, j] = rng.choice(sorted(m), 200)
        for p in pts:
            assert E.contains(p) == all(int(a) in m for a, m in zip(p, members))


pairs = st.sampled_from(GENERATORS)


@settings(max_examples=60)
@given(pairs, pairs)
def test_generator_intersection(a, b):
    c = intersect_generators(a, b)
    xs = range(0, 400)
    assert [c.contains(x) for x in xs] == [a.contains(x) and b.contains(x) for x in xs]
    if generator_subset(a, b):
        assert all(b.contains(x) for x in xs if a.contains(x))


def _grid(E, upto=40):
    return np.array(
        [[E.contains((i, j)) for j in range(upto + 1)] for i in range(upto + 1)],
        dtype=bool,
    )


SETS = [
    "AP(1,2) x FULL | FIN(3,5) x GEO(2)",
    "FULL x POW(2) | AP(2,3) x AP(1,4)",
    "GEO(3) x FIN(0,1,2) | FIN(7) x FULL",
]


@pytest.mark.parametrize("a", SETS)
@pytest.mark.parametrize("b", SETS)
def test_set_algebra_agrees_with_membership(a, b):
    A, B = parse_index_set(a), parse_index_set(b)
    ga, gb = _grid(A), _grid(B)
    assert np.array_equal(_grid(A | B), ga | gb)
    assert np.array_equal(_grid(A.intersect(B)), ga & gb)
    assert np.array_equal(_grid(A.minus(B)), ga & ~gb)
    assert np.array_equal(A.mask(40), ga)


def test_positive_part_and_fiber():
    E = parse_index_set("FULL x FIN(0,3) | AP(2,2) x GEO(2)")
    P = E.positive_part()
    assert not P.contains((0, 3)) and not P.contains((2, 0)) and P.contains((2, 3))
    fib = E.fiber((4,))
    assert fib.contains((4, 8)) and fib.contains((4, 3)) and not fib.contains((5, 8))


def test_subset_checks():
    small = parse_index_set("AP(2,2) x GEO(2)")
    big = parse_index_set("FULL x GEO(2) | FIN(1) x FULL")
    assert small.is_subset_of(big)
    assert not big.is_subset_of(small)


def test_expression_round_trip():
    for text in SETS + ["EMPTY x FULL", "AP(1,2)&GEO(3) x FULL"]:
        E = parse_index_set(text)
        again = parse_index_set(E.expr())
        assert np.array_equal(E.mask(30), again.mask(30))


@pytest.mark.parametrize(
    "text,pos",
    [("AP(1,2) x FOO", 10), ("AP(1) x FULL", 0), ("FULL x", 6), ("GEO(1)", 0)],
)
def test_parse_errors_report_position(text, pos):
    with pytest.raises(IndexSetParseError) as err:
        parse_index_set(text)
    assert err.value.pos == pos
    assert "position" in str(err.value)


def test_mixed_dimensions_rejected():
    with pytest.raises(IndexSetParseError):
        parse_index_set("FULL x FULL | FULL")
