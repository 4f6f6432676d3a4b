import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rtoeplitz.domains import (
    RESCALE_MARGIN,
    DomainError,
    ball,
    ellipsoid,
    generic,
    parse_domain,
    polydisk,
    rescale_into_unit_box,
    squared_region,
    table_from_csv,
)


def test_squared_region_examples():
    assert np.all(squared_region(polydisk(1, 1)).indicator([[0.99, 0.5], [0.2, 0.999]]))
    sq_ball = squared_region(ball(1.0, 2))
    assert sq_ball.indicator([[0.3, 0.6]])[0]
    assert not sq_ball.indicator([[0.5, 0.6]])[0]
    assert squared_region(polydisk(2, 1)).bounding_radius == (4.0, 1.0)


def test_squaring_round_trip():
    d = polydisk(1, 1)
    back = squared_region(d).sqrt_region()
    x = np.random.default_rng(0).uniform(0, 1.2, (100, 2))
    assert np.array_equal(back.indicator(x), d.indicator(x))


@pytest.mark.parametrize(
    "domain,expected",
    [
        (polydisk(2, 1), (4.00390625, 1.0009765625)),
        (polydisk(1, 1), (1 + 2**-10, 1 + 2**-10)),
        (polydisk(3), (9.0087890625,)),
    ],
)
def test_rescale_scales(domain, expected):
    image, scale = rescale_into_unit_box(squared_region(domain))
    assert np.allclose(scale, expected, rtol=0, atol=1e-15)
    assert all(b < 1 for b in image.bounding_radius)
    assert RESCALE_MARGIN == 2**-10


@pytest.mark.parametrize("domain", [polydisk(2, 1), ball(1.5, 2), ellipsoid((2, 4), 1.0), ball(1.0, 3)])
def test_rescale_preserves_membership(domain):
    sq = squared_region(domain)
    image, scale = rescale_into_unit_box(sq)
    t = np.random.default_rng(1).uniform(0, 1, (300, domain.n)) * np.asarray(sq.bounding_radius) * 1.1
    assert np.array_equal(sq.indicator(t), image.indicator(t / scale))


@settings(max_examples=50)
@given(st.sampled_from([polydisk(1, 2), ball(1, 2), ellipsoid((2, 4), 1.0), ball(2, 3)]), st.integers(0, 10**6))
def test_builtin_kinds_are_downward_closed(domain, seed):
    rng = np.random.default_rng(seed)
    y = rng.uniform(0, 1, (50, domain.n)) * np.asarray(domain.bounding_radius)
    x = y * rng.uniform(0, 1, y.shape)
    inside = domain.indicator(y)
    assert np.all(domain.indicator(x)[inside])


def test_indicator_is_false_outside_bounding_box():
    d = generic(lambda x: np.ones(len(x), bool), (1.0, 2.0))
    assert d.indicator([[0.5, 1.5], [1.1, 0.2], [0.3, 2.5]]).tolist() == [True, False, False]


def test_ellipsoid_matches_its_inequality():
    d = parse_domain("ellipsoid(p=(2,4), r=1)")
    x = np.random.default_rng(2).uniform(0, 1, (500, 2))
    assert np.array_equal(d.indicator(x), x[:, 0] ** 2 + x[:, 1] ** 4 < 1)


def test_parse_domain_variants():
    assert parse_domain("polydisk(1,1)").n == 2
    assert parse_domain("ball(1, n=3)").n == 3
    assert parse_domain("ball(2)", n=2).bounding_radius == (2.0, 2.0)
    with pytest.raises(DomainError):
        parse_domain("torus(1)")
    with pytest.raises(DomainError):
        parse_domain("polydisk(-1)")


def test_table_domain(tmp_path):
    xs = np.linspace(0.05, 0.95, 10)
    rows = ["x1,x2,flag"]
    for a in xs:
        for b in xs:
            rows.append(f"{a},{b},{int(a + b < 1)}")
    path = tmp_path / "grid.csv"
    path.write_text("\n".join(rows) + "\n")
    d = table_from_csv(path)
    assert d.n == 2 and d.kind == "table"
    assert d.indicator([[0.1, 0.1]])[0]
    assert not d.indicator([[0.9, 0.9]])[0]
    assert parse_domain("table(grid.csv)", base_dir=tmp_path).n == 2
