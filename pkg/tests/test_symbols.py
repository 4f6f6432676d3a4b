import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rtoeplitz.domains import DomainError, ball, polydisk
from rtoeplitz.expressions import ExpressionError, compile_expression
from rtoeplitz.lattice import IndexBox, MultiIndex
from rtoeplitz.symbols import QhSymbol, SlicedSymbol, SymbolSum, fourier_slice, g_profile

R = (0.5, 0.3)


def one(r):
    return np.ones(len(r))


class TestExpressions:
    def test_radial_grammar(self):
        f = compile_expression("r1^2*exp(-r2) + sqrt(t1) - 3/2", 2, allowed="rt")
        r = np.array([[0.5, 0.3], [0.1, 0.9]])
        expected = r[:, 0] ** 2 * np.exp(-r[:, 1]) + r[:, 0] - 1.5
        assert np.allclose(f(r), expected, rtol=0, atol=1e-15)

    def test_complex_grammar(self):
        f = compile_expression("z1 + conj(z2)*abs(z1)^2 + i*pi", 2)
        z = np.array([[0.3 + 0.4j, 0.1 - 0.2j]])
        assert f(z)[0] == pytest.approx(z[0, 0] + np.conj(z[0, 1]) * abs(z[0, 0]) ** 2 + 1j * np.pi)

    @pytest.mark.parametrize(
        "text,allowed",
        [("__import__('os')", "rt"), ("r3", "rt"), ("z1", "rt"), ("r1.real", "rt"), ("foo(r1)", "rt"), ("r1 +", "rt")],
    )
    def test_rejects_bad_input(self, text, allowed):
        with pytest.raises(ExpressionError):
            compile_expression(text, 2, allowed=allowed)


class TestQhSymbol:
    def test_sup_estimate_and_spot_check(self):
        sym = QhSymbol.from_expression("r1*r2^2", (1, -1), domain=polydisk(1, 1))
        assert 1.0 <= sym.sup_bound <= 1.06
        with pytest.raises(ValueError, match="declared bound"):
            QhSymbol.from_expression("2*r1", (0, 0), sup_bound=1.0, domain=polydisk(1, 1))

    def test_evaluate_uses_the_twist(self):
        sym = QhSymbol.from_expression("r1", (1,), sup_bound=1.0)
        z = np.array([[0.3 + 0.4j]])
        assert sym.evaluate(z)[0] == pytest.approx(0.3 + 0.4j)

    def test_zero_and_algebra(self):
        z = QhSymbol.zero(2, (1, 0))
        assert z.is_zero() and z.twist == (1, 0)
        a = QhSymbol.from_expression("r1", (1, 0), sup_bound=1.0)
        s = a + a.scaled(2.0)
        assert s.values(np.array([[0.5, 0.2]]))[0] == pytest.approx(1.5)
        with pytest.raises(ValueError):
            a + QhSymbol.constant(1.0, 2)


class TestSymbolSum:
    def test_keys_must_match_twists_and_box(self):
        box = IndexBox(MultiIndex((0, 0)), MultiIndex((2, 2)))
        with pytest.raises(ValueError):
            SymbolSum(box, {MultiIndex((1, 1)): QhSymbol.constant(1.0, 2)})
        with pytest.raises(ValueError):
            SymbolSum(box, {MultiIndex((2, 0)): QhSymbol.from_expression("1", (2, 0), sup_bound=1)})

    def test_top_slice_and_twist_range(self):
        terms = [QhSymbol.from_expression("1", k, sup_bound=1) for k in [(0, 0), (1, 0), (1, 1)]]
        s = SymbolSum(IndexBox(MultiIndex((0, 0)), MultiIndex((2, 2))), {t.twist: t for t in terms})
        assert s.min_twist() == (0, 0) and s.max_twist() == (1, 1)
        top = s.top_slice(0)
        assert sorted(top.terms) == [(1, 0), (1, 1)]
        assert sorted(s.without_top(0).terms) == [(0, 0)]
        assert s.sup_bound == pytest.approx(3.0)

    def test_evaluate_sums_terms(self):
        s = SymbolSum.of(
            QhSymbol.from_expression("r1", (1,), sup_bound=1), QhSymbol.from_expression("r1", (-1,), sup_bound=1)
        )
        z = np.array([[0.6 * np.exp(0.4j)]])
        assert s.evaluate(z)[0] == pytest.approx(2 * 0.6 * np.cos(0.4))


class TestSlicing:
    @pytest.mark.parametrize(
        "phi,p,expected",
        [
            (lambda z: z[:, 0], (1, 0), 0.5),
            (lambda z: np.abs(z[:, 0]) ** 2, (0, 0), 0.25),
            (lambda z: z[:, 0] + np.conj(z[:, 1]), (0, -1), 0.3),
        ],
    )
    def test_fourier_slice_examples(self, phi, p, expected):
        assert fourier_slice(phi, p, R) == pytest.approx(expected, abs=1e-14)

    def test_pure_harmonic_has_one_slice(self):
        q = QhSymbol.from_expression("r1*r2^2 + 1", (1, -1), sup_bound=2.0)
        s = SlicedSymbol(q.evaluate, 2, p_max=2)
        r = np.random.default_rng(0).uniform(0, 1, (20, 2))
        for p in s.indices():
            vals = s.slice_values(p, r)
            if p == (1, -1):
                assert np.allclose(vals, q.values(r), rtol=0, atol=1e-12)
            else:
                assert np.max(np.abs(vals)) <= 1e-12 * q.sup_bound

    @settings(max_examples=25, deadline=None)
    @given(st.integers(0, 10**6))
    def test_reconstruction_of_trig_polynomials(self, seed):
        rng = np.random.default_rng(seed)
        c = rng.normal(size=(5, 5)) + 1j * rng.normal(size=(5, 5))

        def phi(z):
            th, r = np.angle(z), np.abs(z)
            out = np.zeros(len(z), complex)
            for a in range(-2, 3):
                for b in range(-2, 3):
                    out += c[a + 2, b + 2] * r[:, 0] * (1 + r[:, 1] ** 2) * np.exp(1j * (a * th[:, 0] + b * th[:, 1]))
            return out

        s = SlicedSymbol(phi, 2, p_max=2)
        z = rng.uniform(0.1, 1, (10, 2)) * np.exp(1j * rng.uniform(0, 2 * np.pi, (10, 2)))
        assert np.max(np.abs(s.reconstruct(z) - phi(z))) < 1e-10

    def test_real_symbols_have_conjugate_slices(self):
        s = SlicedSymbol.from_expression("re(z1)*abs(z2) + im(z2)^2", 2, p_max=2)
        r = np.random.default_rng(3).uniform(0, 1, (15, 2))
        for p in s.indices():
            minus_p = MultiIndex(-a for a in p)
            assert np.allclose(s.slice_values(minus_p, r), np.conj(s.slice_values(p, r)))

    def test_slices_are_bounded_by_the_symbol(self):
        s = SlicedSymbol.from_expression("z1 - 2*conj(z1)^2 + abs(z1)", 1, p_max=2).with_sup_from(polydisk(1))
        r = np.linspace(0, 0.999, 50)[:, None]
        for p in s.indices():
            assert np.max(np.abs(s.slice_values(p, r))) <= s.sup_bound
        assert s.truncation_residual(polydisk(1)) < 1e-12

    def test_truncation_residual_reports_missing_modes(self):
        s = SlicedSymbol.from_expression("z1^3", 1, p_max=2)
        assert s.truncation_residual(polydisk(1)) > 0.1

    def test_default_theta_samples(self):
        assert SlicedSymbol(lambda z: z[:, 0], 1, p_max=3).theta_samples == 4 * (3 + 4)


class TestGProfile:
    T = np.array([[0.3, 0.6], [0.81, 0.04]])

    def test_examples(self):
        assert np.allclose(g_profile([], (2, 0), one, sup_bound=1)(self.T), self.T[:, 0])
        assert np.allclose(g_profile([(1, 0)], (0, 0), one, sup_bound=1)(self.T), self.T[:, 0])
        f = lambda r: r[:, 0]  # noqa: E731
        assert np.allclose(g_profile([], (1, 0), f, sup_bound=1)(self.T), self.T[:, 0])

    def test_linear_in_f(self):
        f1 = lambda r: r[:, 0] * r[:, 1]  # noqa: E731
        f2 = lambda r: np.exp(-r[:, 1])  # noqa: E731
        lhs = g_profile([(1, 1)], (0, 1), lambda r: 2 * f1(r) - 3j * f2(r), sup_bound=5)(self.T)
        rhs = 2 * g_profile([(1, 1)], (0, 1), f1, sup_bound=1)(self.T) - 3j * g_profile([(1, 1)], (0, 1), f2, sup_bound=1)(
            self.T
        )
        assert np.allclose(lhs, rhs, rtol=1e-14)

    def test_unbounded_profile(self):
        with pytest.raises(DomainError, match="unbounded profile"):
            g_profile([], (-1, 0), one, domain=ball(1.0, 2), sup_bound=1)
        g = g_profile([], (-1, 0), one, domain=ball(1.0, 2), sup_bound=1, start=(1, 0))
        assert g.sup_bound == 1.0

    def test_zero_on_hyperplanes(self):
        g = g_profile([], (1, 1), one, sup_bound=1)
        assert g(np.array([[0.0, 0.5]]))[0] == 0
