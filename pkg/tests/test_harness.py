import json

import numpy as np
import pytest

from rtoeplitz.config import ConfigError, load_spec, load_spec_file, parse_config_text, parse_symbol
from rtoeplitz.domains import polydisk
from rtoeplitz.symbols import QhSymbol, SlicedSymbol, SymbolSum
from rtoeplitz.harness import SCHEMA_VERSION, run_experiment, write_report


def spec_text(kind, domain, symbols=(), kmax="(10,)", extra=""):
    lines = [f"[experiment]\nkind = {kind}\n", f"[domain]\ndomain = {domain}\n", "[symbols]"]
    lines += [f"symbol = {s}" for s in symbols]
    lines.append(f"\n[lattice]\nkmax = {kmax}\n")
    return "\n".join(lines) + extra


def run(text):
    return run_experiment(load_spec(text))


def radial_moment(f, power):
    """Gauss-Legendre oracle for int_0^1 f(r) r^power dr."""
    x, w = np.polynomial.legendre.leggauss(80)
    r = (x + 1) / 2
    return float(np.sum(w * f(r) * r**power) / 2)


class TestConfig:
    def test_sections_and_repeated_keys(self):
        cfg = parse_config_text("# top\n[symbols]  # phi_1 first\nsymbol = a\nsymbol = b\n[lattice]\nkmax=(3,)\n")
        assert cfg["symbols"]["symbol"] == ["a", "b"]
        assert cfg["lattice"]["kmax"] == ["(3,)"]

    @pytest.mark.parametrize(
        "text,match",
        [
            ("[bogus]\n", "unknown section"),
            ("kmax = 3\n", "outside of a section"),
            ("[lattice]\nkmax\n", "key = value"),
        ],
    )
    def test_syntax_errors(self, text, match):
        with pytest.raises(ConfigError, match=match):
            parse_config_text(text)

    def test_load_spec(self):
        spec = load_spec(spec_text("proposition1", "polydisk(1)", ['qh(twist=(0,), radial="1")'], extra="[tolerances]\nzero = 1e-8\n"))
        assert spec.kmax == (10,) and spec.zero_tol == 1e-8 and spec.axis == 0
        with pytest.raises(ConfigError, match="experiment kind"):
            load_spec(spec_text("nope", "polydisk(1)"))
        with pytest.raises(ConfigError, match="kmax"):
            load_spec("[experiment]\nkind = proposition1\n[domain]\ndomain = polydisk(1)\n")
        with pytest.raises(ConfigError, match="given 2 times"):
            load_spec(spec_text("proposition1", "polydisk(1)", kmax="(3,)\nkmax = (4,)"))

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError, match="cannot read config"):
            load_spec_file(tmp_path / "absent.cfg")

    def test_symbol_specs(self):
        q = parse_symbol('qh(twist=(1,-1), radial="r1^2*exp(-r2)", sup=1)', 2)
        assert isinstance(q, QhSymbol) and q.twist == (1, -1)
        s = parse_symbol('sum(box=[(0,0),(2,2)), terms={(0,0): "1", (1,1): "r1*r2"})', 2, polydisk(1, 1))
        assert isinstance(s, SymbolSum) and sorted(s.terms) == [(0, 0), (1, 1)]
        assert isinstance(parse_symbol('linf("z1 + conj(z2)", pmax=1, sup=2)', 2), SlicedSymbol)
        assert parse_symbol("zero", 2).is_zero()
        for bad in ["wat(1)", "qh(twist=(1,2,3))", "qh(twist=x)", "linf(pmax=2)"]:
            with pytest.raises(ConfigError):
                parse_symbol(bad, 2)


class TestProposition1:
    def test_nonvanishing_factors(self):
        rep = run(spec_text("proposition1", "polydisk(1)", ['qh(twist=(0,), radial="r1^2")', 'qh(twist=(0,), radial="1")']))
        assert rep["schema_version"] == SCHEMA_VERSION
        assert rep["verdict"] == "no zero factor"
        assert rep["product_zero_points"] == []
        moments = rep["factors"][0]["moments"]
        for m in moments:
            (k,) = m["k"]
            assert m["value"][0] == pytest.approx(1 / (k + 2), abs=1e-12)  # int_0^1 t^(k+1) dt

    def test_identically_zero_factor(self):
        rep = run(spec_text("proposition1", "polydisk(1)", ['qh(twist=(0,), radial="1")', "zero"]))
        assert rep["verdict"] == "factor 2 is identically zero"
        assert rep["zero_factors"] == [2]

    def test_sign_changing_radial_vanishes_at_one_index(self):
        # f(r) = r^2 - 4/5 has a vanishing moment exactly at k = 3
        f = lambda r: r**2 - 0.8  # noqa: E731
        oracle = [k for k in range(11) if abs(radial_moment(f, 2 * k + 1)) < 1e-12]
        assert oracle == [3]
        rep = run(
            spec_text("proposition1", "polydisk(1)", ['qh(twist=(0,), radial="r1^2 - 4/5", sup=1)'])
            + "[tolerances]\nzero = 1e-9\n[sets]\nhull1 = FIN(3)\n"
        )
        assert rep["factors"][0]["zero_set"] == [[3]]
        assert rep["product_zero_points"] == [[3]]
        assert rep["hulls"]["hull1"]["matches_zero_set"]
        assert not rep["hulls"]["hull1"]["condition_I"]

    def test_rejects_non_quasi_homogeneous_symbols(self):
        with pytest.raises(ConfigError):
            run(spec_text("proposition1", "polydisk(1)", ['linf("z1", pmax=1, sup=1)']))


class TestCorollary1:
    def test_dichotomy(self):
        rep = run(spec_text("corollary1", "polydisk(1)", ['qh(twist=(0,), radial="r1", sup=1)', 'linf("z1 + abs(z1)^2", pmax=1, sup=2)']))
        assert rep["dichotomy_holds"]
        assert not rep["product"]["zero_flag"]
        assert rep["slice_residual"] < 1e-10

    def test_zero_tail_is_reported(self):
        rep = run(spec_text("corollary1", "polydisk(1)", ["zero", 'linf("z1", pmax=1, sup=1)']))
        assert rep["product"]["zero_flag"] and rep["tail_zero_flags"] == [True] and rep["dichotomy_holds"]

    def test_linf_must_be_outermost(self):
        with pytest.raises(ConfigError, match="outermost"):
            run(spec_text("corollary1", "polydisk(1)", ['linf("z1", pmax=1, sup=1)', 'qh(twist=(0,), radial="1")']))


class TestTheorem1:
    def test_one_dimensional_boxes(self):
        rep = run(
            spec_text(
                "theorem1_box_reduction",
                "polydisk(1)",
                ['sum(box=[(0,),(2,)), terms={(0,): "1", (1,): "r1"})', 'sum(box=[(0,),(1,)), terms={(0,): "1+r1"})'],
            )
        )
        assert rep["coefficients_match"] and rep["max_abs_diff"] < 1e-12
        assert rep["compared_targets"] > 0

    def test_base_case(self):
        rep = run(spec_text("theorem1_box_reduction", "polydisk(1,1)", ['qh(twist=(1,0), radial="r1")', 'qh(twist=(0,-1), radial="1")'], "(6,6)"))
        assert {"action": "base_case"} in rep["steps"]
        assert rep["max_abs_diff"] == 0.0

    def test_zero_top_slice_shrinks(self):
        rep = run(
            spec_text(
                "theorem1_box_reduction",
                "polydisk(1,1)",
                ['sum(box=[(0,0),(3,2)), terms={(0,0): "1", (1,1): "r2"})'],
                "(6,6)",
            )
        )
        shrinks = [s for s in rep["steps"] if s["action"] == "shrink"]
        assert shrinks and shrinks[0]["symbol"] == 1
        assert rep["coefficients_match"]

    def test_axis_out_of_range(self):
        with pytest.raises(ConfigError, match="axis"):
            run(spec_text("theorem1_box_reduction", "polydisk(1)", ['qh(twist=(0,), radial="1")'], extra="[experiment]\naxis = 3\n"))


class TestMomentVanishing:
    def test_zero_integrand(self):
        rep = run(spec_text("moment_vanishing", "polydisk(1)", kmax="(5,)", extra="[integrand]\ng = 0*t1\nsup = 1\n"))
        assert rep["max_abs_on_probes"] == 0 and rep["vanishes_on_E"]

    def test_constant_integrand(self):
        rep = run(spec_text("moment_vanishing", "polydisk(1)", kmax="(5,)", extra="[integrand]\ng = 1\nsup = 1\n"))
        for p in rep["probes"]:
            z = complex(*p["z"][0])
            assert complex(*p["h"]) == pytest.approx(1 / (z + 1), abs=1e-9)
        assert not rep["vanishes_on_E"]

    def test_linear_integrand_at_one(self):
        rep = run(spec_text("moment_vanishing", "polydisk(1)", kmax="(5,)", extra="[integrand]\ng = t1 - 1/2\nsup = 0.5\n[sets]\nE = FIN(1)\n"))
        assert len(rep["points_on_E"]) == 1
        assert rep["points_on_E"][0]["h"][0] == pytest.approx(1 / 12, abs=1e-10)
        assert not rep["condition_I"]

    def test_missing_integrand(self):
        with pytest.raises(ConfigError, match="integrand"):
            run(spec_text("moment_vanishing", "polydisk(1)"))


def test_reports_are_deterministic(tmp_path):
    text = spec_text("moment_vanishing", "ball(1, n=2)", kmax="(3,3)", extra="[experiment]\nseed = 5\nprobes = 4\n[integrand]\ng = t1 - t2\n")
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    write_report(run(text), a)
    write_report(run(text), b)
    assert a.read_bytes() == b.read_bytes()
    assert json.loads(a.read_text())["config"]["seed"] == 5
