"""Experiment configuration files and symbol specifications.

Format: ``[section]`` headers followed by ``key = value`` lines.  ``#`` starts
a comment when it begins a line.  A key may repeat; every occurrence is kept
in order (that is how several symbols are listed).  Example::

    [experiment]
    kind = proposition1
    seed = 7

    [domain]
    domain = polydisk(1)

    [symbols]                      # phi_1 first (applied first)
    symbol = qh(twist=(0,), radial="r1^2")
    symbol = qh(twist=(0,), radial="1")

    [lattice]
    kmax = (10,)

    [tolerances]
    quad = 1e-10
    zero = 1e-6

    [sets]
    hull1 = FIN(3)

    [integrand]
    g = t1 - 1/2
    sup = 0.5

    [output]
    report = report.json

Symbol specs:

* ``qh(twist=(1,-1), radial="r1^2*exp(-r2)")`` with optional ``sup=...``;
* ``sum(box=[(0,0),(2,2)), terms={(0,0): "1", (1,1): "r1*r2"})`` (half-open box);
* ``linf("z1 + conj(z2)*abs(z1)^2", pmax=2)`` for a bounded symbol to be sliced;
* ``zero`` for the zero symbol.
"""

from __future__ import annotations

import ast
import re
from dataclasses import dataclass, field
from pathlib import Path

from .domains import DomainError, DomainProfile, parse_domain
from .lattice import IndexBox, MultiIndex, as_index
from .symbols import QhSymbol, SlicedSymbol, SymbolSum

SECTIONS = ("experiment", "domain", "symbols", "lattice", "tolerances", "sets", "integrand", "output")
KINDS = ("proposition1", "corollary1", "theorem1_box_reduction", "moment_vanishing")


class ConfigError(ValueError):
    pass


def parse_config_text(text: str) -> dict[str, dict[str, list[str]]]:
    """``{section: {key: [values in order]}}``."""
    out: dict[str, dict[str, list[str]]] = {}
    section = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        m = re.fullmatch(r"\[\s*(\w+)\s*\](?:\s+#.*)?", line)
        if m:
            section = m.group(1).lower()
            if section not in SECTIONS:
                raise ConfigError(f"line {lineno}: unknown section [{section}]")
            out.setdefault(section, {})
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        if section is None:
            raise ConfigError(f"line {lineno}: key outside of a section")
        key, value = line.split("=", 1)
        out[section].setdefault(key.strip().lower(), []).append(value.strip())
    return out


def _literal(text: str, what: str):
    try:
        return ast.literal_eval(text)
    except (ValueError, SyntaxError):
        raise ConfigError(f"cannot read {what} from {text!r}") from None


def parse_tuple(text: str) -> MultiIndex:
    val = _literal(text, "a tuple")
    if isinstance(val, int):
        val = (val,)
    try:
        return as_index(val)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad index tuple {text!r}: {exc}") from None


def _call(text: str) -> tuple[str, list, dict]:
    # half-open box literal [a, b) -> (a, b)
    text = re.sub(r"box\s*=\s*\[\s*(\([^)]*\))\s*,\s*(\([^)]*\))\s*\)", r"box=(\1, \2)", text)
    try:
        node = ast.parse(text.strip(), mode="eval").body
    except SyntaxError:
        raise ConfigError(f"cannot parse symbol spec {text!r}") from None
    if isinstance(node, ast.Name):
        return node.id, [], {}
    if not (isinstance(node, ast.Call) and isinstance(node.func, ast.Name)):
        raise ConfigError(f"symbol spec must look like name(...): {text!r}")
    try:
        args = [ast.literal_eval(a) for a in node.args]
        kwargs = {k.arg: ast.literal_eval(k.value) for k in node.keywords}
    except ValueError:
        raise ConfigError(f"symbol arguments must be literals: {text!r}") from None
    return node.func.id, args, kwargs


def parse_symbol(text: str, n: int, domain: DomainProfile | None = None):
    """Build a QhSymbol, SymbolSum or SlicedSymbol from a spec string."""
    name, args, kw = _call(text)
    try:
        if name == "zero":
            return SymbolSum.zero(n)
        if name == "qh":
            twist = as_index(kw.get("twist", args[0] if args else (0,) * n), n)
            radial = str(kw.get("radial", args[1] if len(args) > 1 else "1"))
            return QhSymbol.from_expression(radial, twist, kw.get("sup"), domain)
        if name == "sum":
            lo, hi = kw["box"]
            box = IndexBox(as_index(lo, n), as_index(hi, n))
            terms = {}
            for key, radial in kw.get("terms", {}).items():
                k = as_index(key if isinstance(key, tuple) else (key,), n)
                terms[k] = QhSymbol.from_expression(str(radial), k, None, domain)
            return SymbolSum(box, terms)
        if name == "linf":
            expr = kw.get("expr", args[0] if args else None)
            if expr is None:
                raise ConfigError("linf needs an expression")
            sym = SlicedSymbol.from_expression(
                str(expr), n, int(kw.get("pmax", 2)), theta_samples=kw.get("theta_samples"), sup_bound=kw.get("sup")
            )
            return sym.with_sup_from(domain) if domain is not None else sym
    except (KeyError, IndexError, TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"bad symbol spec {text!r}: {exc}") from None
    raise ConfigError(f"unknown symbol kind {name!r}")


@dataclass
class ExperimentSpec:
    kind: str
    domain_text: str
    symbols: list = field(default_factory=list)
    kmax: MultiIndex | None = None
    quad_tol: float | None = None
    zero_tol: float = 1e-6
    seed: int = 0
    axis: int = 0
    sets: dict = field(default_factory=dict)
    integrand: str | None = None
    integrand_sup: float | None = None
    probes: int = 20
    report_path: str | None = None
    base_dir: Path = field(default_factory=Path.cwd)

    def domain(self) -> DomainProfile:
        try:
            return parse_domain(self.domain_text, n=len(self.kmax) if self.kmax else None, base_dir=self.base_dir)
        except DomainError as exc:
            raise ConfigError(str(exc)) from None

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "domain": self.domain_text,
            "symbols": list(self.symbols),
            "kmax": list(self.kmax) if self.kmax else None,
            "quad_tol": self.quad_tol,
            "zero_tol": self.zero_tol,
            "seed": self.seed,
            "axis": self.axis,
            "sets": dict(self.sets),
            "integrand": self.integrand,
            "integrand_sup": self.integrand_sup,
            "probes": self.probes,
        }


def _one(sec: dict, key: str, default=None):
    vals = sec.get(key)
    if not vals:
        return default
    if len(vals) > 1:
        raise ConfigError(f"key {key!r} given {len(vals)} times")
    return vals[0]


def _float(text, what):
    try:
        return float(text)
    except (TypeError, ValueError):
        raise ConfigError(f"{what} must be a number, got {text!r}") from None


def load_spec(text: str, base_dir: Path | None = None, kind: str | None = None) -> ExperimentSpec:
    cfg = parse_config_text(text)
    exp = cfg.get("experiment", {})
    kind = kind or _one(exp, "kind")
    if kind not in KINDS:
        raise ConfigError(f"experiment kind must be one of {', '.join(KINDS)}; got {kind!r}")
    dom = _one(cfg.get("domain", {}), "domain")
    if dom is None:
        raise ConfigError("missing [domain] domain = ...")
    lat = cfg.get("lattice", {})
    kmax = _one(lat, "kmax")
    tol = cfg.get("tolerances", {})
    integ = cfg.get("integrand", {})
    spec = ExperimentSpec(
        kind=kind,
        domain_text=dom,
        symbols=list(cfg.get("symbols", {}).get("symbol", [])),
        kmax=parse_tuple(kmax) if kmax else None,
        quad_tol=_float(_one(tol, "quad"), "quad") if _one(tol, "quad") else None,
        zero_tol=_float(_one(tol, "zero", "1e-6"), "zero"),
        seed=int(_float(_one(exp, "seed", "0"), "seed")),
        axis=int(_float(_one(exp, "axis", "0"), "axis")),
        sets={k: v[-1] for k, v in cfg.get("sets", {}).items()},
        integrand=_one(integ, "g"),
        integrand_sup=_float(_one(integ, "sup"), "sup") if _one(integ, "sup") else None,
        probes=int(_float(_one(exp, "probes", "20"), "probes")),
        report_path=_one(cfg.get("output", {}), "report"),
        base_dir=base_dir or Path.cwd(),
    )
    if spec.kmax is None:
        raise ConfigError("missing [lattice] kmax = (...)")
    return spec


def load_spec_file(path: str | Path, kind: str | None = None) -> ExperimentSpec:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    return load_spec(text, base_dir=path.parent, kind=kind)


def read_symbol_file(path: str | Path) -> list[str]:
    """One symbol spec per line (phi_1 first); blank lines and ``#`` comments skipped."""
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as exc:
        raise ConfigError(f"cannot read symbols file {path}: {exc.strerror}") from None
    out = [ln.strip() for ln in lines if ln.strip() and not ln.strip().startswith("#")]
    if not out:
        raise ConfigError(f"no symbols in {path}")
    return out
