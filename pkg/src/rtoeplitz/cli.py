"""Command line: ``rtoeplitz norms | product-check | fiber analyze | experiment``.

Exit codes: 0 when a verdict was computed, 1 for configuration or usage
errors, 2 for numerical failures.
"""

from __future__ import annotations

import csv
import json
import logging
import sys
from pathlib import Path

import click
import numpy as np

from . import __version__
from .config import ConfigError, load_spec_file, parse_symbol, parse_tuple, read_symbol_file
from .domains import DomainError, parse_domain
from .fibers import DecompositionBudgetError, deletion_process, is_thick, FiberQuery
from .harness import SCHEMA_VERSION, run_experiment, write_report
from .indexsets import IndexSetParseError, parse_index_set
from .lattice import TruncationLattice
from .moments import BoundViolation, InfiniteNorm, MomentTable
from .quadrature import QuadratureError
from .symbols import SlicedSymbol
from .toeplitz import LatticeTooSmall, product_apply, product_apply_sliced, zero_product_verdict

NUMERIC_ERRORS = (QuadratureError, LatticeTooSmall, InfiniteNorm, BoundViolation, DecompositionBudgetError, FloatingPointError)
CONFIG_ERRORS = (ConfigError, DomainError, IndexSetParseError)


def _fmt(x: float) -> str:
    return "%.17g" % x


def _domain(text: str, n: int | None = None):
    try:
        return parse_domain(text, n=n)
    except DomainError as exc:
        raise ConfigError(str(exc)) from None


@click.group()
@click.version_option(__version__, message=f"rtoeplitz %(version)s (report schema {SCHEMA_VERSION})")
@click.option("-v", "--verbose", is_flag=True, help="Log progress to stderr.")
def cli(verbose: bool):
    """Toeplitz operators with quasi-homogeneous symbols on Reinhardt domains."""
    logging.basicConfig(level=logging.INFO if verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")


@cli.command()
@click.option("--domain", "domain_text", required=True, help="e.g. 'polydisk(1,1)' or 'ball(1, n=2)'.")
@click.option("--alpha-max", required=True, help="Largest multi-index, e.g. '(10,10)'.")
@click.option("--tol", type=float, default=None, help="Relative quadrature tolerance.")
@click.option("--out", type=click.Path(dir_okay=False), required=True, help="CSV output.")
def norms(domain_text: str, alpha_max: str, tol: float | None, out: str):
    """Tabulate ||z^alpha||^2 and c_alpha for all alpha <= ALPHA_MAX.

    Columns: alpha_1..alpha_n, norm_sq, c_alpha (17 significant digits).
    """
    amax = parse_tuple(alpha_max)
    domain = _domain(domain_text, len(amax))
    if domain.n != len(amax):
        raise ConfigError(f"alpha-max has {len(amax)} entries, domain has {domain.n}")
    table = MomentTable(domain, tol)
    alphas = list(TruncationLattice(amax))
    values = table.norm_many(alphas)
    with open(out, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([f"alpha_{j + 1}" for j in range(domain.n)] + ["norm_sq", "c_alpha"])
        for a, v in zip(alphas, values):
            c = 0.0 if not np.isfinite(v) else 1.0 / v
            w.writerow(list(a) + [_fmt(v), _fmt(c)])
    click.echo(f"wrote {len(alphas)} rows to {out}")


@cli.command("product-check")
@click.option("--domain", "domain_text", required=True)
@click.option("--symbols", "symbols_file", type=click.Path(exists=True, dir_okay=False), required=True,
              help="One symbol spec per line, phi_1 (applied first) on top.")
@click.option("--kmax", required=True, help="Lattice corner, e.g. '(10,10)'.")
@click.option("--tol", type=float, default=None, help="Quadrature tolerance.")
@click.option("--zero-tol", type=float, default=1e-6, show_default=True)
@click.option("--export-matrix", type=click.Path(dir_okay=False), default=None, help="Sparse CSV of the operator.")
@click.option("--report", type=click.Path(dir_okay=False), required=True)
def product_check(domain_text, symbols_file, kmax, tol, zero_tol, export_matrix, report):
    """Compose the product and decide whether it vanishes on the lattice."""
    k = parse_tuple(kmax)
    domain = _domain(domain_text, len(k))
    table = MomentTable(domain, tol)
    syms = [parse_symbol(s, domain.n, domain) for s in read_symbol_file(symbols_file)]
    lattice = TruncationLattice(k)
    if any(isinstance(s, SlicedSymbol) for s in syms[:-1]):
        raise ConfigError("a linf symbol may only appear last (outermost)")
    if isinstance(syms[-1], SlicedSymbol):
        op = product_apply_sliced(table, syms[-1], syms[:-1], lattice)
    else:
        op = product_apply(table, syms, lattice)
    rep = zero_product_verdict(op, table, zero_tol)
    body = rep.to_dict()
    out = {
        "schema_version": SCHEMA_VERSION,
        "engine_version": __version__,
        "kind": "product_check",
        "zero_flag": rep.zero_flag,
        "norm_estimate": rep.operator_norm_estimate,
        "witness": body["witness"],
        "k0_used": body["k0_used"],
        "skipped_tuples": rep.skipped_tuples,
        "slice_residual": rep.slice_residual,
        "max_abs_weight": rep.max_abs_weight,
        "zero_tolerance": zero_tol,
        "threshold": rep.threshold,
    }
    write_report(out, report)
    if export_matrix:
        with open(export_matrix, "w", newline="") as fh:
            w = csv.writer(fh)
            n = domain.n
            w.writerow([f"src_{j + 1}" for j in range(n)] + [f"dst_{j + 1}" for j in range(n)] + ["re", "im"])
            for src in sorted(op.action):
                for dst, wt in sorted(op.action[src].items()):
                    w.writerow(list(src) + list(dst) + [_fmt(wt.real), _fmt(wt.imag)])
    click.echo(f"zero_flag={rep.zero_flag} norm_estimate={_fmt(rep.operator_norm_estimate)}")


@cli.group()
def fiber():
    """Condition (I) analysis of symbolic index sets."""


@fiber.command("analyze")
@click.option("--set", "set_expr", required=True, help="e.g. 'AP(1,2) x FULL | FIN(3,5) x GEO(2)'.")
@click.option("--decompose", is_flag=True, help="Include every layer and deleted part.")
@click.option("--out", type=click.Path(dir_okay=False), required=True)
def fiber_analyze(set_expr: str, decompose: bool, out: str):
    """Decide condition (I) and report the witness."""
    E = parse_index_set(set_expr)
    dec = deletion_process(E)
    report = {
        "schema_version": SCHEMA_VERSION,
        "engine_version": __version__,
        "kind": "fiber_analyze",
        "set": E.expr(),
        "condition_I": dec.verdict,
        "witness": dec.final.expr(),
        "first_projection_divergent": E.positive_part().projection_divergent(0),
    }
    if decompose:
        d = dec.to_dict()
        report["layers"] = d["layers"]
        report["deleted"] = d["deleted"]
    if E.n > 1 and not E.excluded:
        report["fiber_over_1_thick"] = is_thick(FiberQuery(E, (1,)))
    write_report(report, out)
    click.echo(f"condition_I={dec.verdict} witness={dec.final.expr()}")


@cli.command()
@click.argument("kind", type=click.Choice(["proposition1", "corollary1", "theorem1_box_reduction", "moment_vanishing"]))
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--report", type=click.Path(dir_okay=False), default=None, help="Overrides [output] report.")
def experiment(kind: str, config_path: str, report: str | None):
    """Run one experiment and write its JSON report."""
    spec = load_spec_file(config_path, kind=kind)
    result = run_experiment(spec)
    path = report or spec.report_path
    if path:
        path = Path(path)
        if not path.is_absolute() and report is None:
            path = Path(config_path).parent / path
        write_report(result, path)
        click.echo(f"wrote {path}")
    else:
        click.echo(json.dumps(result, indent=2, sort_keys=True))


def run(argv=None) -> int:
    """Run the command line and return the documented exit code."""
    try:
        cli.main(args=argv, prog_name="rtoeplitz", standalone_mode=False)
    except click.exceptions.Exit as exc:
        return exc.exit_code
    except click.exceptions.Abort:
        click.echo("aborted", err=True)
        return 1
    except click.ClickException as exc:
        exc.show()
        return 1
    except CONFIG_ERRORS as exc:
        click.echo(f"config error: {exc}", err=True)
        return 1
    except NUMERIC_ERRORS as exc:
        click.echo(f"numeric failure: {exc}", err=True)
        return 2
    return 0


def main(argv=None) -> None:
    """Console entry point."""
    sys.exit(run(argv))
