"""Radial profiles of bounded Reinhardt domains.

A Reinhardt domain is stored through its radial region, the set of
``(|z_1|, ..., |z_n|)``.  Indicators take an ``(N, n)`` array of nonnegative
points and return a boolean array of length ``N``.

Built-in kinds keep a closed description that survives squaring and
rescaling (polydisks stay polydisks, ellipsoids stay ellipsoids), which lets
the moment engine use exact section bounds and closed-form norms.
"""

from __future__ import annotations

import csv
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

RESCALE_MARGIN = 2.0**-10

Predicate = Callable[[np.ndarray], np.ndarray]


class DomainError(ValueError):
    pass


def _as_points(x, n: int) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x.reshape(1, -1) if x.size == n else x.reshape(-1, 1)
    if x.shape[-1] != n:
        raise ValueError(f"expected points with {n} coordinates, got shape {x.shape}")
    return x


@dataclass(frozen=True)
class GridTable:
    """Regular-grid 0/1 indicator with nearest-cell lookup."""

    origin: tuple
    spacing: tuple
    flags: np.ndarray = field(repr=False)

    def lookup(self, x: np.ndarray) -> np.ndarray:
        o = np.asarray(self.origin)
        h = np.asarray(self.spacing)
        idx = np.rint((x - o) / h).astype(np.int64)
        shape = np.asarray(self.flags.shape)
        ok = np.all((idx >= 0) & (idx < shape), axis=1)
        out = np.zeros(len(x), bool)
        if ok.any():
            out[ok] = self.flags[tuple(idx[ok].T)]
        return out

    def cells(self) -> tuple[np.ndarray, np.ndarray]:
        """Lower/upper corners of the flagged cells, clipped to the nonnegative orthant."""
        where = np.argwhere(self.flags)
        o = np.asarray(self.origin)
        h = np.asarray(self.spacing)
        centre = o + where * h
        lo = np.maximum(centre - h / 2, 0.0)
        hi = np.maximum(centre + h / 2, 0.0)
        keep = np.all(hi > lo, axis=1)
        return lo[keep], hi[keep]

    def scaled(self, factor: np.ndarray) -> "GridTable":
        return GridTable(
            tuple(np.asarray(self.origin) / factor),
            tuple(np.asarray(self.spacing) / factor),
            self.flags,
        )


@dataclass(frozen=True, eq=False)
class DomainProfile:
    """A bounded region of the nonnegative orthant, the radial shadow of a Reinhardt domain.

    ``kind`` is one of ``polydisk``, ``ball``, ``ellipsoid``, ``generic`` or
    ``table``.  ``contains_origin`` records that the closure meets every
    coordinate hyperplane; then only monomials with nonnegative exponents have
    finite norm.
    """

    kind: str
    n: int
    bounding_radius: tuple
    contains_origin: bool = True
    downward_closed: bool = True
    radii: tuple | None = None  # polydisk / ellipsoid semi-axes
    exponents: tuple | None = None  # ellipsoid: sum (x_j / radii_j)**exponents_j < 1
    predicate: Predicate | None = field(default=None, repr=False)
    table: GridTable | None = field(default=None, repr=False)
    label: str = ""
    _root: "DomainProfile | None" = field(default=None, repr=False)

    def __post_init__(self):
        b = np.asarray(self.bounding_radius, dtype=float)
        if b.shape != (self.n,):
            raise DomainError("bounding_radius must have one entry per coordinate")
        if not np.all(np.isfinite(b)) or np.any(b <= 0):
            raise DomainError("unbounded profile: bounding radii must be finite and positive")
        object.__setattr__(self, "bounding_radius", tuple(float(v) for v in b))

    # -- membership -------------------------------------------------------

    def indicator(self, x) -> np.ndarray:
        x = _as_points(x, self.n)
        inside_box = np.all((x >= 0) & (x <= np.asarray(self.bounding_radius)), axis=1)
        if self.kind == "polydisk":
            core = np.all(x < np.asarray(self.radii), axis=1)
        elif self.kind in ("ball", "ellipsoid"):
            s = np.sum((x / np.asarray(self.radii)) ** np.asarray(self.exponents), axis=1)
            core = s < 1.0
        elif self.kind == "table":
            core = self.table.lookup(x)
        else:
            core = np.asarray(self.predicate(x), dtype=bool).reshape(len(x))
        return inside_box & core

    def __contains__(self, point) -> bool:
        return bool(self.indicator(point)[0])

    def section_bound(self, prefix: np.ndarray) -> np.ndarray:
        """For downward-closed profiles: sup of coordinate ``d`` over points
        ``(prefix, x_d, 0, ..., 0)`` in the region, where ``d = prefix.shape[1]``.
        """
        prefix = np.asarray(prefix, dtype=float)
        if prefix.ndim != 2:
            raise ValueError("prefix must be a 2-d array")
        d = prefix.shape[1]
        if not self.downward_closed:
            raise DomainError("section bounds need a downward-closed profile")
        if self.kind == "polydisk":
            r = np.asarray(self.radii)
            ok = np.all(prefix < r[:d], axis=1)
            return np.where(ok, r[d], 0.0)
        if self.kind in ("ball", "ellipsoid"):
            r = np.asarray(self.radii)
            p = np.asarray(self.exponents)
            rest = 1.0 - np.sum((prefix / r[:d]) ** p[:d], axis=1)
            return np.where(rest > 0, r[d] * np.clip(rest, 0, None) ** (1.0 / p[d]), 0.0)
        return self._bisect_section(prefix)

    def _bisect_section(self, prefix: np.ndarray, iterations: int = 60) -> np.ndarray:
        m, d = prefix.shape
        tail = np.zeros((m, self.n - d - 1))
        lo = np.zeros(m)
        hi = np.full(m, self.bounding_radius[d])

        def probe(v):
            return self.indicator(np.column_stack([prefix, v, tail]))

        start_in = probe(lo)
        for _ in range(iterations):
            mid = 0.5 * (lo + hi)
            inside = probe(mid)
            lo = np.where(inside, mid, lo)
            hi = np.where(inside, hi, mid)
        return np.where(start_in, 0.5 * (lo + hi), 0.0)

    # -- transformations --------------------------------------------------

    def scaled(self, factor: Sequence[float]) -> "DomainProfile":
        """The profile ``x -> self.indicator(factor * x)``."""
        f = np.asarray(factor, dtype=float).reshape(self.n)
        if np.any(f <= 0):
            raise DomainError("scale factors must be positive")
        common = dict(
            n=self.n,
            bounding_radius=tuple(np.asarray(self.bounding_radius) / f),
            contains_origin=self.contains_origin,
            downward_closed=self.downward_closed,
            label=f"scaled({self.label})",
        )
        if self.kind == "polydisk":
            return DomainProfile("polydisk", radii=tuple(np.asarray(self.radii) / f), **common)
        if self.kind in ("ball", "ellipsoid"):
            kind = "ball" if self.kind == "ball" and np.allclose(f, f[0], rtol=0, atol=0) else "ellipsoid"
            return DomainProfile(kind, radii=tuple(np.asarray(self.radii) / f), exponents=self.exponents, **common)
        if self.kind == "table":
            return DomainProfile("table", table=self.table.scaled(f), **common)
        pred = self.indicator
        return DomainProfile("generic", predicate=lambda x: pred(x * f), **common)

    def squared(self) -> "DomainProfile":
        return squared_region(self)

    def sqrt_region(self) -> "DomainProfile":
        """Inverse of :func:`squared_region`: the profile ``s -> self.indicator(s**2)``."""
        if self._root is not None:
            return self._root
        common = dict(
            n=self.n,
            bounding_radius=tuple(np.sqrt(self.bounding_radius)),
            contains_origin=self.contains_origin,
            downward_closed=self.downward_closed,
            label=f"sqrt({self.label})",
        )
        if self.kind == "polydisk":
            return DomainProfile("polydisk", radii=tuple(np.sqrt(self.radii)), **common)
        if self.kind in ("ball", "ellipsoid"):
            return DomainProfile(
                "ellipsoid",
                radii=tuple(np.sqrt(self.radii)),
                exponents=tuple(2.0 * np.asarray(self.exponents)),
                **common,
            )
        pred = self.indicator
        return DomainProfile("generic", predicate=lambda s: pred(s * s), **common)

    def volume_box(self) -> float:
        return float(np.prod(self.bounding_radius))


def polydisk(*radii: float) -> DomainProfile:
    r = tuple(float(v) for v in radii)
    if not r or any(v <= 0 for v in r):
        raise DomainError("polydisk radii must be positive")
    return DomainProfile(
        "polydisk", n=len(r), bounding_radius=r, radii=r, label="polydisk(" + ",".join(f"{v:g}" for v in r) + ")"
    )


def ball(radius: float = 1.0, n: int = 2) -> DomainProfile:
    radius = float(radius)
    if radius <= 0 or n < 1:
        raise DomainError("ball needs a positive radius and n >= 1")
    return DomainProfile(
        "ball",
        n=n,
        bounding_radius=(radius,) * n,
        radii=(radius,) * n,
        exponents=(2.0,) * n,
        label=f"ball({radius:g},n={n})",
    )


def ellipsoid(exponents: Sequence[float], radius: float | Sequence[float] = 1.0) -> DomainProfile:
    """The region ``sum_j (x_j / radius_j)**exponents_j < 1``."""
    p = tuple(float(v) for v in exponents)
    n = len(p)
    r = (float(radius),) * n if np.isscalar(radius) else tuple(float(v) for v in radius)
    if len(r) != n or any(v <= 0 for v in p + r):
        raise DomainError("ellipsoid needs positive exponents and radii of matching length")
    return DomainProfile(
        "ellipsoid",
        n=n,
        bounding_radius=r,
        radii=r,
        exponents=p,
        label="ellipsoid(p=(" + ",".join(f"{v:g}" for v in p) + "),r=(" + ",".join(f"{v:g}" for v in r) + "))",
    )


def generic(
    predicate: Predicate,
    bounding_radius: Sequence[float],
    *,
    contains_origin: bool = True,
    downward_closed: bool = False,
    label: str = "",
) -> DomainProfile:
    """A profile given by a membership oracle; Reinhardt consistency is trusted."""
    b = tuple(float(v) for v in bounding_radius)
    return DomainProfile(
        "generic",
        n=len(b),
        bounding_radius=b,
        contains_origin=contains_origin,
        downward_closed=downward_closed,
        predicate=predicate,
        label=label or f"generic@{id(predicate):x}",
    )


def table_from_csv(path: str | Path) -> DomainProfile:
    """Load a gridded indicator: n coordinate columns plus a 0/1 flag column."""
    path = Path(path)
    rows = []
    with path.open(newline="") as fh:
        for rec in csv.reader(fh):
            if not rec or rec[0].lstrip().startswith("#"):
                continue
            try:
                rows.append([float(v) for v in rec])
            except ValueError:
                if rows:
                    raise DomainError(f"{path}: non-numeric row {rec!r}") from None
                continue  # header
    if not rows:
        raise DomainError(f"{path}: no data rows")
    data = np.asarray(rows)
    n = data.shape[1] - 1
    if n < 1:
        raise DomainError(f"{path}: need at least one coordinate column and a flag column")
    coords, flag = data[:, :n], data[:, n]
    origin, spacing, shape = [], [], []
    for j in range(n):
        axis = np.unique(coords[:, j])
        if len(axis) > 1:
            steps = np.diff(axis)
            if not np.allclose(steps, steps[0], rtol=1e-9, atol=1e-12):
                raise DomainError(f"{path}: column {j} is not a regular grid")
            h = float(steps[0])
        else:
            h = 2.0 * max(abs(float(axis[0])), 1e-12)
        origin.append(float(axis[0]))
        spacing.append(h)
        shape.append(len(axis))
    flags = np.zeros(shape, bool)
    idx = np.rint((coords - np.asarray(origin)) / np.asarray(spacing)).astype(int)
    flags[tuple(idx.T)] = flag > 0.5
    grid = GridTable(tuple(origin), tuple(spacing), flags)
    lo, hi = grid.cells()
    if len(lo) == 0:
        raise DomainError(f"{path}: table has no flagged cells")
    touches = bool(np.all(np.any(lo <= 0.0, axis=0)))
    return DomainProfile(
        "table",
        n=n,
        bounding_radius=tuple(hi.max(axis=0)),
        contains_origin=touches,
        downward_closed=False,
        table=grid,
        label=f"table({path.name})",
    )


def squared_region(domain: DomainProfile) -> DomainProfile:
    """The profile of ``(x_1**2, ..., x_n**2)`` over the region: ``t -> D(sqrt(t))``."""
    common = dict(
        n=domain.n,
        bounding_radius=tuple(np.square(domain.bounding_radius)),
        contains_origin=domain.contains_origin,
        downward_closed=domain.downward_closed,
        label=f"squared({domain.label})",
        _root=domain,
    )
    if domain.kind == "polydisk":
        return DomainProfile("polydisk", radii=tuple(np.square(domain.radii)), **common)
    if domain.kind in ("ball", "ellipsoid"):
        return DomainProfile(
            "ellipsoid",
            radii=tuple(np.square(domain.radii)),
            exponents=tuple(np.asarray(domain.exponents) / 2.0),
            **common,
        )
    pred = domain.indicator
    return DomainProfile("generic", predicate=lambda t: pred(np.sqrt(t)), **common)


def rescale_into_unit_box(domain: DomainProfile, margin: float = RESCALE_MARGIN) -> tuple[DomainProfile, np.ndarray]:
    """Return ``(rescaled, scale)`` with ``rescaled.indicator(x) == domain.indicator(scale * x)``.

    ``scale = bounding_radius * (1 + margin)`` so the image sits strictly inside
    ``[0, 1)^n``.  Moments transform as
    ``int t^k dV(t) = prod(scale**(k+1)) * int x^k dV(x)``.
    """
    b = np.asarray(domain.bounding_radius, dtype=float)
    if not np.all(np.isfinite(b)):
        raise DomainError("unbounded profile cannot be rescaled")
    scale = b * (1.0 + margin)
    return domain.scaled(scale), scale


_NUM = r"[-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?"


def parse_domain(text: str, n: int | None = None, base_dir: Path | None = None) -> DomainProfile:
    """Parse ``polydisk(1,1)``, ``ball(1)``, ``ball(1, n=3)``,
    ``ellipsoid(p=(2,4), r=1)`` or ``table(file.csv)``.
    """
    s = text.strip()
    m = re.fullmatch(r"(\w+)\s*\((.*)\)", s, flags=re.S)
    if not m:
        raise DomainError(f"cannot parse domain spec {text!r}")
    kind, args = m.group(1).lower(), m.group(2).strip()
    if kind == "polydisk":
        vals = [float(v) for v in re.findall(_NUM, args)]
        if not vals:
            raise DomainError("polydisk needs at least one radius")
        return polydisk(*vals)
    if kind == "ball":
        nm = re.search(r"n\s*=\s*(\d+)", args)
        dim = int(nm.group(1)) if nm else n
        if dim is None:
            raise DomainError("ball needs a dimension: ball(r, n=2)")
        radius_part = re.sub(r"n\s*=\s*\d+", "", args)
        vals = re.findall(_NUM, radius_part)
        return ball(float(vals[0]) if vals else 1.0, dim)
    if kind == "ellipsoid":
        pm = re.search(r"p\s*=\s*\(([^)]*)\)", args)
        if not pm:
            raise DomainError("ellipsoid needs p=(...)")
        p = [float(v) for v in re.findall(_NUM, pm.group(1))]
        rest = args[: pm.start()] + args[pm.end() :]
        rm = re.search(r"r\s*=\s*(\([^)]*\)|" + _NUM + ")", rest)
        if rm:
            rv = [float(v) for v in re.findall(_NUM, rm.group(1))]
            radius = rv[0] if len(rv) == 1 else rv
        else:
            radius = 1.0
        return ellipsoid(p, radius)
    if kind == "table":
        path = Path(args.strip().strip("\"'"))
        if base_dir is not None and not path.is_absolute():
            path = base_dir / path
        return table_from_csv(path)
    raise DomainError(f"unknown domain kind {kind!r}")
