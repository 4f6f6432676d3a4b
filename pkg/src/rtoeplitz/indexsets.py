"""Decidable subsets of N_0^n: finite unions of products of per-coordinate generators.

Each coordinate generator belongs to a class with a fixed verdict on whether
``sum 1/k`` over its positive elements diverges:

=====================  =====================  ===========
class                  elements               sum 1/k
=====================  =====================  ===========
``FULL``               0, 1, 2, ...           divergent
``AP(start, step)``    start + i*step         divergent
``FIN(a, b, ...)``     the listed values      convergent
``GEO(base)``          base**i, i >= 0        convergent
``POW(exponent)``      i**exponent, i >= 1    convergent
=====================  =====================  ===========

Intersections of generators stay inside the family; the only new shape is
``AP & GEO`` / ``AP & POW`` (:class:`Restricted`), which is convergent and has
a finite emptiness test.

Text grammar (whitespace insignificant)::

    set        := union ( "-" union )?            # optional exclusion
    union      := product ( "|" product )*
    product    := coord ( "x" coord )*
    coord      := atom ( "&" atom )*
    atom       := "FULL" | "AP(" int "," int ")" | "GEO(" int ")"
                | "POW(" int ")" | "FIN(" [int ("," int)*] ")" | "EMPTY"
                | "(" union ")"                    # only at top of a union
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "Generator",
    "FullN",
    "ArithmeticProgression",
    "FiniteSet",
    "GeometricSet",
    "PowerSet",
    "Restricted",
    "SymbolicIndexSet",
    "IndexSetParseError",
    "parse_index_set",
    "intersect_generators",
    "generator_subset",
]


def _iroot(x: int, p: int) -> int | None:
    """Exact integer p-th root of x, or None."""
    if x < 0:
        return None
    r = int(round(x ** (1.0 / p)))
    for c in (r - 1, r, r + 1):
        if c >= 0 and c**p == x:
            return c
    return None


def primitive_root(b: int) -> tuple[int, int]:
    """Write ``b = r**p`` with ``r`` not a perfect power; returns (r, p)."""
    if b < 2:
        raise ValueError("base must be >= 2")
    for p in range(b.bit_length(), 1, -1):
        r = _iroot(b, p)
        if r is not None and r >= 2:
            return r, p
    return b, 1


class Generator:
    """Base class for one-coordinate subsets of N_0."""

    divergent: bool = False

    def contains(self, x: int) -> bool:
        raise NotImplementedError

    def __contains__(self, x) -> bool:
        return self.contains(int(x))

    def is_empty(self) -> bool:
        return False

    def positive(self) -> "Generator":
        """Intersection with N = {1, 2, ...}."""
        return self

    def mask(self, upto: int) -> np.ndarray:
        """Boolean membership mask for 0..upto (inclusive)."""
        return np.fromiter((self.contains(x) for x in range(upto + 1)), bool, upto + 1)

    def expr(self) -> str:
        raise NotImplementedError

    def __str__(self) -> str:
        return self.expr()


@dataclass(frozen=True)
class FullN(Generator):
    divergent = True

    def contains(self, x: int) -> bool:
        return x >= 0

    def positive(self) -> Generator:
        return ArithmeticProgression(1, 1)

    def mask(self, upto: int) -> np.ndarray:
        return np.ones(upto + 1, bool)

    def expr(self) -> str:
        return "FULL"


@dataclass(frozen=True)
class ArithmeticProgression(Generator):
    start: int
    step: int
    divergent = True

    def __post_init__(self):
        if self.start < 1 or self.step < 1:
            raise ValueError("AP needs start >= 1 and step >= 1")

    def contains(self, x: int) -> bool:
        return x >= self.start and (x - self.start) % self.step == 0

    def mask(self, upto: int) -> np.ndarray:
        m = np.zeros(upto + 1, bool)
        m[self.start :: self.step] = True
        return m

    def expr(self) -> str:
        return f"AP({self.start},{self.step})"


@dataclass(frozen=True)
class FiniteSet(Generator):
    values: frozenset

    def __init__(self, values: Iterable[int] = ()):
        vals = frozenset(int(v) for v in values)
        if any(v < 0 for v in vals):
            raise ValueError("FIN values must be >= 0")
        object.__setattr__(self, "values", vals)

    def contains(self, x: int) -> bool:
        return x in self.values

    def is_empty(self) -> bool:
        return not self.values

    def positive(self) -> Generator:
        return FiniteSet(v for v in self.values if v >= 1)

    def mask(self, upto: int) -> np.ndarray:
        m = np.zeros(upto + 1, bool)
        for v in self.values:
            if v <= upto:
                m[v] = True
        return m

    def expr(self) -> str:
        if not self.values:
            return "EMPTY"
        return "FIN(" + ",".join(str(v) for v in sorted(self.values)) + ")"


@dataclass(frozen=True)
class GeometricSet(Generator):
    base: int

    def __post_init__(self):
        if self.base < 2:
            raise ValueError("GEO needs base >= 2")

    def contains(self, x: int) -> bool:
        if x < 1:
            return False
        while x % self.base == 0:
            x //= self.base
        return x == 1

    def mask(self, upto: int) -> np.ndarray:
        m = np.zeros(upto + 1, bool)
        v = 1
        while v <= upto:
            m[v] = True
            v *= self.base
        return m

    def expr(self) -> str:
        return f"GEO({self.base})"


@dataclass(frozen=True)
class PowerSet(Generator):
    exponent: int

    def __post_init__(self):
        if self.exponent < 2:
            raise ValueError("POW needs exponent >= 2")

    def contains(self, x: int) -> bool:
        return x >= 1 and _iroot(x, self.exponent) is not None

    def mask(self, upto: int) -> np.ndarray:
        m = np.zeros(upto + 1, bool)
        i = 1
        while i**self.exponent <= upto:
            m[i**self.exponent] = True
            i += 1
        return m

    def expr(self) -> str:
        return f"POW({self.exponent})"


@dataclass(frozen=True)
class Restricted(Generator):
    """Elements of a GEO or POW generator that also lie in an arithmetic progression."""

    progression: ArithmeticProgression
    base: Generator  # GeometricSet or PowerSet

    def contains(self, x: int) -> bool:
        return self.progression.contains(x) and self.base.contains(x)

    def is_empty(self) -> bool:
        s, d = self.progression.start, self.progression.step
        target = s % d
        if isinstance(self.base, GeometricSet):
            b = self.base.base
            x = 1
            while x < s:
                x *= b
            seen = set()
            r = x % d
            # residues of b**i mod d follow r -> b*r mod d; stop on the first repeat
            while r not in seen:
                if r == target:
                    return False
                seen.add(r)
                r = (r * b) % d
            return True
        e = self.base.exponent
        i0 = 1
        while i0**e < s:
            i0 += 1
        return all(pow(i, e, d) != target for i in range(i0, i0 + d))

    def mask(self, upto: int) -> np.ndarray:
        return self.progression.mask(upto) & self.base.mask(upto)

    def expr(self) -> str:
        return f"{self.progression.expr()}&{self.base.expr()}"


def _crt(a: ArithmeticProgression, b: ArithmeticProgression) -> Generator:
    """Intersection of two arithmetic progressions."""
    d1, d2 = a.step, b.step
    g = math.gcd(d1, d2)
    if (a.start - b.start) % g:
        return FiniteSet()
    lcm = d1 // g * d2
    # x = a.start + d1*t with d1*t = b.start - a.start (mod d2)
    m2 = d2 // g
    t = ((b.start - a.start) // g * pow(d1 // g, -1, m2)) % m2 if m2 > 1 else 0
    x0 = a.start + d1 * t
    lo = max(a.start, b.start)
    return ArithmeticProgression(lo + (x0 - lo) % lcm, lcm)


def _conv_meet(a: Generator, b: Generator) -> Generator:
    """Intersection of two GEO/POW generators (always contains 1)."""
    if isinstance(a, PowerSet) and isinstance(b, PowerSet):
        return PowerSet(math.lcm(a.exponent, b.exponent))
    if isinstance(a, PowerSet):
        a, b = b, a
    ra, pa = primitive_root(a.base)
    if isinstance(b, GeometricSet):
        rb, pb = primitive_root(b.base)
        if ra != rb:
            return FiniteSet([1])
        return GeometricSet(ra ** math.lcm(pa, pb))
    # r**(p*i) is a perfect e-th power iff e divides p*i, since r is not a perfect power
    return GeometricSet(ra ** math.lcm(pa, b.exponent))


def intersect_generators(a: Generator, b: Generator) -> Generator:
    """Exact intersection, kept in the generator family."""
    if isinstance(a, FiniteSet):
        return FiniteSet(v for v in a.values if b.contains(v))
    if isinstance(b, FiniteSet):
        return FiniteSet(v for v in b.values if a.contains(v))
    if isinstance(a, FullN):
        return b
    if isinstance(b, FullN):
        return a
    if isinstance(a, ArithmeticProgression) and isinstance(b, ArithmeticProgression):
        return _crt(a, b)
    ap: ArithmeticProgression | None = None
    conv: Generator | None = None
    for g in (a, b):
        if isinstance(g, ArithmeticProgression):
            ap = g if ap is None else _crt(ap, g)
        elif isinstance(g, Restricted):
            ap = g.progression if ap is None else _crt(ap, g.progression)
            conv = g.base if conv is None else _conv_meet(conv, g.base)
        else:
            conv = g if conv is None else _conv_meet(conv, g)
        if isinstance(ap, FiniteSet):
            return ap
    if isinstance(conv, FiniteSet):
        return FiniteSet(v for v in conv.values if ap is None or ap.contains(v))
    if ap is None:
        return conv
    out = Restricted(ap, conv)
    return FiniteSet() if out.is_empty() else out


def generator_subset(a: Generator, b: Generator) -> bool:
    """Sound (possibly incomplete) test of ``a <= b``; False means "not proven"."""
    if a.is_empty() or isinstance(b, FullN):
        return True
    if isinstance(a, FiniteSet):
        return all(b.contains(v) for v in a.values)
    if isinstance(a, FullN):
        return False
    if isinstance(b, ArithmeticProgression):
        if isinstance(a, ArithmeticProgression):
            return a.start >= b.start and b.contains(a.start) and a.step % b.step == 0
        if isinstance(a, Restricted):
            return generator_subset(a.progression, b)
        return False
    if isinstance(b, (GeometricSet, PowerSet)):
        inner = a.base if isinstance(a, Restricted) else a
        if isinstance(inner, (GeometricSet, PowerSet)):
            return _conv_meet(inner, b) == inner
        return False
    if isinstance(b, Restricted):
        return generator_subset(a, b.progression) and generator_subset(a, b.base)
    return False


Component = tuple  # tuple[Generator, ...]


def _component_empty(c: Component) -> bool:
    return any(g.is_empty() for g in c)


def _component_expr(c: Component) -> str:
    return " x ".join(g.expr() for g in c)


@dataclass(frozen=True)
class SymbolicIndexSet:
    """Union of product components, minus an optional union of excluded components."""

    n: int
    components: tuple = ()
    excluded: tuple = ()

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be >= 1")
        object.__setattr__(self, "components", self._normalise(self.components))
        object.__setattr__(self, "excluded", self._normalise(self.excluded))

    def _normalise(self, comps) -> tuple:
        out = []
        seen = set()
        for c in comps:
            c = tuple(c)
            if len(c) != self.n:
                raise ValueError(f"component of length {len(c)} in a {self.n}-dimensional set")
            if _component_empty(c) or c in seen:
                continue
            seen.add(c)
            out.append(c)
        return tuple(out)

    @classmethod
    def full(cls, n: int) -> "SymbolicIndexSet":
        return cls(n, ((FullN(),) * n,))

    @classmethod
    def empty(cls, n: int) -> "SymbolicIndexSet":
        return cls(n, ())

    @classmethod
    def product(cls, *gens: Generator) -> "SymbolicIndexSet":
        return cls(len(gens), (tuple(gens),))

    def contains(self, point: Sequence[int]) -> bool:
        pt = tuple(int(p) for p in point)
        if len(pt) != self.n:
            raise ValueError("dimension mismatch")
        if any(p < 0 for p in pt):
            return False

        def inside(c):
            return all(g.contains(x) for g, x in zip(c, pt))

        return any(inside(c) for c in self.components) and not any(inside(c) for c in self.excluded)

    def __contains__(self, point) -> bool:
        return self.contains(point)

    def mask(self, upto: int) -> np.ndarray:
        """Boolean membership array over the grid {0..upto}^n."""
        shape = (upto + 1,) * self.n

        def comp_mask(c):
            m = np.ones(shape, bool)
            for axis, g in enumerate(c):
                view = [1] * self.n
                view[axis] = upto + 1
                m = m & g.mask(upto).reshape(view)
            return m

        inc = np.zeros(shape, bool)
        for c in self.components:
            inc |= comp_mask(c)
        for c in self.excluded:
            inc &= ~comp_mask(c)
        return inc

    def is_empty(self) -> bool:
        if self.excluded:
            raise NotImplementedError("emptiness of a set with exclusions is not decided symbolically")
        return not self.components

    def union(self, other: "SymbolicIndexSet") -> "SymbolicIndexSet":
        if other.n != self.n:
            raise ValueError("dimension mismatch")
        if self.excluded or other.excluded:
            raise NotImplementedError("union of sets with exclusions")
        return SymbolicIndexSet(self.n, self.components + other.components)

    def __or__(self, other):
        return self.union(other)

    def intersect(self, other: "SymbolicIndexSet") -> "SymbolicIndexSet":
        if other.n != self.n:
            raise ValueError("dimension mismatch")
        if self.excluded or other.excluded:
            raise NotImplementedError("intersection of sets with exclusions")
        comps = [
            tuple(intersect_generators(g, h) for g, h in zip(c, d))
            for c in self.components
            for d in other.components
        ]
        return SymbolicIndexSet(self.n, comps)

    def minus(self, other: "SymbolicIndexSet") -> "SymbolicIndexSet":
        """Set difference, represented with an exclusion list."""
        if other.n != self.n:
            raise ValueError("dimension mismatch")
        if self.excluded or other.excluded:
            raise NotImplementedError("nested exclusions")
        return SymbolicIndexSet(self.n, self.components, other.components)

    def positive_part(self) -> "SymbolicIndexSet":
        """Intersection with N^n (drops every point with a zero coordinate)."""
        pos = lambda comps: [tuple(g.positive() for g in c) for c in comps]  # noqa: E731
        return SymbolicIndexSet(self.n, pos(self.components), pos(self.excluded))

    def fiber(self, prefix: Sequence[int]) -> "SymbolicIndexSet":
        """Points of the set whose first ``len(prefix)`` coordinates equal ``prefix``."""
        prefix = tuple(int(a) for a in prefix)
        if len(prefix) > self.n:
            raise ValueError("prefix longer than the dimension")
        pin = tuple(FiniteSet([a]) for a in prefix)

        def restrict(comps):
            out = []
            for c in comps:
                if all(g.contains(a) for g, a in zip(c, prefix)):
                    out.append(pin + tuple(c[len(prefix) :]))
            return out

        return SymbolicIndexSet(self.n, restrict(self.components), restrict(self.excluded))

    def projection_divergent(self, axis: int) -> bool:
        """Whether sum 1/k over the positive part of the axis projection diverges."""
        if self.excluded:
            raise NotImplementedError("projection of a set with exclusions")
        return any(c[axis].divergent for c in self.components)

    def is_subset_of(self, other: "SymbolicIndexSet") -> bool:
        """Sound test: every component sits inside a single component of ``other``."""
        if self.excluded or other.excluded:
            return False
        return all(
            any(all(generator_subset(g, h) for g, h in zip(c, d)) for d in other.components)
            for c in self.components
        )

    def expr(self) -> str:
        if not self.components:
            body = " x ".join(["EMPTY"] * self.n)
        else:
            body = " | ".join(_component_expr(c) for c in self.components)
        if self.excluded:
            body = f"({body}) - ({' | '.join(_component_expr(c) for c in self.excluded)})"
        return body

    def __str__(self) -> str:
        return self.expr()


class IndexSetParseError(ValueError):
    def __init__(self, message: str, text: str, pos: int, expected: str | None = None):
        self.text = text
        self.pos = pos
        self.expected = expected
        detail = f"{message} at position {pos}"
        if expected:
            detail += f" (expected {expected})"
        super().__init__(detail)


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0

    def _ws(self):
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1

    def _peek(self, token: str) -> bool:
        self._ws()
        return self.text.startswith(token, self.pos)

    def _eat(self, token: str):
        self._ws()
        if not self.text.startswith(token, self.pos):
            found = self.text[self.pos : self.pos + 8] or "end of input"
            raise IndexSetParseError(f"unexpected {found!r}", self.text, self.pos, repr(token))
        self.pos += len(token)

    def _int(self) -> int:
        self._ws()
        start = self.pos
        while self.pos < len(self.text) and self.text[self.pos].isdigit():
            self.pos += 1
        if start == self.pos:
            raise IndexSetParseError("missing integer", self.text, start, "integer")
        return int(self.text[start : self.pos])

    def _ints(self) -> list[int]:
        self._eat("(")
        vals = []
        if not self._peek(")"):
            vals.append(self._int())
            while self._peek(","):
                self._eat(",")
                vals.append(self._int())
        self._eat(")")
        return vals

    def _atom(self) -> Generator:
        self._ws()
        start = self.pos
        for name in ("FULL", "EMPTY", "AP", "GEO", "POW", "FIN"):
            if self.text.startswith(name, self.pos):
                self.pos += len(name)
                break
        else:
            raise IndexSetParseError("unknown generator", self.text, start, "FULL, AP, GEO, POW, FIN or EMPTY")
        try:
            if name == "FULL":
                return FullN()
            if name == "EMPTY":
                return FiniteSet()
            if name == "FIN":
                return FiniteSet(self._ints())
            args = self._ints()
            arity = 2 if name == "AP" else 1
            if len(args) != arity:
                raise IndexSetParseError(f"{name} takes {arity} argument(s)", self.text, start)
            if name == "AP":
                return ArithmeticProgression(*args)
            if name == "GEO":
                return GeometricSet(args[0])
            return PowerSet(args[0])
        except ValueError as exc:
            if isinstance(exc, IndexSetParseError):
                raise
            raise IndexSetParseError(str(exc), self.text, start) from None

    def _coord(self) -> Generator:
        g = self._atom()
        while self._peek("&"):
            self._eat("&")
            g = intersect_generators(g, self._atom())
        return g

    def _product(self) -> tuple:
        gens = [self._coord()]
        while self._peek("x"):
            self._eat("x")
            gens.append(self._coord())
        return tuple(gens)

    def _union(self) -> list:
        if self._peek("("):
            self._eat("(")
            comps = self._union()
            self._eat(")")
        else:
            comps = [self._product()]
        while self._peek("|"):
            self._eat("|")
            comps.append(self._product())
        return comps

    def parse(self) -> SymbolicIndexSet:
        comps = self._union()
        excl = []
        if self._peek("-"):
            self._eat("-")
            excl = self._union()
        self._ws()
        if self.pos != len(self.text):
            raise IndexSetParseError("trailing input", self.text, self.pos, "'|', 'x', '&' or end of input")
        lengths = {len(c) for c in comps + excl}
        if len(lengths) != 1:
            raise IndexSetParseError("components have different dimensions", self.text, 0)
        return SymbolicIndexSet(lengths.pop(), tuple(comps), tuple(excl))


def parse_index_set(text: str) -> SymbolicIndexSet:
    """Parse e.g. ``"AP(1,2) x FULL | FIN(3,5) x GEO(2)"``."""
    return _Parser(text).parse()
