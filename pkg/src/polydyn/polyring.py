"""Exact sparse multivariate polynomials over the rationals.

Every polynomial lives over a :class:`VarTable`, an ordered list of graded
symbols.  Coefficients are ``gmpy2.mpq`` values, so identities verify to an
exact zero.  Polynomials are immutable; all operations return new objects.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, Iterable, Iterator, Mapping, Optional, Sequence, Tuple, Union

from gmpy2 import mpq

Monomial = Tuple[int, ...]
Scalar = Union[int, Fraction, "mpq"]


class PolyError(ValueError):
    pass


class TableMismatch(PolyError):
    pass


class ParseError(PolyError):
    pass


class _Mixed:
    """Marker returned by :meth:`Poly.grade` for inhomogeneous polynomials."""

    _inst = None

    def __new__(cls):
        if cls._inst is None:
            cls._inst = super().__new__(cls)
        return cls._inst

    def __repr__(self):
        return "Mixed"

    def __reduce__(self):
        return (_Mixed, ())


Mixed = _Mixed()


def to_q(c) -> mpq:
    """Convert an int, Fraction, mpq or ``"p/q"`` string to an exact rational."""
    if isinstance(c, bool):
        raise TypeError("bool is not a coefficient")
    if isinstance(c, Fraction):
        return mpq(c.numerator, c.denominator)
    if isinstance(c, float):
        raise TypeError("floating coefficients are not allowed")
    return mpq(c)


@dataclass(frozen=True)
class VarTable:
    """Ordered graded symbols.  Two tables are the same type iff equal."""

    name: str
    names: Tuple[str, ...]
    grades: Tuple[int, ...]

    def __post_init__(self):
        if len(self.names) != len(self.grades):
            raise PolyError("names and grades differ in length")
        if len(set(self.names)) != len(self.names):
            raise PolyError(f"duplicate symbol in table {self.name}")
        for g in self.grades:
            if not isinstance(g, int) or g < 0:
                raise PolyError(f"grade must be a non-negative integer, got {g!r}")
        object.__setattr__(self, "_index", {n: i for i, n in enumerate(self.names)})

    @classmethod
    def of(cls, name: str, pairs: Iterable[Tuple[str, int]]) -> "VarTable":
        pairs = list(pairs)
        return cls(name, tuple(p[0] for p in pairs), tuple(p[1] for p in pairs))

    def __len__(self):
        return len(self.names)

    def __contains__(self, name):
        return name in self._index

    def index(self, name: str) -> int:
        try:
            return self._index[name]
        except KeyError:
            raise PolyError(f"unknown symbol {name!r} in table {self.name}") from None

    def grade_of(self, name: str) -> int:
        return self.grades[self.index(name)]

    def var(self, name: str) -> "Poly":
        e = [0] * len(self.names)
        e[self.index(name)] = 1
        return Poly(self, {tuple(e): mpq(1)})

    def vars(self, *names: str) -> Tuple["Poly", ...]:
        return tuple(self.var(n) for n in names)

    def const(self, c) -> "Poly":
        return Poly.constant(self, c)

    def zero(self) -> "Poly":
        return Poly(self, {})

    def one(self) -> "Poly":
        return Poly.constant(self, 1)

    def parse(self, text: str) -> "Poly":
        return parse(text, self)

    def __repr__(self):
        return f"VarTable({self.name!r})"


def _mono_grade(table: VarTable, m: Monomial) -> int:
    return sum(e * g for e, g in zip(m, table.grades))


class Poly:
    """Immutable sparse polynomial ``{monomial: coefficient}`` over a VarTable."""

    __slots__ = ("table", "_terms", "_hash")

    def __init__(self, table: VarTable, terms: Optional[Mapping[Monomial, Scalar]] = None,
                 _trusted: bool = False):
        self.table = table
        if _trusted:
            self._terms = terms
        else:
            clean = {}
            n = len(table)
            for m, c in (terms or {}).items():
                m = tuple(m)
                if len(m) != n or any(e < 0 for e in m):
                    raise PolyError(f"bad monomial {m} for table {table.name}")
                c = to_q(c)
                if c:
                    clean[m] = clean.get(m, mpq(0)) + c
                    if not clean[m]:
                        del clean[m]
            self._terms = clean
        self._hash = None

    @classmethod
    def constant(cls, table: VarTable, c) -> "Poly":
        c = to_q(c)
        if not c:
            return cls(table, {}, _trusted=True)
        return cls(table, {(0,) * len(table): c}, _trusted=True)

    # -- basic accessors -------------------------------------------------
    @property
    def terms(self) -> Dict[Monomial, mpq]:
        return dict(self._terms)

    def items(self):
        return self._terms.items()

    def __len__(self):
        return len(self._terms)

    def __bool__(self):
        return bool(self._terms)

    def is_zero(self) -> bool:
        return not self._terms

    def coeff(self, monomial: Union[Monomial, Mapping[str, int]]) -> mpq:
        if isinstance(monomial, Mapping):
            e = [0] * len(self.table)
            for k, v in monomial.items():
                e[self.table.index(k)] = v
            monomial = tuple(e)
        return self._terms.get(tuple(monomial), mpq(0))

    def constant_term(self) -> mpq:
        return self._terms.get((0,) * len(self.table), mpq(0))

    def is_constant(self) -> bool:
        z = (0,) * len(self.table)
        return all(m == z for m in self._terms)

    def variables(self) -> Tuple[str, ...]:
        used = set()
        for m in self._terms:
            used.update(i for i, e in enumerate(m) if e)
        return tuple(self.table.names[i] for i in sorted(used))

    def degree_in(self, name: str) -> int:
        i = self.table.index(name)
        return max((m[i] for m in self._terms), default=-1)

    def grade(self):
        """Common weighted degree of all terms, or ``Mixed``.

        The zero polynomial is homogeneous of every grade; ``None`` is returned.
        """
        grades = {_mono_grade(self.table, m) for m in self._terms}
        if not grades:
            return None
        if len(grades) > 1:
            return Mixed
        return grades.pop()

    def homogeneous_parts(self) -> Dict[int, "Poly"]:
        parts: Dict[int, dict] = {}
        for m, c in self._terms.items():
            parts.setdefault(_mono_grade(self.table, m), {})[m] = c
        return {g: Poly(self.table, t, _trusted=True) for g, t in parts.items()}

    # -- arithmetic ------------------------------------------------------
    def _coerce(self, other) -> "Poly":
        if isinstance(other, Poly):
            if other.table != self.table:
                raise TableMismatch(f"{self.table.name} vs {other.table.name}")
            return other
        return Poly.constant(self.table, other)

    def __add__(self, other):
        other = self._coerce(other)
        if len(other._terms) > len(self._terms):
            big, small = other._terms, self._terms
        else:
            big, small = self._terms, other._terms
        out = dict(big)
        for m, c in small.items():
            v = out.get(m)
            if v is None:
                out[m] = c
            else:
                v = v + c
                if v:
                    out[m] = v
                else:
                    del out[m]
        return Poly(self.table, out, _trusted=True)

    __radd__ = __add__

    def __neg__(self):
        return Poly(self.table, {m: -c for m, c in self._terms.items()}, _trusted=True)

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def scale(self, c) -> "Poly":
        c = to_q(c)
        if not c:
            return self.table.zero()
        return Poly(self.table, {m: v * c for m, v in self._terms.items()}, _trusted=True)

    def __mul__(self, other):
        if not isinstance(other, Poly):
            try:
                return self.scale(other)
            except TypeError:
                return NotImplemented
        other = self._coerce(other)
        a, b = self._terms, other._terms
        if len(a) < len(b):
            a, b = b, a
        out: Dict[Monomial, mpq] = {}
        get = out.get
        for mb, cb in b.items():
            for ma, ca in a.items():
                m = tuple([x + y for x, y in zip(ma, mb)])
                v = get(m)
                out[m] = ca * cb if v is None else v + ca * cb
        return Poly(self.table, {m: c for m, c in out.items() if c}, _trusted=True)

    def __rmul__(self, other):
        return self.__mul__(other)

    def __truediv__(self, other):
        if isinstance(other, Poly):
            if not other.is_constant() or other.is_zero():
                raise PolyError("division only by nonzero constants")
            other = other.constant_term()
        return self.scale(1 / to_q(other))

    def __pow__(self, n: int):
        if not isinstance(n, int) or n < 0:
            raise PolyError(f"exponent must be a non-negative integer, got {n!r}")
        result = self.table.one()
        base = self
        while n:
            if n & 1:
                result = result * base
            n >>= 1
            if n:
                base = base * base
        return result

    def __eq__(self, other):
        if isinstance(other, Poly):
            return self.table == other.table and self._terms == other._terms
        try:
            return self == Poly.constant(self.table, other)
        except TypeError:
            return NotImplemented

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self.table.names, frozenset(self._terms.items())))
        return self._hash

    # -- calculus and substitution ----------------------------------------
    def diff(self, name: str) -> "Poly":
        i = self.table.index(name)
        out = {}
        for m, c in self._terms.items():
            e = m[i]
            if e:
                mm = list(m)
                mm[i] = e - 1
                out[tuple(mm)] = c * e
        return Poly(self.table, out, _trusted=True)

    def integrate(self, name: str) -> "Poly":
        """Antiderivative in one variable with zero constant of integration."""
        i = self.table.index(name)
        out = {}
        for m, c in self._terms.items():
            mm = list(m)
            mm[i] += 1
            out[tuple(mm)] = c / mm[i]
        return Poly(self.table, out, _trusted=True)

    def coefficients_in(self, name: str) -> Dict[int, "Poly"]:
        """Split as ``sum_k coeff_k * name**k``."""
        i = self.table.index(name)
        parts: Dict[int, dict] = {}
        for m, c in self._terms.items():
            mm = list(m)
            k = mm[i]
            mm[i] = 0
            parts.setdefault(k, {})[tuple(mm)] = c
        return {k: Poly(self.table, t, _trusted=True) for k, t in parts.items()}

    def substitute(self, mapping: Mapping[str, "Poly"], target: Optional[VarTable] = None) -> "Poly":
        """Ring homomorphism sending each symbol to a polynomial.

        Symbols without an image keep their name and must exist in the target
        table.  Scalars are allowed as images.
        """
        if target is None:
            imgs = [p for p in mapping.values() if isinstance(p, Poly)]
            target = imgs[0].table if imgs else self.table
        for k in mapping:
            self.table.index(k)
        images = []
        for name in self.table.names:
            if name in mapping:
                img = mapping[name]
                if isinstance(img, Poly):
                    if img.table != target:
                        raise TableMismatch(f"image of {name} lives over {img.table.name}")
                else:
                    img = Poly.constant(target, img)
                images.append(img)
            elif name in target:
                images.append(target.var(name))
            else:
                images.append(None)
        used = set()
        for m in self._terms:
            used.update(i for i, e in enumerate(m) if e)
        for i in used:
            if images[i] is None:
                raise PolyError(f"symbol {self.table.names[i]!r} has no image in {target.name}")
        cache: Dict[Tuple[int, int], Poly] = {}

        def power(i, e):
            key = (i, e)
            if key not in cache:
                cache[key] = images[i] if e == 1 else power(i, e - 1) * images[i]
            return cache[key]

        total: Dict[Monomial, mpq] = {}
        for m, c in self._terms.items():
            term = None
            for i, e in enumerate(m):
                if e:
                    term = power(i, e) if term is None else term * power(i, e)
            if term is None:
                term = target.one()
            for tm, tc in term._terms.items():
                v = total.get(tm)
                total[tm] = tc * c if v is None else v + tc * c
        return Poly(target, {m: c for m, c in total.items() if c}, _trusted=True)

    def evaluate(self, values: Mapping[str, complex]) -> complex:
        """Numerical value at a point given by symbol -> number."""
        vals = [values.get(n) for n in self.table.names]
        total = 0j
        for m, c in self._terms.items():
            t = complex(c)
            for i, e in enumerate(m):
                if e:
                    if vals[i] is None:
                        raise PolyError(f"no value for {self.table.names[i]!r}")
                    t *= vals[i] ** e
            total += t
        return total

    def exact_value(self, values: Mapping[str, Scalar]) -> mpq:
        vals = {k: to_q(v) for k, v in values.items()}
        total = mpq(0)
        for m, c in self._terms.items():
            t = c
            for i, e in enumerate(m):
                if e:
                    t *= vals[self.table.names[i]] ** e
            total += t
        return total

    def retable(self, target: VarTable) -> "Poly":
        """Same polynomial over another table containing all used symbols."""
        return self.substitute({}, target=target)

    # -- printing --------------------------------------------------------
    def sorted_terms(self) -> Iterator[Tuple[Monomial, mpq]]:
        """Terms in graded lexicographic order, highest first."""
        g = self.table.grades
        key = lambda mc: (sum(e * w for e, w in zip(mc[0], g)), mc[0])
        return iter(sorted(self._terms.items(), key=key, reverse=True))

    def __str__(self):
        return to_text(self)

    def __repr__(self):
        return f"Poly[{self.table.name}]({to_text(self)})"


def _mono_text(table: VarTable, m: Monomial) -> str:
    parts = []
    for name, e in zip(table.names, m):
        if e == 1:
            parts.append(name)
        elif e:
            parts.append(f"{name}^{e}")
    return "*".join(parts)


def to_text(p: Poly) -> str:
    """Canonical ASCII form, e.g. ``12*x2*x3 + 4*z5``."""
    if p.is_zero():
        return "0"
    out = []
    for i, (m, c) in enumerate(p.sorted_terms()):
        neg = c < 0
        a = -c if neg else c
        mono = _mono_text(p.table, m)
        if not mono:
            body = str(a)
        elif a == 1:
            body = mono
        else:
            body = f"{a}*{mono}"
        if i == 0:
            out.append(("-" if neg else "") + body)
        else:
            out.append((" - " if neg else " + ") + body)
    return "".join(out)


_TOKEN = re.compile(r"\s*(?:(\d+)|([A-Za-z_][A-Za-z_0-9]*)|(\*\*|[-+*/^()]))")


def _tokenize(text: str):
    pos = 0
    toks = []
    text = text.rstrip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise ParseError(f"unexpected character at {pos}: {text[pos:pos + 10]!r}")
        pos = m.end()
        if m.group(1) is not None:
            toks.append(("num", int(m.group(1))))
        elif m.group(2) is not None:
            toks.append(("sym", m.group(2)))
        else:
            op = m.group(3)
            toks.append(("op", "^" if op == "**" else op))
    return toks


class _Parser:
    def __init__(self, text: str, table: VarTable):
        self.toks = _tokenize(text)
        self.i = 0
        self.table = table

    def peek(self):
        return self.toks[self.i] if self.i < len(self.toks) else (None, None)

    def take(self):
        t = self.peek()
        self.i += 1
        return t

    def expect(self, op):
        kind, val = self.take()
        if kind != "op" or val != op:
            raise ParseError(f"expected {op!r}, got {val!r}")

    def parse(self) -> Poly:
        if not self.toks:
            raise ParseError("empty expression")
        p = self.expr()
        if self.i != len(self.toks):
            raise ParseError(f"trailing input at token {self.peek()[1]!r}")
        return p

    def expr(self) -> Poly:
        p = self.term()
        while self.peek() in (("op", "+"), ("op", "-")):
            _, op = self.take()
            q = self.term()
            p = p + q if op == "+" else p - q
        return p

    def term(self) -> Poly:
        p = self.unary()
        while True:
            kind, val = self.peek()
            if kind == "op" and val == "*":
                self.take()
                p = p * self.unary()
            elif kind == "op" and val == "/":
                self.take()
                q = self.unary()
                if not q.is_constant() or q.is_zero():
                    raise ParseError("division only by nonzero rational constants")
                p = p / q
            else:
                return p

    def unary(self) -> Poly:
        kind, val = self.peek()
        if kind == "op" and val in "+-":
            self.take()
            p = self.unary()
            return -p if val == "-" else p
        return self.power()

    def power(self) -> Poly:
        base = self.atom()
        if self.peek() == ("op", "^"):
            self.take()
            neg = False
            if self.peek() == ("op", "-"):
                self.take()
                neg = True
            kind, val = self.take()
            if kind != "num":
                raise ParseError("exponent must be an integer literal")
            if neg:
                raise ParseError("negative exponent")
            return base ** val
        return base

    def atom(self) -> Poly:
        kind, val = self.take()
        if kind == "num":
            return Poly.constant(self.table, val)
        if kind == "sym":
            if val not in self.table:
                raise ParseError(f"unknown symbol {val!r} for table {self.table.name}")
            return self.table.var(val)
        if kind == "op" and val == "(":
            p = self.expr()
            self.expect(")")
            return p
        raise ParseError(f"unexpected token {val!r}")


def parse(text: str, table: VarTable) -> Poly:
    """Parse ``+ - * / ^`` expressions with integer/rational literals."""
    return _Parser(text, table).parse()


def arith(op: str, a: Poly, b) -> Poly:
    if op == "add":
        return a + b
    if op == "sub":
        return a - b
    if op == "mul":
        return a * b
    if op == "pow":
        return a ** b
    raise PolyError(f"unknown operation {op!r}")


def grade(p: Poly):
    return p.grade()


def substitute(p: Poly, mapping: Mapping[str, Poly], target: Optional[VarTable] = None) -> Poly:
    return p.substitute(mapping, target)


def det(matrix: Sequence[Sequence[Poly]]) -> Poly:
    """Determinant by Laplace expansion along rows with memoised minors.

    Exact and division free; fine for the 3x3 .. 6x6 matrices used here.
    """
    n = len(matrix)
    if any(len(r) != n for r in matrix):
        raise PolyError("matrix is not square")
    table = matrix[0][0].table
    memo: Dict[Tuple[int, ...], Poly] = {}

    def minor(row: int, cols: Tuple[int, ...]) -> Poly:
        if row == n:
            return table.one()
        if cols in memo:
            return memo[cols]
        total = table.zero()
        for k, c in enumerate(cols):
            entry = matrix[row][c]
            if entry.is_zero():
                continue
            sub = minor(row + 1, cols[:k] + cols[k + 1:])
            if sub.is_zero():
                continue
            t = entry * sub
            total = total - t if k % 2 else total + t
        memo[cols] = total
        return total

    return minor(0, tuple(range(n)))


# -- canonical tables -------------------------------------------------------

G1 = VarTable.of("G1", [("x2", 2), ("x3", 3), ("x4", 4), ("g2", 4), ("g3", 6)])
G1_PARAMS = VarTable.of("G1_PARAMS", [("g2", 4), ("g3", 6)])
HAT1 = VarTable.of("HAT1", [("x2", 2), ("x4", 4), ("x6", 6)])
G2 = VarTable.of("G2", [("x2", 2), ("x3", 3), ("x4", 4), ("z4", 4), ("z5", 5), ("z6", 6),
                        ("l4", 4), ("l6", 6), ("l8", 8), ("l10", 10)])
LAMBDA = VarTable.of("LAMBDA", [("l4", 4), ("l6", 6), ("l8", 8), ("l10", 10)])
C7 = VarTable.of("C7", [("x2", 2), ("x4", 4), ("z4", 4), ("x6", 6), ("z6", 6),
                        ("w8", 8), ("z10", 10)])
PARAMS_JET = [("a", 4), ("b", 6), ("l4", 4), ("l6", 6), ("l8", 8), ("l10", 10)]

# base grade of each jet family: U = 2*wp20, V = 2*wp13, dotted = d/du3
JET_FAMILIES = {"U": 2, "V": 4, "Ud": 5, "Vd": 7}


def jet_name(family: str, order: int) -> str:
    return family if order == 0 else f"{family}{order}"


def make_jet_table(max_order: int = 12, families: Sequence[str] = ("U",),
                   name: Optional[str] = None) -> VarTable:
    """Jet variables ``U, U1, ..., U<max_order>`` (and other families) plus parameters."""
    pairs = []
    for fam in families:
        base = JET_FAMILIES[fam]
        pairs += [(jet_name(fam, k), base + k) for k in range(max_order + 1)]
    pairs += PARAMS_JET
    return VarTable.of(name or f"JET{max_order}_{'_'.join(families)}", pairs)


JET = make_jet_table(12, ("U",), name="JET")
JET_UV = make_jet_table(12, ("U", "V", "Ud", "Vd"), name="JET_UV")
