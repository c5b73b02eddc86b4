"""Differential polynomials in the jets of U: total derivative, formal
integration, the Gelfand-Dikii resolvent coefficients and Novikov equations."""

from __future__ import annotations

import re
from functools import lru_cache
from typing import Dict, List, Sequence, Tuple, Union

from gmpy2 import mpq

from .polyring import JET, Poly, PolyError, VarTable, jet_name, make_jet_table, to_text
from .report import Report

_JET_RE = re.compile(r"^(U|V|Ud|Vd)(\d*)$")


class NotExact(PolyError):
    """The expression is not the total derivative of a differential polynomial."""


class JetOverflow(PolyError):
    pass


def split_jet(name: str) -> Tuple[str, int]:
    """``"U3" -> ("U", 3)``; parameters raise PolyError."""
    m = _JET_RE.match(name)
    if not m:
        raise PolyError(f"{name!r} is not a jet variable")
    return m.group(1), int(m.group(2) or 0)


def is_jet(name: str) -> bool:
    return bool(_JET_RE.match(name))


def max_order(table: VarTable, family: str = "U") -> int:
    return max(split_jet(n)[1] for n in table.names if is_jet(n) and split_jet(n)[0] == family)


def total_derivative(e: Poly) -> Poly:
    """``d/du1`` acting by ``U^(k) -> U^(k+1)``; parameters are constants."""
    table = e.table
    out = table.zero()
    for name in e.variables():
        if not is_jet(name):
            continue
        fam, k = split_jet(name)
        nxt = jet_name(fam, k + 1)
        if nxt not in table:
            raise JetOverflow(f"{nxt} exceeds the jet order of table {table.name}")
        out = out + e.diff(name) * table.var(nxt)
    return out


def derivative(e: Poly, n: int = 1) -> Poly:
    for _ in range(n):
        e = total_derivative(e)
    return e


def _top_jet(e: Poly) -> Tuple[str, int]:
    best = None
    for name in e.variables():
        if is_jet(name):
            fam, k = split_jet(name)
            if best is None or k > best[1]:
                best = (fam, k)
    return best


def formal_integrate(e: Poly) -> Poly:
    """Return F with ``total_derivative(F) == e`` and no constant term.

    Works on differential polynomials in a single jet family.  Raises
    NotExact when no such F exists.
    """
    families = {split_jet(n)[0] for n in e.variables() if is_jet(n)}
    if len(families) > 1:
        raise PolyError("formal integration supports one jet family at a time")
    table = e.table
    F = table.zero()
    rest = e
    while not rest.is_zero():
        top = _top_jet(rest)
        if top is None or top[1] == 0:
            raise NotExact(f"remainder {to_text(rest)} is not a total derivative")
        fam, n = top
        var = jet_name(fam, n)
        parts = rest.coefficients_in(var)
        if max(parts) > 1:
            raise NotExact(f"nonlinear in the top jet {var}")
        piece = parts[1].integrate(jet_name(fam, n - 1))
        F = F + piece
        new_rest = rest - total_derivative(piece)
        nxt = _top_jet(new_rest) if not new_rest.is_zero() else None
        if nxt is not None and nxt[1] >= n:
            raise NotExact(f"top jet {var} does not cancel")
        rest = new_rest
    return F


def lenard_step(R: Poly) -> Poly:
    """Next resolvent coefficient: integrate ``R''' / 4 - U R' - U' R / 2``.

    The third derivative is the grading-consistent form of the Lenard
    operator ``d^2/4 - U - (U'/2) d^-1`` applied to ``R'``.
    """
    U = R.table.var("U")
    U1 = R.table.var("U1")
    rhs = derivative(R, 3).scale(mpq(1, 4)) - U * total_derivative(R) - (U1 * R).scale(mpq(1, 2))
    return formal_integrate(rhs)


def resolvents(n: int, table: VarTable = JET) -> List[Poly]:
    """``[R_0, ..., R_n]`` with ``R_0 = 1/2``."""
    return list(_resolvents(n, table))


@lru_cache(maxsize=None)
def _resolvents(n: int, table: VarTable) -> Tuple[Poly, ...]:
    if n == 0:
        return (Poly.constant(table, mpq(1, 2)),)
    prev = _resolvents(n - 1, table)
    return prev + (lenard_step(prev[-1]),)


def novikov_equation(c: Sequence[Union[int, Poly]], n: int, table: VarTable = JET) -> Poly:
    """``sum_{k=0}^{n+1} c_k R_k`` with the leading coefficient ``c_{n+1} = 1``.

    Coefficients may be rationals or polynomials in the parameters.
    """
    if len(c) != n + 2:
        raise PolyError(f"need {n + 2} coefficients, got {len(c)}")
    lead = c[-1]
    if not (lead == 1 if not isinstance(lead, Poly) else lead == table.one()):
        raise PolyError("leading coefficient c_{n+1} must be 1")
    R = resolvents(n + 1, table)
    total = table.zero()
    for ck, Rk in zip(c, R):
        total = total + ck * Rk
    return total


def kdv_grade_ok(R: Sequence[Poly]) -> bool:
    return all(Rk.grade() == 2 * k for k, Rk in enumerate(R) if k > 0) and R[0].grade() == 0


def export_table(R: Sequence[Poly]) -> Dict[str, str]:
    return {f"R{k}": to_text(Rk) for k, Rk in enumerate(R)}


# -- suite -----------------------------------------------------------------------------

def stated_resolvents(table: VarTable = JET) -> List[Poly]:
    P = table.parse
    return [
        P("1/2"),
        P("-1/4*U"),
        P("1/16*(3*U^2 - U2)"),
        P("-1/64*(10*U^3 - 10*U*U2 - 5*U1^2 + U4)"),
        P("1/256*(35*U^4 - 70*U*U1^2 - 70*U^2*U2 + 21*U2^2 + 28*U1*U3 + 14*U*U4 - U6)"),
    ]


def stationary4(table: VarTable = JET) -> Poly:
    return table.parse("U4 - 10*U*U2 - 5*U1^2 + 10*U^3 + a*U + b")


def reduce_mod_stationary4(p: Poly) -> Poly:
    """Eliminate U^(k), k >= 4, using the stationary equation and its total derivatives."""
    t = p.table
    E = stationary4(t)
    top = max_order(t)
    rules = {}
    rule = t.var("U4") - E
    for k in range(4, top + 1):
        rules[jet_name("U", k)] = rule
        if k < top:
            rule = total_derivative(rule)
    while any(split_jet(n)[1] >= 4 for n in p.variables() if is_jet(n)):
        n = max((n for n in p.variables() if is_jet(n)), key=lambda n: split_jet(n)[1])
        p = p.substitute({n: rules[n]}, target=t)
    return p


def stationary4_integrals(table: VarTable = JET) -> Dict[str, Poly]:
    """Candidates for the two integrals of the stationary equation, read off the first-integral identities.

    Solving the two identities satisfied by U = 2 wp20 for lambda8 and
    lambda10 with lambda4 = a/8, lambda6 = -b/16 gives differential
    polynomials whose total derivatives vanish modulo the stationary equation.
    """
    P = table.parse
    I1 = P("1/32*(U1*U3 - 1/2*U2^2 - 5*U*U1^2 + 5/2*U^4 + 1/2*a*U^2 + b*U + 1/8*a^2)")
    l4 = P("1/8*a")
    l6 = P("-1/16*b")
    U, U1, U2, U3 = table.vars("U", "U1", "U2", "U3")
    body = (U3 ** 2 - 10 * U * U2 ** 2 + 2 * U1 ** 2 * U2 + 4 * (5 * U ** 3 + 4 * l4 * U - 8 * l6) * U2
            - 2 * (15 * U ** 2 + 4 * l4) * U1 ** 2
            + 6 * U ** 5 + 16 * l4 * U ** 3 - 96 * l6 * U ** 2 + 96 * (l4 ** 2 - 4 * I1) * U + 128 * l4 * l6)
    I2 = body.scale(mpq(1, 256))
    return {"I1": I1, "I2": I2}


def verify_kdv_suite(high_order: int = 16) -> Report:
    rep = Report("kdv")
    R = resolvents(4)
    for k, (got, want) in enumerate(zip(R, stated_resolvents())):
        rep.check(f"kdv.R{k}", f"R{k} as tabulated", got - want, "resolvent")
    a, b = JET.vars("a", "b")
    lhs = -64 * R[3] - 4 * a * R[1] + 2 * b * R[0]
    rep.check("kdv.stationary4_resolvents", "-64 R3 - 4a R1 + 2b R0 is the left side of the fourth-order stationary equation", lhs - stationary4(), "novikov")
    nov = novikov_equation([b.scale(mpq(-1, 32)), a.scale(mpq(1, 16)), JET.zero(), 1], 2)
    rep.check("kdv.stationary4_novikov", "the fourth-order stationary equation is -64 times the normalised Novikov equation with n = 2",
              -64 * nov - stationary4(), "novikov")
    big = make_jet_table(high_order)
    Rb = resolvents(8, big)
    rep.check("kdv.grades", "grade(R_l) = 2l for l <= 8", kdv_grade_ok(Rb), "resolvent",
              grades=[r.grade() for r in Rb])
    try:
        formal_integrate(JET.var("U"))
        ok = False
    except NotExact:
        ok = True
    rep.check("kdv.not_exact", "U is not a total derivative", ok, "integration")
    for name, I in stationary4_integrals().items():
        rep.check(f"kdv.integral_{name}", f"{name} is conserved modulo the stationary equation",
                  reduce_mod_stationary4(total_derivative(I)), "integrals", text=to_text(I))
    return rep
