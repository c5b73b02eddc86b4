"""Elliptic (genus one) model on C^3 with coordinates x2 = wp, x3 = wp', x4 = wp''."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, Optional, Tuple

from gmpy2 import mpq

from .polyring import G1, G1_PARAMS, HAT1, Poly, PolyError, VarTable, det, to_text
from .report import Report
from .vectorfield import Derivation, apply, bracket, field_residual, iterate

THIRD = mpq(1, 3)


@dataclass(frozen=True)
class Genus1Model:
    table: VarTable
    L0: Derivation
    L1: Derivation
    L2: Derivation
    g2_hat: Poly
    g3_hat: Poly
    T1: Tuple[Tuple[Poly, ...], ...]

    @property
    def fields(self) -> Tuple[Derivation, Derivation, Derivation]:
        return (self.L0, self.L1, self.L2)

    @property
    def coords(self) -> Tuple[str, str, str]:
        return ("x2", "x3", "x4")

    def det_T1(self) -> Poly:
        return det(self.T1)


def build_genus1() -> Genus1Model:
    t = G1
    x2, x3, x4 = t.vars("x2", "x3", "x4")
    L0 = Derivation(t, {"x2": 2 * x2, "x3": 3 * x3, "x4": 4 * x4}, "L0")
    L1 = Derivation(t, {"x2": x3, "x3": x4, "x4": 12 * x2 * x3}, "L1")
    L2 = Derivation(t, {"x2": (x4 - 3 * x2 ** 2).scale(mpq(2, 3)),
                        "x3": 3 * x2 * x3,
                        "x4": 3 * x3 ** 2 + 2 * x2 * x4}, "L2")
    g2_hat = 12 * x2 ** 2 - 2 * x4
    g3_hat = -8 * x2 ** 3 + 2 * x4 * x2 - x3 ** 2
    T1 = tuple(tuple(D.on(c) for c in ("x2", "x3", "x4")) for D in (L0, L1, L2))
    return Genus1Model(t, L0, L1, L2, g2_hat, g3_hat, T1)


def mutate_entry(model: Genus1Model, row: int, col: int, value: Poly) -> Genus1Model:
    """Copy of the model with one matrix entry replaced (used for mutation tests)."""
    fields = list(model.fields)
    D = fields[row]
    fields[row] = D.replace(model.coords[col], value)
    T1 = tuple(tuple(F.on(c) for c in model.coords) for F in fields)
    return Genus1Model(model.table, fields[0], fields[1], fields[2], model.g2_hat, model.g3_hat, T1)


def parameter_fields() -> Tuple[Derivation, Derivation, Poly]:
    """ell_0, ell_2 on (g2, g3) and the discriminant g2^3 - 27 g3^2."""
    g2, g3 = G1_PARAMS.vars("g2", "g3")
    l0 = Derivation(G1_PARAMS, {"g2": 4 * g2, "g3": 6 * g3}, "ell0")
    l2 = Derivation(G1_PARAMS, {"g2": 6 * g3, "g3": (g2 ** 2).scale(THIRD)}, "ell2")
    return l0, l2, g2 ** 3 - 27 * g3 ** 2


def pullback_g(model: Genus1Model, p: Poly) -> Poly:
    """Pull a polynomial in (g2, g3) back to C^3."""
    return p.substitute({"g2": model.g2_hat, "g3": model.g3_hat}, target=model.table)


def verify_genus1_suite(model: Optional[Genus1Model] = None) -> Report:
    m = model or build_genus1()
    t = m.table
    x2, x3, x4 = t.vars("x2", "x3", "x4")
    L0, L1, L2 = m.fields
    rep = Report("g1")
    dT = m.det_T1()
    g2h, g3h = m.g2_hat, m.g3_hat

    rep.check("g1.a.det_discriminant", "3 det T1 = g2^3 - 27 g3^2 (pulled back)",
              3 * dT - (g2h ** 3 - 27 * g3h ** 2), "discriminant",
              det_T1=to_text(dT))
    rep.check("g1.b.L0_det", "L0 det T1 = 12 det T1", apply(L0, dT) - 12 * dT, "tangency")
    rep.check("g1.b.L1_det", "L1 det T1 = 0", apply(L1, dT), "tangency")
    rep.check("g1.b.L2_det", "L2 det T1 = 0", apply(L2, dT), "tangency")

    for k, D in ((0, L0), (1, L1), (2, L2)):
        res = field_residual(bracket(L0, D), [(k, D)])
        rep.check(f"g1.c.bracket_L0_L{k}", f"[L0,L{k}] = {k} L{k}", list(res.values()), "lie-algebra")
    res = field_residual(bracket(L1, L2), [(x2, L1)])
    rep.check("g1.c.bracket_L1_L2", "[L1,L2] = x2 L1", list(res.values()), "lie-algebra")

    rep.check("g1.d.L1_g2", "L1 g2^ = 0", apply(L1, g2h), "pullback")
    rep.check("g1.d.L1_g3", "L1 g3^ = 0", apply(L1, g3h), "pullback")
    rep.check("g1.d.L2_g2", "L2 g2^ = 6 g3^", apply(L2, g2h) - 6 * g3h, "pullback")
    rep.check("g1.d.L2_g3", "L2 g3^ = g2^2/3", apply(L2, g3h) - (g2h ** 2).scale(THIRD), "pullback")
    rep.check("g1.d.L0_g2", "L0 g2^ = 4 g2^", apply(L0, g2h) - 4 * g2h, "pullback")
    rep.check("g1.d.L0_g3", "L0 g3^ = 6 g3^", apply(L0, g3h) - 6 * g3h, "pullback")

    L2t = L2 + x2 * L0
    rep.check("g1.e.heat", "(L2 + x2 L0) x2 = 2/3 L1^2 x2",
              apply(L2t, x2) - iterate(L1, x2, 2).scale(mpq(2, 3)), "heat-equation")
    res = field_residual(bracket(L1, L2t), [(x3, L0)])
    rep.check("g1.e.nonholonomic", "[L1, L2 + x2 L0] = x3 L0", list(res.values()), "heat-equation")

    sing = {"x3": t.zero(), "x4": t.zero()}
    rep.check("g1.f.singular_point", "pi1(x2,0,0) = (12 x2^2, -8 x2^3) lies in the discriminant",
              [g2h.substitute(sing, t) - 12 * x2 ** 2, g3h.substitute(sing, t) + 8 * x2 ** 3,
               (g2h ** 3 - 27 * g3h ** 2).substitute(sing, t)], "discriminant")

    l0, l2, disc = parameter_fields()
    rep.check("g1.g.ell0_disc", "ell0 Delta = 12 Delta", apply(l0, disc) - 12 * disc, "parameters")
    rep.check("g1.g.ell2_disc", "ell2 Delta = 0", apply(l2, disc), "parameters")
    Tg = [[l0.on("g2"), l0.on("g3")], [l2.on("g2"), l2.on("g3")]]
    rep.check("g1.g.disc_detT", "Delta = 3/4 det T", disc - det(Tg).scale(mpq(3, 4)), "parameters")
    # the pullback intertwines ell_k with L_k
    for name, D, ell in (("0", L0, l0), ("2", L2, l2)):
        for g in ("g2", "g3"):
            lhs = apply(D, pullback_g(m, G1_PARAMS.var(g)))
            rhs = pullback_g(m, ell.on(g))
            rep.check(f"g1.g.intertwine_L{name}_{g}", f"L{name} pi1^*({g}) = pi1^*(ell{name} {g})",
                      lhs - rhs, "pullback")

    for label, D, shift in (("L0", L0, 0), ("L1", L1, 1), ("L2", L2, 2)):
        rep.check(f"g1.h.grading_{label}", f"{label} raises grade by {shift}",
                  D.raises_grade_by() == shift, "grading")

    S0, S2 = build_hat_systems()
    for name, rep_entry in covering_checks(m, S0, S2).items():
        rep.check(f"g1.i.covering_{name}", f"double covering intertwines {name}", rep_entry, "covering")

    rep.check("g1.j.alpha_family", "order-three U-equation holds along S2hat + alpha x2 S0hat, symbolic alpha, k",
              alpha_family_reduce(), "alpha-family")
    rep.check("g1.j.alpha_minus_two", "alpha = -2, k = -1/12 specialisation as displayed",
              alpha_family_specialised(-2, Fraction(-1, 12)) - alpha_minus_two_form(), "alpha-family")
    return rep


def build_hat_systems() -> Tuple[Derivation, Derivation]:
    """The even systems on (x2, x4, x6) induced through x6 = x3^2."""
    t = HAT1
    x2, x4, x6 = t.vars("x2", "x4", "x6")
    S0 = Derivation(t, {"x2": 2 * x2, "x4": 4 * x4, "x6": 6 * x6}, "S0hat")
    S2 = Derivation(t, {"x2": (x4 - 3 * x2 ** 2).scale(mpq(2, 3)),
                        "x4": 3 * x6 + 2 * x2 * x4,
                        "x6": 6 * x2 * x6}, "S2hat")
    return S0, S2


def covering_map(model: Genus1Model) -> Dict[str, Poly]:
    x2, x3, x4 = model.table.vars("x2", "x3", "x4")
    return {"x2": x2, "x4": x4, "x6": x3 ** 2}


def covering_checks(model: Genus1Model, S0: Derivation, S2: Derivation) -> Dict[str, Poly]:
    """Residuals of ``L_k(cover^* p) - cover^*(S_k p)`` for p in x2, x4, x6."""
    cover = covering_map(model)
    out = {}
    for D, S in ((model.L0, S0), (model.L2, S2)):
        for g in HAT1.names:
            lhs = apply(D, cover[g])
            rhs = S.on(g).substitute(cover, model.table)
            out[f"{S.label}_{g}"] = lhs - rhs
    return out


ALPHA_TABLE = VarTable.of("ALPHA", [("x2", 2), ("x4", 4), ("x6", 6),
                                    ("alpha", 0), ("k", 0), ("kinv", 0)])


def alpha_system() -> Derivation:
    """``S2hat + alpha x2 S0hat`` on (x2, x4, x6) with a symbolic alpha."""
    t = ALPHA_TABLE
    x2, x4, x6, al = t.vars("x2", "x4", "x6", "alpha")
    return Derivation(t, {
        "x2": x4.scale(mpq(2, 3)) + 2 * (al - 1) * x2 ** 2,
        "x4": 3 * x6 + 2 * (2 * al + 1) * x2 * x4,
        "x6": 6 * (al + 1) * x2 * x6,
    }, "S_alpha")


_ALPHA_JET = VarTable.of("ALPHA_JET", [("U", 2), ("U1", 3), ("U2", 4), ("U3", 5),
                                       ("alpha", 0), ("k", 0)])


def alpha_family_equation() -> Poly:
    """Left side of the order-three equation for U = x2 / k."""
    return _ALPHA_JET.parse(
        "U3 - 2*k*(7*alpha + 2)*U*U2 - 2*k*(4*alpha - 1)*U1^2"
        " + 24*k^2*(3*alpha^2 + alpha - 1)*U^2*U1"
        " - 24*k^3*(alpha + 1)*(alpha - 1)*(2*alpha + 1)*U^4")


def _laurent_normal(p: Poly, a: str, b: str) -> Poly:
    """Normal form modulo ``a*b = 1``: cancel common powers of a and b."""
    ia, ib = p.table.index(a), p.table.index(b)
    out: Dict[Tuple[int, ...], mpq] = {}
    for m, c in p.items():
        s = min(m[ia], m[ib])
        if s:
            mm = list(m)
            mm[ia] -= s
            mm[ib] -= s
            m = tuple(mm)
        out[m] = out.get(m, mpq(0)) + c
    return Poly(p.table, out)


def alpha_family_reduce(alpha=None, k=None) -> Poly:
    """Reduce the order-three U-equation modulo the alpha-system.

    ``alpha`` and ``k`` are rationals, or ``None`` to keep them symbolic.
    Returns the residual over ALPHA_TABLE, which is zero when the equation
    holds identically along the flow.
    """
    if k is not None and Fraction(k) == 0:
        raise PolyError("k must be nonzero")
    D = alpha_system()
    t = D.table
    x2 = t.var("x2")
    kinv = t.var("kinv")
    images = {}
    p = x2
    for j in range(4):
        images[f"U{j}" if j else "U"] = p * kinv
        p = apply(D, p)
    images["alpha"] = t.var("alpha")
    images["k"] = t.var("k")
    res = alpha_family_equation().substitute(images, target=t)
    res = _laurent_normal(res, "k", "kinv")
    vals = {}
    if alpha is not None:
        vals["alpha"] = t.const(Fraction(alpha))
    if k is not None:
        vals["k"] = t.const(Fraction(k))
        vals["kinv"] = t.const(1 / Fraction(k))
    if vals:
        res = res.substitute(vals, target=t)
    return res


def alpha_family_specialised(alpha, k) -> Poly:
    """The order-three equation with numeric alpha and k, as a polynomial in U jets."""
    e = alpha_family_equation()
    return e.substitute({"alpha": _ALPHA_JET.const(Fraction(alpha)),
                         "k": _ALPHA_JET.const(Fraction(k))}, target=_ALPHA_JET)


def alpha_minus_two_form() -> Poly:
    """``U''' - 2UU'' + 3U'^2 - (6U' - U^2)^2 / 8`` (the alpha = -2 case)."""
    return _ALPHA_JET.parse("U3 - 2*U*U2 + 3*U1^2 - 1/8*(6*U1 - U^2)^2")


def pole_sum_residual(poles, t) -> Fraction:
    """Exact residual of the alpha = -2 equation for U = -2 sum 1/(t - a_i).

    Zero for every choice of one, two or three poles; nonzero in general
    from four poles on.
    """
    t = Fraction(t)
    s = [sum(1 / (t - Fraction(a)) ** k for a in poles) for k in (1, 2, 3, 4)]
    vals = {"U": -2 * s[0], "U1": 2 * s[1], "U2": -4 * s[2], "U3": 12 * s[3]}
    return Fraction(str(alpha_minus_two_form().exact_value(vals)))
