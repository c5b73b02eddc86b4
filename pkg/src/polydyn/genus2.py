"""Genus two model on C^6 with coordinates X = (x2, x3, x4), Z = (z4, z5, z6).

``x2 = wp_{2,0}`` and ``z4 = wp_{1,3}``; x3, x4 (resp. z5, z6) are their
first and second u1-derivatives.  The six fields L0, L1, L2, L3, L4, L6 are
assembled here: L0, L1, L3 directly, and L2, L4, L6 from their values on
the two module generators x2, z4 by the chain rule through [L1, L_k].
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from itertools import combinations
from typing import Dict, List, Mapping, Optional, Tuple

from gmpy2 import mpq

from .kdvtools import is_jet, split_jet, total_derivative
from .polyring import C7, G2, JET_UV, LAMBDA, Poly, PolyError, VarTable, det, to_text
from .report import Entry, Report
from .vectorfield import Derivation, apply, bracket, combine, field_residual, jacobi

COORDS = ("x2", "x3", "x4", "z4", "z5", "z6")
LAMBDAS = ("l4", "l6", "l8", "l10")
LABELS = ("L0", "L1", "L2", "L3", "L4", "L6")
EVEN_LABELS = ("L0", "L2", "L4", "L6")
ELIM = VarTable.of("ELIM", [("x2", 2), ("x3", 3), ("x4", 4), ("x5", 5), ("l4", 4), ("l6", 6)])


def q(a: int, b: int = 1) -> mpq:
    return mpq(a, b)


class GenerationError(PolyError):
    """A generated matrix entry disagrees with an independently stated one."""


class NotEven(PolyError):
    pass


class AmbiguousImage(PolyError):
    pass


# -- parameter side ------------------------------------------------------------

@dataclass(frozen=True)
class LambdaModel:
    table: VarTable
    T: Tuple[Tuple[Poly, ...], ...]
    ell: Tuple[Derivation, Derivation, Derivation, Derivation]
    Delta: Poly


def lambda_matrix(table: VarTable = LAMBDA) -> Tuple[Tuple[Poly, ...], ...]:
    l4, l6, l8, l10 = table.vars(*LAMBDAS)
    return (
        (4 * l4, 6 * l6, 8 * l8, 10 * l10),
        (6 * l6, 8 * l8 - q(12, 5) * l4 ** 2, 10 * l10 - q(8, 5) * l4 * l6, -q(4, 5) * l4 * l8),
        (8 * l8, 10 * l10 - q(8, 5) * l4 * l6, 4 * l4 * l8 - q(12, 5) * l6 ** 2,
         6 * l4 * l10 - q(6, 5) * l6 * l8),
        (10 * l10, -q(4, 5) * l4 * l8, 6 * l4 * l10 - q(6, 5) * l6 * l8,
         4 * l6 * l10 - q(8, 5) * l8 ** 2),
    )


def build_lambda_model() -> LambdaModel:
    T = lambda_matrix()
    ell = tuple(Derivation(LAMBDA, dict(zip(LAMBDAS, row)), f"ell{2 * i}") for i, row in enumerate(T))
    Delta = det(T).scale(q(16, 5))
    return LambdaModel(LAMBDA, T, ell, Delta)


def verify_lambda_model(lm: Optional[LambdaModel] = None) -> Report:
    lm = lm or build_lambda_model()
    rep = Report("lambda")
    l4, l6 = lm.table.vars("l4", "l6")
    D = lm.Delta
    rep.check("lam.grade_Delta", "Delta is homogeneous of degree 40", D.grade() == 40, "discriminant",
              terms=len(D))
    targets = {"ell0": 40 * D, "ell2": lm.table.zero(), "ell4": 12 * l4 * D, "ell6": 4 * l6 * D}
    stmt = {"ell0": "ell0 Delta = 40 Delta", "ell2": "ell2 Delta = 0",
            "ell4": "ell4 Delta = 12 l4 Delta", "ell6": "ell6 Delta = 4 l6 Delta"}
    for e in lm.ell:
        rep.check(f"lam.tangent_{e.label}", stmt[e.label], apply(e, D) - targets[e.label], "discriminant")
    # commutators of the ell fields close over the polynomial ring
    e0, e2, e4, e6 = lm.ell
    rels = [
        ("ell0_ell2", e0, e2, [(2, e2)]),
        ("ell0_ell4", e0, e4, [(4, e4)]),
        ("ell0_ell6", e0, e6, [(6, e6)]),
        ("ell2_ell4", e2, e4, [(q(8, 5) * l6, e0), (-q(8, 5) * l4, e2), (2, e6)]),
        ("ell2_ell6", e2, e6, [(q(4, 5) * lm.table.var("l8"), e0), (-q(4, 5) * l4, e4)]),
        ("ell4_ell6", e4, e6, [(-2 * lm.table.var("l10"), e0), (q(6, 5) * lm.table.var("l8"), e2),
                               (-q(6, 5) * l6, e4), (2 * l4, e6)]),
    ]
    for name, A, B, comb in rels:
        res = field_residual(bracket(A, B), comb)
        rep.check(f"lam.bracket_{name}", f"[{A.label},{B.label}] closes as stated", list(res.values()),
                  "parameter-algebra")
    return rep


# -- C^6 side ------------------------------------------------------------------

def lambda_hat(table: VarTable = G2) -> Dict[str, Poly]:
    x2, x3, x4, z4, z5, z6 = table.vars(*COORDS)
    return {
        "l4": (x4 - 6 * x2 ** 2 - 4 * z4).scale(q(1, 2)),
        "l6": (2 * x2 * (x4 + 4 * z4) - 8 * x2 ** 3 - x3 ** 2 - 2 * z6).scale(q(-1, 4)),
        "l8": (x2 * z6 + x4 * z4 - 8 * x2 ** 2 * z4 - 2 * z4 ** 2 - x3 * z5).scale(q(-1, 2)),
        "l10": (8 * x2 * z4 ** 2 - 2 * z4 * z6 + z5 ** 2).scale(q(1, 4)),
    }


@dataclass(frozen=True)
class Genus2Model:
    table: VarTable
    fields: Dict[str, Derivation]
    lam: Dict[str, Poly]
    named: Dict[str, Poly]
    issues: Tuple[str, ...] = ()

    def __getitem__(self, label: str) -> Derivation:
        return self.fields[label]

    @property
    def T2(self) -> Tuple[Tuple[Poly, ...], ...]:
        return tuple(tuple(self.fields[L].on(c) for c in COORDS) for L in LABELS)

    def hat(self, p: Poly) -> Poly:
        """Replace the symbols l4..l10 of a G2 (or LAMBDA) polynomial by their pullbacks."""
        return p.substitute(self.lam, target=self.table)

    def with_entry(self, row: int, col: int, value: Poly) -> "Genus2Model":
        """Copy with one entry of the 6x6 matrix replaced."""
        label = LABELS[row]
        f = dict(self.fields)
        f[label] = f[label].replace(COORDS[col], value)
        return replace(self, fields=f)


def named_polynomials(table: VarTable = G2) -> Dict[str, Poly]:
    x2, x3, x4, z4, z5, z6 = table.vars(*COORDS)
    lam = lambda_hat(table)
    G6 = (6 * x2 * z4 - z6).scale(q(1, 2))
    G6p = x3 * z4 - x2 * z5
    G6pp = x4 * z4 - x2 * z6
    G6ppp = 8 * x2 * (x3 * z4 - x2 * z5) + (x4 * z5 - x3 * z6) + 4 * z4 * z5
    G6dot = z4 * z5 - x2 * (x3 * z4 - x2 * z5) - (x4 * z5 - x3 * z6).scale(q(1, 2))
    n = {
        "P5": 4 * (3 * x2 * x3 + z5),
        "P7": 4 * (2 * x2 * z5 + x3 * z4),
        "G6": G6, "G6p": G6p, "G6pp": G6pp, "G6ppp": G6ppp, "G6dot": G6dot,
    }
    # expanded forms, used as cross-checks against the lambda-hat forms
    n["P4_expanded"] = (4 * x4 - 14 * x2 ** 2 + 4 * z4).scale(q(1, 5))
    n["P6_expanded"] = (6 * x2 ** 3 - x2 * x4 + 9 * x2 * z4).scale(q(2, 5))
    n["F6_expanded"] = (12 * z6 - 28 * x2 * z4 + 8 * x2 ** 3 - 2 * x2 * x4 + x3 ** 2).scale(q(1, 10))
    n["F8_expanded"] = (-24 * x2 ** 4 + 6 * x2 ** 2 * x4 - 76 * x2 ** 2 * z4 - 3 * x2 * x3 ** 2
                        - 6 * x2 * z6 - 5 * x3 * z5 + 20 * x4 * z4 - 40 * z4 ** 2).scale(q(1, 10))
    n["P8_expanded"] = (-6 * x2 * z6 + 4 * x4 * z4 - 8 * z4 ** 2 + 8 * x2 ** 2 * z4
                        + x3 * z5).scale(q(1, 10))
    n["F10_expanded"] = (-16 * x2 * x3 * z5 + 10 * x3 ** 2 * z4 - 4 * x2 * x4 * z4 - 20 * z5 ** 2
                         + 16 * x2 ** 2 * z6 - 152 * x2 * z4 ** 2 - 48 * x2 ** 3 * z4
                         + 40 * z4 * z6).scale(q(1, 20))
    n["P41_stated"] = 3 * x2 * x3 + 5 * z5
    n.update({f"lam{k[1:]}": v for k, v in lam.items()})
    return n


def _l1_brackets(t: VarTable, L1: Derivation, L3: Derivation) -> Dict[str, List[Tuple[Poly, Derivation]]]:
    """Right-hand sides of [L1, L_k] for k = 2, 4, 6."""
    x2, z4 = t.vars("x2", "z4")
    return {
        "L2": [(x2, L1), (-1, L3)],
        "L4": [(z4, L1), (x2, L3)],
        "L6": [(z4, L3)],
    }


def build_genus2(strict: bool = True) -> Genus2Model:
    """Construct all six fields; ``strict`` raises on any internal inconsistency."""
    t = G2
    x2, x3, x4, z4, z5, z6 = t.vars(*COORDS)
    n = named_polynomials(t)
    lam = lambda_hat(t)
    l4, l6, l8, l10 = (lam[k] for k in LAMBDAS)
    issues: List[str] = []

    L0 = Derivation(t, {c: t.grade_of(c) * t.var(c) for c in COORDS}, "L0")
    L1 = Derivation(t, {"x2": x3, "x3": x4, "x4": n["P5"], "z4": z5, "z5": z6, "z6": n["P7"]}, "L1")
    L3 = Derivation(t, {"x2": z5, "x3": z6, "x4": n["P7"],
                        "z4": n["G6p"], "z5": n["G6pp"], "z6": n["G6ppp"]}, "L3")

    def expect(name, got, want):
        if got != want:
            issues.append(f"{name}: derived {to_text(got)} != stated {to_text(want)}")

    # u1-derivatives of G6 and the u3-derivative
    expect("L1 G6", apply(L1, n["G6"]), n["G6p"])
    expect("L1 G6 (alt)", apply(L1, n["G6"]),
           3 * (x3 * z4 + x2 * z5) - n["P7"].scale(q(1, 2)))
    expect("L1 G6'", apply(L1, n["G6p"]), n["G6pp"])
    expect("L1 G6''", apply(L1, n["G6pp"]), n["G6ppp"])
    expect("L3 G6", apply(L3, n["G6"]), n["G6dot"])
    expect("L3 G6 (alt)", apply(L3, n["G6"]),
           3 * (z4 * z5 + x2 * n["G6p"]) - n["G6ppp"].scale(q(1, 2)))
    # L3 on x3, x4, z5, z6 follows from L3 x2 = z5, L3 z4 = G6' and [L1, L3] = 0
    for g, src in (("x3", "x2"), ("x4", "x3"), ("z5", "z4"), ("z6", "z5")):
        expect(f"L3 {g} via L1", apply(L1, L3.on(src)), L3.on(g))
    expect("4(L3 + 3 x2 L1) x2 = P5", 4 * (L3.on("x2") + 3 * x2 * L1.on("x2")), n["P5"])
    expect("4(2 x2 L3 + z4 L1) x2 = P7", 4 * (2 * x2 * L3.on("x2") + z4 * L1.on("x2")), n["P7"])

    G6, G6pp = n["G6"], n["G6pp"]
    G6dot_p = apply(L1, n["G6dot"])
    gen = {
        "L2": (x4.scale(q(1, 2)) - x2 ** 2 + 2 * z4 + q(3, 5) * l4,
               z6.scale(q(1, 2)) - x2 * z4 - q(4, 5) * l4 * x2 + G6),
        "L4": (z6 - 2 * x2 * z4 + q(2, 5) * l6,
               G6pp - z4 ** 2 - x2 * G6 - q(6, 5) * l6 * x2 + l4 * z4 - l8),
        "L6": (G6pp.scale(q(1, 2)) - z4 ** 2 + q(1, 5) * l8,
               G6dot_p.scale(q(1, 2)) - z4 * G6 - q(3, 5) * l8 * x2 - 2 * l10),
    }
    stated = {"L2": ("P4", "P6"), "L4": ("F6", "F8"), "L6": ("P8", "F10")}
    for k, (a, b) in gen.items():
        pa, pb = stated[k]
        n[pa], n[pb] = a, b
        expect(f"{pa} expanded", a, n[f"{pa}_expanded"])
        expect(f"{pb} expanded", b, n[f"{pb}_expanded"])

    rhs = _l1_brackets(t, L1, L3)
    fields = {"L0": L0, "L1": L1, "L3": L3}
    for k, (on_x2, on_z4) in gen.items():
        C = combine(t, rhs[k])
        act = {"x2": on_x2, "z4": on_z4}
        for g, src in (("x3", "x2"), ("x4", "x3"), ("z5", "z4"), ("z6", "z5")):
            act[g] = apply(L1, act[src]) - C.on(src)
        fields[k] = Derivation(t, act, k)

    # second path through L3: L_k L3 g = L3 L_k g - [L3, L_k] g on g = x2 (z5) and x3 (z6)
    l3_rhs = {
        "L2": [(z4 + q(4, 5) * l4, L1)],
        "L4": [(z4 - l4, L3), (G6 + q(6, 5) * l6, L1)],
        "L6": [(G6, L3), (q(3, 5) * l8, L1)],
    }
    for k in ("L2", "L4", "L6"):
        C3 = combine(t, l3_rhs[k])
        F = fields[k]
        expect(f"{k} z5 via L3", apply(L3, F.on("x2")) - C3.on("x2"), F.on("z5"))
        expect(f"{k} z6 via L3", apply(L3, F.on("x3")) - C3.on("x3"), F.on("z6"))

    expect("P41 = 3 x2 x3 + 5 z5", fields["L2"].on("x3"), n["P41_stated"])
    n["P41"] = fields["L2"].on("x3")
    model = Genus2Model(t, {L: fields[L] for L in LABELS}, lam, n, tuple(issues))
    if strict and issues:
        raise GenerationError("; ".join(issues))
    return model


_MODEL: Optional[Genus2Model] = None


def default_model() -> Genus2Model:
    global _MODEL
    if _MODEL is None:
        _MODEL = build_genus2()
    return _MODEL


# -- Lie algebra verification ----------------------------------------------------

def bracket_relations(m: Genus2Model) -> List[Tuple[str, str, str, list]]:
    """The fifteen commutation relations as (id, left, right, combination)."""
    t = m.table
    x2, x3, z4, z5 = t.vars("x2", "x3", "z4", "z5")
    F = m.fields
    L0, L1, L2, L3, L4, L6 = (F[k] for k in LABELS)
    l4, l6, l8, l10 = (m.lam[k] for k in LAMBDAS)
    G6, G6p, G6dot = m.named["G6"], m.named["G6p"], m.named["G6dot"]
    h = q(1, 2)
    rels = [(f"L0_{k}", "L0", k, [(int(k[1:]), F[k])]) for k in ("L1", "L2", "L3", "L4", "L6")]
    rels += [
        ("L1_L2", "L1", "L2", [(x2, L1), (-1, L3)]),
        ("L1_L3", "L1", "L3", []),
        ("L1_L4", "L1", "L4", [(z4, L1), (x2, L3)]),
        ("L1_L6", "L1", "L6", [(z4, L3)]),
        ("L2_L4", "L2", "L4", [(2, L6), (h * x3, L3), (-q(8, 5) * l4, L2), (-h * z5, L1),
                               (q(8, 5) * l6, L0)]),
        ("L2_L3", "L2", "L3", [(-(z4 + q(4, 5) * l4), L1)]),
        ("L2_L6", "L2", "L6", [(-q(4, 5) * l4, L4), (h * z5, L3), (-h * G6p, L1), (q(4, 5) * l8, L0)]),
        ("L3_L4", "L3", "L4", [(z4 - l4, L3), (G6 + q(6, 5) * l6, L1)]),
        ("L3_L6", "L3", "L6", [(G6, L3), (q(3, 5) * l8, L1)]),
        ("L4_L6", "L4", "L6", [(2 * l4, L6), (-q(6, 5) * l6, L4), (h * G6p, L3), (q(6, 5) * l8, L2),
                               (-h * G6dot, L1), (-2 * l10, L0)]),
    ]
    return rels


def lambda_row(m: Genus2Model, label: str) -> Dict[str, Poly]:
    """Row of the parameter matrix T (at lambda-hat) matching an even field."""
    T = lambda_matrix(LAMBDA)
    i = EVEN_LABELS.index(label)
    return {LAMBDAS[j]: m.hat(T[i][j].retable(m.table)) for j in range(4)}


def verify_brackets(m: Optional[Genus2Model] = None) -> Report:
    m = m or default_model()
    rep = Report("g2")
    for rid, a, b, comb in bracket_relations(m):
        res = field_residual(bracket(m[a], m[b]), comb)
        rep.check(f"g2.bracket.{rid}", f"[{a},{b}] relation on all six generators",
                  list(res.values()), "lie-algebra",
                  failing_generators=[g for g, r in res.items() if not r.is_zero()])
    for k in ("L1", "L3"):
        for j in LAMBDAS:
            rep.check(f"g2.push.{k}_{j}", f"{k} annihilates {j}^", apply(m[k], m.lam[j]), "invariants")
    for k in EVEN_LABELS:
        row = lambda_row(m, k)
        for j in LAMBDAS:
            rep.check(f"g2.push.{k}_{j}", f"{k} {j}^ = T({k},{j}) at lambda^",
                      apply(m[k], m.lam[j]) - row[j], "pushforward")
    return rep


def verify_jacobi(m: Optional[Genus2Model] = None) -> Report:
    m = m or default_model()
    rep = Report("g2.jacobi")
    for A, B, C in combinations(LABELS, 3):
        J = jacobi(m[A], m[B], m[C])
        rep.check(f"g2.jacobi.{A}_{B}_{C}", f"Jacobi identity for ({A},{B},{C})",
                  list(J.action.values()), "lie-algebra")
    return rep


def entry_grades(m: Genus2Model) -> List[List[Optional[int]]]:
    return [[e.grade() if not e.is_zero() else None for e in row] for row in m.T2]


def verify_grading(m: Optional[Genus2Model] = None) -> Report:
    """Entry (L_k, c_j) of T2 has grade k + j, k the field weight, j the coordinate grade."""
    m = m or default_model()
    rep = Report("g2.grading")
    bad = []
    for label, row in zip(LABELS, entry_grades(m)):
        for c, g in zip(COORDS, row):
            want = int(label[1:]) + m.table.grade_of(c)
            if g is not None and g != want:
                bad.append((label, c, g, want))
    rep.check("g2.grade.entries", "entry (L_k, c_j) of T2 has grade k + j", not bad, "grading", bad=bad)
    for k, v in m.lam.items():
        rep.check(f"g2.grade.{k}", f"{k}^ has grade {k[1:]}", v.grade() == int(k[1:]), "grading")
    rep.check("g2.generation", "generated entries agree with every stated form",
              not m.issues, "generation", issues=list(m.issues))
    return rep


# -- determinant and discriminant ----------------------------------------------

def det_t2(m: Optional[Genus2Model] = None) -> Poly:
    m = m or default_model()
    return det(m.T2)


def delta_hat(m: Optional[Genus2Model] = None, lm: Optional[LambdaModel] = None) -> Poly:
    m = m or default_model()
    lm = lm or build_lambda_model()
    return lm.Delta.substitute(m.lam, target=m.table)


def det_vs_discriminant(m: Optional[Genus2Model] = None) -> Report:
    """Grade of det T2 and, for information, its relation to Delta(lambda^)."""
    m = m or default_model()
    rep = Report("g2.det")
    D = det_t2(m)
    rep.check("g2.det.grade", "det T2 is homogeneous of degree 40", D.grade() == 40, "determinant",
              terms=len(D))
    Dh = delta_hat(m)
    ratio = None
    if not Dh.is_zero() and not D.is_zero():
        mono, c = next(Dh.sorted_terms())
        r = D.coeff(mono) / c
        if r and D == Dh.scale(r):
            ratio = str(r)
    rep.add(Entry("g2.det.vs_discriminant", "det T2 = c * Delta(lambda^) for a rational c",
                  "info", 0, "determinant", {"constant": ratio, "det_terms": len(D),
                                             "delta_hat_terms": len(Dh)}))
    return rep


# -- even pushforward to C^7 -----------------------------------------------------

def even_coordinates(table: VarTable = G2) -> Dict[str, Poly]:
    x2, x3, x4, z4, z5, z6 = table.vars(*COORDS)
    return {"x2": x2, "x4": x4, "z4": z4, "x6": x3 ** 2, "z6": z6, "w8": x3 * z5, "z10": z5 ** 2}


def to_even(p: Poly) -> Poly:
    """Rewrite a tau-invariant polynomial on C^6 in the coordinates of C^7."""
    t = p.table
    ix3, iz5 = t.index("x3"), t.index("z5")
    idx = {n: t.index(n) for n in ("x2", "x4", "z4", "z6")}
    out = {}
    for mono, c in p.items():
        if any(mono[t.index(l)] for l in LAMBDAS if l in t):
            raise NotEven("lambda symbols cannot be rewritten in even coordinates")
        a, b = mono[ix3], mono[iz5]
        if (a + b) % 2:
            raise NotEven(f"odd monomial in x3, z5: {to_text(Poly(t, {mono: c}))}")
        e = dict.fromkeys(C7.names, 0)
        for k, i in idx.items():
            e[k] = mono[i]
        if a % 2:
            e["w8"] = 1
            a, b = a - 1, b - 1
        e["x6"] = a // 2
        e["z10"] = b // 2
        key = tuple(e[k] for k in C7.names)
        out[key] = out.get(key, mpq(0)) + c
    return Poly(C7, out)


def pushforward_even(m: Optional[Genus2Model] = None) -> Dict[str, Derivation]:
    m = m or default_model()
    ev = even_coordinates(m.table)
    out = {}
    for k in EVEN_LABELS:
        act = {g: to_even(apply(m[k], ev[g])) for g in C7.names}
        out[k] = Derivation(C7, act, k + "hat")
    return out


def verify_pushforward(m: Optional[Genus2Model] = None) -> Report:
    """The C^7 fields intertwine with the C^6 fields through the even map."""
    m = m or default_model()
    rep = Report("g2.c7")
    ev = even_coordinates(m.table)
    try:
        hats = pushforward_even(m)
    except NotEven as exc:
        rep.add(Entry("g2.c7.even", "even fields descend to C^7", "fail", 1, "pushforward",
                      {"error": str(exc)}))
        return rep
    for k, H in hats.items():
        res = [apply(m[k], ev[g]) - H.on(g).substitute(ev, m.table) for g in C7.names]
        rep.check(f"g2.c7.{k}", f"{k}(pi''^* p) = pi''^*({k}hat p) on C^7 generators", res,
                  "pushforward")
    x2, x6, w8 = C7.vars("x2", "x6", "w8")
    rep.check("g2.c7.example", "L2hat x6 = 6 x2 x6 + 10 w8", hats["L2"].on("x6") - (6 * x2 * x6 + 10 * w8),
              "pushforward")
    # the image of pi_2' on w8^2 = x6 z10
    rep.check("g2.c7.hypersurface", "w8^2 = x6 z10 on the image",
              (ev["w8"] ** 2 - ev["x6"] * ev["z10"]), "pushforward")
    return rep


# -- U-equations -----------------------------------------------------------------

class FlowReducer:
    """Replaces jet variables of U = 2 x2 and V = 2 z4 by polynomials on C^6."""

    def __init__(self, m: Genus2Model):
        self.m = m
        self._cache: Dict[str, Poly] = {}

    def jet_image(self, name: str) -> Poly:
        if name not in self._cache:
            fam, k = split_jet(name)
            t = self.m.table
            L1, L3 = self.m["L1"], self.m["L3"]
            base = {"U": 2 * t.var("x2"), "V": 2 * t.var("z4"),
                    "Ud": 2 * L3.on("x2"), "Vd": 2 * L3.on("z4")}[fam]
            if k == 0:
                self._cache[name] = base
            else:
                prev = fam if k == 1 else f"{fam}{k - 1}"
                self._cache[name] = apply(L1, self.jet_image(prev))
        return self._cache[name]

    def reduce(self, e: Poly, lambdas: str = "hat", params: Optional[Mapping[str, Poly]] = None) -> Poly:
        t = self.m.table
        images: Dict[str, Poly] = {}
        if lambdas == "hat":
            lam = dict(self.m.lam)
        elif lambdas == "symbolic":
            lam = {k: t.var(k) for k in LAMBDAS}
        else:
            raise ValueError("lambdas must be 'hat' or 'symbolic'")
        defaults = {"a": 8 * lam["l4"], "b": -16 * lam["l6"]}
        if params:
            defaults.update(params)
        for name in e.variables():
            if is_jet(name):
                images[name] = self.jet_image(name)
            elif name in lam:
                images[name] = lam[name]
            elif name in defaults:
                images[name] = defaults[name]
            else:
                raise PolyError(f"unknown jet symbol {name!r}")
        return e.substitute(images, target=t)


def reduce_modulo_flow(e: Poly, m: Optional[Genus2Model] = None, lambdas: str = "hat",
                       params: Optional[Mapping[str, Poly]] = None) -> Poly:
    return FlowReducer(m or default_model()).reduce(e, lambdas, params)


def u_equations(table: VarTable = JET_UV) -> Dict[str, Tuple[str, Poly]]:
    """The U (and V) equations satisfied along the flow, keyed by id."""
    P = table.parse
    U, V, Ud, Vd = table.vars("U", "V", "Ud", "Vd")
    D = total_derivative
    eqs = {
        "kdv": ("U''' = 6 U U' + 4 Udot", P("U3 - 6*U*U1 - 4*Ud")),
        "order4_lambda": ("U'''' = 10UU'' + 5U'^2 - 10U^3 - 8 l4 U + 16 l6",
                          P("U4 - 10*U*U2 - 5*U1^2 + 10*U^3 + 8*l4*U - 16*l6")),
        "order6": ("order-six equation free of parameters",
                   P("U1*U6 - U2*U5 - 10*U*U1*U4 + 10*(U*U2 - 3*U1^2)*U3 + 60*U*U1^3")),
        "order4_ab": ("U'''' - 10UU'' - 5U'^2 + 10U^3 + aU + b = 0, a = 8 l4, b = -16 l6",
                      P("U4 - 10*U*U2 - 5*U1^2 + 10*U^3 + a*U + b")),
        "order5_a": ("U''''' - 10UU''' - 20U'U'' + 30U^2U' + aU' = 0, a = 8 l4",
                     P("U5 - 10*U*U3 - 20*U1*U2 + 30*U^2*U1 + a*U1")),
        "first_integral_1": ("U'U''' - U''^2/2 - 5UU'^2 + 5U^4/2 + 4l4U^2 - 16l6U + 8l4^2 - 32l8 = 0",
                             P("U1*U3 - 1/2*U2^2 - 5*U*U1^2 + 5/2*U^4 + 4*l4*U^2 - 16*l6*U"
                               " + 8*l4^2 - 32*l8")),
        "first_integral_2": ("U'''^2 - 10UU''^2 + ... + B(U) = 0",
                             P("U3^2 - 10*U*U2^2 + 2*U1^2*U2 + 4*(5*U^3 + 4*l4*U - 8*l6)*U2"
                               " - 2*(15*U^2 + 4*l4)*U1^2 + " + B_TEXT)),
        "quartic": ("U''^4 - 20UU'^2U''^2 - A1 U''^2 + 8U'^4U'' + A2 U'^2U'' - A3 U'^4 - A4 U'^2 + A5 = 0",
                    P(QUARTIC_TEXT)),
        "system_V": ("V''' = 3(UV)' - 2 Vdot", P("V3 + 2*Vd") - 3 * D(U * V)),
        "system_U": ("U''' = 3(U^2)' + 4 Udot", P("U3 - 4*Ud") - 3 * D(U * U)),
        "system_VU": ("V' = Udot", P("V1 - Ud")),
    }
    return eqs


B_TEXT = "(6*U^5 + 16*l4*U^3 - 96*l6*U^2 + 96*(l4^2 - 4*l8)*U + 128*l4*l6 - 256*l10)"
A_TEXT = {
    "A1": "(10*U^4 + 16*l4*U^2 - 64*l6*U + 32*l4^2 - 128*l8)",
    "A2": "(80*U^3 + 64*l4*U - 128*l6)",
    "A3": "(20*U^2 + 32*l4)",
    "A4": "(76*U^5 + 96*l4*U^3 - 256*l6*U^2 - 64*(l4^2 - 4*l8)*U - 512*l4*l6 + 1024*l10)",
    "A5": "(5*U^4 + 8*l4*U^2 - 32*l6*U + 16*l4^2 - 64*l8)^2",
}
QUARTIC_TEXT = ("U2^4 - 20*U*U1^2*U2^2 - {A1}*U2^2 + 8*U1^4*U2 + {A2}*U1^2*U2 - {A3}*U1^4"
                " - {A4}*U1^2 + {A5}").format(**A_TEXT)


def verify_u_equations(m: Optional[Genus2Model] = None) -> Report:
    m = m or default_model()
    rep = Report("g2.u")
    red = FlowReducer(m)
    for key, (stmt, e) in u_equations().items():
        rep.check(f"g2.ueq.{key}", stmt, red.reduce(e), "kdv")
    return rep


# -- elimination of z -----------------------------------------------------------

def eliminate_z(m: Optional[Genus2Model] = None) -> Tuple[Poly, Poly, Derivation]:
    """lambda8^, lambda10^ and L1 in the coordinates (x2, x3, x4, x5; l4, l6)."""
    m = m or default_model()
    t = ELIM
    x2, x3, x4, x5, l4, l6 = t.vars(*t.names)
    z4 = (x4 - 6 * x2 ** 2 - 2 * l4).scale(q(1, 4))
    z5 = (x5 - 12 * x2 * x3).scale(q(1, 4))
    z6 = (2 * x2 * x4 + 8 * x2 * z4 - 8 * x2 ** 3 - x3 ** 2 + 4 * l6).scale(q(1, 2))
    sub = {"x2": x2, "x3": x3, "x4": x4, "z4": z4, "z5": z5, "z6": z6}
    lam8 = m.lam["l8"].substitute(sub, target=t)
    lam10 = m.lam["l10"].substitute(sub, target=t)
    top = m["L1"].on("x4")
    x5_dot = apply(m["L1"], top).substitute(sub, target=t)
    L1 = Derivation(t, {"x2": x3, "x3": x4, "x4": x5, "x5": x5_dot}, "L1elim")
    return lam8, lam10, L1


def eliminated_stated() -> Dict[str, Poly]:
    P = ELIM.parse
    return {
        "l8": P("-1/16*x4^2 + 1/8*x3*x5 - 5/4*x2*x3^2 + 5/4*x2^4 + 1/2*l4*x2^2 - l6*x2 + 1/4*l4^2"),
        "l10": P("1/64*x5^2 - 3/8*x2*x3*x5 - 1/8*x2*x4^2 + 1/16*x3^2*x4 + 5/4*x2^3*x4"
                 " + 15/8*x2^2*x3^2 - 3*x2^5 - 1/8*l4*(x3^2 - 2*x2*x4 + 8*x2^3)"
                 " - 1/4*l6*(x4 - 6*x2^2) + 1/2*l4*l6"),
        "x5_dot": P("10*x3^2 + 20*x2*x4 - 40*x2^3 - 8*l4*x2 + 8*l6"),
    }


def verify_elimination(m: Optional[Genus2Model] = None) -> Report:
    m = m or default_model()
    rep = Report("g2.elim")
    lam8, lam10, L1 = eliminate_z(m)
    st = eliminated_stated()
    rep.check("g2.elim.l8", "lambda8^ in (x2..x5, l4, l6) as displayed", lam8 - st["l8"], "fiber")
    rep.check("g2.elim.l10", "lambda10^ in (x2..x5, l4, l6) as displayed", lam10 - st["l10"], "fiber")
    rep.check("g2.elim.L1", "induced L1 x5 as displayed", L1.on("x5") - st["x5_dot"], "fiber")
    rep.check("g2.elim.L1_l8", "induced L1 annihilates lambda8^", apply(L1, lam8), "fiber")
    rep.check("g2.elim.L1_l10", "induced L1 annihilates lambda10^", apply(L1, lam10), "fiber")
    return rep


# -- wp polynomials -----------------------------------------------------------------

def wp_images(m: Optional[Genus2Model] = None, max_i: int = 4, max_j: int = 4) -> Dict[Tuple[int, int], Poly]:
    """Polynomials on C^6 representing wp_{i,3j}, checked along every L1/L3 path.

    Seeds: (2,0) -> x2, (1,1) -> z4, (0,2) -> G6.  Every other index is
    reached by L1 (i+1) or L3 (j+1) from a computed neighbour; all available
    neighbours must give the same polynomial.
    """
    m = m or default_model()
    L1, L3 = m["L1"], m["L3"]
    t = m.table
    w = {(2, 0): t.var("x2"), (1, 1): t.var("z4"), (0, 2): m.named["G6"]}
    for s in range(3, max_i + max_j + 1):
        for i in range(0, min(s, max_i) + 1):
            j = s - i
            if j > max_j or (i, j) in w:
                continue
            cands = []
            if (i - 1, j) in w:
                cands.append(apply(L1, w[(i - 1, j)]))
            if (i, j - 1) in w:
                cands.append(apply(L3, w[(i, j - 1)]))
            if not cands:
                continue
            if any(c != cands[0] for c in cands[1:]):
                raise AmbiguousImage(f"paths to wp_{i},{3 * j} disagree")
            w[(i, j)] = cands[0]
    # the seeds themselves must be reachable consistently where they overlap
    if apply(L1, w[(0, 2)]) != apply(L3, w[(1, 1)]):
        raise AmbiguousImage("L1 G6 differs from L3 z4")
    if apply(L1, w[(1, 1)]) != apply(L3, w[(2, 0)]):
        raise AmbiguousImage("L1 z4 differs from L3 x2")
    return w


def verify_wp_polynomial_identities(m: Optional[Genus2Model] = None) -> Report:
    m = m or default_model()
    rep = Report("g2.wp")
    try:
        w = wp_images(m)
    except AmbiguousImage as exc:
        rep.add(Entry("g2.wp.paths", "all L1/L3 paths agree", "fail", 1, "wp", {"error": str(exc)}))
        return rep
    rep.add(Entry("g2.wp.paths", "all L1/L3 paths agree", "pass", 0, "wp"))
    l4, l6, l8, l10 = (m.lam[k] for k in LAMBDAS)
    p20, p13, p06 = w[(2, 0)], w[(1, 1)], w[(0, 2)]
    rels = {
        "wp40": (w[(4, 0)], 6 * p20 ** 2 + 4 * p13 + 2 * l4),
        "wp33": (w[(3, 1)], 6 * p20 * p13 - 2 * p06),
        "wp26": (w[(2, 2)], 2 * p20 * p06 + 4 * p13 ** 2 + 2 * l4 * p13),
        "wp19": (w[(1, 3)], 6 * p13 * p06 + 4 * l6 * p13 - 2 * l8 * p20 - 4 * l10),
        "wp012": (w[(0, 4)], 6 * p06 ** 2 - 12 * l10 * p20 + 4 * l8 * p13 + 4 * l6 * p06 + 2 * l8 * l4),
    }
    for key, (lhs, rhs) in rels.items():
        rep.check(f"g2.wp.{key}", f"{key} relation with lambda = lambda^", lhs - rhs, "wp")
    rep.check("g2.wp.G6_fundamental", "wp06 = 3 wp20 wp13 - wp33/2",
              p06 - (3 * p20 * p13 - w[(3, 1)].scale(q(1, 2))), "wp")
    return rep


def verify_genus2_suite(m: Optional[Genus2Model] = None, include_det: bool = True) -> Report:
    m = m or default_model()
    rep = Report("g2")
    rep.extend(verify_grading(m))
    rep.extend(verify_brackets(m))
    rep.extend(verify_jacobi(m))
    rep.extend(verify_lambda_model())
    rep.extend(verify_pushforward(m))
    rep.extend(verify_u_equations(m))
    rep.extend(verify_elimination(m))
    rep.extend(verify_wp_polynomial_identities(m))
    if include_det:
        rep.extend(det_vs_discriminant(m))
    return rep
