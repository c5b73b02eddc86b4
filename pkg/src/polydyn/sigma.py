"""Sigma series from the annihilating operators Q_i = ell_i - H_i.

Genus 1: sigma(u; g2, g3) = sum_k c_k u^k with c_k in Q[g2, g3].
Genus 2: sigma(u1, u3; lambda) = sum c_{ij} u1^i u3^j with c_{ij} in Q[l4..l10].
The u-weight of u1^i u3^j is i + 3j; its coefficient has grade i + 3j - 3.
"""

from __future__ import annotations

import cmath
import json
import math
from dataclasses import dataclass, field
from itertools import product
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

import mpmath
from gmpy2 import mpq

from .genus1 import parameter_fields
from .genus2 import build_lambda_model
from .polyring import G1_PARAMS, LAMBDA, Poly, PolyError, VarTable, to_text
from .report import Report
from .vectorfield import Derivation, apply

Exps = Tuple[int, ...]


class LinearSystemSingular(PolyError):
    pass


class NearZeroSigma(ValueError):
    pass


class TruncationInsufficient(ValueError):
    pass


# -- series carrier -------------------------------------------------------------

@dataclass
class GradedSeries:
    genus: int
    max_weight: int
    coefficients: Dict[Exps, Poly] = field(default_factory=dict)

    @property
    def table(self) -> VarTable:
        return G1_PARAMS if self.genus == 1 else LAMBDA

    def weight(self, e: Exps) -> int:
        return e[0] if self.genus == 1 else e[0] + 3 * e[1]

    def coeff(self, *e: int) -> Poly:
        return self.coefficients.get(tuple(e), self.table.zero())

    def part(self, w: int) -> Dict[Exps, Poly]:
        return {e: c for e, c in self.coefficients.items() if self.weight(e) == w}

    def is_odd(self) -> bool:
        return all(c.is_zero() or sum(e) % 2 == 1 for e, c in self.coefficients.items())

    def homogeneity_ok(self) -> bool:
        shift = 1 if self.genus == 1 else 3
        return all(c.is_zero() or c.grade() == self.weight(e) - shift
                   for e, c in self.coefficients.items())

    def to_records(self) -> List[dict]:
        out = []
        for e in sorted(self.coefficients, key=lambda e: (self.weight(e), e)):
            c = self.coefficients[e]
            if c.is_zero():
                continue
            rec = {"u_exponents": list(e), "parameter_polynomial": to_text(c)}
            if self.genus == 1:
                rec["times_factorial"] = f"({to_text(c.scale(math.factorial(e[0])))})/{e[0]}!"
            out.append(rec)
        return out

    def to_json(self, indent: Optional[int] = 2) -> str:
        return json.dumps({"genus": self.genus, "max_weight": self.max_weight,
                           "terms": self.to_records()}, indent=indent)


# -- tiny operator calculus on u-series with Poly coefficients ------------------

USer = Dict[Exps, Poly]


def _add(a: USer, b: USer, s=1) -> USer:
    out = dict(a)
    for e, c in b.items():
        out[e] = out[e] + s * c if e in out else s * c
    return {e: c for e, c in out.items() if not c.is_zero()}


def _d(a: USer, k: int) -> USer:
    out = {}
    for e, c in a.items():
        if e[k]:
            f = list(e)
            f[k] -= 1
            out[tuple(f)] = e[k] * c
    return out


def _mul(a: USer, e0: Exps, coef) -> USer:
    out = {}
    for e, c in a.items():
        out[tuple(x + y for x, y in zip(e, e0))] = coef * c
    return {e: c for e, c in out.items() if not c.is_zero()}


def _lift(a: USer, D: Derivation) -> USer:
    return {e: apply(D, c) for e, c in a.items()}


# -- genus 1 ----------------------------------------------------------------------

def solve_sigma_g1(max_weight: int = 25) -> GradedSeries:
    if max_weight < 13:
        raise ValueError("max_weight must be at least 13")
    t = G1_PARAMS
    _, ell2, _ = parameter_fields()
    g2 = t.var("g2")
    c = {0: t.zero(), 1: t.one()}
    for k in range(0, max_weight - 1):
        prev = c.get(k - 2, t.zero())
        c[k + 2] = (apply(ell2, c[k]) - prev * g2.scale(mpq(1, 24))).scale(mpq(2, (k + 1) * (k + 2)))
    return GradedSeries(1, max_weight, {(k,): v for k, v in c.items() if k <= max_weight and not v.is_zero()})


def annihilator_residuals_g1(s: GradedSeries) -> Dict[str, USer]:
    """Q0 sigma and Q2 sigma, kept only where the truncation fully determines them."""
    ell0, ell2, _ = parameter_fields()
    g2 = G1_PARAMS.var("g2")
    sig = dict(s.coefficients)
    q0 = _add(_lift(sig, ell0), _add(_mul(_d(sig, 0), (1,), 1), sig, -1), -1)
    h2 = _add(_mul(_d(_d(sig, 0), 0), (0,), mpq(1, 2)), _mul(sig, (2,), g2.scale(mpq(1, 24))))
    q2 = _add(_lift(sig, ell2), h2, -1)
    W = s.max_weight
    return {"Q0": {e: c for e, c in q0.items() if e[0] <= W},
            "Q2": {e: c for e, c in q2.items() if e[0] <= W - 2}}


# -- genus 2 ----------------------------------------------------------------------

def h_operators() -> Dict[str, callable]:
    """H2, H4, H6 acting on a u-series over LAMBDA."""
    l4, l6, l8, l10 = LAMBDA.vars("l4", "l6", "l8", "l10")
    r = lambda a, b: mpq(a, b)

    def H2(s: USer) -> USer:
        d1 = _d(s, 0)
        out = _mul(_d(d1, 0), (0, 0), r(1, 2))
        out = _add(out, _mul(d1, (0, 1), -r(4, 5) * l4))
        out = _add(out, _mul(_d(s, 1), (1, 0), 1))
        out = _add(out, _mul(s, (2, 0), -r(3, 10) * l4))
        out = _add(out, _mul(s, (0, 2), (15 * l8 - 4 * l4 ** 2).scale(r(1, 10))))
        return out

    def H4(s: USer) -> USer:
        d1, d3 = _d(s, 0), _d(s, 1)
        out = _d(d1, 1)
        out = _add(out, _mul(d1, (0, 1), -r(6, 5) * l6))
        out = _add(out, _mul(d3, (0, 1), l4))
        out = _add(out, _mul(s, (2, 0), -r(1, 5) * l6))
        out = _add(out, _mul(s, (1, 1), l8))
        out = _add(out, _mul(s, (0, 2), (30 * l10 - 6 * l6 * l4).scale(r(1, 10))))
        out = _add(out, _mul(s, (0, 0), -l4))
        return out

    def H6(s: USer) -> USer:
        d1 = _d(s, 0)
        out = _mul(_d(_d(s, 1), 1), (0, 0), r(1, 2))
        out = _add(out, _mul(d1, (0, 1), -r(3, 5) * l8))
        out = _add(out, _mul(s, (2, 0), -r(1, 10) * l8))
        out = _add(out, _mul(s, (1, 1), 2 * l10))
        out = _add(out, _mul(s, (0, 2), -r(3, 10) * l8 * l4))
        out = _add(out, _mul(s, (0, 0), -r(1, 2) * l6))
        return out

    return {"Q2": H2, "Q4": H4, "Q6": H6}


_LEADING = {  # the parts of H_k lowering the u-weight by k
    "Q2": lambda s: _add(_mul(_d(_d(s, 0), 0), (0, 0), mpq(1, 2)), _mul(_d(s, 1), (1, 0), 1)),
    "Q4": lambda s: _d(_d(s, 0), 1),
    "Q6": lambda s: _mul(_d(_d(s, 1), 1), (0, 0), mpq(1, 2)),
}
_LOWER = {"Q2": 2, "Q4": 4, "Q6": 6}


def _uw(e: Exps) -> int:
    return e[0] + 3 * e[1]


def _solve_exact(A: List[List[mpq]], b: List[mpq]) -> List[mpq]:
    """Unique solution of an overdetermined exact system or LinearSystemSingular."""
    n = len(A[0]) if A else 0
    M = [list(row) + [rhs] for row, rhs in zip(A, b)]
    piv_cols = []
    r = 0
    for col in range(n):
        p = next((i for i in range(r, len(M)) if M[i][col] != 0), None)
        if p is None:
            raise LinearSystemSingular(f"underdetermined in unknown {col}")
        M[r], M[p] = M[p], M[r]
        inv = 1 / M[r][col]
        M[r] = [x * inv for x in M[r]]
        for i in range(len(M)):
            if i != r and M[i][col] != 0:
                f = M[i][col]
                M[i] = [x - f * y for x, y in zip(M[i], M[r])]
        piv_cols.append(col)
        r += 1
    if any(row[-1] != 0 for row in M[r:]):
        raise LinearSystemSingular("inconsistent system")
    return [M[i][-1] for i in range(n)]


def _lambda_monomials(grade: int) -> List[Exps]:
    gs = LAMBDA.grades
    out = []
    for e in product(*(range(grade // g + 1) for g in gs)):
        if sum(a * g for a, g in zip(e, gs)) == grade:
            out.append(e)
    return out


def solve_sigma_g2(max_weight: int = 17) -> GradedSeries:
    if max_weight < 7:
        raise ValueError("max_weight must be at least 7")
    lm = build_lambda_model()
    ell = dict(zip(("Q0", "Q2", "Q4", "Q6"), lm.ell))
    H = h_operators()
    t = LAMBDA
    sig: USer = {(0, 1): t.one(), (3, 0): t.const(mpq(-1, 3))}
    for w in range(4, max_weight + 1):
        umons = [(i, (w - i) // 3) for i in range(w + 1) if (w - i) % 3 == 0]
        grade = w - 3
        lmons = _lambda_monomials(grade) if grade % 2 == 0 else []
        # right-hand sides: [Q_k sigma_{<w}] at weight w - k must cancel -lead_k(sigma_w)
        rhs = {}
        for q in ("Q2", "Q4", "Q6"):
            full = _add(_lift(sig, ell[q]), H[q](sig), -1)
            rhs[q] = {e: c for e, c in full.items() if _uw(e) == w - _LOWER[q]}
        if not lmons:
            if any(rhs[q] for q in rhs):
                raise LinearSystemSingular(f"weight {w}: nonzero residual with no admissible unknowns")
            continue
        # lead_k is lambda-free: unit images per u-monomial
        images = {}
        for um in umons:
            unit = {um: t.one()}
            images[um] = {q: _LEADING[q](unit) for q in _LEADING}
        eq_keys = sorted({(q, e) for q in _LEADING for um in umons for e in images[um][q]}
                         | {(q, e) for q in rhs for e in rhs[q]})
        A = [[images[um][q].get(e, t.zero()).constant_term() for um in umons] for q, e in eq_keys]
        new = {um: t.zero() for um in umons}
        for lmon in lmons:
            b = [rhs[q].get(e, t.zero()).coeff(lmon) for q, e in eq_keys]
            if not any(b):
                continue
            x = _solve_exact(A, b)
            mono = Poly(t, {lmon: mpq(1)})
            for um, xi in zip(umons, x):
                if xi:
                    new[um] = new[um] + mono.scale(xi)
        # residual terms in lambda-monomials outside the grade signal a bug
        for q in rhs:
            for e, c in rhs[q].items():
                if not c.is_zero() and c.grade() != grade:
                    raise LinearSystemSingular(f"weight {w}: inhomogeneous residual in {q}")
        sig.update({um: c for um, c in new.items() if not c.is_zero()})
    return GradedSeries(2, max_weight, sig)


def annihilator_residuals_g2(s: GradedSeries) -> Dict[str, USer]:
    """Q0..Q6 applied to the truncated series, restricted to fully determined weights."""
    lm = build_lambda_model()
    ell = dict(zip(("Q0", "Q2", "Q4", "Q6"), lm.ell))
    H = h_operators()
    sig = dict(s.coefficients)
    W = s.max_weight
    H0 = _add(_add(_mul(_d(sig, 0), (1, 0), 1), _mul(_d(sig, 1), (0, 1), 3)), sig, -3)
    out = {"Q0": {e: c for e, c in _add(_lift(sig, ell["Q0"]), H0, -1).items() if _uw(e) <= W}}
    for q in ("Q2", "Q4", "Q6"):
        full = _add(_lift(sig, ell[q]), H[q](sig), -1)
        out[q] = {e: c for e, c in full.items() if _uw(e) <= W - _LOWER[q]}
    return out


def verify_sigma_suite(w1: int = 25, w2: int = 17) -> Report:
    rep = Report("sigma")
    s1 = solve_sigma_g1(w1)
    g2, g3 = G1_PARAMS.vars("g2", "g3")
    f = lambda n: mpq(1, math.factorial(n))
    shown1 = {5: -g2.scale(mpq(1, 2) * f(5)), 7: -(6 * g3).scale(f(7)),
              9: -(g2 ** 2).scale(mpq(9, 4) * f(9)), 11: -(18 * g2 * g3).scale(f(11))}
    rep.check("sigma.g1.initial", "sigma(u) = u + O(u^5)", [s1.coeff(1) - G1_PARAMS.one(), s1.coeff(3)],
              "sigma-g1")
    for k, v in shown1.items():
        rep.check(f"sigma.g1.u{k}", f"coefficient of u^{k} as displayed", s1.coeff(k) - v, "sigma-g1")
    for q, res in annihilator_residuals_g1(s1).items():
        rep.check(f"sigma.g1.{q}", f"{q} sigma = 0 through the truncation", list(res.values()), "sigma-g1")
    rep.check("sigma.g1.odd", "only odd powers of u occur", s1.is_odd(), "sigma-g1")
    rep.check("sigma.g1.grade", "coefficient of u^k has grade k - 1", s1.homogeneity_ok(), "sigma-g1")

    s2 = solve_sigma_g2(w2)
    for e, v in displayed_g2().items():
        rep.check(f"sigma.g2.u1^{e[0]}u3^{e[1]}", f"coefficient of u1^{e[0]} u3^{e[1]} as displayed",
                  s2.coeff(*e) - v, "sigma-g2")
    for q, res in annihilator_residuals_g2(s2).items():
        rep.check(f"sigma.g2.{q}", f"{q} sigma = 0 through the truncation", list(res.values()), "sigma-g2")
    rep.check("sigma.g2.odd", "coefficients vanish unless i + j is odd", s2.is_odd(), "sigma-g2")
    rep.check("sigma.g2.grade", "coefficient of u1^i u3^j has grade i + 3j - 3", s2.homogeneity_ok(),
              "sigma-g2")
    return rep


def displayed_g2() -> Dict[Exps, Poly]:
    """Every coefficient of the genus-2 initial segment through weight 15, zeros included."""
    P = LAMBDA.parse
    shown = {(0, 1): P("1"), (3, 0): P("-1/3"), (0, 3): P("1/6*l6"), (4, 1): P("-1/12*l4"),
             (3, 2): P("-1/6*l6"), (2, 3): P("-1/6*l8"), (1, 4): P("-1/3*l10"),
             (0, 5): P("1/60*l4*l8 + 1/120*l6^2")}
    out = {}
    for i in range(16):
        for j in range(6):
            if i + 3 * j <= 15 and i + j < 7:
                out[(i, j)] = shown.get((i, j), LAMBDA.zero())
    return out


# -- numeric evaluation -----------------------------------------------------------

@dataclass
class WpEvaluation:
    params: Tuple[complex, ...]
    u: Tuple[complex, ...]
    values: Dict[Tuple[int, int], complex]
    truncation_weight: int
    residual_estimate: float
    sigma: complex = 0j
    zeta: Tuple[complex, ...] = ()
    heuristic: bool = True
    raw: Dict[Tuple[int, int], object] = field(default_factory=dict, repr=False)


def _numeric_coeffs(s: GradedSeries, params: Sequence, upto: int, num) -> Dict[Exps, object]:
    out = {}
    for e, c in s.coefficients.items():
        if s.weight(e) > upto:
            continue
        total = num(0)
        for mono, q in c.items():
            term = num(int(q.numerator)) / int(q.denominator)
            for k, x in zip(mono, params):
                if k:
                    term *= x ** k
            total += term
        out[e] = total
    return out


def _taylor(coeffs: Mapping[Exps, object], u: Sequence, order: int, num) -> Dict[Exps, object]:
    """S[idx] = d^idx sigma(u) / idx!, for |idx| <= order."""
    nvar = len(u)
    S: Dict[Exps, object] = {}
    for idx in product(range(order + 1), repeat=nvar):
        if sum(idx) <= order:
            S[idx] = num(0)
    for e, c in coeffs.items():
        for idx in S:
            if any(k > n for k, n in zip(idx, e)):
                continue
            term = c
            for k, n, x in zip(idx, e, u):
                term = term * math.comb(n, k) * x ** (n - k)
            S[idx] += term
    return S


def _trunc_mul(a: Dict[Exps, object], b: Dict[Exps, object], order: int, num) -> Dict[Exps, object]:
    out = {k: num(0) for k in a}
    for i, x in a.items():
        if x == 0:
            continue
        for j, y in b.items():
            k = tuple(p + q for p, q in zip(i, j))
            if sum(k) <= order:
                out[k] += x * y
    return out


def _log_series(S: Dict[Exps, object], order: int, num, log) -> Dict[Exps, object]:
    zero = tuple(0 for _ in next(iter(S)))
    s0 = S[zero]
    T = {k: v / s0 for k, v in S.items()}
    T[zero] = num(0)
    L = {k: num(0) for k in S}
    P = dict(T)
    for n in range(1, order + 1):
        sign = 1 if n % 2 else -1
        for k, v in P.items():
            L[k] += sign * v / n
        P = _trunc_mul(P, T, order, num)
    L[zero] = log(s0)
    return L


def _leading_scale(genus: int, u: Sequence) -> float:
    return abs(u[0]) if genus == 1 else max(abs(u[1]), abs(u[0]) ** 3 / 3)


def _arith(dps: Optional[int]):
    if dps is None:
        return complex, cmath.log
    ctx = mpmath.mp.clone()
    ctx.dps = dps
    return ctx.mpc, ctx.log


def _wp_values(s: GradedSeries, params, u, indices, upto: int, check_zero: bool, dps: Optional[int]):
    num, log = _arith(dps)
    params = [num(p) for p in params]
    u = [num(x) for x in u]
    order = max([1] + [i + j for i, j in indices])
    S = _taylor(_numeric_coeffs(s, params, upto, num), u, order, num)
    zero = (0,) * len(u)
    s0 = S[zero]
    if check_zero and abs(s0) <= 1e-6 * _leading_scale(s.genus, u):
        raise NearZeroSigma(f"|sigma(u)| = {complex(s0):.3e} is too small at u = {tuple(map(complex, u))}")
    L = _log_series(S, order, num, log)
    vals = {}
    for i, j in indices:
        key = (i,) if len(u) == 1 else (i, j)
        vals[(i, j)] = -math.factorial(i) * math.factorial(j) * L[key]
    zeta = (L[(1,)],) if len(u) == 1 else (L[(1, 0)], L[(0, 1)])
    return vals, s0, zeta


def eval_wp(s: GradedSeries, params: Sequence[complex], u: Sequence[complex],
            indices: Iterable[Tuple[int, int]], tol: Optional[float] = None,
            dps: Optional[int] = None) -> WpEvaluation:
    """wp_{i,3j} = -d1^i d3^j log sigma at u (genus 1: indices (i, 0), wp = wp_{2,0}).

    Arithmetic is complex double, or mpmath with ``dps`` digits.
    ``residual_estimate`` is heuristic: the change in every value when the
    highest computed weight is dropped from the series.
    """
    indices = sorted(set(indices))
    if s.genus == 1 and any(j for _, j in indices):
        raise ValueError("genus 1 indices must have j = 0")
    W = s.max_weight
    vals, s0, zeta = _wp_values(s, params, u, indices, W, True, dps)
    prev, _, _ = _wp_values(s, params, u, indices, W - 2, False, dps)
    est = max((abs(complex(vals[k] - prev[k])) for k in indices), default=0.0)
    if tol is not None and est > tol:
        raise TruncationInsufficient(f"residual estimate {est:.3e} exceeds {tol:.3e}")
    c = lambda z: complex(z)
    return WpEvaluation(tuple(map(c, params)), tuple(map(c, u)), {k: c(v) for k, v in vals.items()},
                        W, float(est), c(s0), tuple(map(c, zeta)), raw=vals)


def wp_relation_residuals(ev: WpEvaluation) -> Dict[str, complex]:
    """The five genus-2 relations expressing wp_{i,3j}, i + j = 4, through wp20, wp13, wp06.

    Formed in the evaluator's own arithmetic, since the terms cancel heavily near u = 0.
    """
    w = ev.raw or ev.values
    one = w[(2, 0)] ** 0
    l4, l6, l8, l10 = (one * complex(x) for x in ev.params)
    p20, p13, p06 = w[(2, 0)], w[(1, 1)], w[(0, 2)]
    out = {
        "wp40": w[(4, 0)] - (6 * p20 ** 2 + 4 * p13 + 2 * l4),
        "wp33": w[(3, 1)] - (6 * p20 * p13 - 2 * p06),
        "wp26": w[(2, 2)] - (2 * p20 * p06 + 4 * p13 ** 2 + 2 * l4 * p13),
        "wp19": w[(1, 3)] - (6 * p13 * p06 + 4 * l6 * p13 - 2 * l8 * p20 - 4 * l10),
        "wp012": w[(0, 4)] - (6 * p06 ** 2 - 12 * l10 * p20 + 4 * l8 * p13 + 4 * l6 * p06 + 2 * l8 * l4),
    }
    return {k: complex(v) for k, v in out.items()}


RELATION_INDICES = [(2, 0), (1, 1), (0, 2), (4, 0), (3, 1), (2, 2), (1, 3), (0, 4)]


_SERIES_CACHE: Dict[Tuple[int, int], GradedSeries] = {}


def series(genus: int, max_weight: Optional[int] = None) -> GradedSeries:
    """Cached series with the default truncation weights (25 and 17)."""
    w = max_weight or (25 if genus == 1 else 17)
    key = (genus, w)
    if key not in _SERIES_CACHE:
        _SERIES_CACHE[key] = solve_sigma_g1(w) if genus == 1 else solve_sigma_g2(w)
    return _SERIES_CACHE[key]
