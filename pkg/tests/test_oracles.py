"""Independent oracles (sympy / mpmath) with frozen expected values.

Each oracle recomputes a quantity without going through the package's own
polynomial arithmetic, then the package result is compared against it.
"""

from fractions import Fraction

import mpmath
import pytest
import sympy as sp

from polydyn.polyring import to_text

g2, g3, u = sp.symbols("g2 g3 u")
L4, L6, L8, L10, X = sp.symbols("l4 l6 l8 l10 x")


def to_sympy(p):
    return sp.expand(sp.sympify(to_text(p).replace("^", "**")))


# -- Weierstrass sigma from the cubic, via sympy -------------------------------------

# frozen: sigma(u) = u - g2 u^5/240 - g3 u^7/840 - g2^2 u^9/161280 - g2 g3 u^11/2217600 + ...
FROZEN_SIGMA_G1 = {1: 1, 5: -g2 / 240, 7: -g3 / 840, 9: -g2 ** 2 / 161280, 11: -g2 * g3 / 2217600}


def _sigma_oracle(order: int = 13):
    n = (order + 3) // 2
    a = sp.symbols(f"a1:{n + 1}")
    wp = u ** -2 + sum(a[k] * u ** (2 * k) for k in range(n))
    eq = sp.expand((sp.diff(wp, u) ** 2 - 4 * wp ** 3 + g2 * wp + g3) * u ** 6)
    sol = {}
    for deg in range(0, 2 * n + 3):
        c = sp.expand(eq.coeff(u, deg).subs(sol))
        free = [s for s in a if s in c.free_symbols and s not in sol]
        if free:
            sol[free[0]] = sp.solve(c, free[0])[0]
    wp = wp.subs(sol)
    zeta_reg = -sp.integrate(sp.expand(wp - u ** -2), u)
    log_ratio = sp.integrate(zeta_reg, u)
    sig = sp.expand(u * sp.series(sp.exp(log_ratio), u, 0, order).removeO())
    return {k: sp.factor(sig.coeff(u, k)) for k in range(1, order + 1)}


@pytest.fixture(scope="module")
def sigma_oracle():
    return _sigma_oracle(13)


def test_sigma_oracle_matches_frozen(sigma_oracle):
    for k, v in FROZEN_SIGMA_G1.items():
        assert sp.simplify(sigma_oracle[k] - v) == 0
    assert all(sigma_oracle[k] == 0 for k in range(2, 13, 2))


def test_package_sigma_g1_matches_oracle(sigma_oracle):
    from polydyn.sigma import series
    s = series(1, 25)
    for k in range(1, 14):
        assert sp.simplify(to_sympy(s.coeff(k)) - sigma_oracle[k]) == 0, k


# -- Weierstrass wp through Jacobi sn, via mpmath --------------------------------------

def _wp_jacobi(g2v, g3v, uv):
    e = sorted((complex(r).real for r in mpmath.polyroots([4, 0, -g2v, -g3v])), reverse=True)
    e1, e2, e3 = e
    m = (e2 - e3) / (e1 - e3)
    sn = mpmath.ellipfun("sn", mpmath.sqrt(e1 - e3) * uv, m=m)
    return e3 + (e1 - e3) / sn ** 2


@pytest.mark.parametrize("uv", [0.1, 0.15, 0.2, -0.2])
def test_genus1_point_matches_jacobi_form(uv):
    from polydyn.numerics import genus1_point
    mpmath.mp.dps = 30
    ref = _wp_jacobi(4, 1, uv)
    x2 = genus1_point((4, 1), uv)[0]
    assert abs(x2 - complex(ref)) < 1e-9 * abs(complex(ref))


# -- genus one: independent determinant ----------------------------------------------

def test_genus1_determinant_oracle():
    from polydyn.genus1 import build_genus1
    x2, x3, x4 = sp.symbols("x2 x3 x4")
    rows = [[2 * x2, 3 * x3, 4 * x4],
            [x3, x4, 12 * x2 * x3],
            [sp.Rational(2, 3) * (x4 - 3 * x2 ** 2), 3 * x2 * x3, 3 * x3 ** 2 + 2 * x2 * x4]]
    d = sp.expand(sp.Matrix(rows).det())
    G2 = 12 * x2 ** 2 - 2 * x4
    G3 = -8 * x2 ** 3 + 2 * x4 * x2 - x3 ** 2
    assert sp.expand(3 * d - (G2 ** 3 - 27 * G3 ** 2)) == 0
    assert sp.expand(to_sympy(build_genus1().det_T1()) - d) == 0


# -- genus two: discriminant normalisation -----------------------------------------------

# frozen: Delta = (16/5)^2 * classical discriminant of x^5 + l4 x^3 + l6 x^2 + l8 x + l10
FROZEN_DELTA_OVER_DISC = sp.Rational(256, 25)


def test_delta_is_scaled_classical_discriminant():
    from polydyn.genus2 import build_lambda_model
    D = to_sympy(build_lambda_model().Delta)
    disc = sp.discriminant(X ** 5 + L4 * X ** 3 + L6 * X ** 2 + L8 * X + L10, X)
    assert sp.expand(D - FROZEN_DELTA_OVER_DISC * disc) == 0


@pytest.mark.parametrize("pt", [(1, 2, -1, 3, 0, 1), (Fraction(1, 2), -1, 2, 1, 1, -2), (2, 0, 1, -1, 3, 1)])
def test_det_T2_equals_minus_five_delta_at_points(pt):
    from polydyn.genus2 import COORDS, default_model
    m = default_model()
    vals = dict(zip(COORDS, map(sp.Rational, pt)))
    T2 = sp.Matrix([[to_sympy(e).subs(vals) for e in row] for row in m.T2])
    lam = {s: to_sympy(m.lam[k]).subs(vals) for s, k in zip((L4, L6, L8, L10), ("l4", "l6", "l8", "l10"))}
    disc = sp.discriminant(X ** 5 + L4 * X ** 3 + L6 * X ** 2 + L8 * X + L10, X).subs(lam)
    assert T2.det() == -5 * FROZEN_DELTA_OVER_DISC * disc


# -- genus two: pushforwards recomputed in sympy ------------------------------------------

def test_pushforward_rows_recomputed_in_sympy():
    from polydyn.genus2 import COORDS, LAMBDAS, build_lambda_model, default_model
    m = default_model()
    lm = build_lambda_model()
    cs = sp.symbols(" ".join(COORDS))
    lam_hat = [to_sympy(m.lam[k]) for k in LAMBDAS]
    sub = dict(zip((L4, L6, L8, L10), lam_hat))
    for row, label in enumerate(("L0", "L2", "L4", "L6")):
        D = [to_sympy(m.fields[label].on(c)) for c in COORDS]
        for col, lh in enumerate(lam_hat):
            lhs = sp.expand(sum(d * sp.diff(lh, c) for d, c in zip(D, cs)))
            rhs = sp.expand(to_sympy(lm.T[row][col]).subs(sub, simultaneous=True))
            assert sp.expand(lhs - rhs) == 0, (label, LAMBDAS[col])
    # frozen consequence: L2 l4^ = 6 l6^
    D2 = [to_sympy(m.fields["L2"].on(c)) for c in COORDS]
    assert sp.expand(sum(d * sp.diff(lam_hat[0], c) for d, c in zip(D2, cs)) - 6 * lam_hat[1]) == 0


def test_annihilating_fields_kill_lambda_hat_in_sympy():
    from polydyn.genus2 import COORDS, LAMBDAS, default_model
    m = default_model()
    cs = sp.symbols(" ".join(COORDS))
    for label in ("L1", "L3"):
        D = [to_sympy(m.fields[label].on(c)) for c in COORDS]
        for k in LAMBDAS:
            lh = to_sympy(m.lam[k])
            assert sp.expand(sum(d * sp.diff(lh, c) for d, c in zip(D, cs))) == 0


# -- grading of the 6x6 matrix -----------------------------------------------------------

def test_positional_grading_reading_is_inconsistent_with_degree_40():
    """With 1-based positions, sum of (i + sigma(i)) is 42 for every permutation."""
    import itertools
    pos = {sum(i + s for i, s in zip(range(1, 7), perm)) for perm in itertools.permutations(range(1, 7))}
    assert pos == {42}
    shifts, col_grades = (0, 1, 2, 3, 4, 6), (2, 3, 4, 4, 5, 6)
    assert sum(shifts) + sum(col_grades) == 40


def test_entry_grades_follow_field_shift_plus_coordinate_grade():
    from polydyn.genus2 import COORDS, LABELS, default_model, entry_grades
    m = default_model()
    g = entry_grades(m)
    for r, label in enumerate(LABELS):
        for c, name in enumerate(COORDS):
            assert g[r][c] in (None, int(label[1:]) + m.table.grade_of(name))


# -- Lenard chain via sympy differential operators ------------------------------------------

def test_resolvents_satisfy_recursion_under_sympy_differentiation():
    """d/dx R[l+1] = R[l]_xxx / 4 - U R[l]_x - U_x R[l] / 2 with U an undetermined function."""
    from polydyn.kdvtools import resolvents
    x = sp.symbols("x")
    U = sp.Function("U")(x)
    jet = {sp.Symbol(f"U{k}" if k else "U"): sp.diff(U, x, k) for k in range(12)}
    R = [sp.sympify(to_text(r).replace("^", "**"), locals={str(k): k for k in jet}).subs(jet)
         for r in resolvents(6)]
    assert R[0] == sp.Rational(1, 2)
    for lo, hi in zip(R, R[1:]):
        rhs = sp.diff(lo, x, 3) / 4 - U * sp.diff(lo, x) - sp.diff(U, x) * lo / 2
        assert sp.expand(sp.diff(hi, x) - rhs) == 0


# -- pole sums for the alpha = -2 equation ----------------------------------------------------

@pytest.mark.parametrize("poles", [(0,), (1, -2), (0, 1, 3), (Fraction(1, 2), Fraction(1, 2), 2)])
def test_pole_sums_up_to_three_solve_alpha_minus_two(poles):
    from polydyn.genus1 import alpha_minus_two_form
    t = sp.symbols("t")
    Uexpr = -2 * sum(1 / (t - sp.Rational(a)) for a in poles)
    form = to_sympy(alpha_minus_two_form())
    jets = {sp.Symbol("U"): Uexpr}
    for k in range(1, 4):
        jets[sp.Symbol(f"U{k}")] = sp.diff(Uexpr, t, k)
    assert sp.simplify(form.subs(jets)) == 0


# frozen: with poles 0,1,2,3 the residual is -48 / (t (t-1) (t-2) (t-3)), so -2/5 at t = 5
def test_four_poles_fail_alpha_minus_two():
    from polydyn.genus1 import pole_sum_residual
    assert pole_sum_residual((0, 1, 2, 3), 5) == Fraction(-2, 5)
    assert pole_sum_residual((0, 1, 2, 3), 4) == Fraction(-2, 1)
    assert pole_sum_residual((0, 1, 2), 5) == 0
