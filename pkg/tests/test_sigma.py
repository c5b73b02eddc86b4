import math

import pytest
from hypothesis import given, settings, strategies as st

from polydyn.polyring import G1_PARAMS, LAMBDA
from polydyn.sigma import (RELATION_INDICES, NearZeroSigma, TruncationInsufficient, annihilator_residuals_g1,
                           annihilator_residuals_g2, displayed_g2, eval_wp, series, solve_sigma_g1,
                           solve_sigma_g2, verify_sigma_suite, wp_relation_residuals)

S1 = series(1, 25)
S2 = series(2, 17)


def test_suite_passes():
    rep = verify_sigma_suite()
    assert rep.passed, [e.id for e in rep.failed]


@pytest.mark.parametrize("k,text", [(5, "-1/2*g2"), (7, "-6*g3"), (9, "-9/4*g2^2"), (11, "-18*g2*g3")])
def test_genus1_displayed_coefficients(k, text):
    assert S1.coeff(k).scale(math.factorial(k)) == G1_PARAMS.parse(text)


def test_genus1_initial():
    assert S1.coeff(1) == G1_PARAMS.one()
    assert S1.coeff(3).is_zero()


@pytest.mark.parametrize("e,text", [((0, 3), "1/6*l6"), ((4, 1), "-1/12*l4"),
                                    ((0, 5), "1/60*l4*l8 + 1/120*l6^2")])
def test_genus2_examples(e, text):
    assert S2.coeff(*e) == LAMBDA.parse(text)


def test_genus2_displayed_segment():
    for e, c in displayed_g2().items():
        assert S2.coeff(*e) == c, e


def test_annihilators_vanish():
    assert all(not r for r in annihilator_residuals_g1(S1).values())
    assert all(not r for r in annihilator_residuals_g2(S2).values())


def test_odd_and_homogeneous():
    for s in (S1, S2):
        assert s.is_odd() and s.homogeneity_ok()


def test_minimum_weights():
    with pytest.raises(ValueError):
        solve_sigma_g1(11)
    with pytest.raises(ValueError):
        solve_sigma_g2(5)


def test_truncation_is_a_prefix():
    small = solve_sigma_g2(11)
    for e, c in small.coefficients.items():
        assert S2.coeff(*e) == c


def test_json_export_shape():
    import json
    d = json.loads(S1.to_json())
    rec = next(r for r in d["terms"] if r["u_exponents"] == [9])
    assert rec["times_factorial"] == "(-9/4*g2^2)/9!"
    assert {"u_exponents", "parameter_polynomial"} <= set(rec)


def test_genus1_cubic_at_point():
    ev = eval_wp(S1, (4, 1), (0.2,), [(2, 0), (3, 0)])
    p, dp = ev.values[(2, 0)], ev.values[(3, 0)]
    assert abs(dp ** 2 - (4 * p ** 3 - 4 * p - 1)) < 1e-8
    assert ev.heuristic and ev.residual_estimate >= 0


@given(st.floats(0.1, 0.2), st.sampled_from([1, -1]))
def test_genus1_wp_is_even(x, sgn):
    a = eval_wp(S1, (4, 1), (sgn * x,), [(2, 0)]).values[(2, 0)]
    b = eval_wp(S1, (4, 1), (-sgn * x,), [(2, 0)]).values[(2, 0)]
    assert abs(a - b) <= 1e-12 * abs(a)


def test_genus2_relation_at_stated_point():
    # residual is a truncation effect: about 7e-6 at weight 17 for this point
    ev = eval_wp(S2, (1, 1, 1, 1), (0.15, 0.05), RELATION_INDICES, dps=30)
    assert abs(wp_relation_residuals(ev)["wp40"]) < 2e-5


def test_near_zero_sigma():
    with pytest.raises(NearZeroSigma):
        eval_wp(S2, (1, 1, 1, 1), (0, 0), [(2, 0)])


def test_truncation_insufficient():
    with pytest.raises(TruncationInsufficient):
        eval_wp(S2, (1, 1, 1, 1), (0.4, 0.3), [(2, 0)], tol=1e-30)


@settings(max_examples=10)
@given(st.floats(0.05, 0.15), st.floats(-0.003, 0.003), st.sampled_from([(2, 0), (1, 1), (3, 0), (0, 2)]))
def test_u1_derivative_matches_finite_difference(a, b, idx):
    h = 1e-5
    lam = (1, 0.5, -1, 2)
    nxt = (idx[0] + 1, idx[1])
    v = eval_wp(S2, lam, (a, b), [nxt], dps=40).values[nxt]
    fp = eval_wp(S2, lam, (a + h, b), [idx], dps=40).values[idx]
    fm = eval_wp(S2, lam, (a - h, b), [idx], dps=40).values[idx]
    fd = (fp - fm) / (2 * h)
    assert abs(fd - v) <= 1e-6 * max(1.0, abs(v))
