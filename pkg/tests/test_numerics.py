import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from polydyn.genus1 import build_genus1
from polydyn.genus2 import COORDS, default_model
from polydyn.numerics import (DEFAULT_KDV_GRID, DimensionMismatch, StepUnderflow, compile_poly, drift,
                              flow_commutator, genus1_point, genus2_point, halving_study, integrate_flow,
                              jacobian_minors, kdv_residual, lambda_invariants, matched_derivative_gap,
                              parse_grid, singular_family, singularity_probe)
from polydyn.polyring import G2

M = default_model()
LAM = (1, 1, 1, 1)
U0 = (-0.4, 0.3)


@pytest.fixture(scope="module")
def x0():
    return genus2_point(LAM, U0)


def test_start_point_recovers_lambda(x0):
    # near u = 0 the terms of l10^ are of size |u|^-10, so double precision limits agreement
    near = genus2_point(LAM, (0.15, 0.003))
    for k, p in lambda_invariants(M).items():
        f = compile_poly(p, COORDS)
        assert abs(f(near) - 1) < 1e-4, k
        # the flow start point lies far out, so weight-17 truncation dominates there
        assert abs(f(x0) - 1) < 5e-2, k


def test_compile_poly_matches_evaluate():
    p = G2.parse("3*x2^2*z4 - 1/2*x3*z5 + 7")
    pt = [0.3 + 0.1j, -1, 2, 0.5j, 1.5, -0.25]
    ref = p.evaluate(dict(zip(COORDS, pt)))
    assert abs(compile_poly(p, COORDS)(np.array(pt)) - ref) < 1e-12


@pytest.mark.parametrize("label", ["L1", "L3"])
def test_lambda_drift_adaptive(x0, label):
    tr = integrate_flow(M.fields[label], x0, 0.5, tol=1e-12, coords=COORDS, invariants=lambda_invariants(M))
    assert max(tr.drift.values()) < 1e-9
    assert tr.states[-1].t == pytest.approx(0.5)


@pytest.mark.parametrize("label", ["L1", "L3"])
def test_fixed_step_drift_is_fourth_order(x0, label):
    study = halving_study(M.fields[label], x0, 0.5, 0.025, lambda_invariants(M), coords=COORDS, levels=3)
    for name, d in study.items():
        for a, b in zip(d, d[1:]):
            assert 13 < a / b < 19, (name, d)


def test_flows_commute(x0):
    assert flow_commutator(M.fields["L1"], M.fields["L3"], x0, 0.2, 0.2, coords=COORDS) < 1e-9


def test_matched_derivatives(x0):
    assert M.fields["L1"].on("z4") == M.fields["L3"].on("x2")
    assert matched_derivative_gap(M.fields, x0) < 1e-5


@pytest.mark.parametrize("t", [0.1, -0.1, 0.05])
def test_genus1_flow_agrees_with_sigma(t):
    m = build_genus1()
    u0 = 0.2
    x = genus1_point((4, 1), u0)
    direction = 1 if t > 0 else -1
    tr = integrate_flow(m.L1, x, abs(t), tol=1e-12, coords=m.coords, direction=direction)
    ref = genus1_point((4, 1), u0 + t)
    assert np.max(np.abs(tr.final - ref)) < 1e-7 * max(1, np.max(np.abs(ref)))


def test_step_underflow_at_pole():
    m = build_genus1()
    # wp(u) near u = 0.1: x2 = 1/u^2, x3 = -2/u^3, x4 = 6/u^4
    with pytest.raises(StepUnderflow):
        integrate_flow(m.L1, [100, -2000, 60000], 0.3, tol=1e-12, coords=m.coords, direction=-1)


def test_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        integrate_flow(M.fields["L1"], [1, 2, 3], 0.1, step=0.01, coords=COORDS)


def test_step_and_tol_are_exclusive(x0):
    with pytest.raises(ValueError):
        integrate_flow(M.fields["L1"], x0, 0.1, step=0.01, tol=1e-9, coords=COORDS)


def test_complex_direction_preserves_invariants(x0):
    tr = integrate_flow(M.fields["L3"], x0, 0.2, tol=1e-12, coords=COORDS, direction=np.exp(0.7j))
    assert max(drift(tr, lambda_invariants(M)).values()) < 1e-9


def test_trajectory_csv_header(x0):
    tr = integrate_flow(M.fields["L1"], x0, 0.05, step=0.01, coords=COORDS)
    inv = {k: compile_poly(p, COORDS) for k, p in lambda_invariants(M).items()}
    lines = tr.to_csv(inv).splitlines()
    assert lines[0].split(",")[:3] == ["t", "re_x2", "im_x2"]
    assert lines[0].endswith("drift_l10")
    assert len(lines) == 7
    assert "np." not in lines[1]


def test_kdv_residual_on_default_grid():
    rep = kdv_residual((1, 0, 0, 1), parse_grid(DEFAULT_KDV_GRID))
    assert len(rep.points) == 9
    assert rep.max_kdv < 1e-7 and rep.max_chi2 < 1e-7
    assert rep.min_anti > 1e-2


def test_parse_grid_forms():
    assert parse_grid("1,2;3") == [(1, 3), (2, 3)]
    assert parse_grid("0.1:0.2 0.3:-1j") == [(0.1, 0.2), (0.3, -1j)]


def test_singular_family_is_exact():
    from polydyn.numerics import FAMILY
    minors = jacobian_minors(M)
    assert len(minors) == 15
    for name, sub in singular_family().items():
        assert all(mi.substitute(sub, FAMILY).is_zero() for mi in minors), name


def test_probe_is_deterministic():
    a = singularity_probe(4, seed=7)
    b = singularity_probe(4, seed=7)
    assert a.to_json() == b.to_json()
    assert a.passed and a.meta["violations"] == 0


@settings(max_examples=5)
@given(st.floats(0.05, 0.3), st.floats(0.05, 0.3))
def test_random_commutation(s, t):
    x = genus2_point(LAM, U0)
    assert flow_commutator(M.fields["L1"], M.fields["L3"], x, s, t, coords=COORDS) < 1e-8
