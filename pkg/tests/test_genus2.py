import pytest

from polydyn.genus2 import (COORDS, LABELS, LAMBDAS, build_genus2, build_lambda_model, default_model, delta_hat,
                            det_t2, entry_grades, named_polynomials, pushforward_even, reduce_modulo_flow,
                            to_even, u_equations, verify_genus2_suite, verify_lambda_model)
from polydyn.polyring import G2
from polydyn.vectorfield import apply

M = default_model()


def _graded_monomial(g):
    x2, x3 = G2.vars("x2", "x3")
    return x2 ** (g // 2) if g % 2 == 0 else x3 * x2 ** ((g - 3) // 2)


def test_suite_counts_and_pass():
    rep = verify_genus2_suite()
    assert rep.passed, [e.id for e in rep.failed]
    ids = [e.id for e in rep.entries]
    assert sum(i.startswith("g2.bracket.") for i in ids) == 15
    assert sum(i.startswith("g2.push.") for i in ids) == 24
    assert sum(i.startswith("g2.ueq.") for i in ids) == 11
    assert sum(i.startswith("g2.jacobi.") for i in ids) == 20


def test_strict_build_is_consistent():
    m = build_genus2(strict=True)
    assert not m.issues


def test_lambda_model_checks():
    assert verify_lambda_model().passed


def test_lambda_hat_grades():
    for k in LAMBDAS:
        assert M.lam[k].grade() == int(k[1:])


def test_annihilators():
    for label in ("L1", "L3"):
        for k in LAMBDAS:
            assert apply(M.fields[label], M.lam[k]).is_zero()


def test_entry_grade_rule():
    for label, row in zip(LABELS, entry_grades(M)):
        for c, g in zip(COORDS, row):
            assert g is None or g == int(label[1:]) + G2.grade_of(c)


def test_det_is_minus_five_delta_and_grade_40():
    d = det_t2(M)
    assert d.grade() == 40
    assert d == -5 * delta_hat(M)
    assert build_lambda_model().Delta.grade() == 40


def test_named_polynomials_are_homogeneous():
    for name, p in named_polynomials().items():
        assert isinstance(p.grade(), int) or p.is_zero(), name


def test_even_pushforward_raises_on_odd_input():
    from polydyn.genus2 import NotEven
    with pytest.raises(NotEven):
        to_even(G2.var("x3"))


def test_pushforward_even_fields_exist():
    pf = pushforward_even(M)
    assert set(pf) >= {"L0", "L2", "L4", "L6"}


def test_u_equations_all_reduce_to_zero():
    eqs = u_equations()
    assert len(eqs) == 11
    for name, (_, e) in eqs.items():
        assert reduce_modulo_flow(e).is_zero(), name


@pytest.mark.parametrize("r", range(6))
@pytest.mark.parametrize("c", range(6))
def test_every_single_entry_mutation_is_caught(r, c):
    m = M.with_entry(r, c, M.T2[r][c] + _graded_monomial(int(LABELS[r][1:]) + G2.grade_of(COORDS[c])))
    rep = verify_genus2_suite(m, include_det=False)
    assert rep.failed
    # grade bookkeeping alone cannot see a same-grade change
    assert all(e.ok for e in rep.entries if e.id == "g2.grade.entries")


def test_reduction_detects_wrong_coefficient():
    from polydyn.polyring import JET_UV
    assert not reduce_modulo_flow(JET_UV.parse("U3 - 6*U*U1 - 3*Ud")).is_zero()


def test_t2_entries_match_golden_text():
    import json
    from pathlib import Path
    from polydyn.polyring import to_text
    golden = json.loads((Path(__file__).parent / "golden" / "t2_entries.json").read_text())
    got = {f"{lab}.{c}": to_text(M.fields[lab].on(c)) for lab in LABELS for c in COORDS}
    assert got == golden
