from fractions import Fraction

from hypothesis import settings, strategies as st

from polydyn.polyring import G1, Poly

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")

coeffs = st.integers(-10, 10).filter(bool)
rationals = st.fractions(min_value=-10, max_value=10, max_denominator=7)


def monomials(n: int, max_exp: int = 3):
    return st.tuples(*[st.integers(0, max_exp)] * n)


def polys(table=G1, max_terms: int = 5, max_exp: int = 3, coefficients=coeffs):
    return st.dictionaries(monomials(len(table), max_exp), coefficients, max_size=max_terms).map(
        lambda d: Poly(table, d))


@st.composite
def homogeneous(draw, table=G1, max_grade: int = 12, max_terms: int = 4):
    g = draw(st.integers(0, max_grade))
    mons = [m for m in _monomials_of_grade(table.grades, g)]
    if not mons:
        return Poly.constant(table, 0)
    chosen = draw(st.lists(st.sampled_from(mons), max_size=max_terms, unique=True))
    return Poly(table, {m: draw(coeffs) for m in chosen})


def _monomials_of_grade(grades, g, prefix=()):
    if len(prefix) == len(grades):
        if g == 0:
            yield prefix
        return
    w = grades[len(prefix)]
    for e in range(g // w + 1 if w else 1):
        yield from _monomials_of_grade(grades, g - e * w, prefix + (e,))


def frac(x) -> Fraction:
    return Fraction(int(x.numerator), int(x.denominator))
