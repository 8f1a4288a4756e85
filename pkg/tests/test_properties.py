"""Property-based checks of the algebraic invariants."""

import math

from hypothesis import given, settings, strategies as st

from elicit.copula import concordance_to_rho, rho_to_concordance
from elicit.distributions import Support
from elicit.extension import _round_to_step, fit_median_function
from elicit.fitting import fit, validate_constraints
from elicit.judgements import JudgementSet, to_constraints


@given(st.floats(min_value=0.001, max_value=0.999))
def test_concordance_round_trip(c):
    assert math.isclose(rho_to_concordance(concordance_to_rho(c)), c, abs_tol=1e-12)


@given(
    st.floats(min_value=1e-6, max_value=0.5 - 1e-6),
)
def test_concordance_odd_symmetry(delta):
    # abs_tol absorbs the rounding of 0.5 +/- delta to the nearest float
    assert math.isclose(
        concordance_to_rho(0.5 + delta),
        -concordance_to_rho(0.5 - delta),
        rel_tol=1e-9,
        abs_tol=1e-12,
    )


@given(
    lo=st.floats(min_value=-100, max_value=100),
    gaps=st.tuples(*[st.floats(min_value=0.01, max_value=10) for _ in range(4)]),
)
def test_tertile_judgement_constraints_monotone(lo, gaps):
    a = lo
    b = a + gaps[0]
    m = b + gaps[1]
    c = m + gaps[2]
    d = c + gaps[3]
    j = JudgementSet("A", "q", (a, d), median=m, tertiles=(b, c))
    cs = to_constraints(j)
    assert all(x.value < y.value and x.cum_prob < y.cum_prob for x, y in zip(cs, cs[1:]))


@given(
    perm=st.permutations([(0.25, 0.30), (0.35, 0.50), (0.40, 0.70)]),
)
@settings(max_examples=6, deadline=None)
def test_fit_order_invariance(perm):
    ref = fit("beta", Support(0.0, 0.70), [(0.25, 0.30), (0.35, 0.50), (0.40, 0.70)])
    other = fit("beta", Support(0.0, 0.70), perm)
    assert other.distribution.params == ref.distribution.params


@given(
    v=st.floats(min_value=-1e4, max_value=1e4),
    step=st.sampled_from([0.0, 0.01, 0.05, 0.1, 0.5, 1.0]),
)
def test_rounding_lands_on_grid(v, step):
    r = _round_to_step(v, step)
    if step == 0:
        assert r == v
    else:
        assert abs(r - v) <= step / 2 + 1e-9
        assert math.isclose(round(r / step) * step, r, abs_tol=1e-9)


@given(
    ys=st.lists(
        st.floats(min_value=0.1, max_value=0.9), min_size=2, max_size=6, unique=True
    ),
    base=st.floats(min_value=0.05, max_value=0.5),
)
def test_median_function_interpolates(ys, base):
    points = [(y, base * (1 + y)) for y in sorted(ys)]
    fn = fit_median_function(points, transform="log")
    for y, m in points:
        assert math.isclose(fn.evaluate(y), m, rel_tol=1e-9)


@given(
    values=st.lists(st.floats(min_value=-50, max_value=50), min_size=2, max_size=6, unique=True),
)
def test_validate_constraints_sorts(values):
    values = sorted(values)
    probs = [0.1 + 0.8 * i / (len(values) - 1) for i in range(len(values))]
    shuffled = list(zip(reversed(values), reversed(probs)))
    cs = validate_constraints(shuffled)
    assert [c.value for c in cs] == values
