"""Tests for least-squares fitting to probability judgements.

Expected values tagged as derived were computed from independent oracles:
the normal/lognormal spreads come from bisection inversion of the standard
normal CDF, not from the fitting path under test.
"""

import math

import numpy as np
import pytest
from scipy import stats

from elicit.distributions import FittedDistribution, Support, UNBOUNDED
from elicit.errors import ConfigurationError, ValidationError
from elicit.fitting import ProbabilityConstraint, fit, fit_best, validate_constraints


def invert_norm_cdf(p, lo=-10.0, hi=10.0):
    """Bisection oracle for the standard normal quantile."""
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if stats.norm.cdf(mid) < p:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


Z75 = invert_norm_cdf(0.75)


class TestConstraints:
    def test_sorted_and_validated(self):
        cs = validate_constraints([(10, 0.9), (5, 0.5), (1, 0.1)])
        assert [c.value for c in cs] == [1, 5, 10]

    def test_non_monotone_rejected(self):
        with pytest.raises(ValidationError, match="offending pair"):
            validate_constraints([(1, 0.5), (2, 0.4)])
        with pytest.raises(ValidationError):
            validate_constraints([(1, 0.5), (1, 0.6)])

    def test_probability_bounds(self):
        with pytest.raises(ValidationError):
            ProbabilityConstraint(1.0, 1.0)

    def test_outside_support_rejected(self):
        with pytest.raises(ConfigurationError):
            validate_constraints([(0.2, 0.3), (0.9, 0.7)], Support(0.0, 0.7))


class TestFit:
    def test_beta_anchor_case(self):
        # group judgements: P(<25%)=0.30, P(<35%)=0.50, P(>40%)=0.30
        res = fit(
            "beta",
            Support(0.0, 0.70),
            [(0.25, 0.30), (0.35, 0.50), (0.40, 0.70)],
        )
        a, b = res.distribution.params
        assert a == pytest.approx(2.81, abs=0.05)
        assert b == pytest.approx(3.05, abs=0.05)
        assert res.residual < 3e-3

    def test_normal_symmetric_quartiles(self):
        res = fit("normal", UNBOUNDED, [(-1, 0.25), (0, 0.5), (1, 0.75)])
        mean, sd = res.distribution.params
        assert mean == pytest.approx(0.0, abs=1e-6)
        assert sd == pytest.approx(1.0 / Z75, abs=1e-4)  # 1.4826 from the oracle

    def test_lognormal_two_constraints(self):
        res = fit("lognormal", Support(0.0, math.inf), [(1.0, 0.50), (2.0, 0.75)])
        log_mean, log_sd = res.distribution.params
        assert log_mean == pytest.approx(0.0, abs=1e-6)
        assert log_sd == pytest.approx(math.log(2.0) / Z75, abs=1e-4)  # 1.0277

    def test_exact_gamma_recovery(self):
        target = FittedDistribution("gamma", (2.5, 1.2), Support(0.0, math.inf))
        cs = [(target.quantile(p), p) for p in (0.25, 0.75)]
        res = fit("gamma", Support(0.0, math.inf), cs)
        assert res.residual < 1e-10

    def test_too_few_constraints(self):
        with pytest.raises(ValidationError):
            fit("normal", UNBOUNDED, [(0, 0.5)])

    def test_infeasible_family(self):
        with pytest.raises(ConfigurationError):
            fit("beta", UNBOUNDED, [(0, 0.4), (1, 0.6)])

    def test_order_invariance(self):
        cs1 = [(0.25, 0.30), (0.35, 0.50), (0.40, 0.70)]
        cs2 = [cs1[2], cs1[0], cs1[1]]
        r1 = fit("beta", Support(0.0, 0.70), cs1)
        r2 = fit("beta", Support(0.0, 0.70), cs2)
        assert r1.distribution.params == r2.distribution.params

    def test_shifted_half_bounded_supports(self):
        # gamma and lognormal are shifted by the support lower bound
        for family, params, lower in (
            ("gamma", (2.5, 0.8), 5.0),
            ("lognormal", (0.3, 0.6), -2.0),
        ):
            target = FittedDistribution(family, params, Support(lower, math.inf))
            cs = [(target.quantile(p), p) for p in (0.25, 0.5, 0.75)]
            res = fit(family, Support(lower, math.inf), cs)
            assert np.allclose(res.distribution.params, params, rtol=1e-5)
            assert res.residual < 1e-12

    def test_student_t_df_default_and_override(self):
        res3 = fit("student-t", UNBOUNDED, [(-1, 0.25), (0, 0.5), (1, 0.75)])
        assert res3.distribution.params[2] == 3.0
        res8 = fit("student-t", UNBOUNDED, [(-1, 0.25), (0, 0.5), (1, 0.75)], student_t_df=8.0)
        assert res8.distribution.params[2] == 8.0


ROUNDTRIP_CASES = []
_rng = np.random.default_rng(2024)
for _ in range(6):
    ROUNDTRIP_CASES.append(
        FittedDistribution("normal", (_rng.normal(0, 5), 0.3 + 3 * _rng.random()))
    )
    ROUNDTRIP_CASES.append(
        FittedDistribution(
            "student-t", (_rng.normal(0, 5), 0.3 + 3 * _rng.random(), 3.0)
        )
    )
    ROUNDTRIP_CASES.append(
        FittedDistribution(
            "gamma", (0.5 + 4 * _rng.random(), 0.2 + 2 * _rng.random()), Support(0, math.inf)
        )
    )
    ROUNDTRIP_CASES.append(
        FittedDistribution(
            "lognormal", (_rng.normal(0, 1), 0.2 + 1.5 * _rng.random()), Support(0, math.inf)
        )
    )
    ROUNDTRIP_CASES.append(
        FittedDistribution(
            "beta", (0.8 + 6 * _rng.random(), 0.8 + 6 * _rng.random()), Support(0, 1)
        )
    )


class TestRoundTrip:
    @pytest.mark.parametrize(
        "target", ROUNDTRIP_CASES, ids=lambda d: f"{d.family}-{d.params[0]:.2f}"
    )
    def test_refit_recovers_cdf_at_constraints(self, target):
        probs = (0.25, 0.5, 0.75)
        cs = [(target.quantile(p), p) for p in probs]
        res = fit(target.family, target.support, cs)
        values = np.array([c[0] for c in cs])
        assert np.allclose(res.distribution.cdf(values), probs, atol=1e-6)


class TestAffineEquivariance:
    @pytest.mark.parametrize("shift,scale", [(0.0, 0.7), (3.0, 10.0), (-2.0, 0.04)])
    def test_beta_shape_invariant_under_affine_map(self, shift, scale):
        base_cs = [(0.25, 0.30), (0.35, 0.50), (0.40, 0.70)]
        ref = fit("beta", Support(0.0, 0.70), base_cs)
        mapped_cs = [(shift + scale * v, p) for v, p in base_cs]
        mapped = fit("beta", Support(shift, shift + scale * 0.70), mapped_cs)
        assert np.allclose(ref.distribution.params, mapped.distribution.params, atol=1e-6)


class TestFitBest:
    def test_symmetric_constraints_prefer_normal(self):
        ranked = fit_best(UNBOUNDED, [(-1, 0.25), (0, 0.5), (1, 0.75)])
        assert ranked[0].family == "normal"
        assert ranked[0].residual <= min(r.residual for r in ranked)

    def test_beta_anchor_in_bounded_ranking(self):
        ranked = fit_best(Support(0.0, 0.70), [(0.25, 0.30), (0.35, 0.50), (0.40, 0.70)])
        betas = [r for r in ranked if r.family == "beta"]
        assert betas and betas[0].residual < 1e-2

    def test_exact_gamma_ranked_first(self):
        target = FittedDistribution("gamma", (3.0, 2.0), Support(0.0, math.inf))
        cs = [(target.quantile(p), p) for p in (0.25, 0.75)]
        ranked = fit_best(Support(0.0, math.inf), cs)
        assert ranked[0].family == "gamma"
        assert ranked[0].residual < 1e-10

    def test_residuals_ascending(self):
        ranked = fit_best(UNBOUNDED, [(-1, 0.2), (0.2, 0.5), (2, 0.8)])
        rs = [r.residual for r in ranked]
        assert rs == sorted(rs)

    def test_no_compatible_family(self):
        with pytest.raises(ConfigurationError):
            fit_best(Support(-math.inf, 0.0), [(-2, 0.3), (-1, 0.7)])
