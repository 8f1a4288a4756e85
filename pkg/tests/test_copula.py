"""Tests for the Gaussian-copula joint distribution machinery."""

import math

import numpy as np
import pytest
from scipy import integrate, stats

from elicit.copula import (
    ConcordanceJudgement,
    CopulaModel,
    build,
    concordance_to_rho,
    empirical_concordance,
    explore,
    rho_to_concordance,
    sample_joint,
)
from elicit.distributions import FittedDistribution, Support
from elicit.errors import ConfigurationError, CorrelationError, ValidationError

X_MARG = FittedDistribution("beta", (2.81, 3.05), Support(0.0, 0.70))
Z_MARG = FittedDistribution("normal", (90.0, 60.0))


def two_qoi_model(c=0.7):
    return build(
        [X_MARG, Z_MARG],
        [ConcordanceJudgement(pair=("exac", "fev1"), probability=c)],
        qoi_ids=("exac", "fev1"),
    )


class TestConcordanceMap:
    def test_half_maps_to_zero(self):
        assert concordance_to_rho(0.5) == pytest.approx(0.0, abs=1e-15)

    def test_paper_value(self):
        assert concordance_to_rho(0.7) == pytest.approx(math.sin(0.2 * math.pi), rel=1e-12)

    def test_comonotone_limit(self):
        assert concordance_to_rho(1 - 1e-9) > 1 - 1e-6
        with pytest.raises(ValidationError):
            concordance_to_rho(1.0)
        with pytest.raises(ValidationError):
            concordance_to_rho(0.0)

    def test_round_trip(self):
        for c in np.linspace(0.01, 0.99, 33):
            assert rho_to_concordance(concordance_to_rho(c)) == pytest.approx(c, abs=1e-12)

    def test_strictly_increasing_and_odd(self):
        cs = np.linspace(0.05, 0.95, 19)
        rhos = [concordance_to_rho(c) for c in cs]
        assert all(a < b for a, b in zip(rhos, rhos[1:]))
        for delta in (0.1, 0.25, 0.4):
            assert concordance_to_rho(0.5 + delta) == pytest.approx(
                -concordance_to_rho(0.5 - delta), rel=1e-12
            )

    def test_mc_oracle_at_0_7(self):
        # independent check: 10^6 bivariate normals at rho = sin(0.2 pi)
        rho = math.sin(0.2 * math.pi)
        rng = np.random.default_rng(42)
        z1 = rng.standard_normal(1_000_000)
        z2 = rho * z1 + math.sqrt(1 - rho**2) * rng.standard_normal(1_000_000)
        conc = np.mean((z1 > 0) == (z2 > 0))
        assert conc == pytest.approx(0.700, abs=0.001)

    def test_quadrant_identity_against_quadrature(self):
        # P(Z1>0, Z2>0) = 1/4 + arcsin(rho) / (2 pi), checked by 2-D quadrature
        for rho in (-0.6, 0.0, 0.3, math.sin(0.2 * math.pi), 0.9):
            det = 1 - rho**2

            def dens(y, x):
                q = (x * x - 2 * rho * x * y + y * y) / det
                return math.exp(-q / 2) / (2 * math.pi * math.sqrt(det))

            quad, _ = integrate.dblquad(dens, 0, 8.5, 0, 8.5, epsabs=1e-9)
            analytic = 0.25 + math.asin(rho) / (2 * math.pi)
            assert quad == pytest.approx(analytic, abs=1e-6)
            # concordance = both-above + both-below = twice the quadrant
            assert rho_to_concordance(rho) == pytest.approx(2 * analytic, rel=1e-12)


class TestBuild:
    def test_two_qoi_paper_case(self):
        model = two_qoi_model(0.7)
        assert model.matrix[0, 1] == pytest.approx(math.sin(0.2 * math.pi))
        assert model.dimension == 2

    def test_identity_for_all_half(self):
        model = build(
            [X_MARG, Z_MARG, FittedDistribution("normal", (0, 1))],
            [
                ConcordanceJudgement(("a", "b"), 0.5),
                ConcordanceJudgement(("a", "c"), 0.5),
                ConcordanceJudgement(("b", "c"), 0.5),
            ],
            qoi_ids=("a", "b", "c"),
        )
        assert np.allclose(model.matrix, np.eye(3))

    def test_incoherent_triple_rejected_with_diagnosis(self):
        with pytest.raises(CorrelationError) as excinfo:
            build(
                [X_MARG, Z_MARG, FittedDistribution("normal", (0, 1))],
                [
                    ConcordanceJudgement(("a", "b"), 0.99),
                    ConcordanceJudgement(("a", "c"), 0.99),
                    ConcordanceJudgement(("b", "c"), 0.01),
                ],
                qoi_ids=("a", "b", "c"),
            )
        diag = excinfo.value.diagnosis
        assert diag.shortfall > 0
        assert min(diag.eigenvalues) < 0
        bc = diag.feasible[("b", "c")]
        # holding the 0.99s fixed, the b-c concordance must be high, not 0.01
        assert bc["concordance"][0] > 0.9

    def test_dimension_limits(self):
        with pytest.raises(ConfigurationError):
            build([X_MARG], [], qoi_ids=("a",))
        with pytest.raises(ConfigurationError):
            build(
                [X_MARG] * 4,
                [],
                qoi_ids=("a", "b", "c", "d"),
            )

    def test_missing_pair_rejected(self):
        with pytest.raises(ValidationError):
            build(
                [X_MARG, Z_MARG, FittedDistribution("normal", (0, 1))],
                [ConcordanceJudgement(("a", "b"), 0.6)],
                qoi_ids=("a", "b", "c"),
            )

    def test_pair_normalized(self):
        j = ConcordanceJudgement(("fev1", "exac"), 0.7)
        assert j.pair == ("exac", "fev1")


class TestSampleJoint:
    def test_independence_concordance(self):
        model = two_qoi_model(0.5)
        s = sample_joint(model, 100_000, seed=1)
        conc = empirical_concordance(s, [X_MARG.median, Z_MARG.median])
        assert conc[(0, 1)] == pytest.approx(0.5, abs=0.005)

    def test_columns_match_marginals_ks(self):
        model = two_qoi_model(0.7)
        n = 100_000
        s = sample_joint(model, n, seed=2)
        for k, marg in enumerate(model.marginals):
            xs = np.sort(s[:, k])
            ks = np.max(np.abs(np.arange(1, n + 1) / n - marg.cdf(xs)))
            assert ks < 1.63 / math.sqrt(n)

    def test_column_medians(self):
        model = two_qoi_model(0.7)
        n = 100_000
        s = sample_joint(model, n, seed=3)
        for k, marg in enumerate(model.marginals):
            se = 1.0 / (2 * marg.pdf(marg.median) * math.sqrt(n))
            assert abs(np.median(s[:, k]) - marg.median) < 2 * se

    def test_concordance_self_consistency(self):
        model = two_qoi_model(0.7)
        s = sample_joint(model, 1_000_000, seed=4)
        conc = empirical_concordance(s, [X_MARG.median, Z_MARG.median])
        assert conc[(0, 1)] == pytest.approx(0.7, abs=0.01)

    def test_deterministic(self):
        model = two_qoi_model(0.7)
        assert np.array_equal(sample_joint(model, 100, 9), sample_joint(model, 100, 9))

    def test_monotone_transform_invariance(self):
        # replacing a marginal by a strictly increasing reparametrization leaves
        # concordance and rank correlation untouched under the same seed
        model_a = two_qoi_model(0.7)
        lognorm = FittedDistribution("lognormal", (0.0, 1.0), Support(0.0, math.inf))
        model_b = build(
            [X_MARG, lognorm],
            [ConcordanceJudgement(("exac", "fev1"), 0.7)],
            qoi_ids=("exac", "fev1"),
        )
        sa = sample_joint(model_a, 50_000, seed=5)
        sb = sample_joint(model_b, 50_000, seed=5)
        ca = empirical_concordance(sa, [m.median for m in model_a.marginals])
        cb = empirical_concordance(sb, [m.median for m in model_b.marginals])
        assert ca[(0, 1)] == cb[(0, 1)]
        ra = stats.spearmanr(sa[:, 0], sa[:, 1]).statistic
        rb = stats.spearmanr(sb[:, 0], sb[:, 1]).statistic
        assert ra == pytest.approx(rb, abs=1e-12)


class TestExplore:
    def test_tighter_at_higher_concordance(self):
        model = two_qoi_model(0.7)
        at_07 = explore(model, 0.7)
        at_08 = explore(model, 0.8)
        key = ("exac", "fev1")
        assert (
            at_08.pair_summaries[key]["empirical_rank_correlation"]
            > at_07.pair_summaries[key]["empirical_rank_correlation"]
        )

    def test_half_gives_near_zero_correlation(self):
        res = explore(two_qoi_model(0.7), 0.5)
        assert res.pair_summaries[("exac", "fev1")]["empirical_rank_correlation"] == pytest.approx(
            0.0, abs=0.03
        )

    def test_deterministic_preview(self):
        model = two_qoi_model(0.7)
        r1 = explore(model, 0.8, seed=123)
        r2 = explore(model, 0.8, seed=123)
        assert np.array_equal(r1.samples, r2.samples)

    def test_preview_does_not_mutate_model(self):
        model = two_qoi_model(0.7)
        explore(model, 0.9)
        assert model.judgements[0].probability == 0.7

    def test_default_sample_size(self):
        res = explore(two_qoi_model(0.7), 0.6)
        assert res.samples.shape == (10_000, 2)
