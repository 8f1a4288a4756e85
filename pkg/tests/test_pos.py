"""Tests for the probability-of-success simulation engine."""

import math

import numpy as np
import pytest

from elicit.copula import ConcordanceJudgement, build
from elicit.distributions import FittedDistribution, Support
from elicit.errors import ConfigurationError, SimulationError
from elicit.pos import (
    Benchmarks,
    ExacerbationEndpoint,
    Fev1Endpoint,
    IndependentEffects,
    PointMassEffects,
    SuccessRule,
    TrialDesign,
    _nb_arm_totals,
    decompose,
    sensitivity,
    simulate_program,
)

from pos_oracle import brute_force_run


def make_design(n_per_arm=400, doses=("dose_150", "dose_450"), alpha=0.025):
    return TrialDesign(
        doses=doses,
        n_per_arm=n_per_arm,
        exacerbation=ExacerbationEndpoint(
            follow_up_years=1.0, placebo_annual_rate=1.2, dispersion=0.8
        ),
        fev1=Fev1Endpoint(residual_sd_ml=450.0),
        alpha=alpha,
    )


PAPER_BENCHMARKS = Benchmarks(
    approval_given_p3=0.94,
    safety_multiplier=0.97,
    risk_adjustment=0.95,
    p2_success=0.24,
    p3_given_p2=0.60,
)


def elicited_joint(c=0.7):
    x = FittedDistribution("beta", (2.81, 3.05), Support(0.0, 0.70))
    z = FittedDistribution("normal", (90.0, 60.0))
    return build(
        [x, z],
        [ConcordanceJudgement(("exac", "fev1"), c)],
        qoi_ids=("exac", "fev1"),
    )


class TestConfigValidation:
    def test_required_historical_inputs(self):
        with pytest.raises(TypeError):
            ExacerbationEndpoint(follow_up_years=1.0)  # rate/dispersion have no defaults
        with pytest.raises(ConfigurationError):
            ExacerbationEndpoint(1.0, -0.5, 0.8)

    def test_rule_validation(self):
        with pytest.raises(ConfigurationError):
            SuccessRule(endpoints=("exacerbation",), tpp_fev1=120.0)
        with pytest.raises(ConfigurationError):
            SuccessRule(endpoints=())
        with pytest.raises(ConfigurationError):
            SuccessRule(tpp_exacerbation=1.2)

    def test_design_validation(self):
        with pytest.raises(ConfigurationError):
            make_design(n_per_arm=1)
        with pytest.raises(ConfigurationError):
            make_design(doses=())

    def test_benchmark_bounds(self):
        with pytest.raises(ConfigurationError):
            Benchmarks(approval_given_p3=1.3)


class TestOverwhelmingPower:
    def test_point_mass_strong_effects(self):
        design = make_design(n_per_arm=10_000, doses=("dose",))
        rule = SuccessRule()
        res = simulate_program(
            PointMassEffects(0.9, 500.0), design, rule, PAPER_BENCHMARKS, 20_000, seed=5
        )
        assert res.p_trial_success > 0.999
        assert res.pos == pytest.approx(0.94 * 0.97 * 0.95, rel=1e-3)


class TestNullCalibration:
    def test_per_test_alpha_and_oracle_agreement(self):
        n_sims = 200_000
        design = make_design(n_per_arm=2_000)
        rule = SuccessRule(tpp_exacerbation=None, tpp_fev1=None)
        res = simulate_program(
            PointMassEffects(0.0, 0.0), design, rule, PAPER_BENCHMARKS, n_sims, seed=11
        )
        se = math.sqrt(0.025 * 0.975 / n_sims)
        for key, freq in res.per_test_rejection.items():
            assert freq == pytest.approx(0.025, abs=4 * se), key
        # analytic bound: per trial at most 2 doses could qualify
        alpha = 0.025
        assert res.p_trial_success <= (2 * alpha) ** 2 + 3 * res.se_trial_success
        oracle = brute_force_run(
            0.0,
            0.0,
            n_per_arm=2_000,
            follow_up_years=1.0,
            placebo_annual_rate=1.2,
            dispersion=0.8,
            residual_sd_ml=450.0,
            alpha=0.025,
            n_doses=2,
            n_trials=2,
            n_sims=n_sims,
            seed=77,
        )
        combined_se = math.sqrt(
            res.se_trial_success**2
            + oracle["p_trial_success"] * (1 - oracle["p_trial_success"]) / n_sims
        )
        assert abs(res.p_trial_success - oracle["p_trial_success"]) <= 3 * combined_se + 1e-9


class TestPoweredAgreementWithOracle:
    def test_moderate_effect_program_success(self):
        n_sims = 100_000
        design = make_design(n_per_arm=600, doses=("d1",))
        rule = SuccessRule(tpp_exacerbation=0.40, tpp_fev1=120.0)
        res = simulate_program(
            PointMassEffects(0.45, 130.0), design, rule, PAPER_BENCHMARKS, n_sims, seed=3
        )
        oracle = brute_force_run(
            0.45,
            130.0,
            n_per_arm=600,
            follow_up_years=1.0,
            placebo_annual_rate=1.2,
            dispersion=0.8,
            residual_sd_ml=450.0,
            alpha=0.025,
            n_doses=1,
            n_trials=2,
            tpp_exacerbation=0.40,
            tpp_fev1=120.0,
            n_sims=n_sims,
            seed=19,
        )
        for key in ("p_trial_success", "p_tpp_met"):
            mine, theirs = getattr(res, key), oracle[key]
            combined_se = math.sqrt(
                mine * (1 - mine) / n_sims + theirs * (1 - theirs) / n_sims
            )
            assert abs(mine - theirs) <= 3 * combined_se + 1e-9, key


class TestRejectionHandling:
    def test_rejected_samples_counted(self):
        class Spiky:
            def sample(self, n, seed):
                out = np.tile([0.3, 100.0], (n, 1))
                return out

        res = simulate_program(
            Spiky(), make_design(n_per_arm=50), SuccessRule(), PAPER_BENCHMARKS, 5_000, seed=1
        )
        assert res.n_rejected == 0

    def test_excess_rejection_fails_run(self):
        class Bad:
            def sample(self, n, seed):
                out = np.tile([0.5, 50.0], (n, 1))
                out[:: 100, 0] = 1.5  # 1% of draws out of domain
                return out

        with pytest.raises(SimulationError):
            simulate_program(
                Bad(), make_design(n_per_arm=50), SuccessRule(), PAPER_BENCHMARKS, 10_000, seed=1
            )


class TestDeterminismAndDecomposition:
    def test_replay_identical(self):
        joint = elicited_joint()
        design = make_design(n_per_arm=150)
        r1 = simulate_program(joint, design, SuccessRule(), PAPER_BENCHMARKS, 30_000, seed=21)
        r2 = simulate_program(joint, design, SuccessRule(), PAPER_BENCHMARKS, 30_000, seed=21)
        assert r1.p_trial_success == r2.p_trial_success
        assert r1.p_tpp_met == r2.p_tpp_met
        assert r1.pos == r2.pos

    def test_ledger_product_identity(self):
        joint = elicited_joint()
        res = simulate_program(
            joint, make_design(n_per_arm=300), SuccessRule(), PAPER_BENCHMARKS, 50_000, seed=9
        )
        ledger = decompose(res)
        assert ledger.product == pytest.approx(res.pos, abs=1e-12)
        assert res.pos <= res.p_trial_success + 1e-12
        labels = [k for k, _ in ledger.factors]
        assert labels == [
            "trial_significance",
            "tpp_given_significance",
            "approval_given_phase3",
            "safety_multiplier",
            "risk_adjustment",
        ]

    def test_all_unit_factors_reduce_to_trial_frequency(self):
        joint = elicited_joint()
        plain = Benchmarks(approval_given_p3=1.0)
        rule = SuccessRule(tpp_exacerbation=None, tpp_fev1=None)
        res = simulate_program(joint, make_design(n_per_arm=300), rule, plain, 20_000, seed=2)
        assert res.pos == pytest.approx(res.p_trial_success, abs=1e-15)
        assert res.p_tpp_met == res.p_trial_success

    def test_relaxed_rule_dominates_under_crn(self):
        joint = elicited_joint()
        design = make_design(n_per_arm=400)
        strict = SuccessRule()
        relaxed = SuccessRule(endpoints=("exacerbation",), tpp_exacerbation=0.30, tpp_fev1=None)
        r_strict = simulate_program(joint, design, strict, PAPER_BENCHMARKS, 60_000, seed=13)
        r_relaxed = simulate_program(joint, design, relaxed, PAPER_BENCHMARKS, 60_000, seed=13)
        assert r_relaxed.pos > r_strict.pos


class TestSensitivity:
    def test_tpp_relaxation_monotone(self):
        joint = elicited_joint()
        rows = sensitivity(
            joint,
            make_design(n_per_arm=300),
            SuccessRule(),
            PAPER_BENCHMARKS,
            {"tpp_exacerbation": [0.40, 0.30]},
            n_sims=30_000,
            seed=4,
        )
        assert rows[1].result.pos >= rows[0].result.pos

    def test_alpha_monotone(self):
        joint = elicited_joint()
        rows = sensitivity(
            joint,
            make_design(n_per_arm=300),
            SuccessRule(),
            PAPER_BENCHMARKS,
            {"alpha": [0.025, 0.05]},
            n_sims=30_000,
            seed=4,
        )
        assert rows[1].result.p_trial_success >= rows[0].result.p_trial_success

    def test_arm_size_power_monotone(self):
        joint = PointMassEffects(0.45, 150.0)
        rows = sensitivity(
            joint,
            make_design(n_per_arm=200, doses=("d",)),
            SuccessRule(tpp_exacerbation=None, tpp_fev1=None),
            PAPER_BENCHMARKS,
            {"arm_size": [200, 800]},
            n_sims=40_000,
            seed=6,
        )
        small, large = rows[0].result, rows[1].result
        tol = 3 * math.sqrt(small.se_trial_success**2 + large.se_trial_success**2)
        assert large.p_trial_success >= small.p_trial_success - tol

    def test_concordance_knob_and_unknown_knob(self):
        joint = elicited_joint()
        rows = sensitivity(
            joint,
            make_design(n_per_arm=200),
            SuccessRule(),
            PAPER_BENCHMARKS,
            {"concordance": [0.5, 0.7, 0.8]},
            n_sims=10_000,
            seed=8,
        )
        assert len(rows) == 3
        with pytest.raises(ConfigurationError):
            sensitivity(
                joint,
                make_design(),
                SuccessRule(),
                PAPER_BENCHMARKS,
                {"bogus": [1]},
                n_sims=100,
                seed=0,
            )


class TestEstimatorSanity:
    def test_rate_ratio_median_unbiased_at_large_arms(self):
        rng = np.random.default_rng(123)
        n_arm, mu, kappa, true_red = 10_000, 1.2, 0.8, 0.3
        reps = 20_000
        s0 = _nb_arm_totals(rng, n_arm, np.full(reps, mu), kappa)
        s1 = _nb_arm_totals(rng, n_arm, np.full(reps, mu * (1 - true_red)), kappa)
        ratio = (s1 / n_arm) / (s0 / n_arm)
        assert np.median(ratio) == pytest.approx(1 - true_red, rel=0.01)

    def test_independent_effects_source(self):
        src = IndependentEffects(
            exacerbation=FittedDistribution("beta", (2.0, 3.0), Support(0.0, 0.7)),
            fev1=FittedDistribution("normal", (100.0, 50.0)),
        )
        s = src.sample(10_000, seed=3)
        assert s.shape == (10_000, 2)
        assert abs(np.corrcoef(s.T)[0, 1]) < 0.05


class TestPerDoseEffectRatios:
    def test_zero_ratio_dose_behaves_like_null(self):
        design = TrialDesign(
            doses=("active", "inert"),
            n_per_arm=5_000,
            exacerbation=ExacerbationEndpoint(1.0, 1.2, 0.8),
            fev1=Fev1Endpoint(residual_sd_ml=450.0),
            dose_effect_ratios=(1.0, 0.0),
        )
        rule = SuccessRule(tpp_exacerbation=None, tpp_fev1=None)
        res = simulate_program(
            PointMassEffects(0.5, 200.0), design, rule, PAPER_BENCHMARKS, 50_000, seed=31
        )
        # the inert dose rejects at roughly the nominal level on both endpoints
        for ep in ("exacerbation", "fev1"):
            freq = res.per_test_rejection[f"trial_1.inert.{ep}"]
            assert freq == pytest.approx(0.025, abs=0.005), ep
        assert res.per_test_rejection["trial_1.active.exacerbation"] > 0.9

    def test_ratio_length_validated(self):
        with pytest.raises(ConfigurationError):
            TrialDesign(
                doses=("a", "b"),
                n_per_arm=100,
                exacerbation=ExacerbationEndpoint(1.0, 1.2, 0.8),
                fev1=Fev1Endpoint(residual_sd_ml=450.0),
                dose_effect_ratios=(1.0,),
            )
