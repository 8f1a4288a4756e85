"""Acceptance suite: one test per headline criterion, each printing a
PASS/FAIL line (run with ``pytest tests/test_acceptance.py -v -s``).

Tolerances are pinned here exactly as stated; nothing is deferred to later
calibration.  The published 4% / 41% headline PoS values are intentionally
not asserted anywhere: the inputs behind them (the FEV1 consensus curve, the
numeric conditional medians, placebo rate and dispersion) were released only
graphically, so the benchmark-arithmetic criterion checks the multiplicative
ledger and the rule-relaxation direction instead.
"""

import contextlib
import json
import math
import subprocess
import sys
import time

import numpy as np
import pytest
from scipy import integrate, stats

from elicit.copula import (
    ConcordanceJudgement,
    build,
    concordance_to_rho,
    rho_to_concordance,
    sample_joint,
)
from elicit.distributions import DiscreteDistribution, FittedDistribution, Support
from elicit.errors import CorrelationError
from elicit.extension import ConditionalModel, conditional, fit_median_function, marginalize_x
from elicit.fitting import fit
from elicit.pos import (
    Benchmarks,
    ExacerbationEndpoint,
    Fev1Endpoint,
    PointMassEffects,
    SuccessRule,
    TrialDesign,
    decompose,
    simulate_program,
)
from elicit.session import derived_hash, load_session_file

from pos_oracle import brute_force_run
from test_session import create_session, drive_full_workshop, make_store


@contextlib.contextmanager
def criterion(name: str):
    try:
        yield
    except BaseException:
        print(f"[FAIL] {name}")
        raise
    print(f"[PASS] {name}")


class TestAcceptance:
    def test_c1_beta_fit_anchor(self):
        with criterion("beta-fit anchor (params, median, 90% interval, < 1 s)"):
            t0 = time.perf_counter()
            res = fit(
                "beta",
                Support(0.0, 0.70),
                [(0.25, 0.30), (0.35, 0.50), (0.40, 0.70)],
            )
            elapsed = time.perf_counter() - t0
            a, b = res.distribution.params
            assert abs(a - 2.81) <= 0.05
            assert abs(b - 3.05) <= 0.05
            d = res.distribution
            assert abs(d.median - 0.334) <= 0.003
            assert abs(d.quantile(0.05) - 0.119) <= 0.005
            assert abs(d.quantile(0.95) - 0.558) <= 0.005
            assert elapsed < 1.0, f"fit took {elapsed:.3f}s"

    def test_c2_concordance_oracle(self):
        with criterion("concordance oracle (MC +/-0.005; quadrature 1e-6; < 30 s)"):
            t0 = time.perf_counter()
            marginals = [
                FittedDistribution("normal", (0.0, 1.0)),
                FittedDistribution("normal", (0.0, 1.0)),
            ]
            for i, c in enumerate((0.5, 0.6, 0.7, 0.8, 0.9)):
                model = build(
                    marginals,
                    [ConcordanceJudgement(("a", "b"), c)],
                    qoi_ids=("a", "b"),
                )
                s = sample_joint(model, 1_000_000, seed=1000 + i)
                above = s > 0.0
                emp = float(np.mean(above[:, 0] == above[:, 1]))
                assert abs(emp - c) <= 0.005, f"c={c}: empirical {emp}"
                # quadrant probability by 2-D quadrature vs the arcsine formula
                rho = concordance_to_rho(c)
                det = 1 - rho**2

                def dens(y, x, det=det, rho=rho):
                    q = (x * x - 2 * rho * x * y + y * y) / det
                    return math.exp(-q / 2) / (2 * math.pi * math.sqrt(det))

                quad, _ = integrate.dblquad(dens, 0, 8.5, 0, 8.5, epsabs=1e-9)
                analytic = 0.25 + math.asin(rho) / (2 * math.pi)
                assert abs(quad - analytic) <= 1e-6
                # concordance = both-above + both-below = twice the quadrant
                assert abs(rho_to_concordance(rho) - 2 * analytic) <= 1e-12
            elapsed = time.perf_counter() - t0
            assert elapsed < 30.0, f"took {elapsed:.1f}s"

    def test_c3_extension_oracle(self):
        with criterion("extension oracle (sup-distance < 0.003; knot medians exact)"):
            anchor = FittedDistribution(
                "lognormal", (math.log(0.33), 0.45), Support(0.0, math.inf)
            )
            points = (0.50, 0.60, 0.65, 0.70, 0.75)
            factors = (0.55, 0.82, 1.0, 1.18, 1.35)
            knots = [(y, anchor.median * f) for y, f in zip(points, factors)]
            fn = fit_median_function(knots, transform="log")
            y_discrete = DiscreteDistribution(
                atoms=points, probs=(0.1, 0.2, 0.4, 0.2, 0.1)
            )
            model = ConditionalModel(
                y_marginal=y_discrete,
                anchor=anchor,
                anchor_y=0.65,
                median_fn=fn,
                spread_rule="constant-on-transformed-scale",
            )
            # conditional medians reproduce the elicited medians at every knot
            for y, m in knots:
                got = conditional(model, y).median
                assert math.isclose(got, m, rel_tol=1e-8, abs_tol=1e-12), (y, got, m)
            # Monte Carlo marginal vs the exact five-component mixture: under the
            # log transform each conditional is the anchor scaled by m(y)/m(0.65)
            n = 1_000_000
            res = marginalize_x(model, n=n, seed=424242)
            grid = np.linspace(0.01, 1.6, 2001)
            exact = np.zeros_like(grid)
            for (y, m), p in zip(knots, y_discrete.probs):
                exact += p * anchor.cdf(grid / (m / anchor.median))
            emp = np.searchsorted(np.sort(res.samples), grid, side="right") / n
            sup = float(np.max(np.abs(emp - exact)))
            assert sup < 0.003, f"sup-distance {sup}"

    def test_c4_pd_rejection(self):
        with criterion("positive-definiteness gate (reject 0.99/0.99/0.01, accept 0.5s)"):
            marginals = [
                FittedDistribution("normal", (0.0, 1.0)),
                FittedDistribution("normal", (0.0, 1.0)),
                FittedDistribution("normal", (0.0, 1.0)),
            ]
            with pytest.raises(CorrelationError) as excinfo:
                build(
                    marginals,
                    [
                        ConcordanceJudgement(("a", "b"), 0.99),
                        ConcordanceJudgement(("a", "c"), 0.99),
                        ConcordanceJudgement(("b", "c"), 0.01),
                    ],
                    qoi_ids=("a", "b", "c"),
                )
            diag = excinfo.value.diagnosis
            assert diag is not None and diag.shortfall > 0
            assert ("b", "c") in diag.feasible
            ok = build(
                marginals,
                [
                    ConcordanceJudgement(("a", "b"), 0.5),
                    ConcordanceJudgement(("a", "c"), 0.5),
                    ConcordanceJudgement(("b", "c"), 0.5),
                ],
                qoi_ids=("a", "b", "c"),
            )
            assert np.allclose(ok.matrix, np.eye(3))

    def test_c5_null_calibration(self):
        with criterion("null calibration (per-test 0.025 +/- 0.0005; oracle within 3 SE)"):
            n_sims = 1_000_000
            design = TrialDesign(
                doses=("dose_150", "dose_450"),
                n_per_arm=100_000,
                exacerbation=ExacerbationEndpoint(1.0, 1.2, 0.8),
                fev1=Fev1Endpoint(residual_sd_ml=450.0),
                alpha=0.025,
            )
            rule = SuccessRule(tpp_exacerbation=None, tpp_fev1=None)
            res = simulate_program(
                PointMassEffects(0.0, 0.0),
                design,
                rule,
                Benchmarks(approval_given_p3=0.94),
                n_sims,
                seed=20250810,
            )
            for key, freq in res.per_test_rejection.items():
                assert abs(freq - 0.025) <= 0.0005, f"{key}: {freq}"
            oracle = brute_force_run(
                0.0,
                0.0,
                n_per_arm=100_000,
                follow_up_years=1.0,
                placebo_annual_rate=1.2,
                dispersion=0.8,
                residual_sd_ml=450.0,
                alpha=0.025,
                n_doses=2,
                n_trials=2,
                n_sims=n_sims,
                seed=887,
            )
            p_mine, p_oracle = res.p_trial_success, oracle["p_trial_success"]
            combined_se = math.sqrt(
                p_mine * (1 - p_mine) / n_sims + p_oracle * (1 - p_oracle) / n_sims
            )
            assert abs(p_mine - p_oracle) <= 3 * combined_se + 1e-12
            # analytic ceiling: two trials, within each at most a union of 2 doses
            assert p_mine <= (2 * 0.025) ** 2 + 3 * res.se_trial_success

    def test_c6_benchmark_arithmetic(self):
        with criterion("benchmark arithmetic (ledger exact; relaxed rule strictly higher)"):
            x = FittedDistribution("beta", (2.81, 3.05), Support(0.0, 0.70))
            z = FittedDistribution("normal", (90.0, 60.0))
            joint = build(
                [x, z],
                [ConcordanceJudgement(("exac", "fev1"), 0.7)],
                qoi_ids=("exac", "fev1"),
            )
            design = TrialDesign(
                doses=("dose_150", "dose_450"),
                n_per_arm=400,
                exacerbation=ExacerbationEndpoint(1.0, 1.2, 0.8),
                fev1=Fev1Endpoint(residual_sd_ml=450.0),
            )
            benchmarks = Benchmarks(
                approval_given_p3=0.94,
                safety_multiplier=0.97,
                risk_adjustment=0.95,
                p2_success=0.24,
                p3_given_p2=0.60,
            )
            strict = SuccessRule()  # both endpoints, TPP 0.40 / 120 mL
            res = simulate_program(joint, design, strict, benchmarks, 100_000, seed=7)
            ledger = decompose(res)
            assert abs(ledger.product - res.pos) <= 1e-12
            factors = dict(ledger.factors)
            manual = (
                factors["trial_significance"]
                * factors["tpp_given_significance"]
                * 0.94
                * 0.97
                * 0.95
            )
            assert abs(manual - res.pos) <= 1e-12
            assert abs(factors["approval_given_phase3"] - 0.94) == 0.0
            # exacerbation-only TPP 0.30: strictly higher PoS under the same seed
            relaxed = SuccessRule(
                endpoints=("exacerbation",), tpp_exacerbation=0.30, tpp_fev1=None
            )
            res_relaxed = simulate_program(joint, design, relaxed, benchmarks, 100_000, seed=7)
            assert res_relaxed.pos > res.pos

    def test_c7_replay_determinism(self, tmp_path):
        with criterion("replay determinism (identical derived-state hash on two runs)"):
            store = make_store(tmp_path)
            sid = create_session(store).id
            drive_full_workshop(store, sid, marginalize_n=20_000)
            path = store._path(sid)
            h_first = derived_hash(load_session_file(path))
            script = (
                "from elicit.session import derived_hash, load_session_file;"
                f"print(derived_hash(load_session_file({str(path)!r})))"
            )
            h_second = subprocess.run(
                [sys.executable, "-c", script],
                capture_output=True,
                text=True,
                check=True,
            ).stdout.strip()
            assert h_first == h_second
            # and a fresh in-process replay agrees as well
            assert derived_hash(load_session_file(path)) == h_first
