"""Probability-of-success simulation for a two-trial confirmatory program.

Each simulation draws true effects (exacerbation relative reduction, FEV1
difference) from the elicited joint distribution, simulates both pivotal
trials on both endpoints, applies the significance and TPP rule, and combines
the resulting frequency with benchmark approval/safety factors and the
program risk adjustment.

Exacerbation arms are analysed on per-patient negative-binomial counts with a
gamma frailty; the arm total is drawn in one step as the exact distribution of
the per-patient sum (a negative binomial itself), and the Wald variance of the
log rate uses the configured dispersion with the estimated rate plugged in.
FEV1 arms use a known-variance normal test, since the residual variability is
treated as established from historical data.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .copula import CopulaModel
from .errors import ConfigurationError, SimulationError, ValidationError

ENDPOINTS = ("exacerbation", "fev1")
SENSITIVITY_KNOBS = ("tpp_exacerbation", "tpp_fev1", "alpha", "arm_size", "concordance")

_BATCH = 100_000


@dataclass(frozen=True)
class ExacerbationEndpoint:
    """Recurrent-event endpoint; placebo rate and dispersion are historical
    inputs and deliberately have no defaults."""

    follow_up_years: float
    placebo_annual_rate: float
    dispersion: float

    def __post_init__(self):
        for name in ("follow_up_years", "placebo_annual_rate", "dispersion"):
            if not getattr(self, name) > 0:
                raise ConfigurationError(f"{name} must be strictly positive")


@dataclass(frozen=True)
class Fev1Endpoint:
    residual_sd_ml: float

    def __post_init__(self):
        if not self.residual_sd_ml > 0:
            raise ConfigurationError("residual_sd_ml must be strictly positive")


@dataclass(frozen=True)
class TrialDesign:
    """Design shared by the pivotal trials: placebo plus one or more doses.

    All doses share the sampled true effect by default, matching per-drug
    elicitation; ``dose_effect_ratios`` optionally scales each dose's effect
    on the analysis scale (log rate ratio, FEV1 difference).
    """

    doses: tuple[str, ...]
    n_per_arm: int
    exacerbation: ExacerbationEndpoint
    fev1: Fev1Endpoint
    alpha: float = 0.025
    n_trials: int = 2
    dose_effect_ratios: tuple[float, ...] | None = None

    def __post_init__(self):
        object.__setattr__(self, "doses", tuple(self.doses))
        if not self.doses:
            raise ConfigurationError("at least one dose arm is required")
        if len(set(self.doses)) != len(self.doses):
            raise ConfigurationError("dose labels must be unique")
        if self.n_per_arm < 2:
            raise ConfigurationError("per-arm size must be at least 2")
        if not 0 < self.alpha < 0.5:
            raise ConfigurationError("alpha must lie in (0, 0.5)")
        if self.n_trials < 1:
            raise ConfigurationError("at least one trial required")
        if self.dose_effect_ratios is not None:
            ratios = tuple(float(r) for r in self.dose_effect_ratios)
            object.__setattr__(self, "dose_effect_ratios", ratios)
            if len(ratios) != len(self.doses):
                raise ConfigurationError("one effect ratio per dose required")
            if any(r < 0 for r in ratios):
                raise ConfigurationError("dose effect ratios must be nonnegative")

    @property
    def effect_ratios(self) -> tuple[float, ...]:
        return self.dose_effect_ratios or tuple(1.0 for _ in self.doses)

    def to_dict(self) -> dict:
        return {
            "schema": "trial-design/v1",
            "doses": list(self.doses),
            "n_per_arm": self.n_per_arm,
            "exacerbation": dataclasses.asdict(self.exacerbation),
            "fev1": dataclasses.asdict(self.fev1),
            "alpha": self.alpha,
            "n_trials": self.n_trials,
            "dose_effect_ratios": (
                list(self.dose_effect_ratios) if self.dose_effect_ratios else None
            ),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TrialDesign":
        ratios = d.get("dose_effect_ratios")
        return cls(
            doses=tuple(d["doses"]),
            n_per_arm=int(d["n_per_arm"]),
            exacerbation=ExacerbationEndpoint(**{k: float(v) for k, v in d["exacerbation"].items()}),
            fev1=Fev1Endpoint(residual_sd_ml=float(d["fev1"]["residual_sd_ml"])),
            alpha=float(d.get("alpha", 0.025)),
            n_trials=int(d.get("n_trials", 2)),
            dose_effect_ratios=None if ratios is None else tuple(float(r) for r in ratios),
        )


@dataclass(frozen=True)
class SuccessRule:
    """Program success: significance for at least one dose on every required
    endpoint in every trial, plus TPP point-estimate targets for the winning
    dose of each trial.

    The winning dose is the significant dose with the best exacerbation
    estimate (best FEV1 estimate if exacerbations are not required); this
    convention is a documented default, not a regulatory standard.
    """

    endpoints: tuple[str, ...] = ENDPOINTS
    tpp_exacerbation: float | None = 0.40
    tpp_fev1: float | None = 120.0
    alpha: float | None = None  # overrides the design alpha when set

    def __post_init__(self):
        object.__setattr__(self, "endpoints", tuple(self.endpoints))
        if not self.endpoints or any(e not in ENDPOINTS for e in self.endpoints):
            raise ConfigurationError(f"endpoints must be a nonempty subset of {ENDPOINTS}")
        if self.tpp_exacerbation is not None:
            if "exacerbation" not in self.endpoints:
                raise ConfigurationError("an exacerbation TPP needs the endpoint to be required")
            if not self.tpp_exacerbation < 1:
                raise ConfigurationError("exacerbation TPP must be below 1 (a 100% reduction)")
        if self.tpp_fev1 is not None and "fev1" not in self.endpoints:
            raise ConfigurationError("a FEV1 TPP needs the endpoint to be required")
        if self.alpha is not None and not 0 < self.alpha < 0.5:
            raise ConfigurationError("alpha must lie in (0, 0.5)")

    def effective_alpha(self, design: TrialDesign) -> float:
        return self.alpha if self.alpha is not None else design.alpha

    def to_dict(self) -> dict:
        return {
            "schema": "success-rule/v1",
            "endpoints": list(self.endpoints),
            "tpp_exacerbation": self.tpp_exacerbation,
            "tpp_fev1": self.tpp_fev1,
            "alpha": self.alpha,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SuccessRule":
        return cls(
            endpoints=tuple(d.get("endpoints", ENDPOINTS)),
            tpp_exacerbation=(
                None if d.get("tpp_exacerbation") is None else float(d["tpp_exacerbation"])
            ),
            tpp_fev1=None if d.get("tpp_fev1") is None else float(d["tpp_fev1"]),
            alpha=None if d.get("alpha") is None else float(d["alpha"]),
        )


@dataclass(frozen=True)
class Benchmarks:
    """Benchmark and risk factors multiplying the simulated trial frequency.

    p2_success and p3_given_p2 document the program's benchmark context but do
    not enter the product for a program already in its pivotal phase.
    """

    approval_given_p3: float
    safety_multiplier: float = 1.0
    risk_adjustment: float = 1.0
    p2_success: float | None = None
    p3_given_p2: float | None = None

    def __post_init__(self):
        for name in ("approval_given_p3", "safety_multiplier", "risk_adjustment"):
            v = getattr(self, name)
            if not 0 < v <= 1:
                raise ConfigurationError(f"{name} must lie in (0, 1], got {v}")
        for name in ("p2_success", "p3_given_p2"):
            v = getattr(self, name)
            if v is not None and not 0 < v <= 1:
                raise ConfigurationError(f"{name} must lie in (0, 1], got {v}")

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "Benchmarks":
        return cls(
            approval_given_p3=float(d["approval_given_p3"]),
            safety_multiplier=float(d.get("safety_multiplier", 1.0)),
            risk_adjustment=float(d.get("risk_adjustment", 1.0)),
            p2_success=None if d.get("p2_success") is None else float(d["p2_success"]),
            p3_given_p2=None if d.get("p3_given_p2") is None else float(d["p3_given_p2"]),
        )


@dataclass(frozen=True)
class PointMassEffects:
    """Degenerate effect source, handy for calibration and power checks."""

    exacerbation_reduction: float
    fev1_difference: float

    def sample(self, n: int, seed) -> np.ndarray:
        return np.tile([self.exacerbation_reduction, self.fev1_difference], (n, 1))


@dataclass(frozen=True)
class IndependentEffects:
    """Independent marginals for the two effects (a copula with rho = 0)."""

    exacerbation: object
    fev1: object

    def sample(self, n: int, seed) -> np.ndarray:
        rng = np.random.default_rng(seed)
        return np.column_stack(
            [self.exacerbation.sample(n, rng), self.fev1.sample(n, rng)]
        )


@dataclass(frozen=True)
class PosResult:
    """Decomposed probability of success with Monte Carlo uncertainty."""

    n_sims: int
    n_valid: int
    n_rejected: int
    seed: int
    p_trial_success: float
    se_trial_success: float
    p_tpp_met: float
    se_tpp_met: float
    pos: float
    benchmarks: Benchmarks
    rule: SuccessRule
    design: TrialDesign
    per_test_rejection: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "n_sims": self.n_sims,
            "n_valid": self.n_valid,
            "n_rejected": self.n_rejected,
            "seed": self.seed,
            "p_trial_success": self.p_trial_success,
            "se_trial_success": self.se_trial_success,
            "p_tpp_met": self.p_tpp_met,
            "se_tpp_met": self.se_tpp_met,
            "pos": self.pos,
            "benchmarks": self.benchmarks.to_dict(),
            "rule": self.rule.to_dict(),
            "design": self.design.to_dict(),
            "per_test_rejection": dict(self.per_test_rejection),
            "decomposition": decompose(self).to_dict(),
        }


@dataclass(frozen=True)
class Decomposition:
    """Multiplicative ledger whose product is exactly the reported PoS."""

    factors: tuple[tuple[str, float], ...]
    joint_frequency: float

    @property
    def product(self) -> float:
        out = 1.0
        for _, v in self.factors:
            out *= v
        return out

    def to_dict(self) -> dict:
        return {
            "factors": [[k, v] for k, v in self.factors],
            "joint_frequency": self.joint_frequency,
            "product": self.product,
        }

    def to_text(self) -> str:
        width = max(len(k) for k, _ in self.factors)
        lines = ["Probability-of-success decomposition"]
        for k, v in self.factors:
            lines.append(f"  {k:<{width}}  {v:.6f}")
        lines.append(f"  {'joint trial+TPP frequency':<{width}}  {self.joint_frequency:.6f}")
        lines.append(f"  {'PoS (product)':<{width}}  {self.product:.6f}")
        return "\n".join(lines)


def decompose(result: PosResult) -> Decomposition:
    """Factor the PoS into trial significance, TPP attainment given
    significance (their joint frequency is reported alongside), approval,
    safety and risk adjustment."""
    p_trial = result.p_trial_success
    cond = result.p_tpp_met / p_trial if p_trial > 0 else 1.0
    b = result.benchmarks
    return Decomposition(
        factors=(
            ("trial_significance", p_trial),
            ("tpp_given_significance", cond),
            ("approval_given_phase3", b.approval_given_p3),
            ("safety_multiplier", b.safety_multiplier),
            ("risk_adjustment", b.risk_adjustment),
        ),
        joint_frequency=result.p_tpp_met,
    )


def _nb_arm_totals(rng: np.random.Generator, n_patients: int, mu, dispersion: float):
    """Total event count of an arm: the exact law of a sum of per-patient
    gamma-frailty negative-binomial counts with per-patient mean ``mu``."""
    mu = np.asarray(mu, dtype=float)
    lam = rng.gamma(shape=n_patients / dispersion, scale=dispersion * mu)
    return rng.poisson(lam).astype(float)


def _log_rate_and_var(totals, n_patients: int, dispersion: float):
    """Log mean count per patient and its plug-in Wald variance."""
    mu_hat = np.maximum(totals, 0.5) / n_patients  # 0.5 continuity guard for zero counts
    var = (1.0 + dispersion * mu_hat) / (n_patients * mu_hat)
    return np.log(mu_hat), var, mu_hat


def simulate_program(
    joint,
    design: TrialDesign,
    rule: SuccessRule,
    benchmarks: Benchmarks,
    n_sims: int,
    seed: int,
) -> PosResult:
    """Monte Carlo estimate of program success under the given rule.

    ``joint`` is a CopulaModel or any object with ``sample(n, seed)``
    returning an (n, 2) array of (exacerbation relative reduction, FEV1
    difference in mL).  Draws are organised in fixed-size batches whose
    substreams derive from (seed, batch index), so the result is independent
    of how the batches are executed.  Sampled reductions of 100% or more are
    rejected; a rejected fraction above 0.1% aborts the run.
    """
    if n_sims < 1:
        raise ValidationError("n_sims must be at least 1")
    alpha = rule.effective_alpha(design)
    z_hi = stats.norm.ppf(1.0 - alpha)
    n_arm = design.n_per_arm
    exa = design.exacerbation
    mu_placebo = exa.placebo_annual_rate * exa.follow_up_years
    sd_mean_diff = design.fev1.residual_sd_ml * math.sqrt(2.0 / n_arm)
    doses = design.doses
    trials = design.n_trials
    need_exac = "exacerbation" in rule.endpoints
    need_fev1 = "fev1" in rule.endpoints

    n_rejected = 0
    n_valid = 0
    succ_count = 0
    joint_count = 0
    sig_counts = np.zeros((trials, len(doses), 2), dtype=np.int64)  # endpoints: exac, fev1

    n_batches = (n_sims + _BATCH - 1) // _BATCH
    done = 0
    for b in range(n_batches):
        nb = min(_BATCH, n_sims - done)
        done += nb
        ss = np.random.SeedSequence((seed, b))
        effects_seed, trials_seed = ss.spawn(2)
        effects = np.asarray(joint.sample(nb, effects_seed), dtype=float)
        if effects.shape != (nb, 2):
            raise ConfigurationError(
                f"effect source must yield an (n, 2) array, got {effects.shape}"
            )
        x_red, z_diff = effects[:, 0], effects[:, 1]
        valid = x_red < 1.0
        n_rejected += int(np.count_nonzero(~valid))
        n_valid += int(np.count_nonzero(valid))
        one_minus_x = np.where(valid, 1.0 - x_red, 1.0)
        ratios = design.effect_ratios
        # per-dose true effect on the analysis scale: rate ratio (1-x)^r, mean r*z
        mu_dose_by_ratio = {r: mu_placebo * one_minus_x**r for r in set(ratios)}

        rng = np.random.default_rng(trials_seed)
        trial_sig = np.ones(nb, dtype=bool)
        trial_tpp = np.ones(nb, dtype=bool)
        for t in range(trials):
            s0 = _nb_arm_totals(rng, n_arm, np.full(nb, mu_placebo), exa.dispersion)
            log0, v0, mu0_hat = _log_rate_and_var(s0, n_arm, exa.dispersion)
            sig_exac = np.empty((len(doses), nb), dtype=bool)
            est_red = np.empty((len(doses), nb))
            for di in range(len(doses)):
                sd_ = _nb_arm_totals(rng, n_arm, mu_dose_by_ratio[ratios[di]], exa.dispersion)
                logd, vd, mud_hat = _log_rate_and_var(sd_, n_arm, exa.dispersion)
                zstat = (logd - log0) / np.sqrt(vd + v0)
                sig_exac[di] = zstat < -z_hi
                est_red[di] = 1.0 - mud_hat / mu0_hat

            mean0 = rng.normal(0.0, design.fev1.residual_sd_ml / math.sqrt(n_arm), size=nb)
            sig_fev1 = np.empty((len(doses), nb), dtype=bool)
            est_diff = np.empty((len(doses), nb))
            for di in range(len(doses)):
                meand = rng.normal(
                    ratios[di] * z_diff, design.fev1.residual_sd_ml / math.sqrt(n_arm), size=nb
                )
                diff = meand - mean0
                sig_fev1[di] = diff / sd_mean_diff > z_hi
                est_diff[di] = diff

            sig_counts[t, :, 0] += (sig_exac & valid).sum(axis=1)
            sig_counts[t, :, 1] += (sig_fev1 & valid).sum(axis=1)

            qualifies = np.ones((len(doses), nb), dtype=bool)
            if need_exac:
                qualifies &= sig_exac
            if need_fev1:
                qualifies &= sig_fev1
            t_success = qualifies.any(axis=0)
            # winning dose: best estimate on the leading required endpoint
            score = est_red if need_exac else est_diff
            masked = np.where(qualifies, score, -np.inf)
            winner = masked.argmax(axis=0)
            cols = np.arange(nb)
            t_tpp = t_success.copy()
            if rule.tpp_exacerbation is not None:
                t_tpp &= est_red[winner, cols] >= rule.tpp_exacerbation
            if rule.tpp_fev1 is not None:
                t_tpp &= est_diff[winner, cols] >= rule.tpp_fev1
            trial_sig &= t_success
            trial_tpp &= t_tpp

        succ_count += int(np.count_nonzero(trial_sig & valid))
        joint_count += int(np.count_nonzero(trial_sig & trial_tpp & valid))

    if n_valid == 0:
        raise SimulationError("no valid simulations: every sampled reduction was >= 100%")
    rejected_fraction = n_rejected / n_sims
    if rejected_fraction > 0.001:
        raise SimulationError(
            f"{100 * rejected_fraction:.3f}% of sampled effects had reduction >= 100%; "
            "the elicited joint distribution is inconsistent with the endpoint domain"
        )

    p_trial = succ_count / n_valid
    p_joint = joint_count / n_valid
    cond = p_joint / p_trial if p_trial > 0 else 1.0
    pos = (
        p_trial
        * cond
        * benchmarks.approval_given_p3
        * benchmarks.safety_multiplier
        * benchmarks.risk_adjustment
    )
    per_test = {
        f"trial_{t + 1}.{doses[di]}.{ep}": sig_counts[t, di, k] / n_valid
        for t in range(trials)
        for di in range(len(doses))
        for k, ep in enumerate(ENDPOINTS)
    }
    return PosResult(
        n_sims=n_sims,
        n_valid=n_valid,
        n_rejected=n_rejected,
        seed=seed,
        p_trial_success=p_trial,
        se_trial_success=math.sqrt(p_trial * (1 - p_trial) / n_valid),
        p_tpp_met=p_joint,
        se_tpp_met=math.sqrt(p_joint * (1 - p_joint) / n_valid),
        pos=pos,
        benchmarks=benchmarks,
        rule=rule,
        design=design,
        per_test_rejection=per_test,
    )


@dataclass(frozen=True)
class SensitivityRow:
    knob: str
    value: float
    result: PosResult

    def to_dict(self) -> dict:
        return {
            "knob": self.knob,
            "value": self.value,
            "p_trial_success": self.result.p_trial_success,
            "p_tpp_met": self.result.p_tpp_met,
            "pos": self.result.pos,
        }


def sensitivity(
    joint,
    design: TrialDesign,
    rule: SuccessRule,
    benchmarks: Benchmarks,
    knobs: dict,
    n_sims: int,
    seed: int,
) -> list[SensitivityRow]:
    """PoS as a function of one knob at a time, under common random numbers
    (the same seed), so differences reflect the knob only."""
    from .copula import ConcordanceJudgement, build  # local to avoid cycle at import time

    rows = []
    for knob, values in knobs.items():
        if knob not in SENSITIVITY_KNOBS:
            raise ConfigurationError(f"unknown sensitivity knob {knob!r}; supported: {SENSITIVITY_KNOBS}")
        for v in values:
            j, d, r = joint, design, rule
            if knob == "tpp_exacerbation":
                r = dataclasses.replace(rule, tpp_exacerbation=float(v))
            elif knob == "tpp_fev1":
                r = dataclasses.replace(rule, tpp_fev1=float(v))
            elif knob == "alpha":
                r = dataclasses.replace(rule, alpha=float(v))
            elif knob == "arm_size":
                d = dataclasses.replace(design, n_per_arm=int(v))
            else:  # concordance
                if not isinstance(joint, CopulaModel) or joint.dimension != 2:
                    raise ConfigurationError(
                        "the concordance knob needs a two-quantity copula joint"
                    )
                pair = joint.judgements[0].pair
                j = build(
                    joint.marginals,
                    [ConcordanceJudgement(pair=pair, probability=float(v))],
                    qoi_ids=joint.qoi_ids,
                )
            rows.append(
                SensitivityRow(
                    knob=knob,
                    value=float(v),
                    result=simulate_program(j, d, r, benchmarks, n_sims, seed),
                )
            )
    return rows
