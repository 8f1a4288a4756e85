"""Workshop judgement structures: quantities of interest, per-expert and group
judgements, their conversion to probability constraints, and the reveal step.

The stage machine (individual -> discussion -> group) lives here as data;
enforcement against an event log is done by the session module.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .distributions import FittedDistribution, MixtureDistribution, Support, linear_pool
from .errors import ValidationError
from .fitting import FitResult, ProbabilityConstraint, fit, fit_best, validate_constraints

GROUP_EXPERT = "RIO"

SCALES = ("raw", "percent-reduction", "difference")

#: evaluation grid for reveal overlays: 401 points over the union of plausible
#: ranges, extended by 10% of its width (5% each side)
REVEAL_GRID_POINTS = 401
REVEAL_GRID_EXTENSION = 0.10


class Stage(str, enum.Enum):
    INDIVIDUAL = "individual"
    DISCUSSION = "discussion"
    GROUP = "group"


@dataclass(frozen=True)
class QuantityOfInterest:
    """An uncertain scalar whose distribution is elicited."""

    id: str
    label: str
    scale: str
    support: Support
    definition: str = ""

    def __post_init__(self):
        if self.scale not in SCALES:
            raise ValidationError(f"unknown scale {self.scale!r}; expected one of {SCALES}")
        if self.scale == "percent-reduction" and self.support.upper > 1.0:
            raise ValidationError(
                "percent-reduction quantities cannot exceed 1 (100% reduction)"
            )

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "label": self.label,
            "scale": self.scale,
            "support": self.support.to_dict(),
            "definition": self.definition,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "QuantityOfInterest":
        return cls(
            id=d["id"],
            label=d["label"],
            scale=d["scale"],
            support=Support.from_dict(d["support"]),
            definition=d.get("definition", ""),
        )


@dataclass(frozen=True)
class JudgementSet:
    """One expert's (or RIO's) elicited constraints for a quantity.

    The plausible range is not itself a probability statement; it bounds the
    fitting support for bounded families and validates the other judgements.
    """

    expert: str
    qoi: str
    plausible_range: tuple[float, float]
    median: float | None = None
    tertiles: tuple[float, float] | None = None
    quartiles: tuple[float, float] | None = None
    probability_statements: tuple[ProbabilityConstraint, ...] | None = None

    def __post_init__(self):
        lo, hi = (float(v) for v in self.plausible_range)
        object.__setattr__(self, "plausible_range", (lo, hi))
        if not lo < hi:
            raise ValidationError(f"plausible range must be increasing, got ({lo}, {hi})")
        if self.tertiles is not None and self.quartiles is not None:
            raise ValidationError("at most one of tertiles/quartiles may be given")
        if self.median is not None and not lo < self.median < hi:
            raise ValidationError(
                f"median {self.median} must lie strictly inside the plausible range ({lo}, {hi})"
            )
        for name in ("tertiles", "quartiles"):
            pair = getattr(self, name)
            if pair is None:
                continue
            a, b = (float(v) for v in pair)
            object.__setattr__(self, name, (a, b))
            if self.median is None:
                raise ValidationError(f"{name} require a median")
            if not (lo < a < self.median < b < hi):
                raise ValidationError(
                    f"{name} ({a}, {b}) must lie strictly inside the plausible range "
                    f"and straddle the median {self.median}"
                )
        if self.probability_statements is not None:
            object.__setattr__(
                self,
                "probability_statements",
                validate_constraints(self.probability_statements),
            )

    def to_dict(self) -> dict:
        return {
            "expert": self.expert,
            "qoi": self.qoi,
            "plausible_range": list(self.plausible_range),
            "median": self.median,
            "tertiles": list(self.tertiles) if self.tertiles else None,
            "quartiles": list(self.quartiles) if self.quartiles else None,
            "probability_statements": (
                [c.to_dict() for c in self.probability_statements]
                if self.probability_statements
                else None
            ),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "JudgementSet":
        ps = d.get("probability_statements")
        return cls(
            expert=d["expert"],
            qoi=d["qoi"],
            plausible_range=tuple(float(v) for v in d["plausible_range"]),
            median=None if d.get("median") is None else float(d["median"]),
            tertiles=None if not d.get("tertiles") else tuple(float(v) for v in d["tertiles"]),
            quartiles=None if not d.get("quartiles") else tuple(float(v) for v in d["quartiles"]),
            probability_statements=(
                tuple(ProbabilityConstraint(float(c["value"]), float(c["cum_prob"])) for c in ps)
                if ps
                else None
            ),
        )


def to_constraints(j: JudgementSet) -> tuple[ProbabilityConstraint, ...]:
    """Map a judgement set to cumulative-probability constraints.

    Median maps to 0.5, tertiles to 1/3 and 2/3, quartiles to 1/4 and 3/4;
    explicit probability statements pass through unchanged.
    """
    cs: list[tuple[float, float]] = []
    if j.probability_statements:
        cs.extend((c.value, c.cum_prob) for c in j.probability_statements)
    if j.median is not None:
        cs.append((j.median, 0.5))
    if j.tertiles is not None:
        cs.append((j.tertiles[0], 1.0 / 3.0))
        cs.append((j.tertiles[1], 2.0 / 3.0))
    if j.quartiles is not None:
        cs.append((j.quartiles[0], 0.25))
        cs.append((j.quartiles[1], 0.75))
    if len(cs) < 2:
        raise ValidationError(
            "judgement needs a median plus tertiles/quartiles, or probability statements"
        )
    return validate_constraints(cs)


def effective_support(qoi: QuantityOfInterest, plausible_range: tuple[float, float]) -> Support:
    """Fitting support: plausible-range bounds where the QoI support is finite."""
    lo, hi = plausible_range
    if not (qoi.support.lower <= lo and hi <= qoi.support.upper):
        raise ValidationError(
            f"plausible range ({lo}, {hi}) must lie within the declared support "
            f"[{qoi.support.lower}, {qoi.support.upper}] of {qoi.id!r}"
        )
    return Support(
        lo if math.isfinite(qoi.support.lower) else -math.inf,
        hi if math.isfinite(qoi.support.upper) else math.inf,
    )


def candidate_fits(qoi: QuantityOfInterest, judgement: JudgementSet) -> list[FitResult]:
    """All family fits for a judgement, ranked by residual."""
    support = effective_support(qoi, judgement.plausible_range)
    return fit_best(support, to_constraints(judgement))


def fit_judgement(
    qoi: QuantityOfInterest, judgement: JudgementSet, family: str | None = None
) -> FitResult:
    """Best fit for a judgement, or the fit for an explicitly chosen family."""
    if family is None:
        return candidate_fits(qoi, judgement)[0]
    support = effective_support(qoi, judgement.plausible_range)
    return fit(family, support, to_constraints(judgement))


@dataclass
class ElicitationRecord:
    """Derived elicitation state for one quantity of interest."""

    qoi: QuantityOfInterest
    individual: list[tuple[JudgementSet, FitResult]] = field(default_factory=list)
    group: JudgementSet | None = None
    consensus: FitResult | None = None
    consensus_family: str | None = None
    stage: Stage = Stage.INDIVIDUAL
    notes: list[str] = field(default_factory=list)

    @property
    def pool(self) -> MixtureDistribution | None:
        if not self.individual:
            return None
        return linear_pool([fr.distribution for _, fr in self.individual])

    def to_dict(self) -> dict:
        return {
            "qoi": self.qoi.to_dict(),
            "stage": self.stage.value,
            "individual": [
                {"judgement": j.to_dict(), "fit": fr.to_dict()} for j, fr in self.individual
            ],
            "group": self.group.to_dict() if self.group else None,
            "consensus": self.consensus.to_dict() if self.consensus else None,
            "consensus_family": self.consensus_family,
            "notes": list(self.notes),
        }


def reveal_summary(record: ElicitationRecord) -> dict:
    """Overlay-ready density/CDF evaluations for the discussion stage.

    Returns per-expert and pooled curves on a common 401-point grid covering
    the union of the individual plausible ranges, extended by 10%.
    """
    if not record.individual:
        raise ValidationError("reveal requires at least one individual fit")
    lo = min(j.plausible_range[0] for j, _ in record.individual)
    hi = max(j.plausible_range[1] for j, _ in record.individual)
    pad = 0.5 * REVEAL_GRID_EXTENSION * (hi - lo)
    grid = np.linspace(lo - pad, hi + pad, REVEAL_GRID_POINTS)
    experts = {}
    for j, fr in record.individual:
        experts[j.expert] = {
            "pdf": fr.distribution.pdf(grid).tolist(),
            "cdf": fr.distribution.cdf(grid).tolist(),
            "median": fr.distribution.median,
        }
    pool = record.pool
    return {
        "qoi": record.qoi.id,
        "grid": grid.tolist(),
        "experts": experts,
        "pool": {"pdf": pool.pdf(grid).tolist(), "cdf": pool.cdf(grid).tolist()},
    }
