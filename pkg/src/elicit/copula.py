"""Gaussian-copula joint distributions from elicited marginals and pairwise
concordance probabilities.

The concordance probability c (both quantities on the same side of their
medians) maps to the copula correlation by rho = sin(pi * (c - 1/2)); the
correlation matrix assembled from all pairs must be strictly positive
definite or the judgements have to be revisited.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats

from .distributions import FittedDistribution
from .errors import ConfigurationError, CorrelationError, ValidationError

MAX_DIMENSION = 3
MIN_EIGENVALUE = 1e-10

#: default seed for what-if preview samples shown during a workshop
DEFAULT_PREVIEW_SEED = 104729
DEFAULT_PREVIEW_POINTS = 10_000


def concordance_to_rho(c: float) -> float:
    """Correlation implied by a concordance probability under a Gaussian copula."""
    c = float(c)
    if not 0.0 < c < 1.0:
        raise ValidationError(
            f"concordance probability must lie strictly in (0, 1), got {c}; "
            "0 or 1 would mean degenerate co/counter-monotonicity"
        )
    return math.sin(math.pi * (c - 0.5))


def rho_to_concordance(rho: float) -> float:
    """Inverse of concordance_to_rho."""
    rho = float(rho)
    if not -1.0 < rho < 1.0:
        raise ValidationError(f"correlation must lie strictly in (-1, 1), got {rho}")
    return 0.5 + math.asin(rho) / math.pi


@dataclass(frozen=True)
class ConcordanceJudgement:
    """Elicited probability that two quantities fall on the same side of
    their respective medians."""

    pair: tuple[str, str]
    probability: float

    def __post_init__(self):
        a, b = self.pair
        if a == b:
            raise ValidationError(f"concordance pair must name two distinct quantities, got {a!r}")
        object.__setattr__(self, "pair", (a, b) if a <= b else (b, a))
        object.__setattr__(self, "probability", float(self.probability))
        concordance_to_rho(self.probability)  # validates the range

    def to_dict(self) -> dict:
        return {"pair": list(self.pair), "probability": self.probability}


@dataclass(frozen=True)
class CorrelationDiagnosis:
    """Why a correlation matrix was rejected, and what would be feasible."""

    eigenvalues: tuple[float, ...]
    shortfall: float
    feasible: dict

    def to_dict(self) -> dict:
        return {
            "eigenvalues": list(self.eigenvalues),
            "shortfall": self.shortfall,
            "feasible": {
                "-".join(pair): {
                    "rho": list(iv["rho"]),
                    "concordance": list(iv["concordance"]),
                }
                for pair, iv in self.feasible.items()
            },
        }


def _feasible_intervals(ids, rho_by_pair):
    """Feasible rho interval for each pair, holding the other pairs fixed."""
    out = {}
    if len(ids) == 2:
        pair = tuple(sorted(ids))
        out[pair] = {"rho": (-1.0, 1.0), "concordance": (0.0, 1.0)}
        return out
    for pair in rho_by_pair:
        i, j = pair
        (k,) = [q for q in ids if q not in pair]
        r_ik = rho_by_pair[tuple(sorted((i, k)))]
        r_jk = rho_by_pair[tuple(sorted((j, k)))]
        centre = r_ik * r_jk
        half = math.sqrt(max((1 - r_ik**2) * (1 - r_jk**2), 0.0))
        lo, hi = max(centre - half, -1.0), min(centre + half, 1.0)
        out[pair] = {
            "rho": (lo, hi),
            "concordance": (
                rho_to_concordance(max(lo, -1 + 1e-12)),
                rho_to_concordance(min(hi, 1 - 1e-12)),
            ),
        }
    return out


@dataclass(frozen=True)
class CopulaModel:
    """Marginals plus the Gaussian-copula correlation matrix (dimension 2 or 3)."""

    marginals: tuple[FittedDistribution, ...]
    qoi_ids: tuple[str, ...]
    judgements: tuple[ConcordanceJudgement, ...]
    correlation: tuple[tuple[float, ...], ...]

    @property
    def dimension(self) -> int:
        return len(self.marginals)

    @property
    def matrix(self) -> np.ndarray:
        return np.array(self.correlation)

    def sample(self, n: int, seed) -> np.ndarray:
        return sample_joint(self, n, seed)

    def to_dict(self) -> dict:
        return {
            "qoi_ids": list(self.qoi_ids),
            "marginals": [m.to_dict() for m in self.marginals],
            "judgements": [j.to_dict() for j in self.judgements],
            "correlation": [list(row) for row in self.correlation],
        }


def build(
    marginals,
    judgements,
    qoi_ids=None,
) -> CopulaModel:
    """Assemble and validate a copula model from marginals and concordances.

    Raises CorrelationError with a diagnosis (eigenvalue shortfall plus the
    feasible interval for each pair holding the others fixed) when the implied
    matrix is not strictly positive definite, so the group can revisit its
    judgements.
    """
    marginals = tuple(marginals)
    d = len(marginals)
    if d < 2 or d > MAX_DIMENSION:
        raise ConfigurationError(
            f"copula dimension must be 2 or {MAX_DIMENSION} (got {d}); eliciting "
            "concordances for more quantities is not practical in a workshop"
        )
    ids = tuple(qoi_ids) if qoi_ids is not None else tuple(f"q{i + 1}" for i in range(d))
    if len(ids) != d or len(set(ids)) != d:
        raise ConfigurationError("one unique id per marginal required")

    js = tuple(j if isinstance(j, ConcordanceJudgement) else ConcordanceJudgement(**j)
               for j in judgements)
    needed = {tuple(sorted((a, b))) for i, a in enumerate(ids) for b in ids[i + 1:]}
    got = [j.pair for j in js]
    if len(set(got)) != len(got):
        raise ValidationError("duplicate concordance judgement for a pair")
    if set(got) != needed:
        raise ValidationError(
            f"concordance judgements must cover exactly the pairs {sorted(needed)}, "
            f"got {sorted(got)}"
        )

    rho_by_pair = {j.pair: concordance_to_rho(j.probability) for j in js}
    index = {q: i for i, q in enumerate(ids)}
    matrix = np.eye(d)
    for (a, b), rho in rho_by_pair.items():
        matrix[index[a], index[b]] = rho
        matrix[index[b], index[a]] = rho

    eig = np.linalg.eigvalsh(matrix)
    if eig[0] <= MIN_EIGENVALUE:
        diagnosis = CorrelationDiagnosis(
            eigenvalues=tuple(float(e) for e in eig),
            shortfall=float(MIN_EIGENVALUE - eig[0]),
            feasible=_feasible_intervals(ids, rho_by_pair),
        )
        raise CorrelationError(
            "elicited concordances do not form a positive definite correlation "
            "matrix; revisit the judgements (see diagnosis for feasible ranges)",
            diagnosis=diagnosis,
        )
    return CopulaModel(
        marginals=marginals,
        qoi_ids=ids,
        judgements=js,
        correlation=tuple(tuple(float(v) for v in row) for row in matrix),
    )


def sample_joint(model: CopulaModel, n: int, seed) -> np.ndarray:
    """Draw joint samples: correlated normals -> uniforms -> marginal quantiles."""
    if n < 1:
        raise ValidationError("sample size must be at least 1")
    rng = np.random.default_rng(seed)
    chol = np.linalg.cholesky(model.matrix)
    z = rng.standard_normal((n, model.dimension)) @ chol.T
    u = stats.norm.cdf(z)
    tiny = np.finfo(float).tiny
    u = np.clip(u, tiny, 1.0 - 1e-16)
    out = np.empty_like(u)
    for k, marginal in enumerate(model.marginals):
        out[:, k] = marginal._frozen.ppf(u[:, k])
    return out


def empirical_concordance(samples: np.ndarray, medians) -> dict:
    """Fraction of draws with both coordinates on the same side of the medians."""
    medians = np.asarray(medians, dtype=float)
    above = samples > medians
    d = samples.shape[1]
    out = {}
    for i in range(d):
        for j in range(i + 1, d):
            out[(i, j)] = float(np.mean(above[:, i] == above[:, j]))
    return out


@dataclass(frozen=True)
class ExploreResult:
    """Fixed-seed preview for a what-if concordance value; never persisted."""

    model: CopulaModel
    samples: np.ndarray
    seed: int
    pair_summaries: dict

    def to_dict(self, include_samples: bool = True) -> dict:
        d = {
            "seed": self.seed,
            "judgements": [j.to_dict() for j in self.model.judgements],
            "pair_summaries": {
                "-".join(p): s for p, s in self.pair_summaries.items()
            },
        }
        if include_samples:
            d["samples"] = [list(map(float, row)) for row in self.samples]
        return d


def explore(
    model: CopulaModel,
    alt_c: float,
    pair: tuple[str, str] | None = None,
    n: int = DEFAULT_PREVIEW_POINTS,
    seed: int = DEFAULT_PREVIEW_SEED,
) -> ExploreResult:
    """Preview the joint distribution under an alternative concordance.

    Pure function of its inputs: the returned sample is fixed by the seed and
    the session is never touched, so the commit stays a separate action.
    """
    if pair is None:
        if model.dimension != 2:
            raise ValidationError("pair must be named explicitly for 3-quantity models")
        pair = tuple(sorted(model.qoi_ids))
    pair = tuple(sorted(pair))
    replaced = [
        ConcordanceJudgement(pair=j.pair, probability=alt_c) if j.pair == pair else j
        for j in model.judgements
    ]
    if not any(j.pair == pair for j in model.judgements):
        raise ValidationError(f"unknown pair {pair}")
    alt = build(model.marginals, replaced, qoi_ids=model.qoi_ids)
    samples = sample_joint(alt, n, seed)
    medians = [m.median for m in alt.marginals]
    conc = empirical_concordance(samples, medians)
    summaries = {}
    for (i, j), c_emp in conc.items():
        key = tuple(sorted((alt.qoi_ids[i], alt.qoi_ids[j])))
        elicited = next(jj.probability for jj in alt.judgements if jj.pair == key)
        summaries[key] = {
            "elicited_concordance": elicited,
            "rho": concordance_to_rho(elicited),
            "empirical_concordance": c_emp,
            "empirical_rank_correlation": float(
                stats.spearmanr(samples[:, i], samples[:, j]).statistic
            ),
        }
    return ExploreResult(model=alt, samples=samples, seed=seed, pair_summaries=summaries)
