"""Parametric distribution families used for elicited quantities.

Each fitted distribution is a thin, immutable wrapper around a scipy.stats
frozen distribution, restricted to the five families used in SHELF-style
fitting (normal, student-t, gamma, lognormal, beta).  Bounded families are
affinely rescaled or shifted onto the declared support.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .errors import ConfigurationError, ValidationError

FAMILIES = ("normal", "student-t", "gamma", "lognormal", "beta")

#: width below which bisection stops when inverting a CDF numerically
_BISECT_WIDTH = 1e-12


def _rng(seed) -> np.random.Generator:
    """Build (or pass through) a numpy Generator from an explicit seed."""
    return np.random.default_rng(seed)


@dataclass(frozen=True)
class Support:
    """Interval on which a quantity lives; either bound may be infinite."""

    lower: float
    upper: float

    def __post_init__(self):
        object.__setattr__(self, "lower", float(self.lower))
        object.__setattr__(self, "upper", float(self.upper))
        if not self.lower < self.upper:
            raise ValidationError(
                f"support lower bound {self.lower} must be below upper bound {self.upper}"
            )

    @property
    def bounded(self) -> bool:
        return math.isfinite(self.lower) and math.isfinite(self.upper)

    def contains(self, x: float, strict: bool = False) -> bool:
        if strict:
            return self.lower < x < self.upper
        return self.lower <= x <= self.upper

    def to_dict(self) -> dict:
        # infinite bounds as strings: standard JSON has no Infinity literal
        return {
            "lower": self.lower if math.isfinite(self.lower) else repr(self.lower),
            "upper": self.upper if math.isfinite(self.upper) else repr(self.upper),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Support":
        return cls(float(d["lower"]), float(d["upper"]))


UNBOUNDED = Support(-math.inf, math.inf)


def families_for_support(support: Support) -> tuple[str, ...]:
    """Families whose CDF can reach exactly 0/1 at the given support bounds."""
    lo_finite = math.isfinite(support.lower)
    hi_finite = math.isfinite(support.upper)
    if lo_finite and hi_finite:
        return ("beta",)
    if lo_finite and not hi_finite:
        return ("gamma", "lognormal")
    if not lo_finite and not hi_finite:
        return ("normal", "student-t")
    return ()


@dataclass(frozen=True)
class FittedDistribution:
    """A parametric univariate distribution on an explicit support.

    Parameter conventions:
      normal     (mean, sd)
      student-t  (location, scale, df)
      gamma      (shape, rate), shifted to start at ``support.lower``
      lognormal  (log_mean, log_sd), shifted to start at ``support.lower``
      beta       (alpha, beta), rescaled onto ``[support.lower, support.upper]``
    """

    family: str
    params: tuple[float, ...]
    support: Support = field(default=UNBOUNDED)

    def __post_init__(self):
        object.__setattr__(self, "params", tuple(float(p) for p in self.params))
        if self.family not in FAMILIES:
            raise ConfigurationError(f"unknown family {self.family!r}")
        if self.family not in families_for_support(self.support):
            raise ConfigurationError(
                f"family {self.family!r} is infeasible on support "
                f"[{self.support.lower}, {self.support.upper}]"
            )
        self._validate_params()

    def _validate_params(self):
        fam, p = self.family, self.params
        required = {"normal": 2, "student-t": 3, "gamma": 2, "lognormal": 2, "beta": 2}[fam]
        if len(p) != required:
            raise ConfigurationError(f"{fam} expects {required} parameters, got {len(p)}")
        positive = {
            "normal": (1,),
            "student-t": (1, 2),
            "gamma": (0, 1),
            "lognormal": (1,),
            "beta": (0, 1),
        }[fam]
        for i in positive:
            if not p[i] > 0:
                raise ConfigurationError(f"{fam} parameter {i} must be strictly positive, got {p[i]}")

    @property
    def _frozen(self):
        fam, p, s = self.family, self.params, self.support
        if fam == "normal":
            return stats.norm(loc=p[0], scale=p[1])
        if fam == "student-t":
            return stats.t(df=p[2], loc=p[0], scale=p[1])
        if fam == "gamma":
            return stats.gamma(a=p[0], scale=1.0 / p[1], loc=s.lower)
        if fam == "lognormal":
            return stats.lognorm(s=p[1], scale=math.exp(p[0]), loc=s.lower)
        return stats.beta(p[0], p[1], loc=s.lower, scale=s.upper - s.lower)

    # ---------- core API ----------

    def cdf(self, x):
        return self._frozen.cdf(x)

    def pdf(self, x):
        return self._frozen.pdf(x)

    def quantile(self, p):
        p_arr = np.asarray(p, dtype=float)
        if np.any(p_arr <= 0.0) or np.any(p_arr >= 1.0):
            raise ValidationError("quantile probability must lie strictly inside (0, 1)")
        q = self._frozen.ppf(p_arr)
        return float(q) if np.isscalar(p) or p_arr.ndim == 0 else q

    def sample(self, n: int, seed) -> np.ndarray:
        if n < 1:
            raise ValidationError("sample size must be at least 1")
        return self._frozen.rvs(size=n, random_state=_rng(seed))

    @property
    def median(self) -> float:
        return float(self._frozen.ppf(0.5))

    def mean(self) -> float:
        return float(self._frozen.mean())

    # ---------- serialization ----------

    def to_dict(self) -> dict:
        return {
            "family": self.family,
            "params": list(self.params),
            "support": self.support.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "FittedDistribution":
        return cls(
            family=d["family"],
            params=tuple(float(p) for p in d["params"]),
            support=Support.from_dict(d["support"]),
        )


def _invert_cdf(cdf, pdf, p: float, lo: float, hi: float) -> float:
    """Bracketed bisection to width 1e-12 followed by one Newton polish step."""
    if not cdf(lo) <= p <= cdf(hi):
        # widen until the target probability is bracketed
        width = max(hi - lo, 1.0)
        for _ in range(200):
            if cdf(lo) > p:
                lo -= width
            if cdf(hi) < p:
                hi += width
            width *= 2.0
            if cdf(lo) <= p <= cdf(hi):
                break
    a, b = lo, hi
    while b - a > _BISECT_WIDTH * max(1.0, abs(a), abs(b)):
        mid = 0.5 * (a + b)
        if cdf(mid) < p:
            a = mid
        else:
            b = mid
    x = 0.5 * (a + b)
    dens = pdf(x)
    if dens > 0 and math.isfinite(dens):
        x_new = x - (cdf(x) - p) / dens
        if a <= x_new <= b:
            x = x_new
    return x


@dataclass(frozen=True)
class MixtureDistribution:
    """Fixed-weight mixture (linear opinion pool) of fitted distributions."""

    components: tuple[FittedDistribution, ...]
    weights: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "components", tuple(self.components))
        object.__setattr__(self, "weights", tuple(float(w) for w in self.weights))
        if len(self.components) != len(self.weights):
            raise ValidationError("one weight per component required")
        if any(w < 0 for w in self.weights):
            raise ValidationError("weights must be nonnegative")
        if abs(sum(self.weights) - 1.0) > 1e-9:
            raise ValidationError("weights must sum to 1")

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        acc = np.zeros_like(x)
        for w, d in zip(self.weights, self.components):
            acc += w * d.cdf(x)
        return float(acc) if acc.ndim == 0 else acc

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        acc = np.zeros_like(x)
        for w, d in zip(self.weights, self.components):
            acc += w * d.pdf(x)
        return float(acc) if acc.ndim == 0 else acc

    def quantile(self, p):
        if np.ndim(p) > 0:
            return np.array([self.quantile(float(q)) for q in np.asarray(p)])
        p = float(p)
        if not 0.0 < p < 1.0:
            raise ValidationError("quantile probability must lie strictly inside (0, 1)")
        qs = [d.quantile(p) for d in self.components]
        return _invert_cdf(self.cdf, self.pdf, p, min(qs), max(qs))

    @property
    def median(self) -> float:
        return self.quantile(0.5)

    def sample(self, n: int, seed) -> np.ndarray:
        if n < 1:
            raise ValidationError("sample size must be at least 1")
        rng = _rng(seed)
        idx = rng.choice(len(self.components), size=n, p=np.asarray(self.weights))
        out = np.empty(n)
        for j, d in enumerate(self.components):
            mask = idx == j
            k = int(mask.sum())
            if k:
                out[mask] = d._frozen.rvs(size=k, random_state=rng)
        return out

    @property
    def support(self) -> Support:
        return Support(
            min(d.support.lower for d in self.components),
            max(d.support.upper for d in self.components),
        )

    def to_dict(self) -> dict:
        return {
            "components": [d.to_dict() for d in self.components],
            "weights": list(self.weights),
        }


@dataclass(frozen=True)
class DiscreteDistribution:
    """Finite-atom distribution; used for conditioning inputs and oracles."""

    atoms: tuple[float, ...]
    probs: tuple[float, ...]

    def __post_init__(self):
        atoms = tuple(float(a) for a in self.atoms)
        probs = tuple(float(p) for p in self.probs)
        if len(atoms) != len(probs) or not atoms:
            raise ValidationError("atoms and probs must be nonempty and equal length")
        if any(p < 0 for p in probs) or abs(sum(probs) - 1.0) > 1e-9:
            raise ValidationError("probs must be a probability vector")
        order = np.argsort(atoms)
        object.__setattr__(self, "atoms", tuple(atoms[i] for i in order))
        object.__setattr__(self, "probs", tuple(probs[i] for i in order))

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x)
        acc = 0.0
        for a, p in zip(self.atoms, self.probs):
            acc += p
            out = np.where(x >= a, acc, out)
        return float(out) if out.ndim == 0 else out

    def quantile(self, p):
        if not 0.0 < float(p) < 1.0:
            raise ValidationError("quantile probability must lie strictly inside (0, 1)")
        cum = np.cumsum(self.probs)
        idx = int(np.searchsorted(cum, float(p)))
        return self.atoms[min(idx, len(self.atoms) - 1)]

    @property
    def median(self) -> float:
        return self.quantile(0.5)

    def sample(self, n: int, seed) -> np.ndarray:
        rng = _rng(seed)
        return rng.choice(np.asarray(self.atoms), size=n, p=np.asarray(self.probs))


def linear_pool(
    distributions: list[FittedDistribution] | tuple[FittedDistribution, ...],
    weights=None,
) -> MixtureDistribution:
    """Equal- or fixed-weight linear opinion pool of individual fits."""
    distributions = tuple(distributions)
    if not distributions:
        raise ValidationError("linear pool requires at least one distribution")
    if weights is None:
        weights = tuple(1.0 / len(distributions) for _ in distributions)
    return MixtureDistribution(components=distributions, weights=tuple(weights))
