"""Conditional elicitation: build X | Y from a marginal for Y, an anchor
distribution at the Y-median, and conditional medians at further conditioning
points; marginalize X by Monte Carlo.

The anchor distribution is elicited in full at the (rounded) median of Y.
At any other y the conditional is the anchor translated on a transformed
scale so that its median follows the fitted median function, optionally with
its transformed-scale spread rescaled by m(y)/m(anchor).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .distributions import FittedDistribution, Support
from .errors import ScheduleError, TransformError, ValidationError
from .fitting import FitResult, fit

TRANSFORMS = ("identity", "log", "logit")
SPREAD_RULES = ("constant-on-transformed-scale", "scaled-with-median")
MEDIAN_FUNCTION_KINDS = ("piecewise-linear", "polynomial")
EXTRAPOLATION_MODES = ("linear-continuation", "clamp")

#: conditional truncation mass above this fraction flags a mis-specified support
TRUNCATION_WARN_FRACTION = 0.01

_MARGINALIZE_BATCH = 250_000


def _fwd(transform: str, x):
    x = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        if transform == "identity":
            out = x
        elif transform == "log":
            if np.any(x < 0):
                raise TransformError("log transform requires nonnegative values")
            out = np.log(x)
        else:
            if np.any((x < 0) | (x > 1)):
                raise TransformError("logit transform requires values in [0, 1]")
            out = np.log(x) - np.log1p(-x)
    return float(out) if out.ndim == 0 else out


def _inv(transform: str, t):
    t = np.asarray(t, dtype=float)
    if transform == "identity":
        out = t
    elif transform == "log":
        out = np.exp(t)
    else:
        out = 1.0 / (1.0 + np.exp(-t))
    return float(out) if out.ndim == 0 else out


def _dfwd(transform: str, x):
    """Derivative of the forward transform, for density chain rules."""
    x = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore"):
        if transform == "identity":
            out = np.ones_like(x)
        elif transform == "log":
            out = 1.0 / x
        else:
            out = 1.0 / (x * (1.0 - x))
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class ConditioningSchedule:
    """Values of Y at which conditional judgements are elicited.

    ``points`` is ascending; ``elicitation_order`` lists the same points in
    asking order: the median point first, then the outermost quantile pair,
    then successive inner pairs (lower before upper within a pair).
    """

    points: tuple[float, ...]
    provenance: tuple[str, ...]
    elicitation_order: tuple[float, ...]
    anchor: float

    def __post_init__(self):
        pts = tuple(float(p) for p in self.points)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "elicitation_order", tuple(float(p) for p in self.elicitation_order))
        if any(b <= a for a, b in zip(pts, pts[1:])):
            raise ScheduleError(f"conditioning points must be strictly increasing: {pts}")
        if self.anchor not in pts:
            raise ScheduleError("schedule must include the median conditioning point")
        if sorted(self.elicitation_order) != list(pts):
            raise ScheduleError("elicitation order must be a permutation of the points")
        if self.elicitation_order[0] != self.anchor:
            raise ScheduleError("the median point must be elicited first")

    def to_dict(self) -> dict:
        return {
            "points": list(self.points),
            "provenance": list(self.provenance),
            "elicitation_order": list(self.elicitation_order),
            "anchor": self.anchor,
        }


def _round_to_step(v: float, step: float) -> float:
    if step <= 0:
        return v
    # half-up on the step grid, independent of banker's rounding; snap the
    # product back to a clean decimal so 12 * 0.05 reads 0.6, not 0.60000...01
    return round(math.floor(v / step + 0.5) * step, 12)


def schedule_from_marginal(
    y_marginal,
    quantiles=(0.05, 0.25, 0.5, 0.75, 0.95),
    rounding: float = 0.0,
) -> ConditioningSchedule:
    """Derive conditioning points from quantiles of the Y marginal.

    Quantile values are rounded to the given step (0 disables rounding) so
    experts can condition on round numbers.  The asking order puts the median
    first, then the extreme pair, then inner pairs.
    """
    qs = tuple(float(q) for q in quantiles)
    for q in qs:
        if not 0.0 < q < 1.0:
            raise ValidationError(f"quantile {q} must lie in (0, 1)")
    if 0.5 not in qs:
        raise ScheduleError("quantile list must include the median (0.5)")
    if len(set(qs)) != len(qs):
        raise ScheduleError("duplicate quantiles in schedule request")

    values = {q: _round_to_step(float(y_marginal.quantile(q)), rounding) for q in qs}
    seen: dict[float, float] = {}
    for q, v in values.items():
        if v in seen:
            raise ScheduleError(
                f"rounding step {rounding} collapses quantiles {seen[v]} and {q} "
                f"onto the same point {v}"
            )
        seen[v] = q

    asking = [0.5] + sorted((q for q in qs if q != 0.5), key=lambda q: (-abs(q - 0.5), q))
    points = tuple(values[q] for q in sorted(qs))
    return ConditioningSchedule(
        points=points,
        provenance=tuple(f"q{q:g}" for q in sorted(qs)),
        elicitation_order=tuple(values[q] for q in asking),
        anchor=values[0.5],
    )


@dataclass(frozen=True)
class MedianFunction:
    """Median of X given Y=y, fitted on a transformed scale.

    Piecewise-linear kind interpolates the elicited medians exactly;
    polynomial kind is a least-squares fit of the declared degree.
    """

    kind: str
    transform: str
    knots: tuple[tuple[float, float], ...] = ()  # (y, transformed median)
    coefficients: tuple[float, ...] = ()
    extrapolation: str = "linear-continuation"

    def __post_init__(self):
        if self.kind not in MEDIAN_FUNCTION_KINDS:
            raise ValidationError(f"unknown median function kind {self.kind!r}")
        if self.transform not in TRANSFORMS:
            raise TransformError(f"unknown transform {self.transform!r}")
        if self.extrapolation not in EXTRAPOLATION_MODES:
            raise ValidationError(f"unknown extrapolation mode {self.extrapolation!r}")

    @property
    def y_range(self) -> tuple[float, float]:
        if self.kind == "piecewise-linear":
            ys = [y for y, _ in self.knots]
            return min(ys), max(ys)
        return (-math.inf, math.inf)

    def in_range(self, y):
        lo, hi = self.y_range
        y = np.asarray(y, dtype=float)
        out = (y >= lo) & (y <= hi)
        return bool(out) if out.ndim == 0 else out

    def evaluate_transformed(self, y):
        y = np.asarray(y, dtype=float)
        if self.kind == "polynomial":
            out = np.polyval(self.coefficients, y)
            return float(out) if out.ndim == 0 else out
        ys = np.array([k[0] for k in self.knots])
        ts = np.array([k[1] for k in self.knots])
        out = np.interp(y, ys, ts)
        if self.extrapolation == "linear-continuation" and len(ys) >= 2:
            lo_slope = (ts[1] - ts[0]) / (ys[1] - ys[0])
            hi_slope = (ts[-1] - ts[-2]) / (ys[-1] - ys[-2])
            out = np.where(y < ys[0], ts[0] + (y - ys[0]) * lo_slope, out)
            out = np.where(y > ys[-1], ts[-1] + (y - ys[-1]) * hi_slope, out)
        return float(out) if out.ndim == 0 else out

    def evaluate(self, y):
        return _inv(self.transform, self.evaluate_transformed(y))

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "transform": self.transform,
            "knots": [list(k) for k in self.knots],
            "coefficients": list(self.coefficients),
            "extrapolation": self.extrapolation,
        }


def fit_median_function(
    points,
    transform: str = "identity",
    kind: str = "piecewise-linear",
    degree: int | None = None,
    extrapolation: str = "linear-continuation",
) -> MedianFunction:
    """Fit m(y) to elicited conditional medians on the transformed scale."""
    pts = sorted((float(y), float(m)) for y, m in points)
    if len(pts) < 2:
        raise ValidationError("median function needs at least two points")
    ys = [y for y, _ in pts]
    if len(set(ys)) != len(ys):
        raise ValidationError("conditioning points must be distinct")
    if transform == "log" and any(m <= 0 for _, m in pts):
        raise TransformError("log transform requires strictly positive conditional medians")
    if transform == "logit" and any(not 0 < m < 1 for _, m in pts):
        raise TransformError("logit transform requires conditional medians inside (0, 1)")
    ts = [(_fwd(transform, m)) for _, m in pts]
    if kind == "piecewise-linear":
        return MedianFunction(
            kind=kind,
            transform=transform,
            knots=tuple((y, t) for (y, _), t in zip(pts, ts)),
            extrapolation=extrapolation,
        )
    if degree is None:
        raise ValidationError("polynomial median function requires a degree")
    coeffs = np.polyfit(ys, ts, deg=int(degree))
    return MedianFunction(
        kind=kind, transform=transform, coefficients=tuple(coeffs), extrapolation=extrapolation
    )


@dataclass(frozen=True)
class ConditionalModel:
    """Joint structure for X given Y: marginal for Y, anchor conditional at the
    Y-median point, median function, and a spread rule for the conditionals."""

    y_marginal: object
    anchor: FittedDistribution
    anchor_y: float
    median_fn: MedianFunction
    spread_rule: str = "constant-on-transformed-scale"

    def __post_init__(self):
        if self.spread_rule not in SPREAD_RULES:
            raise ValidationError(f"unknown spread rule {self.spread_rule!r}")
        m_at_anchor = float(self.median_fn.evaluate(self.anchor_y))
        if not math.isclose(m_at_anchor, self.anchor.median, rel_tol=1e-7, abs_tol=1e-10):
            raise ValidationError(
                f"median function must pass through the anchor median: "
                f"m({self.anchor_y}) = {m_at_anchor} vs anchor median {self.anchor.median}"
            )

    @property
    def x_support(self) -> Support:
        return self.anchor.support

    def to_dict(self) -> dict:
        y = self.y_marginal
        return {
            "y_marginal": y.to_dict() if hasattr(y, "to_dict") else repr(y),
            "anchor": self.anchor.to_dict(),
            "anchor_y": self.anchor_y,
            "median_fn": self.median_fn.to_dict(),
            "spread_rule": self.spread_rule,
        }


def default_transform(x_support: Support) -> str:
    """Log when X is bounded below at 0 (no-sign-change semantics), else identity."""
    return "log" if x_support.lower == 0.0 else "identity"


def _shift_and_spread(model: ConditionalModel, y):
    """Transformed-scale shift target and spread factor at y."""
    t_m = model.median_fn.evaluate_transformed(y)
    if model.spread_rule == "constant-on-transformed-scale":
        s = np.ones_like(np.asarray(y, dtype=float))
    else:
        s = model.median_fn.evaluate(y) / model.anchor.median
        s = np.asarray(s, dtype=float)
        if np.any(s <= 0):
            raise ValidationError("scaled-with-median spread requires positive medians")
    return t_m, s


@dataclass(frozen=True)
class ConditionalDistribution:
    """X | Y = y: the anchor translated (and optionally spread-scaled) on the
    transformed scale, truncated back to the X support if it overflows."""

    model: ConditionalModel
    y: float
    extrapolated: bool = field(init=False)
    truncated_mass: float = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "extrapolated", not bool(self.model.median_fn.in_range(self.y)))
        lo, hi = self.model.x_support.lower, self.model.x_support.upper
        f_lo = self._base_cdf(lo) if math.isfinite(lo) else 0.0
        f_hi = self._base_cdf(hi) if math.isfinite(hi) else 1.0
        object.__setattr__(self, "truncated_mass", float(f_lo + (1.0 - f_hi)))
        object.__setattr__(self, "_f_lo", float(f_lo))
        object.__setattr__(self, "_f_hi", float(f_hi))

    @property
    def truncation_warning(self) -> bool:
        return self.truncated_mass > TRUNCATION_WARN_FRACTION

    def _params(self):
        model = self.model
        t_m, s = _shift_and_spread(model, self.y)
        t_anchor = _fwd(model.median_fn.transform, model.anchor.median)
        return float(t_m), float(s), t_anchor

    def _base_cdf(self, x):
        model = self.model
        tr = model.median_fn.transform
        t_m, s, t_anchor = self._params()
        x = np.asarray(x, dtype=float)
        lo, hi = model.x_support.lower, model.x_support.upper
        inside = np.clip(x, lo, hi)
        if tr == "log":
            inside = np.maximum(inside, 0.0)
        t = _fwd(tr, inside)
        with np.errstate(invalid="ignore"):
            w = _inv(tr, t_anchor + (t - t_m) / s)
        out = model.anchor.cdf(w)
        out = np.where(x < lo, 0.0, np.where(x > hi, 1.0, out))
        return float(out) if out.ndim == 0 else out

    def _base_quantile(self, p):
        model = self.model
        tr = model.median_fn.transform
        t_m, s, t_anchor = self._params()
        p = np.clip(np.asarray(p, dtype=float), 1e-15, 1 - 1e-15)
        q_anchor = model.anchor._frozen.ppf(p)
        out = _inv(tr, t_m + s * (_fwd(tr, q_anchor) - t_anchor))
        return float(out) if np.ndim(out) == 0 else out

    # ---------- truncated-and-renormalized law ----------

    def cdf(self, x):
        span = self._f_hi - self._f_lo
        out = np.clip((self._base_cdf(x) - self._f_lo) / span, 0.0, 1.0)
        return float(out) if np.ndim(out) == 0 else out

    def quantile(self, p):
        p = np.asarray(p, dtype=float)
        if np.any(p <= 0.0) or np.any(p >= 1.0):
            raise ValidationError("quantile probability must lie strictly inside (0, 1)")
        out = self._base_quantile(self._f_lo + p * (self._f_hi - self._f_lo))
        lo, hi = self.model.x_support.lower, self.model.x_support.upper
        out = np.clip(out, lo, hi)
        return float(out) if np.ndim(out) == 0 else out

    @property
    def median(self) -> float:
        return float(self.quantile(0.5))

    def pdf(self, x):
        model = self.model
        tr = model.median_fn.transform
        t_m, s, t_anchor = self._params()
        x = np.asarray(x, dtype=float)
        lo, hi = model.x_support.lower, model.x_support.upper
        inside = (x >= lo) & (x <= hi)
        xc = np.clip(x, lo, hi)
        if tr == "log":
            xc = np.maximum(xc, 1e-300)
        t = _fwd(tr, xc)
        w = _inv(tr, t_anchor + (t - t_m) / s)
        with np.errstate(divide="ignore", invalid="ignore"):
            jac = _dfwd(tr, xc) / (s * _dfwd(tr, w))
            dens = model.anchor.pdf(w) * jac / (self._f_hi - self._f_lo)
        out = np.where(inside, dens, 0.0)
        return float(out) if out.ndim == 0 else out

    def sample(self, n: int, seed) -> np.ndarray:
        rng = np.random.default_rng(seed)
        u = rng.uniform(size=n)
        return np.asarray(self.quantile(np.clip(u, 1e-12, 1 - 1e-12)))


def conditional(model: ConditionalModel, y: float) -> ConditionalDistribution:
    """Conditional distribution of X given Y = y (flags, never errors)."""
    return ConditionalDistribution(model=model, y=float(y))


@dataclass(frozen=True)
class MarginalizeResult:
    """Monte Carlo marginal of X with its summary and optional parametric fit."""

    samples: np.ndarray
    n: int
    seed: int
    median: float
    intervals: dict
    extrapolated_fraction: float
    mean_truncated_mass: float
    max_truncated_mass: float
    truncation_warning: bool
    fitted: FitResult | None = None

    def summary_dict(self) -> dict:
        return {
            "n": self.n,
            "seed": self.seed,
            "median": self.median,
            "intervals": {k: list(v) for k, v in self.intervals.items()},
            "extrapolated_fraction": self.extrapolated_fraction,
            "mean_truncated_mass": self.mean_truncated_mass,
            "max_truncated_mass": self.max_truncated_mass,
            "truncation_warning": self.truncation_warning,
            "fitted": self.fitted.to_dict() if self.fitted else None,
        }

    def to_json(self) -> str:
        return json.dumps(self.summary_dict(), indent=2)

    def to_text(self) -> str:
        lines = [
            f"Monte Carlo marginal: {self.n} samples (seed {self.seed})",
            f"  median           {self.median:.6g}",
        ]
        for label, (lo, hi) in self.intervals.items():
            lines.append(f"  central {label}      [{lo:.6g}, {hi:.6g}]")
        lines.append(f"  extrapolated     {100 * self.extrapolated_fraction:.3f}% of draws")
        lines.append(
            f"  truncated mass   mean {self.mean_truncated_mass:.4g}, "
            f"max {self.max_truncated_mass:.4g}"
        )
        if self.truncation_warning:
            lines.append("  WARNING: conditional truncation exceeded 1%; check the X support")
        if self.fitted:
            d = self.fitted.distribution
            lines.append(f"  fitted           {d.family}{d.params} on "
                         f"[{d.support.lower:.6g}, {d.support.upper:.6g}]")
        return "\n".join(lines)


def marginalize_x(
    model: ConditionalModel,
    n: int,
    seed: int,
    fit_family: str | None = None,
    fit_probs=(0.05, 0.25, 0.5, 0.75, 0.95),
    interval_levels=(0.5, 0.9),
) -> MarginalizeResult:
    """Sample the X marginal by drawing y ~ Y and then x ~ X | Y = y.

    Draws are generated in fixed-size batches whose substreams derive from
    (seed, batch index), so results do not depend on how batches are executed.
    """
    if n < 1:
        raise ValidationError("sample size must be at least 1")
    model_tr = model.median_fn.transform
    t_anchor = _fwd(model_tr, model.anchor.median)
    lo, hi = model.x_support.lower, model.x_support.upper

    n_batches = (n + _MARGINALIZE_BATCH - 1) // _MARGINALIZE_BATCH
    out = np.empty(n)
    extrapolated = 0
    trunc_sum = 0.0
    trunc_max = 0.0
    done = 0
    for b in range(n_batches):
        nb = min(_MARGINALIZE_BATCH, n - done)
        rng = np.random.default_rng(np.random.SeedSequence((seed, b)))
        y = np.asarray(model.y_marginal.sample(nb, rng), dtype=float)
        t_m, s = _shift_and_spread(model, y)
        t_m = np.asarray(t_m, dtype=float)
        s = np.broadcast_to(np.asarray(s, dtype=float), y.shape)

        def base_cdf_at(x_const):
            t = _fwd(model_tr, x_const)
            w = _inv(model_tr, t_anchor + (t - t_m) / s)
            return model.anchor.cdf(w)

        f_lo = base_cdf_at(lo) if math.isfinite(lo) and not (model_tr == "log" and lo == 0.0) else np.zeros(nb)
        f_hi = base_cdf_at(hi) if math.isfinite(hi) else np.ones(nb)
        mass = f_lo + (1.0 - f_hi)
        trunc_sum += float(mass.sum())
        trunc_max = max(trunc_max, float(mass.max()))
        extrapolated += int(np.count_nonzero(~model.median_fn.in_range(y)))

        u = rng.uniform(size=nb)
        p = np.clip(f_lo + u * (f_hi - f_lo), 1e-15, 1 - 1e-15)
        q_anchor = model.anchor._frozen.ppf(p)
        x = _inv(model_tr, t_m + s * (_fwd(model_tr, q_anchor) - t_anchor))
        out[done : done + nb] = np.clip(x, lo, hi)
        done += nb

    med = float(np.median(out))
    intervals = {
        f"{int(100 * lev)}%": (
            float(np.quantile(out, 0.5 - lev / 2)),
            float(np.quantile(out, 0.5 + lev / 2)),
        )
        for lev in interval_levels
    }
    fitted = None
    if fit_family is not None:
        cs = [(float(np.quantile(out, p)), p) for p in fit_probs]
        fitted = fit(fit_family, model.x_support, cs)
    return MarginalizeResult(
        samples=out,
        n=n,
        seed=seed,
        median=med,
        intervals=intervals,
        extrapolated_fraction=extrapolated / n,
        mean_truncated_mass=trunc_sum / n,
        max_truncated_mass=trunc_max,
        truncation_warning=(trunc_sum / n) > TRUNCATION_WARN_FRACTION,
        fitted=fitted,
    )
