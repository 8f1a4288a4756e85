"""Conditional elicitation via the extension method.

The target quantity X (exacerbation reduction) is hard to judge directly, but
experts can judge it conditional on the surrogate Y (sputum eosinophil
reduction) whose distribution comes from earlier-phase analysis.  This demo
derives the conditioning schedule from the Y marginal, builds the conditional
model from the anchor distribution plus elicited medians, and marginalizes X
by Monte Carlo.
"""

from elicit import (
    ConditionalModel,
    FittedDistribution,
    Support,
    conditional,
    fit,
    fit_median_function,
    marginalize_x,
    schedule_from_marginal,
)


def main():
    # surrogate marginal: median ~65%, 80% interval ~(52%, 77%)
    y_marginal = FittedDistribution("beta", (15.5, 8.5), Support(0.0, 1.0))
    print("Y marginal (surrogate effect):")
    for p in (0.1, 0.25, 0.5, 0.75, 0.9):
        print(f"  quantile {p:4.0%}: {y_marginal.quantile(p):.3f}")

    print()
    print("Conditioning schedule (quantiles rounded to 5% steps):")
    schedule = schedule_from_marginal(
        y_marginal, quantiles=(0.1, 0.25, 0.5, 0.75, 0.9), rounding=0.05
    )
    print(f"  points (ascending):  {schedule.points}")
    print(f"  asking order:        {schedule.elicitation_order}")
    print("  (median first, then the extremes, then the quartile points)")

    # anchor: full distribution of X given Y at the median point, fitted from
    # group probability statements
    anchor = fit(
        "beta", Support(0.0, 0.70), [(0.25, 0.30), (0.35, 0.50), (0.40, 0.70)]
    ).distribution
    print()
    print(f"Anchor X | Y={schedule.anchor:.2f}: Beta{tuple(round(p, 2) for p in anchor.params)}"
          f" on [0, 0.70], median {anchor.median:.3f}")

    # elicited conditional medians at the other conditioning points
    medians = {0.50: 0.19, 0.60: 0.28, 0.70: 0.37, 0.75: 0.41}
    knots = sorted([(schedule.anchor, anchor.median)] + list(medians.items()))
    fn = fit_median_function(knots, transform="log")
    model = ConditionalModel(
        y_marginal=y_marginal,
        anchor=anchor,
        anchor_y=schedule.anchor,
        median_fn=fn,
        spread_rule="constant-on-transformed-scale",
    )

    print()
    print("Conditional fan (log-scale shift of the anchor, spread held constant):")
    header = f"  {'y':>5}  {'median':>7}  {'q10':>7}  {'q90':>7}  trunc"
    print(header)
    for y in schedule.points:
        c = conditional(model, y)
        flag = " *" if c.truncation_warning else ""
        print(
            f"  {y:5.2f}  {c.median:7.3f}  {c.quantile(0.1):7.3f}  "
            f"{c.quantile(0.9):7.3f}  {c.truncated_mass:5.3f}{flag}"
        )
    print("  (* truncation above 1% signals pressure on the declared X support)")

    print()
    print("Monte Carlo marginal of X (y ~ Y, then x ~ X | Y = y):")
    result = marginalize_x(model, n=200_000, seed=2024, fit_family="beta")
    print(result.to_text())


if __name__ == "__main__":
    main()
