/**
 * SVG chart builders.
 *
 * Pure string-producing functions so they render identically in the browser
 * and under test.  They only interpolate and scale values received from the
 * API; no statistics are computed here.
 */

export interface Size {
  width: number;
  height: number;
}

const MARGIN = { top: 12, right: 16, bottom: 28, left: 46 };

export interface Scale1D {
  (v: number): number;
  domain: [number, number];
}

export function linearScale(domain: [number, number], range: [number, number]): Scale1D {
  const [d0, d1] = domain;
  const [r0, r1] = range;
  const span = d1 - d0 || 1;
  const fn = ((v: number) => r0 + ((v - d0) / span) * (r1 - r0)) as Scale1D;
  fn.domain = domain;
  return fn;
}

function polylinePath(xs: number[], ys: number[], sx: Scale1D, sy: Scale1D): string {
  const parts: string[] = [];
  for (let i = 0; i < xs.length; i++) {
    const cmd = i === 0 ? "M" : "L";
    parts.push(`${cmd}${sx(xs[i]!).toFixed(2)},${sy(ys[i]!).toFixed(2)}`);
  }
  return parts.join(" ");
}

function axes(sx: Scale1D, sy: Scale1D, size: Size, xLabel: string): string {
  const ticksX = 5;
  const ticksY = 4;
  const parts: string[] = [];
  const y0 = size.height - MARGIN.bottom;
  parts.push(
    `<line x1="${MARGIN.left}" y1="${y0}" x2="${size.width - MARGIN.right}" y2="${y0}" class="axis"/>`,
  );
  for (let i = 0; i <= ticksX; i++) {
    const v = sx.domain[0] + ((sx.domain[1] - sx.domain[0]) * i) / ticksX;
    const x = sx(v);
    parts.push(`<line x1="${x}" y1="${y0}" x2="${x}" y2="${y0 + 4}" class="axis"/>`);
    parts.push(
      `<text x="${x}" y="${y0 + 16}" text-anchor="middle" class="tick">${formatTick(v)}</text>`,
    );
  }
  for (let i = 0; i <= ticksY; i++) {
    const v = sy.domain[0] + ((sy.domain[1] - sy.domain[0]) * i) / ticksY;
    const y = sy(v);
    parts.push(
      `<text x="${MARGIN.left - 6}" y="${y + 3}" text-anchor="end" class="tick">${formatTick(v)}</text>`,
    );
  }
  parts.push(
    `<text x="${(MARGIN.left + size.width - MARGIN.right) / 2}" y="${size.height - 4}" ` +
      `text-anchor="middle" class="label">${xLabel}</text>`,
  );
  return parts.join("");
}

export function formatTick(v: number): string {
  if (v === 0) return "0";
  const abs = Math.abs(v);
  if (abs >= 1000 || abs < 0.001) return v.toExponential(1);
  return parseFloat(v.toPrecision(3)).toString();
}

const SERIES_COLORS = [
  "#3366aa",
  "#aa5533",
  "#33aa66",
  "#8844aa",
  "#aa8833",
  "#448899",
];

export interface DensitySeries {
  label: string;
  values: number[];
  emphasis?: boolean;
}

/** Overlay of per-expert densities with the pooled curve emphasised. */
export function densityOverlaySvg(
  grid: number[],
  series: DensitySeries[],
  size: Size = { width: 560, height: 300 },
  xLabel = "",
): string {
  const maxY = Math.max(...series.flatMap((s) => s.values), 1e-12);
  const sx = linearScale([grid[0] ?? 0, grid[grid.length - 1] ?? 1], [
    MARGIN.left,
    size.width - MARGIN.right,
  ]);
  const sy = linearScale([0, maxY * 1.05], [size.height - MARGIN.bottom, MARGIN.top]);
  const curves = series
    .map((s, i) => {
      const color = s.emphasis ? "#111111" : SERIES_COLORS[i % SERIES_COLORS.length];
      const width = s.emphasis ? 2.5 : 1.3;
      return (
        `<path d="${polylinePath(grid, s.values, sx, sy)}" fill="none" ` +
        `stroke="${color}" stroke-width="${width}" data-series="${s.label}"/>`
      );
    })
    .join("");
  const legend = series
    .map((s, i) => {
      const color = s.emphasis ? "#111111" : SERIES_COLORS[i % SERIES_COLORS.length];
      return (
        `<text x="${size.width - MARGIN.right - 4}" y="${MARGIN.top + 14 * (i + 1)}" ` +
        `text-anchor="end" class="legend" fill="${color}">${s.label}</text>`
      );
    })
    .join("");
  return (
    `<svg viewBox="0 0 ${size.width} ${size.height}" xmlns="http://www.w3.org/2000/svg">` +
    axes(sx, sy, size, xLabel) +
    curves +
    legend +
    `</svg>`
  );
}

export interface FanBand {
  y: number;
  median: number;
  low: number;
  high: number;
  flagged?: boolean;
}

/** Median function plus conditional intervals across the conditioning points. */
export function conditionalFanSvg(
  bands: FanBand[],
  size: Size = { width: 560, height: 300 },
  xLabel = "conditioning value",
): string {
  if (bands.length === 0) return `<svg viewBox="0 0 ${size.width} ${size.height}"/>`;
  const ys = bands.map((b) => b.y);
  const lows = bands.map((b) => b.low);
  const highs = bands.map((b) => b.high);
  const sx = linearScale([Math.min(...ys), Math.max(...ys)], [
    MARGIN.left,
    size.width - MARGIN.right,
  ]);
  const sy = linearScale(
    [Math.min(...lows) * 0.95, Math.max(...highs) * 1.05],
    [size.height - MARGIN.bottom, MARGIN.top],
  );
  const band =
    `<path d="${polylinePath(ys, highs, sx, sy)} ` +
    `${polylinePath([...ys].reverse(), [...lows].reverse(), sx, sy).replace(/^M/, "L")} Z" ` +
    `fill="#3366aa22" stroke="none"/>`;
  const medianLine = `<path d="${polylinePath(
    ys,
    bands.map((b) => b.median),
    sx,
    sy,
  )}" fill="none" stroke="#111111" stroke-width="2"/>`;
  const knots = bands
    .map(
      (b) =>
        `<circle cx="${sx(b.y).toFixed(2)}" cy="${sy(b.median).toFixed(2)}" r="3.5" ` +
        `fill="${b.flagged ? "#cc3333" : "#111111"}" data-knot="${b.y}"/>`,
    )
    .join("");
  return (
    `<svg viewBox="0 0 ${size.width} ${size.height}" xmlns="http://www.w3.org/2000/svg">` +
    axes(sx, sy, size, xLabel) +
    band +
    medianLine +
    knots +
    `</svg>`
  );
}

/** Scatter preview for the concordance explorer; the seed rides in the SVG. */
export function scatterSvg(
  points: [number, number][],
  seed: number,
  size: Size = { width: 420, height: 420 },
  labels: [string, string] = ["x", "y"],
): string {
  const xs = points.map((p) => p[0]);
  const ys = points.map((p) => p[1]);
  const sx = linearScale([Math.min(...xs), Math.max(...xs)], [
    MARGIN.left,
    size.width - MARGIN.right,
  ]);
  const sy = linearScale([Math.min(...ys), Math.max(...ys)], [
    size.height - MARGIN.bottom,
    MARGIN.top,
  ]);
  const dots = points
    .map(
      (p) => `<circle cx="${sx(p[0]).toFixed(1)}" cy="${sy(p[1]).toFixed(1)}" r="1" class="dot"/>`,
    )
    .join("");
  return (
    `<svg viewBox="0 0 ${size.width} ${size.height}" xmlns="http://www.w3.org/2000/svg" ` +
    `data-seed="${seed}" data-points="${points.length}">` +
    axes(sx, sy, size, labels[0]) +
    `<g fill="#3366aa" fill-opacity="0.35">${dots}</g>` +
    `<text x="${size.width - MARGIN.right}" y="${MARGIN.top}" text-anchor="end" class="legend">` +
    `seed ${seed}, n=${points.length}</text>` +
    `</svg>`
  );
}

/** Horizontal bars for the PoS decomposition ledger. */
export function decompositionSvg(
  factors: [string, number][],
  size: Size = { width: 560, height: 200 },
): string {
  const rowHeight = (size.height - MARGIN.top - MARGIN.bottom) / Math.max(factors.length, 1);
  const sx = linearScale([0, 1], [MARGIN.left + 120, size.width - MARGIN.right]);
  const rows = factors
    .map(([label, value], i) => {
      const y = MARGIN.top + i * rowHeight;
      return (
        `<text x="${MARGIN.left + 112}" y="${y + rowHeight / 2 + 3}" text-anchor="end" ` +
        `class="legend">${label}</text>` +
        `<rect x="${sx(0)}" y="${y + 3}" width="${(sx(value) - sx(0)).toFixed(1)}" ` +
        `height="${Math.max(rowHeight - 6, 2)}" fill="#3366aa"/>` +
        `<text x="${sx(value) + 4}" y="${y + rowHeight / 2 + 3}" class="tick">` +
        `${value.toFixed(4)}</text>`
      );
    })
    .join("");
  return `<svg viewBox="0 0 ${size.width} ${size.height}" xmlns="http://www.w3.org/2000/svg">${rows}</svg>`;
}

/**
 * Both phrasings of a concordance probability.  They are the same number
 * under the copula (each quantity is above its median with probability 1/2),
 * but experts often need to hear both.
 */
export function concordancePhrasings(c: number, nameA: string, nameB: string): [string, string] {
  const pct = (100 * c).toFixed(0);
  return [
    `There is a ${pct}% probability that ${nameA} and ${nameB} both end up on the same ` +
      `side of their medians.`,
    `Given that ${nameA} is above its median, there is a ${pct}% probability that ` +
      `${nameB} is above its median too.`,
  ];
}
