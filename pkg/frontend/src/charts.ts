/** Hand-rolled SVG charts: grouped/stacked bars with an optional line
 * overlay on a second axis, pies with hover percentages, and yearly
 * multi-series lines. Values are plotted exactly as the server sent
 * them; the only client-side arithmetic is pixel scaling. */

import type {
  DistributionPayload,
  EncodingPayload,
  SeriesPayload,
} from "./api.js";

export const PALETTE = [
  "#4e79a7", "#f28e2b", "#59a14f", "#e15759", "#76b7b2",
  "#edc948", "#b07aa1", "#ff9da7", "#9c755f", "#bab0ac",
];

export function colorFor(index: number): string {
  return PALETTE[((index % PALETTE.length) + PALETTE.length) % PALETTE.length];
}

const SVG_NS = "http://www.w3.org/2000/svg";

function svgEl<K extends keyof SVGElementTagNameMap>(
  tag: K,
  attrs: Record<string, string | number> = {},
): SVGElementTagNameMap[K] {
  const el = document.createElementNS(SVG_NS, tag);
  for (const [k, v] of Object.entries(attrs)) el.setAttribute(k, String(v));
  return el;
}

interface Box {
  width: number;
  height: number;
  pad: { top: number; right: number; bottom: number; left: number };
}

const MAIN_BOX: Box = {
  width: 560,
  height: 220,
  pad: { top: 12, right: 42, bottom: 34, left: 42 },
};

function maxOf(values: (number | null)[]): number {
  let m = 0;
  for (const v of values) if (v !== null && v > m) m = v;
  return m;
}

/** Zero-anchored pixel scale for one axis. */
function yScale(maxValue: number, box: Box): (v: number) => number {
  const inner = box.height - box.pad.top - box.pad.bottom;
  const top = maxValue > 0 ? maxValue : 1;
  return (v) => box.pad.top + inner - (v / top) * inner;
}

export interface MainChartOptions {
  /** per-bin mask from a linked update; false bins render translucent */
  highlight?: boolean[] | null;
  onBinClick?: (binIndex: number) => void;
}

/** The card's main view: bar measures on the left axis, line measures
 * (a second rule kind) on the right, both anchored at zero. */
export function renderMainChart(
  container: HTMLElement,
  series: SeriesPayload[],
  encoding: EncodingPayload,
  opts: MainChartOptions = {},
): SVGSVGElement {
  const box = MAIN_BOX;
  const svg = svgEl("svg", {
    viewBox: `0 0 ${box.width} ${box.height}`,
    class: "chart main-chart-svg",
    role: "img",
  });
  const byName = new Map(series.map((s) => [s.measure, s]));
  const barGroup = encoding.groups.find((g) => g.axis === 0);
  const lineGroup = encoding.groups.find((g) => g.axis === 1);
  const barSeries = (barGroup?.measures ?? [])
    .map((m) => byName.get(m))
    .filter((s): s is SeriesPayload => s !== undefined);
  const lineSeries = (lineGroup?.measures ?? [])
    .map((m) => byName.get(m))
    .filter((s): s is SeriesPayload => s !== undefined);

  const bins = series[0]?.bins ?? [];
  const n = bins.length;
  const innerW = box.width - box.pad.left - box.pad.right;
  const slot = n > 0 ? innerW / n : innerW;

  const stacked = encoding.chart === "stacked";
  let barMax: number;
  if (stacked) {
    barMax = 0;
    for (let b = 0; b < n; b++) {
      let total = 0;
      for (const s of barSeries) total += s.values[b] ?? 0;
      if (total > barMax) barMax = total;
    }
  } else {
    barMax = Math.max(0, ...barSeries.map((s) => maxOf(s.values)));
  }
  const lineMax = Math.max(0, ...lineSeries.map((s) => maxOf(s.values)));
  const yBar = yScale(barMax, box);
  const yLine = yScale(lineMax, box);
  const baseline = yBar(0);

  // axes
  svg.appendChild(svgEl("line", {
    x1: box.pad.left, y1: baseline,
    x2: box.width - box.pad.right, y2: baseline,
    class: "axis",
  }));
  svg.appendChild(svgEl("text", {
    x: 4, y: box.pad.top + 8, class: "axis-label left",
  })).textContent = String(barMax);
  if (lineSeries.length > 0) {
    svg.appendChild(svgEl("text", {
      x: box.width - box.pad.right + 4, y: box.pad.top + 8,
      class: "axis-label right",
    })).textContent = lineMax.toFixed(2);
  }

  const dim = (b: number) =>
    opts.highlight != null && opts.highlight[b] === false;

  // bars
  const groupCount = Math.max(1, stacked ? 1 : barSeries.length);
  const barW = (slot * 0.72) / groupCount;
  for (let b = 0; b < n; b++) {
    const x0 = box.pad.left + b * slot + slot * 0.14;
    let stackBase = 0;
    barSeries.forEach((s, si) => {
      const v = s.values[b];
      if (v === null || v === undefined) return;
      let y: number;
      let h: number;
      let x: number;
      if (stacked) {
        y = yBar(stackBase + v);
        h = yBar(stackBase) - y;
        x = x0;
        stackBase += v;
      } else {
        y = yBar(v);
        h = baseline - y;
        x = x0 + si * barW;
      }
      const rect = svgEl("rect", {
        x, y, width: Math.max(barW, 1), height: Math.max(h, 0),
        fill: colorFor(encoding.palette[s.measure] ?? si),
        class: `bar measure-${s.measure} bin-${b}`
          + (dim(b) ? " dimmed" : ""),
        "data-bin": b,
        "data-measure": s.measure,
      });
      if (opts.onBinClick) {
        rect.addEventListener("click", () => opts.onBinClick?.(b));
      }
      svg.appendChild(rect);
    });
    if (n <= 12 || b % 3 === 0) {
      const label = svgEl("text", {
        x: box.pad.left + b * slot + slot / 2,
        y: box.height - 10,
        class: "tick",
        "text-anchor": "middle",
      });
      label.textContent = series[0]?.labels[b] ?? "";
      svg.appendChild(label);
    }
  }

  // line overlay on the right axis
  for (const s of lineSeries) {
    const pts: string[] = [];
    s.values.forEach((v, b) => {
      if (v === null) return;
      const x = box.pad.left + b * slot + slot / 2;
      pts.push(`${x},${yLine(v)}`);
    });
    if (pts.length > 0) {
      svg.appendChild(svgEl("polyline", {
        points: pts.join(" "),
        fill: "none",
        "stroke-width": 2,
        stroke: colorFor(encoding.palette[s.measure] ?? 0),
        class: `line measure-${s.measure}`,
      }));
    }
  }

  container.replaceChildren(svg);
  return svg;
}

export interface PieOptions {
  onSlice?: (entry: { value: unknown; label: string }) => void;
}

/** Pie of a server distribution. Hovering a slice shows the share as an
 * integer percentage in the centre label. */
export function renderPie(
  container: HTMLElement,
  dist: DistributionPayload,
  opts: PieOptions = {},
): SVGSVGElement {
  const size = 180;
  const r = 70;
  const cx = size / 2;
  const cy = size / 2;
  const svg = svgEl("svg", {
    viewBox: `0 0 ${size} ${size}`,
    class: "chart pie-svg",
    role: "img",
  });
  const hover = svgEl("text", {
    x: cx, y: cy + 4,
    class: "pie-hover",
    "text-anchor": "middle",
  });

  let angle = -Math.PI / 2;
  dist.entries.forEach((entry, i) => {
    const sweep = entry.share * 2 * Math.PI;
    const a0 = angle;
    const a1 = angle + sweep;
    angle = a1;
    if (entry.share <= 0) return;
    const x0 = cx + r * Math.cos(a0);
    const y0 = cy + r * Math.sin(a0);
    const x1 = cx + r * Math.cos(a1);
    const y1 = cy + r * Math.sin(a1);
    const large = sweep > Math.PI ? 1 : 0;
    const d = entry.share >= 0.999999
      ? `M ${cx - r} ${cy} A ${r} ${r} 0 1 1 ${cx + r} ${cy}`
        + ` A ${r} ${r} 0 1 1 ${cx - r} ${cy}`
      : `M ${cx} ${cy} L ${x0} ${y0}`
        + ` A ${r} ${r} 0 ${large} 1 ${x1} ${y1} Z`;
    const path = svgEl("path", {
      d,
      fill: colorFor(i),
      class: "slice",
      "data-label": entry.label,
    });
    const title = svgEl("title");
    title.textContent = `${entry.label}: ${entry.count}`;
    path.appendChild(title);
    path.addEventListener("mouseenter", () => {
      hover.textContent = `${Math.round(entry.share * 100)}%`;
    });
    path.addEventListener("mouseleave", () => {
      hover.textContent = "";
    });
    if (opts.onSlice) {
      path.addEventListener("click", () =>
        opts.onSlice?.({ value: entry.value, label: entry.label }));
    }
    svg.appendChild(path);
  });
  svg.appendChild(hover);
  container.replaceChildren(svg);
  return svg;
}

/** One quantity tab: a single bar series with an optional selected-cohort
 * overlay from a linked update; non-overlay bars go translucent. */
export function renderQuantityBars(
  container: HTMLElement,
  series: SeriesPayload,
  paletteIndex: number,
  overlay: SeriesPayload | null = null,
): SVGSVGElement {
  const box: Box = {
    width: 560, height: 170,
    pad: { top: 10, right: 12, bottom: 30, left: 42 },
  };
  const svg = svgEl("svg", {
    viewBox: `0 0 ${box.width} ${box.height}`,
    class: "chart quantity-svg",
    role: "img",
  });
  const top = Math.max(maxOf(series.values), maxOf(overlay?.values ?? []));
  const y = yScale(top, box);
  const baseline = y(0);
  const n = series.bins.length;
  const innerW = box.width - box.pad.left - box.pad.right;
  const slot = n > 0 ? innerW / n : innerW;
  svg.appendChild(svgEl("line", {
    x1: box.pad.left, y1: baseline,
    x2: box.width - box.pad.right, y2: baseline,
    class: "axis",
  }));
  svg.appendChild(svgEl("text", {
    x: 4, y: box.pad.top + 8, class: "axis-label left",
  })).textContent = top % 1 === 0 ? String(top) : top.toFixed(2);
  series.values.forEach((v, b) => {
    if (v === null) return;
    const x = box.pad.left + b * slot + slot * 0.2;
    const rect = svgEl("rect", {
      x, y: y(v),
      width: slot * 0.6, height: Math.max(baseline - y(v), 0),
      fill: colorFor(paletteIndex),
      class: `bar bin-${b}` + (overlay ? " dimmed" : ""),
      "data-bin": b,
    });
    svg.appendChild(rect);
  });
  if (overlay) {
    overlay.values.forEach((v, b) => {
      if (v === null) return;
      const x = box.pad.left + b * slot + slot * 0.3;
      svg.appendChild(svgEl("rect", {
        x, y: y(v),
        width: slot * 0.4, height: Math.max(baseline - y(v), 0),
        fill: colorFor(paletteIndex),
        class: `bar overlay bin-${b}`,
        "data-bin": b,
      }));
    });
  }
  container.replaceChildren(svg);
  return svg;
}

/** Times view: one line per context year for each measure at the
 * granularity; older years fade. */
export function renderTimesLines(
  container: HTMLElement,
  measures: Record<string, SeriesPayload[]>,
  palette: Record<string, number>,
): SVGSVGElement {
  const box: Box = {
    width: 560, height: 200,
    pad: { top: 12, right: 12, bottom: 26, left: 42 },
  };
  const svg = svgEl("svg", {
    viewBox: `0 0 ${box.width} ${box.height}`,
    class: "chart times-svg",
    role: "img",
  });
  let top = 0;
  for (const runs of Object.values(measures))
    for (const s of runs) top = Math.max(top, maxOf(s.values));
  const y = yScale(top, box);
  const baseline = y(0);
  svg.appendChild(svgEl("line", {
    x1: box.pad.left, y1: baseline,
    x2: box.width - box.pad.right, y2: baseline,
    class: "axis",
  }));
  svg.appendChild(svgEl("text", {
    x: 4, y: box.pad.top + 8, class: "axis-label left",
  })).textContent = String(top);
  const innerW = box.width - box.pad.left - box.pad.right;
  for (const [name, runs] of Object.entries(measures)) {
    runs.forEach((s, yi) => {
      const n = s.bins.length;
      const slot = n > 1 ? innerW / (n - 1) : innerW;
      const pts: string[] = [];
      s.values.forEach((v, b) => {
        if (v === null) return;
        pts.push(`${box.pad.left + b * slot},${y(v)}`);
      });
      if (pts.length === 0) return;
      const year = s.bins[0]?.slice(0, 4) ?? String(yi);
      const line = svgEl("polyline", {
        points: pts.join(" "),
        fill: "none",
        stroke: colorFor(palette[name] ?? 0),
        "stroke-width": yi === runs.length - 1 ? 2.5 : 1.2,
        opacity: 0.45 + (0.55 * (yi + 1)) / runs.length,
        class: `line measure-${name} year-${year}`,
      });
      const title = svgEl("title");
      title.textContent = `${name} ${year}`;
      line.appendChild(title);
      svg.appendChild(line);
    });
  }
  container.replaceChildren(svg);
  return svg;
}
