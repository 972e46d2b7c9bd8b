// Pure SVG chart builders. Every rendered value is lifted verbatim from
// an API response; the only arithmetic here is pixel geometry.

import type { AnalysisReport, BurndownSeries } from './api.js';

const W = 460;
const H = 240;
const PAD = 36;

function esc(text: string): string {
  return text.replace(/&/g, '&amp;').replace(/</g, '&lt;').replace(/>/g, '&gt;');
}

export interface LineChart {
  svg: string;
  values: number[]; // exactly the API's remaining_hours sequence
  labels: string[];
}

export function burndownChart(series: BurndownSeries): LineChart {
  const values = series.points.map((p) => p.remaining_hours);
  const labels = series.points.map((p) => p.day);
  const maxY = Math.max(...values, 1);
  const stepX = values.length > 1 ? (W - 2 * PAD) / (values.length - 1) : 0;
  const coords = values.map((v, i) => {
    const x = PAD + i * stepX;
    const y = H - PAD - (v / maxY) * (H - 2 * PAD);
    return `${x.toFixed(1)},${y.toFixed(1)}`;
  });
  const points = coords
    .map(
      (c, i) =>
        `<circle cx="${c.split(',')[0]}" cy="${c.split(',')[1]}" r="3"><title>${esc(
          labels[i],
        )}: ${values[i]}h</title></circle>`,
    )
    .join('');
  const svg =
    `<svg viewBox="0 0 ${W} ${H}" class="chart burndown" role="img" aria-label="burndown">` +
    `<line x1="${PAD}" y1="${H - PAD}" x2="${W - PAD}" y2="${H - PAD}" class="axis"/>` +
    `<line x1="${PAD}" y1="${PAD}" x2="${PAD}" y2="${H - PAD}" class="axis"/>` +
    `<polyline fill="none" class="series" points="${coords.join(' ')}"/>` +
    points +
    `</svg>`;
  return { svg, values, labels };
}

export interface HistogramBar {
  x0: number;
  x1: number;
  count: number;
}

/** Fixed-width binning over [lo, hi); purely presentational. */
export function histogramBins(values: number[], binCount = 8): HistogramBar[] {
  if (values.length === 0) return [];
  const lo = Math.min(...values);
  const hi = Math.max(...values);
  const width = hi > lo ? (hi - lo) / binCount : 1;
  const bars: HistogramBar[] = Array.from({ length: binCount }, (_, i) => ({
    x0: lo + i * width,
    x1: lo + (i + 1) * width,
    count: 0,
  }));
  for (const v of values) {
    let idx = Math.floor((v - lo) / width);
    if (idx >= binCount) idx = binCount - 1;
    bars[idx].count += 1;
  }
  return bars;
}

export interface Histogram {
  svg: string;
  values: number[]; // exactly the API's per-group gains
  bars: HistogramBar[];
}

export function gainHistogram(gains: number[], title: string): Histogram {
  const bars = histogramBins(gains);
  const maxCount = Math.max(...bars.map((b) => b.count), 1);
  const barW = (W - 2 * PAD) / Math.max(bars.length, 1);
  const rects = bars
    .map((b, i) => {
      const h = (b.count / maxCount) * (H - 2 * PAD);
      const x = PAD + i * barW;
      const y = H - PAD - h;
      return (
        `<rect x="${x.toFixed(1)}" y="${y.toFixed(1)}" width="${(barW - 2).toFixed(1)}" ` +
        `height="${h.toFixed(1)}"><title>[${b.x0.toFixed(2)}, ${b.x1.toFixed(2)}): ${b.count}</title></rect>`
      );
    })
    .join('');
  const svg =
    `<svg viewBox="0 0 ${W} ${H}" class="chart histogram" role="img" aria-label="${esc(title)}">` +
    `<line x1="${PAD}" y1="${H - PAD}" x2="${W - PAD}" y2="${H - PAD}" class="axis"/>` +
    rects +
    `</svg>`;
  return { svg, values: [...gains], bars };
}

export interface VerdictBadge {
  variant: 'pooled' | 'welch';
  significant: boolean;
  text: string;
}

/** Badge content is read straight off the report (p vs alpha, variant). */
export function verdictBadge(report: AnalysisReport): VerdictBadge {
  const significant = report.mean_test.p < report.alpha;
  return {
    variant: report.mean_test.variant,
    significant,
    text: `${report.mean_test.variant} t-test | p=${report.mean_test.p.toFixed(3)} | ${
      significant ? 'significant' : 'not significant'
    }`,
  };
}

export interface StatsRow {
  group: string;
  M: number;
  ME: number;
  SD: number | null;
  n: number;
}

export function groupRows(report: AnalysisReport): StatsRow[] {
  return Object.entries(report.groups).map(([group, st]) => ({
    group,
    M: st.M,
    ME: st.ME,
    SD: st.SD,
    n: st.n,
  }));
}
