/** Minimal deterministic SVG line charts: fixed canvas, fixed palette,
 * coordinates rounded to a fixed precision. No runtime dependencies. */

export interface Point {
  x: number;
  y: number;
  lo?: number;
  hi?: number;
}

export interface Series {
  label: string;
  points: Point[];
}

export interface Chart {
  title: string;
  xlabel: string;
  ylabel: string;
  series: Series[];
}

const WIDTH = 640;
const HEIGHT = 420;
const MARGIN = { left: 70, right: 18, top: 40, bottom: 52 };
const PALETTE = ['#1f77b4', '#d62728', '#2ca02c', '#9467bd', '#ff7f0e', '#8c564b'];

const r2 = (v: number) => (Math.round(v * 100) / 100).toFixed(2);

export function fmt(v: number): string {
  if (!Number.isFinite(v)) return 'nan';
  if (v === 0) return '0';
  const a = Math.abs(v);
  if (a >= 1e4 || a < 1e-3) return v.toExponential(2);
  return String(Number(v.toPrecision(4)));
}

function range(values: number[]): [number, number] {
  const finite = values.filter(Number.isFinite);
  if (!finite.length) return [0, 1];
  let lo = Math.min(...finite);
  let hi = Math.max(...finite);
  if (lo === hi) {
    const pad = Math.max(1, Math.abs(lo) * 0.1);
    lo -= pad;
    hi += pad;
  } else {
    const pad = (hi - lo) * 0.05;
    lo -= pad;
    hi += pad;
  }
  return [lo, hi];
}

export function renderChart(chart: Chart): string {
  const xs: number[] = [];
  const ys: number[] = [];
  for (const s of chart.series) {
    for (const p of s.points) {
      xs.push(p.x);
      ys.push(p.y);
      if (p.lo !== undefined) ys.push(p.lo);
      if (p.hi !== undefined) ys.push(p.hi);
    }
  }
  const [x0, x1] = range(xs);
  const [y0, y1] = range(ys);
  const plotW = WIDTH - MARGIN.left - MARGIN.right;
  const plotH = HEIGHT - MARGIN.top - MARGIN.bottom;
  const sx = (x: number) => MARGIN.left + ((x - x0) / (x1 - x0)) * plotW;
  const sy = (y: number) => MARGIN.top + plotH - ((y - y0) / (y1 - y0)) * plotH;

  const parts: string[] = [];
  parts.push(`<svg xmlns="http://www.w3.org/2000/svg" width="${WIDTH}" height="${HEIGHT}" viewBox="0 0 ${WIDTH} ${HEIGHT}">`);
  parts.push(`<rect width="${WIDTH}" height="${HEIGHT}" fill="white"/>`);
  parts.push(`<text x="${WIDTH / 2}" y="22" text-anchor="middle" font-family="sans-serif" font-size="15">${chart.title}</text>`);

  // frame and ticks
  const fx = MARGIN.left;
  const fy = MARGIN.top;
  parts.push(`<rect x="${fx}" y="${fy}" width="${plotW}" height="${plotH}" fill="none" stroke="#444" stroke-width="1"/>`);
  const nticks = 5;
  for (let i = 0; i < nticks; i++) {
    const tx = x0 + ((x1 - x0) * i) / (nticks - 1);
    const px = sx(tx);
    parts.push(`<line x1="${r2(px)}" y1="${fy + plotH}" x2="${r2(px)}" y2="${fy + plotH + 5}" stroke="#444"/>`);
    parts.push(`<text x="${r2(px)}" y="${fy + plotH + 20}" text-anchor="middle" font-family="sans-serif" font-size="11">${fmt(tx)}</text>`);
    const ty = y0 + ((y1 - y0) * i) / (nticks - 1);
    const py = sy(ty);
    parts.push(`<line x1="${fx - 5}" y1="${r2(py)}" x2="${fx}" y2="${r2(py)}" stroke="#444"/>`);
    parts.push(`<text x="${fx - 8}" y="${r2(py + 4)}" text-anchor="end" font-family="sans-serif" font-size="11">${fmt(ty)}</text>`);
    parts.push(`<line x1="${r2(sx(tx))}" y1="${fy}" x2="${r2(sx(tx))}" y2="${fy + plotH}" stroke="#eee"/>`);
    parts.push(`<line x1="${fx}" y1="${r2(py)}" x2="${fx + plotW}" y2="${r2(py)}" stroke="#eee"/>`);
  }
  parts.push(`<text x="${MARGIN.left + plotW / 2}" y="${HEIGHT - 14}" text-anchor="middle" font-family="sans-serif" font-size="13">${chart.xlabel}</text>`);
  parts.push(`<text x="20" y="${MARGIN.top + plotH / 2}" text-anchor="middle" font-family="sans-serif" font-size="13" transform="rotate(-90 20 ${MARGIN.top + plotH / 2})">${chart.ylabel}</text>`);

  chart.series.forEach((series, idx) => {
    const color = PALETTE[idx % PALETTE.length];
    const pts = series.points.filter((p) => Number.isFinite(p.y));
    // whiskers first so the mean line draws on top
    for (const p of pts) {
      if (p.lo !== undefined && p.hi !== undefined && Number.isFinite(p.lo) && Number.isFinite(p.hi)) {
        const px = sx(p.x);
        parts.push(`<line x1="${r2(px)}" y1="${r2(sy(p.lo))}" x2="${r2(px)}" y2="${r2(sy(p.hi))}" stroke="${color}" stroke-width="1" opacity="0.6"/>`);
        parts.push(`<line x1="${r2(px - 4)}" y1="${r2(sy(p.lo))}" x2="${r2(px + 4)}" y2="${r2(sy(p.lo))}" stroke="${color}" stroke-width="1" opacity="0.6"/>`);
        parts.push(`<line x1="${r2(px - 4)}" y1="${r2(sy(p.hi))}" x2="${r2(px + 4)}" y2="${r2(sy(p.hi))}" stroke="${color}" stroke-width="1" opacity="0.6"/>`);
      }
    }
    const coords = pts.map((p) => `${r2(sx(p.x))},${r2(sy(p.y))}`).join(' ');
    if (pts.length > 1) {
      parts.push(`<polyline points="${coords}" fill="none" stroke="${color}" stroke-width="1.8"/>`);
    }
    for (const p of pts) {
      parts.push(`<circle cx="${r2(sx(p.x))}" cy="${r2(sy(p.y))}" r="3" fill="${color}"/>`);
    }
    const ly = MARGIN.top + 14 + idx * 16;
    parts.push(`<line x1="${fx + plotW - 130}" y1="${ly - 4}" x2="${fx + plotW - 110}" y2="${ly - 4}" stroke="${color}" stroke-width="2"/>`);
    parts.push(`<text x="${fx + plotW - 104}" y="${ly}" font-family="sans-serif" font-size="11">${series.label}</text>`);
  });

  parts.push('</svg>');
  return parts.join('\n') + '\n';
}
