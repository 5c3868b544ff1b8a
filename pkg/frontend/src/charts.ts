// SVG chart builders. Pure string-in string-out so they are trivially
// testable; every rendered number comes straight from the API series.

import { escapeHtml, fmtSigned } from "./format";

const POS = "#1565c0";
const NEG = "#c62828";

export interface BarDatum {
  label: string;
  value: number;
}

/** Horizontal diverging bar chart for signed attributions. */
export function shapBarChart(
  features: string[],
  attributions: number[],
  width = 560,
): string {
  const rowH = 20;
  const labelW = 190;
  const height = features.length * rowH + 8;
  const span = Math.max(...attributions.map(Math.abs), 1e-9);
  const plotW = width - labelW - 70;
  const zeroX = labelW + plotW / 2;
  const scale = plotW / 2 / span;

  const rows = features.map((name, i) => {
    const v = attributions[i];
    const y = 4 + i * rowH;
    const w = Math.abs(v) * scale;
    const x = v >= 0 ? zeroX : zeroX - w;
    const fill = v >= 0 ? POS : NEG;
    return (
      `<text x="${labelW - 6}" y="${y + 14}" text-anchor="end" font-size="11">` +
      `${escapeHtml(name)}</text>` +
      `<rect class="shap-bar" data-feature="${escapeHtml(name)}" ` +
      `data-value="${v}" x="${x.toFixed(2)}" y="${y + 3}" ` +
      `width="${Math.max(w, 0.5).toFixed(2)}" height="${rowH - 8}" fill="${fill}"/>` +
      `<text x="${(v >= 0 ? zeroX + w + 4 : zeroX - w - 4).toFixed(2)}" ` +
      `y="${y + 14}" font-size="10" fill="#555" ` +
      `text-anchor="${v >= 0 ? "start" : "end"}">${fmtSigned(v)}</text>`
    );
  });
  const axis =
    `<line x1="${zeroX}" y1="0" x2="${zeroX}" y2="${height}" ` +
    `stroke="#b9bec6" stroke-width="1"/>`;
  return (
    `<svg viewBox="0 0 ${width} ${height}" width="${width}" height="${height}" ` +
    `role="img" class="shap-chart">${axis}${rows.join("")}</svg>`
  );
}

/** Vertical bar chart used for weekly activity and grade series. */
export function barChart(
  data: BarDatum[],
  opts: { width?: number; height?: number; color?: string; maxValue?: number } = {},
): string {
  const width = opts.width ?? 560;
  const height = opts.height ?? 160;
  const color = opts.color ?? POS;
  if (data.length === 0) {
    return `<svg viewBox="0 0 ${width} ${height}" width="${width}" height="${height}"><text x="8" y="20" fill="#888" font-size="12">no data</text></svg>`;
  }
  const top = 8;
  const bottom = 34;
  const plotH = height - top - bottom;
  const max = opts.maxValue ?? Math.max(...data.map((d) => d.value), 1e-9);
  const step = width / data.length;
  const barW = Math.max(step * 0.7, 2);

  const bars = data.map((d, i) => {
    const h = (d.value / max) * plotH;
    const x = i * step + (step - barW) / 2;
    const y = top + plotH - h;
    return (
      `<rect class="series-bar" data-label="${escapeHtml(d.label)}" ` +
      `data-value="${d.value}" x="${x.toFixed(2)}" y="${y.toFixed(2)}" ` +
      `width="${barW.toFixed(2)}" height="${Math.max(h, 0).toFixed(2)}" fill="${color}"/>` +
      `<text x="${(i * step + step / 2).toFixed(2)}" y="${height - 20}" ` +
      `text-anchor="middle" font-size="9" fill="#666" ` +
      `transform="rotate(35 ${(i * step + step / 2).toFixed(2)} ${height - 20})">` +
      `${escapeHtml(d.label)}</text>`
    );
  });
  return (
    `<svg viewBox="0 0 ${width} ${height}" width="${width}" height="${height}" ` +
    `role="img">${bars.join("")}</svg>`
  );
}

/** Dependence curve with a dashed baseline and vertical threshold markers. */
export function dependenceChart(
  grid: number[],
  values: number[],
  baseline: number,
  thresholds: number[],
  feature: string,
  width = 560,
  height = 200,
): string {
  if (grid.length === 0) {
    return `<svg viewBox="0 0 ${width} ${height}" width="${width}" height="${height}"><text x="8" y="20" fill="#888" font-size="12">no data</text></svg>`;
  }
  const padL = 44;
  const padR = 12;
  const padT = 10;
  const padB = 30;
  const x0 = Math.min(...grid);
  const x1 = Math.max(...grid);
  const xSpan = x1 - x0 || 1;
  const lo = Math.min(...values, baseline);
  const hi = Math.max(...values, baseline);
  const ySpan = hi - lo || 1;
  const sx = (x: number) => padL + ((x - x0) / xSpan) * (width - padL - padR);
  const sy = (y: number) =>
    padT + (1 - (y - lo) / ySpan) * (height - padT - padB);

  const path = grid
    .map((g, i) => `${i === 0 ? "M" : "L"}${sx(g).toFixed(2)},${sy(values[i]).toFixed(2)}`)
    .join(" ");
  const base =
    `<line class="baseline" x1="${padL}" y1="${sy(baseline).toFixed(2)}" ` +
    `x2="${width - padR}" y2="${sy(baseline).toFixed(2)}" ` +
    `stroke="#888" stroke-dasharray="5 4"/>`;
  const marks = thresholds
    .map(
      (t) =>
        `<line class="threshold" data-x="${t}" x1="${sx(t).toFixed(2)}" ` +
        `y1="${padT}" x2="${sx(t).toFixed(2)}" y2="${height - padB}" ` +
        `stroke="${NEG}" stroke-width="1.5"/>`,
    )
    .join("");
  const labels =
    `<text x="${padL}" y="${height - 8}" font-size="10" fill="#666">${x0.toFixed(1)}</text>` +
    `<text x="${width - padR}" y="${height - 8}" text-anchor="end" font-size="10" fill="#666">${x1.toFixed(1)}</text>` +
    `<text x="${width / 2}" y="${height - 8}" text-anchor="middle" font-size="10" fill="#666">${escapeHtml(feature)}</text>`;
  return (
    `<svg viewBox="0 0 ${width} ${height}" width="${width}" height="${height}" role="img">` +
    `${base}<path d="${path}" fill="none" stroke="${POS}" stroke-width="1.6"/>` +
    `${marks}${labels}</svg>`
  );
}
