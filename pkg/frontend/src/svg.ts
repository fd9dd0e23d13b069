/**
 * Minimal deterministic SVG assembly: fixed margins, d3 scales for ticks,
 * two-decimal coordinates so identical inputs give identical bytes.
 */

import { scaleLinear, scaleLog, type ScaleContinuousNumeric } from "d3-scale";

export type ScaleKind = "linear" | "log";
export type Scale = ScaleContinuousNumeric<number, number>;

export const MARGIN = { top: 34, right: 18, bottom: 42, left: 66 } as const;

export function fmt(value: number): string {
  const rounded = Math.round(value * 100) / 100;
  return Object.is(rounded, -0) ? "0" : String(rounded);
}

export function esc(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

/** Pad a degenerate or near-degenerate domain so flat data still renders. */
export function paddedDomain(lo: number, hi: number): [number, number] {
  const scale = Math.max(Math.abs(lo), Math.abs(hi), 1e-300);
  const span = hi - lo;
  if (span > 1e-12 * scale) {
    return [lo - 0.04 * span, hi + 0.04 * span];
  }
  const pad = Math.max(0.05 * scale, 1e-300);
  const mid = 0.5 * (lo + hi);
  return [mid - pad, mid + pad];
}

export function makeScale(kind: ScaleKind, domain: [number, number], range: [number, number], what: string): Scale {
  if (kind === "log") {
    if (domain[0] <= 0 || domain[1] <= 0) {
      throw new Error(`log scale for ${what} requires positive values, domain is [${domain[0]}, ${domain[1]}]`);
    }
    return scaleLog(domain, range);
  }
  return scaleLinear(domain, range);
}

export class Svg {
  private readonly parts: string[] = [];

  constructor(
    readonly width: number,
    readonly height: number,
  ) {}

  raw(element: string): void {
    this.parts.push(element);
  }

  line(x1: number, y1: number, x2: number, y2: number, style: string): void {
    this.raw(`<line x1="${fmt(x1)}" y1="${fmt(y1)}" x2="${fmt(x2)}" y2="${fmt(y2)}" ${style}/>`);
  }

  rect(x: number, y: number, w: number, h: number, style: string): void {
    this.raw(`<rect x="${fmt(x)}" y="${fmt(y)}" width="${fmt(w)}" height="${fmt(h)}" ${style}/>`);
  }

  circle(cx: number, cy: number, r: number, style: string): void {
    this.raw(`<circle cx="${fmt(cx)}" cy="${fmt(cy)}" r="${fmt(r)}" ${style}/>`);
  }

  text(x: number, y: number, content: string, style: string): void {
    this.raw(`<text x="${fmt(x)}" y="${fmt(y)}" ${style}>${esc(content)}</text>`);
  }

  polyline(points: Array<[number, number]>, style: string, className: string): void {
    const coords = points.map(([x, y]) => `${fmt(x)},${fmt(y)}`).join(" ");
    this.raw(`<polyline class="${className}" points="${coords}" ${style}/>`);
  }

  render(): string {
    return [
      `<svg xmlns="http://www.w3.org/2000/svg" width="${this.width}" height="${this.height}" viewBox="0 0 ${this.width} ${this.height}" font-family="Helvetica, Arial, sans-serif">`,
      `<rect x="0" y="0" width="${this.width}" height="${this.height}" fill="white"/>`,
      ...this.parts,
      "</svg>",
    ].join("\n");
  }
}

export interface Frame {
  svg: Svg;
  x0: number;
  x1: number;
  y0: number;
  y1: number;
}

export function newFrame(width: number, height: number, title: string): Frame {
  const svg = new Svg(width, height);
  const frame = {
    svg,
    x0: MARGIN.left,
    x1: width - MARGIN.right,
    y0: height - MARGIN.bottom,
    y1: MARGIN.top,
  };
  svg.text(width / 2, 20, title, 'text-anchor="middle" font-size="14" fill="#111"');
  return frame;
}

const AXIS_STYLE = 'stroke="#333" stroke-width="1"';
const GRID_STYLE = 'stroke="#ddd" stroke-width="0.5"';
const TICK_LABEL = 'font-size="10" fill="#333"';

export function drawAxes(frame: Frame, x: Scale, y: Scale, xLabel: string, yLabel: string): void {
  const { svg, x0, x1, y0, y1 } = frame;
  for (const tick of x.ticks(6)) {
    const px = x(tick);
    svg.line(px, y0, px, y1, GRID_STYLE);
    svg.line(px, y0, px, y0 + 4, AXIS_STYLE);
    svg.text(px, y0 + 16, x.tickFormat(6)(tick), `text-anchor="middle" ${TICK_LABEL}`);
  }
  for (const tick of y.ticks(6)) {
    const py = y(tick);
    svg.line(x0, py, x1, py, GRID_STYLE);
    svg.line(x0 - 4, py, x0, py, AXIS_STYLE);
    svg.text(x0 - 7, py + 3, y.tickFormat(6)(tick), `text-anchor="end" ${TICK_LABEL}`);
  }
  svg.line(x0, y0, x1, y0, AXIS_STYLE);
  svg.line(x0, y0, x0, y1, AXIS_STYLE);
  svg.text((x0 + x1) / 2, y0 + 32, xLabel, 'text-anchor="middle" font-size="11" fill="#111"');
  svg.raw(
    `<text x="${fmt(18)}" y="${fmt((y0 + y1) / 2)}" text-anchor="middle" font-size="11" fill="#111" transform="rotate(-90 18 ${fmt((y0 + y1) / 2)})">${esc(yLabel)}</text>`,
  );
}

/** Two-stop color ramp for waterfall cells (white at 0, deep blue at 1). */
export function ramp(fraction: number): string {
  const f = Math.min(1, Math.max(0, fraction));
  const channel = (from: number, to: number) => Math.round(from + (to - from) * f);
  return `rgb(${channel(255, 26)},${channel(255, 58)},${channel(255, 148)})`;
}
