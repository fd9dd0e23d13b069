/**
 * The four plot kinds over simulator artifacts.  Read-only consumers: no
 * numerical recomputation beyond axis transforms and subsampling.
 */

import { dirname, join } from "node:path";

import {
  loadDecayReport,
  loadLedger,
  loadSnapshotDir,
  tryLoadDecayReport,
  SchemaError,
  type PlotSpec,
} from "./schema.js";
import { drawAxes, makeScale, newFrame, paddedDomain, ramp, type Frame, type Scale, type ScaleKind } from "./svg.js";

export interface RenderResult {
  svg: string;
  warnings: string[];
}

const SERIES_STYLE = 'fill="none" stroke="#1a3a94" stroke-width="1.5"';
const NOTE_STYLE = 'text-anchor="end" font-size="11" fill="#444"';

function curveScales(
  spec: PlotSpec,
  frame: Frame,
  xs: number[],
  ys: number[],
): { x: Scale; y: Scale } {
  const xDomain: [number, number] = [Math.min(...xs), Math.max(...xs)];
  const rawY: [number, number] = [Math.min(...ys), Math.max(...ys)];
  const yDomain = spec.yscale === "log" ? ([rawY[0] / 1.1, rawY[1] * 1.1] as [number, number]) : paddedDomain(...rawY);
  return {
    x: makeScale(spec.xscale, xDomain, [frame.x0, frame.x1], "the x axis"),
    y: makeScale(spec.yscale, yDomain, [frame.y0, frame.y1], "the y axis"),
  };
}

function drawCurve(frame: Frame, x: Scale, y: Scale, xs: number[], ys: number[], className: string): void {
  frame.svg.polyline(
    xs.map((xv, i) => [x(xv), y(ys[i]!)] as [number, number]),
    SERIES_STYLE,
    className,
  );
}

// ── energy ──────────────────────────────────────────────

export function renderEnergy(spec: PlotSpec): RenderResult {
  const { data: rows, warnings } = loadLedger(spec.input);
  const frame = newFrame(spec.width, spec.height, spec.title ?? "H1 energy");
  const ts = rows.map((r) => r.t);
  const es = rows.map((r) => r.E);
  const { x, y } = curveScales(spec, frame, ts, es);
  drawAxes(frame, x, y, "t", "E(t)");
  drawCurve(frame, x, y, ts, es, "series-energy");
  const report = tryLoadDecayReport(join(dirname(spec.input), "decay_report.json"));
  const verdict =
    report === null
      ? "monotonicity: no decay report"
      : `monotone decay: ${report.monotone ? "confirmed" : "violated"} (slack ${report.monotone_slack.toExponential(1)})`;
  frame.svg.text(frame.x1, frame.y1 + 12, verdict, NOTE_STYLE);
  return { svg: frame.svg.render(), warnings };
}

// ── dissipation tail ────────────────────────────────────

export function renderTail(spec: PlotSpec): RenderResult {
  const { data: report, warnings } = loadDecayReport(spec.input);
  if (report.tail === null) {
    throw new SchemaError(spec.input, "tail", "no tail section in the decay report");
  }
  const tail = report.tail;
  const frame = newFrame(spec.width, spec.height, spec.title ?? `windowed dissipation, T=${tail.window}`);
  const ns = tail.integrals.map((_, i) => i);
  const { x, y } = curveScales(spec, frame, ns.length > 1 ? ns : [0, 1], tail.integrals);
  drawAxes(frame, x, y, "window index n", "I_n");
  drawCurve(frame, x, y, ns, tail.integrals, "series-tail");
  for (const [i, value] of tail.integrals.entries()) {
    frame.svg.circle(x(i), y(value), 2.5, 'fill="#1a3a94"');
  }
  const ratio = tail.first > 0 ? (tail.last / tail.first).toExponential(1) : "n/a";
  const verdict = tail.eventually_decreasing
    ? `eventually decreasing from n=${tail.decreasing_from}; I_last/I_0 = ${ratio}`
    : "not eventually decreasing";
  frame.svg.text(frame.x1, frame.y1 + 12, verdict, NOTE_STYLE);
  return { svg: frame.svg.render(), warnings };
}

// ── space-time waterfall ────────────────────────────────

const MAX_CELLS = 200;

function strideIndices(length: number, cap: number): number[] {
  const stride = Math.max(1, Math.ceil(length / cap));
  const picked: number[] = [];
  for (let i = 0; i < length; i += stride) {
    picked.push(i);
  }
  return picked;
}

export function renderWaterfall(spec: PlotSpec): RenderResult {
  if (spec.xscale === "log" || spec.yscale === "log") {
    throw new Error("waterfall supports linear axes only");
  }
  const { data: snapshots, warnings } = loadSnapshotDir(spec.input);
  const first = snapshots[0]!;
  for (const snap of snapshots) {
    if (snap.n !== first.n || snap.domain !== first.domain) {
      throw new SchemaError(spec.input, "snapshots", "snapshots mix grids; one run per waterfall");
    }
  }
  const rows = strideIndices(snapshots.length, MAX_CELLS);
  const cols = strideIndices(first.n, MAX_CELLS);
  let peak = 0;
  for (const i of rows) {
    for (const j of cols) {
      peak = Math.max(peak, Math.abs(snapshots[i]!.values[j]!));
    }
  }
  const frame = newFrame(spec.width, spec.height, spec.title ?? "|u(x, t)|");
  const x = makeScale("linear", [0, first.length], [frame.x0, frame.x1], "the x axis");
  const tMax = snapshots[snapshots.length - 1]!.t;
  const y = makeScale("linear", paddedDomain(first.t, tMax), [frame.y0, frame.y1], "the y axis");
  drawAxes(frame, x, y, "x", "t");
  const cellW = (frame.x1 - frame.x0) / cols.length;
  const cellH = (frame.y0 - frame.y1) / rows.length;
  for (const [r, i] of rows.entries()) {
    const py = frame.y0 - (r + 1) * cellH;
    for (const [c, j] of cols.entries()) {
      const value = Math.abs(snapshots[i]!.values[j]!);
      const fill = ramp(peak > 0 ? value / peak : 0);
      frame.svg.rect(frame.x0 + c * cellW, py, cellW + 0.5, cellH + 0.5, `fill="${fill}" class="waterfall-cell"`);
    }
  }
  frame.svg.text(frame.x1, frame.y1 + 12, `max |u| = ${peak.toExponential(2)}`, NOTE_STYLE);
  return { svg: frame.svg.render(), warnings };
}

// ── band observable trace ───────────────────────────────

export function renderBand(spec: PlotSpec): RenderResult {
  const { data: report, warnings } = loadDecayReport(spec.input);
  const label =
    report.band === null
      ? "boundary traces u(0)^2 + u(L)^2"
      : `band observable over (${report.band[0].toFixed(3)}, ${report.band[1].toFixed(3)})`;
  const frame = newFrame(spec.width, spec.height, spec.title ?? label);
  const { x, y } = curveScales(spec, frame, report.times, report.band_values);
  drawAxes(frame, x, y, "t", "band observable");
  drawCurve(frame, x, y, report.times, report.band_values, "series-band");
  frame.svg.text(
    frame.x1,
    frame.y1 + 12,
    `variant ${report.variant}; target ${report.target.kind} = ${report.target.value.toExponential(2)}`,
    NOTE_STYLE,
  );
  return { svg: frame.svg.render(), warnings };
}

// ── dispatch ────────────────────────────────────────────

export function renderPlot(spec: PlotSpec): RenderResult {
  switch (spec.kind) {
    case "energy":
      return renderEnergy(spec);
    case "tail":
      return renderTail(spec);
    case "waterfall":
      return renderWaterfall(spec);
    case "band":
      return renderBand(spec);
  }
}
