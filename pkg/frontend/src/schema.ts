/**
 * Schemas and loaders for the simulator's file formats.  Strictly read-only:
 * parse, validate, and name the offending column on mismatch.
 */

import { readFileSync, readdirSync } from "node:fs";
import { join } from "node:path";

import Papa from "papaparse";
import { z } from "zod";

/** Structural mismatch in an input file; `column` names the offending entry. */
export class SchemaError extends Error {
  readonly file: string;
  readonly column: string;

  constructor(file: string, column: string, message: string) {
    super(`${file}: column '${column}': ${message}`);
    this.name = "SchemaError";
    this.file = file;
    this.column = column;
  }
}

export interface Loaded<T> {
  data: T;
  warnings: string[];
}

// ── energy ledger ───────────────────────────────────────

export const LEDGER_COLUMNS = ["t", "E", "mean", "D", "cumD", "residual"] as const;
export type LedgerColumn = (typeof LEDGER_COLUMNS)[number];

const finite = (column: string) =>
  z.number({ error: `expected a number in '${column}'` }).refine(Number.isFinite, {
    message: `non-finite value in '${column}'`,
  });

const ledgerRow = z.object({
  t: finite("t"),
  E: finite("E"),
  mean: finite("mean"),
  D: finite("D"),
  cumD: finite("cumD"),
  residual: finite("residual"),
});

export type LedgerRow = z.infer<typeof ledgerRow>;

export function loadLedger(path: string): Loaded<LedgerRow[]> {
  const text = readFileSync(path, "utf8");
  const parsed = Papa.parse<Record<string, unknown>>(text.trim(), {
    header: true,
    dynamicTyping: true,
    skipEmptyLines: true,
  });
  const warnings = parsed.errors.map((e) => `${path}: row ${e.row}: ${e.message}`);
  const fields = parsed.meta.fields ?? [];
  for (const expected of LEDGER_COLUMNS) {
    if (!fields.includes(expected)) {
      throw new SchemaError(path, expected, "missing from the ledger header");
    }
  }
  for (const extra of fields) {
    if (!(LEDGER_COLUMNS as readonly string[]).includes(extra)) {
      warnings.push(`${path}: column '${extra}': not part of the ledger schema, ignored`);
    }
  }
  const rows: LedgerRow[] = [];
  parsed.data.forEach((record, index) => {
    const result = ledgerRow.safeParse(record);
    if (!result.success) {
      const issue = result.error.issues[0];
      const column = String(issue?.path[0] ?? "<row>");
      throw new SchemaError(path, column, `row ${index + 1}: ${issue?.message ?? "invalid"}`);
    }
    rows.push(result.data);
  });
  if (rows.length === 0) {
    throw new SchemaError(path, "t", "ledger has no data rows");
  }
  return { data: rows, warnings };
}

// ── field snapshots ─────────────────────────────────────

export interface Snapshot {
  t: number;
  domain: "torus" | "interval";
  n: number;
  length: number;
  x: number[];
  values: number[];
}

const SNAPSHOT_HEADER =
  /^# t=(?<t>\S+) domain=(?<domain>torus|interval) n=(?<n>\d+) L=(?<length>\S+)$/;

export function loadSnapshot(path: string): Loaded<Snapshot> {
  const text = readFileSync(path, "utf8");
  const newline = text.indexOf("\n");
  const header = newline < 0 ? text : text.slice(0, newline);
  const match = SNAPSHOT_HEADER.exec(header);
  if (match === null || match.groups === undefined) {
    throw new SchemaError(path, "#header", `malformed snapshot header: ${header}`);
  }
  const n = Number(match.groups["n"]);
  const parsed = Papa.parse<unknown[]>(text.slice(newline + 1).trim(), {
    dynamicTyping: true,
    skipEmptyLines: true,
  });
  const warnings = parsed.errors.map((e) => `${path}: row ${e.row}: ${e.message}`);
  const x: number[] = [];
  const values: number[] = [];
  parsed.data.forEach((row, index) => {
    if (row.length !== 2) {
      throw new SchemaError(path, "x,value", `row ${index + 1}: expected 2 columns, got ${row.length}`);
    }
    const [xv, uv] = row;
    if (typeof xv !== "number" || !Number.isFinite(xv)) {
      throw new SchemaError(path, "x", `row ${index + 1}: expected a finite number, got ${xv}`);
    }
    if (typeof uv !== "number" || !Number.isFinite(uv)) {
      throw new SchemaError(path, "value", `row ${index + 1}: expected a finite number, got ${uv}`);
    }
    x.push(xv);
    values.push(uv);
  });
  if (x.length !== n) {
    throw new SchemaError(path, "x,value", `header declares n=${n} rows, found ${x.length}`);
  }
  return {
    data: {
      t: Number(match.groups["t"]),
      domain: match.groups["domain"] as "torus" | "interval",
      n,
      length: Number(match.groups["length"]),
      x,
      values,
    },
    warnings,
  };
}

/** All snapshots of a run directory, ordered by time. */
export function loadSnapshotDir(dir: string): Loaded<Snapshot[]> {
  const files = readdirSync(dir)
    .filter((name) => /^snap_\d+\.csv$/.test(name))
    .sort();
  if (files.length === 0) {
    throw new SchemaError(dir, "snapshots", "no snap_*.csv files in the directory");
  }
  const snapshots: Snapshot[] = [];
  const warnings: string[] = [];
  for (const name of files) {
    const one = loadSnapshot(join(dir, name));
    snapshots.push(one.data);
    warnings.push(...one.warnings);
  }
  snapshots.sort((a, b) => a.t - b.t);
  return { data: snapshots, warnings };
}

// ── decay report ────────────────────────────────────────

const tailSection = z.object({
  window: z.number(),
  integrals: z.array(z.number()),
  eventually_decreasing: z.boolean(),
  decreasing_from: z.number().int(),
  slack: z.number(),
  first: z.number(),
  last: z.number(),
});

const availableReport = z.object({
  available: z.literal(true),
  variant: z.enum(["A", "B", "C"]),
  window: z.number(),
  times: z.array(z.number()),
  target: z.object({ kind: z.string(), value: z.number() }),
  norms: z.record(z.string(), z.array(z.number())),
  h1_distance: z.array(z.number()),
  band: z.tuple([z.number(), z.number()]).nullable(),
  band_values: z.array(z.number()),
  monotone: z.boolean(),
  monotone_slack: z.number(),
  limit_estimate: z.number(),
  tail: tailSection.nullable(),
});

const unavailableReport = z.object({
  available: z.literal(false),
  reason: z.string(),
});

const decayReport = z.discriminatedUnion("available", [availableReport, unavailableReport]);

export type DecayReport = z.infer<typeof availableReport>;

export function loadDecayReport(path: string): Loaded<DecayReport> {
  let raw: unknown;
  try {
    raw = JSON.parse(readFileSync(path, "utf8"));
  } catch (err) {
    throw new SchemaError(path, "<json>", `invalid JSON: ${(err as Error).message}`);
  }
  const result = decayReport.safeParse(raw);
  if (!result.success) {
    const issue = result.error.issues[0];
    const column = issue?.path.map(String).join(".") || "<document>";
    throw new SchemaError(path, column, issue?.message ?? "invalid");
  }
  if (!result.data.available) {
    throw new SchemaError(path, "available", `report unavailable: ${result.data.reason}`);
  }
  return { data: result.data, warnings: [] };
}

/** Optional companion report: absent file is fine, malformed is not. */
export function tryLoadDecayReport(path: string): DecayReport | null {
  let text: string;
  try {
    text = readFileSync(path, "utf8");
  } catch {
    return null;
  }
  const raw = JSON.parse(text) as { available?: boolean };
  if (raw.available === false) {
    return null;
  }
  return loadDecayReport(path).data;
}

// ── plot spec ───────────────────────────────────────────

const scale = z.enum(["linear", "log"]);

export const plotSpec = z
  .object({
    kind: z.enum(["energy", "tail", "waterfall", "band"]),
    input: z.string().min(1),
    output: z.string().min(1),
    xscale: scale.default("linear"),
    yscale: scale.default("linear"),
    title: z.string().optional(),
    width: z.number().int().positive().default(720),
    height: z.number().int().positive().default(432),
  })
  .strict();

export type PlotSpec = z.infer<typeof plotSpec>;

export function parsePlotSpec(path: string): PlotSpec {
  let raw: unknown;
  try {
    raw = JSON.parse(readFileSync(path, "utf8"));
  } catch (err) {
    throw new SchemaError(path, "<json>", `invalid JSON: ${(err as Error).message}`);
  }
  const result = plotSpec.safeParse(raw);
  if (!result.success) {
    const issue = result.error.issues[0];
    const column = issue?.path.map(String).join(".") || "<document>";
    throw new SchemaError(path, column, issue?.message ?? "invalid");
  }
  return result.data;
}
