#!/usr/bin/env node
/**
 * bbm-plot <spec.json>: render one figure from simulator artifacts.
 * Exit codes: 0 written, 1 schema mismatch (offending column named on
 * stderr), 2 usage error.
 */

import { mkdirSync, realpathSync, writeFileSync } from "node:fs";
import { dirname } from "node:path";
import { pathToFileURL } from "node:url";

import { renderPlot } from "./plots.js";
import { parsePlotSpec, SchemaError } from "./schema.js";

export function main(argv: string[]): number {
  if (argv.length !== 1 || argv[0] === "-h" || argv[0] === "--help") {
    process.stderr.write("usage: bbm-plot <spec.json>\n");
    return argv[0] === "-h" || argv[0] === "--help" ? 0 : 2;
  }
  const specPath = argv[0]!;
  try {
    const spec = parsePlotSpec(specPath);
    const { svg, warnings } = renderPlot(spec);
    for (const warning of warnings) {
      process.stderr.write(`warning: ${warning}\n`);
    }
    mkdirSync(dirname(spec.output) || ".", { recursive: true });
    writeFileSync(spec.output, svg + "\n");
    process.stdout.write(`wrote ${spec.output} (${spec.kind}, ${warnings.length} warnings)\n`);
    return 0;
  } catch (err) {
    if (err instanceof SchemaError) {
      process.stderr.write(`schema error: ${err.message}\n`);
      return 1;
    }
    process.stderr.write(`error: ${(err as Error).message}\n`);
    return 1;
  }
}

const invokedDirectly = (() => {
  if (process.argv[1] === undefined) {
    return false;
  }
  try {
    return import.meta.url === pathToFileURL(realpathSync(process.argv[1])).href;
  } catch {
    return false;
  }
})();
if (invokedDirectly) {
  process.exit(main(process.argv.slice(2)));
}
