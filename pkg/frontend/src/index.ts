export {
  SchemaError,
  loadLedger,
  loadSnapshot,
  loadSnapshotDir,
  loadDecayReport,
  tryLoadDecayReport,
  parsePlotSpec,
  plotSpec,
  LEDGER_COLUMNS,
} from "./schema.js";
export type { DecayReport, LedgerRow, Loaded, PlotSpec, Snapshot } from "./schema.js";
export { renderPlot, renderEnergy, renderTail, renderWaterfall, renderBand } from "./plots.js";
export type { RenderResult } from "./plots.js";
export { main } from "./cli.js";
