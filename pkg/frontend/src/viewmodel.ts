/** Pure view-model construction: the panel never mutates prediction values. */

import { ceilingLines, type CeilingLine } from "./roofline.js";
import {
  NUMERIC_METRICS,
  type MachinePeaksWire,
  type MetricName,
  type PredictResponseBody,
  type RooflinePointWire,
} from "./types.js";

export type PanelStatus =
  | { kind: "idle" }
  | { kind: "inflight" }
  | { kind: "error"; message: string };

export interface CounterRow {
  metric: MetricName;
  /** "1638.400 GB/s" or an em dash when absent. */
  physical: string;
  normalized: string;
}

export interface PanelViewModel {
  status: PanelStatus;
  /** Always all 12 metrics, dashes when no data is available. */
  table: CounterRow[];
  rooflinePoints: RooflinePointWire[];
  ceilings: CeilingLine[];
  axes: "log-log";
  backend: string | null;
  latencyMs: number | null;
  warnings: string[];
}

const DASH = "—";

export function buildViewModel(
  response: PredictResponseBody | null,
  status: PanelStatus,
  peaks: MachinePeaksWire | null,
): PanelViewModel {
  const table: CounterRow[] = NUMERIC_METRICS.map((metric) => {
    const phys = response?.physical?.[metric];
    const norm = response?.normalized?.[metric];
    return {
      metric,
      physical: phys ? `${phys.value.toFixed(3)} ${phys.unit}` : DASH,
      normalized: norm ?? DASH,
    };
  });
  return {
    status,
    table,
    rooflinePoints: response ? [...response.roofline] : [],
    ceilings: peaks ? ceilingLines(peaks) : [],
    axes: "log-log",
    backend: response?.backend ?? null,
    latencyMs: response?.latency_ms ?? null,
    warnings: response ? [...response.warnings] : [],
  };
}
