/** Wire types of the prediction server. Field names are bit-exact. */

export type MemLevel = "L1" | "L2" | "HBM";

export const NUMERIC_METRICS = [
  "L1_Cache_Arithmetic_Intensity",
  "L2_Cache_Arithmetic_Intensity",
  "HBM_Arithmetic_Intensity",
  "L1_Cache_GFLOPS",
  "L2_Cache_GFLOPS",
  "HBM_GFLOPS",
  "L1_Cache_Bandwidth",
  "L2_Cache_Bandwidth",
  "L2_Fabric_Write_BW",
  "L2_Fabric_Read_BW",
  "L1_Cache_Hit_Rate",
  "L2_Cache_Hit_Rate",
] as const;

export type MetricName = (typeof NUMERIC_METRICS)[number];

export interface PredictRequestBody {
  source: string;
  architecture: string;
  compiler_flags: string;
  backend?: string;
  request_id: number;
}

export interface RooflinePointWire {
  level: MemLevel;
  ai: number;
  gflops: number;
}

export interface PredictResponseBody {
  request_id: number;
  backend: string;
  latency_ms: number;
  normalized: Record<string, string>;
  physical: Record<string, { value: number; unit: string }>;
  roofline: RooflinePointWire[];
  warnings: string[];
}

export interface MachinePeaksWire {
  peak_gflops: number;
  bandwidth_gbps: Record<MemLevel, number>;
}

export interface BackendDescriptor {
  id: string;
  kind: string;
  architectures: string[];
  healthy: boolean;
  peaks?: Record<string, MachinePeaksWire>;
}

export interface BackendsResponse {
  backends: BackendDescriptor[];
  default: string;
}

/** Server error payload (4xx/5xx bodies). */
export interface ErrorBody {
  error: { kind: string; message: string; [k: string]: unknown };
}

export class ServerError extends Error {
  constructor(
    public readonly status: number,
    public readonly kind: string,
    message: string,
  ) {
    super(message);
  }
}
