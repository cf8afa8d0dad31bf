/** Roofline geometry for the plot: ceiling curves from machine peaks. */

import type { MachinePeaksWire, MemLevel } from "./types.js";

/** min(peak compute, ai * bandwidth at level) — the attainable ceiling. */
export function attainablePerformance(
  peaks: MachinePeaksWire,
  level: MemLevel,
  ai: number,
): number {
  return Math.min(peaks.peak_gflops, ai * peaks.bandwidth_gbps[level]);
}

export interface CeilingLine {
  level: MemLevel;
  /** [ai, gflops] samples along a log-spaced intensity grid. */
  samples: Array<[number, number]>;
}

const AI_MIN_EXP = -8; // 2^-8 FLOPs/Byte
const AI_MAX_EXP = 12; // 2^12 FLOPs/Byte
const SAMPLES_PER_OCTAVE = 2;

/** Sample each memory level's ceiling over the log AI axis. */
export function ceilingLines(peaks: MachinePeaksWire): CeilingLine[] {
  const levels: MemLevel[] = ["L1", "L2", "HBM"];
  return levels.map((level) => {
    const samples: Array<[number, number]> = [];
    const steps = (AI_MAX_EXP - AI_MIN_EXP) * SAMPLES_PER_OCTAVE;
    for (let i = 0; i <= steps; i++) {
      const ai = 2 ** (AI_MIN_EXP + i / SAMPLES_PER_OCTAVE);
      samples.push([ai, attainablePerformance(peaks, level, ai)]);
    }
    return { level, samples };
  });
}
