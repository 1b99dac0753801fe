/**
 * The request document the host toolkit writes next to the scenario dump.
 * Bounds use null for unbounded sides (JSON has no Infinity literal).
 */

import { BOUND_SENTINEL } from './shader.js';

export interface FillRequest {
  plant: { kind: string; step_size: number };
  x0: number[];
  v_rows: number[];
  j_star: number;
  bounds: { lower: number | null; upper: number | null };
  ss_bounds: { lower: number | null; upper: number | null };
  scenarios: string;
  p_out: string;
  response: string;
  device?: number;
}

export interface FillParams {
  mGrid: number;
  jStar: number;
  stepSize: number;
  x0: [number, number, number];
  vRows: Float32Array;
  lo: number;
  hi: number;
  ssLo: number;
  ssHi: number;
}

function side(value: number | null | undefined, sign: 1 | -1): number {
  if (value === null || value === undefined) return sign * BOUND_SENTINEL;
  if (!Number.isFinite(value)) return sign * BOUND_SENTINEL;
  return value;
}

export function parseRequest(doc: FillRequest): FillParams {
  if (doc.plant?.kind !== 'surrogate-fc') {
    throw new Error(`this kernel only knows the surrogate-fc plant, got ${doc.plant?.kind}`);
  }
  if (!Array.isArray(doc.x0) || doc.x0.length !== 3) {
    throw new Error(`x0 must have 3 states, got ${doc.x0?.length}`);
  }
  if (!Array.isArray(doc.v_rows) || doc.v_rows.length < 1) {
    throw new Error('v_rows must be a nonempty array');
  }
  if (!Number.isInteger(doc.j_star) || doc.j_star < 1) {
    throw new Error(`j_star must be a positive integer, got ${doc.j_star}`);
  }
  return {
    mGrid: doc.v_rows.length,
    jStar: doc.j_star,
    stepSize: doc.plant.step_size,
    x0: [doc.x0[0], doc.x0[1], doc.x0[2]],
    vRows: Float32Array.from(doc.v_rows),
    lo: side(doc.bounds?.lower, -1),
    hi: side(doc.bounds?.upper, 1),
    ssLo: side(doc.ss_bounds?.lower, -1),
    ssHi: side(doc.ss_bounds?.upper, 1),
  };
}
