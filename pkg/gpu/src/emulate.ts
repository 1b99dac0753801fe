/**
 * Deterministic single-precision CPU emulation of the fill kernel.
 *
 * Every arithmetic result is rounded to float32 with Math.fround, mirroring
 * the shader's straight-line RK4 op for op, so machines without a GPU can
 * still run the runner (--emulate), study single-vs-double drift, and give
 * CI a stable reference. Device results may still differ by a few ulp
 * (hardware tanh and fused multiply-add are implementation-defined); this
 * emulation pins one concrete IEEE-754 interpretation, not the device's.
 */

import { FillParams } from './request.js';
import { ScenarioTensor } from './rgsc.js';
import { STATE_LIMIT } from './shader.js';

const f = Math.fround;

function tanh32(x: number): number {
  return f(Math.tanh(f(x)));
}

export interface EmulateResult {
  /** row-major m_grid x n_sim feasibility bytes */
  p: Uint8Array;
  /** cells whose rollout stopped before j_star steps */
  earlyTerms: number;
}

export function emulateFill(params: FillParams, scen: ScenarioTensor): EmulateResult {
  if (scen.n !== 3) {
    throw new Error(`scenario tensor has ${scen.n} states, plant has 3`);
  }
  if (scen.horizon < params.jStar + 1) {
    throw new Error(`scenario horizon ${scen.horizon} < j_star + 1 = ${params.jStar + 1}`);
  }
  const { mGrid, jStar, vRows, lo, hi, ssLo, ssHi } = params;
  const h = f(params.stepSize);
  const nSim = scen.nSim;
  const p = new Uint8Array(mGrid * nSim);
  let earlyTerms = 0;

  // d[c] = -x[c] + drive, with the drive saturating through tanh on x2
  const rhs = (x: Float64Array, v: number, out: Float64Array) => {
    out[0] = f(f(-x[0]) + tanh32(x[1]));
    out[1] = f(f(-x[1]) + v);
    out[2] = f(f(-2 * x[2]) + x[0]);
  };

  const k1 = new Float64Array(3);
  const k2 = new Float64Array(3);
  const k3 = new Float64Array(3);
  const k4 = new Float64Array(3);
  const tmp = new Float64Array(3);
  const x = new Float64Array(3);
  const halfH = f(0.5 * h);
  const sixthH = f(h / 6);

  for (let i = 0; i < mGrid; i++) {
    const v = f(vRows[i]);
    const ssOk = tanh32(v) >= ssLo && tanh32(v) <= ssHi;
    for (let k = 0; k < nSim; k++) {
      let ok = ssOk;
      x[0] = f(params.x0[0]);
      x[1] = f(params.x0[1]);
      x[2] = f(params.x0[2]);
      if (ok) ok = x[0] >= lo && x[0] <= hi;
      let steps = 0;
      const base = k * scen.horizon * 3;
      for (let j = 0; j < jStar && ok; j++) {
        rhs(x, v, k1);
        for (let c = 0; c < 3; c++) tmp[c] = f(x[c] + f(halfH * k1[c]));
        rhs(tmp, v, k2);
        for (let c = 0; c < 3; c++) tmp[c] = f(x[c] + f(halfH * k2[c]));
        rhs(tmp, v, k3);
        for (let c = 0; c < 3; c++) tmp[c] = f(x[c] + f(h * k3[c]));
        rhs(tmp, v, k4);
        for (let c = 0; c < 3; c++) {
          // same association as the shader: ((k1 + 2*k2) + 2*k3) + k4
          const sum = f(f(f(k1[c] + f(2 * k2[c])) + f(2 * k3[c])) + k4[c]);
          x[c] = f(x[c] + f(sixthH * sum));
          x[c] = f(x[c] + scen.data[base + j * 3 + c]);
        }
        if (Math.max(Math.abs(x[0]), Math.abs(x[1]), Math.abs(x[2])) > STATE_LIMIT) {
          ok = false;
          break;
        }
        ok = x[0] >= lo && x[0] <= hi;
        steps++;
      }
      if (steps < jStar) earlyTerms++;
      p[i * nSim + k] = ok ? 1 : 0;
    }
  }
  return { p, earlyTerms };
}
