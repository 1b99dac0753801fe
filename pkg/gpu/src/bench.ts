/**
 * Standalone sweep over scenario counts, reporting both timing modes:
 * kernel-only (scenario tensor already resident) and end-to-end (scenario
 * generation and transfers inside the clock). Prints the same CSV schema
 * the host toolkit's bench command uses.
 *
 *   node dist/bench.js [--emulate] [--nsim 32,64,...] [--reps 20]
 *
 * On real hardware the kernel-only curve versus n_sim shows the batching
 * staircase: flat while spare threads absorb extra scenarios, stepping up
 * when another wave of workgroups is needed.
 */

import { performance } from 'node:perf_hooks';

import { deviceFill, emulatedFill, gpuApi, FillOutcome } from './device.js';
import { FillParams } from './request.js';
import { ScenarioTensor } from './rgsc.js';

const HEADER = 'backend,n_sim,mode,mean_us,min_us,max_us,reps';

function randomScenarios(nSim: number, horizon: number, magnitude: number): ScenarioTensor {
  const data = new Float32Array(nSim * horizon * 3);
  for (let i = 0; i < data.length; i++) {
    data[i] = Math.fround((Math.random() * 2 - 1) * magnitude);
  }
  return { nSim, horizon, n: 3, data };
}

function benchParams(): FillParams {
  const mGrid = 32;
  const vRows = new Float32Array(mGrid);
  // hold at 0, step toward 0.5: every candidate row stays feasible, so
  // the measured work is the full matrix, not an early-exit artifact
  for (let i = 0; i < mGrid; i++) vRows[i] = Math.fround((0.5 * i) / (mGrid - 1));
  return {
    mGrid,
    jStar: 256,
    stepSize: 0.01,
    x0: [0, 0, 0],
    vRows,
    lo: -0.9,
    hi: 0.9,
    ssLo: -0.855,
    ssHi: 0.855,
  };
}

async function timeCell(
  emulate: boolean, params: FillParams, nSim: number, reps: number, mode: string
): Promise<number[]> {
  const run = async (scen: ScenarioTensor): Promise<FillOutcome> =>
    emulate ? emulatedFill(params, scen) : deviceFill(params, scen);
  const fixed = randomScenarios(nSim, params.jStar + 1, 0.001);
  await run(fixed); // warmup
  const samples: number[] = [];
  for (let r = 0; r < reps; r++) {
    if (mode === 'kernel-only') {
      const out = await run(fixed);
      samples.push(out.kernelUs);
    } else {
      const t0 = performance.now();
      await run(randomScenarios(nSim, params.jStar + 1, 0.001));
      samples.push((performance.now() - t0) * 1000);
    }
  }
  return samples;
}

async function main() {
  const args = process.argv.slice(2);
  const emulate = args.includes('--emulate');
  const flag = (name: string, dflt: string) => {
    const i = args.indexOf(name);
    return i >= 0 && i + 1 < args.length ? args[i + 1] : dflt;
  };
  if (!emulate && !gpuApi()) {
    console.error('WebGPU is not available; rerun with --emulate');
    process.exit(1);
  }
  const nSims = flag('--nsim', '32,64,128,256,512,1024,2048,4096,8192')
    .split(',').map((s) => parseInt(s, 10));
  const reps = parseInt(flag('--reps', '20'), 10);
  const backend = emulate ? 'emulate' : 'gpu';
  const params = benchParams();

  console.log(HEADER);
  for (const nSim of nSims) {
    for (const mode of ['kernel-only', 'end-to-end']) {
      const t = await timeCell(emulate, params, nSim, reps, mode);
      const mean = t.reduce((a, b) => a + b, 0) / t.length;
      console.log(
        `${backend},${nSim},${mode},${mean.toFixed(1)},` +
        `${Math.min(...t).toFixed(1)},${Math.max(...t).toFixed(1)},${reps}`
      );
    }
  }
}

main();
