/**
 * File-protocol runner: `node dist/runner.js [--emulate] <request.json>`.
 *
 * Reads the request document and the scenario dump it points at, fills the
 * feasibility matrix on the GPU (or the float32 CPU emulation with
 * --emulate), writes the matrix as raw bytes to the requested path, and
 * reports {ok, kernel_us, total_us} to the response path. Failures are
 * reported through the response file when possible and always through a
 * nonzero exit code.
 */

import { readFileSync, writeFileSync } from 'node:fs';
import { pathToFileURL } from 'node:url';

import { deviceFill, emulatedFill, gpuApi, FillOutcome } from './device.js';
import { parseRequest, FillRequest } from './request.js';
import { readRgsc } from './rgsc.js';

export interface RunnerResult {
  ok: boolean;
  error?: string;
  kernel_us?: number;
  total_us?: number;
}

export async function runRequest(requestPath: string, emulate: boolean): Promise<RunnerResult> {
  const doc = JSON.parse(readFileSync(requestPath, 'utf8')) as FillRequest;
  let result: RunnerResult;
  try {
    const params = parseRequest(doc);
    const scen = readRgsc(readFileSync(doc.scenarios));
    let outcome: FillOutcome;
    if (emulate) {
      outcome = emulatedFill(params, scen);
    } else if (gpuApi()) {
      outcome = await deviceFill(params, scen, doc.device);
    } else {
      throw new Error('WebGPU is not available in this runtime (use --emulate for CPU float32)');
    }
    writeFileSync(doc.p_out, outcome.p);
    result = {
      ok: true,
      kernel_us: Math.round(outcome.kernelUs),
      total_us: Math.round(outcome.totalUs),
    };
  } catch (err) {
    result = { ok: false, error: err instanceof Error ? err.message : String(err) };
  }
  if (doc.response) {
    writeFileSync(doc.response, JSON.stringify(result));
  }
  return result;
}

async function main() {
  const args = process.argv.slice(2);
  const emulate = args.includes('--emulate');
  const positional = args.filter((a) => a !== '--emulate');
  if (positional.length !== 1) {
    console.error('usage: runner.js [--emulate] <request.json>');
    process.exit(2);
  }
  try {
    const result = await runRequest(positional[0], emulate);
    if (!result.ok) {
      console.error(`fill failed: ${result.error}`);
      process.exit(1);
    }
  } catch (err) {
    // request unreadable: no response path known, stderr is all we have
    console.error(err instanceof Error ? err.message : String(err));
    process.exit(1);
  }
}

if (process.argv[1] && import.meta.url === pathToFileURL(process.argv[1]).href) {
  main();
}
