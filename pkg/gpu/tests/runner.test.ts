import { existsSync, mkdtempSync, readFileSync, rmSync, writeFileSync } from 'node:fs';
import { tmpdir } from 'node:os';
import { join } from 'node:path';
import { fileURLToPath } from 'node:url';
import { spawnSync } from 'node:child_process';

import { afterAll, describe, expect, it } from 'vitest';

import { rgscBytes } from './helpers.js';

const RUNNER = fileURLToPath(new URL('../dist/runner.js', import.meta.url));

const dirs: string[] = [];
afterAll(() => {
  for (const d of dirs) rmSync(d, { recursive: true, force: true });
});

function workdir(): string {
  const d = mkdtempSync(join(tmpdir(), 'fill-runner-'));
  dirs.push(d);
  return d;
}

/** Writes a complete request fixture and returns the important paths. */
function stage(dir: string, over: Record<string, unknown> = {}) {
  const scenarios = join(dir, 'scenarios.rgsc');
  writeFileSync(scenarios, rgscBytes(2, 9, 3, new Array(2 * 9 * 3).fill(0)));
  const doc = {
    plant: { kind: 'surrogate-fc', step_size: 0.01 },
    x0: [0, 0, 0],
    v_rows: [0, 0.25, 5.0],
    j_star: 8,
    bounds: { lower: -0.9, upper: 0.9 },
    ss_bounds: { lower: -0.855, upper: 0.855 },
    scenarios,
    p_out: join(dir, 'p.bin'),
    response: join(dir, 'response.json'),
    ...over,
  };
  const request = join(dir, 'request.json');
  writeFileSync(request, JSON.stringify(doc));
  return { request, doc };
}

function run(args: string[]) {
  return spawnSync(process.execPath, [RUNNER, ...args], { encoding: 'utf8', timeout: 60_000 });
}

// npm test builds first (pretest); a bare vitest run may predate dist/
describe.skipIf(!existsSync(RUNNER))('runner subprocess', () => {
  it('fills the matrix and reports timings through the response file', () => {
    const dir = workdir();
    const { request, doc } = stage(dir);
    const proc = run(['--emulate', request]);
    expect(proc.status, proc.stderr).toBe(0);

    const p = new Uint8Array(readFileSync(doc.p_out as string));
    // rows for v=0 and v=0.25 are feasible, v=5 fails the steady-state gate
    expect(Array.from(p)).toEqual([1, 1, 1, 1, 0, 0]);

    const response = JSON.parse(readFileSync(doc.response as string, 'utf8'));
    expect(response.ok).toBe(true);
    expect(response.kernel_us).toBeGreaterThanOrEqual(0);
    expect(response.total_us).toBeGreaterThanOrEqual(response.kernel_us);
  });

  it('reports ok false and exits nonzero for a foreign plant kind', () => {
    const dir = workdir();
    const { request, doc } = stage(dir, { plant: { kind: 'linear', step_size: 0.01 } });
    const proc = run(['--emulate', request]);
    expect(proc.status).toBe(1);
    const response = JSON.parse(readFileSync(doc.response as string, 'utf8'));
    expect(response.ok).toBe(false);
    expect(response.error).toMatch(/surrogate-fc/);
  });

  it('reports ok false when the scenario dump is missing', () => {
    const dir = workdir();
    const { request, doc } = stage(dir, { scenarios: join(dir, 'nope.rgsc') });
    const proc = run(['--emulate', request]);
    expect(proc.status).toBe(1);
    const response = JSON.parse(readFileSync(doc.response as string, 'utf8'));
    expect(response.ok).toBe(false);
  });

  it('exits nonzero with only stderr when the request itself is unreadable', () => {
    const proc = run(['--emulate', join(workdir(), 'no-request.json')]);
    expect(proc.status).toBe(1);
    expect(proc.stderr).toMatch(/ENOENT/);
  });

  it('rejects bad argument lists with the usage exit code', () => {
    expect(run([]).status).toBe(2);
    expect(run(['--emulate']).status).toBe(2);
    expect(run(['a.json', 'b.json']).status).toBe(2);
  });

  it('refuses to run without a device unless emulation is requested', () => {
    // node has no WebGPU, so the plain invocation must fail loudly
    const dir = workdir();
    const { request, doc } = stage(dir);
    const proc = run([request]);
    expect(proc.status).toBe(1);
    const response = JSON.parse(readFileSync(doc.response as string, 'utf8'));
    expect(response.ok).toBe(false);
    expect(response.error).toMatch(/--emulate/);
  });
});
