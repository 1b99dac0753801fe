/**
 * WebGPU execution of the fill shader.
 *
 * Buffer traffic is deliberately minimal: the scenario tensor goes up once
 * per call and the feasibility matrix comes back once, because host
 * transfer, not compute, is the bottleneck at realistic sizes. Timing is
 * split accordingly: kernelUs wraps only the dispatch submit and its
 * completion; totalUs additionally covers buffer setup, upload, and
 * readback.
 */

import { performance } from 'node:perf_hooks';

import { emulateFill } from './emulate.js';
import { FillParams } from './request.js';
import { ScenarioTensor } from './rgsc.js';
import { FILL_WGSL } from './shader.js';
import { launchPlan } from './plan.js';

export interface FillOutcome {
  p: Uint8Array;
  kernelUs: number;
  totalUs: number;
}

export function gpuApi(): GPU | undefined {
  return (globalThis as any)?.navigator?.gpu;
}

export function packParams(params: FillParams, nSim: number, horizon: number): ArrayBuffer {
  const buf = new ArrayBuffer(48);
  const u = new Uint32Array(buf, 0, 4);
  const fl = new Float32Array(buf, 16, 8);
  u[0] = params.mGrid;
  u[1] = nSim;
  u[2] = params.jStar;
  u[3] = horizon;
  fl[0] = params.stepSize;
  fl[1] = params.lo;
  fl[2] = params.hi;
  fl[3] = params.ssLo;
  fl[4] = params.ssHi;
  fl[5] = params.x0[0];
  fl[6] = params.x0[1];
  fl[7] = params.x0[2];
  return buf;
}

export async function deviceFill(
  params: FillParams, scen: ScenarioTensor, deviceIndex?: number
): Promise<FillOutcome> {
  const api = gpuApi();
  if (!api) {
    throw new Error('WebGPU is not available in this runtime');
  }
  // adapter enumeration is not exposed; a device index can only pick the default
  if (deviceIndex !== undefined && deviceIndex !== 0) {
    throw new Error(`only device 0 is addressable here, got ${deviceIndex}`);
  }
  const adapter = await api.requestAdapter();
  if (!adapter) {
    throw new Error('no WebGPU adapter found');
  }
  const t0 = performance.now();
  const device = await adapter.requestDevice();
  const plan = launchPlan(params.mGrid, scen.nSim);
  const cells = params.mGrid * scen.nSim;

  const storage = (data: ArrayBufferView, label: string) => {
    const buf = device.createBuffer({
      size: Math.max(4, (data.byteLength + 3) & ~3),
      usage: GPUBufferUsage.STORAGE | GPUBufferUsage.COPY_DST,
      label,
    });
    device.queue.writeBuffer(buf, 0, data);
    return buf;
  };

  const paramsBuf = device.createBuffer({
    size: 48, usage: GPUBufferUsage.UNIFORM | GPUBufferUsage.COPY_DST, label: 'params',
  });
  device.queue.writeBuffer(paramsBuf, 0, packParams(params, scen.nSim, scen.horizon));
  const vBuf = storage(params.vRows, 'v_rows');
  const scenBuf = storage(scen.data, 'scenarios');
  const pBuf = device.createBuffer({
    size: cells * 4,
    usage: GPUBufferUsage.STORAGE | GPUBufferUsage.COPY_SRC,
    label: 'p_out',
  });
  const readBuf = device.createBuffer({
    size: cells * 4,
    usage: GPUBufferUsage.COPY_DST | GPUBufferUsage.MAP_READ,
    label: 'p_read',
  });

  const module = device.createShaderModule({ code: FILL_WGSL });
  const pipeline = device.createComputePipeline({
    layout: 'auto',
    compute: { module, entryPoint: 'fill' },
  });
  const bindGroup = device.createBindGroup({
    layout: (pipeline as any).getBindGroupLayout(0),
    entries: [
      { binding: 0, resource: { buffer: paramsBuf } },
      { binding: 1, resource: { buffer: vBuf } },
      { binding: 2, resource: { buffer: scenBuf } },
      { binding: 3, resource: { buffer: pBuf } },
    ],
  });

  const encoder = device.createCommandEncoder();
  const pass = encoder.beginComputePass();
  pass.setPipeline(pipeline);
  pass.setBindGroup(0, bindGroup);
  pass.dispatchWorkgroups(plan.blocks[0], plan.blocks[1]);
  pass.end();
  const commands = encoder.finish();

  const k0 = performance.now();
  device.queue.submit([commands]);
  await device.queue.onSubmittedWorkDone();
  const kernelUs = (performance.now() - k0) * 1000;

  const copy = device.createCommandEncoder();
  copy.copyBufferToBuffer(pBuf, 0, readBuf, 0, cells * 4);
  device.queue.submit([copy.finish()]);
  await readBuf.mapAsync(GPUMapMode.READ);
  const words = new Uint32Array(readBuf.getMappedRange().slice(0));
  readBuf.unmap();
  const p = new Uint8Array(cells);
  for (let c = 0; c < cells; c++) p[c] = words[c] & 1;
  const totalUs = (performance.now() - t0) * 1000;
  device.destroy();
  return { p, kernelUs, totalUs };
}

/** Emulated twin of deviceFill with the same timing contract. */
export function emulatedFill(params: FillParams, scen: ScenarioTensor): FillOutcome {
  const t0 = performance.now();
  const { p } = emulateFill(params, scen);
  const us = (performance.now() - t0) * 1000;
  return { p, kernelUs: us, totalUs: (performance.now() - t0) * 1000 };
}
