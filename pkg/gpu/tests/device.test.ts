import { describe, expect, it } from 'vitest';

import { deviceFill, emulatedFill, gpuApi, packParams } from '../src/device.js';
import { FillParams } from '../src/request.js';
import { COVERAGE_WGSL } from '../src/shader.js';
import { launchPlan } from '../src/plan.js';
import { zeroTensor } from './helpers.js';

function params(over: Partial<FillParams> = {}): FillParams {
  return {
    mGrid: 3,
    jStar: 16,
    stepSize: 0.01,
    x0: [0.1, 0.2, 0.05],
    vRows: Float32Array.from([0, 0.3, 5.0]),
    lo: -0.9,
    hi: 0.9,
    ssLo: -0.855,
    ssHi: 0.855,
    ...over,
  };
}

describe('uniform packing', () => {
  it('lays out four u32 then eight f32, little endian, 48 bytes', () => {
    const buf = packParams(params(), 24, 17);
    expect(buf.byteLength).toBe(48);
    const view = new DataView(buf);
    expect(view.getUint32(0, true)).toBe(3);   // m_grid
    expect(view.getUint32(4, true)).toBe(24);  // n_sim
    expect(view.getUint32(8, true)).toBe(16);  // j_star
    expect(view.getUint32(12, true)).toBe(17); // horizon
    expect(view.getFloat32(16, true)).toBe(Math.fround(0.01));
    expect(view.getFloat32(20, true)).toBe(Math.fround(-0.9));
    expect(view.getFloat32(24, true)).toBe(Math.fround(0.9));
    expect(view.getFloat32(28, true)).toBe(Math.fround(-0.855));
    expect(view.getFloat32(32, true)).toBe(Math.fround(0.855));
    expect(view.getFloat32(36, true)).toBe(Math.fround(0.1));
    expect(view.getFloat32(40, true)).toBe(Math.fround(0.2));
    expect(view.getFloat32(44, true)).toBe(Math.fround(0.05));
  });
});

// everything below needs real WebGPU; plain node skips it
describe.skipIf(!gpuApi())('device fill', () => {
  it('agrees with the float32 emulation on a disturbance-free case', async () => {
    const p = params();
    const scen = zeroTensor(8, 17);
    const dev = await deviceFill(p, scen);
    const emu = emulatedFill(p, scen);
    expect(Array.from(dev.p)).toEqual(Array.from(emu.p));
    expect(dev.kernelUs).toBeGreaterThan(0);
    expect(dev.totalUs).toBeGreaterThanOrEqual(dev.kernelUs);
  });

  it('stays close to the emulation under noise', async () => {
    // hardware tanh and fma rounding may flip knife-edge cells; anything
    // beyond a stray disagreement means the kernel diverged from the model
    const nSim = 64;
    const jStar = 64;
    const scen = zeroTensor(nSim, jStar + 1);
    let s = 12345 >>> 0;
    for (let i = 0; i < scen.data.length; i++) {
      s = (s * 1664525 + 1013904223) >>> 0;
      scen.data[i] = Math.fround(((s / 2 ** 32) * 2 - 1) * 0.005);
    }
    const p = params({ jStar, mGrid: 8, vRows: Float32Array.from([0, 0.2, 0.4, 0.6, 0.8, 1.0, 1.2, 5.0]) });
    const dev = await deviceFill(p, scen);
    const emu = emulatedFill(p, scen);
    let flips = 0;
    for (let c = 0; c < dev.p.length; c++) {
      if (dev.p[c] !== emu.p[c]) flips++;
    }
    expect(flips).toBeLessThanOrEqual(Math.ceil(dev.p.length * 0.01));
  });

  it('rejects device indices it cannot honor', async () => {
    await expect(deviceFill(params(), zeroTensor(1, 17), 3)).rejects.toThrow(/device 0/);
  });

  it('touches every cell exactly once for awkward shapes', async () => {
    const api = gpuApi()!;
    const adapter = await api.requestAdapter();
    expect(adapter).toBeTruthy();
    const device = await adapter!.requestDevice();
    for (const [mGrid, nSim] of [[5, 17], [16, 16], [33, 100]] as const) {
      const plan = launchPlan(mGrid, nSim);
      const cells = mGrid * nSim;
      const shapeBuf = device.createBuffer({
        size: 8, usage: GPUBufferUsage.UNIFORM | GPUBufferUsage.COPY_DST,
      });
      device.queue.writeBuffer(shapeBuf, 0, Uint32Array.from([mGrid, nSim]));
      const hitsBuf = device.createBuffer({
        size: cells * 4, usage: GPUBufferUsage.STORAGE | GPUBufferUsage.COPY_SRC,
      });
      const readBuf = device.createBuffer({
        size: cells * 4, usage: GPUBufferUsage.COPY_DST | GPUBufferUsage.MAP_READ,
      });
      const pipeline = device.createComputePipeline({
        layout: 'auto',
        compute: { module: device.createShaderModule({ code: COVERAGE_WGSL }), entryPoint: 'cover' },
      });
      const bind = device.createBindGroup({
        layout: (pipeline as any).getBindGroupLayout(0),
        entries: [
          { binding: 0, resource: { buffer: shapeBuf } },
          { binding: 1, resource: { buffer: hitsBuf } },
        ],
      });
      const enc = device.createCommandEncoder();
      const pass = enc.beginComputePass();
      pass.setPipeline(pipeline);
      pass.setBindGroup(0, bind);
      pass.dispatchWorkgroups(plan.blocks[0], plan.blocks[1]);
      pass.end();
      enc.copyBufferToBuffer(hitsBuf, 0, readBuf, 0, cells * 4);
      device.queue.submit([enc.finish()]);
      await readBuf.mapAsync(GPUMapMode.READ);
      const hits = new Uint32Array(readBuf.getMappedRange().slice(0));
      readBuf.unmap();
      expect(Array.from(hits)).toEqual(new Array(cells).fill(1));
    }
    device.destroy();
  });
});
