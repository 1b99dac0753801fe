import { ScenarioTensor } from '../src/rgsc.js';

/** Build an RGSC byte image in memory (tests only; the host toolkit writes the real files). */
export function rgscBytes(nSim: number, horizon: number, n: number, values: number[]): Uint8Array {
  const count = nSim * horizon * n;
  if (values.length !== count) {
    throw new Error(`need ${count} values, got ${values.length}`);
  }
  const buf = new ArrayBuffer(16 + 4 * count);
  const view = new DataView(buf);
  view.setUint8(0, 0x52); // R
  view.setUint8(1, 0x47); // G
  view.setUint8(2, 0x53); // S
  view.setUint8(3, 0x43); // C
  view.setUint32(4, nSim, true);
  view.setUint32(8, horizon, true);
  view.setUint32(12, n, true);
  new Float32Array(buf, 16).set(values);
  return new Uint8Array(buf);
}

export function zeroTensor(nSim: number, horizon: number): ScenarioTensor {
  return { nSim, horizon, n: 3, data: new Float32Array(nSim * horizon * 3) };
}
