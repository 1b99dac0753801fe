/**
 * Reader for the scenario dump format the host toolkit writes: the magic
 * bytes "RGSC", three little-endian uint32 (n_sim, horizon, n), then
 * float32 values in [scenario][step][state] order.
 */

export interface ScenarioTensor {
  nSim: number;
  horizon: number;
  n: number;
  /** flat [scenario][step][state] */
  data: Float32Array;
}

const MAGIC = 0x43534752; // "RGSC" read as LE u32

export function readRgsc(bytes: ArrayBuffer | Uint8Array): ScenarioTensor {
  const buf = bytes instanceof Uint8Array
    ? bytes.buffer.slice(bytes.byteOffset, bytes.byteOffset + bytes.byteLength)
    : bytes;
  if (buf.byteLength < 16) {
    throw new Error(`scenario dump truncated: ${buf.byteLength} bytes, header needs 16`);
  }
  const view = new DataView(buf);
  if (view.getUint32(0, true) !== MAGIC) {
    throw new Error('bad scenario dump magic, expected "RGSC"');
  }
  const nSim = view.getUint32(4, true);
  const horizon = view.getUint32(8, true);
  const n = view.getUint32(12, true);
  const count = nSim * horizon * n;
  if (buf.byteLength !== 16 + 4 * count) {
    throw new Error(
      `scenario dump size mismatch: ${buf.byteLength} bytes for ${nSim}x${horizon}x${n}`
    );
  }
  return { nSim, horizon, n, data: new Float32Array(buf, 16, count) };
}
