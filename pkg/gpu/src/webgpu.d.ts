/**
 * Minimal ambient WebGPU declarations covering exactly what this package
 * touches. Node has no DOM lib; pulling the full @webgpu/types would add a
 * dependency for a handful of interfaces.
 */

interface GPU {
  requestAdapter(options?: { powerPreference?: string }): Promise<GPUAdapter | null>;
}

interface GPUAdapter {
  requestDevice(descriptor?: object): Promise<GPUDevice>;
}

interface GPUBuffer {
  size: number;
  mapAsync(mode: number): Promise<void>;
  getMappedRange(): ArrayBuffer;
  unmap(): void;
  destroy(): void;
}

interface GPUQueue {
  writeBuffer(buffer: GPUBuffer, offset: number, data: ArrayBufferView | ArrayBuffer): void;
  submit(commandBuffers: unknown[]): void;
  onSubmittedWorkDone(): Promise<void>;
}

interface GPUComputePassEncoder {
  setPipeline(pipeline: unknown): void;
  setBindGroup(index: number, group: unknown): void;
  dispatchWorkgroups(x: number, y?: number, z?: number): void;
  end(): void;
}

interface GPUCommandEncoder {
  beginComputePass(): GPUComputePassEncoder;
  copyBufferToBuffer(
    src: GPUBuffer, srcOffset: number, dst: GPUBuffer, dstOffset: number, size: number
  ): void;
  finish(): unknown;
}

interface GPUDevice {
  queue: GPUQueue;
  createBuffer(descriptor: { size: number; usage: number; label?: string }): GPUBuffer;
  createShaderModule(descriptor: { code: string }): unknown;
  createComputePipeline(descriptor: object): unknown;
  createBindGroup(descriptor: object): unknown;
  createCommandEncoder(): GPUCommandEncoder;
  destroy(): void;
}

declare const GPUBufferUsage: {
  STORAGE: number;
  UNIFORM: number;
  COPY_SRC: number;
  COPY_DST: number;
  MAP_READ: number;
};

declare const GPUMapMode: { READ: number };
