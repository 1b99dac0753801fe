/**
 * @fileoverview Feasibility-fill compute shader.
 *
 * One thread simulates one (candidate setpoint, disturbance scenario) cell:
 * RK4 rollout of the three-state saturating plant in single precision,
 * bounds check on the output at every step, steady-state check against the
 * tightened bounds, early exit on the first violation. Threads never
 * communicate; each writes exactly one cell of the output matrix.
 *
 * The plant is hard-coded. Straight-line arithmetic is the whole point of
 * the device path; interpreting a general plant description would throw the
 * throughput away (the CPU backends keep the general case).
 */

import { WORKGROUP_X, WORKGROUP_Y } from './plan.js';

/**
 * Unbounded constraint sides are clamped to +-BOUND_SENTINEL on the host.
 * WGSL implementations may assume finite floats, so real infinities in the
 * uniform buffer would be on shaky ground; every representable output is
 * well inside this sentinel.
 */
export const BOUND_SENTINEL = 3.0e38;

/** Trajectories leaving this box count as diverged, matching the CPU fill. */
export const STATE_LIMIT = 1.0e6;

export const FILL_WGSL = /* wgsl */ `
struct Params {
  m_grid: u32,
  n_sim: u32,
  j_star: u32,
  horizon: u32,     // scenario rows per simulation, >= j_star + 1
  step_size: f32,
  lo: f32,
  hi: f32,
  ss_lo: f32,
  ss_hi: f32,
  x0a: f32,
  x0b: f32,
  x0c: f32,
}

@group(0) @binding(0) var<uniform> params: Params;
@group(0) @binding(1) var<storage, read> v_rows: array<f32>;
// scenario tensor, [scenario][step][state] with 3 states per row
@group(0) @binding(2) var<storage, read> scenarios: array<f32>;
@group(0) @binding(3) var<storage, read_write> p_out: array<u32>;

const STATE_LIMIT: f32 = ${STATE_LIMIT};

fn rhs(x: vec3f, v: f32) -> vec3f {
  return vec3f(-x.x + tanh(x.y), -x.y + v, -2.0 * x.z + x.x);
}

fn rk4_step(x: vec3f, v: f32, h: f32) -> vec3f {
  let k1 = rhs(x, v);
  let k2 = rhs(x + 0.5 * h * k1, v);
  let k3 = rhs(x + 0.5 * h * k2, v);
  let k4 = rhs(x + h * k3, v);
  return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

@compute @workgroup_size(${WORKGROUP_X}, ${WORKGROUP_Y})
fn fill(@builtin(global_invocation_id) gid: vec3u) {
  let k = gid.x; // scenario
  let i = gid.y; // kappa row
  if (k >= params.n_sim || i >= params.m_grid) {
    return;
  }

  let v = v_rows[i];
  let y_ss = tanh(v);
  var ok = y_ss >= params.ss_lo && y_ss <= params.ss_hi;

  var x = vec3f(params.x0a, params.x0b, params.x0c);
  if (ok) {
    ok = x.x >= params.lo && x.x <= params.hi;
  }

  let base = k * params.horizon * 3u;
  for (var j = 0u; j < params.j_star; j++) {
    if (!ok) {
      break; // early termination: the bit is settled, skip the rest
    }
    x = rk4_step(x, v, params.step_size);
    let d = base + j * 3u;
    x += vec3f(scenarios[d], scenarios[d + 1u], scenarios[d + 2u]);
    if (max(max(abs(x.x), abs(x.y)), abs(x.z)) > STATE_LIMIT) {
      ok = false;
      break;
    }
    ok = x.x >= params.lo && x.x <= params.hi;
  }

  p_out[i * params.n_sim + k] = select(0u, 1u, ok);
}
`;

/**
 * Coverage probe: same launch geometry as the fill, but each surviving
 * thread increments its cell instead of simulating. A correct plan leaves
 * every cell at exactly 1.
 */
export const COVERAGE_WGSL = /* wgsl */ `
struct Shape { m_grid: u32, n_sim: u32 }

@group(0) @binding(0) var<uniform> shape: Shape;
@group(0) @binding(1) var<storage, read_write> hits: array<atomic<u32>>;

@compute @workgroup_size(${WORKGROUP_X}, ${WORKGROUP_Y})
fn cover(@builtin(global_invocation_id) gid: vec3u) {
  if (gid.x >= shape.n_sim || gid.y >= shape.m_grid) {
    return;
  }
  atomicAdd(&hits[gid.y * shape.n_sim + gid.x], 1u);
}
`;
