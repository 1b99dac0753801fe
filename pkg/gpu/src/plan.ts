/**
 * Launch geometry for the feasibility fill.
 *
 * One thread owns one (kappa row, scenario) cell. Threads are grouped into
 * 16x16 workgroups; the dispatch grid is the ceiling division of the matrix
 * shape, so edge workgroups carry out-of-range threads that exit on entry.
 */

export const WORKGROUP_X = 16; // scenarios per workgroup
export const WORKGROUP_Y = 16; // kappa rows per workgroup

export interface LaunchPlan {
  mGrid: number;
  nSim: number;
  /** workgroups along (scenarios, rows) */
  blocks: [number, number];
}

export function launchPlan(mGrid: number, nSim: number): LaunchPlan {
  if (!Number.isInteger(mGrid) || mGrid < 1 || !Number.isInteger(nSim) || nSim < 1) {
    throw new Error(`matrix shape must be positive integers, got ${mGrid}x${nSim}`);
  }
  return {
    mGrid,
    nSim,
    blocks: [Math.ceil(nSim / WORKGROUP_X), Math.ceil(mGrid / WORKGROUP_Y)],
  };
}

/**
 * Enumerate every (row, scenario) cell the plan's threads would claim after
 * the out-of-range guard. Used by tests to prove exactly-once coverage.
 */
export function coveredCells(plan: LaunchPlan): Array<[number, number]> {
  const cells: Array<[number, number]> = [];
  for (let by = 0; by < plan.blocks[1]; by++) {
    for (let bx = 0; bx < plan.blocks[0]; bx++) {
      for (let ty = 0; ty < WORKGROUP_Y; ty++) {
        for (let tx = 0; tx < WORKGROUP_X; tx++) {
          const i = by * WORKGROUP_Y + ty;
          const k = bx * WORKGROUP_X + tx;
          if (i < plan.mGrid && k < plan.nSim) cells.push([i, k]);
        }
      }
    }
  }
  return cells;
}
