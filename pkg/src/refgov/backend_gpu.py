"""Bridge to an out-of-process GPU runner for the feasibility fill.

The device code lives in a separate package (WebGPU/WGSL); this module only
speaks a small file-based protocol with it. Point REFGOV_GPU_RUNNER at the
runner command (for example "node gpu/dist/runner.js" or the same with
"--emulate" for a CPU float32 emulation); leave it unset and the gpu backend
reports itself unavailable so callers can fall back.

Protocol, per call:
  1. A scratch directory receives scenarios.rgsc (the scenario tensor as an
     RGSC dump) and request.json describing the call: plant, x0, candidate
     setpoints, horizon, output bounds, tightened steady-state bounds, and
     output paths.
  2. The runner is invoked as `<command> <request.json path>`.
  3. It writes the feasibility matrix as raw row-major uint8 bytes
     (m_grid * n_sim) plus response.json with {"ok": true, "kernel_us": ...,
     "total_us": ...} or {"ok": false, "error": "..."}.

The device computes in single precision; agreement with the double
precision CPU backends is tolerance-bounded, not bit-exact.
"""

from __future__ import annotations

import json
import os
import shlex
import subprocess
import tempfile
from pathlib import Path

import numpy as np

from .constraints import ConstraintSet
from .disturbance import ScenarioSet, write_rgsc
from .errors import BackendUnavailableError, RefgovError

__all__ = ["RUNNER_ENV", "DEVICE_ENV", "TIMEOUT_ENV", "available", "fill"]

RUNNER_ENV = "REFGOV_GPU_RUNNER"
DEVICE_ENV = "REFGOV_GPU_DEVICE"
TIMEOUT_ENV = "REFGOV_GPU_TIMEOUT"


def available() -> bool:
    """True when a device runner command is configured."""
    return bool(os.environ.get(RUNNER_ENV, "").strip())


def fill(
    plant,
    x0: np.ndarray,
    v_rows: np.ndarray,
    dist: np.ndarray,
    j_star: int,
    cset: ConstraintSet,
    tight: ConstraintSet,
) -> tuple[np.ndarray, dict]:
    """Run one feasibility fill on the configured device runner.

    Returns (P, stats) where P is the boolean (m_grid, n_sim) matrix and
    stats carries the runner's kernel-only and end-to-end timings.
    """
    cmd = os.environ.get(RUNNER_ENV, "").strip()
    if not cmd:
        raise BackendUnavailableError(
            f"gpu backend needs {RUNNER_ENV} to point at a device runner command"
        )
    if plant.kernel_kind != "surrogate-fc":
        raise BackendUnavailableError(
            "the device kernel is specialized to the surrogate plant; "
            f"got plant kernel kind {plant.kernel_kind!r}"
        )
    timeout = float(os.environ.get(TIMEOUT_ENV, "300"))

    with tempfile.TemporaryDirectory(prefix="refgov-gpu-") as tmp:
        tmpdir = Path(tmp)
        scen_path = tmpdir / "scenarios.rgsc"
        p_path = tmpdir / "p.bin"
        resp_path = tmpdir / "response.json"
        req_path = tmpdir / "request.json"
        write_rgsc(scen_path, ScenarioSet(dist))

        def bound(b: float):
            # JSON has no Infinity literal; the config convention is null.
            return None if np.isinf(b) else float(b)

        request = {
            "plant": {"kind": "surrogate-fc", "step_size": float(plant.step_size)},
            "x0": [float(a) for a in x0],
            "v_rows": [float(v) for v in v_rows],
            "j_star": int(j_star),
            "bounds": {"lower": bound(cset.lower), "upper": bound(cset.upper)},
            "ss_bounds": {"lower": bound(tight.lower), "upper": bound(tight.upper)},
            "scenarios": str(scen_path),
            "p_out": str(p_path),
            "response": str(resp_path),
        }
        device = os.environ.get(DEVICE_ENV, "").strip()
        if device:
            request["device"] = int(device)
        req_path.write_text(json.dumps(request))

        argv = shlex.split(cmd) + [str(req_path)]
        try:
            proc = subprocess.run(
                argv, capture_output=True, text=True, timeout=timeout
            )
        except FileNotFoundError as e:
            raise BackendUnavailableError(f"gpu runner not executable: {e}") from None
        except subprocess.TimeoutExpired:
            raise RefgovError(
                f"gpu runner timed out after {timeout:.0f}s (set {TIMEOUT_ENV} to raise)"
            ) from None
        if proc.returncode != 0:
            tail = (proc.stderr or proc.stdout or "").strip()[-500:]
            raise BackendUnavailableError(
                f"gpu runner exited with {proc.returncode}: {tail}"
            )
        if not resp_path.exists():
            raise RefgovError("gpu runner wrote no response file")
        resp = json.loads(resp_path.read_text())
        if not resp.get("ok"):
            raise BackendUnavailableError(
                f"gpu runner reported failure: {resp.get('error', 'unknown')}"
            )
        raw = np.fromfile(p_path, dtype=np.uint8)
        m_grid, n_sim = len(v_rows), dist.shape[0]
        if raw.size != m_grid * n_sim:
            raise RefgovError(
                f"gpu runner returned {raw.size} cells, expected {m_grid * n_sim}"
            )
        P = raw.reshape(m_grid, n_sim).astype(bool)
        stats = {
            "kernel_us": int(resp.get("kernel_us", 0)),
            "total_us": int(resp.get("total_us", 0)),
            "sims_run": m_grid * n_sim,
            "early_terms": int(resp.get("early_terms", 0)),
        }
        return P, stats
