"""Protocol tests for the external device runner bridge, using fake runners.

No real device is involved: each test generates a small executable script
that speaks (or deliberately violates) the request/response file protocol.
"""

import json
import math
import stat
import sys
import textwrap

import numpy as np
import pytest

from refgov import (
    BackendUnavailableError,
    ConstraintSet,
    GovernorConfig,
    GovernorState,
    LinearOraclePlant,
    RefgovError,
    grid_kappas,
    robust_rg_parallel,
    zero_scenarios,
)
from refgov.governor import fill_feasibility

CHECKERBOARD_RUNNER = """
import json, struct, sys
import numpy as np

req = json.load(open(sys.argv[1]))
raw = open(req["scenarios"], "rb").read()
assert raw[:4] == b"RGSC", "bad magic"
n_sim, horizon, n = struct.unpack("<III", raw[4:16])
assert len(raw) == 16 + 4 * n_sim * horizon * n, "truncated tensor"
M = len(req["v_rows"])
P = ((np.arange(M)[:, None] + np.arange(n_sim)[None, :]) % 2).astype(np.uint8)
P.tofile(req["p_out"])
debug = dict(req)
debug["header"] = [int(n_sim), int(horizon), int(n)]
open({debug_path!r}, "w").write(json.dumps(debug))
json.dump({{"ok": True, "kernel_us": 123, "total_us": 456}}, open(req["response"], "w"))
"""


def make_runner(tmp_path, body, name="runner.py"):
    script = tmp_path / name
    script.write_text(textwrap.dedent(body))
    script.chmod(script.stat().st_mode | stat.S_IXUSR)
    return f"{sys.executable} {script}"


def gpu_fill(surrogate, box, m_grid=4, n_sim=3, j_star=16):
    scen = zero_scenarios(3, j_star + 1)
    big = np.broadcast_to(scen.data, (n_sim, j_star + 1, 3)).copy()
    return fill_feasibility(
        "gpu", surrogate, np.zeros(3), 0.0, 0.5, grid_kappas(m_grid),
        big, box, 0.05, j_star, stats={},
    )


def test_protocol_round_trip(surrogate, box, tmp_path, monkeypatch):
    debug_path = tmp_path / "debug.json"
    cmd = make_runner(tmp_path, CHECKERBOARD_RUNNER.format(debug_path=str(debug_path)))
    monkeypatch.setenv("REFGOV_GPU_RUNNER", cmd)

    scen = zero_scenarios(3, 17)
    big = np.broadcast_to(scen.data, (3, 17, 3)).copy()
    stats = {}
    P = fill_feasibility(
        "gpu", surrogate, np.zeros(3), 0.0, 0.5, grid_kappas(4),
        big, box, 0.05, 16, stats=stats,
    )
    expected = (np.arange(4)[:, None] + np.arange(3)[None, :]) % 2 == 1
    assert np.array_equal(P, expected)
    assert stats["backend"] == "gpu"
    assert stats["kernel_us"] == 123
    assert stats["total_us"] == 456

    debug = json.loads(debug_path.read_text())
    assert debug["plant"] == {"kind": "surrogate-fc", "step_size": 0.01}
    assert debug["j_star"] == 16
    assert debug["header"] == [3, 17, 3]
    assert debug["v_rows"] == pytest.approx([0.0, 0.5 / 3, 1.0 / 3, 0.5])
    assert debug["bounds"] == {"lower": -0.9, "upper": 0.9}
    # tightened by 5% toward the anchor
    assert debug["ss_bounds"]["upper"] == pytest.approx(0.855)


def test_infinite_bounds_encode_as_null(surrogate, tmp_path, monkeypatch):
    debug_path = tmp_path / "debug.json"
    cmd = make_runner(tmp_path, CHECKERBOARD_RUNNER.format(debug_path=str(debug_path)))
    monkeypatch.setenv("REFGOV_GPU_RUNNER", cmd)
    half_open = ConstraintSet(-math.inf, 0.9, anchor=0.0)
    fill_feasibility(
        "gpu", surrogate, np.zeros(3), 0.0, 0.5, grid_kappas(3),
        zero_scenarios(3, 17), half_open, 0.05, 16,
    )
    debug = json.loads(debug_path.read_text())
    assert debug["bounds"] == {"lower": None, "upper": 0.9}
    assert debug["ss_bounds"]["lower"] is None


def test_runner_used_by_governor(surrogate, box, tmp_path, monkeypatch):
    all_ones = """
    import json, sys
    import numpy as np
    req = json.load(open(sys.argv[1]))
    n_sim = np.fromfile(req["scenarios"], dtype="<u4", count=3, offset=4)[0]
    np.ones((len(req["v_rows"]), n_sim), dtype=np.uint8).tofile(req["p_out"])
    json.dump({"ok": True}, open(req["response"], "w"))
    """
    monkeypatch.setenv("REFGOV_GPU_RUNNER", make_runner(tmp_path, all_ones))
    cfg = GovernorConfig(j_star=16, n_sim=1, m_grid=4, backend="gpu")
    res = robust_rg_parallel(
        surrogate, np.zeros(3), GovernorState(0.0), 0.5, box,
        zero_scenarios(3, 17), cfg,
    )
    assert res.kappa_opt == 1.0
    assert res.diagnostics["backend"] == "gpu"


def test_failing_runner_is_unavailable(surrogate, box, tmp_path, monkeypatch):
    cmd = make_runner(tmp_path, "import sys; sys.exit(3)")
    monkeypatch.setenv("REFGOV_GPU_RUNNER", cmd)
    with pytest.raises(BackendUnavailableError, match="exited with 3"):
        gpu_fill(surrogate, box)


def test_runner_error_report_is_unavailable(surrogate, box, tmp_path, monkeypatch):
    body = """
    import json, sys
    req = json.load(open(sys.argv[1]))
    json.dump({"ok": False, "error": "no adapter"}, open(req["response"], "w"))
    """
    monkeypatch.setenv("REFGOV_GPU_RUNNER", make_runner(tmp_path, body))
    with pytest.raises(BackendUnavailableError, match="no adapter"):
        gpu_fill(surrogate, box)


def test_missing_binary_is_unavailable(surrogate, box, monkeypatch):
    monkeypatch.setenv("REFGOV_GPU_RUNNER", "/no/such/binary")
    with pytest.raises(BackendUnavailableError):
        gpu_fill(surrogate, box)


def test_wrong_cell_count_is_an_error(surrogate, box, tmp_path, monkeypatch):
    body = """
    import json, sys
    import numpy as np
    req = json.load(open(sys.argv[1]))
    np.ones(2, dtype=np.uint8).tofile(req["p_out"])
    json.dump({"ok": True}, open(req["response"], "w"))
    """
    monkeypatch.setenv("REFGOV_GPU_RUNNER", make_runner(tmp_path, body))
    with pytest.raises(RefgovError, match="cells"):
        gpu_fill(surrogate, box)


def test_silent_runner_is_an_error(surrogate, box, tmp_path, monkeypatch):
    monkeypatch.setenv("REFGOV_GPU_RUNNER", make_runner(tmp_path, "pass"))
    with pytest.raises(RefgovError, match="no response"):
        gpu_fill(surrogate, box)


def test_timeout_is_enforced(surrogate, box, tmp_path, monkeypatch):
    body = "import time; time.sleep(30)"
    monkeypatch.setenv("REFGOV_GPU_RUNNER", make_runner(tmp_path, body))
    monkeypatch.setenv("REFGOV_GPU_TIMEOUT", "0.3")
    with pytest.raises(RefgovError, match="timed out"):
        gpu_fill(surrogate, box)


def test_non_surrogate_plant_is_unavailable(tmp_path, monkeypatch):
    monkeypatch.setenv("REFGOV_GPU_RUNNER", "true")
    plant = LinearOraclePlant([[0.5]], [0.5], [1.0])
    with pytest.raises(BackendUnavailableError, match="specialized"):
        fill_feasibility(
            "gpu", plant, np.zeros(1), 0.0, 0.5, grid_kappas(3),
            zero_scenarios(1, 17), ConstraintSet(-1, 1), 0.05, 16,
        )
