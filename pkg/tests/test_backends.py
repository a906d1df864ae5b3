"""Backend selection through the LOTMAP_BACKEND environment variable."""

import os
import subprocess
import sys

SNIPPET = """
import json
import numpy as np
from lotmap import _kernels
cost = np.array([[0.0, 1.0], [1.0, 0.0]])
a = np.array([0.5, 0.5])
plan, status, _ = _kernels.network_simplex(cost, a, a.copy())
print(json.dumps({
    "backend": _kernels.BACKEND,
    "status": int(status),
    "objective": float((np.asarray(plan) * cost).sum()),
}))
"""


def _run(backend):
    env = dict(os.environ)
    if backend is None:
        env.pop("LOTMAP_BACKEND", None)
    else:
        env["LOTMAP_BACKEND"] = backend
    return subprocess.run(
        [sys.executable, "-c", SNIPPET],
        capture_output=True,
        text=True,
        env=env,
    )


def test_default_prefers_compiled_extension():
    import json

    proc = _run(None)
    assert proc.returncode == 0, proc.stderr
    doc = json.loads(proc.stdout)
    assert doc["backend"] == "compiled"
    assert doc["status"] == 0
    assert doc["objective"] == 0.0


def test_forced_python_backend():
    import json

    proc = _run("python")
    assert proc.returncode == 0, proc.stderr
    doc = json.loads(proc.stdout)
    assert doc["backend"] == "python"
    assert doc["objective"] == 0.0


def test_forced_compiled_backend():
    import json

    proc = _run("compiled")
    assert proc.returncode == 0, proc.stderr
    assert json.loads(proc.stdout)["backend"] == "compiled"


def test_invalid_backend_value_is_rejected():
    proc = _run("fortran")
    assert proc.returncode != 0
    assert "LOTMAP_BACKEND" in proc.stderr
