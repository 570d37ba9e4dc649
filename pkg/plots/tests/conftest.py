"""Session fixtures: real run directories produced through the delam CLI,
which is the only interface this package consumes."""

import json
import subprocess
import sys

import pytest


def _run_cli(config: dict, out):
    cfg_path = out.parent / (out.name + ".json")
    cfg_path.write_text(json.dumps(config), encoding="utf-8")
    proc = subprocess.run(
        [sys.executable, "-m", "delam.cli", "run", str(cfg_path),
         "--out", str(out)],
        capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    return out


@pytest.fixture(scope="session")
def pullpush_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("runs") / "pullpush"
    return _run_cli({
        "scenario": "pullpush", "model": "aprim",
        "n": 18, "tau": 0.02, "horizon": 1.6,
        "snapshots": [10, 20, 30, 40, 50, 60, 70, 80],
    }, out)


@pytest.fixture(scope="session")
def mmf_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("runs") / "mmf"
    return _run_cli({
        "scenario": "mmf", "model": "lebim",
        "n": 120, "tau": 0.02, "horizon": 4.6,
        "snapshots": [140, 155, 165, 175, 185, 195, 205, 215, 225],
    }, out)
