"""Shared fixtures: a full 30+10 phantom study driven through the CLI.

The study fixture is session-scoped and records per-stage wall times so the
end-to-end budget checks can read them without re-running anything.
"""

from __future__ import annotations

import json
import sys
import time
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).resolve().parent))  # for `import oracles`

from ctcad import cli


class StudyRun:
    """Paths and timings of one CLI-driven phantom study."""

    def __init__(self, root: Path):
        self.root = root
        self.config_3d = root / "run3d.json"
        self.config_2d = root / "run2d.json"
        self.work = root / "work"
        self.dataset = root / "dataset"
        self.durations: dict[str, float] = {}

    def report(self, name: str) -> dict:
        return json.loads((self.work / "reports" / name).read_text(encoding="utf-8"))


def _timed(study: StudyRun, key: str, args: list[str]) -> None:
    t0 = time.monotonic()
    rc = cli.main(args)
    study.durations[key] = time.monotonic() - t0
    assert rc == 0, f"cli.main({args}) -> exit {rc}"


@pytest.fixture(scope="session")
def study(tmp_path_factory) -> StudyRun:
    """30 positive + 10 negative cases, 3D and 2D feature paths, both reducers."""
    root = tmp_path_factory.mktemp("study")
    base = {
        "pipeline": {
            "reducer": "rpa",
            "reduced_dim": 20,
            "balance_mode": "strict",
            "feature_mode": "features_3d",
            "run_seed": 2025,
        },
        "phantom": {"n_positive": 30, "n_negative": 10, "seed": 1234},
    }
    s = StudyRun(root)
    s.config_3d.write_text(json.dumps(base), encoding="utf-8")
    base_2d = json.loads(json.dumps(base))
    base_2d["pipeline"]["feature_mode"] = "features_2d_largest_slice"
    s.config_2d.write_text(json.dumps(base_2d), encoding="utf-8")

    c3, c2 = str(s.config_3d), str(s.config_2d)
    _timed(s, "phantom", ["phantom", "--config", c3])
    _timed(s, "segment", ["segment", "--config", c3])
    _timed(s, "features_3d", ["features", "--config", c3])
    _timed(s, "evaluate_3d", ["evaluate", "--config", c3, "--compare"])
    _timed(s, "features_2d", ["features", "--config", c2])
    _timed(s, "evaluate_2d", ["evaluate", "--config", c2])
    return s


@pytest.fixture()
def mini_config(tmp_path) -> Path:
    """A small, fast study config (3+3 cases) for CLI workflow tests.

    Three per class is the strict-mode floor: holding one case out must leave
    two of its class for the fold's rebalancer.
    """
    cfg = {
        "pipeline": {
            "reducer": "rpa",
            "reduced_dim": 4,
            "balance_mode": "strict",
            "run_seed": 7,
            "gbm": {"n_trees": 20, "max_depth": 2},
            "bootstrap_samples": 50,
        },
        "phantom": {"n_positive": 3, "n_negative": 3, "seed": 99},
    }
    path = tmp_path / "mini.json"
    path.write_text(json.dumps(cfg), encoding="utf-8")
    return path
