#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""Regression run of the acceptance suite and the golden Schwarzschild probe.

Policy:
- The golden record lives in test_data/golden_schwarzschild.json.
- golden_probe.py --check recomputes it from scratch and compares within the
  stored tolerances, ignoring _probe_forensics.
- verify runs every acceptance check; FGLAB_FULL_BATCH=1 uses the full
  randomized batch.
"""

from __future__ import annotations

import json
import os
import subprocess
import sys
from pathlib import Path

import pytest

from scripts.acceptance import run_suite

from .config import GOLDEN_SCHWARZSCHILD, RANDOM_COUNT, REPO_ROOT

PROBE = REPO_ROOT / "golden_probe.py"


@pytest.mark.regression
@pytest.mark.slow
def test_golden_probe_check() -> None:
    cmd = [os.environ.get("PYTHON", sys.executable), str(PROBE), "--check", str(GOLDEN_SCHWARZSCHILD)]
    proc = subprocess.run(cmd, capture_output=True, text=True, cwd=str(REPO_ROOT))
    assert proc.returncode == 0, proc.stdout + proc.stderr
    doc = json.loads(proc.stdout)
    assert doc["failed"] == []


@pytest.mark.regression
@pytest.mark.slow
def test_acceptance_suite() -> None:
    results = run_suite(seed=0, resolution=16, random_count=RANDOM_COUNT)
    failed = [r.name for r in results if not r.passed]
    assert not failed, [r.to_json() for r in results if not r.passed]
    assert len(results) == 10


@pytest.mark.regression
@pytest.mark.slow
def test_verify_command(run_cli, tmp_path: Path) -> None:
    res, outdir = run_cli(["verify", "--random-count", "4", "--resolution", "16"], outdir=tmp_path / "verify")
    assert res.returncode == 0, res.stderr
    doc = json.loads((outdir / "verify.json").read_text(encoding="utf-8"))
    assert all(check["passed"] for check in doc["result"]["checks"])
