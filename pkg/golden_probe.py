#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
golden_probe.py: Schwarzschild golden-data generator

Goals:
- Strict JSON golden record (never python code).
- g_n extracted numerically from the FG-gauge Schwarzschild curve, compared
  with the closed form when n is odd.
- Forensics (python, platform, probe hash) kept under _probe_forensics so the
  regression tests can ignore them.

Usage:
  python golden_probe.py --out test_data/golden_schwarzschild.json
  python golden_probe.py --check test_data/golden_schwarzschild.json
"""

from __future__ import annotations

import argparse
import json
import platform
import sys
from pathlib import Path
from typing import Any, Dict

import numpy as np

from scripts import boundary_tensor as bt
from scripts.exact_solutions import (
    SchwarzschildParams,
    extract_coefficient,
    golden_record,
    schwarzschild_fg_curve,
    schwarzschild_g_n,
)
from scripts.fg_series import expand
from scripts.reporting import dumps, sha256_file, versions

TOLERANCES = {"rPlus": 1e-12, "beta": 1e-12, "g3": 1e-6}


def probe(n: int, m: float) -> Dict[str, Any]:
    params = SchwarzschildParams.from_mass(n, m)
    curve = schwarzschild_fg_curve(params, np.linspace(0.01, 0.3, 300))
    lower = expand(bt.metric_of(params.model), bt.SymTensorField.zeros(params.model), n - 1)
    extracted = extract_coefficient(curve, lower, n)
    record = golden_record(params, extracted, TOLERANCES)
    fx: Dict[str, Any] = {
        "source": "extracted",
        "probe_sha256": sha256_file(Path(__file__).resolve()),
        "python": {"version": sys.version, "platform": platform.platform()},
        "versions": versions(),
    }
    if n % 2:
        fx["closed_form_error"] = float(np.max(np.abs(extracted.values - schwarzschild_g_n(params).values)))
    record["_probe_forensics"] = fx
    return record


def compare(golden: Dict[str, Any], fresh: Dict[str, Any]) -> Dict[str, float]:
    """Absolute deviation per golden key; the caller checks against golden['tolerances']."""
    return {
        "rPlus": abs(golden["rPlus"] - fresh["rPlus"]),
        "beta": abs(golden["beta"] - fresh["beta"]),
        "g3": max(abs(golden["g3_blocks"][k] - fresh["g3_blocks"][k]) for k in golden["g3_blocks"]),
    }


def main() -> int:
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", help="Output golden JSON path")
    ap.add_argument("--check", help="Existing golden JSON to compare against")
    ap.add_argument("--n", type=int, default=3)
    ap.add_argument("--m", type=float, default=1.0)
    args = ap.parse_args()
    if not args.out and not args.check:
        ap.error("one of --out / --check is required")

    if args.check:
        golden = json.loads(Path(args.check).read_text(encoding="utf-8"))
        fresh = probe(int(golden["n"]), float(golden["m"]))
        deltas = compare(golden, fresh)
        tol = golden["tolerances"]
        bad = {k: v for k, v in deltas.items() if v > tol[k]}
        sys.stdout.write(dumps({"deltas": deltas, "failed": sorted(bad)}))
        return 1 if bad else 0

    out_path = Path(args.out)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    out_path.write_text(dumps(probe(args.n, args.m)), encoding="utf-8")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
