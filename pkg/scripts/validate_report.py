#!/usr/bin/env python3
"""
scripts/validate_report.py

Structural validator for the report.json / verify.json envelopes written by
fglab_instrument.

Checks structure only: required keys, types, the config digest and the
schema version. Numbers inside `result` are not judged.

Exit codes:
- 0: OK
- 2: Validation failed
"""
from __future__ import annotations

import json
import os
import re
import sys
from typing import Any, Dict, List, Tuple

if __package__ in (None, ""):
    sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))
    from scripts.reporting import REPORT_SCHEMA_VERSION, config_digest  # type: ignore
else:
    from .reporting import REPORT_SCHEMA_VERSION, config_digest

_SHA_RE = re.compile(r"^[0-9a-f]{64}$")

REQUIRED_TOP = ("schema_version", "command", "config", "config_sha256", "seed", "tolerances", "versions", "result")
REQUIRED_VERSIONS = ("fglab", "numpy", "scipy")


def _fail(msg: str) -> int:
    sys.stderr.write(f"[report] invalid: {msg}\n")
    return 2


def _is_int(x: Any) -> bool:
    return isinstance(x, int) and not isinstance(x, bool)


def validate_report(data: Dict[str, Any]) -> Tuple[bool, str]:
    if not isinstance(data, dict):
        return False, "root must be an object"

    for k in REQUIRED_TOP:
        if k not in data:
            return False, f"missing top-level key: {k}"

    extra = set(data.keys()) - set(REQUIRED_TOP)
    if extra:
        return False, f"unexpected top-level keys: {sorted(extra)}"

    if data["schema_version"] != REPORT_SCHEMA_VERSION:
        return False, f"unsupported schema_version {data['schema_version']!r}"

    if not isinstance(data["command"], str) or not data["command"].strip():
        return False, "command must be a non-empty string"

    if not isinstance(data["config"], dict):
        return False, "config must be an object"

    sha = data["config_sha256"]
    if not isinstance(sha, str) or not _SHA_RE.match(sha):
        return False, f"config_sha256 invalid format: {sha!r}"
    if sha != config_digest(data["config"]):
        return False, "config_sha256 does not match config"

    if not _is_int(data["seed"]) or data["seed"] != data["config"].get("seed"):
        return False, "seed must be an integer equal to config.seed"

    tol = data["tolerances"]
    if not isinstance(tol, dict) or not tol:
        return False, "tolerances must be a non-empty object"
    for k, v in tol.items():
        if not isinstance(v, (int, float)) or isinstance(v, bool) or v <= 0:
            return False, f"tolerances.{k} must be a positive number"

    versions = data["versions"]
    if not isinstance(versions, dict):
        return False, "versions must be an object"
    for k in REQUIRED_VERSIONS:
        if not isinstance(versions.get(k), str):
            return False, f"versions.{k} missing"

    if not isinstance(data["result"], dict):
        return False, "result must be an object"

    return True, "ok"


def main(argv: List[str]) -> int:
    if len(argv) != 2:
        sys.stderr.write("Usage: validate_report.py /path/to/report.json\n")
        return 2

    p = argv[1]
    if not os.path.isfile(p):
        return _fail(f"file not found: {p}")

    try:
        with open(p, "r", encoding="utf-8") as f:
            data = json.load(f)
    except Exception as ex:
        return _fail(f"cannot read JSON: {ex}")

    ok, msg = validate_report(data)
    if not ok:
        return _fail(msg)

    return 0


if __name__ == "__main__":
    raise SystemExit(main(sys.argv))
