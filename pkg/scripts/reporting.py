#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""reporting.py

Deterministic artifacts:
- JSON with sorted keys, floats as repr (round-trip exact)
- CSV with 17 significant digits
- sha256 digests of configs and input arrays
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
from pathlib import Path
from typing import Any, Dict, Iterable, Sequence

import numpy as np
import scipy

from . import __version__

REPORT_SCHEMA_VERSION = "1"


def sha256_bytes(b: bytes) -> str:
    h = hashlib.sha256()
    h.update(b)
    return h.hexdigest()


def sha256_file(path: Path) -> str:
    return sha256_bytes(path.read_bytes())


def array_digest(arr: np.ndarray) -> str:
    a = np.ascontiguousarray(np.asarray(arr, dtype=np.float64))
    return sha256_bytes(repr(a.shape).encode("utf-8") + a.tobytes())


def json_sanitize(obj: Any) -> Any:
    """Plain JSON types only; non-finite floats become strings."""
    if isinstance(obj, dict):
        return {str(k): json_sanitize(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [json_sanitize(x) for x in obj]
    if isinstance(obj, np.ndarray):
        return json_sanitize(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else repr(x)
    if isinstance(obj, Path):
        return str(obj)
    if obj is None or isinstance(obj, str):
        return obj
    return repr(obj)


def dumps(doc: Any) -> str:
    return json.dumps(json_sanitize(doc), indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def config_digest(config: Dict[str, Any]) -> str:
    canonical = json.dumps(json_sanitize(config), sort_keys=True, separators=(",", ":"))
    return sha256_bytes(canonical.encode("utf-8"))


def versions() -> Dict[str, str]:
    return {"fglab": __version__, "numpy": np.__version__, "scipy": scipy.__version__}


def envelope(command: str, config: Dict[str, Any], result: Dict[str, Any], tolerances: Dict[str, float]) -> Dict[str, Any]:
    """Wrap a command result with the provenance every report carries."""
    return {
        "schema_version": REPORT_SCHEMA_VERSION,
        "command": command,
        "config": config,
        "config_sha256": config_digest(config),
        "seed": config.get("seed"),
        "tolerances": tolerances,
        "versions": versions(),
        "result": result,
    }


def write_json(path: Path, doc: Any) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps(doc), encoding="utf-8")
    return path


def write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence[float]]) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(list(header))
        for row in rows:
            w.writerow([format(float(x), ".17g") for x in row])
    return path
