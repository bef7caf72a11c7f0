"""Error kinds shared by the lab modules and the CLI.

Every failure carries a machine-readable ``kind`` so the CLI can emit an
error JSON and pick the exit code:
- 2: rejected input (bad model, non-TT data, resonance, ...)
- 1: numerical failure (unstable fit, Richardson check, integrator)
"""

from __future__ import annotations

from typing import Any, Dict


class FGLabError(Exception):
    exit_code = 1

    def __init__(self, kind: str, message: str, **details: Any) -> None:
        super().__init__(f"{kind}: {message}")
        self.kind = kind
        self.message = message
        self.details = details

    def to_json(self) -> Dict[str, Any]:
        return {
            "error": self.kind,
            "message": self.message,
            "details": {k: _plain(v) for k, v in sorted(self.details.items())},
            "exit_code": self.exit_code,
        }


class RejectedInput(FGLabError, ValueError):
    exit_code = 2


class NumericalFailure(FGLabError, RuntimeError):
    exit_code = 1


def _plain(v: Any) -> Any:
    if isinstance(v, (str, int, bool)) or v is None:
        return v
    if isinstance(v, float):
        return float(v)
    if isinstance(v, (list, tuple)):
        return [_plain(x) for x in v]
    try:
        return float(v)
    except (TypeError, ValueError):
        return repr(v)
