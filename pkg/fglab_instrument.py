"""Compatibility shim.

Tests and CI call an executable at the repo root named fglab_instrument.py;
the implementation lives in scripts/fglab_instrument.py.
"""

from __future__ import annotations

from scripts.fglab_instrument import main as _main  # noqa: F401

if __name__ == "__main__":
    raise SystemExit(_main())
