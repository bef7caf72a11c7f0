#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""run_config.py

Run configuration: one TOML profile, overridden by CLI flags.

Profile layout (every section optional):

  [run]        seed, order, allow_log, samples, random_count
  [model]      kind, n, periods, resolution, radius, circle_length, sphere_radius, gamma_warp
  [data]       g_n ("zero" | "profile" | "schwarzschild" | "blocks" | "tt-block" | "poincare"), profile,
               amplitude, blocks = {circle = .., sphere = ..}, g_n_b (same keys, for decay runs)
  [schwarzschild] m
  [tolerances] ode, fit, identity, killing, tt
  [window]     t0, t1, fit = [lo, hi], decay = [lo, hi], trace = [lo, hi]
  [output]     dir

Environment: FGLAB_OUTPUT_DIR overrides [output].dir (flags override both).
"""

from __future__ import annotations

import os
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Any, Dict, Optional, Tuple

import numpy as np

from . import boundary_tensor as bt
from .boundary_tensor import BoundaryModel, ModelKind, SymTensorField
from .constraint_lab import transverse_traceless_profile
from .errors import RejectedInput
from .exact_solutions import SchwarzschildParams, schwarzschild_g_n

OUTPUT_ENV = "FGLAB_OUTPUT_DIR"


def _load_toml(path: Path) -> dict:
    try:
        import tomllib  # py3.11+
    except ModuleNotFoundError:  # pragma: no cover - py3.10
        import tomli as tomllib

    try:
        return tomllib.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise RejectedInput("config-not-found", f"profile not found: {path}") from None
    except tomllib.TOMLDecodeError as exc:
        raise RejectedInput("config-invalid", f"{path}: {exc}") from None


@dataclass(frozen=True)
class Tolerances:
    ode: float = 1e-10
    fit: float = 1e-5
    identity: float = 1e-6
    killing: float = 1e-10
    tt: float = 1e-8

    def __post_init__(self) -> None:
        for k, v in asdict(self).items():
            if not (isinstance(v, (int, float)) and v > 0):
                raise RejectedInput("invalid-config", f"tolerance {k} must be > 0, got {v!r}")


@dataclass(frozen=True)
class RunConfig:
    command: str = ""
    model: Dict[str, Any] = field(default_factory=lambda: {"kind": "RoundSphere", "n": 3, "radius": 1.0})
    gamma_warp: float = 0.0
    data: Dict[str, Any] = field(default_factory=lambda: {"g_n": "zero"})
    m: Optional[float] = None
    tolerances: Tolerances = field(default_factory=Tolerances)
    order: int = 8
    allow_log: bool = False
    t0: float = 1e-2
    t1: float = 1.0
    fit_window: Tuple[float, float] = (0.04, 0.25)
    decay_window: Tuple[float, float] = (1e-2, 1e-1)
    trace_window: Tuple[float, float] = (5e-2, 3e-1)
    samples: int = 200
    random_count: int = 0
    seed: int = 0
    output_dir: str = "out"

    def __post_init__(self) -> None:
        n = self.n
        if self.order < n + 2:
            raise RejectedInput("invalid-config", f"series order must be >= n+2={n + 2}, got {self.order}")
        for name in ("fit_window", "decay_window", "trace_window"):
            lo, hi = getattr(self, name)
            if not 0 < lo < hi:
                raise RejectedInput("invalid-config", f"{name} must satisfy 0 < lo < hi, got {(lo, hi)}")
        if not 0 < self.t0 < self.t1:
            raise RejectedInput("invalid-config", f"need 0 < t0 < t1, got {(self.t0, self.t1)}")
        if self.samples < 5:
            raise RejectedInput("invalid-config", "samples must be >= 5")

    @property
    def n(self) -> int:
        try:
            return int(self.model["n"])
        except (KeyError, TypeError, ValueError):
            raise RejectedInput("invalid-config", "[model].n is required") from None

    def to_dict(self) -> Dict[str, Any]:
        d = asdict(self)
        d["fit_window"] = list(self.fit_window)
        d["decay_window"] = list(self.decay_window)
        d["trace_window"] = list(self.trace_window)
        return d

    def with_overrides(self, **kw: Any) -> "RunConfig":
        clean = {k: v for k, v in kw.items() if v is not None}
        if "model_n" in clean:
            model = dict(self.model)
            n = int(clean.pop("model_n"))
            model["n"] = n
            if "periods" in model:
                model["periods"] = [model["periods"][0]] * n
            clean["model"] = model
        if "resolution" in clean:
            model = dict(clean.get("model", self.model))
            model["resolution"] = int(clean.pop("resolution"))
            clean["model"] = model
        if "ode_tol" in clean:
            clean["tolerances"] = replace(self.tolerances, ode=float(clean.pop("ode_tol")))
        if "profile" in clean:
            data = dict(self.data)
            data["profile"] = clean.pop("profile")
            clean["data"] = data
        return replace(self, **clean)


def _window(section: Dict[str, Any], key: str, default: Tuple[float, float]) -> Tuple[float, float]:
    v = section.get(key)
    if v is None:
        return default
    if not (isinstance(v, list) and len(v) == 2):
        raise RejectedInput("invalid-config", f"[window].{key} must be a two-element list")
    return (float(v[0]), float(v[1]))


def parse_config(doc: Dict[str, Any], command: str = "") -> RunConfig:
    run = doc.get("run", {})
    model = dict(doc.get("model", {"kind": "RoundSphere", "n": 3}))
    window = doc.get("window", {})
    tol = doc.get("tolerances", {})
    output = doc.get("output", {})
    schw = doc.get("schwarzschild", {})
    unknown = set(tol) - {"ode", "fit", "identity", "killing", "tt"}
    if unknown:
        raise RejectedInput("invalid-config", f"unknown tolerance keys: {sorted(unknown)}")
    gamma_warp = float(model.pop("gamma_warp", 0.0))
    defaults = RunConfig()
    out_dir = os.environ.get(OUTPUT_ENV) or output.get("dir") or defaults.output_dir
    return RunConfig(
        command=command or str(run.get("command", "")),
        model=model,
        gamma_warp=gamma_warp,
        data=dict(doc.get("data", {"g_n": "zero"})),
        m=float(schw["m"]) if "m" in schw else None,
        tolerances=Tolerances(**{k: float(v) for k, v in tol.items()}),
        order=int(run.get("order", defaults.order)),
        allow_log=bool(run.get("allow_log", False)),
        t0=float(window.get("t0", defaults.t0)),
        t1=float(window.get("t1", defaults.t1)),
        fit_window=_window(window, "fit", defaults.fit_window),
        decay_window=_window(window, "decay", defaults.decay_window),
        trace_window=_window(window, "trace", defaults.trace_window),
        samples=int(run.get("samples", defaults.samples)),
        random_count=int(run.get("random_count", 0)),
        seed=int(run.get("seed", 0)),
        output_dir=str(out_dir),
    )


def load_config(path: Optional[Path], command: str = "") -> RunConfig:
    doc = _load_toml(path) if path is not None else {}
    return parse_config(doc, command)


# ---------------------------------------------------------------------------
# Building lab objects from a config
# ---------------------------------------------------------------------------


def schwarzschild_params(cfg: RunConfig) -> SchwarzschildParams:
    if cfg.m is None:
        raise RejectedInput("invalid-config", "[schwarzschild].m is required")
    return SchwarzschildParams.from_mass(cfg.n, cfg.m)


def build_model(cfg: RunConfig) -> BoundaryModel:
    desc = dict(cfg.model)
    if desc.get("kind") == ModelKind.CIRCLE_SPHERE.value and cfg.m is not None and "circle_length" not in desc:
        desc["circle_length"] = schwarzschild_params(cfg).beta
    return BoundaryModel.from_descriptor(desc)


def build_gamma(cfg: RunConfig, model: BoundaryModel) -> SymTensorField:
    gamma = bt.metric_of(model)
    if cfg.gamma_warp == 0.0:
        return gamma
    if not model.is_grid:
        raise RejectedInput("invalid-config", "gamma_warp only applies to torus models")
    theta1 = model.mesh()[0]
    values = np.array(gamma.values)
    values[..., 1, 1] = 1.0 + cfg.gamma_warp * np.cos(theta1)
    return SymTensorField(model, values)


def build_g_n(cfg: RunConfig, model: BoundaryModel, gamma: SymTensorField, spec: Optional[Dict[str, Any]] = None) -> SymTensorField:
    spec = cfg.data if spec is None else spec
    kind = spec.get("g_n", "zero")
    amplitude = float(spec.get("amplitude", 1.0))
    if kind == "zero":
        return SymTensorField.zeros(model)
    if kind == "profile":
        return amplitude * transverse_traceless_profile(model, spec.get("profile", "sin"))
    if kind == "schwarzschild":
        return amplitude * schwarzschild_g_n(schwarzschild_params(cfg))
    if kind == "blocks":
        blocks = spec.get("blocks", {})
        return amplitude * SymTensorField.from_blocks(model, **{k: float(v) for k, v in blocks.items()})
    if kind == "tt-block":
        return tt_block(model, amplitude)
    if kind == "poincare":
        # order-n term of (1 - t^2/4)^2 gamma; nonzero only for n = 4
        coeff = 1.0 / 16.0 if model.n == 4 else 0.0
        return coeff * gamma
    raise RejectedInput("invalid-config", f"unknown [data].g_n kind {kind!r}")


def tt_block(model: BoundaryModel, amplitude: float) -> SymTensorField:
    """Trace-free invariant block tensor on S^1 x S^{n-1} (automatically divergence-free)."""
    if model.kind is not ModelKind.CIRCLE_SPHERE:
        raise RejectedInput("model-mismatch", "invariant TT blocks exist on CircleSphere only")
    gamma = bt.metric_of(model)
    g_c, g_s = gamma.values
    return SymTensorField.from_blocks(model, circle=-(model.n - 1) * amplitude * g_c / g_s, sphere=amplitude)


def resolve_output_dir(cfg: RunConfig, flag: Optional[str]) -> Path:
    return Path(flag or cfg.output_dir)
