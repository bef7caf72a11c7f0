#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""diagnostics.py

Decay orders and the two desk-scale experiments built from the other modules:

- unique continuation: evolve two Cauchy data sets on the same boundary and
  measure how fast their difference vanishes at t = 0 (trace and trace-free
  parts separately)
- isometry extension: does a boundary Killing field X survive into the bulk,
  i.e. does L_X g_t vanish, or does it fail at order t^n
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from contract_warnings import FloorWarning

from . import boundary_tensor as bt
from .boundary_tensor import SymTensorField, VectorField
from .constraint_lab import killing_extension_criterion, lie_series_norms
from .errors import RejectedInput
from .fg_series import DEFAULT_ORDER, evaluate, expand
from .radial_evolution import DEFAULT_T0, CurveDifference, difference, evolve

log = logging.getLogger(__name__)

DECAY_FLOOR = 1e-13
MIN_FIT_SAMPLES = 5
DEFAULT_WINDOW = (1e-2, 1e-1)
TRACE_WINDOW = (5e-2, 3e-1)


@dataclass(frozen=True)
class DecayFit:
    exponent: float
    r_squared: Optional[float]
    window: Tuple[float, float]
    floor_hit: bool
    prefactor: float = math.nan
    samples: int = 0

    def to_json(self) -> Dict[str, Any]:
        return {
            "exponent": None if self.floor_hit else self.exponent,
            "rSquared": self.r_squared,
            "window": list(self.window),
            "floorHit": self.floor_hit,
            "prefactor": None if self.floor_hit else self.prefactor,
            "samples": self.samples,
        }


def decay_fit(
    t_grid: np.ndarray,
    norms: np.ndarray,
    window: Tuple[float, float] = DEFAULT_WINDOW,
    *,
    floor: float = DECAY_FLOOR,
) -> DecayFit:
    """Least-squares slope of log|.| against log t inside the window."""
    t = np.asarray(t_grid, dtype=float)
    y = np.asarray(norms, dtype=float)
    lo, hi = float(window[0]), float(window[1])
    if not 0 < lo < hi:
        raise RejectedInput("invalid-window", f"window must satisfy 0 < lo < hi, got {window}")
    if t.shape != y.shape:
        raise RejectedInput("shape-mismatch", "t grid and norms must have the same length")
    if np.any(y < 0) or not np.all(np.isfinite(y)):
        raise RejectedInput("invalid-norms", "norms must be finite and nonnegative")
    mask = (t >= lo) & (t <= hi)
    if mask.sum() < MIN_FIT_SAMPLES:
        raise RejectedInput(
            "empty-window", f"need >= {MIN_FIT_SAMPLES} samples in [{lo:g}, {hi:g}], got {int(mask.sum())}"
        )
    tw, yw = t[mask], y[mask]
    above = yw >= floor
    if np.max(yw) < floor or above.sum() < MIN_FIT_SAMPLES:
        warnings.warn(f"decay data below floor {floor:g} on [{lo:g}, {hi:g}]", FloorWarning, stacklevel=2)
        return DecayFit(exponent=math.nan, r_squared=None, window=(lo, hi), floor_hit=True, samples=int(above.sum()))
    x = np.log(tw[above])
    z = np.log(yw[above])
    slope, intercept = np.polyfit(x, z, 1)
    pred = slope * x + intercept
    ss_res = float(np.sum((z - pred) ** 2))
    ss_tot = float(np.sum((z - np.mean(z)) ** 2))
    r2 = 1.0 if ss_tot == 0.0 else max(0.0, min(1.0, 1.0 - ss_res / ss_tot))
    return DecayFit(
        exponent=float(slope),
        r_squared=r2,
        window=(lo, hi),
        floor_hit=False,
        prefactor=float(math.exp(intercept)),
        samples=int(above.sum()),
    )


@dataclass(frozen=True)
class UniqueContinuationReport:
    trace_free: DecayFit
    trace: DecayFit
    difference: CurveDifference
    max_difference: float

    def to_json(self) -> Dict[str, Any]:
        return {
            "traceFreeExponent": self.trace_free.to_json(),
            "traceExponent": self.trace.to_json(),
            "max_difference": self.max_difference,
        }


def unique_continuation_experiment(
    gamma: SymTensorField,
    g_n_a: SymTensorField,
    g_n_b: SymTensorField,
    *,
    order: int = DEFAULT_ORDER,
    t0: float = DEFAULT_T0,
    t1: Optional[float] = None,
    tol: float = 1e-12,
    tol_b: Optional[float] = None,
    window: Tuple[float, float] = DEFAULT_WINDOW,
    trace_window: Tuple[float, float] = TRACE_WINDOW,
    samples: int = 240,
    floor: float = DECAY_FLOOR,
) -> UniqueContinuationReport:
    """Evolve (gamma, g_n_a) and (gamma, g_n_b) and fit the decay of their difference."""
    if t1 is None:
        t1 = max(window[1], trace_window[1])
    t_eval = np.geomspace(t0, t1, samples)
    curve_a = evolve(expand(gamma, g_n_a, order), t0, t1, tol, t_eval=t_eval)
    curve_b = evolve(expand(gamma, g_n_b, order), t0, t1, tol if tol_b is None else tol_b, t_eval=t_eval)
    diff = difference(curve_a, curve_b)
    report = UniqueContinuationReport(
        trace_free=decay_fit(diff.t, diff.trace_free_norm, window, floor=floor),
        trace=decay_fit(diff.t, diff.trace_norm, trace_window, floor=floor),
        difference=diff,
        max_difference=float(max(np.max(diff.trace_free_norm), np.max(diff.trace_norm))),
    )
    log.info(
        "unique continuation: trace-free exponent=%s trace exponent=%s",
        report.trace_free.exponent,
        report.trace.exponent,
    )
    return report


@dataclass(frozen=True)
class IsometryReport:
    criterion_norm: float
    coefficient_norms: List[float]
    series_residual_orders: List[int]
    t: List[float]
    ratios: List[float]
    extends: bool

    @property
    def leading_order(self) -> Optional[int]:
        return self.series_residual_orders[0] if self.series_residual_orders else None

    @property
    def leading_coefficient(self) -> float:
        k = self.leading_order
        return 0.0 if k is None else self.coefficient_norms[k]

    def to_json(self) -> Dict[str, Any]:
        return {
            "criterionNorm": self.criterion_norm,
            "extends": self.extends,
            "seriesResidualOrders": list(self.series_residual_orders),
            "leadingOrder": self.leading_order,
            "leadingCoefficient": self.leading_coefficient,
            "coefficientNorms": list(self.coefficient_norms),
            "t": list(self.t),
            "ratios": list(self.ratios),
        }


def isometry_extension_experiment(
    gamma: SymTensorField,
    X: VectorField,
    g_n: SymTensorField,
    *,
    order: Optional[int] = None,
    t_grid: Optional[np.ndarray] = None,
    floor: float = 1e-10,
) -> IsometryReport:
    """Killing-extension criterion plus the t-profile of |L_X g_t| / t^n along the series."""
    n = gamma.model.n
    criterion = killing_extension_criterion(gamma, X, g_n)
    series = expand(gamma, g_n, n + 3 if order is None else order)
    norms = lie_series_norms(series, X)
    scale = 1.0 + bt.l2_norm(gamma, gamma)
    orders = [k for k, v in enumerate(norms) if v > floor * scale]
    if t_grid is None:
        t_grid = np.geomspace(1e-2, 0.5 * series.t_max, 12)
    ratios = []
    for t in t_grid:
        g_t, _ = evaluate(series, float(t))
        ratios.append(bt.l2_norm(gamma, bt.lie_derivative(X, g_t)) / float(t) ** n)
    extends = criterion <= floor * scale
    if extends and orders:
        log.warning("criterion vanishes but series orders %s carry L_X residuals", orders)
    return IsometryReport(
        criterion_norm=criterion,
        coefficient_norms=[float(v) for v in norms],
        series_residual_orders=orders,
        t=[float(t) for t in t_grid],
        ratios=[float(r) for r in ratios],
        extends=extends,
    )
