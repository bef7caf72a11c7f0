#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""fg_series.py

Order-by-order Frobenius solution of the radial Einstein equation near t = 0.

Inserting g_t = sum_k t^k g_(k) into the radial equation and reading off the
t^(k-1) coefficient gives, with S the source built from lower orders,

  k(k-n) g_(k) - k (tr_gamma g_(k)) gamma + S = 0.

Taking the gamma-trace fixes tr g_(k) = -tr S / (k(k-2n)); at k = 2n that
trace equation degenerates and the Riccati trace identity supplies it instead.
At k = n the operator kills the trace-free part: g_(n) is free Cauchy data, and
for even n the trace-free part of S is the log obstruction.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field
from typing import Any, Dict, Optional, Tuple

import numpy as np

from contract_warnings import ContractWarning

from . import boundary_tensor as bt
from .boundary_tensor import BoundaryModel, ModelKind, SymTensorField
from .errors import RejectedInput
from .series_algebra import (
    SeriesAlgebra,
    pointwise,
    radial_equation,
    riccati_trace,
    scalar_t,
    series_terms,
)

log = logging.getLogger(__name__)

SCHEMA_VERSION = "1"
DEFAULT_ORDER = 8
TT_TOL = 1e-8
RESONANCE_TOL = 1e-10


def default_t_max(model: BoundaryModel) -> float:
    """Radius of reliability of a truncated series."""
    return 1.0 if model.kind is ModelKind.ROUND_SPHERE else 0.5


@dataclass(frozen=True)
class RadialOperatorSpec:
    """Model operator t f'' - c f' at the singular point t = 0."""

    c: float

    def __post_init__(self) -> None:
        if not self.c > -1.0:
            raise RejectedInput("invalid-operator", f"drop coefficient must exceed -1, got {self.c}")

    @classmethod
    def trace_operator(cls) -> "RadialOperatorSpec":
        return cls(1.0)

    @classmethod
    def trace_free_operator(cls, n: int) -> "RadialOperatorSpec":
        return cls(float(n - 1))


def indicial_roots(spec: RadialOperatorSpec) -> Tuple[float, float]:
    """Exponents p with t^p solving t f'' - c f' = 0: p(p-1) - c p = 0."""
    return (0.0, spec.c + 1.0)


@dataclass(frozen=True)
class LogObstruction:
    tensor: SymTensorField
    magnitude: float


@dataclass(frozen=True)
class FGSeries:
    gamma: SymTensorField
    coeffs: Tuple[SymTensorField, ...]
    log_obstruction: Optional[LogObstruction] = None
    trace_defect: float = 0.0
    t_max: float = 1.0
    meta: Dict[str, Any] = field(default_factory=dict, compare=False)

    @property
    def model(self) -> BoundaryModel:
        return self.gamma.model

    @property
    def n(self) -> int:
        return self.gamma.model.n

    @property
    def free_index(self) -> int:
        return self.n

    @property
    def order(self) -> int:
        return len(self.coeffs) - 1

    @property
    def g_n(self) -> SymTensorField:
        return self.coeffs[self.n] if self.order >= self.n else SymTensorField.zeros(self.model)

    def coefficient_array(self) -> np.ndarray:
        return np.stack([c.values for c in self.coeffs], axis=0)

    def to_json(self) -> Dict[str, Any]:
        obstruction = None
        if self.log_obstruction is not None:
            obstruction = {
                "magnitude": self.log_obstruction.magnitude,
                "tensor": self.log_obstruction.tensor.values.tolist(),
            }
        return {
            "schema_version": SCHEMA_VERSION,
            "n": self.n,
            "K": self.order,
            "model": self.model.descriptor(),
            "gamma": self.gamma.values.tolist(),
            "coefficients": [c.values.tolist() for c in self.coeffs],
            "log_obstruction": obstruction,
            "trace_defect": self.trace_defect,
            "t_max": self.t_max,
        }

    @classmethod
    def from_json(cls, doc: Dict[str, Any]) -> "FGSeries":
        model = BoundaryModel.from_descriptor(doc["model"])
        gamma = SymTensorField(model, np.asarray(doc["gamma"], dtype=float))
        coeffs = tuple(SymTensorField(model, np.asarray(c, dtype=float)) for c in doc["coefficients"])
        obstruction = None
        if doc.get("log_obstruction"):
            ob = doc["log_obstruction"]
            obstruction = LogObstruction(SymTensorField(model, np.asarray(ob["tensor"])), float(ob["magnitude"]))
        return cls(
            gamma=gamma,
            coeffs=coeffs,
            log_obstruction=obstruction,
            trace_defect=float(doc.get("trace_defect", 0.0)),
            t_max=float(doc.get("t_max", default_t_max(model))),
        )


# ---------------------------------------------------------------------------
# Recursion
# ---------------------------------------------------------------------------


def _times_scalar(model: BoundaryModel, s: np.ndarray, tensor: np.ndarray) -> np.ndarray:
    if model.is_grid:
        return np.asarray(s)[..., None, None] * tensor
    return s * tensor


def _source(model: BoundaryModel, coeffs: np.ndarray, k: int) -> np.ndarray:
    """t^(k-1) coefficient of the radial equation with g_(k) still zero."""
    alg = SeriesAlgebra.for_model(model, k)
    return radial_equation(alg, *series_terms(alg, coeffs[: k + 1]))[k - 1]


def _riccati_coefficient(model: BoundaryModel, coeffs: np.ndarray, k: int) -> np.ndarray:
    alg = SeriesAlgebra.for_model(model, k)
    return riccati_trace(alg, *series_terms(alg, coeffs[: k + 1]))[k - 1]


def _solve_order(gamma: SymTensorField, coeffs: np.ndarray, k: int) -> np.ndarray:
    model = gamma.model
    n = model.n
    g0 = gamma.values
    src = _source(model, coeffs, k)
    if k == 2 * n:
        tr = -2.0 * _riccati_coefficient(model, coeffs, k) / (k * (k - 2))
    else:
        tr = -bt.trace_values(model, g0, src) / (k * (k - 2 * n))
    return (-src + k * _times_scalar(model, tr, g0)) / (k * (k - n))


def _trace_free(gamma: SymTensorField, values: np.ndarray) -> SymTensorField:
    return bt.trace_free_part(gamma, SymTensorField(gamma.model, values))


def _check_tt(gamma: SymTensorField, g_n: SymTensorField, tol: float) -> None:
    scale = 1.0 + bt.rms_norm(gamma, g_n)
    tr = bt.scalar_rms(gamma, bt.trace(gamma, g_n))
    div = bt.oneform_rms_norm(gamma, bt.divergence(gamma, g_n))
    if tr > tol * scale or div > tol * scale:
        raise RejectedInput(
            "non-tt",
            "g_n must be transverse-traceless with respect to gamma for odd n",
            trace_residual=tr,
            divergence_residual=div,
            tolerance=tol * scale,
        )


def expand(
    gamma: SymTensorField,
    g_n: SymTensorField,
    K: int = DEFAULT_ORDER,
    *,
    allow_log: bool = False,
    tt_tol: float = TT_TOL,
    resonance_tol: float = RESONANCE_TOL,
    t_max: Optional[float] = None,
) -> FGSeries:
    """Coefficients g_(0..K) of the series seeded by (gamma, g_n).

    K < n gives the locally determined part only and requires g_n = 0.
    """
    model = bt._require_same_model(gamma, g_n)
    n = model.n
    K = int(K)
    if K < 0:
        raise RejectedInput("invalid-order", f"truncation order must be >= 0, got {K}")
    if K < n and g_n.max_abs() > 0:
        raise RejectedInput(
            "invalid-order",
            f"g_n enters at order n={n}; truncation order K={K} would drop it",
            K=K,
            n=n,
        )

    coeffs = np.zeros((K + 1, *gamma.values.shape))
    coeffs[0] = gamma.values
    obstruction: Optional[LogObstruction] = None
    trace_defect = 0.0
    last = K

    for k in range(1, K + 1):
        if k != n:
            coeffs[k] = _solve_order(gamma, coeffs, k)
            continue

        src = _source(model, coeffs, k)
        tf = _trace_free(gamma, src)
        magnitude = bt.rms_norm(gamma, tf)
        if n % 2:
            _check_tt(gamma, g_n, tt_tol)
        else:
            if magnitude > resonance_tol * (1.0 + bt.rms_norm(gamma, gamma)):
                if not allow_log:
                    raise RejectedInput(
                        "log-resonance",
                        f"order-{n} source has a trace-free part; the expansion needs a t^{n} log t term",
                        magnitude=magnitude,
                    )
                obstruction = LogObstruction(tf, magnitude)
                warnings.warn(
                    f"log obstruction {magnitude:.3e} recorded; series truncated at order {n}",
                    ContractWarning,
                    stacklevel=2,
                )
                last = n
            tr_residual = -(n**2) * bt.trace_values(model, gamma.values, g_n.values) + bt.trace_values(
                model, gamma.values, src
            )
            tr_scale = 1.0 + bt.rms_norm(gamma, SymTensorField(model, src)) + bt.rms_norm(gamma, g_n)
            tr_norm = bt.scalar_rms(gamma, bt.ScalarField(model, tr_residual))
            if tr_norm > tt_tol * tr_scale:
                raise RejectedInput(
                    "trace-constraint",
                    f"tr g_{n} must equal tr S / n^2 for even n",
                    trace_residual=tr_norm,
                    expected_trace=(bt.trace_values(model, gamma.values, src) / n**2).tolist(),
                )
            div = bt.oneform_rms_norm(gamma, bt.divergence(gamma, g_n))
            if div > tt_tol:
                log.info("even n=%d: divergence of g_n is %.3e (advisory only)", n, div)
        coeffs[k] = g_n.values
        trace_defect = bt.scalar_rms(
            gamma, bt.ScalarField(model, _riccati_coefficient(model, coeffs, k))
        )
        if last == n:
            break

    coeffs = coeffs[: last + 1]
    series = FGSeries(
        gamma=gamma,
        coeffs=tuple(SymTensorField(model, c) for c in coeffs),
        log_obstruction=obstruction,
        trace_defect=trace_defect,
        t_max=default_t_max(model) if t_max is None else float(t_max),
    )
    log.debug("expand: model=%s n=%d K=%d trace_defect=%.3e", model.kind.value, n, series.order, trace_defect)
    return series


def resonance_check(gamma: SymTensorField, n: int) -> float:
    """RMS size of the trace-free order-n source: zero iff no t^n log t term is forced."""
    model = gamma.model
    if n % 2:
        raise RejectedInput("odd-dimension", f"resonance only occurs for even n, got {n}")
    if n != model.n:
        raise RejectedInput("model-mismatch", f"n={n} does not match boundary dimension {model.n}")
    coeffs = np.zeros((n + 1, *gamma.values.shape))
    coeffs[0] = gamma.values
    for k in range(1, n):
        coeffs[k] = _solve_order(gamma, coeffs, k)
    return bt.rms_norm(gamma, _trace_free(gamma, _source(model, coeffs, n)))


# ---------------------------------------------------------------------------
# Evaluation
# ---------------------------------------------------------------------------


def evaluate_derivatives(series: FGSeries, t: float) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(g_t, g'_t, g''_t) as raw field arrays."""
    if t < 0:
        raise RejectedInput("t-out-of-range", f"t must be >= 0, got {t}")
    if t > series.t_max:
        log.warning("evaluating series at t=%.3g beyond its reliability radius %.3g", t, series.t_max)
    c = series.coefficient_array()
    shape = (-1,) + (1,) * (c.ndim - 1)
    orders = range(c.shape[0])
    powers = np.array([t**j for j in orders]).reshape(shape)
    d1 = np.array([j * t ** (j - 1) if j >= 1 else 0.0 for j in orders]).reshape(shape)
    d2 = np.array([j * (j - 1) * t ** (j - 2) if j >= 2 else 0.0 for j in orders]).reshape(shape)
    return np.sum(powers * c, axis=0), np.sum(d1 * c, axis=0), np.sum(d2 * c, axis=0)


def evaluate(series: FGSeries, t: float) -> Tuple[SymTensorField, SymTensorField]:
    """(g_t, g'_t) of the truncated series."""
    g, gd, _ = evaluate_derivatives(series, t)
    return SymTensorField(series.model, g), SymTensorField(series.model, gd)


def radial_residual(model: BoundaryModel, g: np.ndarray, gd: np.ndarray, gdd: np.ndarray, t: float) -> np.ndarray:
    """Pointwise left side of the radial equation at a single t."""
    alg = pointwise(model)
    return radial_equation(alg, g[None], gd[None], gdd[None], scalar_t(t))[0]


def series_residual(series: FGSeries, t: float) -> float:
    """RMS gamma-norm of the radial equation evaluated on the truncated polynomial."""
    g, gd, gdd = evaluate_derivatives(series, t)
    res = radial_residual(series.model, g, gd, gdd, t)
    return bt.rms_norm(series.gamma, SymTensorField(series.model, res))


def residual_slope(series: FGSeries, t_grid: np.ndarray) -> Tuple[float, np.ndarray]:
    """Log-log slope of the series residual over t_grid (floor samples dropped)."""
    t_grid = np.asarray(t_grid, dtype=float)
    res = np.array([series_residual(series, float(t)) for t in t_grid])
    keep = res > 1e-15
    if keep.sum() < 2:
        return math.inf, res
    slope = np.polyfit(np.log(t_grid[keep]), np.log(res[keep]), 1)[0]
    return float(slope), res
