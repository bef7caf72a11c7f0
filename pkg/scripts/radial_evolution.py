#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""radial_evolution.py

Integrates the radial Einstein equation t g'' = (n-1) g' + ... away from the
regular singular point t = 0, seeded by a truncated FG series at t0 > 0.

Homogeneous models reduce to one ODE per block; spatially constant torus data
reduce to a single n x n matrix ODE (flat slices). Positive-definiteness is
watched by a terminal event: losing it is a reported outcome, not an error.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.integrate import solve_ivp
from scipy.interpolate import CubicSpline

from contract_warnings import ContractInfoWarning

from . import boundary_tensor as bt
from .boundary_tensor import BoundaryModel, SymTensorField
from .errors import NumericalFailure, RejectedInput
from .fg_series import FGSeries, evaluate_derivatives
from .series_algebra import hamiltonian_times_t, pointwise, radial_equation, riccati_trace, scalar_t

log = logging.getLogger(__name__)

GAUGE_TAG = "geodesic-compactified"
MIN_T0 = 1e-4
DEFAULT_T0 = 1e-2
DEFAULT_SAMPLES = 200
HOMOGENEITY_RTOL = 1e-12
COLLAPSE_RTOL = 1e-3
# trace damping rate in units of n; moves the t^(2n) trace mode to t^(-n)
CONSTRAINT_DAMPING = 3.0
# absolute tolerance relative to rtol
ATOL_RATIO = 1e-3
SEED_FLOOR = 1e-12


@dataclass(frozen=True, eq=False)
class MetricCurve:
    """Sampled curve t -> g_t in the compactified geodesic gauge.

    With ``spatially_constant`` set (torus data independent of theta), the
    arrays hold one n x n matrix per sample instead of the full grid.
    """

    gamma: SymTensorField
    t: np.ndarray
    values: np.ndarray
    derivs: np.ndarray
    second_derivs: Optional[np.ndarray] = None
    spatially_constant: bool = False
    gauge_tag: str = GAUGE_TAG
    breakdown_t: Optional[float] = None
    label: str = ""

    def __post_init__(self) -> None:
        t = np.array(self.t, dtype=float)
        if t.ndim != 1 or t.size == 0:
            raise RejectedInput("invalid-curve", "t grid must be a non-empty 1-D array")
        if np.any(t <= 0) or np.any(np.diff(t) <= 0):
            raise RejectedInput("invalid-curve", "t grid must be positive and strictly increasing")
        layout = self.layout_shape()
        arrays = {}
        for name in ("values", "derivs", "second_derivs"):
            arr = getattr(self, name)
            if arr is None:
                continue
            arr = np.array(arr, dtype=float)
            if arr.shape != (t.size, *layout):
                raise RejectedInput(
                    "shape-mismatch", f"curve {name} expects shape {(t.size, *layout)}, got {arr.shape}"
                )
            if not np.all(np.isfinite(arr)):
                raise RejectedInput("non-finite", f"curve {name} has non-finite entries")
            arr.setflags(write=False)
            arrays[name] = arr
        if np.min(self._min_eigenvalues(arrays["values"])) <= 0:
            raise RejectedInput("not-positive-definite", "curve values must be positive-definite at every sample")
        t.setflags(write=False)
        object.__setattr__(self, "t", t)
        for name, arr in arrays.items():
            object.__setattr__(self, name, arr)

    @property
    def model(self) -> BoundaryModel:
        return self.gamma.model

    def __len__(self) -> int:
        return int(self.t.size)

    def layout_shape(self) -> Tuple[int, ...]:
        if self.spatially_constant:
            return (self.model.n, self.model.n)
        return SymTensorField.shape_for(self.model)

    def reduced_gamma(self) -> np.ndarray:
        if self.spatially_constant:
            return self.gamma.values[(0,) * self.model.n]
        return self.gamma.values

    def _min_eigenvalues(self, values: np.ndarray) -> np.ndarray:
        if self.model.is_grid:
            return np.linalg.eigvalsh(values)[..., 0]
        return values

    def _expand(self, arr: np.ndarray) -> np.ndarray:
        if not self.spatially_constant:
            return arr
        n = self.model.n
        return np.broadcast_to(arr, (*self.model.grid_shape, n, n))

    def at(self, i: int) -> Tuple[SymTensorField, SymTensorField]:
        return (
            SymTensorField(self.model, self._expand(self.values[i])),
            SymTensorField(self.model, self._expand(self.derivs[i])),
        )

    def algebra(self):
        return pointwise(self.model, spatially_constant=self.spatially_constant)

    def component_labels(self) -> List[str]:
        if not self.model.is_grid:
            return list(self.model.block_names)
        if self.spatially_constant:
            n = self.model.n
            return [f"g{i + 1}{j + 1}" for i in range(n) for j in range(i, n)]
        raise RejectedInput("csv-unsupported", "only reduced curves export to CSV")

    def components(self, arr: np.ndarray) -> np.ndarray:
        """Flattened independent components per sample, matching component_labels()."""
        if not self.model.is_grid:
            return arr
        iu = np.triu_indices(self.model.n)
        return arr[:, iu[0], iu[1]]


# ---------------------------------------------------------------------------
# Integration
# ---------------------------------------------------------------------------


def _is_spatially_constant(model: BoundaryModel, arrays: Sequence[np.ndarray]) -> bool:
    if not model.is_grid:
        return False
    for arr in arrays:
        ref = arr[(0,) * model.n]
        if np.max(np.abs(arr - ref)) > HOMOGENEITY_RTOL * (1.0 + np.max(np.abs(ref))):
            return False
    return True


def _reduce(model: BoundaryModel, arr: np.ndarray, constant: bool) -> np.ndarray:
    return arr[(0,) * model.n] if constant else arr


def second_derivative(
    model: BoundaryModel,
    g: np.ndarray,
    gd: np.ndarray,
    t: float,
    *,
    spatially_constant: bool,
    damping: float = 0.0,
) -> np.ndarray:
    """g'' solved from the radial equation at t > 0.

    A nonzero ``damping`` adds -damping C g / ((n-1) t), with C the Hamiltonian
    constraint times t. The term vanishes on the constraint surface and turns
    the trace mode t^(2n) of the linearized system into t^(2n - damping*n).
    """
    alg = pointwise(model, spatially_constant=spatially_constant)
    ts = scalar_t(t)
    rest = radial_equation(alg, g[None], gd[None], np.zeros_like(g)[None], ts)[0]
    gdd = -rest / t
    if damping:
        c = float(hamiltonian_times_t(alg, g[None], gd[None], ts)[0])
        gdd = gdd - damping * c / ((model.n - 1) * t) * g
    return gdd


def _min_eig(model: BoundaryModel, g: np.ndarray) -> float:
    if model.is_grid:
        return float(np.min(np.linalg.eigvalsh(g)))
    return float(np.min(g))


def integrate(
    gamma: SymTensorField,
    g0: np.ndarray,
    gd0: np.ndarray,
    t0: float,
    t1: float,
    tol: float,
    *,
    t_eval: Optional[np.ndarray] = None,
    method: str = "DOP853",
    spatially_constant: Optional[bool] = None,
    damping: float = CONSTRAINT_DAMPING,
) -> MetricCurve:
    """Integrate from an arbitrary state (g, g') at t0 > 0 up to t1.

    The Hamiltonian constraint is damped along the trace direction; pass
    ``damping=0`` to integrate the bare second-order system.
    """
    model = gamma.model
    if not 0 < t0 < t1:
        raise RejectedInput("invalid-window", f"need 0 < t0 < t1, got t0={t0}, t1={t1}")
    if not tol > 0:
        raise RejectedInput("invalid-tolerance", f"tolerance must be > 0, got {tol}")
    if damping < 0:
        raise RejectedInput("invalid-damping", f"damping must be >= 0, got {damping}")
    g0 = np.asarray(g0, dtype=float)
    gd0 = np.asarray(gd0, dtype=float)
    if spatially_constant is None:
        spatially_constant = _is_spatially_constant(model, [gamma.values])
    if model.is_grid:
        if g0.shape == (model.n, model.n):
            if not spatially_constant:
                raise RejectedInput("shape-mismatch", "reduced state requires spatially constant gamma")
        elif _is_spatially_constant(model, [g0, gd0]) and spatially_constant:
            g0 = _reduce(model, g0, True)
            gd0 = _reduce(model, gd0, True)
        else:
            raise RejectedInput(
                "non-homogeneous-seed",
                "radial evolution only handles spatially constant torus data",
            )

    shape = g0.shape
    size = g0.size

    def rhs(t: float, y: np.ndarray) -> np.ndarray:
        g = y[:size].reshape(shape)
        gd = y[size:].reshape(shape)
        gdd = second_derivative(model, g, gd, t, spatially_constant=spatially_constant, damping=damping)
        return np.concatenate([gd.ravel(), gdd.ravel()])

    def positivity(t: float, y: np.ndarray) -> float:
        return _min_eig(model, y[:size].reshape(shape))

    positivity.terminal = True  # type: ignore[attr-defined]
    positivity.direction = -1  # type: ignore[attr-defined]

    if t_eval is None:
        t_eval = np.geomspace(t0, t1, DEFAULT_SAMPLES)
    t_eval = np.asarray(t_eval, dtype=float)
    if t_eval[0] < t0 or t_eval[-1] > t1:
        raise RejectedInput("invalid-window", "t_eval must lie inside [t0, t1]")

    y0 = np.concatenate([g0.ravel(), gd0.ravel()])
    sol = solve_ivp(
        rhs, (t0, t1), y0, method=method, rtol=tol, atol=ATOL_RATIO * tol, dense_output=True, events=positivity
    )
    breakdown_t: Optional[float] = None
    if sol.status == -1:
        # step-size collapse next to a degenerating block counts as breakdown
        last = sol.y[:size, -1].reshape(shape)
        if _min_eig(model, last) > COLLAPSE_RTOL * _min_eig(model, g0):
            raise NumericalFailure("integrator", sol.message, t=float(sol.t[-1]))
        breakdown_t = float(sol.t[-1])
    elif sol.t_events and sol.t_events[0].size:
        breakdown_t = float(sol.t_events[0][0])
    if breakdown_t is not None:
        t_eval = t_eval[t_eval < breakdown_t]
        log.warning("g_t lost positive-definiteness at t=%.6g; curve truncated", breakdown_t)
        warnings.warn(f"positive-definiteness lost at t={breakdown_t:.6g}", ContractInfoWarning, stacklevel=2)
        if t_eval.size == 0:
            raise NumericalFailure("breakdown", "no samples before loss of positivity", t=breakdown_t)

    Y = sol.sol(t_eval)
    values = Y[:size].T.reshape((t_eval.size, *shape))
    derivs = Y[size:].T.reshape((t_eval.size, *shape))
    second = np.stack(
        [
            second_derivative(
                model, values[i], derivs[i], float(t), spatially_constant=spatially_constant, damping=damping
            )
            for i, t in enumerate(t_eval)
        ]
    )
    log.info(
        "integrated %s n=%d on [%.3g, %.3g] tol=%.1e damping=%g: %d steps, %d samples",
        model.kind.value,
        model.n,
        t0,
        t1,
        tol,
        damping,
        sol.t.size,
        t_eval.size,
    )
    return MetricCurve(
        gamma=gamma,
        t=t_eval,
        values=values,
        derivs=derivs,
        second_derivs=second,
        spatially_constant=bool(model.is_grid and spatially_constant),
        breakdown_t=breakdown_t,
    )


def seed_residuals(
    model: BoundaryModel, g: np.ndarray, gd: np.ndarray, gdd: np.ndarray, t: float, *, spatially_constant: bool
) -> Dict[str, float]:
    """Hamiltonian and Riccati-trace residuals of a single state (g, g', g'') at t."""
    alg = pointwise(model, spatially_constant=spatially_constant)
    ts = scalar_t(t)
    ham = hamiltonian_times_t(alg, g[None], gd[None], ts)[0] / t
    ric = riccati_trace(alg, g[None], gd[None], gdd[None], ts)[0]
    return {"hamiltonian": float(np.max(np.abs(ham))), "riccati_trace": float(np.max(np.abs(ric)))}


def evolve(
    series: FGSeries,
    t0: float = DEFAULT_T0,
    t1: float = 1.0,
    tol: float = 1e-10,
    *,
    t_eval: Optional[np.ndarray] = None,
    method: str = "DOP853",
) -> MetricCurve:
    """Seed (g_t0, g'_t0) from the series and integrate to t1."""
    n = series.n
    if t0 <= 0:
        raise RejectedInput("invalid-window", f"t0 must be > 0, got {t0}")
    if t0 < MIN_T0:
        raise NumericalFailure(
            "singular-point", f"t0={t0:g} is too close to the singular point t=0 (minimum {MIN_T0:g})"
        )
    if series.order < n + 2:
        raise RejectedInput("order-too-low", f"seeding needs truncation order >= n+2={n + 2}, got {series.order}")
    if t0 > series.t_max:
        raise RejectedInput("invalid-window", f"t0={t0} exceeds the series reliability radius {series.t_max}")
    model = series.model
    constant = False
    if model.is_grid:
        if not _is_spatially_constant(model, [c.values for c in series.coeffs]):
            raise RejectedInput(
                "non-homogeneous-seed", "radial evolution only handles spatially constant torus data"
            )
        constant = True
    g0, gd0, gdd0 = (_reduce(model, a, constant) for a in evaluate_derivatives(series, t0))
    residuals = seed_residuals(model, g0, gd0, gdd0, t0, spatially_constant=constant)
    limit = max(tol, SEED_FLOOR)
    if max(residuals.values()) > limit:
        raise RejectedInput(
            "seed-residual", "truncated series violates the constraints at t0", limit=limit, **residuals
        )
    return integrate(series.gamma, g0, gd0, t0, t1, tol, t_eval=t_eval, method=method, spatially_constant=constant)


def reseed(curve: MetricCurve, index: int, t1: float, tol: float, *, t_eval: Optional[np.ndarray] = None) -> MetricCurve:
    """Re-integrate from the state stored at curve.t[index]."""
    return integrate(
        curve.gamma,
        curve.values[index],
        curve.derivs[index],
        float(curve.t[index]),
        t1,
        tol,
        t_eval=t_eval,
        spatially_constant=curve.spatially_constant,
    )


# ---------------------------------------------------------------------------
# Constraints and differences
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ConstraintReport:
    """Residual norms per t (or a single record when t is None)."""

    residuals: Dict[str, np.ndarray]
    t: Optional[np.ndarray] = None
    meta: Dict[str, Any] = field(default_factory=dict)

    def max(self, name: Optional[str] = None) -> float:
        if name is not None:
            return float(np.max(self.residuals[name])) if np.size(self.residuals[name]) else 0.0
        return max((self.max(k) for k in self.residuals), default=0.0)

    def __getitem__(self, name: str) -> np.ndarray:
        return self.residuals[name]

    def to_json(self) -> Dict[str, Any]:
        doc: Dict[str, Any] = {
            "max": {k: self.max(k) for k in sorted(self.residuals)},
            "residuals": {k: np.atleast_1d(v).tolist() for k, v in sorted(self.residuals.items())},
        }
        if self.t is not None:
            doc["t"] = self.t.tolist()
        doc.update(self.meta)
        return doc


def _second_derivs(curve: MetricCurve) -> np.ndarray:
    if curve.second_derivs is not None:
        return curve.second_derivs
    if len(curve) < 3:
        raise RejectedInput("too-few-samples", "curve needs >= 3 samples")
    return CubicSpline(curve.t, curve.derivs, axis=0)(curve.t, 1)


def _scalar_norm(curve: MetricCurve, x: np.ndarray) -> float:
    x = np.asarray(x)
    if x.ndim == 0 or curve.spatially_constant:
        return float(np.max(np.abs(x)))
    return bt.scalar_rms(curve.gamma, bt.ScalarField(curve.model, x))


def _tensor_norm(curve: MetricCurve, tau: np.ndarray) -> float:
    model = curve.model
    g = curve.reduced_gamma()
    sq = bt.inner_values(model, g, tau, tau)
    if model.is_grid and not curve.spatially_constant:
        w = np.sqrt(np.linalg.det(g))
        return math.sqrt(max(float(np.mean(sq * w) / np.mean(w)), 0.0))
    return math.sqrt(max(float(sq), 0.0))


def constraint_residuals(curve: MetricCurve) -> ConstraintReport:
    """Gauss-Codazzi, Hamiltonian and Riccati-trace residuals at every sample."""
    if len(curve) < 3:
        raise RejectedInput("too-few-samples", "constraint_residuals needs >= 3 samples")
    alg = curve.algebra()
    gdd_all = _second_derivs(curve)
    riccati = np.empty(len(curve))
    hamiltonian = np.empty(len(curve))
    codazzi = np.zeros(len(curve))
    for i, t in enumerate(curve.t):
        g = curve.values[i][None]
        gd = curve.derivs[i][None]
        gdd = gdd_all[i][None]
        tm = scalar_t(float(t))
        riccati[i] = _scalar_norm(curve, riccati_trace(alg, g, gd, gdd, tm)[0])
        hamiltonian[i] = _scalar_norm(curve, hamiltonian_times_t(alg, g, gd, tm)[0] / t)
        if curve.model.is_grid and not curve.spatially_constant:
            g_t = SymTensorField(curve.model, g[0])
            h = 0.5 * alg.mixed_trace(alg.mul(alg.inverse(g), gd))[0]
            shape_op = SymTensorField(curve.model, 0.5 * gd[0] - h[..., None, None] * g[0])
            codazzi[i] = bt.oneform_rms_norm(curve.gamma, bt.divergence(g_t, shape_op))
    return ConstraintReport(
        residuals={"gauss_codazzi": codazzi, "hamiltonian": hamiltonian, "riccati_trace": riccati},
        t=curve.t,
    )


def einstein_residual(curve: MetricCurve) -> np.ndarray:
    """Tangential Einstein defect |E| / (2t) per sample with g'' from a spline of the sampled values."""
    if len(curve) < 5:
        raise RejectedInput("too-few-samples", "einstein_residual needs >= 5 samples")
    spline = CubicSpline(curve.t, curve.values, axis=0)
    gd = spline(curve.t, 1)
    gdd = spline(curve.t, 2)
    alg = curve.algebra()
    out = np.empty(len(curve))
    for i, t in enumerate(curve.t):
        e = radial_equation(alg, curve.values[i][None], gd[i][None], gdd[i][None], scalar_t(float(t)))[0]
        out[i] = _tensor_norm(curve, e) / (2.0 * t)
    return out


@dataclass(frozen=True)
class CurveDifference:
    t: np.ndarray
    trace_norm: np.ndarray
    trace_free_norm: np.ndarray

    def to_json(self) -> Dict[str, Any]:
        return {"t": self.t.tolist(), "trace_norm": self.trace_norm.tolist(), "trace_free_norm": self.trace_free_norm.tolist()}


def difference(a: MetricCurve, b: MetricCurve) -> CurveDifference:
    """gamma-orthogonal trace / trace-free split of k = b - a per sample."""
    if a.model != b.model:
        raise RejectedInput("model-mismatch", "curves live on different boundary models")
    if a.t.shape != b.t.shape or not np.allclose(a.t, b.t, rtol=1e-14, atol=0.0):
        raise RejectedInput("grid-mismatch", "curves must share the same t grid")
    if a.spatially_constant != b.spatially_constant:
        raise RejectedInput("grid-mismatch", "curves use different tensor layouts")
    model = a.model
    n = model.n
    g0 = a.reduced_gamma()
    tr_norm = np.empty(len(a))
    tf_norm = np.empty(len(a))
    for i in range(len(a)):
        k = b.values[i] - a.values[i]
        tr = bt.trace_values(model, g0, k)
        if model.is_grid:
            tf = k - (tr / n)[..., None, None] * g0
        else:
            tf = k - (tr / n) * g0
        tr_norm[i] = _scalar_norm(a, tr) / math.sqrt(n)
        tf_norm[i] = _tensor_norm(a, tf)
    return CurveDifference(t=a.t, trace_norm=tr_norm, trace_free_norm=tf_norm)


def curve_table(curve: MetricCurve, report: Optional[ConstraintReport] = None) -> Tuple[List[str], np.ndarray]:
    """CSV layout: t, value components, derivative components, then residual columns."""
    labels = curve.component_labels()
    header = ["t"] + [f"g_{c}" for c in labels] + [f"dg_{c}" for c in labels]
    cols = [curve.t[:, None], curve.components(curve.values), curve.components(curve.derivs)]
    if report is not None:
        for name in sorted(report.residuals):
            header.append(name)
            cols.append(np.asarray(report.residuals[name])[:, None])
    return header, np.hstack(cols)
