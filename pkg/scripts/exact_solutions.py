#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""exact_solutions.py

Ground-truth curves: Poincare ball, hyperbolic cone/cusp, AdS-Schwarzschild.

AdS-Schwarzschild  g = dr^2/V + V dtheta^2 + r^2 g_{S^{n-1}},
V(r) = 1 + r^2 - 2m / r^(n-2), theta of period beta.

Geodesic gauge: dt/t = -dr/sqrt(V), normalized by t r -> 1. With u = 1/r and
W(u) = 1 + u^2 - 2m u^n (so V = W/u^2):

  log t = log u + int_0^u (1/sqrt(W(v)) - 1) / v dv

The integrand has an inverse square-root singularity at the horizon u+ = 1/r+;
that end is integrated against the algebraic weight (u+ - v)^(-1/2).
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass
from typing import Any, Dict, Optional, Tuple

import numpy as np
from numpy.polynomial import polynomial as P
from scipy.integrate import quad
from scipy.interpolate import PchipInterpolator
from scipy.optimize import brentq, minimize_scalar

from contract_warnings import ContractInfoWarning

from .boundary_tensor import BoundaryModel, SymTensorField, metric_of
from .errors import NumericalFailure, RejectedInput
from .fg_series import FGSeries
from .radial_evolution import MetricCurve

log = logging.getLogger(__name__)

QUAD_RTOL = 1e-12
QUAD_ATOL = 1e-14
INVERSION_RTOL = 1e-14
TABLE_SIZE = 400
FIT_WINDOW = (0.04, 0.25)
FIT_DEGREE = 6
FIT_RTOL = 1e-5
BETA_MAX_TOL = 1e-10


# ---------------------------------------------------------------------------
# Poincare and cone
# ---------------------------------------------------------------------------


def poincare_curve(n: int, t_grid: np.ndarray, radius: float = 1.0) -> MetricCurve:
    """g_t = (1 - t^2/4)^2 gamma on the round sphere."""
    t = np.asarray(t_grid, dtype=float)
    if np.any(t >= 2.0):
        raise RejectedInput("t-out-of-range", "Poincare curve degenerates at t = 2")
    model = BoundaryModel.round_sphere(n, radius)
    gamma = metric_of(model)
    b = 1.0 - t**2 / 4.0
    g0 = gamma.values[None, :]
    return MetricCurve(
        gamma=gamma,
        t=t,
        values=(b**2)[:, None] * g0,
        derivs=(-t * b)[:, None] * g0,
        second_derivs=(-1.0 + 0.75 * t**2)[:, None] * g0,
        label="poincare",
    )


def cone_metric_curve(gamma: SymTensorField, t_grid: np.ndarray) -> MetricCurve:
    """The compactified hyperbolic cone t^-2 (dt^2 + gamma): g_t is constant."""
    t = np.asarray(t_grid, dtype=float)
    model = gamma.model
    constant = False
    values = gamma.values
    if model.is_grid:
        ref = values[(0,) * model.n]
        if np.allclose(values, ref, rtol=0.0, atol=1e-14):
            constant = True
            values = ref
    stacked = np.broadcast_to(values, (t.size, *values.shape))
    zeros = np.zeros_like(stacked)
    return MetricCurve(
        gamma=gamma,
        t=t,
        values=stacked,
        derivs=zeros,
        second_derivs=zeros,
        spatially_constant=constant,
        label="cone",
    )


# ---------------------------------------------------------------------------
# AdS-Schwarzschild
# ---------------------------------------------------------------------------


def schwarzschild_v(n: int, m: float, r: np.ndarray) -> np.ndarray:
    r = np.asarray(r, dtype=float)
    return 1.0 + r**2 - 2.0 * m / r ** (n - 2)


def _check_n(n: int) -> None:
    if not 3 <= int(n) <= 7:
        raise RejectedInput("invalid-dimension", f"n must lie in [3, 7], got {n}")


def schwarzschild_rplus(n: int, m: float) -> float:
    """Largest root of V; V is increasing in r so the root is unique."""
    _check_n(n)
    if not m > 0:
        raise RejectedInput("invalid-mass", f"mass must be > 0, got {m}")

    def f(r: float) -> float:
        return r ** (n - 2) * (1.0 + r * r) - 2.0 * m

    hi = max(1.0, (2.0 * m) ** (1.0 / n))
    return float(brentq(f, 0.0, hi, xtol=1e-300, rtol=4.0 * np.finfo(float).eps, maxiter=500))


def schwarzschild_beta(n: int, r_plus: float) -> float:
    """Period of the Euclidean time circle making the horizon smooth."""
    if not r_plus > 0:
        raise RejectedInput("invalid-radius", f"r_plus must be > 0, got {r_plus}")
    return 4.0 * math.pi * r_plus / (n * r_plus**2 + (n - 2))


@dataclass(frozen=True)
class BetaMax:
    n: int
    r_star: float
    beta_max: float
    r_star_stationary: float
    beta_stationary: float
    beta_printed_formula: float

    @property
    def formula_discrepancy(self) -> float:
        return self.beta_printed_formula - self.beta_max

    def to_json(self) -> Dict[str, Any]:
        return {
            "n": self.n,
            "r_star": self.r_star,
            "beta_max": self.beta_max,
            "r_star_stationary": self.r_star_stationary,
            "beta_stationary": self.beta_stationary,
            "beta_printed_formula": self.beta_printed_formula,
            "formula_discrepancy": self.formula_discrepancy,
        }


def schwarzschild_beta_max(n: int) -> BetaMax:
    """Maximize beta(r+) by a grid scan followed by golden-section refinement."""
    _check_n(n)
    grid = np.geomspace(1e-3, 1e3, 4001)
    values = np.array([schwarzschild_beta(n, r) for r in grid])
    i = int(np.argmax(values))
    i = min(max(i, 1), grid.size - 2)
    res = minimize_scalar(
        lambda r: -schwarzschild_beta(n, r),
        bracket=(grid[i - 1], grid[i], grid[i + 1]),
        method="golden",
        tol=1e-12,
    )
    r_star = float(res.x)
    beta_max = schwarzschild_beta(n, r_star)
    r_stat = math.sqrt((n - 2) / n)
    out = BetaMax(
        n=n,
        r_star=r_star,
        beta_max=beta_max,
        r_star_stationary=r_stat,
        beta_stationary=2.0 * math.pi / math.sqrt(n * (n - 2)),
        beta_printed_formula=2.0 * math.pi * math.sqrt((n - 2) / n),
    )
    if abs(out.formula_discrepancy) > 1e-8:
        log.info(
            "n=%d: 2*pi*sqrt((n-2)/n)=%.12g differs from the maximum %.12g of beta(r+)",
            n,
            out.beta_printed_formula,
            beta_max,
        )
        warnings.warn(
            f"n={n}: closed form 2*pi*sqrt((n-2)/n) disagrees with max beta by {out.formula_discrepancy:.3e}",
            ContractInfoWarning,
            stacklevel=2,
        )
    return out


@dataclass(frozen=True)
class SchwarzschildParams:
    n: int
    m: float
    r_plus: float
    beta: float

    def __post_init__(self) -> None:
        _check_n(self.n)
        v = float(schwarzschild_v(self.n, self.m, self.r_plus))
        if abs(v) > 1e-9 * (1.0 + self.r_plus**2):
            raise RejectedInput("invalid-params", f"V(r_plus) = {v:.3e} is not a root")

    @classmethod
    def from_mass(cls, n: int, m: float) -> "SchwarzschildParams":
        r_plus = schwarzschild_rplus(n, m)
        return cls(n=n, m=float(m), r_plus=r_plus, beta=schwarzschild_beta(n, r_plus))

    @property
    def model(self) -> BoundaryModel:
        return BoundaryModel.circle_sphere(self.n, self.beta, 1.0)

    @property
    def u_plus(self) -> float:
        return 1.0 / self.r_plus

    def w(self, u: np.ndarray) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        return 1.0 + u**2 - 2.0 * self.m * u**self.n

    def to_json(self) -> Dict[str, Any]:
        return {"n": self.n, "m": self.m, "rPlus": self.r_plus, "beta": self.beta}


def schwarzschild_g_n(params: SchwarzschildParams) -> SymTensorField:
    """Closed-form order-n coefficient (circle, sphere) = (-2m(n-1)/n, 2m/n), odd n."""
    n, m = params.n, params.m
    if n % 2 == 0:
        raise RejectedInput("odd-dimension", "closed-form g_n is only provided for odd n")
    return SymTensorField.from_blocks(params.model, circle=-2.0 * m * (n - 1) / n, sphere=2.0 * m / n)


class _GaugeMap:
    """log t as a function of u = 1/r, and its inverse."""

    def __init__(self, params: SchwarzschildParams) -> None:
        self.p = params
        self.u_plus = params.u_plus
        self.u_split = 0.5 * self.u_plus
        # w(v) = (u+ - v) q(v)
        self._q, _ = P.polydiv(self._w_coeffs(), np.array([self.u_plus, -1.0]))
        self._inner = self._plain(self.u_split)
        self._outer = self._near_horizon(self.u_split)
        self.log_t_plus = math.log(self.u_plus) + self._inner + self._outer
        self._table()

    def _g(self, v: float) -> float:
        if v == 0.0:
            return 0.0
        return (1.0 / math.sqrt(float(self.p.w(v))) - 1.0) / v

    def _w_coeffs(self) -> np.ndarray:
        c = np.zeros(self.p.n + 1)
        c[0] = 1.0
        c[2] += 1.0
        c[self.p.n] -= 2.0 * self.p.m
        return c

    def _h(self, v: float) -> float:
        # G(v) * sqrt(u+ - v), smooth up to the horizon
        d = max(self.u_plus - v, 0.0)
        return (1.0 / math.sqrt(float(P.polyval(v, self._q))) - math.sqrt(d)) / v

    def _plain(self, u: float) -> float:
        val, _ = quad(self._g, 0.0, u, epsabs=QUAD_ATOL, epsrel=QUAD_RTOL, limit=200)
        return val

    def _near_horizon(self, u: float) -> float:
        val, _ = quad(
            self._h, u, self.u_plus, weight="alg", wvar=(0.0, -0.5), epsabs=QUAD_ATOL, epsrel=QUAD_RTOL, limit=200
        )
        return val

    def log_t(self, u: float) -> float:
        if u <= self.u_split:
            integral = self._plain(u)
        else:
            integral = self._inner + self._outer - self._near_horizon(u)
        return math.log(u) + integral

    def _table(self) -> None:
        s = np.linspace(0.0, 1.0, TABLE_SIZE + 2)[1:-1]
        u = self.u_plus * 0.5 * (1.0 - np.cos(np.pi * s))
        lt = np.array([self.log_t(float(x)) for x in u])
        self._interp = PchipInterpolator(lt, np.log(u))
        self._lt_range = (lt[0], lt[-1])

    def invert(self, t: float) -> float:
        target = math.log(t)
        if target >= self.log_t_plus:
            raise RejectedInput("t-out-of-range", f"t={t} lies at or beyond the horizon t+={math.exp(self.log_t_plus)}")
        if target <= self._lt_range[0]:
            u = t  # t ~ u as u -> 0
        elif target >= self._lt_range[1]:
            u = self.u_plus * (1.0 - 1e-12)
        else:
            u = float(np.exp(self._interp(target)))
        for _ in range(20):
            w = float(self.p.w(u))
            if w <= 0:
                u = 0.5 * (u + self.u_plus * (1.0 - 1e-15))
                continue
            step = (self.log_t(u) - target) * u * math.sqrt(w)
            u_new = min(u - step, self.u_plus * (1.0 - 1e-15))
            if abs(u_new - u) <= INVERSION_RTOL * u:
                return u_new
            u = u_new
        raise NumericalFailure("inversion", f"Newton polish of u(t) did not converge at t={t}")


def schwarzschild_t_plus(params: SchwarzschildParams) -> float:
    return math.exp(_GaugeMap(params).log_t_plus)


def _blocks(params: SchwarzschildParams, t: float, u: float) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(a, a', a'') for the circle and sphere blocks of g_t = t^2 (V dtheta^2 + r^2 g_S)."""
    n, m = params.n, params.m
    w = 1.0 + u * u - 2.0 * m * u**n
    s = math.sqrt(max(w, 0.0))
    w_u = 2.0 * u - 2.0 * m * n * u ** (n - 1)
    q = 2.0 * m * u ** (n - 2)
    q_u = 2.0 * m * (n - 2) * u ** (n - 3) if n > 2 else 0.0

    # circle: a = t^2 W/u^2, a' = t Pc, a'' = Pc + u (W_u Bc + 2 W Bc_u)
    b_c = (1.0 - q) / (s + 1.0) - 0.5 * (n - 2) * q
    p_c = 2.0 * s * b_c
    # d/du of (1 - q)/(s + 1) times (s + 1)^2 s, kept free of 1/s
    b_c_u_times = -q_u * (s + 1.0) * s - (1.0 - q) * 0.5 * w_u
    second_c = p_c + u * (w_u * b_c + 2.0 * s * b_c_u_times / (s + 1.0) ** 2 - 2.0 * w * 0.5 * (n - 2) * q_u)

    # sphere: a = t^2/u^2, a' = t Qs, a'' = Qs + u s Qs_u
    q_s = 2.0 * (q - 1.0) / (1.0 + s)
    second_s = q_s + u * 2.0 * (q_u * (1.0 + s) * s - (q - 1.0) * 0.5 * w_u) / (1.0 + s) ** 2

    a = np.array([t * t * w / (u * u), t * t / (u * u)])
    a1 = np.array([t * p_c, t * q_s])
    a2 = np.array([second_c, second_s])
    return a, a1, a2


def schwarzschild_fg_curve(params: SchwarzschildParams, t_grid: np.ndarray) -> MetricCurve:
    """AdS-Schwarzschild in compactified geodesic gauge as a CircleSphere block curve."""
    t = np.asarray(t_grid, dtype=float)
    gauge = _GaugeMap(params)
    t_plus = math.exp(gauge.log_t_plus)
    if t.size == 0 or t[0] <= 0 or t[-1] >= t_plus:
        raise RejectedInput("t-out-of-range", f"t grid must lie inside (0, {t_plus:.12g})", t_plus=t_plus)
    rows = [_blocks(params, float(ti), gauge.invert(float(ti))) for ti in t]
    model = params.model
    log.debug("schwarzschild_fg_curve n=%d m=%g: t+=%.12g, %d samples", params.n, params.m, t_plus, t.size)
    return MetricCurve(
        gamma=metric_of(model),
        t=t,
        values=np.stack([r[0] for r in rows]),
        derivs=np.stack([r[1] for r in rows]),
        second_derivs=np.stack([r[2] for r in rows]),
        label=f"schwarzschild-n{params.n}-m{params.m:g}",
    )


# ---------------------------------------------------------------------------
# Coefficient extraction
# ---------------------------------------------------------------------------


def _fit_constant(t: np.ndarray, y: np.ndarray, degree: int) -> np.ndarray:
    flat = y.reshape(t.size, -1)
    coef = P.polyfit(t, flat, degree)
    return coef[0].reshape(y.shape[1:])


def extract_coefficient(
    curve: MetricCurve,
    series: FGSeries,
    k: int,
    *,
    window: Tuple[float, float] = FIT_WINDOW,
    degree: int = FIT_DEGREE,
    rtol: float = FIT_RTOL,
) -> SymTensorField:
    """Fit g_(k) from (g_t - sum_{j<k} t^j g_(j)) / t^k, checked against a half-width window."""
    lo, hi = float(window[0]), float(window[1])
    if not 0 < lo < hi:
        raise RejectedInput("invalid-window", f"fit window must satisfy 0 < lo < hi, got {window}")
    if series.model != curve.model:
        raise RejectedInput("model-mismatch", "series and curve live on different models")
    if series.order < k - 1:
        raise RejectedInput("order-too-low", f"series holds orders <= {series.order}, need {k - 1}")

    coeffs = series.coefficient_array()[:k]
    if curve.spatially_constant:
        coeffs = coeffs[(slice(None),) + (0,) * curve.model.n]

    def remainder(mask: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        t = curve.t[mask]
        g = curve.values[mask]
        shape = (-1,) + (1,) * (g.ndim - 1)
        partial = sum(t.reshape(shape) ** j * coeffs[j] for j in range(coeffs.shape[0]))
        return t, (g - partial) / t.reshape(shape) ** k

    full = (curve.t >= lo) & (curve.t <= hi)
    half = (curve.t >= lo) & (curve.t <= 0.5 * (lo + hi))
    if half.sum() < degree + 2:
        raise RejectedInput(
            "empty-window", f"fit needs >= {degree + 2} samples in the half window, got {int(half.sum())}"
        )
    estimate = _fit_constant(*remainder(full), degree)
    check = _fit_constant(*remainder(half), degree)
    spread = float(np.max(np.abs(estimate - check)))
    scale = 1.0 + float(np.max(np.abs(estimate)))
    if spread > rtol * scale:
        raise NumericalFailure(
            "unstable-fit", "coefficient depends on the fit window", spread=spread, tolerance=rtol * scale, k=k
        )
    log.debug("extract_coefficient k=%d: window=(%g, %g) spread=%.3e", k, lo, hi, spread)
    if curve.spatially_constant:
        n = curve.model.n
        estimate = np.broadcast_to(estimate, (*curve.model.grid_shape, n, n))
    return SymTensorField(curve.model, estimate)


def golden_record(params: SchwarzschildParams, g3: SymTensorField, tolerances: Optional[Dict[str, float]] = None) -> Dict[str, Any]:
    """Golden-data record for a Schwarzschild extraction."""
    rec = params.to_json()
    rec["g3_blocks"] = dict(zip(params.model.block_names, g3.values.tolist()))
    rec["tolerances"] = dict(tolerances or {})
    return rec
