#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""constraint_lab.py

Boundary constraint machinery for Cauchy data (gamma, tau_n):

- membership: div tau_n = 0 and tr tau_n = 0 (odd n)
- the Killing pairing identity, for X Killing and div tau = 0:
      int <L_X tau, h> dV = -2 int (div' tau)(X) dV
  where div' is the derivative of div_{gamma + s h} tau at s = 0
- obstruction vector: int (div' tau)(X_a) dV over a Killing basis; a nonzero
  component means div' tau is not in the image of div for this h
- Killing-extension criterion |L_X g_n|
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, Iterable, List, Union

import numpy as np

from . import boundary_tensor as bt
from .boundary_tensor import BoundaryModel, SymTensorField, VectorField
from .errors import NumericalFailure, RejectedInput
from .fg_series import FGSeries
from .radial_evolution import ConstraintReport
from .reporting import array_digest

log = logging.getLogger(__name__)

KILLING_TOL = 1e-10
DIVERGENCE_TOL = 1e-8
MEMBERSHIP_TOL = 1e-8
IDENTITY_TOL = 1e-6

ProfileFn = Union[Callable[[np.ndarray], np.ndarray], str]

PROFILES: Dict[str, Callable[[np.ndarray], np.ndarray]] = {
    "sin": np.sin,
    "cos": np.cos,
    "one": np.ones_like,
    "sin2": lambda x: np.sin(2.0 * x),
    "bump": lambda x: np.exp(np.cos(x)),
}


@dataclass(frozen=True)
class ConstraintPair:
    gamma: SymTensorField
    tau_n: SymTensorField

    def __post_init__(self) -> None:
        bt._require_same_model(self.gamma, self.tau_n)

    @property
    def model(self) -> BoundaryModel:
        return self.gamma.model


def check_membership(pair: ConstraintPair, *, tol: float = MEMBERSHIP_TOL) -> ConstraintReport:
    """Divergence and trace residuals of tau_n; even n only reports divergence (advisory)."""
    gamma, tau = pair.gamma, pair.tau_n
    n = pair.model.n
    div = bt.oneform_rms_norm(gamma, bt.divergence(gamma, tau))
    residuals = {"divergence": np.array([div])}
    advisory = n % 2 == 0
    if not advisory:
        residuals["trace"] = np.array([bt.scalar_rms(gamma, bt.trace(gamma, tau))])
    scale = 1.0 + bt.rms_norm(gamma, tau)
    member = all(float(v[0]) <= tol * scale for v in residuals.values())
    return ConstraintReport(
        residuals=residuals,
        meta={"member": member, "advisory": advisory, "tolerance": tol * scale},
    )


def resolve_profile(f: ProfileFn) -> Callable[[np.ndarray], np.ndarray]:
    if callable(f):
        return f
    try:
        return PROFILES[f]
    except KeyError:
        raise RejectedInput("unknown-profile", f"unknown profile {f!r}; known: {sorted(PROFILES)}") from None


def transverse_traceless_profile(model: BoundaryModel, f: ProfileFn = np.sin) -> SymTensorField:
    """f(theta^1) * (-(n-2) (dtheta^2)^2 + (dtheta^3)^2 + ... + (dtheta^n)^2) on the flat torus."""
    if not model.is_grid:
        raise RejectedInput("model-mismatch", "the transverse-traceless profile lives on the flat torus")
    n = model.n
    fn = resolve_profile(f)
    theta1 = model.mesh()[0]
    diag = np.array([0.0, -(n - 2.0)] + [1.0] * (n - 2))
    values = np.asarray(fn(theta1), dtype=float)[..., None, None] * np.diag(diag)
    return SymTensorField(model, values)


@dataclass(frozen=True)
class IdentityReport:
    lhs: float
    rhs: float
    residual: float
    tolerances: Dict[str, float] = field(default_factory=dict)
    inputs: Dict[str, str] = field(default_factory=dict)
    richardson_discrepancy: float = 0.0

    @property
    def holds(self) -> bool:
        return self.residual <= self.tolerances.get("identity", IDENTITY_TOL)

    def to_json(self) -> Dict[str, Any]:
        return {
            "lhs": self.lhs,
            "rhs": self.rhs,
            "residual": self.residual,
            "holds": self.holds,
            "tolerances": dict(self.tolerances),
            "inputs": dict(self.inputs),
            "richardson_discrepancy": self.richardson_discrepancy,
        }


def _require_killing(gamma: SymTensorField, X: VectorField, tol: float) -> float:
    defect = bt.rms_norm(gamma, bt.killing_operator(gamma, X))
    if defect > tol:
        raise RejectedInput("not-killing", "X is not a Killing field for gamma", defect=defect, tolerance=tol)
    return defect


def _require_divergence_free(gamma: SymTensorField, tau: SymTensorField, tol: float) -> float:
    defect = bt.oneform_rms_norm(gamma, bt.divergence(gamma, tau))
    scale = 1.0 + bt.rms_norm(gamma, tau)
    if defect > tol * scale:
        raise RejectedInput(
            "not-divergence-free", "tau must be divergence-free", defect=defect, tolerance=tol * scale
        )
    return defect


def verify_killing_pairing_identity(
    gamma: SymTensorField,
    X: VectorField,
    tau: SymTensorField,
    h: SymTensorField,
    *,
    killing_tol: float = KILLING_TOL,
    divergence_tol: float = DIVERGENCE_TOL,
    identity_tol: float = IDENTITY_TOL,
) -> IdentityReport:
    """Both sides of int <L_X tau, h> = -2 int (div' tau)(X), computed independently."""
    bt._require_same_model(gamma, X, tau, h)
    _require_killing(gamma, X, killing_tol)
    _require_divergence_free(gamma, tau, divergence_tol)

    lhs = bt.l2_pair(gamma, bt.lie_derivative(X, tau), h)
    dprime, discrepancy = bt.linearized_divergence_richardson(gamma, h, tau)
    if discrepancy > bt.RICHARDSON_RTOL * (1.0 + dprime.max_abs()):
        raise NumericalFailure("richardson", "linearized divergence failed its step-halving check", discrepancy=discrepancy)
    rhs = -2.0 * bt.pair(gamma, dprime, X)
    residual = abs(lhs - rhs) / (1.0 + abs(lhs))
    report = IdentityReport(
        lhs=lhs,
        rhs=rhs,
        residual=residual,
        tolerances={"killing": killing_tol, "divergence": divergence_tol, "identity": identity_tol},
        inputs={
            "gamma": array_digest(gamma.values),
            "X": array_digest(X.values),
            "tau": array_digest(tau.values),
            "h": array_digest(h.values),
        },
        richardson_discrepancy=discrepancy,
    )
    log.debug("pairing identity: lhs=%.12g rhs=%.12g residual=%.3e", lhs, rhs, residual)
    return report


def obstruction_projection(gamma: SymTensorField, tau: SymTensorField, h: SymTensorField) -> np.ndarray:
    """Components int (div' tau)(X_a) dV over the model's Killing basis."""
    model = bt._require_same_model(gamma, tau, h)
    if not model.is_grid and not model.oneform_directions:
        raise RejectedInput("no-killing-basis", f"{model.kind.value} has no enumerable Killing basis for pairing")
    dprime = bt.divergence_linearized(gamma, h, tau)
    return np.array([bt.pair(gamma, dprime, X) for X in bt.killing_basis(model)])


def killing_extension_criterion(
    gamma: SymTensorField, X: VectorField, g_n: SymTensorField, *, killing_tol: float = KILLING_TOL
) -> float:
    """L2 norm of L_X g_n; zero certifies the Killing-extension hypothesis."""
    bt._require_same_model(gamma, X, g_n)
    _require_killing(gamma, X, killing_tol)
    return bt.l2_norm(gamma, bt.lie_derivative(X, g_n))


def lie_series_norms(series: FGSeries, X: VectorField) -> np.ndarray:
    """|L_X g_(k)| for every series coefficient: |L_X g_t| = sum_k t^k of these at leading order."""
    gamma = series.gamma
    return np.array([bt.l2_norm(gamma, bt.lie_derivative(X, c)) for c in series.coeffs])


def stokes_check(
    gamma: SymTensorField, tau: SymTensorField, h: SymTensorField, X: VectorField, s_grid: Iterable[float]
) -> np.ndarray:
    """int codiff_{gamma+sh}(tau(X)) dV_{gamma+sh} for each s; vanishes by the divergence theorem."""
    model = bt._require_same_model(gamma, tau, h, X)
    omega = bt.contract_vector(tau, X)
    out = []
    for s in s_grid:
        g_s = SymTensorField(model, gamma.values + float(s) * h.values)
        out.append(bt.integrate(g_s, bt.codifferential(g_s, omega)))
    return np.array(out)


# ---------------------------------------------------------------------------
# Canonical and randomized inputs
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TorusExample:
    gamma: SymTensorField
    X: VectorField
    tau: SymTensorField
    h: SymTensorField


def canonical_torus_example(n: int = 3, resolution: int = 32, f: ProfileFn = "sin", axis: int = 0) -> TorusExample:
    """gamma flat, X = d_(axis+1), tau = f(theta^1) T, h = L_X tau."""
    model = BoundaryModel.flat_torus(n, resolution=resolution)
    gamma = bt.metric_of(model)
    X = bt.coordinate_vector(model, axis)
    tau = transverse_traceless_profile(model, f)
    return TorusExample(gamma=gamma, X=X, tau=tau, h=bt.lie_derivative(X, tau))


def _trig(model: BoundaryModel, rng: np.random.Generator, axis: int, modes: int) -> np.ndarray:
    theta = model.coordinates()[axis]
    L = model.periods[axis]
    out = np.zeros_like(theta)
    for k in range(1, modes + 1):
        a, b = rng.normal(size=2) / k
        out += a * np.cos(2.0 * math.pi * k * theta / L) + b * np.sin(2.0 * math.pi * k * theta / L)
    return out


def _broadcast_axis(model: BoundaryModel, values: np.ndarray, axis: int) -> np.ndarray:
    shape = [1] * model.n
    shape[axis] = values.size
    return np.broadcast_to(values.reshape(shape), model.grid_shape)


def random_tt_tensor(model: BoundaryModel, rng: np.random.Generator, modes: int = 2) -> SymTensorField:
    """Sum over a of f_a(theta^a) T_a, T_a constant, trace-free, with vanishing a-th row."""
    if not model.is_grid:
        raise RejectedInput("model-mismatch", "random TT tensors are built on the flat torus")
    n = model.n
    values = np.zeros((*model.grid_shape, n, n))
    for a in range(n):
        m = rng.normal(size=(n, n))
        t_a = 0.5 * (m + m.T)
        t_a[a, :] = 0.0
        t_a[:, a] = 0.0
        others = [i for i in range(n) if i != a]
        t_a[others, others] -= np.trace(t_a) / len(others)
        f_a = _broadcast_axis(model, _trig(model, rng, a, modes), a)
        values += f_a[..., None, None] * t_a
    return SymTensorField(model, values)


def random_smooth_tensor(model: BoundaryModel, rng: np.random.Generator, modes: int = 2) -> SymTensorField:
    """Random symmetric band-limited tensor field."""
    if not model.is_grid:
        return SymTensorField(model, rng.normal(size=len(model.block_names)))
    n = model.n
    values = np.zeros((*model.grid_shape, n, n))
    for i in range(n):
        for j in range(i, n):
            comp = np.zeros(model.grid_shape)
            for a in range(n):
                comp += _broadcast_axis(model, _trig(model, rng, a, modes), a)
            values[..., i, j] = comp
            values[..., j, i] = comp
    return SymTensorField(model, values)


def random_killing_field(model: BoundaryModel, rng: np.random.Generator) -> VectorField:
    basis = bt.killing_basis(model)
    coeffs = rng.normal(size=len(basis))
    out = coeffs[0] * basis[0]
    for c, X in zip(coeffs[1:], basis[1:]):
        out = out + c * X
    return out


def randomized_identity_batch(
    n: int, resolution: int, count: int, seed: int, *, identity_tol: float = IDENTITY_TOL
) -> List[IdentityReport]:
    """Identity reports for random (X Killing, tau TT, smooth h) on the flat torus."""
    model = BoundaryModel.flat_torus(n, resolution=resolution)
    gamma = bt.metric_of(model)
    rng = np.random.default_rng(seed)
    reports = []
    for _ in range(count):
        X = random_killing_field(model, rng)
        tau = random_tt_tensor(model, rng)
        h = random_smooth_tensor(model, rng)
        reports.append(verify_killing_pairing_identity(gamma, X, tau, h, identity_tol=identity_tol))
    return reports


def summarize(reports: Iterable[IdentityReport]) -> Dict[str, Any]:
    reports = list(reports)
    residuals = [r.residual for r in reports]
    return {
        "count": len(reports),
        "max_residual": max(residuals, default=0.0),
        "all_hold": all(r.holds for r in reports),
    }
