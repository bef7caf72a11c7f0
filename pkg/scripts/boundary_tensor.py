#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""boundary_tensor.py

Tensor calculus on the boundary models (dM, gamma).

Two representations:
- Grid: flat torus T^n sampled on a uniform grid, coordinate components,
  Fourier-spectral differentiation and spectral-mean quadrature.
- HomBlocks: homogeneous models (round S^n, S^1(beta) x S^{n-1}) described by
  one coefficient per irreducible block of the invariant tensors. Every
  invariant tensor there is parallel, so divergences, Killing operators and Lie
  derivatives along the isometry generators vanish in closed form.

Sign convention (fixed by adjointness, checked in tests):
  (d*X)_ij = 1/2 (grad_i X_j + grad_j X_i)
  (div tau)_k = - grad^j tau_jk
so that  l2_pair(gamma, d*X, tau) == pair(gamma, div tau, X).
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import Any, Callable, Dict, List, Sequence, Tuple

import numpy as np
from scipy import fft as sfft
from scipy.special import gamma as gamma_fn

from .errors import NumericalFailure, RejectedInput

log = logging.getLogger(__name__)

MAX_DIM = 7
MIN_DIM = 3
MIN_RESOLUTION = 8

# divergence_linearized: step relative to the metric scale, Richardson acceptance
LINEARIZATION_STEP = 1e-5
RICHARDSON_RTOL = 1e-6

SYMMETRY_RTOL = 1e-10


class ModelKind(str, Enum):
    FLAT_TORUS = "FlatTorus"
    ROUND_SPHERE = "RoundSphere"
    CIRCLE_SPHERE = "CircleSphere"


def unit_sphere_volume(k: int) -> float:
    """Volume of the unit round S^k."""
    return 2.0 * math.pi ** ((k + 1) / 2.0) / gamma_fn((k + 1) / 2.0)


@dataclass(frozen=True)
class BoundaryModel:
    kind: ModelKind
    n: int
    periods: Tuple[float, ...] = ()
    resolution: Tuple[int, ...] = ()
    radius: float = 1.0
    circle_length: float = 2.0 * math.pi
    sphere_radius: float = 1.0

    def __post_init__(self) -> None:
        kind = ModelKind(self.kind)
        object.__setattr__(self, "kind", kind)
        if isinstance(self.n, bool) or not isinstance(self.n, (int, np.integer)):
            raise RejectedInput("invalid-model", f"n must be an integer, got {self.n!r}")
        object.__setattr__(self, "n", int(self.n))
        if not MIN_DIM <= self.n <= MAX_DIM:
            raise RejectedInput("invalid-model", f"n must lie in [{MIN_DIM},{MAX_DIM}], got {self.n}")

        if kind is ModelKind.FLAT_TORUS:
            periods = tuple(float(p) for p in self.periods)
            resolution = tuple(int(r) for r in self.resolution)
            if len(periods) != self.n or len(resolution) != self.n:
                raise RejectedInput("invalid-model", "FlatTorus needs n periods and n resolutions")
            if any(not p > 0 for p in periods):
                raise RejectedInput("invalid-model", f"periods must be > 0: {periods}")
            if any(r < MIN_RESOLUTION or r % 2 for r in resolution):
                raise RejectedInput(
                    "invalid-model", f"grid resolutions must be even and >= {MIN_RESOLUTION}: {resolution}"
                )
            object.__setattr__(self, "periods", periods)
            object.__setattr__(self, "resolution", resolution)
        else:
            if self.periods or self.resolution:
                raise RejectedInput("invalid-model", f"{kind.value} carries no grid")
            for name in ("radius", "circle_length", "sphere_radius"):
                v = float(getattr(self, name))
                if not v > 0:
                    raise RejectedInput("invalid-model", f"{name} must be > 0, got {v}")
                object.__setattr__(self, name, v)

    # -- constructors -------------------------------------------------------

    @classmethod
    def flat_torus(
        cls, n: int, periods: Sequence[float] | None = None, resolution: int | Sequence[int] = 16
    ) -> "BoundaryModel":
        if periods is None:
            periods = (2.0 * math.pi,) * n
        if isinstance(resolution, (int, np.integer)):
            resolution = (int(resolution),) * n
        return cls(ModelKind.FLAT_TORUS, n, periods=tuple(periods), resolution=tuple(resolution))

    @classmethod
    def round_sphere(cls, n: int, radius: float = 1.0) -> "BoundaryModel":
        return cls(ModelKind.ROUND_SPHERE, n, radius=radius)

    @classmethod
    def circle_sphere(cls, n: int, beta: float, sphere_radius: float = 1.0) -> "BoundaryModel":
        return cls(ModelKind.CIRCLE_SPHERE, n, circle_length=beta, sphere_radius=sphere_radius)

    # -- structure ----------------------------------------------------------

    @property
    def is_grid(self) -> bool:
        return self.kind is ModelKind.FLAT_TORUS

    @property
    def grid_shape(self) -> Tuple[int, ...]:
        return self.resolution

    @property
    def block_names(self) -> Tuple[str, ...]:
        if self.kind is ModelKind.ROUND_SPHERE:
            return ("sphere",)
        if self.kind is ModelKind.CIRCLE_SPHERE:
            return ("circle", "sphere")
        return ()

    @property
    def block_dims(self) -> np.ndarray:
        if self.kind is ModelKind.ROUND_SPHERE:
            return np.array([float(self.n)])
        if self.kind is ModelKind.CIRCLE_SPHERE:
            return np.array([1.0, float(self.n - 1)])
        raise RejectedInput("model-mismatch", "block dimensions only exist on homogeneous models")

    @property
    def block_ricci(self) -> np.ndarray:
        """Ricci blocks of any block metric (Ricci is scale invariant on each factor)."""
        if self.kind is ModelKind.ROUND_SPHERE:
            return np.array([float(self.n - 1)])
        if self.kind is ModelKind.CIRCLE_SPHERE:
            return np.array([0.0, float(self.n - 2)])
        raise RejectedInput("model-mismatch", "block Ricci only exists on homogeneous models")

    @property
    def vector_directions(self) -> Tuple[str, ...]:
        if self.kind is ModelKind.ROUND_SPHERE:
            return ("rotation",)
        if self.kind is ModelKind.CIRCLE_SPHERE:
            return ("circle",)
        return tuple(f"theta{a + 1}" for a in range(self.n))

    @property
    def oneform_directions(self) -> Tuple[str, ...]:
        # S^n carries no invariant one-form
        if self.kind is ModelKind.ROUND_SPHERE:
            return ()
        return self.vector_directions

    def coordinates(self) -> List[np.ndarray]:
        if not self.is_grid:
            raise RejectedInput("model-mismatch", "coordinates only exist on the torus grid")
        return [np.arange(N) * (L / N) for L, N in zip(self.periods, self.resolution)]

    def mesh(self) -> Tuple[np.ndarray, ...]:
        return tuple(np.meshgrid(*self.coordinates(), indexing="ij"))

    @property
    def coordinate_volume(self) -> float:
        return float(np.prod(self.periods))

    def descriptor(self) -> Dict[str, Any]:
        d: Dict[str, Any] = {"kind": self.kind.value, "n": self.n}
        if self.is_grid:
            d["periods"] = list(self.periods)
            d["resolution"] = list(self.resolution)
        elif self.kind is ModelKind.ROUND_SPHERE:
            d["radius"] = self.radius
        else:
            d["circle_length"] = self.circle_length
            d["sphere_radius"] = self.sphere_radius
        return d

    @classmethod
    def from_descriptor(cls, d: Dict[str, Any]) -> "BoundaryModel":
        try:
            kind = ModelKind(d.get("kind", ""))
        except ValueError:
            raise RejectedInput("unknown-model", f"unknown model kind {d.get('kind')!r}") from None
        n = d.get("n")
        if kind is ModelKind.FLAT_TORUS:
            res = d.get("resolution", 16)
            return cls.flat_torus(n, d.get("periods"), res)
        if kind is ModelKind.ROUND_SPHERE:
            return cls.round_sphere(n, d.get("radius", 1.0))
        return cls.circle_sphere(n, d.get("circle_length", d.get("beta", 2.0 * math.pi)), d.get("sphere_radius", 1.0))


# ---------------------------------------------------------------------------
# Fields
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class _Field:
    model: BoundaryModel
    values: np.ndarray

    def __post_init__(self) -> None:
        arr = np.array(self.values, dtype=float)
        expected = self.shape_for(self.model)
        if arr.shape != expected:
            raise RejectedInput(
                "shape-mismatch",
                f"{type(self).__name__} on {self.model.kind.value} expects shape {expected}, got {arr.shape}",
            )
        if not np.all(np.isfinite(arr)):
            raise RejectedInput("non-finite", f"{type(self).__name__} has non-finite entries")
        arr = self._normalise(arr)
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    @classmethod
    def shape_for(cls, model: BoundaryModel) -> Tuple[int, ...]:
        raise NotImplementedError

    @classmethod
    def zeros(cls, model: BoundaryModel):
        return cls(model, np.zeros(cls.shape_for(model)))

    def _normalise(self, arr: np.ndarray) -> np.ndarray:
        return arr

    def _like(self, values: np.ndarray):
        return type(self)(self.model, values)

    def __add__(self, other: "_Field"):
        _require_same_model(self, other)
        return self._like(self.values + other.values)

    def __sub__(self, other: "_Field"):
        _require_same_model(self, other)
        return self._like(self.values - other.values)

    def __neg__(self):
        return self._like(-self.values)

    def __mul__(self, c: float):
        return self._like(float(c) * self.values)

    __rmul__ = __mul__

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.values))) if self.values.size else 0.0


class SymTensorField(_Field):
    """Symmetric 2-tensor: (*grid, n, n) on the torus, one coefficient per block otherwise."""

    @classmethod
    def shape_for(cls, model: BoundaryModel) -> Tuple[int, ...]:
        if model.is_grid:
            return (*model.grid_shape, model.n, model.n)
        return (len(model.block_names),)

    def _normalise(self, arr: np.ndarray) -> np.ndarray:
        if not self.model.is_grid:
            return arr
        asym = np.max(np.abs(arr - np.swapaxes(arr, -1, -2)))
        if asym > SYMMETRY_RTOL * (1.0 + np.max(np.abs(arr))):
            raise RejectedInput("not-symmetric", f"tensor field is not symmetric (max defect {asym:.3e})")
        return 0.5 * (arr + np.swapaxes(arr, -1, -2))

    def times(self, f: "ScalarField | np.ndarray") -> "SymTensorField":
        """Pointwise product with a scalar function."""
        s = f.values if isinstance(f, ScalarField) else np.asarray(f, dtype=float)
        if self.model.is_grid:
            return self._like(self.values * s[..., None, None])
        return self._like(self.values * s)

    @classmethod
    def from_blocks(cls, model: BoundaryModel, **blocks: float) -> "SymTensorField":
        unknown = set(blocks) - set(model.block_names)
        if unknown:
            raise RejectedInput("shape-mismatch", f"unknown blocks {sorted(unknown)} for {model.kind.value}")
        return cls(model, np.array([float(blocks.get(b, 0.0)) for b in model.block_names]))

    @classmethod
    def constant(cls, model: BoundaryModel, matrix: np.ndarray) -> "SymTensorField":
        m = np.asarray(matrix, dtype=float)
        return cls(model, np.broadcast_to(m, (*model.grid_shape, model.n, model.n)))


class VectorField(_Field):
    @classmethod
    def shape_for(cls, model: BoundaryModel) -> Tuple[int, ...]:
        if model.is_grid:
            return (*model.grid_shape, model.n)
        return (len(model.vector_directions),)


class OneFormField(_Field):
    @classmethod
    def shape_for(cls, model: BoundaryModel) -> Tuple[int, ...]:
        if model.is_grid:
            return (*model.grid_shape, model.n)
        return (len(model.oneform_directions),)


class ScalarField(_Field):
    @classmethod
    def shape_for(cls, model: BoundaryModel) -> Tuple[int, ...]:
        if model.is_grid:
            return model.grid_shape
        return ()


def _require_same_model(*fields: _Field) -> BoundaryModel:
    model = fields[0].model
    for f in fields[1:]:
        if f.model != model:
            raise RejectedInput(
                "model-mismatch", f"fields live on different models: {model.descriptor()} vs {f.model.descriptor()}"
            )
    return model


# ---------------------------------------------------------------------------
# Spectral machinery (torus)
# ---------------------------------------------------------------------------


def _wavenumbers(model: BoundaryModel, axis: int) -> np.ndarray:
    N = model.resolution[axis]
    L = model.periods[axis]
    k = 2.0 * math.pi * sfft.rfftfreq(N, d=L / N)
    k[-1] = 0.0  # Nyquist mode of an odd derivative
    return k


def spectral_derivative(values: np.ndarray, model: BoundaryModel, axis: int, offset: int = 0) -> np.ndarray:
    """d/dtheta^axis of grid data whose grid axes start at ``offset``."""
    ax = offset + axis
    N = model.resolution[axis]
    shape = [1] * values.ndim
    shape[ax] = N // 2 + 1
    k = _wavenumbers(model, axis).reshape(shape)
    return sfft.irfft(1j * k * sfft.rfft(values, axis=ax), n=N, axis=ax)


def partials(values: np.ndarray, model: BoundaryModel, offset: int = 0) -> np.ndarray:
    """Stack of d_a values; the new index a sits right after the grid axes."""
    return np.stack(
        [spectral_derivative(values, model, a, offset) for a in range(model.n)], axis=offset + model.n
    )


def lowered_christoffel(dg: np.ndarray) -> np.ndarray:
    """Gamma_{l,ij} = 1/2 (d_i g_jl + d_j g_il - d_l g_ij) from dg[..., a, i, j] = d_a g_ij."""
    return 0.5 * (
        np.einsum("...ijl->...lij", dg) + np.einsum("...jil->...lij", dg) - dg
    )


def inverse_metric(gamma: SymTensorField) -> np.ndarray:
    if gamma.model.is_grid:
        return np.linalg.inv(gamma.values)
    return 1.0 / gamma.values


def christoffel(gamma: SymTensorField) -> np.ndarray:
    """Gamma^k_ij on the torus grid, shape (*grid, k, i, j)."""
    model = gamma.model
    if not model.is_grid:
        raise RejectedInput("model-mismatch", "christoffel symbols are only tabulated on the torus grid")
    return _christoffel_values(gamma.values, model)


def _christoffel_values(g: np.ndarray, model: BoundaryModel) -> np.ndarray:
    ginv = np.linalg.inv(g)
    low = lowered_christoffel(partials(g, model))
    return np.einsum("...kl,...lij->...kij", ginv, low)


def _integrate(model: BoundaryModel, density: np.ndarray) -> float:
    """Spectral quadrature: exact mean over the grid times coordinate volume."""
    return float(np.mean(density) * model.coordinate_volume)


def _sqrt_det(g: np.ndarray) -> np.ndarray:
    return np.sqrt(np.linalg.det(g))


def _block_volume(model: BoundaryModel, g: np.ndarray) -> np.ndarray:
    if model.kind is ModelKind.ROUND_SPHERE:
        return unit_sphere_volume(model.n) * g[..., 0] ** (model.n / 2.0)
    return (
        model.circle_length
        * np.sqrt(g[..., 0])
        * unit_sphere_volume(model.n - 1)
        * g[..., 1] ** ((model.n - 1) / 2.0)
    )


# ---------------------------------------------------------------------------
# Operations
# ---------------------------------------------------------------------------


def metric_of(model: BoundaryModel) -> SymTensorField:
    """The model's boundary metric gamma."""
    if model.is_grid:
        return SymTensorField.constant(model, np.eye(model.n))
    if model.kind is ModelKind.ROUND_SPHERE:
        return SymTensorField.from_blocks(model, sphere=model.radius**2)
    # circle coordinate runs over [0, beta); its block is normalized to 1
    return SymTensorField.from_blocks(model, circle=1.0, sphere=model.sphere_radius**2)


def volume(gamma: SymTensorField) -> float:
    model = gamma.model
    if model.is_grid:
        return _integrate(model, _sqrt_det(gamma.values))
    return float(_block_volume(model, gamma.values))


def trace(gamma: SymTensorField, tau: SymTensorField) -> ScalarField:
    model = _require_same_model(gamma, tau)
    return ScalarField(model, trace_values(model, gamma.values, tau.values))


def trace_values(model: BoundaryModel, g: np.ndarray, tau: np.ndarray) -> np.ndarray:
    """Pointwise g-trace; both arrays may carry matching leading batch axes."""
    if model.is_grid:
        return np.einsum("...ij,...ij->...", np.linalg.inv(g), tau)
    return np.sum(model.block_dims * tau / g, axis=-1)


def trace_free_part(gamma: SymTensorField, tau: SymTensorField) -> SymTensorField:
    model = _require_same_model(gamma, tau)
    tr = trace_values(model, gamma.values, tau.values)
    if model.is_grid:
        return tau._like(tau.values - (tr / model.n)[..., None, None] * gamma.values)
    return tau._like(tau.values - (tr / model.n) * gamma.values)


def inner_values(model: BoundaryModel, g: np.ndarray, tau: np.ndarray, sigma: np.ndarray) -> np.ndarray:
    """Pointwise <tau, sigma>_g, batch axes allowed."""
    if model.is_grid:
        ginv = np.linalg.inv(g)
        a = np.matmul(ginv, tau)
        b = np.matmul(ginv, sigma)
        return np.einsum("...ij,...ji->...", a, b)
    return np.sum(model.block_dims * tau * sigma / g**2, axis=-1)


def divergence(gamma: SymTensorField, tau: SymTensorField) -> OneFormField:
    """(div tau)_k = - g^ij grad_i tau_jk (formal adjoint of killing_operator)."""
    model = _require_same_model(gamma, tau)
    if not model.is_grid:
        return OneFormField.zeros(model)
    return OneFormField(model, _divergence_values(model, gamma.values, tau.values))


def _divergence_values(model: BoundaryModel, g: np.ndarray, tau: np.ndarray) -> np.ndarray:
    ginv = np.linalg.inv(g)
    gam = np.einsum("...kl,...lij->...kij", ginv, lowered_christoffel(partials(g, model)))
    nabla = (
        partials(tau, model)
        - np.einsum("...lij,...lk->...ijk", gam, tau)
        - np.einsum("...lik,...jl->...ijk", gam, tau)
    )
    return -np.einsum("...ij,...ijk->...k", ginv, nabla)


def killing_operator(gamma: SymTensorField, X: VectorField) -> SymTensorField:
    """d*X = 1/2 (grad X_flat + transpose) = 1/2 L_X gamma."""
    model = _require_same_model(gamma, X)
    if not model.is_grid:
        # the block metrics are invariant under the rotation generators
        return SymTensorField.zeros(model)
    g = gamma.values
    x_flat = np.einsum("...jk,...k->...j", g, X.values)
    gam = _christoffel_values(g, model)
    nabla = partials(x_flat, model) - np.einsum("...lij,...l->...ij", gam, x_flat)
    return SymTensorField(model, 0.5 * (nabla + np.swapaxes(nabla, -1, -2)))


def lie_derivative(X: VectorField, tau: SymTensorField) -> SymTensorField:
    """Coordinate Lie derivative (L_X tau)_ij = X^k d_k tau_ij + tau_kj d_i X^k + tau_ik d_j X^k."""
    model = _require_same_model(X, tau)
    if not model.is_grid:
        return SymTensorField.zeros(model)
    dtau = partials(tau.values, model)
    dx = partials(X.values, model)
    out = (
        np.einsum("...k,...kij->...ij", X.values, dtau)
        + np.einsum("...kj,...ik->...ij", tau.values, dx)
        + np.einsum("...ik,...jk->...ij", tau.values, dx)
    )
    return SymTensorField(model, out)


def l2_pair(gamma: SymTensorField, tau: SymTensorField, sigma: SymTensorField) -> float:
    """Integral of <tau, sigma>_gamma dV_gamma."""
    model = _require_same_model(gamma, tau, sigma)
    density = inner_values(model, gamma.values, tau.values, sigma.values)
    if model.is_grid:
        return _integrate(model, density * _sqrt_det(gamma.values))
    return float(density * _block_volume(model, gamma.values))


def l2_norm(gamma: SymTensorField, tau: SymTensorField) -> float:
    return math.sqrt(max(l2_pair(gamma, tau, tau), 0.0))


def rms_norm(gamma: SymTensorField, tau: SymTensorField) -> float:
    """Volume-normalized L2 norm; equals the pointwise norm on homogeneous models."""
    return l2_norm(gamma, tau) / math.sqrt(volume(gamma))


def pair(gamma: SymTensorField, omega: OneFormField, X: VectorField) -> float:
    """Integral of omega(X) dV_gamma."""
    model = _require_same_model(gamma, omega, X)
    if model.is_grid:
        density = np.einsum("...k,...k->...", omega.values, X.values)
        return _integrate(model, density * _sqrt_det(gamma.values))
    shared = [d for d in model.oneform_directions if d in model.vector_directions]
    if not shared:
        return 0.0
    w = dict(zip(model.oneform_directions, omega.values))
    x = dict(zip(model.vector_directions, X.values))
    return float(sum(w[d] * x[d] for d in shared) * _block_volume(model, gamma.values))


def oneform_rms_norm(gamma: SymTensorField, omega: OneFormField) -> float:
    model = _require_same_model(gamma, omega)
    if model.is_grid:
        g = gamma.values
        sq = np.einsum("...ij,...i,...j->...", np.linalg.inv(g), omega.values, omega.values)
        vol_density = _sqrt_det(g)
        return math.sqrt(max(_integrate(model, sq * vol_density), 0.0) / _integrate(model, vol_density))
    if not model.oneform_directions:
        return 0.0
    # the only invariant one-form is the circle direction
    return float(abs(omega.values[0]) / math.sqrt(gamma.values[0]))


def scalar_rms(gamma: SymTensorField, f: ScalarField) -> float:
    model = _require_same_model(gamma, f)
    if model.is_grid:
        vol_density = _sqrt_det(gamma.values)
        return math.sqrt(_integrate(model, f.values**2 * vol_density) / _integrate(model, vol_density))
    return float(abs(f.values))


def codifferential(gamma: SymTensorField, omega: OneFormField) -> ScalarField:
    """delta omega = -(1/sqrt g) d_i (sqrt g g^ij omega_j)."""
    model = _require_same_model(gamma, omega)
    if not model.is_grid:
        return ScalarField.zeros(model)
    g = gamma.values
    sg = _sqrt_det(g)
    flux = sg[..., None] * np.einsum("...ij,...j->...i", np.linalg.inv(g), omega.values)
    div = sum(spectral_derivative(flux[..., a], model, a) for a in range(model.n))
    return ScalarField(model, -div / sg)


def contract_vector(tau: SymTensorField, X: VectorField) -> OneFormField:
    """The one-form tau(X, .)."""
    model = _require_same_model(tau, X)
    if not model.is_grid:
        return OneFormField.zeros(model)
    return OneFormField(model, np.einsum("...ij,...i->...j", tau.values, X.values))


def integrate(gamma: SymTensorField, f: ScalarField) -> float:
    model = _require_same_model(gamma, f)
    if model.is_grid:
        return _integrate(model, f.values * _sqrt_det(gamma.values))
    return float(f.values * _block_volume(model, gamma.values))


def _central_difference(gamma: SymTensorField, h: SymTensorField, tau: SymTensorField, s: float) -> np.ndarray:
    model = gamma.model
    plus = _divergence_values(model, gamma.values + s * h.values, tau.values)
    minus = _divergence_values(model, gamma.values - s * h.values, tau.values)
    return (plus - minus) / (2.0 * s)


def linearized_divergence_richardson(
    gamma: SymTensorField, h: SymTensorField, tau: SymTensorField, eps: float = LINEARIZATION_STEP
) -> Tuple[OneFormField, float]:
    """Richardson-extrapolated d/ds div_{gamma+sh} tau at s=0, plus the step-halving discrepancy."""
    model = _require_same_model(gamma, h, tau)
    if not model.is_grid:
        return OneFormField.zeros(model), 0.0
    h_scale = h.max_abs()
    if h_scale == 0.0:
        return OneFormField.zeros(model), 0.0
    s = eps * gamma.max_abs() / h_scale
    d_full = _central_difference(gamma, h, tau, s)
    d_half = _central_difference(gamma, h, tau, 0.5 * s)
    discrepancy = float(np.max(np.abs(d_full - d_half)))
    return OneFormField(model, d_half + (d_half - d_full) / 3.0), discrepancy


def divergence_linearized(
    gamma: SymTensorField,
    h: SymTensorField,
    tau: SymTensorField,
    *,
    eps: float = LINEARIZATION_STEP,
    rtol: float = RICHARDSON_RTOL,
) -> OneFormField:
    value, discrepancy = linearized_divergence_richardson(gamma, h, tau, eps)
    scale = 1.0 + value.max_abs()
    if discrepancy > rtol * scale:
        raise NumericalFailure(
            "richardson",
            "step-halving discrepancy of the linearized divergence exceeds tolerance",
            discrepancy=discrepancy,
            tolerance=rtol * scale,
        )
    log.debug("divergence_linearized: discrepancy=%.3e (eps=%.1e)", discrepancy, eps)
    return value


# ---------------------------------------------------------------------------
# Killing fields
# ---------------------------------------------------------------------------


def coordinate_vector(model: BoundaryModel, axis: int) -> VectorField:
    """Constant coordinate field d_axis on the torus (0-based axis)."""
    if not model.is_grid:
        raise RejectedInput("model-mismatch", "coordinate fields only exist on the torus grid")
    e = np.zeros(model.n)
    e[axis] = 1.0
    return VectorField(model, np.broadcast_to(e, (*model.grid_shape, model.n)))


def killing_basis(model: BoundaryModel) -> List[VectorField]:
    """Enumerable Killing basis: torus translations, or the rotation generator of the homogeneous models."""
    if model.is_grid:
        return [coordinate_vector(model, a) for a in range(model.n)]
    return [VectorField(model, np.ones(len(model.vector_directions)))]


def vector_from_function(model: BoundaryModel, fn: Callable[..., Sequence[np.ndarray]]) -> VectorField:
    """Grid vector field from components fn(theta_1, ..., theta_n) -> n arrays."""
    comps = fn(*model.mesh())
    return VectorField(model, np.stack([np.broadcast_to(c, model.grid_shape) for c in comps], axis=-1))
