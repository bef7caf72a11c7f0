#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""series_algebra.py

Truncated power-series arithmetic for curves t -> g_t of boundary tensors, and
the radial Einstein expressions built on it.

A series of order K is an array whose leading axis holds the coefficients
t^0..t^K; the remaining axes are the field layout of the model (grid matrices
on the torus, block coefficients on homogeneous models). An order-0 algebra
doubles as pointwise arithmetic at a fixed t.

Radial equation in the compactified geodesic gauge (M = g^-1 g', H = tr M / 2):

  E = t g'' - (n-1) g' - (tr M) g - 2 t Ric(g_t) + 1/2 t (tr M) g' - t g' M

Constraints along each slice (A = g'/2, |A|^2 = tr(MM)/4):

  riccati     t H' - H + t |A|^2                   (H' = tr(g^-1 g'' - MM)/2)
  hamiltonian Scal(g_t) + 2(n-1) H / t - H^2 + |A|^2
"""

from __future__ import annotations

from typing import Callable, List

import numpy as np

from .boundary_tensor import BoundaryModel, lowered_christoffel, partials

TMul = Callable[[np.ndarray], np.ndarray]


class SeriesAlgebra:
    """Base class; concrete algebras fix the field layout."""

    def __init__(self, model: BoundaryModel, order: int) -> None:
        self.model = model
        self.n = model.n
        self.order = int(order)

    @staticmethod
    def for_model(model: BoundaryModel, order: int, *, spatially_constant: bool = False) -> "SeriesAlgebra":
        if model.is_grid:
            return MatrixAlgebra(model, order) if spatially_constant else GridAlgebra(model, order)
        return BlockAlgebra(model, order)

    # -- layout -------------------------------------------------------------

    def tensor_shape(self) -> tuple:
        raise NotImplementedError

    def scalar_shape(self) -> tuple:
        raise NotImplementedError

    def zeros(self) -> np.ndarray:
        return np.zeros((self.order + 1, *self.tensor_shape()))

    def scalar_zeros(self) -> np.ndarray:
        return np.zeros((self.order + 1, *self.scalar_shape()))

    def constant(self, values: np.ndarray) -> np.ndarray:
        out = self.zeros()
        out[0] = values
        return out

    # -- calculus in t ------------------------------------------------------

    def d_t(self, a: np.ndarray) -> np.ndarray:
        out = np.zeros_like(a)
        k = np.arange(1, a.shape[0]).reshape((-1,) + (1,) * (a.ndim - 1))
        out[:-1] = k * a[1:]
        return out

    def times_t(self, a: np.ndarray) -> np.ndarray:
        out = np.zeros_like(a)
        out[1:] = a[:-1]
        return out

    # -- products -----------------------------------------------------------

    def _cauchy(self, op: Callable[[np.ndarray, np.ndarray], np.ndarray], a: np.ndarray, b: np.ndarray) -> np.ndarray:
        K = self.order
        out = np.zeros((K + 1, *op(a[0], b[0]).shape))
        live_a = _nonzero_orders(a)
        live_b = _nonzero_orders(b)
        for i in live_a:
            for j in live_b:
                if i + j > K:
                    break
                out[i + j] += op(a[i], b[j])
        return out

    def scalar_product(self, f: np.ndarray, h: np.ndarray) -> np.ndarray:
        return self._cauchy(np.multiply, f, h)

    def mul(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def scale(self, f: np.ndarray, a: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def inverse(self, a: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def mixed_trace(self, m: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def ricci(self, g: np.ndarray, ginv: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def scalar_curvature(self, ric: np.ndarray, ginv: np.ndarray) -> np.ndarray:
        return self.mixed_trace(self.mul(ginv, ric))


class BlockAlgebra(SeriesAlgebra):
    """Homogeneous models: every block is a scalar, products are blockwise."""

    def tensor_shape(self) -> tuple:
        return (len(self.model.block_names),)

    def scalar_shape(self) -> tuple:
        return ()

    def mul(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        return self._cauchy(np.multiply, a, b)

    def scale(self, f: np.ndarray, a: np.ndarray) -> np.ndarray:
        return self._cauchy(lambda x, y: x * y, f, a)

    def inverse(self, a: np.ndarray) -> np.ndarray:
        out = np.zeros_like(a)
        out[0] = 1.0 / a[0]
        for k in range(1, a.shape[0]):
            acc = sum(a[j] * out[k - j] for j in range(1, k + 1))
            out[k] = -out[0] * acc
        return out

    def mixed_trace(self, m: np.ndarray) -> np.ndarray:
        return m @ self.model.block_dims

    def ricci(self, g: np.ndarray, ginv: np.ndarray) -> np.ndarray:
        # Ricci of each round/flat factor is independent of its scale
        return self.constant(self.model.block_ricci)


class GridAlgebra(SeriesAlgebra):
    """Torus grid: matrix-valued coefficients, spectral derivatives in space."""

    def tensor_shape(self) -> tuple:
        return (*self.model.grid_shape, self.n, self.n)

    def scalar_shape(self) -> tuple:
        return self.model.grid_shape

    def mul(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        return self._cauchy(np.matmul, a, b)

    def scale(self, f: np.ndarray, a: np.ndarray) -> np.ndarray:
        return self._cauchy(lambda x, y: x[..., None, None] * y, f, a)

    def inverse(self, a: np.ndarray) -> np.ndarray:
        out = np.zeros_like(a)
        out[0] = np.linalg.inv(a[0])
        live = _nonzero_orders(a)
        for k in range(1, a.shape[0]):
            acc = np.zeros_like(a[0])
            for j in live:
                if j == 0:
                    continue
                if j > k:
                    break
                acc += a[j] @ out[k - j]
            out[k] = -out[0] @ acc
        return out

    def mixed_trace(self, m: np.ndarray) -> np.ndarray:
        return np.einsum("...ii->...", m)

    def _partials(self, a: np.ndarray) -> np.ndarray:
        return partials(a, self.model, offset=1)

    def christoffel(self, g: np.ndarray, ginv: np.ndarray) -> np.ndarray:
        low = lowered_christoffel(self._partials(g))
        return self._cauchy(lambda x, y: np.einsum("...kl,...lij->...kij", x, y), ginv, low)

    def ricci(self, g: np.ndarray, ginv: np.ndarray) -> np.ndarray:
        """R_ij = d_k G^k_ij - d_j G^k_ik + G^k_kl G^l_ij - G^k_jl G^l_ik."""
        gam = self.christoffel(g, ginv)
        dgam = self._partials(gam)  # (..., a, k, i, j)
        ric = np.einsum("...kkij->...ij", dgam) - np.einsum("...jkik->...ij", dgam)
        contracted = np.einsum("...kkl->...l", gam)
        ric += self._cauchy(lambda x, y: np.einsum("...l,...lij->...ij", x, y), contracted, gam)
        ric -= self._cauchy(lambda x, y: np.einsum("...kjl,...lik->...ij", x, y), gam, gam)
        return 0.5 * (ric + np.swapaxes(ric, -1, -2))

    def scalar_curvature(self, ric: np.ndarray, ginv: np.ndarray) -> np.ndarray:
        return self._cauchy(lambda x, y: np.einsum("...ij,...ij->...", x, y), ginv, ric)


class MatrixAlgebra(GridAlgebra):
    """Spatially constant torus metrics: a single n x n matrix per coefficient, flat slices."""

    def tensor_shape(self) -> tuple:
        return (self.n, self.n)

    def scalar_shape(self) -> tuple:
        return ()

    def scale(self, f: np.ndarray, a: np.ndarray) -> np.ndarray:
        return self._cauchy(lambda x, y: np.asarray(x)[..., None, None] * y, f, a)

    def ricci(self, g: np.ndarray, ginv: np.ndarray) -> np.ndarray:
        return self.zeros()

    def scalar_curvature(self, ric: np.ndarray, ginv: np.ndarray) -> np.ndarray:
        return self.scalar_zeros()


def _nonzero_orders(a: np.ndarray) -> List[int]:
    return [k for k in range(a.shape[0]) if np.any(a[k])]


# ---------------------------------------------------------------------------
# Radial expressions (shared by series recursion and pointwise evaluation)
# ---------------------------------------------------------------------------


def radial_equation(alg: SeriesAlgebra, g: np.ndarray, gd: np.ndarray, gdd: np.ndarray, tmul: TMul) -> np.ndarray:
    n = alg.n
    ginv = alg.inverse(g)
    m = alg.mul(ginv, gd)
    tr_m = alg.mixed_trace(m)
    ric = alg.ricci(g, ginv)
    return (
        tmul(gdd)
        - (n - 1) * gd
        - alg.scale(tr_m, g)
        - 2.0 * tmul(ric)
        + 0.5 * tmul(alg.scale(tr_m, gd))
        - tmul(alg.mul(gd, m))
    )


def riccati_trace(alg: SeriesAlgebra, g: np.ndarray, gd: np.ndarray, gdd: np.ndarray, tmul: TMul) -> np.ndarray:
    ginv = alg.inverse(g)
    m = alg.mul(ginv, gd)
    mm = alg.mixed_trace(alg.mul(m, m))
    h = 0.5 * alg.mixed_trace(m)
    h_dot = 0.5 * (alg.mixed_trace(alg.mul(ginv, gdd)) - mm)
    return tmul(h_dot) - h + tmul(0.25 * mm)


def hamiltonian_times_t(alg: SeriesAlgebra, g: np.ndarray, gd: np.ndarray, tmul: TMul) -> np.ndarray:
    """t * (Scal + 2(n-1)H/t - H^2 + |A|^2), regular at t = 0."""
    n = alg.n
    ginv = alg.inverse(g)
    m = alg.mul(ginv, gd)
    h = 0.5 * alg.mixed_trace(m)
    a_sq = 0.25 * alg.mixed_trace(alg.mul(m, m))
    scal = alg.scalar_curvature(alg.ricci(g, ginv), ginv)
    return tmul(scal) + 2.0 * (n - 1) * h - tmul(alg.scalar_product(h, h)) + tmul(a_sq)


def series_terms(alg: SeriesAlgebra, g: np.ndarray) -> tuple:
    """(g, g', g'', t*) for a coefficient array."""
    gd = alg.d_t(g)
    return g, gd, alg.d_t(gd), alg.times_t


def pointwise(model: BoundaryModel, *, spatially_constant: bool = False) -> SeriesAlgebra:
    """Order-0 algebra: plain pointwise tensor arithmetic."""
    return SeriesAlgebra.for_model(model, 0, spatially_constant=spatially_constant)


def scalar_t(t: float) -> TMul:
    return lambda a: t * a
