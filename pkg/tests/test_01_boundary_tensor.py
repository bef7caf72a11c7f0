import math

import numpy as np
import pytest

from scripts import boundary_tensor as bt
from scripts.boundary_tensor import BoundaryModel, SymTensorField, VectorField
from scripts.constraint_lab import random_smooth_tensor, transverse_traceless_profile
from scripts.errors import NumericalFailure, RejectedInput


@pytest.fixture
def torus3():
    return BoundaryModel.flat_torus(3, resolution=16)


def test_sphere_volume():
    gamma = bt.metric_of(BoundaryModel.round_sphere(3))
    assert bt.volume(gamma) == pytest.approx(2.0 * math.pi**2, rel=1e-14)


def test_torus_volume(torus3):
    assert bt.volume(bt.metric_of(torus3)) == pytest.approx((2.0 * math.pi) ** 3, rel=1e-14)


@pytest.mark.parametrize(
    "model",
    [BoundaryModel.round_sphere(4), BoundaryModel.circle_sphere(5, 3.0), BoundaryModel.flat_torus(3, resolution=8)],
)
def test_trace_of_metric_is_n(model):
    gamma = bt.metric_of(model)
    assert np.allclose(bt.trace(gamma, gamma).values, model.n)


def test_spectral_derivative_of_sine_is_exact(torus3):
    theta1 = torus3.mesh()[0]
    d = bt.spectral_derivative(np.sin(theta1), torus3, 0)
    assert np.max(np.abs(d - np.cos(theta1))) < 1e-13


def test_coordinate_fields_are_killing(torus3):
    gamma = bt.metric_of(torus3)
    for X in bt.killing_basis(torus3):
        assert bt.killing_operator(gamma, X).max_abs() < 1e-13


def test_nonconstant_field_is_not_killing(torus3):
    gamma = bt.metric_of(torus3)
    X = bt.vector_from_function(torus3, lambda t1, t2, t3: (np.sin(t2), 0.0 * t1, 0.0 * t1))
    assert bt.killing_operator(gamma, X).max_abs() > 0.1


def test_tt_profile_is_divergence_and_trace_free(torus3):
    gamma = bt.metric_of(torus3)
    tau = transverse_traceless_profile(torus3, "sin")
    assert bt.divergence(gamma, tau).max_abs() < 1e-12
    assert bt.trace(gamma, tau).max_abs() < 1e-14


def test_divergence_sign_convention(torus3):
    # tau = sin(theta^1) (dtheta^1)^2 has (div tau)_1 = -cos(theta^1)
    gamma = bt.metric_of(torus3)
    theta1 = torus3.mesh()[0]
    values = np.zeros((*torus3.grid_shape, 3, 3))
    values[..., 0, 0] = np.sin(theta1)
    div = bt.divergence(gamma, SymTensorField(torus3, values))
    assert np.max(np.abs(div.values[..., 0] + np.cos(theta1))) < 1e-12
    assert np.max(np.abs(div.values[..., 1:])) < 1e-14


def test_lie_derivative_along_first_axis(torus3):
    tau = transverse_traceless_profile(torus3, "sin")
    lie = bt.lie_derivative(bt.coordinate_vector(torus3, 0), tau)
    expected = transverse_traceless_profile(torus3, "cos")
    assert (lie - expected).max_abs() < 1e-12


def test_lie_derivative_along_second_axis_vanishes(torus3):
    tau = transverse_traceless_profile(torus3, "sin")
    assert bt.lie_derivative(bt.coordinate_vector(torus3, 1), tau).max_abs() < 1e-13


def test_codifferential_integrates_to_zero(torus3):
    gamma = bt.metric_of(torus3)
    tau = transverse_traceless_profile(torus3, "bump")
    omega = bt.contract_vector(tau, bt.coordinate_vector(torus3, 1))
    assert abs(bt.integrate(gamma, bt.codifferential(gamma, omega))) < 1e-11


def test_richardson_step_halving_ratio():
    model = BoundaryModel.flat_torus(3, resolution=8)
    gamma = bt.metric_of(model)
    rng = np.random.default_rng(3)
    h = 0.3 * random_smooth_tensor(model, rng)
    tau = transverse_traceless_profile(model, "sin")
    _, d_coarse = bt.linearized_divergence_richardson(gamma, h, tau, eps=2e-2)
    _, d_fine = bt.linearized_divergence_richardson(gamma, h, tau, eps=1e-2)
    assert 3.5 < d_coarse / d_fine < 4.5


def test_richardson_failure_is_numerical():
    model = BoundaryModel.flat_torus(3, resolution=8)
    gamma = bt.metric_of(model)
    h = random_smooth_tensor(model, np.random.default_rng(0))
    tau = transverse_traceless_profile(model, "sin")
    with pytest.raises(NumericalFailure) as exc:
        bt.divergence_linearized(gamma, h, tau, eps=1e-2, rtol=1e-30)
    assert exc.value.kind == "richardson"
    assert exc.value.exit_code == 1


def test_descriptor_round_trip():
    model = BoundaryModel.circle_sphere(3, math.pi, 2.0)
    assert BoundaryModel.from_descriptor(model.descriptor()) == model


@pytest.mark.parametrize(
    "build",
    [
        lambda: BoundaryModel.round_sphere(2),
        lambda: BoundaryModel.round_sphere(8),
        lambda: BoundaryModel.flat_torus(3, resolution=9),
        lambda: BoundaryModel.flat_torus(3, resolution=4),
        lambda: BoundaryModel.round_sphere(3, radius=-1.0),
        lambda: BoundaryModel.from_descriptor({"kind": "Hyperbolic", "n": 3}),
    ],
)
def test_invalid_models_are_rejected(build):
    with pytest.raises(RejectedInput):
        build()


def test_non_symmetric_tensor_is_rejected():
    model = BoundaryModel.flat_torus(3, resolution=8)
    values = np.zeros((*model.grid_shape, 3, 3))
    values[..., 0, 1] = 1.0
    with pytest.raises(RejectedInput) as exc:
        SymTensorField(model, values)
    assert exc.value.kind == "not-symmetric"


def test_fields_on_different_models_do_not_mix():
    a = bt.metric_of(BoundaryModel.round_sphere(3))
    b = bt.metric_of(BoundaryModel.round_sphere(3, radius=2.0))
    with pytest.raises(RejectedInput):
        a + b


def test_circle_pairing_uses_block_volume():
    model = BoundaryModel.circle_sphere(3, math.pi)
    gamma = bt.metric_of(model)
    omega = bt.OneFormField(model, np.array([2.0]))
    X = VectorField(model, np.array([1.0]))
    assert bt.pair(gamma, omega, X) == pytest.approx(2.0 * math.pi * 4.0 * math.pi, rel=1e-14)


# -- adjointness and the Lie derivative on a warped metric --------------------------------


@pytest.fixture
def warped3():
    model = BoundaryModel.flat_torus(3, resolution=32)
    theta1 = model.mesh()[0]
    values = np.array(bt.metric_of(model).values)
    values[..., 1, 1] = 1.0 + 0.2 * np.cos(theta1)
    return SymTensorField(model, values)


def _swirl(model):
    return bt.vector_from_function(model, lambda t1, t2, t3: (np.sin(t2), np.cos(t1) * np.sin(t3), 0.3 + 0.0 * t1))


def test_divergence_is_adjoint_of_killing_operator(warped3):
    model = warped3.model
    tau = random_smooth_tensor(model, np.random.default_rng(5))
    X = _swirl(model)
    lhs = bt.pair(warped3, bt.divergence(warped3, tau), X)
    rhs = bt.l2_pair(warped3, tau, bt.killing_operator(warped3, X))
    assert abs(lhs) > 1e-6
    assert lhs == pytest.approx(rhs, rel=1e-10)


def test_lie_derivative_of_metric_is_twice_killing_operator(warped3):
    X = _swirl(warped3.model)
    lie = bt.lie_derivative(X, warped3)
    assert (lie - bt.killing_operator(warped3, X) * 2.0).max_abs() < 1e-11
    assert lie.max_abs() > 0.1


def test_l2_pair_is_symmetric(warped3):
    rng = np.random.default_rng(8)
    a = random_smooth_tensor(warped3.model, rng)
    b = random_smooth_tensor(warped3.model, rng)
    assert bt.l2_pair(warped3, a, b) == pytest.approx(bt.l2_pair(warped3, b, a), rel=1e-13)


def test_l2_pair_of_canonical_lie_derivative(torus3):
    gamma = bt.metric_of(torus3)
    h = bt.lie_derivative(bt.coordinate_vector(torus3, 0), transverse_traceless_profile(torus3, "sin"))
    assert bt.l2_pair(gamma, h, h) == pytest.approx((2.0 * math.pi) ** 3, rel=1e-12)


def test_conformal_linearized_divergence_of_tt_tensor_vanishes(torus3):
    gamma = bt.metric_of(torus3)
    tau = transverse_traceless_profile(torus3, "sin")
    assert bt.divergence_linearized(gamma, gamma * 0.7, tau).max_abs() < 1e-8


def test_conformal_linearized_divergence_scales_divergence(torus3):
    # div_{(1+cs) gamma} tau = div tau / (1 + cs) for constant c on the flat torus
    gamma = bt.metric_of(torus3)
    values = np.zeros((*torus3.grid_shape, 3, 3))
    values[..., 0, 0] = np.sin(torus3.mesh()[0])
    tau = SymTensorField(torus3, values)
    got = bt.divergence_linearized(gamma, gamma * 0.7, tau)
    expected = bt.divergence(gamma, tau) * -0.7
    assert (got - expected).max_abs() < 1e-7
