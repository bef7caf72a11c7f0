import math

import numpy as np
import pytest

from scripts import boundary_tensor as bt
from scripts.boundary_tensor import BoundaryModel, SymTensorField
from scripts.constraint_lab import (
    ConstraintPair,
    canonical_torus_example,
    check_membership,
    killing_extension_criterion,
    obstruction_projection,
    random_smooth_tensor,
    randomized_identity_batch,
    resolve_profile,
    stokes_check,
    summarize,
    transverse_traceless_profile,
    verify_killing_pairing_identity,
)
from scripts.errors import RejectedInput

TORUS_CUBE = (2.0 * math.pi) ** 3


@pytest.fixture(scope="module")
def example():
    return canonical_torus_example(3, resolution=16)


# -- membership ---------------------------------------------------------------------


def test_tt_profile_is_a_member(example):
    report = check_membership(ConstraintPair(example.gamma, example.tau))
    assert report.meta["member"] is True
    assert report.meta["advisory"] is False
    assert set(report.residuals) == {"divergence", "trace"}


def test_pure_trace_is_not_a_member():
    gamma = bt.metric_of(BoundaryModel.round_sphere(3))
    report = check_membership(ConstraintPair(gamma, 0.1 * gamma))
    assert report.meta["member"] is False
    assert float(report.residuals["trace"][0]) == pytest.approx(0.3, rel=1e-12)


def test_even_n_membership_is_advisory():
    model = BoundaryModel.flat_torus(4, resolution=8)
    gamma = bt.metric_of(model)
    report = check_membership(ConstraintPair(gamma, gamma * 0.25))
    assert report.meta["advisory"] is True
    assert set(report.residuals) == {"divergence"}
    assert report.meta["member"] is True


def test_pair_rejects_model_mix():
    a = bt.metric_of(BoundaryModel.round_sphere(3))
    b = bt.metric_of(BoundaryModel.round_sphere(3, radius=2.0))
    with pytest.raises(RejectedInput):
        ConstraintPair(a, b)


def test_unknown_profile_is_rejected():
    with pytest.raises(RejectedInput) as exc:
        resolve_profile("tanh")
    assert exc.value.kind == "unknown-profile"


def test_tt_profile_needs_torus():
    with pytest.raises(RejectedInput):
        transverse_traceless_profile(BoundaryModel.round_sphere(3))


# -- the pairing identity on the canonical example --------------------------------------------


def test_identity_on_canonical_example(example):
    report = verify_killing_pairing_identity(example.gamma, example.X, example.tau, example.h)
    assert report.lhs == pytest.approx(TORUS_CUBE, rel=1e-10)
    assert report.residual < 1e-6
    assert report.holds
    assert set(report.inputs) == {"gamma", "X", "tau", "h"}


def test_obstruction_components(example):
    components = obstruction_projection(example.gamma, example.tau, example.h)
    assert components.shape == (3,)
    assert components[0] == pytest.approx(-0.5 * TORUS_CUBE, rel=1e-6)
    assert np.max(np.abs(components[1:])) < 1e-6


def test_obstruction_is_linear_in_h(example):
    rng = np.random.default_rng(4)
    other = random_smooth_tensor(example.gamma.model, rng) * 0.3
    a = obstruction_projection(example.gamma, example.tau, example.h)
    b = obstruction_projection(example.gamma, example.tau, other)
    combined = obstruction_projection(example.gamma, example.tau, example.h * 2.0 + other * -0.5)
    assert combined == pytest.approx(2.0 * a - 0.5 * b, abs=1e-6)


def test_obstruction_needs_killing_basis():
    model = BoundaryModel.round_sphere(3)
    gamma = bt.metric_of(model)
    zero = SymTensorField.zeros(model)
    with pytest.raises(RejectedInput) as exc:
        obstruction_projection(gamma, zero, zero)
    assert exc.value.kind == "no-killing-basis"


def test_non_killing_field_is_rejected(example):
    model = example.gamma.model
    X = bt.vector_from_function(model, lambda t1, t2, t3: (np.sin(t2), 0.0 * t1, 0.0 * t1))
    with pytest.raises(RejectedInput) as exc:
        verify_killing_pairing_identity(example.gamma, X, example.tau, example.h)
    assert exc.value.kind == "not-killing"


def test_divergent_tau_is_rejected(example):
    model = example.gamma.model
    values = np.zeros((*model.grid_shape, 3, 3))
    values[..., 0, 0] = np.sin(model.mesh()[0])
    with pytest.raises(RejectedInput) as exc:
        verify_killing_pairing_identity(example.gamma, example.X, SymTensorField(model, values), example.h)
    assert exc.value.kind == "not-divergence-free"


def test_stokes_integrals_vanish(example):
    values = stokes_check(example.gamma, example.tau, example.h, example.X, [-1e-2, -1e-3, 0.0, 1e-3, 1e-2])
    assert np.max(np.abs(values)) < 1e-10


def test_killing_extension_criterion(example):
    model = example.gamma.model
    along_d1 = killing_extension_criterion(example.gamma, bt.coordinate_vector(model, 0), example.tau)
    along_d2 = killing_extension_criterion(example.gamma, bt.coordinate_vector(model, 1), example.tau)
    assert along_d1 == pytest.approx(TORUS_CUBE**0.5, rel=1e-10)
    assert along_d2 < 1e-12


# -- randomized ---------------------------------------------------------------------------


@pytest.mark.robustness
def test_randomized_identity_batch():
    reports = randomized_identity_batch(3, 8, 4, seed=11)
    summary = summarize(reports)
    assert summary["count"] == 4
    assert summary["all_hold"], summary


def test_summary_of_empty_batch():
    assert summarize([]) == {"count": 0, "max_residual": 0.0, "all_hold": True}
