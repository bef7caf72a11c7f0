import math

import numpy as np
import pytest

from contract_warnings import ContractInfoWarning
from scripts import boundary_tensor as bt
from scripts.boundary_tensor import BoundaryModel, SymTensorField
from scripts.constraint_lab import transverse_traceless_profile
from scripts.errors import NumericalFailure, RejectedInput
from scripts.exact_solutions import (
    SchwarzschildParams,
    poincare_curve,
    schwarzschild_fg_curve,
    schwarzschild_g_n,
)
from scripts.fg_series import evaluate_derivatives, expand
from scripts.radial_evolution import (
    MetricCurve,
    constraint_residuals,
    curve_table,
    difference,
    einstein_residual,
    evolve,
    integrate,
    reseed,
    seed_residuals,
)
from scripts.run_config import tt_block


@pytest.fixture(scope="module")
def poincare_s3():
    model = BoundaryModel.round_sphere(3)
    series = expand(bt.metric_of(model), SymTensorField.zeros(model), 8)
    return evolve(series, 0.01, 1.0, 1e-10)


def test_poincare_reproduction(poincare_s3):
    exact = (1.0 - poincare_s3.t**2 / 4.0) ** 2
    rel = np.max(np.abs(poincare_s3.values[:, 0] - exact) / exact)
    assert rel <= 1e-7
    assert poincare_s3.breakdown_t is None


def test_poincare_constraints_propagate(poincare_s3):
    report = constraint_residuals(poincare_s3)
    assert set(report.residuals) == {"gauss_codazzi", "hamiltonian", "riccati_trace"}
    assert report.max("riccati_trace") < 1e-7
    assert report.max("hamiltonian") < 1e-7
    assert report.max("gauss_codazzi") == 0.0


def test_einstein_residual_of_closed_form():
    curve = poincare_curve(3, np.linspace(0.05, 1.0, 400))
    assert np.max(einstein_residual(curve)[5:-5]) < 1e-5


def test_cusp_stays_constant():
    model = BoundaryModel.flat_torus(3, resolution=8)
    gamma = bt.metric_of(model)
    curve = evolve(expand(gamma, SymTensorField.zeros(model), 8), 0.01, 1.0, 1e-10)
    assert curve.spatially_constant
    assert np.max(np.abs(curve.values - np.eye(3))) < 1e-12
    assert np.max(np.abs(curve.derivs)) < 1e-12


def test_reseed_matches_original(poincare_s3):
    i = len(poincare_s3) // 2
    t_eval = poincare_s3.t[i:]
    again = reseed(poincare_s3, i, 1.0, 1e-10, t_eval=t_eval)
    assert np.max(np.abs(again.values - poincare_s3.values[i:])) < 1e-8


def test_difference_of_identical_curves_is_zero(poincare_s3):
    diff = difference(poincare_s3, poincare_s3)
    assert np.all(diff.trace_norm == 0.0)
    assert np.all(diff.trace_free_norm == 0.0)


def test_difference_rejects_model_mismatch(poincare_s3):
    model = BoundaryModel.round_sphere(3, radius=2.0)
    other = evolve(expand(bt.metric_of(model), SymTensorField.zeros(model), 8), 0.01, 1.0, 1e-10)
    with pytest.raises(RejectedInput) as exc:
        difference(poincare_s3, other)
    assert exc.value.kind == "model-mismatch"


def test_difference_rejects_grid_mismatch(poincare_s3):
    model = poincare_s3.model
    series = expand(bt.metric_of(model), SymTensorField.zeros(model), 8)
    other = evolve(series, 0.01, 1.0, 1e-10, t_eval=np.linspace(0.01, 1.0, 50))
    with pytest.raises(RejectedInput) as exc:
        difference(poincare_s3, other)
    assert exc.value.kind == "grid-mismatch"


def test_curve_table_layout(poincare_s3):
    header, table = curve_table(poincare_s3, constraint_residuals(poincare_s3))
    assert header[:3] == ["t", "g_sphere", "dg_sphere"]
    assert table.shape == (len(poincare_s3), len(header))


# -- preconditions -------------------------------------------------------------------


@pytest.fixture
def sphere_series():
    model = BoundaryModel.round_sphere(3)
    return expand(bt.metric_of(model), SymTensorField.zeros(model), 8)


def test_t0_must_be_positive(sphere_series):
    with pytest.raises(RejectedInput):
        evolve(sphere_series, 0.0, 1.0)


def test_t0_too_close_to_singular_point(sphere_series):
    with pytest.raises(NumericalFailure) as exc:
        evolve(sphere_series, 1e-5, 1.0)
    assert exc.value.kind == "singular-point"


def test_seeding_needs_order_n_plus_2():
    model = BoundaryModel.round_sphere(3)
    series = expand(bt.metric_of(model), SymTensorField.zeros(model), 4)
    with pytest.raises(RejectedInput) as exc:
        evolve(series, 0.01, 1.0)
    assert exc.value.kind == "order-too-low"


def test_t0_beyond_series_radius():
    model = BoundaryModel.flat_torus(3, resolution=8)
    series = expand(bt.metric_of(model), SymTensorField.zeros(model), 8)
    with pytest.raises(RejectedInput):
        evolve(series, 0.6, 1.0)


def test_seed_residual_is_checked():
    model = BoundaryModel.circle_sphere(3, 2.0 * math.pi)
    series = expand(bt.metric_of(model), tt_block(model, 1.0), 6)
    with pytest.raises(RejectedInput) as exc:
        evolve(series, 0.5, 0.9, 1e-10)
    assert exc.value.kind == "seed-residual"
    details = exc.value.details
    assert max(details["hamiltonian"], details["riccati_trace"]) > details["limit"]


def test_seed_residuals_of_exact_seed():
    model = BoundaryModel.round_sphere(3)
    series = expand(bt.metric_of(model), SymTensorField.zeros(model), 8)
    g, gd, gdd = evaluate_derivatives(series, 0.3)
    residuals = seed_residuals(model, g, gd, gdd, 0.3, spatially_constant=False)
    assert set(residuals) == {"hamiltonian", "riccati_trace"}
    assert max(residuals.values()) < 1e-13


def test_inhomogeneous_torus_data_is_rejected():
    model = BoundaryModel.flat_torus(3, resolution=8)
    gamma = bt.metric_of(model)
    series = expand(gamma, transverse_traceless_profile(model, "sin"), 8)
    with pytest.raises(RejectedInput) as exc:
        evolve(series, 0.01, 0.3)
    assert exc.value.kind == "non-homogeneous-seed"


def test_curve_must_be_positive_definite():
    model = BoundaryModel.round_sphere(3)
    with pytest.raises(RejectedInput) as exc:
        MetricCurve(
            gamma=bt.metric_of(model),
            t=np.array([0.1, 0.2]),
            values=np.array([[1.0], [-0.1]]),
            derivs=np.zeros((2, 1)),
        )
    assert exc.value.kind == "not-positive-definite"


@pytest.mark.slow
def test_collapsing_block_is_reported_as_breakdown():
    model = BoundaryModel.circle_sphere(3, 2.0 * math.pi)
    series = expand(bt.metric_of(model), tt_block(model, 5.0), 8)
    with pytest.warns(ContractInfoWarning):
        curve = evolve(series, 0.01, 1.0, 1e-10)
    assert curve.breakdown_t is not None
    assert curve.t[-1] < curve.breakdown_t < 1.0


# -- constraint damping -----------------------------------------------------------------


def _presets():
    sphere = BoundaryModel.round_sphere(3)
    params = SchwarzschildParams.from_mass(3, 1.0)
    circle = BoundaryModel.circle_sphere(3, 2.0 * math.pi)
    return {
        "poincare": (bt.metric_of(sphere), SymTensorField.zeros(sphere)),
        "schwarzschild": (bt.metric_of(params.model), schwarzschild_g_n(params)),
        "tt-circle": (bt.metric_of(circle), tt_block(circle, 0.1)),
    }


@pytest.mark.regression
@pytest.mark.parametrize("name", ["poincare", "schwarzschild", "tt-circle"])
def test_constraints_stay_below_limit(name):
    gamma, g_n = _presets()[name]
    curve = evolve(expand(gamma, g_n, 8), 0.01, 0.5, 1e-10)
    report = constraint_residuals(curve)
    assert report.max("riccati_trace") <= 1e-7
    assert report.max("hamiltonian") <= 1e-7


@pytest.mark.slow
def test_undamped_trace_mode_grows():
    model = BoundaryModel.round_sphere(3)
    series = expand(bt.metric_of(model), SymTensorField.zeros(model), 8)
    g0, gd0, _ = evaluate_derivatives(series, 0.01)
    t_eval = np.geomspace(0.01, 1.0, 50)
    exact = (1.0 - t_eval**2 / 4.0) ** 2
    errors = {}
    for damping in (0.0, 3.0):
        curve = integrate(series.gamma, g0, gd0, 0.01, 1.0, 1e-10, t_eval=t_eval, damping=damping)
        errors[damping] = np.max(np.abs(curve.values[:, 0] - exact) / exact)
    assert errors[3.0] <= 1e-7
    assert errors[0.0] > errors[3.0]


def test_negative_damping_is_rejected(sphere_series):
    g0, gd0, _ = evaluate_derivatives(sphere_series, 0.01)
    with pytest.raises(RejectedInput) as exc:
        integrate(sphere_series.gamma, g0, gd0, 0.01, 1.0, 1e-10, damping=-1.0)
    assert exc.value.kind == "invalid-damping"


def test_schwarzschild_evolution_matches_closed_form():
    params = SchwarzschildParams.from_mass(3, 1.0)
    t_eval = np.linspace(0.01, 0.3, 60)
    series = expand(bt.metric_of(params.model), schwarzschild_g_n(params), 8)
    curve = evolve(series, 0.01, 0.3, 1e-10, t_eval=t_eval)
    exact = schwarzschild_fg_curve(params, t_eval)
    assert np.max(np.abs(curve.values - exact.values)) <= 1e-6
    assert np.max(np.abs(curve.derivs - exact.derivs)) <= 1e-5
