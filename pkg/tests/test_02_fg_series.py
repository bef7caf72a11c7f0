import math
import warnings

import numpy as np
import pytest

from contract_warnings import ContractWarning
from scripts import boundary_tensor as bt
from scripts.boundary_tensor import BoundaryModel, SymTensorField
from scripts.constraint_lab import transverse_traceless_profile
from scripts.errors import RejectedInput
from scripts.fg_series import (
    FGSeries,
    RadialOperatorSpec,
    evaluate,
    evaluate_derivatives,
    expand,
    indicial_roots,
    resonance_check,
    residual_slope,
)
from scripts.radial_evolution import seed_residuals
from scripts.run_config import tt_block


def _warped_torus4(warp=0.1):
    model = BoundaryModel.flat_torus(4, resolution=8)
    theta1 = model.mesh()[0]
    values = np.array(bt.metric_of(model).values)
    values[..., 1, 1] = 1.0 + warp * np.cos(theta1)
    return SymTensorField(model, values)


# -- indicial roots ----------------------------------------------------------


def test_trace_operator_roots():
    assert indicial_roots(RadialOperatorSpec.trace_operator()) == (0.0, 2.0)


def test_trace_free_operator_roots_n3():
    assert indicial_roots(RadialOperatorSpec.trace_free_operator(3)) == (0.0, 3.0)


def test_zero_drop_roots():
    assert indicial_roots(RadialOperatorSpec(0.0)) == (0.0, 1.0)


def test_drop_coefficient_must_exceed_minus_one():
    with pytest.raises(RejectedInput):
        RadialOperatorSpec(-1.0)


# -- exact solutions -------------------------------------------------------------


def test_cusp_series_is_constant():
    model = BoundaryModel.flat_torus(3, resolution=8)
    gamma = bt.metric_of(model)
    series = expand(gamma, SymTensorField.zeros(model), 8)
    assert series.order == 8
    assert all(c.max_abs() < 1e-13 for c in series.coeffs[1:])
    g, gd = evaluate(series, 0.4)
    assert (g - gamma).max_abs() < 1e-13
    assert gd.max_abs() < 1e-13


def test_poincare_series_on_s3():
    model = BoundaryModel.round_sphere(3)
    gamma = bt.metric_of(model)
    series = expand(gamma, SymTensorField.zeros(model), 8)
    c = [float(x.values[0]) for x in series.coeffs]
    assert c[2] == pytest.approx(-0.5, abs=1e-14)
    assert c[4] == pytest.approx(1.0 / 16.0, abs=1e-14)
    for k in (1, 3, 5, 6, 7, 8):
        assert abs(c[k]) < 1e-13
    assert series.trace_defect < 1e-13


def test_poincare_series_on_s4_with_its_g4():
    model = BoundaryModel.round_sphere(4)
    gamma = bt.metric_of(model)
    series = expand(gamma, gamma * (1.0 / 16.0), 8)
    c = [float(x.values[0]) for x in series.coeffs]
    assert c[2] == pytest.approx(-0.5, abs=1e-14)
    assert abs(c[6]) < 1e-12
    assert abs(c[8]) < 1e-12
    assert series.log_obstruction is None


def test_even_n_trace_constraint():
    model = BoundaryModel.round_sphere(4)
    gamma = bt.metric_of(model)
    with pytest.raises(RejectedInput) as exc:
        expand(gamma, SymTensorField.zeros(model), 8)
    assert exc.value.kind == "trace-constraint"
    assert exc.value.exit_code == 2


def test_eval_at_zero_and_one():
    model = BoundaryModel.round_sphere(3)
    gamma = bt.metric_of(model)
    series = expand(gamma, SymTensorField.zeros(model), 8)
    g0, gd0 = evaluate(series, 0.0)
    assert (g0 - gamma).max_abs() == 0.0
    assert gd0.max_abs() == 0.0
    g1, _ = evaluate(series, 1.0)
    assert float(g1.values[0]) == pytest.approx(0.5625, abs=1e-13)


def test_eval_rejects_negative_t():
    model = BoundaryModel.round_sphere(3)
    series = expand(bt.metric_of(model), SymTensorField.zeros(model), 8)
    with pytest.raises(RejectedInput):
        evaluate(series, -0.1)


# -- the flat torus example ------------------------------------------------------------


def test_torus_example_series_starts_at_order_n():
    model = BoundaryModel.flat_torus(3, resolution=8)
    gamma = bt.metric_of(model)
    g3 = transverse_traceless_profile(model, "sin")
    series = expand(gamma, g3, 8)
    assert series.coeffs[1].max_abs() < 1e-14
    assert series.coeffs[2].max_abs() < 1e-14
    assert (series.coeffs[3] - g3).max_abs() == 0.0


@pytest.mark.slow
def test_torus_example_residual_slope():
    model = BoundaryModel.flat_torus(3, resolution=8)
    gamma = bt.metric_of(model)
    series = expand(gamma, 0.5 * transverse_traceless_profile(model, "sin"), 8)
    slope, residuals = residual_slope(series, np.geomspace(0.1, 0.4, 6))
    assert np.all(residuals > 0)
    assert slope >= series.order - 1


# -- input checks ----------------------------------------------------------------


def test_non_tt_data_rejected_on_torus():
    model = BoundaryModel.flat_torus(3, resolution=8)
    gamma = bt.metric_of(model)
    values = np.zeros((*model.grid_shape, 3, 3))
    values[..., 0, 0] = np.sin(model.mesh()[0])
    with pytest.raises(RejectedInput) as exc:
        expand(gamma, SymTensorField(model, values), 8)
    assert exc.value.kind == "non-tt"


def test_pure_trace_data_rejected_on_sphere():
    model = BoundaryModel.round_sphere(3)
    gamma = bt.metric_of(model)
    with pytest.raises(RejectedInput) as exc:
        expand(gamma, 0.1 * gamma, 8)
    assert exc.value.kind == "non-tt"


# -- parity and locality ---------------------------------------------------------------


@pytest.mark.robustness
@pytest.mark.parametrize("seed", range(5))
def test_parity_and_locality_on_circle_sphere(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.choice([3, 5]))
    model = BoundaryModel.circle_sphere(n, float(rng.uniform(1.0, 6.0)), float(rng.uniform(0.5, 2.0)))
    gamma = bt.metric_of(model)
    with_data = expand(gamma, tt_block(model, float(rng.normal())), n + 3)
    without = expand(gamma, SymTensorField.zeros(model), n + 3)
    for k in range(1, n):
        if k % 2:
            assert with_data.coeffs[k].max_abs() <= 1e-12
        assert (with_data.coeffs[k] - without.coeffs[k]).max_abs() <= 1e-12


# -- resonance ---------------------------------------------------------------------


def test_resonance_vanishes_on_flat_torus():
    model = BoundaryModel.flat_torus(4, resolution=8)
    assert resonance_check(bt.metric_of(model), 4) < 1e-14


def test_resonance_vanishes_on_s4():
    assert resonance_check(bt.metric_of(BoundaryModel.round_sphere(4)), 4) < 1e-10


def test_resonance_on_s1_times_s3():
    value = resonance_check(bt.metric_of(BoundaryModel.circle_sphere(4, 2.0 * math.pi)), 4)
    assert 0.0 <= value < 1e-10


def test_resonance_check_needs_even_n():
    with pytest.raises(RejectedInput):
        resonance_check(bt.metric_of(BoundaryModel.round_sphere(3)), 3)


def test_warped_torus_is_resonant():
    gamma = _warped_torus4()
    assert resonance_check(gamma, 4) > 1e-8
    with pytest.raises(RejectedInput) as exc:
        expand(gamma, SymTensorField.zeros(gamma.model), 8)
    assert exc.value.kind == "log-resonance"


def test_warped_torus_with_log_handling_records_obstruction():
    gamma = _warped_torus4()
    model = gamma.model
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ContractWarning)
        try:
            expand(gamma, SymTensorField.zeros(model), 8, allow_log=True)
            trace = np.zeros(model.grid_shape)
        except RejectedInput as exc:
            assert exc.kind == "trace-constraint"
            trace = np.asarray(exc.details["expected_trace"])
    g4 = gamma.times(trace / 4.0)
    with pytest.warns(ContractWarning):
        series = expand(gamma, g4, 8, allow_log=True)
    assert series.order == 4
    assert series.log_obstruction is not None
    assert series.log_obstruction.magnitude == pytest.approx(resonance_check(gamma, 4), rel=1e-10)


# -- serialization --------------------------------------------------------------------


def test_series_json_round_trip():
    model = BoundaryModel.circle_sphere(3, math.pi)
    series = expand(bt.metric_of(model), tt_block(model, 0.3), 8)
    back = FGSeries.from_json(series.to_json())
    assert back.order == series.order
    assert np.array_equal(back.coefficient_array(), series.coefficient_array())
    assert back.t_max == series.t_max


# -- truncation -----------------------------------------------------------------------


def test_order_below_n_with_data_is_rejected():
    model = BoundaryModel.circle_sphere(3, 2.0 * math.pi)
    with pytest.raises(RejectedInput) as exc:
        expand(bt.metric_of(model), tt_block(model, 0.3), 2)
    assert exc.value.kind == "invalid-order"
    assert exc.value.details == {"K": 2, "n": 3}


def test_order_below_n_without_data_is_the_local_part():
    model = BoundaryModel.circle_sphere(3, 2.0 * math.pi)
    gamma = bt.metric_of(model)
    lower = expand(gamma, SymTensorField.zeros(model), 2)
    full = expand(gamma, tt_block(model, 0.3), 8)
    assert lower.order == 2
    for k in range(3):
        assert (lower.coeffs[k] - full.coeffs[k]).max_abs() <= 1e-12


@pytest.mark.parametrize("amplitude", [0.1, 0.3, 1.0])
def test_trace_defect_decays_with_tt_data(amplitude):
    model = BoundaryModel.circle_sphere(3, 2.0 * math.pi)
    series = expand(bt.metric_of(model), tt_block(model, amplitude), 8)
    assert series.trace_defect < 1e-10
    defects = []
    for t in (0.02, 0.2):
        g, gd, gdd = evaluate_derivatives(series, t)
        defects.append(seed_residuals(model, g, gd, gdd, t, spatially_constant=False)["riccati_trace"])
    assert defects[0] <= 1e-4 * defects[1] + 1e-15
