import json
import math

import pytest

from golden_probe import TOLERANCES, compare, probe
from scripts.exact_solutions import SchwarzschildParams, golden_record, schwarzschild_g_n

from .config import GOLDEN_SCHWARZSCHILD


@pytest.fixture(scope="module")
def golden():
    return json.loads(GOLDEN_SCHWARZSCHILD.read_text(encoding="utf-8"))


def test_golden_file_layout(golden):
    assert {"n", "m", "rPlus", "beta", "g3_blocks", "tolerances"} <= set(golden)
    assert set(golden["g3_blocks"]) == {"circle", "sphere"}
    assert golden["tolerances"] == TOLERANCES


def test_golden_matches_closed_form(golden):
    params = SchwarzschildParams.from_mass(golden["n"], golden["m"])
    fresh = golden_record(params, schwarzschild_g_n(params))
    deltas = compare(golden, fresh)
    for key, delta in deltas.items():
        assert delta <= golden["tolerances"][key], (key, delta)


def test_golden_values(golden):
    assert golden["rPlus"] == 1.0
    assert math.isclose(golden["beta"], math.pi, rel_tol=0.0, abs_tol=1e-15)
    assert math.isclose(golden["g3_blocks"]["circle"], -4.0 / 3.0, abs_tol=1e-15)


@pytest.mark.slow
def test_extracted_record_within_golden_tolerances(golden):
    fresh = probe(golden["n"], golden["m"])
    assert fresh["_probe_forensics"]["source"] == "extracted"
    assert fresh["_probe_forensics"]["closed_form_error"] <= 1e-6
    bad = {k: v for k, v in compare(golden, fresh).items() if v > golden["tolerances"][k]}
    assert not bad, bad
