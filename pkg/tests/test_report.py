import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from dwplab.ode import OdeParams, classify
from dwplab.report import SamplingGrid, VerificationReport, aggregate, fmt_float, to_csv, to_json


def test_report_verdict_and_nan():
    r = VerificationReport.from_residuals("x", [1e-9, 2e-9], 1e-8)
    assert r.verdict and r.residual_max == 2e-9
    bad = VerificationReport.from_residuals("y", [1e-9, float("nan")], 1e-8)
    assert not bad.verdict
    with pytest.raises(ValueError):
        VerificationReport.from_residuals("z", [], 1.0)


def test_aggregate_names_worst_offender():
    reps = [VerificationReport.from_residuals("a", [1e-9], 1e-8), VerificationReport.from_residuals("b", [5e-8], 1e-7)]
    s = aggregate(reps)
    assert s.verdict and s.worst == "b"
    s2 = aggregate(reps + [VerificationReport.from_residuals("c", [1.0], 1e-3)])
    assert not s2.verdict and s2.worst == "c"


@given(st.lists(st.floats(allow_nan=False, allow_infinity=False, width=64), min_size=1, max_size=20))
def test_json_float_round_trip(xs):
    back = json.loads(to_json({"xs": xs}))["xs"]
    assert back == xs


def test_json_enums_are_lowercase_strings():
    data = json.loads(to_json(classify(OdeParams(2, -1, 0.0, 0.0, 1.0))))
    assert data["kind"] == "global_on_r"
    assert data["closed_form"] == "exp"
    assert data["left"]["kind"] == "infinite_time"


def test_json_is_deterministic():
    obj = {"b": np.float64(0.1), "a": [np.int64(3), True, None]}
    assert to_json(obj) == to_json(obj)
    assert to_json(obj).index('"b"') < to_json(obj).index('"a"')


def test_csv_rows():
    text = to_csv(("t", "rho"), [(0.0, 1.0), (0.5, math.exp(0.5))])
    lines = text.strip().split("\n")
    assert lines[0] == "t,rho" and len(lines) == 3
    assert float(lines[2].split(",")[1]) == math.exp(0.5)
    with pytest.raises(ValueError):
        to_csv(("a",), [(1, 2)])


def test_fmt_float_specials():
    assert fmt_float(1.0) == "1.0"
    assert fmt_float(float("inf")) == "Infinity"
    assert fmt_float(float("nan")) == "NaN"


def test_sampling_grid_is_seeded_and_inside():
    g = SamplingGrid((3, 4), margin=0.1, seed=7)
    pts = g.uniform([(0, 1), (-1, 1)])
    assert pts.shape == (12, 2)
    assert np.all(pts[:, 0] > 0.1) and np.all(pts[:, 1] < 0.9)
    a = g.random([(0, 1), (0, 2)], 5)
    b = SamplingGrid((3, 4), margin=0.1, seed=7).random([(0, 1), (0, 2)], 5)
    np.testing.assert_array_equal(a, b)


def test_trajectory_serializes():
    from dwplab.ode import integrate

    tr = integrate(OdeParams(2, -1, 2.0, 0.0, 1.0), (-1.0, 1.0))
    data = json.loads(to_json(tr))
    assert len(data["t"]) == len(data["rho"]) == tr.t.size
    assert data["left"]["kind"] == "finite_time_root"
    assert "_dense" not in data
