import json

import numpy as np
import pytest

from ocbound import serialize


def test_float_format_round_trips():
    rng = np.random.default_rng(0)
    for x in rng.standard_normal(200) * 10.0 ** rng.integers(-12, 12, 200):
        assert float(serialize.fmt(float(x))) == float(x)


def test_fmt_rejects_non_finite():
    with pytest.raises(ValueError):
        serialize.fmt(float("nan"))
    with pytest.raises(ValueError):
        serialize.fmt(float("inf"))


def test_json_text_parses_and_keeps_order():
    obj = {"b": 1, "a": [1.5, None, True, "x\"y"], "nested": {"z": 0.1}}
    text = serialize.json_text(obj)
    parsed = json.loads(text)
    assert parsed == {"b": 1, "a": [1.5, None, True, 'x"y'], "nested": {"z": 0.1}}
    assert list(parsed.keys()) == ["b", "a", "nested"]
    assert text == serialize.json_text(obj)


def test_solution_csv_round_trip(solutions):
    sol = solutions["lq-tracking"]
    text = serialize.solution_csv(sol)
    header = text.splitlines()[0]
    assert header == "t,u_1,x_1"
    assert len(text.splitlines()) == sol.grid.shape[0] + 1
    grid, u, x = serialize.parse_solution_csv(text)
    assert np.array_equal(grid, sol.grid)
    assert np.array_equal(u, sol.u)
    assert np.array_equal(x, sol.x)


def test_csv_rejects_ragged_columns():
    with pytest.raises(ValueError):
        serialize.csv_text(["a", "b"], [np.zeros(3), np.zeros(4)])
