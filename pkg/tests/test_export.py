import json
import tempfile
from pathlib import Path

import numpy as np
from hypothesis import given
from hypothesis import strategies as st

from effgsa import build_grid, load_cycle
from effgsa.qoi import SCALED_VEHICLE
from effgsa.export import fmt, to_jsonable, write_envelope, write_field, write_json


@given(st.floats(allow_nan=False, allow_infinity=False))
def test_csv_float_round_trip(x):
    assert float(fmt(x)) == x


@given(st.lists(st.floats(allow_nan=False, allow_infinity=False), max_size=20))
def test_json_float_round_trip(xs):
    with tempfile.TemporaryDirectory() as d:
        path = write_json(Path(d) / "x.json", {"x": np.array(xs)})
        assert json.loads(path.read_text())["x"] == xs


def test_nan_handling(tmp_path):
    assert fmt(float("nan")) == "nan"
    assert to_jsonable({"a": np.array([1.0, np.nan]), "b": np.float32(np.inf)}) == {"a": [1.0, None], "b": None}
    write_json(tmp_path / "n.json", [np.nan])
    assert json.loads((tmp_path / "n.json").read_text()) == [None]


def test_to_jsonable_types():
    doc = to_jsonable({1: (np.int64(3), np.bool_(True)), "s": "x"})
    assert doc == {"1": [3, True], "s": "x"}
    assert type(doc["1"][0]) is int and type(doc["1"][1]) is bool


def test_grid_field_and_sidecar(tmp_path):
    grid = build_grid(0.0, 1.0, 3, 10.0, 20.0, 2, clip_to_envelope=False)
    values = np.arange(grid.n_op, dtype=float) / 7
    values[1] = np.nan
    path = write_field(tmp_path / "f.csv", grid, values)
    rows = path.read_text().splitlines()
    assert rows[0] == "torque_Nm,omega_rad_s,value"
    assert rows[2].endswith(",nan")
    back = np.genfromtxt(path, delimiter=",", skip_header=1)
    np.testing.assert_array_equal(back[:, 2], values)
    np.testing.assert_array_equal(back[:, 0], grid.torque)
    meta = json.loads((tmp_path / "f.meta.json").read_text())
    assert meta["kind"] == "map-grid" and meta["n_op"] == 6
    assert meta["grid_shape"] == [3, 2]
    assert meta["mask"] == [True, False, True, True, True, True]
    assert np.asarray(meta["grid_index"]).shape == (6, 2)


def test_cycle_field_has_time_column(tmp_path):
    trace = tmp_path / "c.csv"
    trace.write_text("time_s,speed_mps\n0,0\n1,2\n2,3\n")
    cycle = load_cycle(trace, SCALED_VEHICLE)
    path = write_field(tmp_path / "v.csv", cycle, np.ones(cycle.n_op), np.ones(cycle.n_op, bool))
    assert path.read_text().splitlines()[0] == "time_s,torque_Nm,omega_rad_s,value"
    meta = json.loads((tmp_path / "v.meta.json").read_text())
    assert meta["kind"] == "cycle-profile" and "grid_shape" not in meta


def test_envelope_writer(tmp_path):
    path = write_envelope(tmp_path / "e.csv", np.array([1.0, 2.0]), np.array([0.1, 1 / 3]))
    assert path.read_text() == "omega_rad_s,torque_Nm\n1,0.10000000000000001\n2,0.33333333333333331\n"
