import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

import effgsa as eg
from effgsa.errors import ConfigurationError, ContractError, ParseError
from effgsa.qoi import SCALED_VEHICLE, cycle_from_speed, default_grid, wltc_class3b


def test_two_by_two_grid_is_the_corners():
    g = eg.build_grid(0.0, 1.0, 2, 10.0, 20.0, 2, clip_to_envelope=False)
    assert sorted(zip(g.torque, g.omega_m)) == [(0.0, 10.0), (0.0, 20.0), (1.0, 10.0), (1.0, 20.0)]
    assert g.grid_shape == (2, 2)


def test_default_grid_has_232_points(map_grid):
    assert map_grid.n_op == 232
    assert map_grid.kind == "map-grid"
    env = eg.torque_envelope(eg.EcmParameters(), map_grid.omega_axis)
    assert np.all(map_grid.torque <= env[map_grid.grid_index[:, 1]])
    rows, cols = map_grid.grid_shape
    assert rows * cols >= map_grid.n_op


def test_clipping_everything_is_an_error():
    with pytest.raises(ConfigurationError, match="empty grid after clipping"):
        eg.build_grid(0.01, 0.1, 3, 0.0, 100.0, 3, True, eg.EcmParameters(I_max=0.0))


@pytest.mark.parametrize("args", [(0, 1, 1, 0, 1, 2), (1, 0, 2, 0, 1, 2), (0, 1, 2, -1, 1, 2)])
def test_bad_grid_arguments(args):
    with pytest.raises(ConfigurationError):
        eg.build_grid(*args, clip_to_envelope=False)


def write(tmp_path, text, name="cycle.csv"):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return path


def test_direct_cycle_passthrough(tmp_path):
    path = write(tmp_path, "time_s,torque_Nm,omega_rad_s\n0,0.01,10\n1,0.02,20.5\n2,-0.03,30\n")
    ops = eg.load_cycle(path)
    assert ops.kind == "cycle-profile" and ops.n_op == 3
    assert ops.torque.tolist() == [0.01, 0.02, -0.03]
    assert ops.omega_m.tolist() == [10, 20.5, 30]
    assert ops.time.tolist() == [0, 1, 2]


def test_wltc_class3_has_3601_points():
    ops = wltc_class3b()
    assert ops.n_op == 3601
    assert ops.time[0] == 0 and ops.time[-1] == 1800
    # the scaled vehicle keeps the whole trace inside the default machine's envelope
    sol = eg.solve_batch(eg.EcmParameters(), ops.torque, ops.omega_m)
    assert sol.feasible.all()


def test_standstill_speed_trace_is_idle(tmp_path):
    path = write(tmp_path, "time_s,speed_mps\n" + "".join(f"{k},0\n" for k in range(5)))
    ops = eg.load_cycle(path, SCALED_VEHICLE)
    assert np.all(ops.torque == 0) and np.all(ops.omega_m == 0)
    assert ops.idle.all()
    sol = eg.solve_batch(eg.EcmParameters(), ops.torque, ops.omega_m)
    assert np.all(sol.efficiency == 1.0) and sol.idle.all()


def test_longitudinal_force_balance():
    veh = eg.VehicleParameters(mass=2.0, wheel_radius=0.1, gear_ratio=4.0, c_rr=0.02, drag_area=0.01)
    ops = cycle_from_speed([0.0, 1.0, 2.0], [10.0, 10.0, 10.0], veh)
    force = 2.0 * 9.81 * 0.02 + 0.5 * 1.2 * 0.01 * 100.0
    assert ops.torque == pytest.approx(np.full(3, force * 0.1 / 4.0))
    assert ops.omega_m == pytest.approx(np.full(3, 400.0))


def test_malformed_row_reports_line(tmp_path):
    path = write(tmp_path, "time_s,torque_Nm,omega_rad_s\n0,1,2\n1,abc,3\n")
    with pytest.raises(ParseError, match="line 3"):
        eg.load_cycle(path)
    path = write(tmp_path, "time_s,torque_Nm,omega_rad_s\n0,1,2\n1,2\n")
    with pytest.raises(ParseError) as info:
        eg.load_cycle(path)
    assert info.value.line == 3


def test_unknown_header(tmp_path):
    with pytest.raises(ParseError, match="line 1"):
        eg.load_cycle(write(tmp_path, "t,T,w\n0,1,2\n"))


def test_non_monotone_time(tmp_path):
    path = write(tmp_path, "time_s,torque_Nm,omega_rad_s\n0,1,2\n2,1,2\n1,1,2\n")
    with pytest.raises(ConfigurationError):
        eg.load_cycle(path)


def test_speed_cycle_needs_vehicle(tmp_path):
    with pytest.raises(ConfigurationError):
        eg.load_cycle(write(tmp_path, "time_s,speed_mps\n0,1\n1,2\n"))


def test_resampling(tmp_path):
    path = write(tmp_path, "time_s,torque_Nm,omega_rad_s\n0,0,0\n1,1,10\n")
    ops = eg.load_cycle(path, resample_dt=0.25)
    assert ops.n_op == 5
    assert ops.omega_m.tolist() == [0, 2.5, 5, 7.5, 10]


# --- evaluation --------------------------------------------------------------


def test_nominal_sample_reproduces_nominal_map(nominal_space, map_grid):
    x = eg.SampleMatrix(nominal_space.nominal[None, :], 0, nominal_space)
    q = eg.evaluate_qoi(eg.EcmParameters(), nominal_space, x, map_grid)
    ref = eg.solve_batch(eg.EcmParameters(), map_grid.torque, map_grid.omega_m).efficiency
    assert np.array_equal(q.values[0], ref)


def test_cost_counter(nominal_space, map_grid):
    cost = eg.CostReport()
    eg.evaluate_qoi(eg.EcmParameters(), nominal_space, eg.sample(nominal_space, 30, 1), map_grid, cost)
    assert cost.model_evaluations == 6960


def test_all_feasible_grid_has_full_mask(nominal_space):
    g = eg.build_grid(0.02, 0.08, 3, 100.0, 600.0, 4, clip_to_envelope=False)
    q = eg.evaluate_qoi(eg.EcmParameters(), nominal_space, eg.sample(nominal_space, 20, 3), g)
    assert q.mask.all()
    assert np.all((q.values > 0) & (q.values <= 1))


def test_points_infeasible_for_some_sample_are_masked(nominal_space):
    e = eg.EcmParameters()
    env = eg.torque_envelope(e, [500.0])[0]
    ops = eg.OperatingSet(np.array([0.5 * env, env]), np.array([500.0, 500.0]))
    q = eg.evaluate_qoi(e, nominal_space, eg.sample(nominal_space, 50, 0), ops)
    assert q.mask.tolist() == [True, False]
    assert np.isnan(q.values[:, 1]).any()


def test_unknown_parameter_name(map_grid):
    space = eg.ParameterSpace([eg.RandomParameter("V_max", 400, 380, 420)])
    with pytest.raises(ConfigurationError):
        eg.evaluate_qoi(eg.EcmParameters(), space, eg.sample(space, 2), map_grid)


def test_evaluation_is_deterministic(nominal_space, map_model):
    x = eg.sample(nominal_space, 7, 5)
    a = eg.evaluate(map_model, x)
    b = eg.evaluate(map_model, x)
    assert a.values.tobytes() == b.values.tobytes()


# --- moments -----------------------------------------------------------------


def qm(values):
    values = np.asarray(values, dtype=float)
    return eg.QoiMatrix(values, np.ones(values.shape[1], dtype=bool))


def test_two_point_moments():
    m = eg.moments(qm([[0.8], [0.9]]))
    assert m.mean[0] == pytest.approx(0.85)
    assert m.std[0] == pytest.approx(np.sqrt(0.005))


def test_identical_rows_have_zero_std():
    m = eg.moments(qm([[0.3, 0.7]] * 5))
    assert m.std.tolist() == [0.0, 0.0]
    assert m.mean.tolist() == [0.3, 0.7]


def test_single_sample_rejected():
    with pytest.raises(ContractError):
        eg.moments(qm([[0.5]]))


def test_masked_columns_are_nan():
    q = eg.QoiMatrix(np.array([[0.5, np.nan], [0.6, 0.7]]), np.array([True, False]))
    m = eg.moments(q)
    assert np.isnan(m.mean[1]) and np.isnan(m.std[1]) and not np.isnan(m.mean[0])


samples = arrays(np.float64, st.tuples(st.integers(2, 30), st.integers(1, 5)), elements=st.floats(0.01, 1.0))


@given(samples, st.randoms())
def test_moments_permutation_invariant_and_bounded(values, random):
    perm = list(range(values.shape[0]))
    random.shuffle(perm)
    a, b = eg.moments(qm(values)), eg.moments(qm(values[perm]))
    assert np.allclose(a.mean, b.mean, rtol=1e-13, atol=0) and np.allclose(a.std, b.std, rtol=1e-10, atol=1e-15)
    assert np.all(a.std >= 0)
    assert np.all(a.mean >= values.min(axis=0) - 1e-15) and np.all(a.mean <= values.max(axis=0) + 1e-15)
