"""Operating sets, batched efficiency evaluation and evaluation-cost bookkeeping."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .ecm import IDLE_POWER, UNCERTAIN_FIELDS, EcmParameters, OperatingPoint, solve_batch, torque_envelope
from .errors import ConfigurationError, ContractError, ParseError
from .params import ParameterSpace, SampleMatrix

__all__ = [
    "OperatingSet",
    "QoiMatrix",
    "MomentField",
    "CostReport",
    "VehicleParameters",
    "EcmModel",
    "build_grid",
    "default_grid",
    "DEFAULT_GRID",
    "SCALED_VEHICLE",
    "wltc_class3b",
    "load_cycle",
    "cycle_from_speed",
    "evaluate",
    "evaluate_qoi",
    "moments",
    "mc_gsa_cost",
    "pce_gsa_cost",
]

# pairs per solver call; bounds peak memory of the batch solve
_CHUNK_PAIRS = 200_000


@dataclass(frozen=True)
class OperatingSet:
    torque: np.ndarray
    omega_m: np.ndarray
    kind: str = "map-grid"
    grid_shape: tuple[int, int] | None = None
    grid_index: np.ndarray | None = None  # (N_op, 2): torque row, speed column
    torque_axis: np.ndarray | None = None
    omega_axis: np.ndarray | None = None
    time: np.ndarray | None = None

    def __post_init__(self):
        t = np.asarray(self.torque, dtype=float)
        w = np.asarray(self.omega_m, dtype=float)
        if t.ndim != 1 or t.shape != w.shape:
            raise ContractError("torque and omega_m must be 1-d arrays of equal length")
        if t.size < 1:
            raise ConfigurationError("an operating set needs at least one point")
        if np.any(w < 0):
            raise ConfigurationError("operating speeds must be non-negative")
        if self.kind not in ("map-grid", "cycle-profile"):
            raise ConfigurationError(f"unknown operating-set kind {self.kind!r}")
        if self.grid_shape is not None and self.grid_shape[0] * self.grid_shape[1] < t.size:
            raise ContractError("grid shape smaller than the number of points")
        object.__setattr__(self, "torque", t)
        object.__setattr__(self, "omega_m", w)

    @property
    def n_op(self) -> int:
        return self.torque.size

    @property
    def points(self) -> list[OperatingPoint]:
        return [OperatingPoint(float(t), float(w)) for t, w in zip(self.torque, self.omega_m)]

    @property
    def idle(self) -> np.ndarray:
        return np.abs(self.torque * self.omega_m) < IDLE_POWER

    def subset(self, keep: np.ndarray) -> "OperatingSet":
        keep = np.asarray(keep, dtype=bool)
        return OperatingSet(
            self.torque[keep],
            self.omega_m[keep],
            self.kind,
            self.grid_shape,
            None if self.grid_index is None else self.grid_index[keep],
            self.torque_axis,
            self.omega_axis,
            None if self.time is None else self.time[keep],
        )


@dataclass(frozen=True)
class QoiMatrix:
    """Efficiency samples: one row per parameter realization, one column per point.

    ``mask[m]`` is True when point ``m`` was feasible for every realization;
    masked-out columns hold NaN wherever the solve failed.
    """

    values: np.ndarray
    mask: np.ndarray
    opset: OperatingSet | None = None

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 2:
            raise ContractError("QoI values must be a 2-d (samples x components) array")
        m = np.asarray(self.mask, dtype=bool)
        if m.shape != (v.shape[1],):
            raise ContractError("mask length must equal the number of output components")
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "mask", m)

    @property
    def n_samples(self) -> int:
        return self.values.shape[0]

    @property
    def n_components(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class MomentField:
    mean: np.ndarray
    std: np.ndarray
    mask: np.ndarray


@dataclass
class CostReport:
    """Counts model evaluations, one (parameter set, operating point) pair each."""

    breakdown: dict[str, int] = field(default_factory=dict)

    def add(self, phase: str, count: int) -> None:
        self.breakdown[phase] = self.breakdown.get(phase, 0) + int(count)

    @property
    def model_evaluations(self) -> int:
        return sum(self.breakdown.values())

    def to_dict(self) -> dict:
        return {"model_evaluations": self.model_evaluations, "breakdown": dict(self.breakdown)}


def mc_gsa_cost(n_params: int, n_samples: int, n_op: int) -> int:
    return (n_params + 2) * n_samples * n_op


def pce_gsa_cost(n_samples: int, n_op: int) -> int:
    return n_samples * n_op


# ---------------------------------------------------------------------------
# operating sets


def build_grid(
    t_min: float,
    t_max: float,
    n_t: int,
    omega_min: float,
    omega_max: float,
    n_omega: int,
    clip_to_envelope: bool = True,
    ecm_nominal: EcmParameters | None = None,
) -> OperatingSet:
    """Uniform torque-speed tensor grid, optionally clipped to the torque envelope."""
    if n_t < 2 or n_omega < 2:
        raise ConfigurationError("grid needs n_t >= 2 and n_omega >= 2")
    if not (t_max > t_min and omega_max > omega_min):
        raise ConfigurationError("grid ranges must be non-degenerate")
    if omega_min < 0:
        raise ConfigurationError("omega_min must be non-negative")
    t_axis = np.linspace(t_min, t_max, n_t)
    w_axis = np.linspace(omega_min, omega_max, n_omega)
    rows, cols = np.meshgrid(np.arange(n_t), np.arange(n_omega), indexing="ij")
    rows, cols = rows.ravel(), cols.ravel()
    keep = np.ones(rows.size, dtype=bool)
    if clip_to_envelope:
        env = torque_envelope(ecm_nominal or EcmParameters(), w_axis)
        keep = t_axis[rows] <= env[cols]
        if not keep.any():
            raise ConfigurationError("empty grid after clipping")
    idx = np.column_stack([rows[keep], cols[keep]])
    return OperatingSet(
        t_axis[idx[:, 0]],
        w_axis[idx[:, 1]],
        "map-grid",
        (n_t, n_omega),
        idx,
        t_axis,
        w_axis,
    )


#: Motoring grid of the map study; 232 points survive clipping for the default machine.
DEFAULT_GRID = {"t_min": 0.02, "t_max": 0.16, "n_t": 8, "omega_min": 50.0, "omega_max": 1500.0, "n_omega": 31}


def default_grid(ecm: EcmParameters | None = None) -> OperatingSet:
    return build_grid(**DEFAULT_GRID, clip_to_envelope=True, ecm_nominal=ecm)


@dataclass(frozen=True)
class VehicleParameters:
    """Longitudinal vehicle model used to turn a speed trace into motor demand."""

    mass: float
    wheel_radius: float
    gear_ratio: float
    c_rr: float = 0.01
    drag_area: float = 0.0  # c_d * A, m^2
    air_density: float = 1.2
    rotating_mass_factor: float = 0.0
    gravity: float = 9.81

    def __post_init__(self):
        for name in ("mass", "wheel_radius", "gear_ratio"):
            if not getattr(self, name) > 0:
                raise ConfigurationError(f"vehicle.{name} must be positive")
        for name in ("c_rr", "drag_area", "air_density", "rotating_mass_factor"):
            if getattr(self, name) < 0:
                raise ConfigurationError(f"vehicle.{name} must be non-negative")


# A 4 kg model car whose demand fits the 0.3 A default machine over the
# whole WLTC class 3b trace: peak torque ~0.14 N m, top motor speed ~1820 rad/s.
SCALED_VEHICLE = VehicleParameters(mass=4.0, wheel_radius=0.1, gear_ratio=5.0, c_rr=0.01, drag_area=0.001)


def cycle_from_speed(time_s, speed_mps, vehicle: VehicleParameters) -> OperatingSet:
    """Motor torque and speed demanded by a vehicle following ``speed_mps``."""
    t = np.asarray(time_s, dtype=float)
    v = np.asarray(speed_mps, dtype=float)
    if t.size >= 2:
        acc = np.gradient(v, t)
    else:
        acc = np.zeros_like(v)
    moving = v > 0
    force = (
        vehicle.mass * (1.0 + vehicle.rotating_mass_factor) * acc
        + np.where(moving, vehicle.mass * vehicle.gravity * vehicle.c_rr, 0.0)
        + 0.5 * vehicle.air_density * vehicle.drag_area * v * v
    )
    torque = force * vehicle.wheel_radius / vehicle.gear_ratio
    omega = v * vehicle.gear_ratio / vehicle.wheel_radius
    torque = np.where(np.abs(torque) < 1e-12, 0.0, torque)
    return OperatingSet(torque, omega, "cycle-profile", time=t)


def load_cycle(
    path: str | Path,
    vehicle: VehicleParameters | None = None,
    resample_dt: float | None = None,
) -> OperatingSet:
    """Read a driving-cycle CSV.

    Two layouts are accepted: ``time_s,torque_Nm,omega_rad_s`` (motor demand
    given directly) and ``time_s,speed_mps`` (converted with ``vehicle``).
    ``resample_dt`` linearly interpolates the columns onto a uniform time
    axis before conversion.
    """
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise ParseError("empty cycle file", 1) from None
        if header == ["time_s", "torque_Nm", "omega_rad_s"]:
            mode = "direct"
        elif header == ["time_s", "speed_mps"]:
            mode = "speed"
        else:
            raise ParseError(f"unrecognized header {','.join(header)!r}", 1)
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise ParseError(f"expected {len(header)} fields, got {len(row)}", lineno)
            try:
                vals = [float(c) for c in row]
            except ValueError:
                raise ParseError(f"non-numeric field in {row!r}", lineno) from None
            if not all(np.isfinite(vals)):
                raise ParseError("non-finite value", lineno)
            rows.append(vals)
    if not rows:
        raise ParseError("cycle file has no data rows", 2)
    data = np.array(rows)
    t = data[:, 0]
    if np.any(np.diff(t) <= 0):
        bad = int(np.argmax(np.diff(t) <= 0)) + 3
        raise ConfigurationError(f"time column must be strictly increasing (line {bad})")

    if resample_dt is not None:
        if not resample_dt > 0:
            raise ConfigurationError("resample_dt must be positive")
        n = int(np.floor((t[-1] - t[0]) / resample_dt + 1e-9)) + 1
        t_new = t[0] + resample_dt * np.arange(n)
        data = np.column_stack([t_new] + [np.interp(t_new, t, data[:, j]) for j in range(1, data.shape[1])])
        t = t_new

    if mode == "direct":
        if np.any(data[:, 2] < 0):
            raise ConfigurationError("omega_rad_s must be non-negative")
        return OperatingSet(data[:, 1], data[:, 2], "cycle-profile", time=t)
    if vehicle is None:
        raise ConfigurationError("a speed-only cycle needs vehicle parameters")
    if np.any(data[:, 1] < 0):
        raise ConfigurationError("speed_mps must be non-negative")
    return cycle_from_speed(t, data[:, 1], vehicle)


def wltc_class3b(vehicle: VehicleParameters | None = None, resample_dt: float | None = 0.5) -> OperatingSet:
    """The bundled WLTC class 3b speed trace as motor demand.

    The trace is tabulated at 1 Hz (1801 samples); the default half-second
    resampling gives 3601 operating points.
    """
    ref = resources.files(__package__).joinpath("data", "wltc_class3b.csv")
    with resources.as_file(ref) as path:
        return load_cycle(path, vehicle or SCALED_VEHICLE, resample_dt)


# ---------------------------------------------------------------------------
# evaluation


class EcmModel:
    """Efficiency of the equivalent-circuit model over an operating set.

    Calling the model with an ``(n, N)`` array of parameter values (columns
    named by ``names``) returns an ``(n, N_op)`` efficiency array with NaN
    where the point is infeasible.
    """

    def __init__(self, ecm: EcmParameters, opset: OperatingSet, idle_power: float = IDLE_POWER):
        self.ecm = ecm
        self.opset = opset
        self.idle_power = idle_power

    @property
    def n_outputs(self) -> int:
        return self.opset.n_op

    def check_names(self, names: Sequence[str]) -> None:
        unknown = [n for n in names if n not in UNCERTAIN_FIELDS]
        if unknown:
            raise ConfigurationError(
                f"unknown parameter name(s) {unknown}; the circuit model accepts {list(UNCERTAIN_FIELDS)}"
            )

    def __call__(self, x: np.ndarray, names: Sequence[str]) -> np.ndarray:
        self.check_names(names)
        x = np.atleast_2d(np.asarray(x, dtype=float))
        n_op = self.opset.n_op
        out = np.empty((x.shape[0], n_op))
        rows_per_chunk = max(1, _CHUNK_PAIRS // n_op)
        for start in range(0, x.shape[0], rows_per_chunk):
            block = x[start : start + rows_per_chunk]
            overrides = {name: block[:, j : j + 1] for j, name in enumerate(names)}
            sol = solve_batch(
                self.ecm,
                self.opset.torque[None, :],
                self.opset.omega_m[None, :],
                overrides=overrides,
                idle_power=self.idle_power,
            )
            out[start : start + block.shape[0]] = sol.efficiency
        return out


ModelFn = Callable[[np.ndarray, Sequence[str]], np.ndarray]


def evaluate(
    model: ModelFn,
    samples: SampleMatrix | np.ndarray,
    names: Sequence[str] | None = None,
    cost: CostReport | None = None,
    phase: str = "sampling",
    opset: OperatingSet | None = None,
) -> QoiMatrix:
    """Run ``model`` on every sample row; NaN outputs mark infeasible points."""
    if isinstance(samples, SampleMatrix):
        x, names = samples.values, samples.space.names
    else:
        x = np.atleast_2d(np.asarray(samples, dtype=float))
        if names is None:
            raise ContractError("names are required with a raw sample array")
    check = getattr(model, "check_names", None)
    if check is not None:
        check(names)
    y = np.atleast_2d(np.asarray(model(x, names), dtype=float))
    if y.shape[0] != x.shape[0]:
        raise ContractError("model returned a different number of rows than it was given")
    if cost is not None:
        cost.add(phase, y.shape[0] * y.shape[1])
    mask = np.all(np.isfinite(y), axis=0)
    if opset is None:
        opset = getattr(model, "opset", None)
    return QoiMatrix(y, mask, opset)


def evaluate_qoi(
    ecm_base: EcmParameters,
    space: ParameterSpace,
    samples: SampleMatrix,
    opset: OperatingSet,
    cost: CostReport | None = None,
    phase: str = "sampling",
) -> QoiMatrix:
    """Efficiency of every sample at every operating point."""
    if samples.space.names != space.names:
        raise ContractError("sample columns do not match the parameter space")
    return evaluate(EcmModel(ecm_base, opset), samples, cost=cost, phase=phase)


def moments(q: QoiMatrix) -> MomentField:
    """Columnwise sample mean and unbiased standard deviation (NaN where masked)."""
    if q.n_samples < 2:
        raise ContractError("at least two samples are needed for a standard deviation")
    vals = q.values[:, q.mask]
    mean = np.full(q.n_components, np.nan)
    std = np.full(q.n_components, np.nan)
    m = vals.mean(axis=0)
    s = vals.std(axis=0, ddof=1)
    # constant columns: report the value itself and an exact zero spread
    const = np.all(vals == vals[:1], axis=0)
    mean[q.mask] = np.where(const, vals[0], m)
    std[q.mask] = np.where(const, 0.0, s)
    return MomentField(mean, std, q.mask.copy())
