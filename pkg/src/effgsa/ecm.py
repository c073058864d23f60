"""Steady-state d-q equivalent-circuit model of a PMSM.

The model follows the usual rotor-frame equations

    v_d = R_s i_d - w_e L_q i_q
    v_q = R_s i_q + w_e (L_d i_d + lambda)
    T   = 3/2 p (lambda i_q + (L_d - L_q) i_d i_q)

with ``w_e = p * omega_m``.  For every operating point ``(T, omega_m)`` the
current vector minimizing total losses under the current and voltage limits
is found, which gives the maximum achievable efficiency at that point.

All heavy lifting happens in :func:`solve_batch`, which is vectorized over
operating points *and* parameter realizations; the scalar helpers wrap it.
"""

from __future__ import annotations

from dataclasses import dataclass, fields, replace
from typing import Mapping

import numpy as np
from numba import njit, prange

__all__ = [
    "EcmParameters",
    "OperatingPoint",
    "LossBreakdown",
    "OperatingSolution",
    "BatchSolution",
    "SolverError",
    "UNCERTAIN_FIELDS",
    "IDLE_POWER",
    "dq_voltages",
    "torque",
    "losses",
    "solve_operating_point",
    "solve_batch",
    "torque_envelope",
]

#: |P_out| below this many watts is treated as idle (efficiency 1).
IDLE_POWER = 1.0

# current-angle search used by the torque envelope
_ENV_SCAN = 256
_BETA_TOL = 1e-10
_GOLDEN = 0.5 * (np.sqrt(5.0) - 1.0)

# parameter names used in configs / parameter spaces -> dataclass attribute
_ALIASES = {"lambda": "lam"}

#: Circuit elements that may be treated as random inputs.
UNCERTAIN_FIELDS = ("R_s", "lambda", "L_d", "L_q")


class SolverError(RuntimeError):
    """Raised when the operating-point solve cannot produce a valid answer."""


@dataclass(frozen=True)
class EcmParameters:
    """Circuit parameters, ratings and loss coefficients of the machine.

    Defaults are the nominal circuit values of the benchmark machine with
    three pole pairs, 0.3 A / 400 V peak ratings and copper losses only.
    The small current rating keeps the operating range in the regime where
    copper loss dominates and the reluctance torque stays a minor term; see
    the README for why a larger rating changes the sensitivity picture.
    """

    R_s: float = 8.9462
    lam: float = 0.1144
    L_d: float = 0.2055
    L_q: float = 0.332
    pole_pairs: int = 3
    I_max: float = 0.3
    V_max: float = 400.0
    k_hyst: float = 0.0
    k_eddy: float = 0.0
    k_fric: float = 0.0
    k_wind: float = 0.0

    def __post_init__(self):
        for name in ("R_s", "lam", "L_d", "L_q", "V_max"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{_public(name)} must be positive, got {getattr(self, name)!r}")
        if not self.I_max >= 0:
            raise ValueError(f"I_max must be non-negative, got {self.I_max!r}")
        if int(self.pole_pairs) != self.pole_pairs or self.pole_pairs < 1:
            raise ValueError(f"pole_pairs must be a positive integer, got {self.pole_pairs!r}")
        for name in ("k_hyst", "k_eddy", "k_fric", "k_wind"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")

    @classmethod
    def from_mapping(cls, values: Mapping[str, float]) -> "EcmParameters":
        return cls().with_values(values)

    def with_values(self, values: Mapping[str, float]) -> "EcmParameters":
        """Return a copy with some fields overridden; accepts ``lambda``."""
        known = {f.name for f in fields(self)}
        kwargs = {}
        for key, val in values.items():
            attr = _ALIASES.get(key, key)
            if attr not in known:
                raise KeyError(f"unknown machine parameter {key!r}")
            kwargs[attr] = val
        return replace(self, **kwargs)

    def get(self, name: str) -> float:
        return getattr(self, _ALIASES.get(name, name))

    def as_dict(self) -> dict:
        return {_public(f.name): getattr(self, f.name) for f in fields(self)}


def _public(attr: str) -> str:
    for k, v in _ALIASES.items():
        if v == attr:
            return k
    return attr


@dataclass(frozen=True)
class OperatingPoint:
    torque: float
    omega_m: float

    def __post_init__(self):
        if self.omega_m < 0:
            raise ValueError("omega_m must be non-negative")


@dataclass(frozen=True)
class LossBreakdown:
    p_elec: float
    p_magn: float
    p_mech: float

    @property
    def total(self) -> float:
        return self.p_elec + self.p_magn + self.p_mech


@dataclass(frozen=True)
class OperatingSolution:
    i_d: float
    i_q: float
    v_d: float
    v_q: float
    losses: LossBreakdown
    p_out: float
    efficiency: float
    feasible: bool
    idle: bool = False


@dataclass
class BatchSolution:
    """Array-valued counterpart of :class:`OperatingSolution`."""

    i_d: np.ndarray
    i_q: np.ndarray
    v_d: np.ndarray
    v_q: np.ndarray
    p_elec: np.ndarray
    p_magn: np.ndarray
    p_mech: np.ndarray
    p_out: np.ndarray
    efficiency: np.ndarray
    feasible: np.ndarray
    idle: np.ndarray

    @property
    def p_loss(self) -> np.ndarray:
        return self.p_elec + self.p_magn + self.p_mech


# ---------------------------------------------------------------------------
# closed-form model equations (broadcast over numpy arrays)


def dq_voltages(ecm: EcmParameters, i_d, i_q, omega_m):
    """Steady-state d- and q-axis voltages."""
    return _voltages(i_d, i_q, omega_m, _prm(ecm))


def torque(ecm: EcmParameters, i_d, i_q):
    return _torque(i_d, i_q, _prm(ecm))


def losses(ecm: EcmParameters, i_d, i_q, omega_m) -> LossBreakdown:
    p_elec, p_magn, p_mech = _losses(i_d, i_q, omega_m, _prm(ecm))
    return LossBreakdown(p_elec, p_magn, p_mech)


def _prm(ecm: EcmParameters, overrides: Mapping[str, np.ndarray] | None = None) -> dict:
    prm = {f.name: getattr(ecm, f.name) for f in fields(ecm)}
    if overrides:
        for key, val in overrides.items():
            attr = _ALIASES.get(key, key)
            if attr not in prm:
                raise KeyError(f"unknown machine parameter {key!r}")
            prm[attr] = np.asarray(val, dtype=float)
    return prm


def _voltages(i_d, i_q, omega_m, prm):
    w_e = prm["pole_pairs"] * omega_m
    v_d = prm["R_s"] * i_d - w_e * prm["L_q"] * i_q
    v_q = prm["R_s"] * i_q + w_e * (prm["L_d"] * i_d + prm["lam"])
    return v_d, v_q


def _torque(i_d, i_q, prm):
    return 1.5 * prm["pole_pairs"] * (prm["lam"] * i_q + (prm["L_d"] - prm["L_q"]) * i_d * i_q)


def _losses(i_d, i_q, omega_m, prm):
    w_e = prm["pole_pairs"] * omega_m
    p_elec = 1.5 * prm["R_s"] * (i_d * i_d + i_q * i_q)
    lam = prm["lam"]
    psi2 = ((prm["L_d"] * i_d + lam) ** 2 + (prm["L_q"] * i_q) ** 2) / (lam * lam)
    p_magn = (prm["k_hyst"] * np.abs(w_e) + prm["k_eddy"] * w_e * w_e) * psi2
    p_mech = prm["k_fric"] * omega_m + prm["k_wind"] * omega_m**3
    return p_elec, p_magn, p_mech


# ---------------------------------------------------------------------------
# optimal current solve
#
# Along the constant-torque curve i_q is fixed by i_d, and total loss is
# convex in i_d, so the problem is one-dimensional.  Constraint violations
# are folded into a penalty that ranks every infeasible i_d above every
# feasible one; a coarse scan picks the bracket and golden-section search
# refines it.

_SCAN = 24
_ID_TOL = 1e-12  # amperes
_PENALTY = 1e30
_FEAS_TOL = 1e-12


@njit(cache=True)
def _objective(i_d, t, w, r, lam, ld, lq, pp, imax, vmax, kh, ke, kf, kw):
    if t == 0.0:
        i_q = 0.0
    else:
        i_q = t / (1.5 * pp * (lam + (ld - lq) * i_d))
    w_e = pp * w
    psi_d = ld * i_d + lam
    psi_q = lq * i_q
    loss = 1.5 * r * (i_d * i_d + i_q * i_q)
    loss += (kh * abs(w_e) + ke * w_e * w_e) * (psi_d * psi_d + psi_q * psi_q) / (lam * lam)
    loss += kf * w + kw * w * w * w
    v_d = r * i_d - w_e * psi_q
    v_q = r * i_q + w_e * psi_d
    cur = np.sqrt(i_d * i_d + i_q * i_q)
    viol_i = (cur - imax) / max(imax, 1e-300)
    viol_v = np.sqrt(v_d * v_d + v_q * v_q) / vmax - 1.0
    viol = max(viol_i, viol_v)
    if viol <= _FEAS_TOL:
        return loss, True
    return _PENALTY * (1.0 + viol), False


@njit(cache=True)
def _solve_one(t, w, r, lam, ld, lq, pp, imax, vmax, kh, ke, kf, kw):
    lo = -imax
    hi = imax
    # keep the torque-producing flux term lam + (L_d - L_q) i_d positive
    if ld < lq:
        hi = min(hi, lam / (lq - ld) * (1.0 - 1e-9))
    elif ld > lq:
        lo = max(lo, -lam / (ld - lq) * (1.0 - 1e-9))
    if not hi > lo:
        f, ok = _objective(0.0, t, w, r, lam, ld, lq, pp, imax, vmax, kh, ke, kf, kw)
        return 0.0, ok

    step = (hi - lo) / (_SCAN - 1)
    best_x = lo
    best_f = np.inf
    best_ok = False
    k_best = 0
    for k in range(_SCAN):
        x = lo + k * step
        f, ok = _objective(x, t, w, r, lam, ld, lq, pp, imax, vmax, kh, ke, kf, kw)
        if f < best_f:
            best_f, best_x, best_ok, k_best = f, x, ok, k

    a = lo + max(k_best - 1, 0) * step
    b = lo + min(k_best + 1, _SCAN - 1) * step
    g = 0.5 * (np.sqrt(5.0) - 1.0)
    x1 = b - g * (b - a)
    x2 = a + g * (b - a)
    f1, ok1 = _objective(x1, t, w, r, lam, ld, lq, pp, imax, vmax, kh, ke, kf, kw)
    f2, ok2 = _objective(x2, t, w, r, lam, ld, lq, pp, imax, vmax, kh, ke, kf, kw)
    if f1 < best_f:
        best_f, best_x, best_ok = f1, x1, ok1
    if f2 < best_f:
        best_f, best_x, best_ok = f2, x2, ok2
    while b - a > _ID_TOL:
        if f1 <= f2:
            b = x2
            x2, f2 = x1, f1
            x1 = b - g * (b - a)
            f1, ok1 = _objective(x1, t, w, r, lam, ld, lq, pp, imax, vmax, kh, ke, kf, kw)
            if f1 < best_f:
                best_f, best_x, best_ok = f1, x1, ok1
        else:
            a = x1
            x1, f1 = x2, f2
            x2 = a + g * (b - a)
            f2, ok2 = _objective(x2, t, w, r, lam, ld, lq, pp, imax, vmax, kh, ke, kf, kw)
            if f2 < best_f:
                best_f, best_x, best_ok = f2, x2, ok2
    # golden section only gets within _ID_TOL of an optimum at i_d = 0 (null
    # torque, symmetric inductances); land on it exactly when it is as good
    if lo <= 0.0 <= hi:
        f0, ok0 = _objective(0.0, t, w, r, lam, ld, lq, pp, imax, vmax, kh, ke, kf, kw)
        if f0 <= best_f:
            best_x, best_ok = 0.0, ok0
    return best_x, best_ok


@njit(cache=True, parallel=True)
def _solve_kernel(t, w, r, lam, ld, lq, pp, imax, vmax, kh, ke, kf, kw, i_d_out, ok_out):
    for j in prange(t.size):
        x, ok = _solve_one(
            t[j], w[j], r[j], lam[j], ld[j], lq[j], pp[j], imax[j], vmax[j], kh[j], ke[j], kf[j], kw[j]
        )
        i_d_out[j] = x
        ok_out[j] = ok


_KERNEL_ORDER = ("R_s", "lam", "L_d", "L_q", "pole_pairs", "I_max", "V_max", "k_hyst", "k_eddy", "k_fric", "k_wind")


def solve_batch(
    ecm: EcmParameters,
    torque,
    omega_m,
    overrides: Mapping[str, np.ndarray] | None = None,
    idle_power: float = IDLE_POWER,
) -> BatchSolution:
    """Maximum-efficiency operation for many (parameters, point) pairs at once.

    ``torque``, ``omega_m`` and every array in ``overrides`` (keyed by
    parameter name, e.g. ``{"R_s": ..., "lambda": ...}``) are broadcast
    against each other; the result arrays have the broadcast shape.
    """
    prm = _prm(ecm, overrides)
    t_arr = np.asarray(torque, dtype=float)
    w_arr = np.asarray(omega_m, dtype=float)
    shape = np.broadcast_shapes(t_arr.shape, w_arr.shape, *(np.shape(prm[k]) for k in _KERNEL_ORDER))
    t = np.ascontiguousarray(np.broadcast_to(t_arr, shape).ravel())
    w = np.ascontiguousarray(np.broadcast_to(w_arr, shape).ravel())
    if np.any(w < 0):
        raise ValueError("omega_m must be non-negative")
    flat = {
        k: np.ascontiguousarray(np.broadcast_to(np.asarray(prm[k], dtype=float), shape).ravel())
        for k in _KERNEL_ORDER
    }
    bad = [_public(k) for k, v in flat.items() if not np.all(np.isfinite(v))]
    if bad or not np.all(np.isfinite(t)) or not np.all(np.isfinite(w)):
        raise SolverError(f"non-finite solver input (fields: {bad or ['torque/omega_m']})")
    if np.any(flat["R_s"] <= 0) or np.any(flat["lam"] <= 0) or np.any(flat["V_max"] <= 0):
        raise SolverError("R_s, lambda and V_max must stay positive in every realization")

    i_d = np.empty(t.size)
    ok = np.empty(t.size, dtype=np.bool_)
    _solve_kernel(t, w, *(flat[k] for k in _KERNEL_ORDER), i_d, ok)
    return _finalize(i_d, ok, t, w, flat, idle_power, shape)


def _finalize(i_d, ok, t, w, flat, idle_power, shape):
    den = 1.5 * flat["pole_pairs"] * (flat["lam"] + (flat["L_d"] - flat["L_q"]) * i_d)
    i_q = np.where(t == 0, 0.0, t / den)
    v_d, v_q = _voltages(i_d, i_q, w, flat)
    p_elec, p_magn, p_mech = _losses(i_d, i_q, w, flat)
    loss = p_elec + p_magn + p_mech
    p_out = t * w

    idle = np.abs(p_out) < idle_power
    # the unused branch may divide by a near-zero |p_out| at idle points
    with np.errstate(invalid="ignore", divide="ignore", over="ignore"):
        eta_mot = p_out / (p_out + loss)
        eta_gen = (np.abs(p_out) - loss) / np.abs(p_out)
    eta = np.where(idle, 1.0, np.where(p_out > 0, eta_mot, eta_gen))
    # a generator that cannot cover its own losses has no admissible operation
    feasible = ok & (idle | (eta > 0))
    eta = np.where(feasible, eta, np.nan)
    if np.any(feasible & ~np.isfinite(eta)):
        raise SolverError("non-finite efficiency at a feasible point")

    def shaped(a):
        return np.reshape(np.where(feasible, a, np.nan), shape)

    return BatchSolution(
        i_d=shaped(i_d),
        i_q=shaped(i_q),
        v_d=shaped(v_d),
        v_q=shaped(v_q),
        p_elec=shaped(p_elec),
        p_magn=shaped(p_magn),
        p_mech=shaped(p_mech),
        p_out=np.reshape(p_out, shape),
        efficiency=np.reshape(eta, shape),
        feasible=np.reshape(feasible, shape),
        idle=np.reshape(idle, shape),
    )


def solve_operating_point(
    ecm: EcmParameters, op: OperatingPoint, idle_power: float = IDLE_POWER
) -> OperatingSolution:
    """Loss-minimizing current vector and resulting efficiency at one point.

    Infeasible points (torque beyond the envelope at that speed) come back
    with ``feasible=False`` and NaN electrical quantities.
    """
    sol = solve_batch(ecm, op.torque, op.omega_m, idle_power=idle_power)
    f = lambda a: float(a)  # noqa: E731
    return OperatingSolution(
        i_d=f(sol.i_d),
        i_q=f(sol.i_q),
        v_d=f(sol.v_d),
        v_q=f(sol.v_q),
        losses=LossBreakdown(f(sol.p_elec), f(sol.p_magn), f(sol.p_mech)),
        p_out=f(sol.p_out),
        efficiency=f(sol.efficiency),
        feasible=bool(sol.feasible),
        idle=bool(sol.idle),
    )


# ---------------------------------------------------------------------------
# torque envelope


def _ray_max_torque(beta, omega, prm):
    """Largest torque reachable along current angle ``beta`` at one speed."""
    s, c = np.sin(beta), np.cos(beta)
    w_e = prm["pole_pairs"] * omega
    r, lam, ld, lq = prm["R_s"], prm["lam"], prm["L_d"], prm["L_q"]
    # |v|^2 = qa I^2 + qb I + qc along the ray
    a_d = -r * s - w_e * lq * c
    a_q = r * c - w_e * ld * s
    qa = a_d * a_d + a_q * a_q
    qb = 2.0 * a_q * w_e * lam
    qc = (w_e * lam) ** 2 - prm["V_max"] ** 2
    disc = qb * qb - 4.0 * qa * qc
    with np.errstate(invalid="ignore"):
        root = np.sqrt(disc)
        i_lo = np.maximum((-qb - root) / (2.0 * qa), 0.0)
        i_hi = np.minimum((-qb + root) / (2.0 * qa), prm["I_max"])
    ok = (disc >= 0) & (i_hi >= i_lo)

    k2 = 1.5 * prm["pole_pairs"] * c * (lq - ld) * s
    k1 = 1.5 * prm["pole_pairs"] * c * lam

    def tau(i):
        return k1 * i + k2 * i * i

    best = np.fmax(tau(i_lo), tau(i_hi))
    with np.errstate(invalid="ignore", divide="ignore"):
        i_vx = np.where(k2 < 0, -k1 / (2.0 * k2), np.nan)
    inside = (i_vx > i_lo) & (i_vx < i_hi)
    best = np.where(inside, np.fmax(best, tau(np.where(inside, i_vx, 0.0))), best)
    return np.where(ok, np.maximum(best, 0.0), 0.0)


def torque_envelope(ecm: EcmParameters, omega_list) -> np.ndarray:
    """Maximum motoring torque at each speed under current and voltage limits.

    Bounded search over the current angle: a uniform scan followed by
    golden-section refinement around the best scan angle.
    """
    omega = np.atleast_1d(np.asarray(omega_list, dtype=float))
    if np.any(omega < 0):
        raise ValueError("omega values must be non-negative")
    prm = _prm(ecm)
    n_scan = _ENV_SCAN
    grid = -0.5 * np.pi + (np.arange(n_scan) + 0.5) * np.pi / n_scan
    vals = _ray_max_torque(grid[None, :], omega[:, None], prm)
    k = np.argmax(vals, axis=1)
    best = vals[np.arange(omega.size), k]
    step = np.pi / n_scan
    lo = np.maximum(grid[k] - step, -0.5 * np.pi)
    hi = np.minimum(grid[k] + step, 0.5 * np.pi)
    x1 = hi - _GOLDEN * (hi - lo)
    x2 = lo + _GOLDEN * (hi - lo)
    f1 = _ray_max_torque(x1, omega, prm)
    f2 = _ray_max_torque(x2, omega, prm)
    while np.any(hi - lo > _BETA_TOL):
        left = f1 >= f2
        hi = np.where(left, x2, hi)
        lo = np.where(left, lo, x1)
        new_x = np.where(left, hi - _GOLDEN * (hi - lo), lo + _GOLDEN * (hi - lo))
        f_new = _ray_max_torque(new_x, omega, prm)
        x1, x2 = np.where(left, new_x, x2), np.where(left, x1, new_x)
        f1, f2 = np.where(left, f_new, f2), np.where(left, f1, f_new)
        best = np.fmax(best, f_new)
    return best
