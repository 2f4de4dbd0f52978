"""Rigid-body hexacopter model with an external wrench input.

The same discrete step doubles as simulation ground truth and as the
estimator's process model: position, velocity and body rate advance by
forward Euler at the sample time, the attitude by the orthogonal one-step
integrator from :mod:`hexwrench.quat`.

Frames: positions/velocities/external force in the inertial frame, body
rate and thrust in the body frame, external torque about body z only.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from .quat import quat_identity, quat_integrate, quat_normalize, quat_rotate

__all__ = [
    "VehicleParams",
    "SimState",
    "Wrench",
    "ControlMoments",
    "allocation_matrix",
    "allocate",
    "hover_rotor_speed",
    "translational_accel",
    "rotational_accel",
    "step",
    "step_arrays",
    "step_rk4",
]

_SIN30 = 0.5
_COS30 = np.sqrt(3.0) / 2.0


@dataclass(frozen=True)
class VehicleParams:
    """Physical constants of the hexacopter.

    The defaults are plausible values for a ~1.5 kg class machine; nothing
    downstream is tied to them, every consumer takes the params explicitly.

    Attributes:
        m: mass [kg].
        g: gravitational acceleration [m/s^2].
        j: diagonal of the inertia tensor (Jxx, Jyy, Jzz) [kg m^2].
        jr: rotor moment of inertia about its spin axis [kg m^2].
        l: boom length [m].
        kn: rotor thrust constant [N s^2] (thrust_i = kn * n_i^2).
        km: rotor moment constant [m].
        k_drag: aerodynamic drag constant [N s^2 / m]; its sign selects the
            drag direction convention, magnitude may be zero.
        ts: sample time [s].
        allocation: "balanced" makes equal rotor speeds produce exactly zero
            body torque; "legacy" keeps the older roll row whose entries sum
            to 2*sin(30deg), leaving a net roll moment at equal speeds.
        gyro_torque: ordering of the rotor gyroscopic torque; "standard"
            uses (wy, -wx, 0) (energy-neutral precession), "legacy" uses
            (wy, wx, 0), which turns the roll/pitch coupling into a saddle
            with growth rate Jr*sum(n)/sqrt(Jxx*Jyy) (~9 1/s at hover) and
            is only usable for short open-loop audits.
    """

    m: float = 1.5
    g: float = 9.81
    j: np.ndarray = field(default_factory=lambda: np.array([0.0347, 0.0458, 0.0977]))
    jr: float = 1e-4
    l: float = 0.215
    kn: float = 6.7e-6
    km: float = 0.016
    k_drag: float = 1e-6
    ts: float = 0.01
    allocation: Literal["balanced", "legacy"] = "balanced"
    gyro_torque: Literal["standard", "legacy"] = "standard"

    def __post_init__(self):
        object.__setattr__(self, "j", np.asarray(self.j, dtype=float))
        for name in ("m", "g", "l", "kn", "km", "ts"):
            if not getattr(self, name) > 0.0:
                raise ValueError(f"VehicleParams.{name} must be > 0")
        if self.jr < 0.0:
            raise ValueError("VehicleParams.jr must be >= 0")
        if not np.all(self.j > 0.0):
            raise ValueError("VehicleParams.j must be elementwise > 0")
        if self.allocation not in ("balanced", "legacy"):
            raise ValueError(f"unknown allocation variant {self.allocation!r}")
        if self.gyro_torque not in ("legacy", "standard"):
            raise ValueError(f"unknown gyro_torque variant {self.gyro_torque!r}")


@dataclass
class SimState:
    """Ground-truth rigid-body state."""

    p: np.ndarray = field(default_factory=lambda: np.zeros(3))
    v: np.ndarray = field(default_factory=lambda: np.zeros(3))
    q: np.ndarray = field(default_factory=quat_identity)
    omega: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        self.p = np.asarray(self.p, dtype=float).reshape(3)
        self.v = np.asarray(self.v, dtype=float).reshape(3)
        self.q = quat_normalize(np.asarray(self.q, dtype=float).reshape(4))
        self.omega = np.asarray(self.omega, dtype=float).reshape(3)

    def copy(self) -> "SimState":
        return SimState(self.p.copy(), self.v.copy(), self.q.copy(), self.omega.copy())


@dataclass
class Wrench:
    """External force (inertial frame) plus torque about body z."""

    force: np.ndarray = field(default_factory=lambda: np.zeros(3))
    torque_z: float = 0.0

    def __post_init__(self):
        self.force = np.asarray(self.force, dtype=float).reshape(3)
        self.torque_z = float(self.torque_z)

    def copy(self) -> "Wrench":
        return Wrench(self.force.copy(), self.torque_z)

    def norm(self) -> float:
        return float(np.linalg.norm(self.force))


@dataclass(frozen=True)
class ControlMoments:
    """Propeller torques about body x/y/z [N m] and collective thrust [N]."""

    torque: np.ndarray
    thrust: float


def allocation_matrix(params: VehicleParams) -> np.ndarray:
    """4x6 map from squared rotor speeds to (torque_x/y/z, thrust).

    Includes the gain matrix diag(l*kn, l*kn, kn*km, kn); rotors sit at
    30, 90, ... 330 degrees around the body z axis.
    """
    s, c = _SIN30, _COS30
    last_roll = s if params.allocation == "legacy" else -s
    rows = np.array(
        [
            [s, 1.0, s, -s, -1.0, last_roll],
            [-c, 0.0, c, c, 0.0, -c],
            [-1.0, 1.0, -1.0, 1.0, -1.0, 1.0],
            [1.0, 1.0, 1.0, 1.0, 1.0, 1.0],
        ]
    )
    gains = np.array(
        [params.l * params.kn, params.l * params.kn, params.kn * params.km, params.kn]
    )
    return gains[:, None] * rows


def allocate(n: np.ndarray, params: VehicleParams) -> ControlMoments:
    """Torques and thrust produced by rotor speeds ``n`` (6-vector, rad/s).

    Row sums are accumulated left to right so that equal rotor speeds cancel
    the balanced torque rows exactly, not just to roundoff.
    """
    n = np.asarray(n, dtype=float).reshape(6)
    u = np.sum(allocation_matrix(params) * (n * n), axis=1)
    return ControlMoments(torque=u[:3], thrust=float(u[3]))


def hover_rotor_speed(params: VehicleParams) -> float:
    """Rotor speed at which six equal rotors exactly cancel gravity."""
    return float(np.sqrt(params.m * params.g / (6.0 * params.kn)))


def _accel_arrays(v, q, omega, thrust, force, tau_z, n, params: VehicleParams):
    """Translational/rotational acceleration for stacked states.

    ``v, omega, force``: (..., 3); ``q``: (..., 4); ``tau_z``: (...,) or
    scalar; ``thrust``: scalar; ``n``: rotor-speed 6-vector common to all
    stacked states.
    """
    n = np.asarray(n, dtype=float).reshape(6)
    abs_n_sum = float(np.sum(np.abs(n)))

    # drag is built from inertial velocity components but enters next to the
    # thrust, i.e. before the body-to-inertial rotation
    body_force = np.empty_like(v)
    body_force[..., 0] = params.k_drag * abs_n_sum * v[..., 0]
    body_force[..., 1] = params.k_drag * abs_n_sum * v[..., 1]
    body_force[..., 2] = thrust
    grav = np.array([0.0, 0.0, params.g])
    accel = quat_rotate(q, body_force) / params.m - grav + force / params.m

    # J^-1 (u + [0,0,tau_z] - w x Jw - tau_rotor), diagonal J
    moments = allocate(n, params).torque
    tau = np.zeros_like(omega)
    tau[..., :] = moments
    tau[..., 2] = tau[..., 2] + tau_z
    tau = tau - np.cross(omega, omega * params.j)
    omega_r = np.sum(n) - 6.0 * omega[..., 2]
    sx = 1.0 if params.gyro_torque == "legacy" else -1.0
    rotor = np.zeros_like(omega)
    rotor[..., 0] = params.jr * omega_r * omega[..., 1]
    rotor[..., 1] = sx * params.jr * omega_r * omega[..., 0]
    return accel, (tau - rotor) / params.j


def translational_accel(
    state: SimState,
    thrust: float,
    n: np.ndarray,
    wrench: Wrench,
    params: VehicleParams,
) -> np.ndarray:
    """Inertial-frame linear acceleration [m/s^2] for the current state."""
    accel, _ = _accel_arrays(
        state.v, state.q, state.omega, thrust, wrench.force, wrench.torque_z, n, params
    )
    return accel


def rotational_accel(
    omega: np.ndarray,
    moments: ControlMoments,
    tau_z: float,
    n: np.ndarray,
    params: VehicleParams,
) -> np.ndarray:
    """Body-frame angular acceleration [rad/s^2].

    ``moments`` must be consistent with ``n`` (normally from :func:`allocate`);
    they are passed separately so callers can inject synthetic torques.
    """
    omega = np.asarray(omega, dtype=float).reshape(3)
    tau = moments.torque + np.array([0.0, 0.0, tau_z])
    jw = params.j * omega
    omega_r = float(np.sum(n)) - 6.0 * omega[2]
    sx = 1.0 if params.gyro_torque == "legacy" else -1.0
    rotor = params.jr * omega_r * np.array([omega[1], sx * omega[0], 0.0])
    return (tau - np.cross(omega, jw) - rotor) / params.j


def step(state: SimState, n: np.ndarray, wrench: Wrench, params: VehicleParams) -> SimState:
    """Advance one sample: forward Euler for p, v, omega; exact attitude map."""
    accel, alpha = _accel_arrays(
        state.v, state.q, state.omega, allocate(n, params).thrust,
        wrench.force, wrench.torque_z, n, params,
    )
    ts = params.ts
    return SimState(
        p=state.p + ts * state.v,
        v=state.v + ts * accel,
        q=quat_integrate(state.q, state.omega, ts),
        omega=state.omega + ts * alpha,
    )


def step_arrays(p, v, q, omega, force, tau_z, n, params: VehicleParams):
    """Vectorized :func:`step` over stacked states (used for sigma points).

    Arguments are (..., 3)/(..., 4)/(...,) arrays sharing leading shape,
    plus one rotor-speed 6-vector common to all states.  Returns the
    advanced (p, v, q, omega) arrays; the wrench states do not move here.
    """
    thrust = allocate(n, params).thrust
    accel, alpha = _accel_arrays(v, q, omega, thrust, force, tau_z, n, params)
    ts = params.ts
    return (
        p + ts * v,
        v + ts * accel,
        quat_integrate(q, omega, ts),
        omega + ts * alpha,
    )


def _flat_derivative(x: np.ndarray, n, wrench: Wrench, params: VehicleParams) -> np.ndarray:
    """Continuous-time derivative of the flattened state [p v q omega].

    The quaternion derivative is qdot = 0.5 q * (omega, 0); the caller is
    responsible for renormalizing q after integrating.
    """
    v, q, omega = x[3:6], x[6:10], x[10:13]
    accel, alpha = _accel_arrays(
        v, q, omega, allocate(n, params).thrust, wrench.force, wrench.torque_z, n, params
    )
    qv, qw = q[:3], q[3]
    qdot = 0.5 * np.concatenate([qw * omega + np.cross(qv, omega), [-qv @ omega]])
    return np.concatenate([v, accel, qdot, alpha])


def step_rk4(
    state: SimState,
    n: np.ndarray,
    wrench: Wrench,
    params: VehicleParams,
    substeps: int = 10,
) -> SimState:
    """Higher-order alternative to :func:`step`: RK4 at ts/substeps.

    Off the hot path; exists to create deliberate model mismatch between
    simulation ground truth and the Euler process model.
    """
    h = params.ts / substeps
    x = np.concatenate([state.p, state.v, state.q, state.omega])
    for _ in range(substeps):
        k1 = _flat_derivative(x, n, wrench, params)
        k2 = _flat_derivative(x + 0.5 * h * k1, n, wrench, params)
        k3 = _flat_derivative(x + 0.5 * h * k2, n, wrench, params)
        k4 = _flat_derivative(x + h * k3, n, wrench, params)
        x = x + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        x[6:10] /= np.linalg.norm(x[6:10])
    return SimState(p=x[0:3], v=x[3:6], q=x[6:10], omega=x[10:13])
