"""Unscented Kalman filter estimating the external wrench on a hexacopter.

State (16): position, velocity, attitude-error vector, body rate, external
force (inertial frame) and external torque about body z.  The attitude
itself lives outside the vector state as a reference quaternion ``q_ref``;
the three error states parametrize deviations from it as Modified Rodrigues
parameters of a body-frame error:

    attitude(e) = q_ref * mrp_to_quat(e)

The same chart is used to build sigma-point quaternions, to recover error
vectors after propagation, to convert the measured quaternion into an error
measurement, and to fold the updated error back into ``q_ref`` — the update
is ``q_ref <- q_ref_predicted * mrp_to_quat(e_hat)``, after which ``e`` is
reset to zero for the next cycle.

Prediction propagates every sigma point through the vehicle model
(:func:`hexwrench.dynamics.step_arrays`) driven by the measured rotor
speeds; the wrench states follow either a random walk or an exponential
decay.  The measurement model is linear (pose + twist), so the update is a
standard Kalman step with a Joseph-form covariance update.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from .dynamics import SimState, VehicleParams, Wrench, step_arrays
from .errors import CholeskyFailure, NonPsdCovariance, SingularInnovation
from .quat import mrp_from_quat, mrp_to_quat, quat_inverse, quat_multiply, quat_normalize

__all__ = [
    "FilterParams",
    "FilterState",
    "Measurement",
    "WrenchUkf",
    "DEFAULT_P0_DIAG",
    "replay",
]

N_STATES = 16
N_MEAS = 12

# index blocks of the 16-state vector
_P = slice(0, 3)
_V = slice(3, 6)
_E = slice(6, 9)
_W = slice(9, 12)
_F = slice(12, 15)
_T = 15

DEFAULT_Q_DIAG = np.array([1e-6] * 3 + [1e-4] * 3 + [1e-8] * 3 + [1e-4] * 3 + [0.25] * 3 + [0.01])
DEFAULT_P0_DIAG = np.array([1e-4] * 3 + [1e-4] * 3 + [1e-6] * 3 + [1e-4] * 3 + [1.0] * 3 + [0.1])

_JITTER = 1e-9


@dataclass
class FilterParams:
    """Tuning knobs of the wrench filter.

    The wrench rows of ``q_diag`` dominate the speed/noise trade-off of the
    force estimate; the measurement sigmas should match the navigation
    source feeding :class:`Measurement`.

    Attributes:
        q_diag: diagonal of the 16x16 process noise covariance.
        sigma_p / sigma_v / sigma_e / sigma_omega: measurement noise std
            for position [m], velocity [m/s], attitude error (Rodrigues
            units, ~rad for small angles) and body rate [rad/s].
        mrp_a: Rodrigues parameter ``a`` in [0, 1] (scale ``f = 2 (a+1)``).
        alpha / beta / kappa: scaled-unscented-transform spread parameters.
        decay: wrench propagation model; "random_walk" keeps the wrench,
            "exponential" multiplies it by ``1 - ts / tau_bar`` each step.
        tau_bar: decay time constant [s]; required when decay="exponential"
            and must exceed the sample time.
        attitude_ref: which attitude the quaternion measurement is compared
            against: the "posterior" of the previous cycle (default) or the
            current predicted "prior".
        attitude_mean: predicted mean attitude: the propagated central
            sigma point ("central", default, more robust for large errors)
            or the eigenvector average of all propagated points ("average").
    """

    q_diag: np.ndarray = field(default_factory=lambda: DEFAULT_Q_DIAG.copy())
    sigma_p: float = 5e-3
    sigma_v: float = 0.02
    sigma_e: float = 0.01
    sigma_omega: float = 0.005
    mrp_a: float = 1.0
    alpha: float = 0.1
    beta: float = 2.0
    kappa: float = 0.0
    decay: Literal["random_walk", "exponential"] = "random_walk"
    tau_bar: float | None = None
    attitude_ref: Literal["posterior", "prior"] = "posterior"
    attitude_mean: Literal["central", "average"] = "central"

    def __post_init__(self):
        self.q_diag = np.asarray(self.q_diag, dtype=float).reshape(N_STATES)
        if np.any(self.q_diag < 0.0):
            raise ValueError("process noise diagonal must be >= 0")
        for name in ("sigma_p", "sigma_v", "sigma_e", "sigma_omega"):
            if not getattr(self, name) > 0.0:
                raise ValueError(f"FilterParams.{name} must be > 0")
        if not 0.0 <= self.mrp_a <= 1.0:
            raise ValueError("mrp_a must lie in [0, 1]")
        if self.decay not in ("random_walk", "exponential"):
            raise ValueError(f"unknown decay model {self.decay!r}")
        if self.attitude_ref not in ("posterior", "prior"):
            raise ValueError(f"unknown attitude_ref {self.attitude_ref!r}")
        if self.attitude_mean not in ("central", "average"):
            raise ValueError(f"unknown attitude_mean {self.attitude_mean!r}")

    def measurement_cov(self) -> np.ndarray:
        """12x12 diagonal measurement covariance."""
        return np.diag(
            [self.sigma_p**2] * 3
            + [self.sigma_v**2] * 3
            + [self.sigma_e**2] * 3
            + [self.sigma_omega**2] * 3
        )

    def process_cov(self) -> np.ndarray:
        return np.diag(self.q_diag)


@dataclass
class Measurement:
    """Pose + twist sample from the navigation source."""

    p: np.ndarray
    v: np.ndarray
    q: np.ndarray
    omega: np.ndarray

    def __post_init__(self):
        self.p = np.asarray(self.p, dtype=float).reshape(3)
        self.v = np.asarray(self.v, dtype=float).reshape(3)
        self.q = quat_normalize(np.asarray(self.q, dtype=float).reshape(4))
        self.omega = np.asarray(self.omega, dtype=float).reshape(3)


@dataclass
class FilterState:
    """Vector state + reference attitude + covariance.

    ``x[6:9]`` (the attitude error) is zero at the start of every cycle;
    ``q_prev`` keeps the posterior attitude of the previous cycle for the
    quaternion measurement comparison.
    """

    x: np.ndarray
    q_ref: np.ndarray
    q_prev: np.ndarray
    P: np.ndarray

    def copy(self) -> "FilterState":
        return FilterState(self.x.copy(), self.q_ref.copy(), self.q_prev.copy(), self.P.copy())

    @property
    def wrench(self) -> Wrench:
        return Wrench(force=self.x[_F].copy(), torque_z=float(self.x[_T]))

    def state_estimate(self) -> SimState:
        """Best current pose/twist estimate (attitude = reference quaternion)."""
        return SimState(p=self.x[_P].copy(), v=self.x[_V].copy(),
                        q=self.q_ref.copy(), omega=self.x[_W].copy())


def _check_psd(P: np.ndarray, what: str) -> None:
    if P.shape != (N_STATES, N_STATES):
        raise NonPsdCovariance(f"{what} must be {N_STATES}x{N_STATES}")
    if np.max(np.abs(P - P.T)) > 1e-10:
        raise NonPsdCovariance(f"{what} is not symmetric")
    if np.min(np.linalg.eigvalsh(P)) < -1e-10:
        raise NonPsdCovariance(f"{what} has negative eigenvalues")


class WrenchUkf:
    """Stateful wrench estimator; call :meth:`predict` then :meth:`update`
    once per sample, in that order (multiple predicts between updates are
    allowed when measurements drop out)."""

    def __init__(
        self,
        params: FilterParams,
        vehicle: VehicleParams,
        initial: SimState,
        p0: np.ndarray | None = None,
    ):
        if params.decay == "exponential":
            if params.tau_bar is None or not params.tau_bar > vehicle.ts:
                raise ValueError("exponential decay requires tau_bar > ts")
        p0 = np.diag(DEFAULT_P0_DIAG) if p0 is None else np.asarray(p0, dtype=float)
        _check_psd(p0, "initial covariance")
        self.params = params
        self.vehicle = vehicle
        x = np.zeros(N_STATES)
        x[_P] = initial.p
        x[_V] = initial.v
        x[_W] = initial.omega
        q0 = quat_normalize(initial.q)
        self.state = FilterState(x=x, q_ref=q0, q_prev=q0.copy(), P=p0.copy())

        n = N_STATES
        lam = params.alpha**2 * (n + params.kappa) - n
        self._scale = np.sqrt(n + lam)
        self._wm = np.full(2 * n + 1, 1.0 / (2.0 * (n + lam)))
        self._wc = self._wm.copy()
        self._wm[0] = lam / (n + lam)
        self._wc[0] = lam / (n + lam) + 1.0 - params.alpha**2 + params.beta
        self._Q = params.process_cov()
        self._R = params.measurement_cov()

    # -- sigma points --------------------------------------------------------

    def _sqrt_cov(self) -> np.ndarray:
        P = self.state.P
        try:
            return np.linalg.cholesky(P)
        except np.linalg.LinAlgError:
            if not P.any():
                return np.zeros_like(P)  # exactly collapsed: all points at mean
        try:
            return np.linalg.cholesky(P + _JITTER * np.eye(N_STATES))
        except np.linalg.LinAlgError as exc:
            raise CholeskyFailure("covariance is not factorizable even with jitter") from exc

    def sigma_points(self) -> np.ndarray:
        """(33, 16) symmetric sigma set around the current mean."""
        L = self._scale * self._sqrt_cov()
        x = self.state.x
        pts = np.empty((2 * N_STATES + 1, N_STATES))
        pts[0] = x
        pts[1 : N_STATES + 1] = x + L.T
        pts[N_STATES + 1 :] = x - L.T
        return pts

    # -- prediction ----------------------------------------------------------

    def predict(self, rotor_speeds: np.ndarray) -> FilterState:
        """Propagate mean and covariance through one model step."""
        par = self.params
        st = self.state
        pts = self.sigma_points()

        dq = mrp_to_quat(pts[:, _E], par.mrp_a)
        q_sig = quat_multiply(st.q_ref, dq)
        force = pts[:, _F]
        tau = pts[:, _T]
        p, v, q_prop, omega = step_arrays(
            pts[:, _P], pts[:, _V], q_sig, pts[:, _W], force, tau, rotor_speeds, self.vehicle
        )
        if par.decay == "exponential":
            k = 1.0 - self.vehicle.ts / par.tau_bar
            force = force * k
            tau = tau * k

        if par.attitude_mean == "central":
            q_minus = q_prop[0]
        else:
            q_minus = self._average_quat(q_prop)
        err = mrp_from_quat(quat_multiply(quat_inverse(q_minus), q_prop), par.mrp_a)

        prop = np.empty_like(pts)
        prop[:, _P] = p
        prop[:, _V] = v
        prop[:, _E] = err
        prop[:, _W] = omega
        prop[:, _F] = force
        prop[:, _T] = tau

        mean = self._wm @ prop
        dev = prop - mean
        cov = (dev * self._wc[:, None]).T @ dev + self._Q
        st.x = mean
        st.P = 0.5 * (cov + cov.T)
        st.q_ref = q_minus
        return st

    def _average_quat(self, quats: np.ndarray) -> np.ndarray:
        # eigenvector average; weighted outer-product matrix stays symmetric
        # even with the negative central weight of the scaled transform
        m = (quats * self._wm[:, None]).T @ quats
        vals, vecs = np.linalg.eigh(m)
        avg = vecs[:, np.argmax(vals)]
        if np.dot(avg, quats[0]) < 0.0:
            avg = -avg
        return quat_normalize(avg, canonical=False)

    # -- update --------------------------------------------------------------

    def update(self, z: Measurement) -> FilterState:
        """Fuse one pose/twist measurement and finalize the attitude."""
        par = self.params
        st = self.state
        ref = st.q_prev if par.attitude_ref == "posterior" else st.q_ref
        e_m = mrp_from_quat(quat_multiply(quat_inverse(ref), z.q), par.mrp_a)
        z_vec = np.concatenate([z.p, z.v, e_m, z.omega])

        s = st.P[:N_MEAS, :N_MEAS] + self._R
        try:
            gain = np.linalg.solve(s, st.P[:N_MEAS, :]).T  # K = P H' S^-1
        except np.linalg.LinAlgError as exc:
            raise SingularInnovation("innovation covariance not invertible") from exc
        if not np.all(np.isfinite(gain)):
            raise SingularInnovation("innovation covariance not invertible")

        st.x = st.x + gain @ (z_vec - st.x[:N_MEAS])
        a = np.eye(N_STATES)
        a[:, :N_MEAS] -= gain
        cov = a @ st.P @ a.T + gain @ self._R @ gain.T  # Joseph form
        st.P = 0.5 * (cov + cov.T)

        # fold the estimated error into the reference attitude, reset error
        dq = mrp_to_quat(st.x[_E], par.mrp_a)
        q_plus = quat_multiply(st.q_ref, dq)
        st.x[_E] = 0.0
        st.q_ref = q_plus
        st.q_prev = q_plus.copy()
        return st

    def estimate_wrench(self) -> Wrench:
        """Latest external force (inertial) and torque about body z."""
        return self.state.wrench


def replay(
    times: np.ndarray,
    measurements: list[Measurement],
    rotor_speeds: np.ndarray,
    ukf: WrenchUkf,
) -> np.ndarray:
    """Run the filter over a recorded measurement/rotor-speed sequence.

    Protocol (identical to the closed-loop engine): the first sample is an
    update only; every later sample first predicts with the rotor speeds of
    the previous row, then updates.  Returns one row per sample:
    ``[t, fx, fy, fz, tau_z, diag(P) x 16]``.
    """
    rotor_speeds = np.asarray(rotor_speeds, dtype=float)
    out = np.empty((len(times), 5 + N_STATES))
    for k, (t, z) in enumerate(zip(times, measurements)):
        if k > 0:
            ukf.predict(rotor_speeds[k - 1])
        ukf.update(z)
        w = ukf.estimate_wrench()
        out[k, 0] = t
        out[k, 1:4] = w.force
        out[k, 4] = w.torque_z
        out[k, 5:] = np.diag(ukf.state.P)
    return out
