"""Nonlinear flexible-aircraft dynamics in polar (V, alpha, beta) form.

State ordering::

    x = [V, alpha, beta, p, q, r, phi, theta, eta_s, etadot_s, eta_a, etadot_a]

Input ordering::

    u = [delta_1 .. delta_12, T]

Functions here accept either plain arrays or the dataclasses below; they are
pure and allocate only small arrays, so they can be called from many threads.
"""

from dataclasses import astuple, dataclass

import numpy as np

from .atmosphere import air_density
from .errors import SingularityError
from .parameters import N_SURFACES

STATE_NAMES = ("V", "alpha", "beta", "p", "q", "r", "phi", "theta",
               "eta_s", "etadot_s", "eta_a", "etadot_a")
STATE_UNITS = ("m/s", "rad", "rad", "rad/s", "rad/s", "rad/s", "rad", "rad",
               "-", "1/s", "-", "1/s")
OUTPUT_NAMES = STATE_NAMES[:8]
N_STATES = 12
N_INPUTS = N_SURFACES + 1
SINGULAR_EPS = 1e-6

# Mirror of state and input vectors (left/right reflection).
STATE_MIRROR_SIGN = np.array([1, 1, -1, -1, 1, -1, -1, 1, 1, 1, -1, -1], dtype=float)
INPUT_MIRROR_PERM = np.array([1, 0, 3, 2, 5, 4, 7, 6, 9, 8, 10, 11, 12])
INPUT_MIRROR_SIGN = np.array([1] * 10 + [-1, -1, 1], dtype=float)


@dataclass(frozen=True)
class FlightState:
    V: float
    alpha: float = 0.0
    beta: float = 0.0
    p: float = 0.0
    q: float = 0.0
    r: float = 0.0
    phi: float = 0.0
    theta: float = 0.0
    eta_s: float = 0.0
    etadot_s: float = 0.0
    eta_a: float = 0.0
    etadot_a: float = 0.0

    def as_vector(self):
        return np.array(astuple(self), dtype=float)

    @classmethod
    def from_vector(cls, x):
        x = np.asarray(x, dtype=float)
        if x.shape != (N_STATES,):
            raise ValueError(f"state vector must have {N_STATES} entries, got {x.shape}")
        return cls(*map(float, x))


@dataclass(frozen=True)
class ControlInput:
    delta: tuple = (0.0,) * N_SURFACES
    thrust: float = 0.0

    def __post_init__(self):
        if len(self.delta) != N_SURFACES:
            raise ValueError(f"expected {N_SURFACES} surface deflections")
        object.__setattr__(self, "delta", tuple(float(d) for d in self.delta))

    def as_vector(self):
        return np.array(self.delta + (self.thrust,), dtype=float)

    @classmethod
    def from_vector(cls, u):
        u = np.asarray(u, dtype=float)
        if u.shape != (N_INPUTS,):
            raise ValueError(f"input vector must have {N_INPUTS} entries, got {u.shape}")
        return cls(tuple(u[:N_SURFACES]), float(u[N_SURFACES]))

    def within_limits(self, deflection_limit):
        return max(abs(d) for d in self.delta) <= deflection_limit and self.thrust >= 0.0


@dataclass(frozen=True)
class WindVector:
    u_w: float = 0.0
    v_w: float = 0.0
    w_w: float = 0.0

    def as_vector(self):
        return np.array([self.u_w, self.v_w, self.w_w], dtype=float)


@dataclass(frozen=True)
class ForcesAndMoments:
    lift: float
    drag: float
    side: float
    roll: float
    pitch: float
    yaw: float
    Q_s: float
    Q_a: float

    def as_vector(self):
        return np.array(astuple(self), dtype=float)


def _vec(obj, n=None):
    if obj is None:
        return np.zeros(n)
    if hasattr(obj, "as_vector"):
        return obj.as_vector()
    return np.asarray(obj, dtype=float)


def airdata(V_B, V_W=None):
    """True airspeed, angle of attack and sideslip from body and wind velocities.

    Sideslip is normalised by the inertial speed ``|V_B|`` rather than by the
    airspeed; the two agree only in still air.
    """
    V_B = _vec(V_B)
    V_W = _vec(V_W, 3)
    rel = V_B - V_W
    if rel[0] == 0.0:
        raise SingularityError("angle of attack undefined: u_B - u_W = 0")
    V = np.linalg.norm(V_B)
    if V == 0.0 or abs(rel[1] / V) > 1.0:
        raise SingularityError("sideslip undefined: |v_B - v_W| > |V_B|")
    return float(np.linalg.norm(rel)), float(np.arctan(rel[2] / rel[0])), float(np.arcsin(rel[1] / V))


def body_velocity(V, alpha, beta, wind=None):
    """Invert :func:`airdata`: body velocity with inertial speed ``V`` and the given angles."""
    u_w, v_w, w_w = _vec(wind, 3)
    v_b = v_w + V * np.sin(beta)
    t = np.tan(alpha)
    if u_w == 0.0 and v_w == 0.0 and w_w == 0.0:
        a = V * np.cos(beta) * np.cos(alpha)
    else:
        # (u_w + a)^2 + (w_w + a t)^2 = V^2 - v_b^2, forward-flight root a > 0
        qa = 1.0 + t * t
        qb = 2.0 * (u_w + w_w * t)
        qc = u_w * u_w + w_w * w_w - (V * V - v_b * v_b)
        disc = qb * qb - 4.0 * qa * qc
        if disc < 0.0:
            raise SingularityError("no body velocity matches (V, alpha, beta) under this wind")
        a = (-qb + np.sqrt(disc)) / (2.0 * qa)
    return np.array([u_w + a, v_b, w_w + a * t])


def true_airspeed(V, alpha, beta, wind=None):
    w = _vec(wind, 3)
    if not np.any(w):
        return V
    return float(np.linalg.norm(body_velocity(V, alpha, beta, w) - w))


def gravity_components(alpha, beta, phi, theta, g):
    """Wind-axis projection of gravity, returned as (g1, g2, g3)."""
    sa, ca = np.sin(alpha), np.cos(alpha)
    sb, cb = np.sin(beta), np.cos(beta)
    sf, cf = np.sin(phi), np.cos(phi)
    st, ct = np.sin(theta), np.cos(theta)
    g1 = g * (-ca * cb * st + sb * sf * ct + sa * cb * cf * ct)
    g2 = g * (ca * sb * st + cb * sf * ct - sa * sb * cf * ct)
    g3 = g * (sa * st + ca * cf * ct)
    return g1, g2, g3


def regressor(x, u, V_tas, coeffs, params):
    """Affine regressor ``[1, alpha, beta, p, q, r, delta, eta_s, eta_a, etadot_s, etadot_a]``."""
    x = np.asarray(x, dtype=float)
    u = np.asarray(u, dtype=float)
    z = np.empty(22)
    z[0] = 1.0
    z[1:6] = x[1:6]
    if coeffs.rate_normalization == "normalized":
        half = 0.5 / V_tas
        z[3] *= params.wing_span * half
        z[4] *= params.mean_chord * half
        z[5] *= params.wing_span * half
    z[6:18] = u[:N_SURFACES]
    z[18] = x[8]
    z[19] = x[10]
    z[20] = x[9]
    z[21] = x[11]
    return z


def aero_vector(x, u, rho, V_tas, coeffs, params):
    """Aerodynamic loads as an 8-vector ``[L, D, Y, Lbar, Mbar, Nbar, Q_s, Q_a]``."""
    qS = 0.5 * rho * V_tas * V_tas * params.wing_area
    b, c = params.wing_span, params.mean_chord
    scale = qS * np.array([1.0, 1.0, 1.0, b, c, b, 1.0, 1.0])
    return scale * (coeffs.matrix @ regressor(x, u, V_tas, coeffs, params))


def aero_forces_moments(state, control, rho, coeffs, params, wind=None):
    """Aerodynamic forces, moments and generalized forces at one flight condition."""
    x = _vec(state)
    u = _vec(control)
    V_tas = true_airspeed(x[0], x[1], x[2], wind)
    return ForcesAndMoments(*map(float, aero_vector(x, u, rho, V_tas, coeffs, params)))


def _check_state(x):
    if not x[0] > 0.0:
        raise SingularityError(f"speed must be positive, got V = {x[0]}")
    if abs(np.cos(x[2])) <= SINGULAR_EPS:
        raise SingularityError(f"|cos(beta)| <= {SINGULAR_EPS}")
    if abs(np.cos(x[7])) <= SINGULAR_EPS:
        raise SingularityError(f"|cos(theta)| <= {SINGULAR_EPS}")
    if not np.all(np.isfinite(x)):
        raise SingularityError("non-finite state")


def derivative(x, u, model, rho, wind=None):
    """State derivative with the air density supplied directly.

    This is the inner kernel shared by trim, linearisation and integration.
    """
    x = np.asarray(x, dtype=float)
    u = np.asarray(u, dtype=float)
    _check_state(x)
    P = model.params
    M, g = P.mass, P.gravity
    V, alpha, beta, p, q, r, phi, theta = x[:8]
    T = u[N_SURFACES]
    V_tas = true_airspeed(V, alpha, beta, wind)
    Lift, Drag, Y, Lbar, Mbar, Nbar, Q_s, Q_a = aero_vector(x, u, rho, V_tas, model.coeffs, P)
    g1, g2, g3 = gravity_components(alpha, beta, phi, theta, g)
    sa, ca = np.sin(alpha), np.cos(alpha)
    sb, cb = np.sin(beta), np.cos(beta)

    dx = np.empty(N_STATES)
    dx[0] = (T * ca * cb - Drag + M * g1) / M
    dx[2] = (-T * ca * sb + Y - M * V * r + M * g2) / (V * M)
    dx[1] = (-T * sa - Lift + M * V * q + M * g3) / (M * V * cb)

    rhs_roll = Lbar + q * r * (P.Iy - P.Iz) + p * q * P.Ixz
    rhs_yaw = Nbar + p * q * (P.Ix - P.Iy) - q * r * P.Ixz
    det = P.Ix * P.Iz - P.Ixz * P.Ixz
    dx[3] = (P.Iz * rhs_roll + P.Ixz * rhs_yaw) / det
    dx[5] = (P.Ixz * rhs_roll + P.Ix * rhs_yaw) / det
    dx[4] = (Mbar + r * p * (P.Iz - P.Ix) + (r * r - p * p) * P.Ixz) / P.Iy

    tt = np.tan(theta)
    sf, cf = np.sin(phi), np.cos(phi)
    dx[6] = p + q * tt * sf + r * tt * cf
    dx[7] = q * cf - r * sf

    mode_s, mode_a = model.modes
    dx[8] = x[9]
    dx[9] = mode_s.acceleration(x[8], x[9], Q_s)
    dx[10] = x[11]
    dx[11] = mode_a.acceleration(x[10], x[11], Q_a)
    return dx


def state_derivative(state, control, model, altitude, wind=None):
    """Time derivative of the 12-state flexible-aircraft model.

    Parameters
    ----------
    state : FlightState or array_like, shape (12,)
    control : ControlInput or array_like, shape (13,)
    model : ModelData
        Aircraft parameters, the two elastic modes and the coefficient table.
    altitude : float
        Altitude in metres; sets the ISA density.
    wind : WindVector or array_like, optional
        Constant body-axis wind, zero by default.

    Raises
    ------
    SingularityError
        If V <= 0, |cos(beta)| <= 1e-6 or |cos(theta)| <= 1e-6.
    """
    return derivative(_vec(state), _vec(control), model, air_density(altitude), _wind(wind))


def _wind(wind):
    if wind is None:
        return None
    w = _vec(wind, 3)
    return w if np.any(w) else None


def mirror_state(x):
    return STATE_MIRROR_SIGN * np.asarray(x, dtype=float)


def mirror_input(u):
    return INPUT_MIRROR_SIGN * np.asarray(u, dtype=float)[INPUT_MIRROR_PERM]


def output_selector():
    """8x12 matrix picking ``[V, alpha, beta, p, q, r, phi, theta]`` out of the state."""
    return np.eye(8, N_STATES)
