"""Symmetric level-flight trim and finite-difference linearisation."""

import warnings
from dataclasses import dataclass, field

import numpy as np

from .atmosphere import air_density
from .errors import InfeasibleTrimError, LinearizationError, SingularityError, TrimError
from .model import (N_INPUTS, N_STATES, STATE_NAMES, ControlInput, FlightState, WindVector,
                    derivative, true_airspeed)
from .parameters import ELEVATORS, N_SURFACES

SPEED_RANGE = (17.0, 23.0)
ALTITUDE_RANGE = (300.0, 700.0)

TRIM_TOL = 1e-8
MAX_ITER = 100
MAX_HALVINGS = 30

# Residual rows used by the longitudinal trim: Vdot, alphadot, qdot, etaddot_s.
_TRIM_ROWS = [0, 1, 4, 9]


@dataclass(frozen=True)
class TrimSpec:
    """Target condition for symmetric straight-and-level trim."""

    V_tas: float
    altitude: float
    wind: WindVector = field(default_factory=WindVector)

    def in_envelope(self):
        return (SPEED_RANGE[0] <= self.V_tas <= SPEED_RANGE[1]
                and ALTITUDE_RANGE[0] <= self.altitude <= ALTITUDE_RANGE[1])


@dataclass(frozen=True)
class TrimResult:
    x_trim: np.ndarray
    u_trim: np.ndarray
    residual_norm: float
    spec: TrimSpec
    iterations: int = 0

    @property
    def state(self):
        return FlightState.from_vector(self.x_trim)

    @property
    def control(self):
        return ControlInput.from_vector(self.u_trim)

    @property
    def elevator(self):
        return float(self.u_trim[0])

    @property
    def thrust(self):
        return float(self.u_trim[N_SURFACES])


@dataclass(frozen=True)
class LinearModel:
    """Continuous-time Jacobians ``dx/dt ~ A dx + B du`` about a trim point."""

    A: np.ndarray
    B: np.ndarray
    x_trim: np.ndarray
    u_trim: np.ndarray
    V_tas: float
    altitude: float

    def __post_init__(self):
        if self.A.shape != (N_STATES, N_STATES) or self.B.shape != (N_STATES, N_INPUTS):
            raise ValueError("A must be 12x12 and B 12x13")

    def eigenvalues(self):
        return np.linalg.eigvals(self.A)


def _assemble(z, V):
    """Map trim unknowns (alpha, elevator, thrust, eta_s) to full state and input."""
    alpha, elev, thrust, eta_s = z
    x = np.zeros(N_STATES)
    x[0] = V
    x[1] = alpha
    x[7] = alpha  # level flight: theta = alpha
    x[8] = eta_s
    u = np.zeros(N_INPUTS)
    u[ELEVATORS] = elev
    u[N_SURFACES] = thrust
    return x, u


def _speed_for_tas(V_tas, alpha, wind):
    """Inertial speed giving the requested true airspeed (fixed-point on the wind offset)."""
    if wind is None:
        return V_tas
    V = V_tas
    for _ in range(50):
        V_new = V + (V_tas - true_airspeed(V, alpha, 0.0, wind))
        if abs(V_new - V) < 1e-13 * V_tas:
            return V_new
        V = V_new
    return V


def _initial_guess(V_tas, rho, model):
    P, K = model.params, model.coeffs.matrix
    qS = 0.5 * rho * V_tas**2 * P.wing_area
    cl_needed = P.mass * P.gravity / qS
    alpha = (cl_needed - K[0, 0]) / K[0, 1] if K[0, 1] else 0.0
    thrust = max(qS * (K[1, 0] + K[1, 1] * alpha), 0.0)
    return np.array([alpha, 0.0, thrust, 0.0])


def trim(spec, model, thrust=None, x0=None):
    """Trim the aircraft for symmetric straight-and-level flight.

    Solves ``Vdot = alphadot = qdot = etaddot_s = 0`` for angle of attack
    (with theta = alpha), a common deflection of all six elevators, collective
    thrust and the symmetric elastic coordinate, by damped Newton iteration
    with a backtracking line search. All lateral states and controls are zero.

    Parameters
    ----------
    spec : TrimSpec
    model : ModelData
    thrust : float, optional
        Hold thrust at this value instead of solving for it. The remaining
        unknowns are then found in the least-squares sense and the trim fails
        unless the residual still vanishes.
    x0 : array_like, optional
        Starting values for (alpha, elevator, thrust, eta_s).

    Raises
    ------
    TrimError
        No convergence below 1e-8 within 100 iterations.
    InfeasibleTrimError
        Converged with a deflection beyond the surface limit or negative thrust.
    """
    if not spec.in_envelope():
        warnings.warn(
            f"trim condition V={spec.V_tas} m/s, h={spec.altitude} m lies outside the "
            f"design envelope {SPEED_RANGE} m/s x {ALTITUDE_RANGE} m", stacklevel=2)
    rho = air_density(spec.altitude)
    wind = spec.wind.as_vector() if np.any(spec.wind.as_vector()) else None
    free = [0, 1, 3] if thrust is not None else [0, 1, 2, 3]
    z = np.asarray(x0, dtype=float).copy() if x0 is not None else _initial_guess(spec.V_tas, rho, model)
    if thrust is not None:
        z[2] = thrust

    def full_residual(zz):
        V = _speed_for_tas(spec.V_tas, zz[0], wind)
        x, u = _assemble(zz, V)
        return derivative(x, u, model, rho, wind)

    def residual(zz):
        return full_residual(zz)[_TRIM_ROWS]

    def norm_of(zz):
        try:
            return np.max(np.abs(full_residual(zz)))
        except SingularityError:
            return np.inf

    r = residual(z)
    res = norm_of(z)
    it = 0
    for it in range(1, MAX_ITER + 1):
        if res < TRIM_TOL:
            break
        J = np.empty((len(_TRIM_ROWS), len(free)))
        for k, j in enumerate(free):
            h = 1e-7 * max(1.0, abs(z[j]))
            zp, zm = z.copy(), z.copy()
            zp[j] += h
            zm[j] -= h
            J[:, k] = (residual(zp) - residual(zm)) / (2.0 * h)
        step = np.linalg.lstsq(J, -r, rcond=None)[0]
        lam = 1.0
        for _ in range(MAX_HALVINGS + 1):
            z_new = z.copy()
            z_new[free] += lam * step
            res_new = norm_of(z_new)
            if res_new < res:
                break
            lam *= 0.5
        else:
            break
        z, res = z_new, res_new
        r = residual(z)
    condition = (spec.V_tas, spec.altitude)
    if not res < TRIM_TOL:
        raise TrimError(
            f"trim at V={spec.V_tas} m/s, h={spec.altitude} m did not converge; "
            f"final residual {res:.3e}", residual=res, condition=condition)

    V = _speed_for_tas(spec.V_tas, z[0], wind)
    x, u = _assemble(z, V)
    limit = model.params.surface_deflection_limit
    if np.max(np.abs(u[:N_SURFACES])) > limit or u[N_SURFACES] < 0.0:
        raise InfeasibleTrimError(
            f"trim at V={spec.V_tas} m/s, h={spec.altitude} m needs elevator "
            f"{np.degrees(u[0]):.2f} deg and thrust {u[N_SURFACES]:.2f} N, outside limits",
            residual=res, condition=condition)
    x.setflags(write=False)
    u.setflags(write=False)
    return TrimResult(x, u, float(res), spec, it)


FD_REL_STEP = 1e-6
RICHARDSON_RTOL = 1e-5
STRUCTURAL_ZERO = 1e-9


def _central(f, v, j, h):
    vp, vm = v.copy(), v.copy()
    vp[j] += h
    vm[j] -= h
    return (f(vp) - f(vm)) / (2.0 * h)


def _jacobian(f, v, names):
    """Central differences with one Richardson halving per column.

    The step starts at max(1e-6, 1e-6*|v_j|) and grows by 10x (at most twice)
    for columns whose two estimates disagree by more than 1e-5 relative.
    """
    n_out = len(f(v))
    J = np.empty((n_out, len(v)))
    for j in range(len(v)):
        h0 = max(FD_REL_STEP, FD_REL_STEP * abs(v[j]))
        for grow in (1.0, 10.0, 100.0):
            h = h0 * grow
            d1 = _central(f, v, j, h)
            d2 = _central(f, v, j, 0.5 * h)
            bad = ~np.isfinite(d1) | ~np.isfinite(d2)
            if np.any(bad):
                i = int(np.flatnonzero(bad)[0])
                raise LinearizationError(f"non-finite derivative d({STATE_NAMES[i]})/d({names[j]})")
            ok = np.abs(d1 - d2) <= RICHARDSON_RTOL * np.abs(d2) + STRUCTURAL_ZERO
            if np.all(ok):
                break
        else:
            i = int(np.flatnonzero(~ok)[0])
            warnings.warn(f"Richardson estimates of d({STATE_NAMES[i]})/d({names[j]}) disagree "
                          f"({d1[i]:.6e} vs {d2[i]:.6e})", stacklevel=3)
        col = (4.0 * d2 - d1) / 3.0
        col[np.abs(col) < STRUCTURAL_ZERO] = 0.0
        J[:, j] = col
    return J


INPUT_NAMES = tuple(f"delta[{i}]" for i in range(1, N_SURFACES + 1)) + ("T",)


def linearize(x_trim, u_trim, model, altitude, wind=None, V_tas=None):
    """Jacobians of the state derivative about ``(x_trim, u_trim)``.

    Raises
    ------
    LinearizationError
        A finite-difference quotient is not finite.
    """
    x_trim = np.asarray(x_trim, dtype=float)
    u_trim = np.asarray(u_trim, dtype=float)
    rho = air_density(altitude)
    w = None if wind is None or not np.any(np.asarray(wind, dtype=float)) else np.asarray(wind, dtype=float)
    try:
        res = np.max(np.abs(derivative(x_trim, u_trim, model, rho, w)))
    except SingularityError as exc:
        raise LinearizationError(f"cannot linearize at a singular state: {exc}") from exc
    if res > 1e-6:
        raise LinearizationError(f"not a trim point: derivative residual {res:.3e} > 1e-6")
    A = _jacobian(lambda x: derivative(x, u_trim, model, rho, w), x_trim, STATE_NAMES)
    B = _jacobian(lambda u: derivative(x_trim, u, model, rho, w), u_trim, INPUT_NAMES)
    if V_tas is None:
        V_tas = true_airspeed(x_trim[0], x_trim[1], x_trim[2], w)
    return LinearModel(A, B, x_trim, u_trim, float(V_tas), float(altitude))


def linearize_trim(result, model):
    w = result.spec.wind.as_vector()
    return linearize(result.x_trim, result.u_trim, model, result.spec.altitude, w, result.spec.V_tas)
