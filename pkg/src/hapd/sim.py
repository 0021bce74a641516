"""Nonlinear and discrete-LDI simulation, plus the uncertainty-contract checks."""

from dataclasses import dataclass, field

import numpy as np

from .atmosphere import air_density
from .errors import SimulationAbort, SingularityError, ValidationError
from .model import N_INPUTS, N_STATES, OUTPUT_NAMES, WindVector, derivative, output_selector
from .parameters import N_SURFACES

DEFAULT_STEP = 0.005
MAX_STEP = 0.05
SIGMA_CHECK_TOL = 1e-12


# -- actuators -----------------------------------------------------------------

def clamp_position(delta, limit):
    return np.clip(delta, -limit, limit)


def rate_limit(previous, command, rate, dt):
    """Move from ``previous`` towards ``command`` by at most ``rate * dt``."""
    return previous + np.clip(command - previous, -rate * dt, rate * dt)


@dataclass
class ActuatorState:
    """Commanded and effective surface deflections of the twelve actuators."""

    limit: float
    rate: float
    effective: np.ndarray
    commanded: np.ndarray = None

    @classmethod
    def at(cls, delta, params):
        d = clamp_position(np.asarray(delta, dtype=float), params.surface_deflection_limit)
        return cls(params.surface_deflection_limit, params.surface_rate_limit, d, d.copy())

    def update(self, command, dt):
        self.commanded = np.asarray(command, dtype=float)
        target = clamp_position(self.commanded, self.limit)
        self.effective = clamp_position(rate_limit(self.effective, target, self.rate, dt), self.limit)
        return self.effective


# -- control schedules and scenarios ------------------------------------------

@dataclass(frozen=True)
class ControlSchedule:
    """Piecewise-constant input: ``inputs[k]`` holds from ``times[k]`` until ``times[k+1]``."""

    times: tuple
    inputs: tuple

    def __post_init__(self):
        if len(self.times) != len(self.inputs) or not self.times:
            raise ValidationError("schedule needs one input per switching time")
        if any(b <= a for a, b in zip(self.times, self.times[1:])):
            raise ValidationError("schedule times must be strictly increasing")
        for u in self.inputs:
            if np.shape(u) != (N_INPUTS,):
                raise ValidationError(f"schedule inputs must have {N_INPUTS} entries")

    @classmethod
    def constant(cls, u):
        return cls((0.0,), (np.asarray(u, dtype=float),))

    def __call__(self, t):
        k = int(np.searchsorted(self.times, t + 1e-12, side="right")) - 1
        return np.asarray(self.inputs[max(k, 0)], dtype=float)


@dataclass(frozen=True)
class SimScenario:
    x0: np.ndarray
    schedule: ControlSchedule
    altitude: float
    duration: float
    step: float = DEFAULT_STEP
    wind: WindVector = field(default_factory=WindVector)

    def __post_init__(self):
        if not self.duration > 0:
            raise ValidationError("duration must be positive")
        if not 0 < self.step <= MAX_STEP:
            raise ValidationError(f"integrator step must lie in (0, {MAX_STEP}]")

    @property
    def n_steps(self):
        return int(round(self.duration / self.step))


@dataclass(frozen=True)
class Trajectory:
    """Samples of a nonlinear run: time, state, effective deflections, thrust."""

    t: np.ndarray
    x: np.ndarray
    delta: np.ndarray
    thrust: np.ndarray

    def outputs(self):
        return self.x @ output_selector().T

    def resample(self, times):
        x = np.column_stack([np.interp(times, self.t, self.x[:, j]) for j in range(N_STATES)])
        return x


def _check_singular(x):
    if not x[0] > 0 or abs(np.cos(x[2])) <= 1e-6 or abs(x[7]) >= np.pi / 2 or not np.all(np.isfinite(x)):
        raise SingularityError(f"singular state V={x[0]:.4g}, beta={x[2]:.4g}, theta={x[7]:.4g}")


def rk4_step(f, x, h):
    k1 = f(x)
    k2 = f(x + 0.5 * h * k1)
    k3 = f(x + 0.5 * h * k2)
    k4 = f(x + h * k3)
    return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def integrate_nonlinear(scenario, model):
    """Fixed-step RK4 integration with surface position and rate limiting.

    The schedule is sampled at the start of each step, passed through the
    actuator limits and held over the step. Thrust is clamped at zero.

    Raises
    ------
    SimulationAbort
        The state left the region where the polar equations are defined; the
        partial trajectory is attached to the exception.
    """
    rho = air_density(scenario.altitude)
    w = scenario.wind.as_vector()
    wind = w if np.any(w) else None
    h, n = scenario.step, scenario.n_steps
    act = ActuatorState.at(scenario.schedule(0.0)[:N_SURFACES], model.params)

    t = np.arange(n + 1) * h
    X = np.empty((n + 1, N_STATES))
    D = np.empty((n + 1, N_SURFACES))
    T = np.empty(n + 1)
    X[0] = scenario.x0
    x = np.asarray(scenario.x0, dtype=float)
    for k in range(n + 1):
        cmd = scenario.schedule(t[k])
        eff = act.effective if k == 0 else act.update(cmd[:N_SURFACES], h)
        D[k] = eff
        T[k] = max(cmd[N_SURFACES], 0.0)
        if k == n:
            break
        u = np.concatenate([eff, [T[k]]])
        try:
            _check_singular(x)
            x = rk4_step(lambda s: derivative(s, u, model, rho, wind), x, h)
            _check_singular(x)
        except SingularityError as exc:
            partial = Trajectory(t[:k + 1], X[:k + 1], D[:k + 1], T[:k + 1])
            raise SimulationAbort(f"simulation aborted: {exc}", float(t[k + 1]), partial) from exc
        X[k + 1] = x
    return Trajectory(t, X, D, T)


# -- uncertainty policies --------------------------------------------------------

def _random_orthogonal(rng, n):
    Q, R = np.linalg.qr(rng.standard_normal((n, n)))
    return Q * np.sign(np.diag(R))


@dataclass(frozen=True)
class DeltaPolicy:
    """How Delta(k) is produced while simulating the norm-bounded model.

    kinds: ``zero``; ``constant`` (fixed ``matrix``); ``random``
    (``U diag(s) V^T`` with random orthogonal factors and ``s ~ U[0, 1]``,
    reproducible from ``seed``); ``vertex`` (replays the ``matrix`` extracted
    for vertex ``index``). With ``validate`` every emitted Delta is checked
    against ``sigma_max <= 1``.
    """

    kind: str = "zero"
    matrix: np.ndarray = None
    seed: int = None
    index: int = None
    validate: bool = True

    @classmethod
    def zero(cls):
        return cls("zero")

    @classmethod
    def constant(cls, matrix, validate=True):
        return cls("constant", np.asarray(matrix, dtype=float), validate=validate)

    @classmethod
    def random_contraction(cls, seed):
        return cls("random", seed=int(seed))

    @classmethod
    def vertex_replay(cls, index, coverage):
        return cls("vertex", coverage.vertices[index].delta, index=int(index))

    def source(self, r):
        """Callable ``k -> Delta(k)`` of shape (r, r)."""
        if self.kind == "zero":
            Z = np.zeros((r, r))
            return lambda k: Z
        if self.kind in ("constant", "vertex"):
            if self.matrix.shape != (r, r):
                raise ValidationError(f"Delta must be {r}x{r}, got {self.matrix.shape}")
            return lambda k: self.matrix
        if self.kind == "random":
            rng = np.random.default_rng(self.seed)

            def draw(k):
                if r == 0:
                    return np.zeros((0, 0))
                U, V = _random_orthogonal(rng, r), _random_orthogonal(rng, r)
                return (U * rng.uniform(0.0, 1.0, r)) @ V.T
            return draw
        raise ValidationError(f"unknown Delta policy {self.kind!r}")


@dataclass(frozen=True)
class LdiTrajectory:
    x: np.ndarray
    u: np.ndarray
    w: np.ndarray
    z: np.ndarray
    Ts: float

    @property
    def t(self):
        return np.arange(len(self.x)) * self.Ts

    def outputs(self):
        return self.x @ output_selector().T


def simulate_discrete_ldi(nldi, policy, inputs, steps, x0=None):
    """Iterate the norm-bounded model in deviation coordinates.

    ``inputs`` is a (steps, 13) array, a single 13-vector held constant, or
    a callable ``k -> u``. Returns states for k = 0..steps and the channel
    signals ``z(k) = Cz x + Dz u``, ``w(k) = Delta(k) z(k)`` for k < steps.
    """
    r = nldi.rank
    x = np.zeros(N_STATES) if x0 is None else np.asarray(x0, dtype=float).copy()
    if callable(inputs):
        U = np.array([inputs(k) for k in range(steps)]).reshape(steps, N_INPUTS)
    else:
        U = np.asarray(inputs, dtype=float)
        U = np.broadcast_to(U, (steps, N_INPUTS)) if U.ndim == 1 else U
        if U.shape != (steps, N_INPUTS):
            raise ValidationError(f"inputs must have shape ({steps}, {N_INPUTS})")
    delta = policy.source(r)
    X = np.empty((steps + 1, N_STATES))
    W = np.empty((steps, r))
    Zs = np.empty((steps, r))
    X[0] = x
    for k in range(steps):
        u = U[k]
        z = nldi.Cz @ x + nldi.Dz @ u
        D = delta(k)
        if policy.validate and r and np.linalg.norm(D, 2) > 1.0 + SIGMA_CHECK_TOL:
            raise ValidationError(f"Delta({k}) has spectral norm {np.linalg.norm(D, 2):.6g} > 1")
        w = D @ z
        x = nldi.Phi0 @ x + nldi.G0 @ u + nldi.Bw @ w
        X[k + 1] = x
        W[k] = w
        Zs[k] = z
    return LdiTrajectory(X, np.array(U), W, Zs, nldi.Ts)


def iterate_linear(Phi, G, inputs, steps, x0=None):
    """Plain ``x(k+1) = Phi x + G u`` iteration."""
    x = np.zeros(Phi.shape[0]) if x0 is None else np.asarray(x0, dtype=float).copy()
    U = np.broadcast_to(np.asarray(inputs, dtype=float), (steps, G.shape[1]))
    X = np.empty((steps + 1, Phi.shape[0]))
    X[0] = x
    for k in range(steps):
        x = Phi @ x + G @ U[k]
        X[k + 1] = x
    return X


# -- checks -------------------------------------------------------------------------

@dataclass(frozen=True)
class L2Check:
    passed: bool
    min_slack: float
    first_violation: int = None

    def __bool__(self):
        return self.passed


def check_truncated_l2(w, z, rtol=1e-12):
    """Check ``sum_{j<=t} w'w <= sum_{j<=t} z'z`` at every ``t``.

    ``min_slack`` is the smallest value of the difference of running sums.
    A violation smaller than ``rtol`` times the running ``z`` energy is
    attributed to rounding.
    """
    w = np.asarray(w, dtype=float)
    z = np.asarray(z, dtype=float)
    if w.shape[0] != z.shape[0]:
        raise ValidationError("w and z trajectories must have equal length")
    ww = np.cumsum(np.sum((w**2).reshape(len(w), -1), axis=1)) if w.size else np.zeros(len(w))
    zz = np.cumsum(np.sum((z**2).reshape(len(z), -1), axis=1)) if z.size else np.zeros(len(z))
    slack = zz - ww
    bad = slack < -rtol * np.maximum(zz, np.finfo(float).tiny)
    first = int(np.flatnonzero(bad)[0]) if np.any(bad) else None
    min_slack = float(slack.min()) if len(slack) else 0.0
    return L2Check(first is None, min_slack, first)


@dataclass(frozen=True)
class ResponseComparison:
    names: tuple
    max_abs: np.ndarray
    rms: np.ndarray

    def format(self):
        lines = [f"{'output':>10} {'max_abs':>14} {'rms':>14}"]
        for n, m, r in zip(self.names, self.max_abs, self.rms):
            lines.append(f"{n:>10} {m:>14.6e} {r:>14.6e}")
        return "\n".join(lines)

    @property
    def worst(self):
        return float(np.max(self.max_abs))


def compare_responses(nonlinear, ldi, x_trim, C=None, names=OUTPUT_NAMES):
    """Per-output max and RMS deviation between a nonlinear run and an LDI run.

    The nonlinear trajectory is shifted to deviation coordinates about
    ``x_trim`` and resampled onto the LDI time base.
    """
    C = output_selector() if C is None else C
    t = ldi.t
    if nonlinear.t[-1] + 1e-9 < t[-1] or abs(nonlinear.t[-1] - t[-1]) > 0.5 * ldi.Ts:
        raise ValidationError(
            f"horizons differ: nonlinear ends at {nonlinear.t[-1]:.6g} s, LDI at {t[-1]:.6g} s")
    dx = nonlinear.resample(t) - np.asarray(x_trim)
    err = dx @ C.T - ldi.x @ C.T
    return ResponseComparison(tuple(names), np.max(np.abs(err), axis=0), np.sqrt(np.mean(err**2, axis=0)))
