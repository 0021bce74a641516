"""Polytopic and norm-bounded linear differential inclusions.

The polytopic model (PLDI) keeps every discretised vertex model. The
norm-bounded model (NLDI) is::

    x(k+1) = Phi0 x(k) + G0 u(k) + Bw w(k)
    z(k)   = Cz x(k) + Dz u(k)
    w(k)   = Delta(k) z(k),          ||Delta(k)||_2 <= 1

It is fitted by an explicit SVD factorisation of the vertex residuals about
the mean model and then certified vertex by vertex.
"""

from dataclasses import dataclass, field

import numpy as np

from .discrete import DEFAULT_TS, discretize
from .errors import FitError, HapdError, ValidationError
from .model import N_INPUTS, N_STATES, output_selector
from .parameters import N_SURFACES
from .trim import ALTITUDE_RANGE, SPEED_RANGE, TrimSpec, linearize_trim, trim

MAX_CHANNELS = 12
RANK_TOL = 1e-8
COVERAGE_SIGMA_TOL = 1e-6
COVERAGE_RESIDUAL_TOL = 1e-6


@dataclass(frozen=True)
class EnvelopeGrid:
    speeds: tuple
    altitudes: tuple

    def __post_init__(self):
        for v in self.speeds:
            if not SPEED_RANGE[0] <= v <= SPEED_RANGE[1]:
                raise ValidationError(f"grid speed {v} outside {SPEED_RANGE}")
        for h in self.altitudes:
            if not ALTITUDE_RANGE[0] <= h <= ALTITUDE_RANGE[1]:
                raise ValidationError(f"grid altitude {h} outside {ALTITUDE_RANGE}")

    @property
    def points(self):
        """Flight conditions ``(V_tas, altitude)``, speed-major order."""
        return [(v, h) for v in self.speeds for h in self.altitudes]

    def __len__(self):
        return len(self.speeds) * len(self.altitudes)


def build_grid(speed_bounds=SPEED_RANGE, n_speeds=6, altitude_bounds=ALTITUDE_RANGE, n_altitudes=5):
    """Uniform speed x altitude grid including both ends of each axis."""
    if n_speeds < 2 or n_altitudes < 2:
        raise ValidationError("each grid axis needs at least 2 points")
    (v0, v1), (h0, h1) = speed_bounds, altitude_bounds
    if not (v1 > v0 and h1 > h0):
        raise ValidationError(f"degenerate grid bounds {speed_bounds} x {altitude_bounds}")
    speeds = tuple(float(v) for v in np.linspace(v0, v1, n_speeds))
    altitudes = tuple(float(h) for h in np.linspace(h0, h1, n_altitudes))
    return EnvelopeGrid(speeds, altitudes)


@dataclass(frozen=True)
class PldiModel:
    """Vertex family ``(Phi_i, G_i)`` sharing output map and sample time."""

    vertices: tuple
    trims: tuple = ()
    linear_models: tuple = ()

    def __post_init__(self):
        if len(self.vertices) < 2:
            raise ValidationError(f"a PLDI needs at least 2 vertices, got {len(self.vertices)}")
        ts = {v.Ts for v in self.vertices}
        if len(ts) != 1:
            raise ValidationError("vertices have different sample times")

    @property
    def Ts(self):
        return self.vertices[0].Ts

    @property
    def C(self):
        return output_selector()

    def __len__(self):
        return len(self.vertices)

    def stacked(self):
        """Arrays of shape (N, 12, 12) and (N, 12, 13)."""
        return (np.stack([v.Phi for v in self.vertices]), np.stack([v.G for v in self.vertices]))

    def mean_thrust(self):
        thrusts = [v.u_trim[N_SURFACES] for v in self.vertices if v.u_trim is not None]
        return float(np.mean(thrusts)) if thrusts else 1.0


class VertexError(HapdError):
    """Trim or linearisation failed at one grid point."""

    def __init__(self, condition, cause):
        self.condition = condition
        self.cause = cause
        super().__init__(f"vertex V={condition[0]} m/s, h={condition[1]} m: {cause}")


def build_vertex(V_tas, altitude, model, Ts=DEFAULT_TS):
    """Trim, linearise and discretise at one flight condition."""
    try:
        result = trim(TrimSpec(V_tas, altitude), model)
        lin = linearize_trim(result, model)
    except HapdError as exc:
        raise VertexError((V_tas, altitude), exc) from exc
    return result, lin, discretize(lin, Ts)


def build_pldi(grid, model, Ts=DEFAULT_TS, executor=None):
    """Trim, linearise and discretise at every grid point.

    ``executor`` may be any ``concurrent.futures`` executor; the result does
    not depend on whether or how the work is spread.
    """
    points = grid.points
    if len(points) < 2:
        raise ValidationError(f"a PLDI needs at least 2 vertices, got {len(points)}")
    if executor is None:
        results = [build_vertex(v, h, model, Ts) for v, h in points]
    else:
        futures = [executor.submit(build_vertex, v, h, model, Ts) for v, h in points]
        results = [f.result() for f in futures]
    trims, lins, discs = zip(*results)
    return PldiModel(tuple(discs), tuple(trims), tuple(lins))


@dataclass(frozen=True)
class NldiModel:
    Phi0: np.ndarray
    G0: np.ndarray
    Bw: np.ndarray
    Cz: np.ndarray
    Dz: np.ndarray
    Ts: float
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        r = self.Bw.shape[1] if self.Bw.ndim == 2 else -1
        if self.Phi0.shape != (N_STATES, N_STATES) or self.G0.shape != (N_STATES, N_INPUTS):
            raise ValidationError("Phi0 must be 12x12 and G0 12x13")
        if self.Bw.shape != (N_STATES, r) or self.Cz.shape != (r, N_STATES) or self.Dz.shape != (r, N_INPUTS):
            raise ValidationError(
                f"inconsistent uncertainty channel shapes Bw{self.Bw.shape} Cz{self.Cz.shape} Dz{self.Dz.shape}")
        if r > MAX_CHANNELS:
            raise ValidationError(f"uncertainty channel dimension {r} exceeds {MAX_CHANNELS}")
        if not self.Ts > 0:
            raise ValidationError("sample time must be positive")
        for name in ("Phi0", "G0", "Bw", "Cz", "Dz"):
            if not np.all(np.isfinite(getattr(self, name))):
                raise ValidationError(f"{name} has non-finite entries")

    @property
    def rank(self):
        return self.Bw.shape[1]

    @property
    def C(self):
        return output_selector()

    def vertex_matrices(self, delta):
        """``(Phi0 + Bw Delta Cz, G0 + Bw Delta Dz)``."""
        if self.rank == 0:
            return self.Phi0.copy(), self.G0.copy()
        return self.Phi0 + self.Bw @ delta @ self.Cz, self.G0 + self.Bw @ delta @ self.Dz

    @classmethod
    def nominal(cls, discrete_model):
        """NLDI with no uncertainty channels (r = 0) around one discrete model."""
        return cls(discrete_model.Phi, discrete_model.G, np.zeros((N_STATES, 0)),
                   np.zeros((0, N_STATES)), np.zeros((0, N_INPUTS)), discrete_model.Ts)


def input_weights(pldi):
    """Column weights making deflection and thrust columns commensurable."""
    w = np.empty(N_INPUTS)
    limit = 25.0 * np.pi / 180.0
    w[:N_SURFACES] = limit
    w[N_SURFACES] = pldi.mean_thrust()
    return w


ROUNDING_FLOOR = 1e3 * np.finfo(float).eps


def _numerical_rank(s, rank_tolerance, scale=0.0):
    """Count singular values above ``rank_tolerance * s[0]``.

    Values below ``ROUNDING_FLOOR * scale`` (``scale`` being the size of the
    matrices the residuals were taken from) are rounding noise and never count.
    """
    if s.size == 0:
        return 0
    thresh = max(rank_tolerance * s[0], ROUNDING_FLOOR * scale)
    if thresh == 0.0:
        return 0
    return int(np.sum(s > thresh))


def residual_spectra(pldi, weights=None):
    """Singular values of the horizontal and vertical residual stacks."""
    Phi, G = pldi.stacked()
    if weights is None:
        weights = input_weights(pldi)
    R = np.concatenate([Phi - Phi.mean(axis=0), (G - G.mean(axis=0)) * weights], axis=2)
    horiz = np.concatenate(list(R), axis=1)
    vert = np.concatenate(list(R), axis=0)
    return (np.linalg.svd(horiz, compute_uv=False), np.linalg.svd(vert, compute_uv=False))


def fit_nldi(pldi, rank_tolerance=RANK_TOL, residual_tolerance=COVERAGE_RESIDUAL_TOL,
             max_rank=MAX_CHANNELS, strict=True):
    """Fit the norm-bounded model to a polytopic family.

    The nominal pair is the vertex mean. The vertex residuals, with the input
    columns weighted by :func:`input_weights`, are factored through the
    leading left singular vectors of their horizontal stack (giving ``Bw``)
    and the leading right singular vectors of their vertical stack (giving
    ``[Cz | Dz]``); the channel count ``r`` is the larger of the two numerical
    ranks at ``rank_tolerance`` relative to the largest singular value. The
    pair is then rescaled so that the worst vertex has ``||Delta_i||_2 = 1``.

    Raises
    ------
    FitError
        ``r`` would exceed ``max_rank``, or the rank-``r`` reconstruction of
        some vertex misses by more than ``residual_tolerance`` (relative to
        the Frobenius norm of ``[Phi_i | G_i]``). With ``strict=False`` the
        model is returned anyway and the failure is recorded in ``meta``.
    """
    Phi, G = pldi.stacked()
    Phi0, G0 = Phi.mean(axis=0), G.mean(axis=0)
    W = input_weights(pldi)
    R = np.concatenate([Phi - Phi0, (G - G0) * W], axis=2)
    horiz = np.concatenate(list(R), axis=1)
    vert = np.concatenate(list(R), axis=0)
    U, s_left, _ = np.linalg.svd(horiz, full_matrices=False)
    _, s_right, Vt = np.linalg.svd(vert, full_matrices=False)
    scale = np.linalg.norm(np.concatenate([Phi0, G0 * W], axis=1))
    r_left = _numerical_rank(s_left, rank_tolerance, scale)
    r_right = _numerical_rank(s_right, rank_tolerance, scale)
    r = max(r_left, r_right)
    meta = {"rank_left": r_left, "rank_right": r_right}
    if r == 0:
        empty = NldiModel(Phi0, G0, np.zeros((N_STATES, 0)), np.zeros((0, N_STATES)),
                          np.zeros((0, N_INPUTS)), pldi.Ts, meta)
        return empty
    if r > max_rank:
        # keep the leading max_rank directions and report how much is lost
        r = max_rank
    floor_l = rank_tolerance * s_left[0]
    floor_r = rank_tolerance * s_right[0]
    Bw = U[:, :r] * np.sqrt(np.maximum(s_left[:r], floor_l))
    F = np.sqrt(np.maximum(s_right[:r], floor_r))[:, None] * Vt[:r]
    Cz, Dz = F[:, :N_STATES], F[:, N_STATES:] / W

    deltas = [_extract_delta(Bw, Cz, Dz, Phi[i] - Phi0, G[i] - G0) for i in range(len(Phi))]
    s_star = max(_spectral_norm(d) for d in deltas)
    if s_star > 0:
        Bw, Cz, Dz = Bw * np.sqrt(s_star), Cz * np.sqrt(s_star), Dz * np.sqrt(s_star)
    meta.update(scale=float(s_star), singular_values_left=s_left, singular_values_right=s_right)
    nldi = NldiModel(Phi0, G0, Bw, Cz, Dz, pldi.Ts, meta)

    report = verify_coverage(nldi, pldi)
    nldi.meta["max_relative_residual"] = report.max_relative_residual
    if report.max_relative_residual > residual_tolerance and strict:
        tail = s_right[r] / s_right[0] if r < len(s_right) else 0.0
        raise FitError(
            f"rank-{r} factorisation reproduces the vertices only to relative residual "
            f"{report.max_relative_residual:.3e} > {residual_tolerance:.1e} "
            f"(numerical ranks: left {r_left}, right {r_right}; first discarded right singular "
            f"value {tail:.2e} relative); a larger channel count is needed",
            residual=report.max_relative_residual, rank=r)
    return nldi


def _spectral_norm(delta):
    if delta.size == 0:
        return 0.0
    return float(np.linalg.norm(delta, 2))


def _extract_delta(Bw, Cz, Dz, dPhi, dG):
    r = Bw.shape[1]
    if r == 0:
        return np.zeros((0, 0))
    F = np.hstack([Cz, Dz])
    return np.linalg.pinv(Bw) @ np.hstack([dPhi, dG]) @ np.linalg.pinv(F)


@dataclass(frozen=True)
class VertexCoverage:
    index: int
    delta: np.ndarray
    sigma_max: float
    residual: float
    relative_residual: float


@dataclass(frozen=True)
class CoverageReport:
    vertices: tuple
    sigma_tol: float = COVERAGE_SIGMA_TOL
    residual_tol: float = COVERAGE_RESIDUAL_TOL

    @property
    def max_sigma(self):
        return max(v.sigma_max for v in self.vertices)

    @property
    def max_relative_residual(self):
        return max(v.relative_residual for v in self.vertices)

    @property
    def max_residual(self):
        return max(v.residual for v in self.vertices)

    @property
    def passed(self):
        return self.max_sigma <= 1.0 + self.sigma_tol and self.max_relative_residual <= self.residual_tol

    def deltas(self):
        return [v.delta for v in self.vertices]

    def format(self):
        lines = [f"{'vertex':>6} {'sigma_max':>12} {'residual':>12} {'rel_residual':>12}"]
        for v in self.vertices:
            lines.append(f"{v.index:>6d} {v.sigma_max:>12.6e} {v.residual:>12.4e} {v.relative_residual:>12.4e}")
        lines.append(f"worst sigma_max {self.max_sigma:.9f} (limit {1 + self.sigma_tol:.6f})")
        lines.append(f"worst relative residual {self.max_relative_residual:.3e} (limit {self.residual_tol:.1e})")
        lines.append("PASS" if self.passed else "FAIL")
        return "\n".join(lines)


def verify_coverage(nldi, pldi, sigma_tol=COVERAGE_SIGMA_TOL, residual_tol=COVERAGE_RESIDUAL_TOL):
    """Least-squares Delta for each vertex, its spectral norm and the reconstruction error.

    The relative residual is ``||[Phi_i - Phi_rec | G_i - G_rec]||_F / ||[Phi_i | G_i]||_F``.
    """
    out = []
    for i, v in enumerate(pldi.vertices):
        dPhi, dG = v.Phi - nldi.Phi0, v.G - nldi.G0
        delta = _extract_delta(nldi.Bw, nldi.Cz, nldi.Dz, dPhi, dG)
        Phi_rec, G_rec = nldi.vertex_matrices(delta)
        err = np.linalg.norm(np.hstack([v.Phi - Phi_rec, v.G - G_rec]))
        scale = np.linalg.norm(np.hstack([v.Phi, v.G]))
        out.append(VertexCoverage(i, delta, _spectral_norm(delta), float(err), float(err / scale)))
    return CoverageReport(tuple(out), sigma_tol, residual_tol)
