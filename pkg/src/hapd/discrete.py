"""Zero-order-hold discretisation of the linearised models."""

from dataclasses import dataclass

import numpy as np

from .model import N_INPUTS, N_STATES, output_selector

DEFAULT_TS = 0.02
EXPM_TOL = 1e-12
_MAX_TERMS = 40


def expm(A, tol=EXPM_TOL):
    """Matrix exponential by scaling and squaring of a truncated Taylor series.

    ``A`` is scaled by ``2**-s`` until its 1-norm is at most 1/2; the series
    is summed until the next term is below ``tol * 2**-s`` in 1-norm (relative
    to the partial sum), so the error after ``s`` squarings stays near
    ``tol``. Then the result is squared ``s`` times.
    """
    A = np.asarray(A, dtype=float)
    n = A.shape[0]
    if A.shape != (n, n):
        raise ValueError("expm needs a square matrix")
    norm = np.linalg.norm(A, 1)
    if not np.isfinite(norm):
        raise ValueError("expm of a non-finite matrix")
    s = max(0, int(np.ceil(np.log2(norm / 0.5)))) if norm > 0.5 else 0
    X = A / 2.0**s
    term_tol = tol * 2.0**-s
    E = np.eye(n)
    term = np.eye(n)
    for k in range(1, _MAX_TERMS):
        term = term @ X / k
        E = E + term
        if np.linalg.norm(term, 1) <= term_tol * np.linalg.norm(E, 1):
            break
    for _ in range(s):
        E = E @ E
    return E


def zoh(A, B, Ts):
    """Return ``(Phi, G)`` with Phi = exp(A Ts), G = int_0^Ts exp(A t) dt B."""
    if not Ts > 0:
        raise ValueError(f"sample time must be positive, got {Ts}")
    n, m = B.shape
    M = np.zeros((n + m, n + m))
    M[:n, :n] = A
    M[:n, n:] = B
    E = expm(M * Ts)
    return E[:n, :n], E[:n, n:]


@dataclass(frozen=True)
class DiscreteModel:
    """``x(k+1) = Phi x(k) + G u(k)``, ``y = C x`` in deviation coordinates about the trim."""

    Phi: np.ndarray
    G: np.ndarray
    Ts: float
    x_trim: np.ndarray = None
    u_trim: np.ndarray = None
    V_tas: float = None
    altitude: float = None

    def __post_init__(self):
        if self.Phi.shape != (N_STATES, N_STATES) or self.G.shape != (N_STATES, N_INPUTS):
            raise ValueError("Phi must be 12x12 and G 12x13")

    @property
    def C(self):
        return output_selector()


def discretize(model, Ts=DEFAULT_TS):
    """Zero-order-hold discretisation of a :class:`~hapd.trim.LinearModel`."""
    Phi, G = zoh(model.A, model.B, Ts)
    return DiscreteModel(Phi, G, float(Ts), model.x_trim, model.u_trim, model.V_tas, model.altitude)
