"""Physics invariant checks shared by the model tests and the acceptance suite.

Each ``*_error`` function takes one random draw and returns an error that
should be at rounding level.
"""

import numpy as np

from hapd.atmosphere import air_density
from hapd.model import aero_vector, derivative, gravity_components, mirror_input, mirror_state
from hapd.parameters import DEG, AeroCoefficientTable, ModelData


def random_state(rng):
    lo = [15.0, -0.2, -0.2, -0.5, -0.5, -0.5, -0.6, -0.6, -0.05, -0.5, -0.05, -0.5]
    hi = [25.0, 0.2, 0.2, 0.5, 0.5, 0.5, 0.6, 0.6, 0.05, 0.5, 0.05, 0.5]
    return rng.uniform(lo, hi)


def random_input(rng):
    return np.concatenate([rng.uniform(-25 * DEG, 25 * DEG, 12), [rng.uniform(0.0, 300.0)]])


def _rot(axis, a):
    c, s = np.cos(a), np.sin(a)
    i, j = [(1, 2), (0, 2), (0, 1)][axis]
    R = np.eye(3)
    R[i, i] = R[j, j] = c
    R[i, j], R[j, i] = s, -s
    if axis == 1:
        R[i, j], R[j, i] = -s, s
    return R


def gravity_oracle(alpha, beta, phi, theta, g):
    """Gravity in body axes from Euler rotations, projected on wind x, y and stability z."""
    g_body = _rot(0, phi) @ _rot(1, theta) @ np.array([0.0, 0.0, g])
    x_w = np.array([np.cos(alpha) * np.cos(beta), np.sin(beta), np.sin(alpha) * np.cos(beta)])
    y_w = np.array([-np.cos(alpha) * np.sin(beta), np.cos(beta), -np.sin(alpha) * np.sin(beta)])
    z_s = np.array([-np.sin(alpha), 0.0, np.cos(alpha)])
    return np.array([x_w @ g_body, y_w @ g_body, z_s @ g_body])


def gravity_error(rng, g=9.80665):
    a, b, f, t = rng.uniform(-1.2, 1.2, 4)
    got = np.array(gravity_components(a, b, f, t, g))
    err = np.max(np.abs(got - gravity_oracle(a, b, f, t, g)))
    # wings-level, zero incidence: only pitch tilts gravity
    special = np.array(gravity_components(0.0, 0.0, 0.0, t, g)) - [-g * np.sin(t), 0.0, g * np.cos(t)]
    return max(err, np.max(np.abs(special))) / g


def homogeneity_error(rng, model):
    x, u = random_state(rng), random_input(rng)
    V, lam = rng.uniform(10.0, 30.0), rng.uniform(0.5, 2.0)
    rho = air_density(rng.uniform(0.0, 3000.0))
    a1 = aero_vector(x, u, rho, V, model.coeffs, model.params)
    a2 = aero_vector(x, u, rho, lam * V, model.coeffs, model.params)
    return np.max(np.abs(a2 - lam**2 * a1)) / max(np.max(np.abs(a2)), 1.0)


def affinity_error(rng, model):
    """Loads are affine in (alpha..r, delta, eta): three collinear points stay collinear."""
    x0, u0 = random_state(rng), random_input(rng)
    dx, du = random_state(rng) - x0, random_input(rng) - u0
    dx[0] = 0.0  # airspeed enters through the dynamic pressure only
    s = rng.uniform(-2.0, 2.0)
    rho, V = 1.1, 20.0

    def f(t):
        return aero_vector(x0 + t * dx, u0 + t * du, rho, V, model.coeffs, model.params)
    lhs = f(s) - f(0.0)
    rhs = s * (f(1.0) - f(0.0))
    return np.max(np.abs(lhs - rhs)) / max(np.max(np.abs(f(0.0))), np.max(np.abs(f(1.0))), 1.0)


def symmetric_model(rng, model):
    table = AeroCoefficientTable(rng.standard_normal((8, 22)) * 0.3).symmetrized()
    return ModelData(model.params, model.modes, table)


def mirror_error(rng, model):
    m = symmetric_model(rng, model)
    x, u = random_state(rng), random_input(rng)
    rho = 1.1
    left = derivative(mirror_state(x), mirror_input(u), m, rho)
    right = mirror_state(derivative(x, u, m, rho))
    return np.max(np.abs(left - right)) / max(np.max(np.abs(right)), 1.0)


def inertia_error(rng, model):
    """Multiply (pdot, rdot) back through the inertia matrix and compare with the moments."""
    x, u = random_state(rng), random_input(rng)
    rho = 1.1
    P = model.params
    dx = derivative(x, u, model, rho)
    loads = aero_vector(x, u, rho, x[0], model.coeffs, P)
    p, q, r = x[3:6]
    rhs = np.array([loads[3] + q * r * (P.Iy - P.Iz) + p * q * P.Ixz,
                    loads[5] + p * q * (P.Ix - P.Iy) - q * r * P.Ixz])
    J = np.array([[P.Ix, -P.Ixz], [-P.Ixz, P.Iz]])
    return np.max(np.abs(J @ dx[[3, 5]] - rhs)) / max(np.max(np.abs(rhs)), 1.0)
