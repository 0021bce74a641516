"""Aircraft parameters, elastic-mode data and the affine aerodynamic table.

Mass and inertia properties and the actuator limits are the published HAPD
values. The elastic-mode data and every aerodynamic coefficient are synthetic:
they were chosen so that the aircraft trims with comfortable control margins
over 17-23 m/s and 300-700 m, and they should not be read as HAPD data.
"""

from dataclasses import dataclass, field, replace
from importlib import resources

import numpy as np

from . import kvfile
from .errors import ParseError, ValidationError

DEG = np.pi / 180.0

SURFACE_NAMES = (
    "elevator_ib_dx",
    "elevator_ib_sx",
    "elevator_mid_dx",
    "elevator_mid_sx",
    "elevator_ob_dx",
    "elevator_ob_sx",
    "aileron_ib_dx",
    "aileron_ib_sx",
    "aileron_ob_dx",
    "aileron_ob_sx",
    "rudder_sup",
    "rudder_inf",
)
N_SURFACES = len(SURFACE_NAMES)
ELEVATORS = slice(0, 6)

# Rows of the coefficient matrix, in output order.
CHANNELS = ("C_L", "C_D", "C_Y", "C_l", "C_m", "C_n", "Q.s", "Q.a")
# Columns: the affine regressor [1, alpha, beta, p, q, r, delta(12), eta, etadot].
TERMS = (
    ("0", "alpha", "beta", "p", "q", "r")
    + tuple(f"delta[{i}]" for i in range(1, N_SURFACES + 1))
    + ("eta.s", "eta.a", "etadot.s", "etadot.a")
)
N_TERMS = len(TERMS)
RATE_CONVENTIONS = ("raw", "normalized")
STIFFNESS_CONVENTIONS = ("literal", "standard-second-order")

# Left/right mirror of the regressor: swap DX/SX surfaces, negate odd quantities.
_MIRROR_PERM = np.arange(N_TERMS)
for _dx in (0, 2, 4, 6, 8):
    _MIRROR_PERM[6 + _dx], _MIRROR_PERM[6 + _dx + 1] = 6 + _dx + 1, 6 + _dx
_MIRROR_SIGN = np.ones(N_TERMS)
_MIRROR_SIGN[[2, 3, 5, 16, 17, 19, 21]] = -1.0  # beta, p, r, rudders, eta_a, etadot_a
REGRESSOR_MIRROR = np.eye(N_TERMS)[_MIRROR_PERM] * _MIRROR_SIGN[:, None]
CHANNEL_MIRROR = np.diag([1.0, 1.0, -1.0, -1.0, 1.0, -1.0, 1.0, -1.0])


@dataclass(frozen=True)
class AircraftParameters:
    """Rigid-body mass properties, geometry and surface actuator limits (SI, radians)."""

    mass: float = 184.4
    wing_area: float = 13.5
    wing_span: float = 16.55
    mean_chord: float = 0.557
    Ix: float = 1.997e3
    Iy: float = 258.6
    Iz: float = 2.196e3
    Ixz: float = -66.3
    gravity: float = 9.80665
    surface_deflection_limit: float = 25.0 * DEG
    surface_rate_limit: float = 200.0 * DEG

    def __post_init__(self):
        for name in ("mass", "wing_area", "wing_span", "mean_chord", "Ix", "Iy", "Iz",
                     "surface_deflection_limit", "surface_rate_limit"):
            if not getattr(self, name) > 0:
                raise ValidationError(f"{name} must be positive, got {getattr(self, name)}")
        if not self.Ix * self.Iz - self.Ixz**2 > 0:
            raise ValidationError("Ix*Iz - Ixz^2 must be positive")

    @property
    def roll_yaw_inertia(self):
        return np.array([[self.Ix, -self.Ixz], [-self.Ixz, self.Iz]])


@dataclass(frozen=True)
class ElasticModeParams:
    """One aero-elastic mode: M*eta'' + zeta*eta' + K*eta = Q.

    With ``stiffness_convention == "literal"`` the stiffness is ``M*omega``,
    so the modal equation reads M*eta'' + zeta*eta' + M*omega*eta = Q;
    ``"standard-second-order"`` gives M*(eta'' + 2*zeta*omega*eta' + omega^2*eta) = Q.
    """

    generalized_mass: float
    damping: float
    frequency: float
    stiffness_convention: str = "literal"

    def __post_init__(self):
        if not self.generalized_mass > 0:
            raise ValidationError("generalized mass must be positive")
        if not self.damping >= 0:
            raise ValidationError("damping must be non-negative")
        if not self.frequency > 0:
            raise ValidationError("natural frequency must be positive")
        if self.stiffness_convention not in STIFFNESS_CONVENTIONS:
            raise ValidationError(f"unknown stiffness convention {self.stiffness_convention!r}")

    def acceleration(self, eta, eta_dot, force):
        m, w = self.generalized_mass, self.frequency
        if self.stiffness_convention == "literal":
            return (force - self.damping * eta_dot - m * w * eta) / m
        return force / m - 2.0 * self.damping * w * eta_dot - w * w * eta


@dataclass(frozen=True)
class AeroCoefficientTable:
    """Affine aerodynamic model stored as an 8 x 22 matrix.

    Row ``k`` holds the coefficients of channel ``CHANNELS[k]`` against the
    regressor ``[1, alpha, beta, p, q, r, delta_1..delta_12, eta_s, eta_a,
    etadot_s, etadot_a]``. With ``rate_normalization == "normalized"`` the
    p, r columns multiply ``p*b/(2V)``, ``r*b/(2V)`` and the q column
    ``q*c/(2V)``; with ``"raw"`` they multiply the body rates directly.
    """

    matrix: np.ndarray
    rate_normalization: str = "raw"

    def __post_init__(self):
        m = np.array(self.matrix, dtype=float)
        if m.shape != (len(CHANNELS), N_TERMS):
            raise ValidationError(f"coefficient matrix must be {len(CHANNELS)}x{N_TERMS}, got {m.shape}")
        if not np.all(np.isfinite(m)):
            raise ValidationError("coefficient matrix has non-finite entries")
        if self.rate_normalization not in RATE_CONVENTIONS:
            raise ValidationError(f"unknown rate normalization {self.rate_normalization!r}")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    def __getitem__(self, key):
        prefix, term = _split_key(key)
        return float(self.matrix[CHANNELS.index(prefix), TERMS.index(term)])

    def with_values(self, **updates):
        """Copy with entries replaced; keys use file syntax with ``__`` for ``.``."""
        m = self.matrix.copy()
        for key, value in updates.items():
            prefix, term = _split_key(key.replace("__", "."))
            m[CHANNELS.index(prefix), TERMS.index(term)] = value
        return replace(self, matrix=m)

    def items(self):
        for i, prefix in enumerate(CHANNELS):
            for j, term in enumerate(TERMS):
                yield f"{prefix}.{term}", float(self.matrix[i, j])

    def drag_coefficient(self, alpha):
        return self.matrix[1, 0] + self.matrix[1, 1] * np.asarray(alpha)

    def is_mirror_symmetric(self, atol=0.0):
        return np.allclose(self.mirrored().matrix, self.matrix, rtol=0.0, atol=atol)

    def mirrored(self):
        """Table seen by the left/right mirrored aircraft."""
        return replace(self, matrix=CHANNEL_MIRROR @ self.matrix @ REGRESSOR_MIRROR)

    def symmetrized(self):
        return replace(self, matrix=0.5 * (self.matrix + self.mirrored().matrix))

    @classmethod
    def zeros(cls, rate_normalization="raw"):
        return cls(np.zeros((len(CHANNELS), N_TERMS)), rate_normalization)


def _split_key(key):
    for prefix in CHANNELS:
        if key.startswith(prefix + "."):
            term = key[len(prefix) + 1:]
            if term in TERMS:
                return prefix, term
    raise KeyError(key)


COEFF_KEYS = tuple(f"{p}.{t}" for p in CHANNELS for t in TERMS)

_COEFF_HEADER = (
    "Affine aerodynamic coefficient table.",
    "Channels C_L, C_D, C_Y (forces, scaled by rho*V^2*S/2), C_l, C_n (scaled by",
    "rho*V^2*S*b/2), C_m (rho*V^2*S*c/2), Q.s, Q.a (generalized forces, rho*V^2*S/2).",
    "Terms: 0 (bias), alpha, beta [1/rad]; p, q, r [s/rad when rate_normalization = raw,",
    "1/rad of the normalized rate otherwise]; delta[1..12] [1/rad] in surface order",
    "elevator IB/MID/OB DX,SX; aileron IB/OB DX,SX; rudder SUP, INF;",
    "eta.s, eta.a [-]; etadot.s, etadot.a [s].",
)


def load_coefficients(path):
    entries = kvfile.read_kv(path)
    kvfile.check_keys(entries, set(COEFF_KEYS) | {"rate_normalization"}, COEFF_KEYS, path)
    m = np.empty((len(CHANNELS), N_TERMS))
    for key in COEFF_KEYS:
        prefix, term = _split_key(key)
        m[CHANNELS.index(prefix), TERMS.index(term)] = kvfile.as_float(entries, key, path)
    rates = entries.get("rate_normalization", ("raw", None))
    if rates[0] not in RATE_CONVENTIONS:
        raise ParseError(f"rate_normalization must be one of {RATE_CONVENTIONS}", path, rates[1])
    return AeroCoefficientTable(m, rates[0])


def format_coefficients(table, header=_COEFF_HEADER):
    items = [("rate_normalization", table.rate_normalization)]
    current = None
    for key, value in table.items():
        prefix = key.rsplit(".", 1)[0] if key.startswith("Q.") else key.split(".", 1)[0]
        if prefix != current:
            items.append((None, ""))
            current = prefix
        items.append((key, value))
    return kvfile.format_kv(items, header)


def save_coefficients(table, path, header=_COEFF_HEADER):
    with open(path, "w") as fh:
        fh.write(format_coefficients(table, header))


_PARAM_KEYS = (
    "mass", "wing_area", "wing_span", "mean_chord", "Ix", "Iy", "Iz", "Ixz", "gravity",
    "surface_deflection_limit_deg", "surface_rate_limit_deg",
    "mode.s.generalized_mass", "mode.s.damping", "mode.s.frequency",
    "mode.a.generalized_mass", "mode.a.damping", "mode.a.frequency",
)


@dataclass(frozen=True)
class ModelData:
    """Everything the dynamics need besides state, input, wind and altitude."""

    params: AircraftParameters = field(default_factory=AircraftParameters)
    modes: tuple = ()
    coeffs: AeroCoefficientTable = None

    def __post_init__(self):
        if len(self.modes) != 2:
            raise ValidationError("exactly two elastic modes (symmetric, asymmetric) are required")
        if self.coeffs is None:
            raise ValidationError("a coefficient table is required")


def load_parameters(path):
    """Read a parameters file; returns ``(AircraftParameters, (mode_s, mode_a))``."""
    entries = kvfile.read_kv(path)
    allowed = set(_PARAM_KEYS) | {"stiffness_convention"}
    kvfile.check_keys(entries, allowed, _PARAM_KEYS, path)
    v = {k: kvfile.as_float(entries, k, path) for k in _PARAM_KEYS}
    conv, lineno = entries.get("stiffness_convention", ("literal", None))
    if conv not in STIFFNESS_CONVENTIONS:
        raise ParseError(f"stiffness_convention must be one of {STIFFNESS_CONVENTIONS}", path, lineno)
    try:
        params = AircraftParameters(
            mass=v["mass"], wing_area=v["wing_area"], wing_span=v["wing_span"],
            mean_chord=v["mean_chord"], Ix=v["Ix"], Iy=v["Iy"], Iz=v["Iz"], Ixz=v["Ixz"],
            gravity=v["gravity"],
            surface_deflection_limit=v["surface_deflection_limit_deg"] * DEG,
            surface_rate_limit=v["surface_rate_limit_deg"] * DEG,
        )
        modes = tuple(
            ElasticModeParams(v[f"mode.{m}.generalized_mass"], v[f"mode.{m}.damping"],
                              v[f"mode.{m}.frequency"], conv)
            for m in ("s", "a")
        )
    except ValidationError as exc:
        raise ParseError(str(exc), path) from None
    return params, modes


def format_parameters(params, modes):
    items = [
        ("mass", params.mass), ("wing_area", params.wing_area),
        ("wing_span", params.wing_span), ("mean_chord", params.mean_chord),
        ("Ix", params.Ix), ("Iy", params.Iy), ("Iz", params.Iz), ("Ixz", params.Ixz),
        ("gravity", params.gravity),
        ("surface_deflection_limit_deg", params.surface_deflection_limit / DEG),
        ("surface_rate_limit_deg", params.surface_rate_limit / DEG),
        ("stiffness_convention", modes[0].stiffness_convention),
    ]
    for name, mode in zip(("s", "a"), modes):
        items += [
            (f"mode.{name}.generalized_mass", mode.generalized_mass),
            (f"mode.{name}.damping", mode.damping),
            (f"mode.{name}.frequency", mode.frequency),
        ]
    header = (
        "Aircraft parameters. Units: kg, m^2, m, kg*m^2, m/s^2; surface limits in deg and deg/s.",
        "Elastic modes: generalized mass [kg], damping, natural frequency [rad/s].",
    )
    return kvfile.format_kv(items, header)


def reference_data_path(name):
    return resources.files("hapd") / "data" / name


def reference_parameters():
    with resources.as_file(reference_data_path("hapd_params.txt")) as p:
        return load_parameters(p)


def reference_coefficients():
    with resources.as_file(reference_data_path("hapd_ref_coeffs.txt")) as p:
        return load_coefficients(p)


def reference_model():
    params, modes = reference_parameters()
    return ModelData(params, modes, reference_coefficients())


def load_model(params_path=None, coeffs_path=None):
    if params_path is None:
        params, modes = reference_parameters()
    else:
        params, modes = load_parameters(params_path)
    coeffs = reference_coefficients() if coeffs_path is None else load_coefficients(coeffs_path)
    return ModelData(params, modes, coeffs)
