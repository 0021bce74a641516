"""ISA troposphere density."""

import numpy as np

from .errors import DomainError

RHO0 = 1.225  # kg/m^3, sea level
_LAPSE = 2.25577e-5  # 1/m
_EXPONENT = 4.2559
TROPOPAUSE = 11000.0


def air_density(altitude):
    """Air density [kg/m^3] at geometric altitude ``altitude`` [m], 0 <= h <= 11000."""
    h = np.asarray(altitude, dtype=float)
    if np.any(~np.isfinite(h)) or np.any(h < 0.0) or np.any(h > TROPOPAUSE):
        raise DomainError(f"altitude {altitude} m outside the troposphere model range [0, 11000]")
    rho = RHO0 * (1.0 - _LAPSE * h) ** _EXPONENT
    return float(rho) if rho.ndim == 0 else rho
