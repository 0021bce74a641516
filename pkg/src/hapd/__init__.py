"""Flexible-UAV flight dynamics and norm-bounded uncertain linear models.

The pipeline: trim the nonlinear 12-state model over a speed/altitude grid,
linearise and discretise at each point, collect the family as a polytopic
LDI, fit a norm-bounded LDI and certify that it covers every vertex.
"""

from .atmosphere import air_density
from .discrete import DiscreteModel, discretize, expm, zoh
from .errors import (DomainError, FitError, HapdError, InfeasibleTrimError, LinearizationError,
                     ParseError, SimulationAbort, SingularityError, TrimError, ValidationError)
from .ldi import (CoverageReport, EnvelopeGrid, NldiModel, PldiModel, build_grid, build_pldi,
                  fit_nldi, verify_coverage)
from .model import (ControlInput, FlightState, ForcesAndMoments, WindVector, aero_forces_moments,
                    airdata, gravity_components, state_derivative)
from .parameters import (AeroCoefficientTable, AircraftParameters, ElasticModeParams, ModelData,
                         load_coefficients, load_model, load_parameters, reference_model)
from .sim import (ControlSchedule, DeltaPolicy, SimScenario, check_truncated_l2, compare_responses,
                  integrate_nonlinear, simulate_discrete_ldi)
from .trim import LinearModel, TrimResult, TrimSpec, linearize, linearize_trim, trim

__version__ = "0.1.0"
