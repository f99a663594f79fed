"""nodalshoot: shooting-method construction of nodal bound states for the
radial m-Laplacian equation  (phi_m(u'))' + ((N-1)/r) phi_m(u') + f(u) = 0.

Start values alpha = u(0) are classified by the fate of their trajectory
(crossed / trapped / bound_candidate), and the k-nodal bound state is located
by bisecting the birth of the (k+1)-th sign change.  Energy decay and the
virial (Pohozaev-type) identity are verified along every accepted profile.
"""

from .classifier import (ClassLabel, EventTrace, Margins, classify,
                         extract_events, nodal_threshold_radius,
                         weighted_energy)
from .errors import (BracketError, BracketNotFoundError, ConfigError,
                     DegenerateStartError, DomainError, EventOrderError,
                     HypothesisError, QuadratureError, ShootingError,
                     SingularityError)
from .hypotheses import (CheckerConfig, HypothesisReport, Verdict,
                         check_hypotheses)
from .integrator import (IntegratorConfig, ShootState, Trajectory, energy,
                         integrate, phi, pohozaev, read_profile_csv, rhs,
                         series_start, uprime_of, write_profile_csv)
from .landmarks import Landmarks, bound_radius, find_landmarks
from .nonlinearity import (Nonlinearity, conjugate_exponent, crit_exponent,
                           from_piecewise_config, make_nonlinearity)
from .solver import (BisectionProblem, BoundState, SolveConfig, SweepPoint,
                     bisect, bracket, classify_alpha, solve_k, sweep)

__version__ = "0.1.0"

__all__ = [
    "BisectionProblem", "BoundState", "BracketError", "BracketNotFoundError",
    "CheckerConfig", "ClassLabel", "ConfigError", "DegenerateStartError",
    "DomainError", "EventOrderError", "EventTrace", "HypothesisError",
    "HypothesisReport", "IntegratorConfig", "Landmarks", "Margins",
    "Nonlinearity", "QuadratureError", "ShootState", "ShootingError",
    "SingularityError", "SolveConfig", "SweepPoint", "Trajectory", "Verdict",
    "bisect", "bound_radius", "bracket", "check_hypotheses", "classify",
    "classify_alpha", "conjugate_exponent", "crit_exponent", "energy",
    "extract_events", "find_landmarks", "from_piecewise_config", "integrate",
    "make_nonlinearity", "nodal_threshold_radius", "phi", "pohozaev",
    "read_profile_csv", "rhs", "series_start", "solve_k", "sweep",
    "uprime_of", "weighted_energy", "write_profile_csv",
]
