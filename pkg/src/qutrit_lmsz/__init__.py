"""Two interacting qutrits swept through an avoided crossing.

Submodules
----------
specfun       parabolic cylinder functions and the Cayley-Klein pair of a linear sweep
model         Hamiltonian, field protocols, parity blocks and reduced pictures
propagator    adaptive numerical evolution and infinite-window populations
analytic      closed-form transition tables, exact evolution operators, dark states
entanglement  negativity (general and closed forms)
noise         Monte Carlo averaging over white longitudinal noise
cli           command-line front end
"""

__version__ = "0.1.0"

from . import analytic, entanglement, model, noise, propagator, specfun  # noqa: E402,F401
from .errors import (  # noqa: E402,F401
    ConfigError,
    FieldDomainError,
    IntegrationError,
    NonConvergenceError,
    PreconditionError,
    QutritError,
    SymmetryViolationError,
)
