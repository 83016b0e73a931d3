"""su2lab: numerical experiments with SU(2) connections on R^3.

Builds the hedgehog connection families, measures curvature decay rates,
runs the shell-packet scaling scan behind the critical-rate essential-
spectrum mechanism, checks the exterior tail estimates, discretizes the
covariant Laplacian on a box lattice with link variables, and fixes the
discrete Coulomb gauge.  See the README for the CLI front end.
"""

__version__ = "0.1.0"

from . import algebra, curvature, fields, gaugefix, lattice, quadrature, weyl  # noqa: E402,F401
from .errors import (  # noqa: F401
    AccuracyError,
    ConfigError,
    ConvergenceError,
    DegenerateFitError,
    ProfileError,
)
