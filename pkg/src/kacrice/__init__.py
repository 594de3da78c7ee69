"""Expected real zeros of random sums with non-Gaussian coefficients.

Kac-Rice intensities, explicit upper bounds, Bergman-kernel closed forms and
a Monte Carlo oracle.
"""

from .basis import BasisFamily, chebyshev_t_coeffs, eval_with_derivative, make_basis
from .charfn import (
    CharacteristicFunction,
    CheckResult,
    cf_report,
    estimate_derivative_bounds,
    make_cf,
    make_custom_cf,
    verify_decay,
)
from .errors import KacRiceError
from .intensity import (
    BoundConstants,
    IntensityResult,
    NormalizedFrame,
    QuadratureSpec,
    bound_constants,
    expected_count,
    gaussian_intensity,
    intensity_nongaussian,
    intensity_upper_bound,
    joint_density_slice,
    normalized_frame,
    partition_feasibility,
    phi_n,
)
from .kernels import (
    KernelDiagonal,
    bergman_calK_boundary,
    bergman_calK_limit,
    bergman_kernel_closed,
    kernel_diagonal,
)
from .montecarlo import (
    CoefficientDistribution,
    SimulationReport,
    empirical_density,
    make_distribution,
    real_roots,
)

__version__ = "0.1.0"
