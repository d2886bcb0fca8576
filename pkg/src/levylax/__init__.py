"""Sandwich approximation of drift-controlled Levy value functions.

The lower scheme iterates Hopf-Lax after kernel averaging, the upper scheme
the reverse order; both converge to the control value at rate 1/n with the
explicit gap (t/n) conj(|f|_Lip).  See README.md for the CLI and file
formats.
"""

from .cost import (CostFunction, CostKind, ball_indicator, conjugate,
                   dirac_indicator, power_cost, quadratic_cost, rescale,
                   search_radius)
from .errors import (ConfigError, DomainTooSmallError, EnumerationBudgetError,
                     FastPathUnavailableError, GridTooCoarseError, LevyLaxError)
from .gridfn import (Diagnostics, GridDomain, GridFunction, diagnostics,
                     inverse_modulus, lipschitz_estimate, sample, value_at,
                     values_at, variation)
from .hopflax import HopfLaxStep, apply_bruteforce, apply_fast
from .levykernel import (CompoundPoissonModel, DiracModel, DiscreteKernel,
                         GaussianModel, SumModel, apply_kernel, discretize,
                         sample_increment)
from .oracle import (Coupling, DiscreteMeasureOT, PolicyField, hopf_cole,
                     ot_coupling, ot_value, simulate_policy,
                     verify_ot_representation)
from .scheme import (IterationReport, PenalizedFamily, SandwichReport,
                     SchemeConfig, gap_bound, guarantee_n, i_step, infimal,
                     iterate, j_step, key_estimate_check, psi_penalized,
                     run_sandwich, tol_h)

__version__ = "0.1.0"
