"""Corner singularities of elliptic problems with nonlocal boundary rows.

Operator pencils at a corner, their eigenvalues and Jordan chains, power
solutions, adjoint normalization, coefficient extraction and a finite
difference solver for manufactured checks.
"""

from .errors import PencilError, InputError
from .pencil import AnglePencil, Nonlocal, NonlocalRow, PeriodicPencil, char_det
from .spectrum import (WeightStrip, find_eigenvalues, jordan_chains, kappa_report,
                       local_smith)
from .singular import Cutoff, PowerSolution, build_f12, power_solution, solve_u12
from .adjoint import adjoint_power, normalize_pair, solve_v21
from .extract import (SampledField, a12_trace, build_model, extract_c1_functional,
                      extract_c2_functional, extract_fit, coefficients_from_rhs)
from .sectorfd import SectorGrid, mms_study, solve

__version__ = "0.1.0"
