"""Physical-constraints-preserving finite-volume kit for relativistic MHD.

Public surface: equations of state, state containers and admissibility
functions, conservative-to-primitive recovery, fluxes, polytope meshes and
quadratures, the scaling limiter, the time steppers, and the verification
lab checks.
"""

from .eos import (Eos, IdealEos, TabulatedEos, TaubMathewsEos,
                  load_eos_table, save_eos_table, validate_eos)
from .errors import (AverageInadmissible, BracketError, ConfigError,
                     ConvergenceError, DegenerateCell, DomainError,
                     InadmissibleError, PcpError, StepError, UnknownPreset,
                     UnsupportedOrder, WeightError)
from .flux import (directed_flux, full_rotation, lxf_flux, physical_flux,
                   rotation_t3_2d, rotation_t3_3d, splitting_inequality)
from .geometry import (PolytopeMesh, QuadratureSet, build_cartesian,
                       build_polygonal, build_triangular, cell_decomposition,
                       discrete_div, face_quad_points, gauss_rules,
                       load_mesh, save_mesh, triangle_decomposition)
from .lab import (CounterexampleConfig, Report, check_divergence_growth,
                  check_generalized_splitting, check_odelta_bound,
                  default_seed, qtilde_limit, run_counterexample)
from .limiter import (CellPoly, EpsilonSet, limit_density, limit_psi,
                      limit_q, limit_values, pcp_limit, psi_eps)
from .presets import (initial_averages, preset_initial_condition,
                      project_to_averages, random_ddf_averages)
from .recovery import (find_xi4, recover_primitives, recover_primitives_batch,
                       recovery_workspace)
from .solver import (CflPolicy, DecompositionCache, FieldSolution,
                     apply_pcp_limiter, beta_values, compute_dt,
                     decomposition_terms, diagnostics, discrete_div_traces,
                     reconstruct_p1, ssp_advance, step_first_order,
                     step_high_order)
from .states import (ConservedState, PrimitiveState, StarDirection, U_DIM,
                     convex_combine, g1_constraint, is_admissible_g0,
                     phi_value, prim_to_cons, prim_to_cons_array, psi_value,
                     q_value, qhat_qtilde, rotate_state,
                     sample_star_directions, star_vector)

__version__ = "0.1.0"
