"""Multi-period convex quadratic optimization with indicator variables.

The package projects linear-dynamics problems into indicator MIQPs whose
cost matrices have outer-product structure, solves the unconstrained core
exactly as a shortest path on a DAG, certifies the closed-form inverse
machinery behind that reduction, and exports tight second-order cone and
big-M/indicator models for external solvers.
"""

from .factorizable import (
    AssumptionReport,
    AssumptionViolationError,
    BlockFactorizableSpec,
    FactorizableSpec,
    RankDecomposition,
    RankTerm,
    check_assumption,
    check_assumption_block,
    check_assumption_scalar,
    inverse_decomposition,
    lambda_matrix,
    lambda_table,
    materialize,
    phi_factor,
    submatrix_decomposition,
    submatrix_inverse,
)
from .linalg import (
    AsymmetricMatrixError,
    DimensionError,
    NotPositiveDefiniteError,
    SingularMatrixError,
    is_positive_definite,
    mat_inverse,
    mat_mul,
    sym_inv_sqrt,
)
from .models import (
    ConicModel,
    QuadraticModel,
    SideConstraints,
    build_miqp,
    build_socp,
    certify_hull_feasibility,
    expand_indicators_to_big_m,
    model_stats,
    read_model,
    write_model,
)
from .oracle import (
    OracleResult,
    SizeGuardError,
    enumerate_supports,
    solve_fixed_support,
    verify_inverse,
    verify_path_polytope,
)
from .projection import (
    MultiPeriodProblem,
    ProjectedMIQP,
    project_block,
    project_scalar,
    reconstruct_states,
)
from .spp import ArcCostTable, SppSolution, arc_costs, shortest_path, solve
from .casestudies import (
    CalciumInstance,
    HevInstance,
    calcium_models,
    calcium_projected,
    gen_calcium,
    gen_hev,
    hev_models,
    hev_projected,
)
from .instances import (
    projected_from_instance,
    read_instance,
    write_instance,
)

__version__ = "0.1.0"
