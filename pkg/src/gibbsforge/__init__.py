"""Transfer-operator numerics for equilibrium states of non-uniformly expanding 1-D maps."""

__version__ = "0.1.0"

from .dynamics import (  # noqa: E402
    BranchSpec,
    HypothesisReport,
    IntervalMap,
    builtin_map,
    check_hypotheses,
    degree_floor,
    evaluate,
    lipschitz_inverse,
    preimages,
)
from .potentials import Potential, birkhoff_sum, builtin_potential, oscillation  # noqa: E402
from .transfer import (  # noqa: E402
    DiscreteMeasure,
    EigenData,
    Grid,
    build_matrix,
    compute_eigendata,
    conformality_residual,
    jacobian_at,
    make_grid,
    power_eigendata,
    pressure,
)
