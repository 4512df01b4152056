"""Adaptive sampling for low-rank matrix completion and approximation."""

from .approximation import (
    DegenerateInput,
    adaptive_approximate,
    allocate_samples,
    build_sketch,
    estimate_column_norms,
    passive_approximate,
    truncate_to_rank,
)
from .completion import adaptive_complete, completion_risk_bound, samples_for_risk
from .instances import (
    InstanceSpec,
    column_coherence,
    make_low_rank,
    make_lower_bound_instance,
    subspace_coherence,
)
from .kernels import BACKEND
from .metrics import error_report, parameter_recovery_report
from .oracle import BudgetExceeded, EntryOracle
from .sampling import (
    IndexList,
    InvalidArgument,
    draw_indices,
    subsample_basis,
    subsample_vector,
    zero_fill_rescale,
)
from .subspace import (
    OrthoBasis,
    SingularSystem,
    projection_bound_factors,
    reconstruct_column,
    residual_energy,
    validate_projection_bounds,
)

__version__ = "0.1.0"
