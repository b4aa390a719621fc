"""Spectral simulator for condensate + fluctuation dynamics on a periodic box."""

from .grid import (
    MultiplierOperator,
    TorusGrid,
    apply_multiplier,
    laplacian,
    make_grid,
    pair_kernel,
    sample_field,
    sobolev_weight,
)
from .state import (
    HfbState,
    ValidityReport,
    XjNorm,
    coherent_state,
    gauge_transform,
    generalized_density_matrix,
    load_snapshot,
    save_snapshot,
    squeezed_thermal_state,
    state_distance,
    validate,
    xj_norm,
)
from .meanfield import (
    HfbGenerator,
    density,
    direct_potential,
    exchange,
    hfb_generator,
    k_estimate_ratio,
    mean_field_h,
    pairing_k,
)
from .dynamics import (
    BogoliubovReport,
    NumericalAbort,
    PicardInfo,
    Tangent,
    Trajectory,
    bogoliubov_check,
    evolve,
    picard_mild,
    rhs,
    rhs_split,
    step_rk4,
)
from .observables import (
    DiagnosticsRecord,
    energy,
    gamma_floor,
    particle_number,
    record,
    sigma_bound_slack,
    write_diagnostics_csv,
)
from .oracle import (
    OrderEstimate,
    free_flow,
    order_study,
    random_state,
    two_mode_fixture,
)

__version__ = "0.1.0"
