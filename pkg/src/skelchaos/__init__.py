"""Semi-supervised design of chaotic attractors with leaky echo state networks.

Train a reservoir on a periodic teacher curve (the *skeleton*), close the
loop, and search the reservoir's spectral scale for points where the
autonomous system is chaotic yet its trajectory still follows the
skeleton's shape.
"""

from .analysis import (
    AnalysisReport,
    BifurcationDiagram,
    PcaProjection,
    ReportSettings,
    build_report,
    classify_metrics,
    cluster_values,
    local_extrema,
    mean_q,
    node_average_extrema,
    pca_projection,
    poincare_section,
    power_spectrum,
    q_form_for,
    q_index,
    register_q_form,
    rmse,
    rmse_per_component,
    shape_deviation,
)
from .errors import BracketError, CsvParseError, NumericError
from .lyapunov import (
    LyapunovResult,
    TangentSettings,
    autonomous_jacobian,
    autonomous_spectrum,
    conditional_mle,
    driven_jacobian,
    map_spectrum,
)
from .reservoir import (
    Reservoir,
    ReservoirSpec,
    build_reservoir,
    effective_radius_post,
    effective_radius_pre,
    load_reservoir,
    save_reservoir,
    spectral_radius,
    step,
)
from .search import (
    SearchConfig,
    SearchResult,
    classify,
    find_edge,
    find_edge_from_cle,
    find_supervised,
    reservoir_builder,
    run_search,
    save_search_result,
    scan_interval,
)
from .skeleton import (
    Skeleton,
    lissajous,
    load_csv,
    load_skeleton,
    rossler_cycle,
    save_skeleton,
    unit_circle,
    van_der_pol,
)
from .training import (
    RunTrace,
    TrainedModel,
    TrainingConfig,
    closed_step,
    compose_closed_loop,
    load_model,
    ridge_readout,
    run_closed_loop,
    run_open_loop,
    save_model,
    teacher_force,
    train,
)

__version__ = "0.1.0"
