"""Explicit global and local minimizers of the L2 cost for equal-width deep ReLU networks."""
from .classify import TrainedClassifier, match_batch, match_output, metric_d, train_classifier
from .construct import (
    MinimizerFamily,
    build_family,
    collapsed_means,
    minimizer_family,
    predict_truncation,
    rotation_to_diagonal,
    shrink_matrix,
    theta_q,
)
from .core import (
    ClusterGeometry,
    ClusteredDataset,
    CumulativeStack,
    LayerStack,
    RegimeVector,
    load_dataset,
    save_dataset,
    validate_dataset,
)
from .errors import *  # noqa: F401,F403
from .geometry import ball_in_cone_angle, barycentric, collapse_bound, compute_D, theta_star_j
from .network import (
    assemble,
    cumulative_to_layerwise,
    forward,
    hidden_forward,
    is_rank_preserving,
    layerwise_to_cumulative,
    truncate,
    truncate_composed,
)
from .readout import (
    CostReport,
    WeightedNorm,
    cost_closed_form,
    cost_report,
    free_bias_readout,
    optimal_readout,
    projector_cost,
    weighted_cost,
)

__version__ = "0.1.0"
