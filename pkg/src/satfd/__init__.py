"""Satellite constellation fault detection from inter-satellite ranges.

Pipeline: propagate a constellation (two-body), build the occultation
visibility graph, enumerate 6-clique subgraphs, synthesize noisy/faulted
two-way ranges, analyze each clique's centered distance matrix, and vote
out faulty satellites greedily.  Monte-Carlo campaigns over parameter
grids report confusion-matrix metrics.
"""

from .constellation import (
    BodyParams,
    ConstellationConfig,
    OrbitalElements,
    PositionSet,
    load_bundled,
    load_config,
    orbital_period,
    propagate,
    solve_kepler,
)
from .linkgraph import VisibilityGraph, build_visibility_graph, line_of_sight
from .cliques import (
    Clique,
    CliqueSchedule,
    build_clique_schedule,
    cliques_containing,
    list_k_cliques,
    remove_satellite,
)
from .ranging import FaultConfig, RangeMatrix, measure_ranges
from .edm import (
    Edm,
    Gcedm,
    GcedmAnalysis,
    analyze,
    analyze_clique_batch,
    build_edm,
    fault_vertex_index,
    geometric_center,
    numerical_rank,
)
from .detector import (
    DetectionOutcome,
    DetectorParams,
    VoteState,
    detect_faults,
    detection_round,
)
from .calibration import (
    GammaFit,
    MlpPredictor,
    StatisticSample,
    build_training_set,
    extract_features,
    fit_gamma,
    percentile,
    predict_threshold,
    sample_statistics,
    train_predictor,
)
from .experiment import (
    CampaignContext,
    ConfusionCounts,
    ExperimentGrid,
    MetricSet,
    ThresholdSpec,
    compute_metrics,
    run_campaign,
)

__version__ = "0.1.0"
