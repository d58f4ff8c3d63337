"""Anomaly detection on temporal simplicial complexes via Hodge Laplacian spectra."""
from .complex import (
    SimplicialComplex,
    TemporalSequence,
    boundary_matrix,
    build_complex,
    check_closure,
    clique_lift,
    permute_vertices,
    weighted_boundary,
)
from .detector import (
    DetectorConfig,
    ScoreRecord,
    StreamDetector,
    calibrate_threshold,
    classify,
    score_stream,
    top_k_anomalies,
)
from .errors import *  # noqa: F401,F403
from .metrics import GroundTruth, hits_at_n, pr_delay_table, precision_at_delay, recall_at_delay
from .pipeline import RunConfig, run_detection
from .spectra import hodge_laplacian, snapshot_features, top_singular_values
from .synth import GenerationSchedule, SegmentParams, builtin_schedules, run_schedule

__version__ = "0.1.0"
