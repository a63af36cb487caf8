"""Disclosure-risk and data-utility quantification for process-mining event logs."""

from .anonymize import AnonymizationConfig, Strategy, k_anonymize
from .background import (
    BkType,
    Candidate,
    CandidateIndex,
    DEFAULT_CANDIDATE_CAP,
    Projection,
    enumerate_candidates,
    matches,
    project,
)
from .distance import distance_matrix, levenshtein, normalized_distance
from .errors import (
    CandidateLimitError,
    ConfigError,
    InputError,
    LogPrivacyError,
    SolverError,
)
from .event_log import (
    Activity,
    ColumnMapping,
    EventLog,
    IngestResult,
    LogStats,
    RawEvent,
    RowError,
    Variant,
    build_log,
    ingest_csv,
    ingest_xes,
    log_entropy,
    max_entropy,
    stats,
    trace_frequency,
)
from .risk import Aggregation, RiskProfile, RiskScore, case_disclosure, risk_profile, trace_disclosure
from .utility import (
    TransportPlan,
    TransportProblem,
    UtilityReport,
    build_problem,
    data_utility,
    solve,
    write_plan_csv,
)

__version__ = "0.1.0"

__all__ = [
    "Activity",
    "Aggregation",
    "AnonymizationConfig",
    "BkType",
    "Candidate",
    "CandidateIndex",
    "CandidateLimitError",
    "ColumnMapping",
    "ConfigError",
    "DEFAULT_CANDIDATE_CAP",
    "EventLog",
    "IngestResult",
    "InputError",
    "LogPrivacyError",
    "LogStats",
    "Projection",
    "RawEvent",
    "RiskProfile",
    "RiskScore",
    "RowError",
    "SolverError",
    "Strategy",
    "TransportPlan",
    "TransportProblem",
    "UtilityReport",
    "Variant",
    "build_log",
    "build_problem",
    "case_disclosure",
    "data_utility",
    "distance_matrix",
    "enumerate_candidates",
    "ingest_csv",
    "ingest_xes",
    "k_anonymize",
    "levenshtein",
    "log_entropy",
    "matches",
    "max_entropy",
    "normalized_distance",
    "project",
    "risk_profile",
    "solve",
    "stats",
    "trace_disclosure",
    "trace_frequency",
    "write_plan_csv",
]
