"""KV cache compression profiling, serving policies and simulation."""

from ._core import (
    BYTES_PER_GBPS,
    ConfigError,
    DecodeError,
    DimensionError,
    InfeasibleQualityError,
    KvpilotError,
    NumericError,
    ParseError,
    PolicyTable,
    Profile,
    analytic_cr,
    benefit_threshold,
    canonical_strategy,
    config_digest,
    generate_kv,
    normalize_config,
    pareto_frontier,
    predict_latency,
    roundtrip,
    run_cli,
    run_pipeline,
)

__version__ = "0.1.0"

__all__ = [
    "BYTES_PER_GBPS",
    "ConfigError",
    "DecodeError",
    "DimensionError",
    "InfeasibleQualityError",
    "KvpilotError",
    "NumericError",
    "ParseError",
    "PolicyTable",
    "Profile",
    "analytic_cr",
    "benefit_threshold",
    "canonical_strategy",
    "config_digest",
    "generate_kv",
    "normalize_config",
    "pareto_frontier",
    "predict_latency",
    "roundtrip",
    "run_cli",
    "run_pipeline",
]
