"""Dynamic slice allocation for a 5G core testbed."""

from ._core import (
    ConfigError,
    DsafError,
    Orchestrator,
    OrchestratorError,
    StoreError,
    TopologyError,
    ValidationError,
    compare,
    fcfsfa,
    generate_requests,
    run_scenario,
    solve,
)

__all__ = [
    "ConfigError",
    "DsafError",
    "Orchestrator",
    "OrchestratorError",
    "StoreError",
    "TopologyError",
    "ValidationError",
    "compare",
    "fcfsfa",
    "generate_requests",
    "run_scenario",
    "solve",
]
