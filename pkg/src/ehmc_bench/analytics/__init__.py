from .diagnostics import (
    RunReport,
    autocovariance,
    build_report,
    chain_report,
    esjd,
    ess,
    ess_per_component,
    ks_distance,
    max_ks,
    min_ess_per_grad,
)
from .summary import failed_cells, format_summary, median_curves, summarize, to_long

__all__ = [
    "RunReport",
    "autocovariance",
    "build_report",
    "chain_report",
    "esjd",
    "ess",
    "ess_per_component",
    "ks_distance",
    "max_ks",
    "min_ess_per_grad",
    "failed_cells",
    "format_summary",
    "median_curves",
    "summarize",
    "to_long",
]
