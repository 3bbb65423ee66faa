import re
from typing import Dict, List, Union

import pandas as pd

from ..core.errors import ConfigError

KEYS = ["model", "sampler"]
OVERALL_GROUP = "all"

_GROUP_COLUMN = re.compile(r"^(min_ess_per_grad|esjd_per_grad)\[(.+)\]$")


def _as_frame(results: Union[pd.DataFrame, List[Dict]]) -> pd.DataFrame:
    frame = results if isinstance(results, pd.DataFrame) else pd.DataFrame(results)
    if frame.empty:
        raise ConfigError("No result rows to summarize")
    missing = {"model", "sampler", "p0", "rep", "min_ess_per_grad"} - set(frame.columns)
    if missing:
        raise ConfigError(f"Result table lacks columns: {', '.join(sorted(missing))}")
    if "status" in frame.columns:
        frame = frame[frame["status"] == "ok"]
    if frame.empty:
        raise ConfigError("No successful result rows to summarize")
    return frame


def to_long(results: Union[pd.DataFrame, List[Dict]]) -> pd.DataFrame:
    """One row per (result row, parameter group) with the group's metrics.

    The overall columns become group ``all``; columns named
    ``min_ess_per_grad[<group>]`` and ``esjd_per_grad[<group>]`` supply the others.
    """
    frame = _as_frame(results)
    base = KEYS + ["p0", "rep"]

    groups = {OVERALL_GROUP: ("min_ess_per_grad", "esjd_per_grad")}
    for column in frame.columns:
        match = _GROUP_COLUMN.match(column)
        if match:
            metric, group = match.groups()
            pair = groups.setdefault(group, (None, None))
            if metric == "min_ess_per_grad":
                groups[group] = (column, pair[1])
            else:
                groups[group] = (pair[0], column)

    parts = []
    for group, (ess_col, esjd_col) in groups.items():
        if ess_col is None:
            continue
        part = frame[base].copy()
        part["group"] = group
        part["min_ess_per_grad"] = frame[ess_col].astype(float)
        part["esjd_per_grad"] = (
            frame[esjd_col].astype(float) if esjd_col in frame.columns else float("nan")
        )
        parts.append(part.dropna(subset=["min_ess_per_grad"]))
    return pd.concat(parts, ignore_index=True)


def summarize(results: Union[pd.DataFrame, List[Dict]]) -> pd.DataFrame:
    """Mean and sd over replications of the best min-ESS per gradient over p0.

    For every (model, sampler, group, rep) the maximum over the p0 grid is
    taken first; mean and sample sd (0 for a single replication) follow.

    Args:
        results: Result rows of a benchmark run

    Returns:
        DataFrame with columns model, sampler, group, n_reps, mean, sd,
        best_p0 (the p0 most often achieving the maximum)

    Raises:
        ConfigError: If there are no successful rows
    """
    long = to_long(results)
    keys = KEYS + ["group"]

    best_rows = long.loc[long.groupby(keys + ["rep"])["min_ess_per_grad"].idxmax()]
    table = (
        best_rows.groupby(keys)
        .agg(
            n_reps=("min_ess_per_grad", "size"),
            mean=("min_ess_per_grad", "mean"),
            sd=("min_ess_per_grad", "std"),
            best_p0=("p0", lambda p: p.mode().iloc[0]),
        )
        .reset_index()
    )
    table["sd"] = table["sd"].fillna(0.0)
    return table


def median_curves(results: Union[pd.DataFrame, List[Dict]]) -> pd.DataFrame:
    """Median over replications of min-ESS and ESJD per gradient, per p0."""
    long = to_long(results)
    return (
        long.groupby(KEYS + ["group", "p0"])[["min_ess_per_grad", "esjd_per_grad"]]
        .median()
        .reset_index()
        .sort_values(KEYS + ["group", "p0"], ignore_index=True)
    )


def failed_cells(results: Union[pd.DataFrame, List[Dict]]) -> List[Dict]:
    """Lists the failed (model, sampler, p0, rep) cells with their reasons."""
    frame = results if isinstance(results, pd.DataFrame) else pd.DataFrame(results)
    if frame.empty or "status" not in frame.columns:
        return []
    failed = frame[frame["status"] != "ok"]
    columns = [c for c in ("model", "sampler", "p0", "rep", "reason") if c in failed.columns]
    return failed[columns].to_dict(orient="records")


def format_summary(table: pd.DataFrame, scale: float = 1e2) -> str:
    """Renders a summary table as text, values multiplied by ``scale``.

    Args:
        table: Output of ``summarize``
        scale: Display factor (1e2 shows values in units of 10^-2)

    Returns:
        String containing the formatted table
    """
    header = (
        "Model".ljust(10)
        + " | "
        + "Sampler".ljust(10)
        + " | "
        + "Group".ljust(8)
        + " | "
        + "min ESS/grad".rjust(16)
        + " | "
        + "best p0"
    )
    separator = "-" * len(header)
    rows = [header, separator]

    for record in table.itertuples(index=False):
        cell = f"{record.mean * scale:.2f} ± {record.sd * scale:.2f}"
        rows.append(
            str(record.model)[:10].ljust(10)
            + " | "
            + str(record.sampler)[:10].ljust(10)
            + " | "
            + str(record.group)[:8].ljust(8)
            + " | "
            + cell.rjust(16)
            + " | "
            + f"{record.best_p0:.2f}"
        )

    return "\n".join(rows)
