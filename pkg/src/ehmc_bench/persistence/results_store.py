import json
import logging
import math
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

import numpy as np
import pandas as pd

from ..core.errors import ConfigError, DataFormatError
from ..core.phase_space import MassSpec
from ..tuning.uturn import BatchDistribution
from .datasets import read_numeric_csv

logger = logging.getLogger(__name__)

# Fixed so that reruns with the same seed produce identical bytes
FLOAT_FORMAT = "%.17g"
FORMATS = ("csv", "json")

Rows = Union[pd.DataFrame, List[Dict[str, Any]]]


def _json_value(value):
    if isinstance(value, np.generic):
        value = value.item()
    if isinstance(value, float) and not math.isfinite(value):
        return None
    return value


class ResultStore:
    def __init__(self, data_dir: Optional[Path] = None):
        """Initializes the result store.

        Args:
            data_dir: Optional directory for chain dumps. If None, uses the
                default XDG data location.
        """
        if data_dir is None:
            data_dir = self._get_default_data_dir()
        self.data_dir = Path(data_dir)

    def _get_default_data_dir(self) -> Path:
        """Gets the default data directory following the XDG Base Directory specification."""
        return Path.home() / ".local" / "share" / "ehmc-bench"

    def _ensure_parent(self, path: Path) -> Path:
        path.parent.mkdir(parents=True, exist_ok=True)
        return path

    def write_results(self, rows: Rows, path: Union[str, Path], fmt: str = "csv") -> Path:
        """Writes result rows as CSV or JSON.

        Column order follows the rows; floats are written with 17 significant
        digits and missing values as empty cells (CSV) or null (JSON).

        Args:
            rows: Result rows, one per (model, sampler, p0, rep)
            path: Output file
            fmt: Either 'csv' or 'json'

        Returns:
            Path of the written file

        Raises:
            ConfigError: If fmt is invalid
        """
        if fmt not in FORMATS:
            raise ConfigError(f"Invalid format: {fmt}. Must be 'csv' or 'json'")

        frame = rows if isinstance(rows, pd.DataFrame) else pd.DataFrame(rows)
        path = self._ensure_parent(Path(path))

        if fmt == "csv":
            frame.to_csv(path, index=False, float_format=FLOAT_FORMAT)
        else:
            records = [
                {key: _json_value(value) for key, value in record.items()}
                for record in frame.to_dict(orient="records")
            ]
            path.write_text(json.dumps(records, indent=2) + "\n")

        logger.info("Wrote %d result rows to %s", len(frame), path)
        return path

    def read_results(self, path: Union[str, Path]) -> pd.DataFrame:
        """Reads a result table written by ``write_results``.

        The format is taken from the file suffix (.json, anything else CSV).
        """
        path = Path(path)
        if not path.is_file():
            raise DataFormatError(f"Results file not found: {path}")
        try:
            if path.suffix.lower() == ".json":
                return pd.DataFrame(json.loads(path.read_text()))
            return pd.read_csv(path, float_precision="round_trip")
        except (ValueError, pd.errors.ParserError) as e:
            raise DataFormatError(f"Cannot read results from {path}: {e}") from e

    def write_summary(self, table: pd.DataFrame, path: Union[str, Path]) -> Path:
        path = self._ensure_parent(Path(path))
        table.to_csv(path, index=False, float_format=FLOAT_FORMAT)
        return path

    def chain_path(self, name: str, directory: Optional[Path] = None) -> Path:
        """Location of a chain dump; defaults to ``<data_dir>/chains``."""
        base = Path(directory) if directory is not None else self.data_dir / "chains"
        return base / f"{name}.csv"

    def write_chain(
        self, chain: np.ndarray, name: str, directory: Optional[Path] = None
    ) -> Path:
        """Writes one row per iteration with columns theta1..theta_d.

        Args:
            chain: N x d positions
            name: File stem, e.g. 'mvn_ehmc_p0.80_rep0'
            directory: Target directory; defaults to the data directory

        Returns:
            Path to the chain file
        """
        chain = np.asarray(chain, dtype=float)
        if chain.ndim != 2:
            raise ConfigError(f"Chain must be an N x d matrix, got shape {chain.shape}")
        columns = [f"theta{k + 1}" for k in range(chain.shape[1])]
        path = self._ensure_parent(self.chain_path(name, directory))
        pd.DataFrame(chain, columns=columns).to_csv(
            path, index=False, float_format=FLOAT_FORMAT
        )
        return path

    def read_chain(self, path: Union[str, Path]) -> np.ndarray:
        values, _ = read_numeric_csv(path)
        return values

    def write_batches(self, dist: BatchDistribution, path: Union[str, Path]) -> Path:
        """Writes the learned lengths, one per line under a 'length' header."""
        path = self._ensure_parent(Path(path))
        pd.DataFrame({"length": dist.as_array()}).to_csv(path, index=False)
        return path

    def read_batches(self, path: Union[str, Path]) -> BatchDistribution:
        """Reads a batch distribution written by ``write_batches``.

        Raises:
            DataFormatError: If a length is not a positive integer
        """
        values, _ = read_numeric_csv(path)
        lengths = values[:, 0]
        bad = np.flatnonzero((lengths < 1) | (lengths != np.round(lengths)))
        if bad.size:
            raise DataFormatError(
                "Batch lengths must be positive integers", row=int(bad[0]) + 1, column=1
            )
        return BatchDistribution(tuple(int(n) for n in lengths))

    def write_mass(self, mass: MassSpec, path: Union[str, Path]) -> Path:
        """Writes a mass matrix as JSON, e.g. the diagonal adapted by 'tune'."""
        path = self._ensure_parent(Path(path))
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(mass.to_dict(), fh, indent=2)
        return path

    def read_mass(self, path: Union[str, Path]) -> MassSpec:
        """Reads a mass matrix written by ``write_mass``.

        Raises:
            ConfigError: If the file is not a valid mass description
        """
        path = Path(path)
        try:
            with open(path, encoding="utf-8") as fh:
                data = json.load(fh)
        except FileNotFoundError:
            raise ConfigError(f"Mass file not found: {path}")
        except json.JSONDecodeError as e:
            raise ConfigError(f"Mass file {path} is not valid JSON: {e}") from e
        if not isinstance(data, dict):
            raise ConfigError(f"Mass file {path} must hold a JSON object")
        return MassSpec.from_dict(data)
