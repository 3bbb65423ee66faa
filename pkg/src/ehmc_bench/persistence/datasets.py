import logging
from pathlib import Path
from typing import List, Tuple, Union

import numpy as np
import pandas as pd

from ..core.errors import DataFormatError
from ..targets.irt import IrtData
from ..targets.logistic import LogisticData, standardize_columns
from ..targets.volatility import SvData

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


def _has_header(path: Path) -> bool:
    # a header row is any first row with a non-numeric entry
    first = pd.read_csv(path, header=None, nrows=1, dtype=str)
    parsed = pd.to_numeric(first.iloc[0].str.strip(), errors="coerce")
    return bool(parsed.isna().any())


def read_numeric_csv(path: PathLike) -> Tuple[np.ndarray, List[str]]:
    """Reads a numeric CSV file; the header row is optional.

    Args:
        path: File to read

    Returns:
        (values as an N x k float matrix, column names)

    Raises:
        DataFormatError: If the file is missing, empty or holds a
            non-numeric value (with its 1-based data row and column)
    """
    path = Path(path)
    if not path.is_file():
        raise DataFormatError(f"Data file not found: {path}")

    try:
        header = _has_header(path)
        frame = pd.read_csv(path, header=0 if header else None, dtype=str)
    except pd.errors.EmptyDataError as e:
        raise DataFormatError(f"Data file is empty: {path}") from e
    except pd.errors.ParserError as e:
        raise DataFormatError(f"Cannot parse {path}: {e}") from e

    if frame.empty:
        raise DataFormatError(f"Data file has no data rows: {path}")

    values = np.empty(frame.shape)
    for k, column in enumerate(frame.columns):
        raw = frame[column].str.strip()
        parsed = pd.to_numeric(raw, errors="coerce")
        numbers = parsed.to_numpy(dtype=float)
        bad = np.flatnonzero(~np.isfinite(numbers))
        if bad.size:
            row = int(bad[0])
            raise DataFormatError(
                f"Non-numeric value {frame[column].iloc[row]!r} in {path.name}",
                row=row + 1,
                column=k + 1,
            )
        values[:, k] = numbers

    if header:
        names = [str(c) for c in frame.columns]
    else:
        names = [f"c{k + 1}" for k in range(frame.shape[1])]
    logger.debug("Read %d x %d values from %s", *values.shape, path)
    return values, names


def load_logistic_csv(path: PathLike) -> LogisticData:
    """Loads covariates and a trailing 0/1 label column, standardizing covariates.

    Raises:
        DataFormatError: On unparsable values, labels outside {0, 1}, or a
            constant covariate column
    """
    values, names = read_numeric_csv(path)
    if values.shape[1] < 2:
        raise DataFormatError("Logistic data needs covariate columns and a label column")

    X, y = values[:, :-1], values[:, -1]
    bad = np.flatnonzero((y != 0) & (y != 1))
    if bad.size:
        raise DataFormatError(
            f"Label {float(y[bad[0]])} is not 0 or 1",
            row=int(bad[0]) + 1,
            column=values.shape[1],
        )

    constant = np.flatnonzero(X.std(axis=0) == 0)
    if constant.size:
        k = int(constant[0])
        raise DataFormatError(f"Covariate column '{names[k]}' is constant", column=k + 1)

    return LogisticData(standardize_columns(X), y)


def load_sv_csv(path: PathLike) -> SvData:
    """Loads the observed series from the first column."""
    values, _ = read_numeric_csv(path)
    return SvData(values[:, 0])


def load_irt_csv(path: PathLike) -> IrtData:
    """Loads an items x persons matrix of 0/1 responses."""
    values, _ = read_numeric_csv(path)
    bad = np.argwhere((values != 0) & (values != 1))
    if bad.size:
        row, column = (int(i) for i in bad[0])
        raise DataFormatError("IRT response is not 0 or 1", row=row + 1, column=column + 1)
    return IrtData(values)


def _write(frame: pd.DataFrame, path: PathLike) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False, float_format="%.17g")
    return path


def dump_logistic_csv(data: LogisticData, path: PathLike) -> Path:
    columns = [f"x{k + 1}" for k in range(data.n_covariates)]
    frame = pd.DataFrame(data.X, columns=columns)
    frame["y"] = data.y.astype(int)
    return _write(frame, path)


def dump_sv_csv(data: SvData, path: PathLike) -> Path:
    return _write(pd.DataFrame({"y": data.y}), path)


def dump_irt_csv(data: IrtData, path: PathLike) -> Path:
    columns = [f"p{j + 1}" for j in range(data.n_persons)]
    return _write(pd.DataFrame(data.y.astype(int), columns=columns), path)
