from .datasets import (
    dump_irt_csv,
    dump_logistic_csv,
    dump_sv_csv,
    load_irt_csv,
    load_logistic_csv,
    load_sv_csv,
    read_numeric_csv,
)
from .results_store import FLOAT_FORMAT, ResultStore

__all__ = [
    "dump_irt_csv",
    "dump_logistic_csv",
    "dump_sv_csv",
    "load_irt_csv",
    "load_logistic_csv",
    "load_sv_csv",
    "read_numeric_csv",
    "FLOAT_FORMAT",
    "ResultStore",
]
