import numpy as np
import pytest

from ehmc_bench.core import DataFormatError
from ehmc_bench.persistence import (
    dump_irt_csv,
    dump_logistic_csv,
    dump_sv_csv,
    load_irt_csv,
    load_logistic_csv,
    load_sv_csv,
    read_numeric_csv,
)
from ehmc_bench.targets import irt_simulate, logistic_simulate, sv_simulate


def write(path, text):
    path.write_text(text)
    return path


class TestReadNumericCsv:
    """Tests the numeric CSV reader."""

    def test_with_header(self, tmp_path):
        """Tests that a non-numeric first row is taken as the header."""
        path = write(tmp_path / "data.csv", "a,b\n1,2\n3.5,-4e-3\n")
        values, names = read_numeric_csv(path)

        assert names == ["a", "b"]
        assert np.array_equal(values, [[1.0, 2.0], [3.5, -4e-3]])

    def test_without_header(self, tmp_path):
        """Tests that an all-numeric first row is data."""
        path = write(tmp_path / "data.csv", "1,2\n3,4\n")
        values, names = read_numeric_csv(path)

        assert names == ["c1", "c2"]
        assert values.shape == (2, 2)

    def test_bad_value_location(self, tmp_path):
        """Tests that a non-numeric cell is reported by 1-based row and column."""
        path = write(tmp_path / "data.csv", "a,b\n1,2\n3,4\n5,oops\n")
        with pytest.raises(DataFormatError, match=r"\(row 3, column 2\)") as excinfo:
            read_numeric_csv(path)

        assert excinfo.value.row == 3
        assert excinfo.value.column == 2

    def test_missing_value(self, tmp_path):
        """Tests that an empty cell is rejected."""
        path = write(tmp_path / "data.csv", "a,b\n1,\n")
        with pytest.raises(DataFormatError, match="row 1, column 2"):
            read_numeric_csv(path)

    def test_missing_file(self, tmp_path):
        """Tests that a missing file raises DataFormatError."""
        with pytest.raises(DataFormatError, match="not found"):
            read_numeric_csv(tmp_path / "nope.csv")

    def test_empty_file(self, tmp_path):
        """Tests that an empty file raises DataFormatError."""
        with pytest.raises(DataFormatError, match="empty"):
            read_numeric_csv(write(tmp_path / "data.csv", ""))

    def test_header_only(self, tmp_path):
        """Tests that a header without data rows is rejected."""
        with pytest.raises(DataFormatError, match="no data rows"):
            read_numeric_csv(write(tmp_path / "data.csv", "a,b\n"))


class TestLogisticCsv:
    """Tests loading logistic regression data."""

    def test_standardizes_covariates(self, tmp_path):
        """Tests that covariates come back with zero mean and unit variance."""
        path = write(tmp_path / "logit.csv", "x1,x2,y\n1,10,0\n2,20,1\n3,40,1\n4,30,0\n")
        data = load_logistic_csv(path)

        assert data.X.shape == (4, 2)
        assert np.allclose(data.X.mean(axis=0), 0.0)
        assert np.allclose(data.X.std(axis=0), 1.0)
        assert np.array_equal(data.y, [0.0, 1.0, 1.0, 0.0])

    def test_label_outside_zero_one(self, tmp_path):
        """Tests that a label of 2 is reported with its row."""
        path = write(tmp_path / "logit.csv", "x1,y\n1,0\n2,2\n")
        with pytest.raises(DataFormatError, match="row 2, column 2"):
            load_logistic_csv(path)

    def test_constant_covariate(self, tmp_path):
        """Tests that a constant covariate column cannot be standardized."""
        path = write(tmp_path / "logit.csv", "x1,x2,y\n1,5,0\n2,5,1\n")
        with pytest.raises(DataFormatError, match="'x2' is constant"):
            load_logistic_csv(path)

    def test_needs_a_label_column(self, tmp_path):
        """Tests that a single column is rejected."""
        with pytest.raises(DataFormatError, match="label column"):
            load_logistic_csv(write(tmp_path / "logit.csv", "1\n0\n"))

    def test_dump_then_load(self, tmp_path, rng):
        """Tests that dumped standardized data loads back unchanged."""
        data = logistic_simulate(40, 3, rng)
        loaded = load_logistic_csv(dump_logistic_csv(data, tmp_path / "logit.csv"))

        assert np.allclose(loaded.X, data.X)
        assert np.array_equal(loaded.y, data.y)


class TestSvAndIrtCsv:
    """Tests loading volatility and item response data."""

    def test_sv_series(self, tmp_path, rng):
        """Tests that the series is read bit-exactly from the first column."""
        data = sv_simulate(20, 0.98, 0.65, 0.15, rng)
        loaded = load_sv_csv(dump_sv_csv(data, tmp_path / "sv.csv"))
        assert np.array_equal(loaded.y, data.y)

    def test_irt_matrix(self, tmp_path, rng):
        """Tests that the response matrix keeps its items x persons shape."""
        data = irt_simulate(3, 5, rng)
        loaded = load_irt_csv(dump_irt_csv(data, tmp_path / "irt.csv"))

        assert loaded.n_items == 3
        assert loaded.n_persons == 5
        assert np.array_equal(loaded.y, data.y)

    def test_irt_non_binary_response(self, tmp_path):
        """Tests that a response outside {0, 1} is located."""
        path = write(tmp_path / "irt.csv", "1,0,1\n0,1,3\n")
        with pytest.raises(DataFormatError, match="row 2, column 3"):
            load_irt_csv(path)
