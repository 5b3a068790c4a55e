import math
from pathlib import Path

import pytest

from ..exceptions import SchemaError
from ..files import (
    CSV_COLUMNS,
    format_float,
    manifest_path,
    read_json,
    read_sweep_csv,
    write_json,
    write_sweep_csv,
)
from .conftest import synthetic_chain_sweep

HEADER = ",".join(CSV_COLUMNS)


class TestSweepCsv:
    """Test cases for the sweep CSV layout."""

    def test_layout(self, tmp_path: Path) -> None:
        path = write_sweep_csv(tmp_path / "chain.csv", synthetic_chain_sweep())
        raw = path.read_bytes()
        assert b"\r" not in raw
        assert raw.endswith(b"\n")
        lines = raw.decode().splitlines()
        assert lines[0] == HEADER
        assert len(lines) == 152
        first = lines[1].split(",")
        assert first[0] == "0.20000000000000001"
        # two levels stored, the rest padded
        assert first[-6:] == ["nan", "0", "nan", "0", "nan", "0"]

    def test_values_survive_reading(self, tmp_path: Path) -> None:
        sweep = synthetic_chain_sweep(measure="concurrence")
        points = read_sweep_csv(write_sweep_csv(tmp_path / "chain.csv", sweep))
        assert len(points) == len(sweep.points)
        for stored, original in zip(points, sweep.points):
            assert stored.param == original.param
            assert stored.concurrence == original.concurrence
            assert math.isnan(stored.sp)
            assert stored.energies == original.energies
            assert stored.degeneracies == (1, 3)

    def test_no_temporary_files_left(self, tmp_path: Path) -> None:
        write_sweep_csv(tmp_path / "chain.csv", synthetic_chain_sweep())
        assert [p.name for p in tmp_path.iterdir()] == ["chain.csv"]

    def test_format_float(self) -> None:
        assert format_float(0.1) == "0.10000000000000001"
        assert format_float(1.0) == "1"
        assert format_float(float("nan")) == "nan"


class TestReadSweepCsv:
    """Test cases for schema errors when reading sweeps."""

    def write(self, tmp_path: Path, text: str) -> Path:
        path = tmp_path / "sweep.csv"
        path.write_text(text)
        return path

    def test_empty_file(self, tmp_path: Path) -> None:
        with pytest.raises(SchemaError, match="empty"):
            read_sweep_csv(self.write(tmp_path, ""))

    def test_header_difference_is_listed(self, tmp_path: Path) -> None:
        header = HEADER.replace("f_local", "f_loc")
        with pytest.raises(SchemaError) as excinfo:
            read_sweep_csv(self.write(tmp_path, header + "\n"))
        assert "missing ['f_local']" in str(excinfo.value)
        assert "unexpected ['f_loc']" in str(excinfo.value)

    def test_short_row(self, tmp_path: Path) -> None:
        with pytest.raises(SchemaError, match=":2 has 3 fields"):
            read_sweep_csv(self.write(tmp_path, HEADER + "\n0.1,0.2,0.3\n"))

    def test_unparsable_value(self, tmp_path: Path) -> None:
        row = ",".join(["abc"] + ["0"] * (len(CSV_COLUMNS) - 1))
        with pytest.raises(SchemaError):
            read_sweep_csv(self.write(tmp_path, f"{HEADER}\n{row}\n"))

    def test_header_without_rows(self, tmp_path: Path) -> None:
        with pytest.raises(SchemaError, match="no rows"):
            read_sweep_csv(self.write(tmp_path, HEADER + "\n"))


class TestJson:
    """Test cases for manifests and reports."""

    def test_manifest_sits_next_to_the_csv(self) -> None:
        assert manifest_path("runs/tfim-n10.csv") == Path("runs/tfim-n10.json")

    def test_sorted_and_newline_terminated(self, tmp_path: Path) -> None:
        path = write_json(tmp_path / "out" / "report.json", {"b": 1, "a": [0.5]})
        text = path.read_text()
        assert text.index('"a"') < text.index('"b"')
        assert text.endswith("}\n")
        assert read_json(path) == {"a": [0.5], "b": 1}

    def test_invalid_json(self, tmp_path: Path) -> None:
        path = tmp_path / "broken.json"
        path.write_text("{not json")
        with pytest.raises(SchemaError):
            read_json(path)
