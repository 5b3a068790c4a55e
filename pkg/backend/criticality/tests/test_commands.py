import json
from io import StringIO
from pathlib import Path
from unittest.mock import patch

import numpy as np
import pytest
from django.core.management import call_command
from django.core.management.base import CommandError

from ..exceptions import ConvergenceError
from ..files import CSV_COLUMNS
from ..lattice import LatticeSpec, Model
from ..management.commands import CONFIG_ERROR, IO_ERROR, NUMERICAL_ERROR
from ..sweep import SweepPoint, SweepResult
from .conftest import synthetic_chain_sweep, write_sweep_files

TINY_TFIM = ("--model=tfim", "--n=6", "--from=0.5", "--to=1.5", "--steps=3")


def tfim_sweep_files(directory: Path) -> Path:
    grid = np.linspace(0.9, 1.1, 5)
    points = tuple(
        SweepPoint(float(x), 0.1, 0.2, 0.5, 0.4, (-8.0, -6.0), (1, 1)) for x in grid
    )
    sweep = SweepResult(
        spec=LatticeSpec.chain(Model.TFIM_CHAIN, 8),
        pair=(0, 1),
        grid=grid,
        points=points,
    )
    return write_sweep_files(directory, sweep)


class TestSweepCommand:
    """Test cases for `manage.py sweep`."""

    def test_writes_csv_and_manifest(self, tmp_path: Path) -> None:
        output = tmp_path / "runs" / "tfim.csv"
        out = StringIO()
        call_command("sweep", *TINY_TFIM, f"--output={output}", stdout=out)

        lines = output.read_bytes().decode().split("\n")
        assert lines[0] == ",".join(CSV_COLUMNS)
        assert lines[-1] == ""
        rows = [line.split(",") for line in lines[1:-1]]
        assert [row[0] for row in rows] == ["0.5", "1", "1.5"]
        assert all(float(row[1]) >= 0.0 for row in rows)
        assert "\r" not in output.read_text()

        manifest = json.loads((tmp_path / "runs" / "tfim.json").read_text())
        assert manifest["config"]["model"] == "tfim"
        assert manifest["config"]["steps"] == 3
        assert manifest["seeds"] == {"eigensolver": 1234, "optimizer": 1235}
        assert manifest["points"] == 3
        assert "Wrote 3 points of tfim-n6" in out.getvalue()

    def test_flags_override_config_file(self, tmp_path: Path) -> None:
        config = tmp_path / "run.json"
        config.write_text(
            json.dumps(
                {
                    "model": "tfim",
                    "n": 6,
                    "param_from": 0.5,
                    "param_to": 1.5,
                    "steps": 5,
                    "measure": "concurrence",
                }
            )
        )
        output = tmp_path / "override.csv"
        call_command("sweep", f"--config={config}", "--steps=2", f"--output={output}")
        rows = output.read_text().splitlines()[1:]
        assert len(rows) == 2
        assert all(row.split(",")[1] == "nan" for row in rows)

    def test_missing_model(self, tmp_path: Path) -> None:
        with pytest.raises(CommandError, match="model") as excinfo:
            call_command("sweep", "--n=6", "--from=0.5", "--to=1.5", "--steps=3")
        assert excinfo.value.returncode == CONFIG_ERROR

    def test_invalid_config_file(self, tmp_path: Path) -> None:
        config = tmp_path / "run.json"
        config.write_text("{")
        with pytest.raises(CommandError) as excinfo:
            call_command("sweep", f"--config={config}")
        assert excinfo.value.returncode == CONFIG_ERROR

    def test_missing_config_file(self, tmp_path: Path) -> None:
        with pytest.raises(CommandError) as excinfo:
            call_command("sweep", f"--config={tmp_path / 'absent.json'}")
        assert excinfo.value.returncode == IO_ERROR

    def test_unwritable_output(self, tmp_path: Path) -> None:
        blocker = tmp_path / "blocker"
        blocker.write_text("")
        with pytest.raises(CommandError) as excinfo:
            call_command(
                "sweep",
                "--model=tfim",
                "--n=6",
                "--from=1.0",
                "--to=1.0",
                "--steps=1",
                f"--output={blocker / 'out.csv'}",
            )
        assert excinfo.value.returncode == IO_ERROR

    def test_numerical_failure(self, tmp_path: Path) -> None:
        with patch(
            "criticality.services.run_sweep",
            side_effect=ConvergenceError("cap reached"),
        ), pytest.raises(CommandError) as excinfo:
            call_command("sweep", *TINY_TFIM, f"--output={tmp_path / 'x.csv'}")
        assert excinfo.value.returncode == NUMERICAL_ERROR
        assert not (tmp_path / "x.csv").exists()


class TestAnalyzeCommand:
    """Test cases for `manage.py analyze`."""

    def test_writes_chain_report(self, tmp_path: Path) -> None:
        csv_path = write_sweep_files(tmp_path, synthetic_chain_sweep())
        call_command("analyze", str(csv_path), stdout=StringIO())
        report = json.loads((tmp_path / "j1j2-1d-n8.analysis.json").read_text())
        assert report["lattice"] == "j1j2-1d-n8"
        assert report["points"] == 151
        assert report["near"]["location"] == pytest.approx(0.2465)
        assert report["far"]["location"] == pytest.approx(0.3125)
        assert report["coincidence"] == 0.0
        assert not (tmp_path / "scaling.json").exists()

    def test_series_writes_scaling(self, tmp_path: Path) -> None:
        paths = [
            str(write_sweep_files(tmp_path, synthetic_chain_sweep(n=n)))
            for n in (8, 9, 10)
        ]
        output_dir = tmp_path / "reports"
        call_command("analyze", *paths, f"--output-dir={output_dir}", stdout=StringIO())
        scaling = json.loads((output_dir / "scaling.json").read_text())
        assert scaling["model"] == "j1j2-1d"
        assert scaling["fits"] == {}
        assert len(scaling["skipped"]) == 4
        assert (output_dir / "j1j2-1d-n9.analysis.json").exists()

    def test_empty_sweep_file(self, tmp_path: Path) -> None:
        csv_path = write_sweep_files(tmp_path, synthetic_chain_sweep())
        csv_path.write_text("")
        with pytest.raises(CommandError, match="empty") as excinfo:
            call_command("analyze", str(csv_path))
        assert excinfo.value.returncode == CONFIG_ERROR

    def test_missing_manifest(self, tmp_path: Path) -> None:
        with pytest.raises(CommandError) as excinfo:
            call_command("analyze", str(tmp_path / "absent.csv"))
        assert excinfo.value.returncode == CONFIG_ERROR

    def test_sparse_fit_window(self, tmp_path: Path) -> None:
        with pytest.raises(CommandError, match="at least 8") as excinfo:
            call_command("analyze", str(tfim_sweep_files(tmp_path)))
        assert excinfo.value.returncode == NUMERICAL_ERROR

    def test_unwritable_output_dir(self, tmp_path: Path) -> None:
        csv_path = write_sweep_files(tmp_path, synthetic_chain_sweep())
        blocker = tmp_path / "blocker"
        blocker.write_text("")
        with pytest.raises(CommandError) as excinfo:
            call_command("analyze", str(csv_path), f"--output-dir={blocker}")
        assert excinfo.value.returncode == IO_ERROR

    def test_invalid_window(self, tmp_path: Path) -> None:
        csv_path = write_sweep_files(tmp_path, synthetic_chain_sweep())
        with pytest.raises(CommandError, match="c_min_window") as excinfo:
            call_command("analyze", str(csv_path), "--c-min-window", "1.1", "0.9")
        assert excinfo.value.returncode == CONFIG_ERROR
