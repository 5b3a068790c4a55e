import logging
from pathlib import Path
from typing import Any

from django.core.management.base import BaseCommand, CommandError

from ...exceptions import CriticalityError, SchemaError
from ...files import write_json
from ...lattice import Model
from ...serializers import AnalysisConfigSerializer, report_payload
from ...services import AnalysisService, load_sweep
from . import CONFIG_ERROR, IO_ERROR, NUMERICAL_ERROR, format_errors

logger = logging.getLogger(__name__)


class Command(BaseCommand):
    """
    Management command locating pseudo-critical points in stored sweeps.

    Each sweep CSV yields `<stem>.analysis.json`; several sweeps of one
    chain model additionally yield `scaling.json`.
    """

    help = "Detect discontinuities and derivative extrema, and fit finite-size scaling"

    def add_arguments(self, parser) -> None:
        """Add command line arguments."""
        parser.add_argument("sweeps", nargs="+", help="Sweep CSV files with manifests")
        parser.add_argument(
            "--threshold",
            dest="jump_threshold",
            type=float,
            help="Absolute jump threshold; default is a multiple of the median step",
        )
        parser.add_argument("--factor", dest="jump_factor", type=float)
        parser.add_argument(
            "--refine",
            action="store_true",
            help="Bisect discontinuities by re-evaluating the point pipeline",
        )
        parser.add_argument("--refine-tol", dest="refine_tol", type=float)
        parser.add_argument(
            "--positions-measure",
            dest="positions_measure",
            choices=["sp", "concurrence"],
            help="Measure defining near/far positions of the J1-J2 chain",
        )
        for flag, dest in (
            ("--c-min-window", "c_min_window"),
            ("--sp-max-window", "sp_max_window"),
            ("--sp-2d-window", "sp_2d_window"),
            ("--region", "region"),
        ):
            parser.add_argument(
                flag, dest=dest, type=float, nargs=2, metavar=("LO", "HI")
            )
        parser.add_argument("--output-dir", dest="output_dir", type=str)

    def handle(self, *args: Any, **options: Any) -> None:
        """Analyze every sweep, then fit the series when there is one."""
        fields = AnalysisConfigSerializer().fields
        data = {
            k: v
            for k, v in options.items()
            if k in fields and v is not None and v is not False
        }
        serializer = AnalysisConfigSerializer(data=data)
        if not serializer.is_valid():
            raise CommandError(
                f"invalid analysis config: {format_errors(serializer.errors)}",
                returncode=CONFIG_ERROR,
            )
        config = serializer.validated_data
        service = AnalysisService(config)

        runs = []
        for name in config["sweeps"]:
            csv_path = Path(name)
            try:
                sweep, _ = load_sweep(csv_path)
            except OSError as e:
                raise CommandError(
                    f"cannot read {csv_path}: {e}", returncode=IO_ERROR
                ) from e
            except SchemaError as e:
                raise CommandError(str(e), returncode=CONFIG_ERROR) from e
            try:
                report = service.analyze(sweep)
            except (CriticalityError, ValueError) as e:
                raise CommandError(
                    f"{csv_path}: {e}", returncode=NUMERICAL_ERROR
                ) from e
            logger.info(f"Analyzed {sweep.spec.label()} from {csv_path}")
            runs.append((sweep, report))

            payload = {
                "sweep": str(csv_path),
                "lattice": sweep.spec.label(),
                "points": len(sweep.points),
                **report_payload(report),
            }
            directory = self.output_dir(config, csv_path)
            target = directory / f"{csv_path.stem}.analysis.json"
            self.write(target, payload)

        chains = {sweep.spec.model for sweep, _ in runs} - {Model.J1J2_SQUARE}
        if len(runs) > 1 and chains:
            try:
                scaling = service.scaling(runs)
            except CriticalityError as e:
                raise CommandError(str(e), returncode=NUMERICAL_ERROR) from e
            target = self.output_dir(config, Path(config["sweeps"][0])) / "scaling.json"
            self.write(target, report_payload(scaling))

    def output_dir(self, config: dict[str, Any], csv_path: Path) -> Path:
        if config.get("output_dir"):
            return Path(config["output_dir"])
        return csv_path.parent

    def write(self, target: Path, payload: Any) -> None:
        try:
            write_json(target, payload)
        except OSError as e:
            raise CommandError(
                f"cannot write {target}: {e}", returncode=IO_ERROR
            ) from e
        self.stdout.write(self.style.SUCCESS(f"Wrote {target}"))
