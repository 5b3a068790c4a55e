import logging
import time
from pathlib import Path
from typing import Any

from django.core.management.base import BaseCommand, CommandError

from ...exceptions import CriticalityError
from ...files import manifest_path, read_json, write_json, write_sweep_csv
from ...lattice import Model
from ...serializers import MEASURE_CHOICES, RunConfigSerializer
from ...services import SweepService
from . import CONFIG_ERROR, IO_ERROR, NUMERICAL_ERROR, format_errors

logger = logging.getLogger(__name__)

# Flag destinations that map one-to-one onto RunConfig fields.
CONFIG_FLAGS = (
    "model",
    "n",
    "rows",
    "cols",
    "param_from",
    "param_to",
    "steps",
    "measure",
    "pair",
    "state",
    "level",
    "k_max",
    "restarts",
    "optimizer_tol",
    "max_alternations",
    "seed",
    "pairs",
    "block_size",
    "residual_tol",
    "degeneracy_tol",
    "max_iterations",
    "retained_levels",
    "threads",
    "output",
)


class Command(BaseCommand):
    """
    Management command running a parameter sweep and writing CSV + manifest.
    """

    help = "Sweep alpha or lambda and write the measures of the low-lying mixture"

    def add_arguments(self, parser) -> None:
        """Add command line arguments; unset flags fall back to --config"""
        parser.add_argument("--config", type=str, help="JSON file of RunConfig fields")
        parser.add_argument(
            "--model", choices=[m.value for m in Model], help="Spin model"
        )
        parser.add_argument("--n", type=int, help="Chain length")
        parser.add_argument("--rows", type=int, help="Square-lattice rows")
        parser.add_argument("--cols", type=int, help="Square-lattice columns")
        parser.add_argument(
            "--from", dest="param_from", type=float, help="First parameter value"
        )
        parser.add_argument(
            "--to", dest="param_to", type=float, help="Last parameter value"
        )
        parser.add_argument("--steps", type=int, help="Number of grid points")
        parser.add_argument("--measure", choices=MEASURE_CHOICES)
        parser.add_argument("--pair", type=int, nargs=2, metavar=("A", "B"))
        parser.add_argument("--state", choices=["mixture", "level"])
        parser.add_argument("--level", type=int, help="Level index when --state level")
        parser.add_argument("--k-max", dest="k_max", type=int)
        parser.add_argument("--restarts", type=int, help="Random optimizer starts")
        parser.add_argument("--optimizer-tol", dest="optimizer_tol", type=float)
        parser.add_argument("--max-alternations", dest="max_alternations", type=int)
        parser.add_argument(
            "--seed", type=int, help="Eigensolver seed; the optimizer uses seed + 1"
        )
        parser.add_argument("--pairs", type=int, help="Initial eigenpair count")
        parser.add_argument("--block-size", dest="block_size", type=int)
        parser.add_argument("--residual-tol", dest="residual_tol", type=float)
        parser.add_argument("--degeneracy-tol", dest="degeneracy_tol", type=float)
        parser.add_argument("--max-iterations", dest="max_iterations", type=int)
        parser.add_argument("--retained-levels", dest="retained_levels", type=int)
        parser.add_argument("--threads", type=int, help="Worker processes")
        parser.add_argument(
            "--output", type=str, help="CSV path; the manifest goes next to it"
        )
        parser.add_argument(
            "--progress", action="store_true", help="Show a progress bar"
        )

    def load_config(self, options: dict[str, Any]) -> dict[str, Any]:
        data: dict[str, Any] = {}
        if options.get("config"):
            try:
                data = read_json(options["config"])
            except OSError as e:
                raise CommandError(
                    f"cannot read config: {e}", returncode=IO_ERROR
                ) from e
            except CriticalityError as e:
                raise CommandError(str(e), returncode=CONFIG_ERROR) from e
            if not isinstance(data, dict):
                raise CommandError(
                    "config file must hold a JSON object", returncode=CONFIG_ERROR
                )
        data.update({k: options[k] for k in CONFIG_FLAGS if options.get(k) is not None})

        serializer = RunConfigSerializer(data=data)
        if not serializer.is_valid():
            raise CommandError(
                f"invalid config: {format_errors(serializer.errors)}",
                returncode=CONFIG_ERROR,
            )
        return dict(serializer.validated_data)

    def handle(self, *args: Any, **options: Any) -> None:
        """Validate the config, run the sweep and write both files."""
        config = self.load_config(options)
        service = SweepService(config)
        logger.debug(f"Validated sweep config: {config}")

        started = time.perf_counter()
        try:
            sweep = service.run(progress=options.get("progress", False))
        except CriticalityError as e:
            raise CommandError(str(e), returncode=NUMERICAL_ERROR) from e
        wall_time = time.perf_counter() - started

        output = Path(config["output"])
        try:
            write_sweep_csv(output, sweep)
            write_json(manifest_path(output), service.manifest(sweep, wall_time))
        except OSError as e:
            raise CommandError(
                f"cannot write {output}: {e}", returncode=IO_ERROR
            ) from e

        self.stdout.write(
            self.style.SUCCESS(
                f"Wrote {len(sweep.points)} points of {service.spec.label()} "
                f"to {output} "
                f"in {wall_time:.1f}s"
            )
        )
