from typing import Any, Callable

from django.conf import settings
from rest_framework import serializers

from .analysis import DerivativeExtremum, Discontinuity, ExtremumKind, ScalingFit
from .exceptions import InvalidLatticeError
from .lattice import LatticeSpec, Model
from .sweep import StateKind

MEASURE_CHOICES = ("both", "sp", "concurrence")


def from_settings(name: str) -> Callable[[], Any]:
    """Serializer default read from settings when a config is validated."""
    return lambda: getattr(settings, name)


def fit_window(model: str, measure: str) -> Callable[[], list[float]]:
    return lambda: list(settings.FIT_WINDOWS[model][measure][:2])


class WindowField(serializers.ListField):
    """A (lo, hi) pair with lo < hi."""

    def __init__(self, **kwargs: Any) -> None:
        super().__init__(
            child=serializers.FloatField(), min_length=2, max_length=2, **kwargs
        )

    def to_internal_value(self, data: Any) -> list[float]:
        window = super().to_internal_value(data)
        if not window[0] < window[1]:
            raise serializers.ValidationError("window must satisfy lo < hi.")
        return window


class RunConfigSerializer(serializers.Serializer):
    """
    Validates a sweep configuration.

    The config file is a JSON object with these field names as keys;
    command-line flags override the file. Dumping validated data through
    this serializer reproduces the same config.
    """

    model = serializers.ChoiceField(choices=[m.value for m in Model])
    n = serializers.IntegerField(required=False, allow_null=True, default=None)
    rows = serializers.IntegerField(required=False, allow_null=True, default=None)
    cols = serializers.IntegerField(required=False, allow_null=True, default=None)
    param_from = serializers.FloatField(min_value=0.0)
    param_to = serializers.FloatField(min_value=0.0)
    steps = serializers.IntegerField(min_value=1)
    measure = serializers.ChoiceField(choices=MEASURE_CHOICES, default="both")
    pair = serializers.ListField(
        child=serializers.IntegerField(min_value=0),
        min_length=2,
        max_length=2,
        default=lambda: [0, 1],
    )
    state = serializers.ChoiceField(
        choices=[s.value for s in StateKind], default=StateKind.MIXTURE.value
    )
    level = serializers.IntegerField(min_value=0, default=0)
    k_max = serializers.IntegerField(
        min_value=0, default=from_settings("MIXTURE_K_MAX")
    )
    restarts = serializers.IntegerField(
        min_value=1, default=from_settings("OPTIMIZER_RESTARTS")
    )
    optimizer_tol = serializers.FloatField(
        min_value=0.0, default=from_settings("OPTIMIZER_TOLERANCE")
    )
    max_alternations = serializers.IntegerField(
        min_value=1, default=from_settings("OPTIMIZER_MAX_ALTERNATIONS")
    )
    seed = serializers.IntegerField(min_value=0, default=from_settings("DEFAULT_SEED"))
    pairs = serializers.IntegerField(
        min_value=1, default=from_settings("EIGEN_REQUESTED_PAIRS")
    )
    block_size = serializers.IntegerField(
        min_value=1, default=from_settings("EIGEN_BLOCK_SIZE")
    )
    residual_tol = serializers.FloatField(
        min_value=0.0, default=from_settings("EIGEN_RESIDUAL_TOLERANCE")
    )
    degeneracy_tol = serializers.FloatField(
        min_value=0.0, default=from_settings("DEGENERACY_TOLERANCE")
    )
    max_iterations = serializers.IntegerField(
        min_value=1, default=from_settings("EIGEN_MAX_ITERATIONS")
    )
    retained_levels = serializers.IntegerField(
        min_value=1, default=from_settings("RETAINED_LEVELS")
    )
    threads = serializers.IntegerField(
        min_value=1, default=from_settings("SWEEP_THREADS")
    )
    output = serializers.CharField(required=False, allow_null=True, default=None)

    def validate(self, data: dict[str, Any]) -> dict[str, Any]:
        """Cross-field checks: lattice size, pair, grid and level counts."""
        model = Model(data["model"])
        try:
            if model is Model.J1J2_SQUARE:
                rows, cols = data["rows"] or 4, data["cols"] or 4
                if data["n"] is not None and data["n"] != rows * cols:
                    raise serializers.ValidationError(
                        {"n": f"must equal rows * cols = {rows * cols}."}
                    )
                spec = LatticeSpec.square(rows, cols)
                data.update(n=spec.sites, rows=rows, cols=cols)
            else:
                if data["n"] is None:
                    raise serializers.ValidationError(
                        {"n": "required for chain models."}
                    )
                spec = LatticeSpec.chain(model, data["n"])
                data.update(rows=None, cols=None)
        except InvalidLatticeError as e:
            raise serializers.ValidationError({"n": str(e)}) from e

        a, b = data["pair"]
        if a == b or max(a, b) >= spec.sites:
            raise serializers.ValidationError(
                {"pair": f"must name two distinct sites below {spec.sites}."}
            )
        if data["steps"] == 1 and data["param_from"] != data["param_to"]:
            raise serializers.ValidationError(
                {"steps": "a single-step sweep needs param_from == param_to."}
            )
        if data["steps"] > 1 and not data["param_from"] < data["param_to"]:
            raise serializers.ValidationError({"param_to": "must exceed param_from."})
        if data["k_max"] >= data["retained_levels"]:
            raise serializers.ValidationError(
                {"k_max": f"must be below retained_levels ({data['retained_levels']})."}
            )
        if data["level"] >= data["retained_levels"]:
            raise serializers.ValidationError(
                {"level": f"must be below retained_levels ({data['retained_levels']})."}
            )
        if not data["output"]:
            data["output"] = f"{spec.label()}.csv"
        return data


class AnalysisConfigSerializer(serializers.Serializer):
    """Validates the options of `manage.py analyze`."""

    sweeps = serializers.ListField(child=serializers.CharField(), min_length=1)
    jump_threshold = serializers.FloatField(
        min_value=0.0, required=False, allow_null=True, default=None
    )
    jump_factor = serializers.FloatField(
        min_value=0.0, default=from_settings("JUMP_THRESHOLD_FACTOR")
    )
    refine = serializers.BooleanField(default=False)
    refine_tol = serializers.FloatField(
        min_value=0.0, default=from_settings("REFINE_TOLERANCE")
    )
    positions_measure = serializers.ChoiceField(
        choices=("sp", "concurrence"), default="concurrence"
    )
    c_min_window = WindowField(default=fit_window("tfim", "concurrence"))
    sp_max_window = WindowField(default=fit_window("tfim", "sp"))
    sp_2d_window = WindowField(default=fit_window("j1j2-2d", "sp"))
    region = WindowField(required=False, allow_null=True, default=None)
    output_dir = serializers.CharField(required=False, allow_null=True, default=None)


class DiscontinuitySerializer(serializers.Serializer):
    location = serializers.FloatField()
    jump = serializers.FloatField()
    refined = serializers.BooleanField()
    bracket_width = serializers.FloatField()
    lo = serializers.FloatField()
    hi = serializers.FloatField()
    measure = serializers.CharField()


class DerivativeExtremumSerializer(serializers.Serializer):
    location = serializers.FloatField()
    kind = serializers.ChoiceField(
        choices=[k.value for k in ExtremumKind], source="kind.value"
    )
    fit_window = serializers.ListField(child=serializers.FloatField())
    fit_coeffs = serializers.ListField(child=serializers.FloatField())
    source = serializers.CharField(source="source.value")
    measure = serializers.CharField()


class ScalingFitSerializer(serializers.Serializer):
    exponent = serializers.FloatField()
    intercept = serializers.FloatField()
    r_squared = serializers.FloatField()
    asymptotic_critical_point = serializers.FloatField()
    points = serializers.SerializerMethodField()
    sign = serializers.CharField()

    def get_points(self, obj: Any) -> list[list[float]]:
        return [[n, value] for n, value in obj.points]


def report_payload(value: Any) -> Any:
    """Turn analysis results, possibly nested in dicts and lists, into JSON data."""
    if isinstance(value, Discontinuity):
        return DiscontinuitySerializer(value).data
    if isinstance(value, DerivativeExtremum):
        return DerivativeExtremumSerializer(value).data
    if isinstance(value, ScalingFit):
        return ScalingFitSerializer(value).data
    if isinstance(value, dict):
        return {key: report_payload(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [report_payload(item) for item in value]
    return value
