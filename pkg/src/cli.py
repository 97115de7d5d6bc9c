"""Command-line front end: harmonic-lattice <command> [options].

Exit codes: 0 success, 1 computational failure or a failed check, 2 usage error.
"""
from __future__ import annotations

import argparse
import io
import json
import logging
import sys
from typing import Any, Dict, List, Literal, Sequence, Tuple

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from . import __version__
from .analysis.decay import MIN_FIT_POINTS
from .analysis.verify import (
    Check,
    default_fixed_x_times,
    default_weighted_times,
    fixed_x_report,
    fixed_x_tolerance,
    verify_light_cone,
    verify_uniform_decay,
    verify_weighted_decay,
)
from .dynamics.evolution import (
    commutator_bound,
    commutator_norm_from_phase,
    commutator_phase,
    reduce_degenerate,
)
from .dynamics.lattice import LatticeFunction
from .errors import ConfigError, LatticeError, NoConvergence
from .finitevol import compare_finite_infinite
from .kernels.base import QuadratureSpec
from .kernels.quadrature import kernel_table
from .model import ModelParams, critical_points, hessian_determinant
from .services.reporting import (
    Row,
    format_probe,
    parse_probe,
    parse_site,
    write_checks,
    write_csv,
    write_json,
)
from .services.selftest import run_selftest
from .settings import Settings, get_settings

LOGGER = logging.getLogger(__name__)

VERIFY_TARGETS = {
    "uniform": "uniform",
    "fixed-x": "fixed-x",
    "light-cone": "light-cone",
    # Aliases
    "thm-2.1": "uniform",
    "thm-2.2": "uniform",
    "thm-2.3": "fixed-x",
    "figure-1": "light-cone",
}
DEFAULT_DIMENSION = {"thm-2.1": 2}
GUARDED_COMMANDS = ("verify",)


class OutputConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    format: Literal["csv", "json"] = "csv"
    path: str | None = None


class RunConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    command: str
    model: ModelParams
    quadrature: QuadratureSpec = Field(default_factory=QuadratureSpec)
    output: OutputConfig = Field(default_factory=OutputConfig)
    allow_large: bool = False

    times: List[float] | None = None
    radius: int = Field(default=2, ge=0)
    kernels: List[int] | None = None
    f: str | None = None
    g: str | None = None
    target: str | None = None
    x: str | None = None
    x_max: int = Field(default=48, ge=0)
    volumes: List[int] | None = None

    @field_validator("kernels")
    @classmethod
    def _known_kernels(cls, value: List[int] | None) -> List[int] | None:
        if value is not None and not set(value) <= {-1, 0, 1}:
            raise ValueError(f"kernel indices must be among -1, 0, 1, got {value}")
        return value

    @model_validator(mode="after")
    def _check_command_options(self) -> "RunConfig":
        if self.kernels and -1 in self.kernels and self.model.is_gapless:
            raise ValueError("H^(-1) is undefined for a gapless model; drop -1 from --m")
        fixed_x = self.command == "verify" and VERIFY_TARGETS.get(self.target or "") == "fixed-x"
        if fixed_x and self.times is not None and len(self.times) < MIN_FIT_POINTS:
            raise ValueError(f"fixed-x needs at least {MIN_FIT_POINTS} times, got {len(self.times)}")
        return self

    def describe(self) -> Dict[str, Any]:
        return self.model_dump(mode="json", exclude_none=True)


# ---------------------------------------------------------------------------
# Argument parsing
# ---------------------------------------------------------------------------


def _float_list(text: str) -> List[float]:
    try:
        values = [float(item.strip()) for item in text.split(",") if item.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc
    if not values:
        raise argparse.ArgumentTypeError("empty list")
    return values


def _int_list(text: str) -> List[int]:
    try:
        values = [int(item.strip()) for item in text.split(",") if item.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from exc
    if not values:
        raise argparse.ArgumentTypeError("empty list")
    return values


def _common_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON file with a run configuration; flags override it")
    common.add_argument("--format", choices=("csv", "json"), help="Output format (default csv)")
    common.add_argument("--output", help="Write results to this path instead of standard output")
    common.add_argument("--log-level", help="Logging level (default from LATTICE_LOG_LEVEL)")
    common.add_argument("--allow-large", action="store_true", default=None, help="Lift the dimension guard")

    common.add_argument("--d", type=int, help="Lattice dimension")
    common.add_argument("--omega", type=float, help="On-site energy omega")
    common.add_argument("--lambda", dest="lambdas", type=_float_list, help="Couplings; one value is repeated d times")
    common.add_argument("--allow-gapless", action="store_true", default=None, help="Admit omega = 0")

    common.add_argument("--base-points", type=int, help="Initial quadrature points per axis")
    common.add_argument("--tolerance", type=float, help="Quadrature refinement tolerance")
    common.add_argument("--max-doublings", type=int, help="Maximum quadrature grid doublings")
    common.add_argument("--t", dest="times", type=_float_list, help="Comma-separated times")
    return common


def build_parser() -> argparse.ArgumentParser:
    common = _common_parser()
    parser = argparse.ArgumentParser(
        prog="harmonic-lattice",
        description="Harmonic lattice dynamics: kernels, commutators and decay checks.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    kernel = sub.add_parser("kernel", parents=[common], help="Tabulate H_t^(m) on a box")
    kernel.add_argument("--radius", type=int, help="Half-width of the box (default 2)")
    kernel.add_argument("--m", dest="kernels", type=_int_list, help="Kernel indices among -1,0,1")

    commutator = sub.add_parser("commutator", parents=[common], help="Commutator norm, bound and phase")
    commutator.add_argument("--f", help="Probe f as site=value pairs, e.g. '0=1' (default delta_0)")
    commutator.add_argument("--g", help="Probe g as site=value pairs, e.g. '5=1' or '3;-2=0.5-1.25i'")

    verify = sub.add_parser("verify", parents=[common], help="Check a decay claim")
    verify.add_argument("target", choices=sorted(VERIFY_TARGETS))
    verify.add_argument("--x", help="Site for fixed-x decay, e.g. '0;0' (default origin)")
    verify.add_argument("--x-max", type=int, help="Largest ||x||_1 in the light-cone scan (default 48)")

    sub.add_parser("selftest", parents=[common], help="Run the oracle and invariant suite")
    sub.add_parser("critical-points", parents=[common], help="List the critical points of gamma")

    finite = sub.add_parser("finite", parents=[common], help="Compare finite and infinite volume")
    finite.add_argument("--volumes", type=_int_list, help="Box half-widths L (default from settings)")
    finite.add_argument("--f", help="Initial function as site=value pairs (default delta_0)")
    return parser


def _load_config_file(path: str | None) -> Dict[str, Any]:
    if not path:
        return {}
    try:
        with open(path, encoding="utf-8") as handle:
            data = json.load(handle)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"config file {path} must hold a JSON object")
    return data


def _set(data: Dict[str, Any], section: str, key: str, value: Any) -> None:
    if value is not None:
        data.setdefault(section, {})[key] = value


def resolve_config(args: argparse.Namespace, settings: Settings) -> RunConfig:
    data = _load_config_file(args.config)
    data["command"] = args.command

    quadrature = settings.quadrature_spec().model_dump()
    quadrature.update(data.get("quadrature") or {})
    data["quadrature"] = quadrature
    _set(data, "quadrature", "base_points", args.base_points)
    _set(data, "quadrature", "tolerance", args.tolerance)
    _set(data, "quadrature", "max_doublings", args.max_doublings)

    target = getattr(args, "target", None)
    model = dict(data.get("model") or {})
    model.setdefault("d", DEFAULT_DIMENSION.get(target, 1))
    model.setdefault("omega", 1.0)
    for key, value in (("d", args.d), ("omega", args.omega), ("allow_gapless", args.allow_gapless)):
        if value is not None:
            model[key] = value
    if args.lambdas is not None:
        model["lambdas"] = args.lambdas
    lambdas = model.get("lambdas", [1.0])
    if isinstance(lambdas, (int, float)):
        lambdas = [lambdas]
    if len(lambdas) == 1 and isinstance(model["d"], int) and model["d"] > 1:
        lambdas = list(lambdas) * model["d"]
    model["lambdas"] = lambdas
    data["model"] = model

    _set(data, "output", "format", args.format)
    _set(data, "output", "path", args.output)
    if args.allow_large is not None:
        data["allow_large"] = args.allow_large
    overrides = {
        "times": args.times,
        "radius": getattr(args, "radius", None),
        "kernels": getattr(args, "kernels", None),
        "f": getattr(args, "f", None),
        "g": getattr(args, "g", None),
        "target": target,
        "x": getattr(args, "x", None),
        "x_max": getattr(args, "x_max", None),
        "volumes": getattr(args, "volumes", None),
    }
    data.update({key: value for key, value in overrides.items() if value is not None})
    return RunConfig.model_validate(data)


def _check_guard(config: RunConfig, settings: Settings) -> None:
    if config.command not in GUARDED_COMMANDS or config.allow_large:
        return
    if config.model.d > settings.max_scan_dimension:
        LOGGER.warning(f"Refusing d={config.model.d} without --allow-large")
        raise ConfigError(
            f"d={config.model.d} exceeds the scan limit {settings.max_scan_dimension}; "
            "pass --allow-large to run anyway"
        )


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

Result = Tuple[List[Row], List[Check]]


def _model_columns(model: ModelParams) -> Row:
    return {"d": model.d, "omega": model.omega, "lambdas": model.lambdas}


def _probe(text: str | None, d: int) -> LatticeFunction:
    if text is None:
        return LatticeFunction.delta((0,) * d)
    return parse_probe(text, d)


def cmd_kernel(config: RunConfig, settings: Settings) -> Result:
    model = config.model
    kernels = config.kernels or ([0, 1] if model.is_gapless else [-1, 0, 1])
    times = config.times or [0.0, 1.0]
    rows: List[Row] = []
    for t in times:
        table = kernel_table(model, t, config.radius, config.quadrature, kernels=kernels)
        for m in kernels:
            for site in table.sites():
                rows.append(
                    {
                        **_model_columns(model),
                        "m": int(m),
                        "t": float(t),
                        "x": site,
                        "value": table.value(m, site),
                        "resolution": table.resolution,
                        "est_error": table.est_error,
                    }
                )
    return rows, []


def cmd_commutator(config: RunConfig, settings: Settings) -> Result:
    model = config.model
    if config.g is None:
        raise ConfigError("commutator needs a probe g (--g)")
    f = _probe(config.f, model.d)
    g = parse_probe(config.g, model.d)
    policy = settings.truncation_policy()
    rows: List[Row] = []
    for t in config.times or [0.0, 1.0]:
        phase = commutator_phase(model, f, g, t, config.quadrature, policy)
        bound = commutator_bound(model, f, g, t, config.quadrature, policy)
        rows.append(
            {
                **_model_columns(model),
                "t": float(t),
                "f": format_probe(f),
                "g": format_probe(g),
                "phase": phase,
                "norm": commutator_norm_from_phase(phase),
                "bound": bound,
            }
        )
    return rows, []


def _verify_uniform(config: RunConfig, settings: Settings) -> Result:
    report = verify_uniform_decay(
        config.model,
        config.times or settings.uniform_times,
        config.quadrature,
        box_margin=settings.uniform_box_margin,
        slope_threshold=settings.uniform_slope_threshold,
    )
    rows = [
        {
            **_model_columns(config.model),
            "t": t,
            "sup": s,
            "rescaled": r,
            "rescale_exponent": report.rescale_exponent,
        }
        for t, s, r in zip(report.times, report.sup_values, report.rescaled)
    ]
    checks = report.checks()
    checks.append(
        Check("raw-exponent", True, f"S(t) ~ t^{report.raw_exponent:.4g} (d_eff={report.effective_d})")
    )
    return rows, checks


def _verify_fixed_x(config: RunConfig, settings: Settings) -> Result:
    model = config.model
    site = parse_site(config.x, model.d) if config.x else (0,) * model.d
    reduced, _ = reduce_degenerate(model)
    times = config.times or default_fixed_x_times(reduced.d if reduced else model.d)
    report = fixed_x_report(
        model,
        site,
        times,
        config.quadrature,
        burst=settings.envelope_burst,
        spacing=settings.envelope_spacing,
        window=settings.envelope_window,
    )
    rows = [
        {
            **_model_columns(model),
            "t": t,
            "x": s,
            "kernel_envelope": k,
            "commutator_envelope": c,
        }
        for t, s, k, c in zip(
            report.times, report.sites, report.kernel_envelope, report.commutator_envelope
        )
    ]
    fit = report.kernel_fit
    expected = -report.effective_d / 2.0
    tolerance = fixed_x_tolerance(report.effective_d)
    detail = f"exponent {fit.exponent:.4g}, expected {expected:g} +- {tolerance:g}"
    if report.commutator_fit is not None:
        detail += f"; commutator exponent {report.commutator_fit.exponent:.4g}"
    checks = [Check("fixed-x-exponent", abs(fit.exponent - expected) <= tolerance, detail)]

    weighted = verify_weighted_decay(
        model,
        default_weighted_times(times, settings.weighted_samples),
        config.quadrature,
        policy=settings.truncation_policy(),
        n_pairs=settings.weighted_pairs,
        burst=settings.envelope_burst,
        spacing=settings.envelope_spacing,
        slope_threshold=settings.uniform_slope_threshold,
    )
    checks.extend(weighted.checks())
    return rows, checks


def _verify_light_cone(config: RunConfig, settings: Settings) -> Result:
    model = config.model
    report = verify_light_cone(
        model,
        config.times or [0.0, 1.0, 2.0, 4.0, 8.0],
        config.x_max,
        config.quadrature,
        exponential_threshold=settings.exponential_threshold,
        order_one_threshold=settings.order_one_threshold,
        burst=settings.envelope_burst,
        spacing=settings.envelope_spacing,
        window=settings.envelope_window,
    )
    scan = report.scan
    rows = [
        {
            **_model_columns(model),
            "t": t,
            "r": r,
            "value": float(scan.values[i, r]),
            "region": scan.classes[i][r],
        }
        for i, t in enumerate(scan.times)
        for r in scan.distances
    ]
    checks = list(report.checks)
    slope = "n/a" if scan.cone_slope is None else f"{scan.cone_slope:.4g}"
    checks.append(
        Check("cone-slope", True, f"empirical {slope}, group velocity bound {scan.velocity_bound:.4g}")
    )
    return rows, checks


def cmd_verify(config: RunConfig, settings: Settings) -> Result:
    handler = {
        "uniform": _verify_uniform,
        "fixed-x": _verify_fixed_x,
        "light-cone": _verify_light_cone,
    }[VERIFY_TARGETS[config.target or "uniform"]]
    return handler(config, settings)


def cmd_selftest(config: RunConfig, settings: Settings) -> Result:
    return [], run_selftest(config.quadrature, settings.truncation_policy())


def cmd_critical_points(config: RunConfig, settings: Settings) -> Result:
    rows = [
        {
            **_model_columns(config.model),
            "coords": point.coords,
            "gamma": point.gamma_value,
            "hessian_diag": point.hessian_diag,
            "signature": point.signature,
            "morse_index": point.morse_index,
            "hessian_det": hessian_determinant(point),
        }
        for point in critical_points(config.model)
    ]
    return rows, []


def cmd_finite(config: RunConfig, settings: Settings) -> Result:
    model = config.model
    f = _probe(config.f, model.d)
    volumes = config.volumes or settings.finite_volumes
    rows: List[Row] = []
    checks: List[Check] = []
    for t in config.times or [2.0]:
        differences = []
        for L in sorted(volumes):
            difference = compare_finite_infinite(model, L, f, t, config.quadrature)
            differences.append(difference)
            rows.append({**_model_columns(model), "L": L, "t": float(t), "difference": difference})
        # Differences at round-off level may jitter; only growth beyond that counts.
        shrinking = all(b <= a + 1e-12 for a, b in zip(differences, differences[1:]))
        checks.append(
            Check(f"finite-volume-t={t:g}", shrinking, f"differences {', '.join(f'{v:.3e}' for v in differences)}")
        )
    return rows, checks


COMMANDS = {
    "kernel": cmd_kernel,
    "commutator": cmd_commutator,
    "verify": cmd_verify,
    "selftest": cmd_selftest,
    "critical-points": cmd_critical_points,
    "finite": cmd_finite,
}


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------


def _render(config: RunConfig, rows: List[Row], checks: List[Check]) -> str:
    buffer = io.StringIO()
    if config.output.format == "json":
        write_json(config.describe(), rows, buffer, checks)
    elif config.command == "selftest":
        for check in checks:
            buffer.write(f"{'PASS' if check.passed else 'FAIL'} {check.name}: {check.detail}\n")
    else:
        write_csv(rows, buffer)
        write_checks(checks, buffer)
    return buffer.getvalue()


def _emit(config: RunConfig, text: str) -> None:
    if config.output.path:
        with open(config.output.path, "w", encoding="utf-8", newline="") as handle:
            handle.write(text)
    else:
        sys.stdout.write(text)


def _configure_logging(level: str) -> None:
    logging.basicConfig(
        level=getattr(logging, level.upper(), logging.INFO),
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
        datefmt="%Y-%m-%d %H:%M:%S",
        stream=sys.stderr,
    )


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)

    settings = get_settings()
    _configure_logging(args.log_level or settings.log_level)

    try:
        config = resolve_config(args, settings)
        _check_guard(config, settings)
    except (ConfigError, ValidationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    LOGGER.info(f"Running {config.command} for {config.model.describe()}")
    try:
        rows, checks = COMMANDS[config.command](config, settings)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NoConvergence as exc:
        print(f"error: {exc} ({exc.provenance()})", file=sys.stderr)
        return 1
    except LatticeError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    try:
        _emit(config, _render(config, rows, checks))
    except OSError as exc:
        print(f"error: cannot write output: {exc}", file=sys.stderr)
        return 1

    failed = [c for c in checks if not c.passed]
    for check in failed:
        print(f"FAIL {check.name}: {check.detail}", file=sys.stderr)
    LOGGER.info(f"Finished {config.command}: {len(rows)} rows, {len(checks) - len(failed)}/{len(checks)} checks passed")
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
