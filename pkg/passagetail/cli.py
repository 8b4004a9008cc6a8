# Typing
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple, Union
# Numeric
import os, sys, csv, json, math, logging, argparse
from datetime import datetime, timezone
from pathlib import Path
# Pydantic
from pydantic import ValidationError
# Component
from .models import IncrementModel, MG1Model, induced_increment, sanity_check
from .types import RunConfig, RNGSpec, AsymptoticEstimate, PrefactorV, SimResult
from .cramer_engine import solve_tilt, solve_tilt_mg1, solve_intermediate, petrov_tail, intermediate_tail
from .heavy_engine import heavy2_tail
from .passage import v_subexp, v_rw_series, v_cramer_mg1, passage_tail_rw, passage_tail_levy, bp_tail
from .oracle import lattice_walk_from_model, passage_survival, exact_sn_dist, exact_e_nu
from .mc import (simulate_walk_passage, simulate_walk_passage_tilted, simulate_walk_sum_tail, simulate_bp,
                 simulate_bp_tilted, simulate_walk_sum_tail_conditional)
from .classcheck import builtin_sequence, classify, cond_ratio_test, sum_tail_source
from .exceptions import PassageTailError, ConfigError, SolverError

logger = logging.getLogger(__name__)

# Params
_OUTPUT_DIR_ENV = "PASSAGETAIL_OUTPUT_DIR"
_DEFAULT_OUTPUT_DIR = "."
EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SOLVER = 3
EXIT_COMPONENT = 4

ASYMPT_COLUMNS = ["horizon", "value", "log_value", "prefactor", "tail_part", "interpolation_factor", "flags"]
ORACLE_COLUMNS = ["horizon", "exact"]
SIMULATE_COLUMNS = ["t_or_n", "estimate", "stderr", "ci_lo", "ci_hi", "samples", "estimator"]
COMPARE_COLUMNS = ["horizon", "asymptotic", "oracle_or_mc", "ratio", "ci_lo", "ci_hi"]
CHECK_COLUMNS = ["test", "y", "n", "value"]

# DataType
Subject = Union[IncrementModel, MG1Model]
Rows = List[List[Any]]


class ComponentFailure(PassageTailError):
    """A compare run lost at least one row component."""


def load_config(path :str, overrides :Optional[Dict[str, Any]] = None) -> RunConfig:
    """
    Read and validate a JSON run configuration; flag overrides replace file values.
    :param path: Path of the JSON file
    :type path: str
    :param overrides: Resolved values of --seed, --samples and --output-dir
    :type overrides: Optional[Dict[str, Any]]
    :return: RunConfig
    """
    try:
        with open(path, "r", encoding = "utf-8") as f:
            raw = json.load(f)
    except (OSError, json.JSONDecodeError) as error:
        raise ConfigError(f"Cannot read configuration {path}: {error}!") from error
    # Flags win over the file
    overrides = overrides or {}
    for key in ("seed", "samples"):
        if overrides.get(key) is not None:
            raw[key] = overrides[key]
    if overrides.get("output_dir") is not None:
        raw.setdefault("output", {})["directory"] = overrides["output_dir"]
    try:
        return RunConfig.model_validate(raw)
    except ValidationError as error:
        raise ConfigError(f"Invalid configuration {path}:\n{error}") from error


def build_subject(config :RunConfig) -> Subject:
    """The model a configuration describes; physical constraints are checked here, before dispatch."""
    if config.mg1 is not None:
        mg1 = MG1Model.from_block(config.mg1, config.tolerances.quad_rel_tol)
        induced_increment(mg1)
        return mg1
    # Check drift
    model = IncrementModel.from_block(config.model, config.tolerances.quad_rel_tol)
    if config.question != "classcheck" and model.mean >= 0:
        raise ConfigError(f"Increment mean {model.mean:.6g} must be negative!")
    return model


def _require_regime(config :RunConfig) -> str:
    if config.regime is None:
        raise ConfigError(f"Question {config.question} needs a declared regime!")
    return config.regime


def _require_horizons(config :RunConfig) -> List[float]:
    if len(config.horizons) == 0:
        raise ConfigError("The horizon grid is empty!")
    return list(config.horizons)


def _rng(config :RunConfig) -> RNGSpec:
    return RNGSpec(seed = config.seed)


def _as_walk(subject :Subject) -> IncrementModel:
    return induced_increment(subject) if isinstance(subject, MG1Model) else subject


def cmd_solve(config :RunConfig) -> Tuple[Dict[str, Any], Rows, List[str]]:
    """Tilt or intermediate solution of the configured model."""
    subject = build_subject(config)
    tol = config.tolerances.tilt_tol
    result = {}
    if config.regime == "Intermediate":
        sol = solve_intermediate(_as_walk(subject))
        result["intermediate"] = sol.model_dump(exclude = {"gbar"})
    elif isinstance(subject, MG1Model):
        result["service_side"] = solve_tilt_mg1(subject, tol).model_dump()
        result["induced_increment"] = solve_tilt(induced_increment(subject), tol).model_dump()
    else:
        result["tilt"] = solve_tilt(subject, tol).model_dump()
    if config.regime is not None:
        result["findings"] = [f.model_dump() for f in sanity_check(_as_walk(subject), config.regime)]
    return result, [], []


def _asymptotic(config :RunConfig, subject :Subject, horizon :float) -> AsymptoticEstimate:
    regime = _require_regime(config)
    tol, rng, x = config.tolerances.series_tol, _rng(config), config.x
    if config.question == "busy_period":
        return bp_tail(subject, x, horizon, regime, curvature = config.curvature)
    if config.question == "passage_levy":
        return passage_tail_levy(subject, x, horizon, regime, tol, config.samples, rng, config.curvature)
    if config.question == "passage_rw":
        return passage_tail_rw(_as_walk(subject), x, int(round(horizon)), regime, tol, config.samples, rng,
                               config.curvature)
    if config.question == "large_deviation":
        return _large_deviation(config, _as_walk(subject), int(round(horizon)), regime)
    raise ConfigError(f"Question {config.question} has no horizon grid!")


def _large_deviation(config :RunConfig, model :IncrementModel, n :int, regime :str) -> AsymptoticEstimate:
    """P(S_n >= x) in the declared regime."""
    x = config.x
    if regime == "HeavyII":
        return heavy2_tail(model, n, x, config.curvature, config.tolerances.newton_tol)
    if regime == "HeavyI":
        value = n * model.tail(x + n * (-model.mean))
    elif regime == "Cramer":
        value = petrov_tail(solve_tilt(model, config.tolerances.tilt_tol), n, x, model.lattice_span,
                            model.lattice_offset)
    else:
        value = intermediate_tail(solve_intermediate(model), n, x, config.tolerances.epsilon)
    return AsymptoticEstimate(value = value,
                              log_value = math.log(value) if value > 0 else -math.inf,
                              regime = regime,
                              tail_part = value)


def _prefactor(config :RunConfig, subject :Subject) -> PrefactorV:
    regime = _require_regime(config)
    if regime in ("HeavyI", "HeavyII"):
        return v_subexp(subject, config.x, config.samples, _rng(config))
    if isinstance(subject, MG1Model):
        sol = solve_tilt_mg1(subject) if regime == "Cramer" else solve_intermediate(induced_increment(subject))
        return v_cramer_mg1(sol.alpha, sol.gamma, config.x)
    sol = solve_tilt(subject) if regime == "Cramer" else solve_intermediate(subject)
    return v_rw_series(subject, sol.alpha, sol.gamma, config.x, config.tolerances.series_tol, config.samples,
                       _rng(config))


def _asympt_row(horizon :float, estimate :AsymptoticEstimate) -> List[Any]:
    prefactor = "" if estimate.prefactor is None else estimate.prefactor.value
    return [horizon, estimate.value, estimate.log_value, prefactor, estimate.tail_part,
            estimate.interpolation_factor, ";".join(estimate.validity_flags)]


def cmd_asympt(config :RunConfig) -> Tuple[Dict[str, Any], Rows, List[str]]:
    """Asymptotic estimates on the horizon grid, or the prefactor alone."""
    subject = build_subject(config)
    if config.question == "prefactor":
        prefactor = _prefactor(config, subject)
        return {"prefactor": prefactor.model_dump()}, [], []
    if config.question == "classcheck":
        raise ConfigError("Use the check command for classcheck questions!")
    rows = [_asympt_row(h, _asymptotic(config, subject, h)) for h in _require_horizons(config)]
    return {"rows": len(rows)}, rows, ASYMPT_COLUMNS


def _exact(config :RunConfig, subject :Subject, horizons :Sequence[float]) -> List[float]:
    """Exact lattice values of the configured question at integer horizons."""
    if isinstance(subject, MG1Model):
        raise ConfigError("The exact oracle covers lattice random walks only!")
    walk = lattice_walk_from_model(subject)
    steps = [int(round(h)) for h in horizons]
    if config.question in ("passage_rw", "passage_levy"):
        survival = passage_survival(walk, config.x, max(steps))
        return [float(survival[n]) for n in steps]
    if config.question == "large_deviation":
        # Same inequality as the asymptotic side
        return [exact_sn_dist(walk, n).sf(config.x) for n in steps]
    raise ConfigError(f"The exact oracle does not answer {config.question}!")


def cmd_oracle(config :RunConfig) -> Tuple[Dict[str, Any], Rows, List[str]]:
    """Exact lattice values."""
    subject = build_subject(config)
    if config.question == "prefactor":
        if isinstance(subject, MG1Model):
            raise ConfigError("The exact oracle covers lattice random walks only!")
        return {"e_nu": exact_e_nu(lattice_walk_from_model(subject), config.x)}, [], []
    horizons = _require_horizons(config)
    values = _exact(config, subject, horizons)
    return {"rows": len(values)}, [[h, v] for h, v in zip(horizons, values)], ORACLE_COLUMNS


def _simulate(config :RunConfig, subject :Subject, horizons :Sequence[float]):
    rng, samples, streams = _rng(config), config.samples, config.streams
    tilted = config.estimator == "tilted"
    # Check the estimator answers the question
    if config.estimator == "conditional" and config.question != "large_deviation":
        raise ConfigError("The conditional estimator answers large_deviation questions only!")
    if config.question == "busy_period":
        if tilted:
            return simulate_bp_tilted(subject, solve_tilt_mg1(subject), config.x, horizons, samples, rng, streams)
        return simulate_bp(subject, config.x, horizons, samples, rng, streams)
    walk = _as_walk(subject)
    steps = [int(round(h)) for h in horizons]
    if config.question == "large_deviation":
        if config.estimator == "conditional":
            return simulate_walk_sum_tail_conditional(walk, config.x, steps, samples, rng, streams = streams)
        return simulate_walk_sum_tail(walk, config.x, steps, samples, rng, tilted = tilted, streams = streams)
    if config.question in ("passage_rw", "passage_levy"):
        if tilted:
            return simulate_walk_passage_tilted(walk, config.x, steps, samples, rng, streams = streams)
        return simulate_walk_passage(walk, config.x, steps, samples, rng, streams)
    raise ConfigError(f"Simulation does not answer {config.question}!")


def _sim_row(result :SimResult) -> List[Any]:
    return [result.horizon, result.estimate, result.stderr, result.ci95[0], result.ci95[1], result.samples,
            result.estimator]


def cmd_simulate(config :RunConfig) -> Tuple[Dict[str, Any], Rows, List[str]]:
    """Monte Carlo estimates on the horizon grid; grid points share paths."""
    subject = build_subject(config)
    simulation = _simulate(config, subject, _require_horizons(config))
    result = {"seed": config.seed, "estimator": config.estimator, "shared_paths": True}
    if simulation.mean is not None:
        result["mean"], result["mean_stderr"] = simulation.mean, simulation.mean_stderr
    return result, [_sim_row(r) for r in simulation.results], SIMULATE_COLUMNS


def _reference(config :RunConfig, subject :Subject, horizons :List[float]) -> List[Tuple[float, float, float]]:
    """(value, ci_lo, ci_hi) per horizon: exact on a lattice, simulated otherwise."""
    exact_questions = ("passage_rw", "large_deviation")
    if isinstance(subject, IncrementModel) and subject.lattice_span > 0 and config.question in exact_questions:
        return [(v, v, v) for v in _exact(config, subject, horizons)]
    return [(r.estimate, r.ci95[0], r.ci95[1]) for r in _simulate(config, subject, horizons).results]


def cmd_compare(config :RunConfig, sink :Optional[Callable[[List[Any]], None]] = None) \
        -> Tuple[Dict[str, Any], Rows, List[str]]:
    """
    Asymptotic against exact or simulated values, one row per horizon; ratio = reference / asymptotic.
    Rows are handed to sink as they are produced. A failing component leaves empty cells and
    raises ComponentFailure after the last row.
    """
    subject = build_subject(config)
    horizons = _require_horizons(config)
    failures = []
    try:
        reference = _reference(config, subject, horizons)
    except (PassageTailError, ValueError, ArithmeticError) as error:
        logger.error("Reference values failed: %s", error)
        failures.append(f"reference: {error}")
        reference = [None] * len(horizons)
    rows = []
    for horizon, ref in zip(horizons, reference):
        try:
            asymptotic = _asymptotic(config, subject, horizon).value
        except ConfigError:
            raise
        except (PassageTailError, ValueError, ArithmeticError) as error:
            logger.error("Asymptotic value at %g failed: %s", horizon, error)
            failures.append(f"asymptotic at {horizon}: {error}")
            asymptotic = None
        row = [horizon,
               "" if asymptotic is None else asymptotic,
               "" if ref is None else ref[0],
               "" if (ref is None or not asymptotic) else ref[0] / asymptotic,
               "" if ref is None else ref[1],
               "" if ref is None else ref[2]]
        rows.append(row)
        if sink is not None:
            sink(row)
    if failures:
        raise ComponentFailure("; ".join(failures))
    return {"rows": len(rows)}, rows, COMPARE_COLUMNS


def cmd_check(config :RunConfig) -> Tuple[Dict[str, Any], Rows, List[str]]:
    """Class diagnostics of a builtin sequence, or tail-ratio trajectories of a lattice walk."""
    tol = config.tolerances.class_tol
    result, rows = {}, []
    # Builtin sequence
    if config.sequence is not None:
        block = config.sequence
        logs, start = builtin_sequence(block)
        diagnostic = classify(logs, block.gamma, block.max_n, start, ratio_tol = tol, log_terms = True)
        result["sequence"] = diagnostic.model_dump()
        rows += [["ratio", "", n, v] for n, v in diagnostic.ratio_trajectory]
        rows += [["conv", "", n, v] for n, v in diagnostic.conv_trajectory]
    # Tail ratios of a lattice walk
    if config.model is not None:
        model = IncrementModel.from_block(config.model, config.tolerances.quad_rel_tol)
        alpha = solve_tilt(model).alpha if config.regime == "Cramer" else 0.0
        max_n = int(max(_require_horizons(config)))
        y_set = config.y_set or [0.0]
        diagnostics = cond_ratio_test(sum_tail_source(lattice_walk_from_model(model)), alpha, y_set, max_n)
        result["tail_ratio"] = [d.model_dump() for d in diagnostics]
        for d in diagnostics:
            rows += [["tail_ratio", d.y, n, v] for n, v in d.trajectory]
    return result, rows, CHECK_COLUMNS


COMMANDS = {"solve": cmd_solve,
            "asympt": cmd_asympt,
            "oracle": cmd_oracle,
            "simulate": cmd_simulate,
            "compare": cmd_compare,
            "check": cmd_check}


def _output_directory(config :RunConfig) -> Path:
    directory = config.output.directory or os.environ.get(_OUTPUT_DIR_ENV) or _DEFAULT_OUTPUT_DIR
    path = Path(directory)
    path.mkdir(parents = True, exist_ok = True)
    return path


def _report(command :str, config :RunConfig, result :Dict[str, Any], status :str) -> str:
    report = {"command": command,
              "status": status,
              "config": config.model_dump(mode = "json"),
              "result": result,
              "metadata": {"seed": config.seed,
                           "rng": RNGSpec(seed = config.seed).algorithm,
                           "timestamp": datetime.now(timezone.utc).isoformat()}}
    return json.dumps(report, indent = 2, sort_keys = True, default = str)


def _format(value :Any) -> Any:
    return repr(value) if isinstance(value, float) else value


class _CsvSink:
    """CSV file written row by row, flushed after every row."""

    def __init__(self, path :Path, columns :List[str]):
        self._file = open(path, "w", newline = "", encoding = "utf-8")
        self._writer = csv.writer(self._file)
        self._writer.writerow(columns)

    def __call__(self, row :List[Any]) -> None:
        self._writer.writerow([_format(v) for v in row])
        self._file.flush()

    def close(self) -> None:
        self._file.close()


def run(command :str, config :RunConfig) -> int:
    """
    Run one command and write <stem>_<command>.json (and .csv when there are rows).
    :param command: Command name
    :type command: str
    :param config: Validated run configuration
    :type config: RunConfig
    :return: Exit code
    """
    directory = _output_directory(config)
    stem = directory / f"{config.output.stem}_{command}"
    status, code, result = "ok", EXIT_OK, {}
    # Compare streams its rows
    if command == "compare":
        sink = _CsvSink(stem.with_suffix(".csv"), COMPARE_COLUMNS)
        try:
            result, _, _ = cmd_compare(config, sink)
        except ComponentFailure as error:
            status, code, result = "partial", EXIT_COMPONENT, {"failures": str(error)}
        finally:
            sink.close()
    else:
        result, rows, columns = COMMANDS[command](config)
        if rows:
            sink = _CsvSink(stem.with_suffix(".csv"), columns)
            for row in rows:
                sink(row)
            sink.close()
    # Report next to the CSV
    text = _report(command, config, result, status)
    stem.with_suffix(".json").write_text(text + "\n", encoding = "utf-8")
    print(text)
    return code


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog = "passagetail",
                                     description = "First-passage tail asymptotics with exact and Monte Carlo checks.")
    sub = parser.add_subparsers(dest = "command", required = True)
    for name, handler in COMMANDS.items():
        cmd = sub.add_parser(name, help = handler.__doc__.strip().splitlines()[0])
        cmd.add_argument("config", help = "JSON run configuration")
        cmd.add_argument("--seed", type = int, default = None, help = "Override the master seed.")
        cmd.add_argument("--samples", type = int, default = None, help = "Override the Monte Carlo sample count.")
        cmd.add_argument("--output-dir", default = None,
                         help = f"Override the output directory (default ${_OUTPUT_DIR_ENV} or the working directory).")
        cmd.add_argument("--log-level", default = "WARNING", choices = ["DEBUG", "INFO", "WARNING", "ERROR"])
    schema = sub.add_parser("schema", help = "Print the JSON schema of the run configuration.")
    schema.add_argument("--log-level", default = "WARNING", choices = ["DEBUG", "INFO", "WARNING", "ERROR"])
    return parser


def main(argv :Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level = getattr(logging, args.log_level), stream = sys.stderr,
                        format = "%(asctime)s %(name)s %(levelname)s %(message)s")
    if args.command == "schema":
        print(json.dumps(RunConfig.model_json_schema(), indent = 2, sort_keys = True))
        return EXIT_OK
    try:
        config = load_config(args.config, {"seed": args.seed, "samples": args.samples, "output_dir": args.output_dir})
        return run(args.command, config)
    except (ConfigError, ValidationError, ValueError) as error:
        logger.error("%s", error)
        return EXIT_CONFIG
    except (SolverError, ArithmeticError) as error:
        logger.error("%s", error)
        return EXIT_SOLVER
