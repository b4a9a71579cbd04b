"""
Command-line front end.

    verify {reductions|divdiff|decomposition|partition|fourier|remark}
    estimate
    sweep {exponent|lowerbound|bound-curve}
    report [RESULTS]

Tables go to stdout as CSV; with --out each experiment also writes
<name>.csv and a <name>.json sidecar (config metadata plus full records).
Errors are printed to stderr as JSON records.
"""

import argparse
import csv
import io
import json
import logging
import sys
from pathlib import Path
from typing import Any, Dict, List, NamedTuple, Optional, Sequence

import numpy as np
from pydantic import ValidationError

from schurlab import __version__
from schurlab.core.config import settings
from schurlab.core.error_handling import (
    ConfigValidationError,
    MissingInputError,
    SizeGuardError,
    ToleranceBreachError,
    error_handler,
)
from schurlab.core.logging import LoggerManager, setup_logging
from schurlab.models.numerics import SchattenParams
from schurlab.models.schemas import (
    CommandName,
    ExperimentConfig,
    SweepKind,
    SweepRecord,
    SymbolKind,
    SymbolSpec,
    VerifySuite,
)
from schurlab.services import divdiff
from schurlab.services.normsearch import (
    ConstructionKind,
    ExponentFit,
    SweepExperiment,
    SweepResult,
    bound_curve,
    convergence_check,
    estimate_norm,
    estimate_to_record,
    sweep_and_fit,
    volterra_sweep,
)
from schurlab.services.reporting import render, report
from schurlab.services.schatten import (
    DiscreteSymbol,
    TruncationKind,
    lattice_symbol,
    sampled_symbol,
    truncation_symbol,
)
from schurlab.services.verification import run_suite

logger = logging.getLogger(__name__)

DEFAULT_P_GRID = [1.25, 1.5, 2.0, 3.0, 4.0, 6.0, 8.0]
DEFAULT_KL_PATH = [(2, 4), (4, 8), (8, 16), (16, 32), (30, 60)]


class Experiment(NamedTuple):
    name: str
    header: List[str]
    rows: List[List[Any]]
    document: Dict[str, Any]
    breach: Optional[ToleranceBreachError] = None


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--n", type=int, help="Multilinearity / divided-difference order.")
    common.add_argument("--k", type=int, help="Outer lattice exponent.")
    common.add_argument("--l", type=int, help="Inner lattice exponent.")
    common.add_argument("--q", type=float, help="Lattice base in (0, 1).")
    common.add_argument("--p", type=float, help="Target Schatten exponent.")
    common.add_argument("--p-grid", dest="p_grid", type=float, nargs="+", help="Exponent grid for sweeps.")
    common.add_argument("--dim", type=int, help="Matrix size N.")
    common.add_argument("--trials", type=int, help="Random trials per verification suite.")
    common.add_argument("--restarts", type=int, help="Ascent restarts per estimate.")
    common.add_argument("--iters", type=int, help="Ascent sweeps per restart.")
    common.add_argument("--seed", type=int, help="Master seed.")
    common.add_argument("--tol", type=float, help="Tolerance override for verify.")
    common.add_argument("--variant", choices=["first", "second"], help="Lattice construction.")
    common.add_argument("--out", type=str, help="Directory for CSV/JSON artifacts.")
    common.add_argument("--config", type=str, help="JSON experiment config; flags override it.")

    parser = argparse.ArgumentParser(prog="schurlab", description="Divided differences and Schur multiplier norm lab.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    commands = parser.add_subparsers(dest="command", required=True)

    verify = commands.add_parser("verify", parents=[common], help="Randomized identity checks.")
    verify.add_argument("suite", choices=[s.value for s in VerifySuite])
    commands.add_parser("estimate", parents=[common], help="Lower-bound norm estimate of one symbol.")
    sweep = commands.add_parser("sweep", parents=[common], help="Parameter sweeps.")
    sweep.add_argument("sweep", choices=[s.value for s in SweepKind])
    rep = commands.add_parser("report", parents=[common], help="Summarize stored results.")
    rep.add_argument("results", nargs="?", help="Results directory (default: settings.results_dir).")
    return parser


def load_config(args: argparse.Namespace) -> ExperimentConfig:
    """Merge --config JSON with explicit flags and validate."""
    data: Dict[str, Any] = {}
    if args.config:
        path = Path(args.config)
        if not path.exists():
            raise MissingInputError(f"config file {path} does not exist", path=str(path))
        with open(path, encoding="utf-8") as f:
            try:
                data = json.load(f)
            except json.JSONDecodeError as e:
                raise ConfigValidationError(f"config file {path} is not valid JSON: {e}")
        if not isinstance(data, dict):
            raise ConfigValidationError(f"config file {path} must hold a JSON object")

    flags = vars(args).copy()
    flags.pop("config", None)
    for key, value in flags.items():
        if value is not None:
            data[key] = value
    try:
        return ExperimentConfig(**data)
    except ValidationError as e:
        errors = [{"loc": list(err["loc"]), "msg": err["msg"]} for err in e.errors()]
        raise ConfigValidationError(f"invalid experiment config: {e.error_count()} error(s)",
                                    errors=errors)


def _default_dim(config: ExperimentConfig, kind: SymbolKind) -> int:
    if config.dim is not None:
        dim = config.dim
    elif kind == SymbolKind.LATTICE:
        dim = 3
    else:
        dim = {1: 64, 2: 16}.get(config.n, 8)
    if dim > settings.max_dim:
        raise SizeGuardError(f"dim {dim} exceeds max_dim {settings.max_dim}",
                             requested=dim, limit=settings.max_dim)
    return dim


def _variant_number(variant: Any) -> int:
    return 2 if str(variant) in ("2", "second") else 1


def _sampled_function(name: str, config: ExperimentConfig, params: Dict[str, Any]):
    if name == "abs_power":
        return divdiff.make_abs_power(config.n)
    if name == "power":
        return divdiff.make_power(int(params.get("degree", config.n + 1)))
    makers = {"exp": divdiff.make_exp, "sin": divdiff.make_sin, "cos": divdiff.make_cos}
    if name not in makers:
        raise ConfigValidationError(f"unknown sampled function {name!r}", errors=[{"function": name}])
    return makers[name]()


def build_symbol(config: ExperimentConfig) -> DiscreteSymbol:
    """Symbol named by config.symbol; T^+ for n = 1 and sampled a_n otherwise."""
    spec = config.symbol
    if spec is None:
        spec = SymbolSpec(kind=SymbolKind.TRUNCATION if config.n == 1 else SymbolKind.SAMPLED)
    params = spec.params
    dim = _default_dim(config, spec.kind)

    if spec.kind == SymbolKind.TRUNCATION:
        if config.n != 1:
            raise ConfigValidationError("truncation symbols are linear; use --n 1")
        return truncation_symbol(params.get("kind", TruncationKind.UPPER.value), dim)
    if spec.kind == SymbolKind.ONES:
        return DiscreteSymbol.ones(config.n, dim)
    if spec.kind == SymbolKind.LATTICE:
        q = float(params.get("q", config.q))
        k = int(params.get("k", config.k if config.k is not None else 8))
        l = int(params.get("l", config.l if config.l is not None else 2 * k))
        index_set = params.get("index_set", list(range(dim)))
        return lattice_symbol(_variant_number(params.get("variant", config.variant)),
                              q, k, l, config.n, index_set)

    f = _sampled_function(params.get("function", "abs_power"), config, params)
    if "grid" in params:
        grid = np.asarray(params["grid"], dtype=float)
    else:
        grid = np.linspace(float(params.get("low", -1.0)), float(params.get("high", 1.0)), dim)
    return sampled_symbol(f, grid, config.n)


def _meta(config: ExperimentConfig, **extra: Any) -> Dict[str, Any]:
    meta = config.model_dump(mode="json", exclude_none=True, exclude={"out", "results"})
    meta.update(extra)
    return meta


def _fit_columns(p: float, result: SweepResult) -> List[Any]:
    fit: Optional[ExponentFit] = result.large_p if p >= 2.0 else result.small_p
    if fit is None:
        return [None, None, None]
    return [fit.exponent, fit.residual, fit.claimed]


def _fit_document(fit: Optional[ExponentFit]) -> Optional[Dict[str, Any]]:
    return None if fit is None else fit._asdict()


def run_verify(config: ExperimentConfig) -> Experiment:
    suite = VerifySuite(config.suite)
    n = config.n if "n" in config.model_fields_set else None
    result = run_suite(suite, n=n, trials=config.trials, seed=config.seed, tol=config.tol)
    rows = [[check, value, result.tol, value <= result.tol]
            for check, value in sorted(result.details.get("max_by_check", {}).items())]
    if "oracle_sigma" in result.details:
        sigma = result.details["oracle_sigma"]
        rows.append(["oracle_sigma", sigma, 3.0, sigma <= 3.0])
    breach = None
    if not result.passed:
        breach = ToleranceBreachError(f"{suite.value} suite exceeded its tolerance",
                                      suite=suite.value, residual=result.max_residual, tol=result.tol)
    document = {"meta": _meta(config, tol=result.tol), "report": result.model_dump(mode="json")}
    return Experiment(f"verify-{suite.value}", ["check", "max_residual", "tol", "passed"],
                      rows, document, breach)


def run_estimate(config: ExperimentConfig) -> Experiment:
    phi = build_symbol(config)
    p = config.p if config.p is not None else 2.0
    params = SchattenParams.uniform(phi.n, p, allow_endpoints=True)
    estimate = estimate_norm(phi, params, restarts=config.restarts, iters=config.iters, seed=config.seed)
    record = estimate_to_record(estimate)
    row = [p, estimate.value, estimate.envelope, estimate.dispersion, estimate.restarts,
           estimate.dim, estimate.seed, estimate.endpoint]
    document = {"meta": _meta(config, dim=phi.dim, label=phi.label), "estimate": record.model_dump(mode="json")}
    return Experiment(f"estimate-{phi.label}",
                      ["p", "estimate", "envelope", "dispersion", "restarts", "dim", "seed", "endpoint"],
                      [row], document)


def _sweep_experiment(name: str, config: ExperimentConfig, result: SweepResult,
                      value_name: str, extra_meta: Dict[str, Any]) -> Experiment:
    rows, records = [], []
    for p, value in zip(result.p_grid, result.estimates):
        fit = _fit_columns(p, result)
        rows.append([p, value] + fit)
        records.append(SweepRecord(p=p, estimate=value, exponent=fit[0],
                                   fit_residual=fit[1], claimed=fit[2]).model_dump(mode="json"))
    document = {
        "meta": _meta(config, **extra_meta),
        "records": records,
        "fits": {"large_p": _fit_document(result.large_p), "small_p": _fit_document(result.small_p)},
        "estimates": [estimate_to_record(r, witnesses=False).model_dump(mode="json")
                      for r in result.records],
    }
    return Experiment(name, ["p", value_name, "exponent", "fit_residual", "claimed"], rows, document)


def run_sweep(config: ExperimentConfig) -> Experiment:
    kind = SweepKind(config.sweep)
    p_grid = config.p_grid or DEFAULT_P_GRID

    if kind == SweepKind.BOUND_CURVE:
        result = bound_curve(config.n, p_grid)
        return _sweep_experiment(f"sweep-bound-curve-n{config.n}", config, result, "bound", {})

    if kind == SweepKind.EXPONENT:
        restarts = config.restarts or 4
        iters = config.iters or 40
        if config.n == 1 and config.symbol is None:
            dim = _default_dim(config, SymbolKind.TRUNCATION)
            result = volterra_sweep(dim, p_grid, restarts=restarts, iters=iters, seed=config.seed)
            label = f"T_upper-N{dim}"
        else:
            phi = build_symbol(config)
            result = sweep_and_fit(SweepExperiment(phi, p_grid, restarts=restarts, iters=iters,
                                                   seed=config.seed))
            label = phi.label
        return _sweep_experiment(f"sweep-exponent-{label}", config, result, "estimate",
                                 {"label": label})

    construction = ConstructionKind(config.variant)
    dim = _default_dim(config, SymbolKind.LATTICE)
    pairs = DEFAULT_KL_PATH if config.k is None else [(config.k, config.l if config.l is not None else 2 * config.k)]
    p = config.p if config.p is not None else 2.0
    rows = []
    for k, l in pairs:
        residual = convergence_check(construction, config.n, config.q, k, l, list(range(dim)),
                                     seed=config.seed, p=p)
        rows.append([k, residual, l, config.q, p])
        LoggerManager.log_experiment_event("lowerbound", f"k={k} l={l}", seed=config.seed,
                                           residual=residual, n=config.n, dim=dim, p=p)
    document = {"meta": _meta(config, dim=dim, p=p),
                "records": [dict(zip(["k", "residual", "l", "q", "p"], r)) for r in rows]}
    return Experiment(f"sweep-lowerbound-{construction.value}-n{config.n}",
                      ["k", "residual", "l", "q", "p"], rows, document)


def _format(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def to_csv(header: Sequence[str], rows: Sequence[Sequence[Any]]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_format(v) for v in row])
    return buffer.getvalue()


def write_outputs(experiment: Experiment, out: Optional[str], stream=None) -> Optional[Path]:
    """CSV to the stream; CSV and JSON files under `out` when given."""
    text = to_csv(experiment.header, experiment.rows)
    (stream or sys.stdout).write(text)
    if out is None:
        return None
    root = Path(out)
    root.mkdir(parents=True, exist_ok=True)
    path = root / f"{experiment.name}.csv"
    with open(path, "w", encoding="utf-8", newline="") as f:
        f.write(text)
    with open(root / f"{experiment.name}.json", "w", encoding="utf-8") as f:
        json.dump(experiment.document, f, indent=2, sort_keys=True)
        f.write("\n")
    return path


def run(config: ExperimentConfig, stream=None) -> int:
    """Execute one validated config; returns the exit code."""
    stream = stream or sys.stdout
    command = CommandName(config.command)
    if command == CommandName.REPORT:
        summaries = report(config.results or settings.results_dir, config.out)
        stream.write(render(summaries))
        return 0

    runners = {CommandName.VERIFY: run_verify, CommandName.ESTIMATE: run_estimate,
               CommandName.SWEEP: run_sweep}
    experiment = runners[command](config)
    write_outputs(experiment, config.out, stream)
    if experiment.breach is not None:
        raise experiment.breach
    return 0


def main(argv: Optional[Sequence[str]] = None) -> int:
    setup_logging()
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = load_config(args)
        logger.info(f"running {config.command.value} seed={config.seed}")
        return run(config)
    except Exception as e:
        record = error_handler.handle_error(e, {"command": args.command})
        sys.stderr.write(json.dumps(record, sort_keys=True, default=str) + "\n")
        return error_handler.exit_code_for(e)


if __name__ == "__main__":
    sys.exit(main())
