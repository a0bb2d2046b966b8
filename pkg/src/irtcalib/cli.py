"""Command-line front end.

Subcommands: ``calibrate`` (solve for the scale), ``bounds`` (feasibility
screening), ``generate`` (response matrices from a stored calibration),
``validate`` (factorial study harness), ``compare`` (two calibrations), and
``shapes`` (latent density tables).

Exit codes: 0 success; 2 invalid flags or malformed config; 3 infeasible
target (boundary solution returned); 4 numerical failure; 5 missing input
file or unwritable output location.

Every output document embeds a reproducibility block (package version,
generator name, seeds, config echo) and contains nothing run-dependent, so
identical invocations produce byte-identical files.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import warnings
from pathlib import Path

import numpy as np

from . import __version__, rng
from .eqc import (
    CalibrationResult,
    EqcConfig,
    STATUS_SUCCESS,
    eqc_calibrate,
    feasibility_report,
)
from .errors import (
    ConfigurationError,
    IngestionError,
    IrtcalibError,
    NumericalError,
    ParameterError,
)
from .items import DiscriminationSpec, PoolConfig
from .latent import VALIDATION_SHAPE_PARAMS, LatentSpec, describe_shapes, theoretical_moments
from .psychometrics import METRIC_AVG_INFO, METRIC_MSEM, ScaleInterval
from .sac import SacConfig, SacResult, sac_calibrate
from .study import (
    DESK_PROFILE,
    FULL_PROFILE,
    StudyCondition,
    compare_calibrations,
    run_validation_study,
    simulate_responses,
)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_INFEASIBLE = 3
EXIT_NUMERICAL = 4
EXIT_IO = 5

_METRIC_ALIASES = {"info": METRIC_AVG_INFO, "avg_info": METRIC_AVG_INFO, "msem": METRIC_MSEM}

logger = logging.getLogger("irtcalib.cli")


# ----------------------------------------------------------------------------
# small helpers


def _repro_block(command: str, seed, config_echo: dict) -> dict:
    return {
        "package": "irtcalib",
        "package_version": __version__,
        "generator": rng.GENERATOR,
        "stream_scheme": rng.STREAM_SCHEME,
        "command": command,
        "seed": seed,
        "config": config_echo,
    }


def _write_json(path, doc: dict) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        json.dump(doc, fh, indent=2, allow_nan=True)
        fh.write("\n")


def _parse_kv(text: str) -> dict:
    """Parse ``k=v,k2=v2`` (or a JSON object) into a dict of floats."""
    text = text.strip()
    if not text:
        return {}
    if text.startswith("{"):
        return json.loads(text)
    out = {}
    for part in text.split(","):
        if "=" not in part:
            raise ParameterError(f"expected key=value pairs, got {part!r}")
        key, value = part.split("=", 1)
        out[key.strip()] = float(value)
    return out


def _latent_from_args(shape: str, params_text: str | None, seed: int) -> LatentSpec:
    params = _parse_kv(params_text) if params_text else {}
    mu = params.pop("mu", 0.0)
    sigma = params.pop("sigma", 1.0)
    params.pop("seed", None)
    if "df" in params and "nu" not in params:
        params["nu"] = params.pop("df")
    if shape != "mixture" and not params:
        params = dict(VALIDATION_SHAPE_PARAMS.get(shape, {}))
    return LatentSpec(shape=shape, shape_params=params, mu=mu, sigma=sigma, seed=seed)


def _pool_config_from_args(args) -> PoolConfig:
    source = {"parametric": "parametric", "pool": "empirical_pool"}[args.item_source]
    return PoolConfig(
        model=args.model,
        source=source,
        n_items=args.items,
        gen_method=getattr(args, "gen_method", None),
        difficulty_mu=getattr(args, "difficulty_mu", 0.0),
        difficulty_sigma=getattr(args, "difficulty_sigma", 1.0),
        pool_path=getattr(args, "pool_file", None),
        discrimination=DiscriminationSpec(
            mu_log=getattr(args, "mu_log", 0.0),
            sigma_log=getattr(args, "sigma_log", 0.3),
            rho=getattr(args, "rho", -0.3),
        ),
    )


def _load_result(path):
    """Load a stored calibration result document of either type."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise IngestionError(f"cannot read calibration file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"{path}: invalid JSON at line {exc.lineno} column {exc.colno}") from exc
    kind = doc.get("result_type")
    if kind == "eqc":
        return CalibrationResult.from_dict(doc)
    if kind == "sac":
        return SacResult.from_dict(doc)
    raise ConfigurationError(f"{path}: unknown result_type {kind!r}")


def _fmt(value: float, digits: int = 4) -> str:
    return f"{value:.{digits}f}"


# ----------------------------------------------------------------------------
# calibrate


def _print_eqc_summary(result: CalibrationResult) -> None:
    cfg = result.config
    lines = [
        "Calibration results (EQC, deterministic quadrature)",
        f"  Model                    : {result.pool.model.upper()}",
        f"  Target reliability       : {_fmt(cfg.target_rho)}",
        f"  Achieved reliability     : {_fmt(result.achieved_rho)}",
        f"  Absolute error           : {result.abs_error:.2e}",
        f"  Scaling factor (c*)      : {_fmt(result.c_star)}",
        f"  Number of items          : {result.pool.n_items}",
        f"  Quadrature points (M)    : {cfg.m_quadrature}",
        f"  Reliability metric       : average-information",
        f"  Latent variance          : {_fmt(result.quadrature_sigma2)}",
        f"  Status                   : {result.status}",
        f"  Search bracket           : [{cfg.interval.c_lower:.3f}, {cfg.interval.c_upper:.3f}]",
        f"  Bracket reliabilities    : [{_fmt(result.rho_lower)}, {_fmt(result.rho_upper)}]",
    ]
    print("\n".join(lines))


def _print_sac_summary(result: SacResult) -> None:
    cfg = result.config
    metric = "average-information" if result.metric == METRIC_AVG_INFO else "error-variance (MSEM)"
    lines = [
        "Calibration results (SAC, stochastic approximation)",
        f"  Model                    : {result.pool.model.upper()}",
        f"  Target reliability       : {_fmt(cfg.target_rho)}",
        f"  Achieved reliability     : {_fmt(result.achieved_rho)}",
        f"  Absolute error           : {abs(result.achieved_rho - cfg.target_rho):.2e}",
        f"  Scaling factor (c*)      : {_fmt(result.c_star)}",
        f"  Number of items          : {result.pool.n_items}",
        f"  Iterations (N, burn-in)  : {cfg.n_iter}, {cfg.burn_in}",
        f"  Draws per iteration      : {cfg.m_per_iter}",
        f"  Evaluation sample        : {result.eval_m}",
        f"  Reliability metric       : {metric}",
        f"  Status                   : {result.status}",
        f"  Search bracket           : [{cfg.interval.c_lower:.3f}, {cfg.interval.c_upper:.3f}]",
    ]
    print("\n".join(lines))


def cmd_calibrate(args) -> int:
    if not 0.0 < args.target < 1.0:
        print(f"error: --target must lie in (0, 1), got {args.target}", file=sys.stderr)
        return EXIT_USAGE
    latent = _latent_from_args(args.latent_shape, args.latent_params, args.seed)
    items = _pool_config_from_args(args)
    interval = ScaleInterval(args.c_lower, args.c_upper)
    metric = _METRIC_ALIASES[args.metric]

    if args.algorithm == "eqc" and metric == METRIC_MSEM:
        print(
            "error: the deterministic quadrature algorithm supports only the "
            "average-information metric; use --algorithm sac for MSEM targeting",
            file=sys.stderr,
        )
        return EXIT_USAGE

    eqc_cfg = EqcConfig(
        target_rho=args.target,
        latent=latent,
        items=items,
        m_quadrature=args.m,
        interval=interval,
        tolerance=args.tolerance,
        seed=args.seed,
    )

    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        eqc_result = eqc_calibrate(eqc_cfg)

    if args.algorithm == "eqc":
        result = eqc_result
        _print_eqc_summary(result)
    else:
        if args.warm_start == "eqc" and eqc_result.status != STATUS_SUCCESS:
            _print_eqc_summary(eqc_result)
            print(_infeasible_message(eqc_result), file=sys.stderr)
            return EXIT_INFEASIBLE
        sac_cfg = SacConfig(
            target_rho=args.target,
            latent=latent,
            items=items,
            metric=metric,
            n_iter=args.n_iter,
            burn_in=args.burn_in if args.burn_in is not None else args.n_iter // 2,
            m_per_iter=args.m_per_iter,
            interval=interval,
            c_init=(eqc_result if args.warm_start == "eqc" else None),
            seed=rng.child_seed(args.seed, "cli/sac"),
        )
        result = sac_calibrate(sac_cfg)
        _print_sac_summary(result)

    if args.out:
        doc = result.to_dict()
        doc["reproducibility"] = _repro_block("calibrate", args.seed, {"argv_target": args.target})
        _write_json(args.out, doc)
        print(f"result written to {args.out}")

    if getattr(result, "status", STATUS_SUCCESS) in ("boundary_low", "boundary_high"):
        print(_infeasible_message(result), file=sys.stderr)
        return EXIT_INFEASIBLE
    return EXIT_OK


def _infeasible_message(result: CalibrationResult) -> str:
    cfg = result.config
    return (
        f"infeasible target: {cfg.target_rho} lies outside the attainable bracket "
        f"[{_fmt(result.rho_lower)}, {_fmt(result.rho_upper)}] for c in "
        f"[{cfg.interval.c_lower}, {cfg.interval.c_upper}]; the boundary solution "
        f"c = {result.c_star} was returned. Adjust the target, the test length, "
        "or widen the calibration interval."
    )


# ----------------------------------------------------------------------------
# bounds


def cmd_bounds(args) -> int:
    latent = _latent_from_args(args.latent_shape, args.latent_params, args.seed)
    items = _pool_config_from_args(args)
    interval = ScaleInterval(args.c_lower, args.c_upper)
    cfg = EqcConfig(
        target_rho=args.target if args.target is not None else 0.5,
        latent=latent,
        items=items,
        m_quadrature=args.m,
        interval=interval,
        seed=args.seed,
    )
    report = feasibility_report(cfg, scan_msem=args.scan_msem, grid_size=args.grid_size)
    print("Feasibility report")
    print(f"  Number of items          : {report['n_items']}")
    print(f"  Scale interval           : [{interval.c_lower}, {interval.c_upper}]")
    print(f"  Reliability at c_lower   : {_fmt(report['rho_lower'])}")
    print(f"  Reliability at c_upper   : {_fmt(report['rho_upper'])}")
    print(f"  Analytic ceiling (c_upper): {_fmt(report['analytic_ceiling'])}")
    print(f"  Reference ceiling (I/4)  : {_fmt(report['reference_ceiling'])}")
    if args.target is not None:
        verdict = "feasible" if report["feasible"] else "infeasible"
        print(f"  Target {args.target}: {verdict}")
    if args.scan_msem:
        verdict = "monotone" if report["msem_scan"]["is_monotone"] else "non-monotone"
        print(f"  MSEM-metric scan         : {verdict} over {args.grid_size} grid points")
    if args.out:
        report["reproducibility"] = _repro_block("bounds", args.seed, {})
        _write_json(args.out, report)
    return EXIT_OK


# ----------------------------------------------------------------------------
# generate


def cmd_generate(args) -> int:
    if args.n < 1:
        print(f"error: --n must be >= 1, got {args.n}", file=sys.stderr)
        return EXIT_USAGE
    result = _load_result(args.calibration)
    latent = result.config.latent
    dataset = simulate_responses(result, latent, args.n, args.seed)
    dataset.save_csv(args.out, header=args.header)
    sidecar = {
        "n_persons": dataset.n_persons,
        "n_items": dataset.n_items,
        "c_applied": dataset.c_applied,
        "calibration_file": str(args.calibration),
        "reproducibility": _repro_block("generate", args.seed, {"n": args.n}),
    }
    if args.emit_theta:
        sidecar["theta_true"] = [float(t) for t in dataset.theta_true]
    _write_json(str(args.out) + ".meta.json", sidecar)
    print(f"wrote {dataset.n_persons} x {dataset.n_items} response matrix to {args.out}")
    return EXIT_OK


# ----------------------------------------------------------------------------
# validate


_CONFIG_SHAPE_KEYS = {"shape", "shape_params", "mu", "sigma"}


def _config_error(field: str, message: str) -> ConfigurationError:
    return ConfigurationError(f"config field '{field}': {message}")


def _conditions_from_config(cfg: dict) -> list[StudyCondition]:
    if "conditions" in cfg:
        conditions = []
        for i, c in enumerate(cfg["conditions"]):
            try:
                conditions.append(
                    StudyCondition(
                        condition_id=int(c.get("condition_id", i)),
                        latent=LatentSpec.from_dict(c["latent"]),
                        model=c["model"],
                        item_source=c["item_source"],
                        n_items=int(c["n_items"]),
                        n_persons=int(c["n_persons"]),
                        target_rho=float(c["target_rho"]),
                        algorithm=c.get("algorithm", "eqc"),
                        replications=int(c.get("replications", 200)),
                        pool_path=c.get("pool_file"),
                        allow_any_target=bool(c.get("allow_any_target", False)),
                    )
                )
            except KeyError as exc:
                raise _config_error(f"conditions[{i}]", f"missing key {exc}") from exc
        return conditions

    for key in ("shapes", "models", "item_sources", "test_lengths", "n_persons", "targets"):
        if key not in cfg:
            raise _config_error(key, "required when no explicit 'conditions' list is given")
    shapes = []
    for i, s in enumerate(cfg["shapes"]):
        if not isinstance(s, dict) or "shape" not in s:
            raise _config_error(f"shapes[{i}]", "must be an object with a 'shape' key")
        extra = set(s) - _CONFIG_SHAPE_KEYS
        if extra:
            raise _config_error(f"shapes[{i}]", f"unknown keys {sorted(extra)}")
        shapes.append(LatentSpec.from_dict(s))
    targets = {int(k): float(v) for k, v in cfg["targets"].items()}
    conditions = []
    cid = 0
    for algorithm in cfg.get("algorithms", ["eqc"]):
        for latent in shapes:
            for model in cfg["models"]:
                for source in cfg["item_sources"]:
                    for n_items in cfg["test_lengths"]:
                        if n_items not in targets:
                            raise _config_error("targets", f"no target given for test length {n_items}")
                        for n_persons in cfg["n_persons"]:
                            conditions.append(
                                StudyCondition(
                                    condition_id=cid,
                                    latent=latent,
                                    model=model,
                                    item_source=source,
                                    n_items=int(n_items),
                                    n_persons=int(n_persons),
                                    target_rho=targets[n_items],
                                    algorithm=algorithm,
                                    replications=int(cfg.get("replications", 200)),
                                    pool_path=cfg.get("pool_file"),
                                    allow_any_target=bool(cfg.get("allow_any_target", False)),
                                )
                            )
                            cid += 1
    return conditions


def cmd_validate(args) -> int:
    try:
        with open(args.config, "r", encoding="utf-8") as fh:
            cfg = json.load(fh)
    except OSError as exc:
        raise IngestionError(f"cannot read config {args.config}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigurationError(
            f"{args.config}: invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}"
        ) from exc
    if not isinstance(cfg, dict):
        raise ConfigurationError(f"{args.config}: top level must be a JSON object")

    conditions = _conditions_from_config(cfg)
    profile = FULL_PROFILE if args.profile == "full" else DESK_PROFILE
    master_seed = args.master_seed if args.master_seed is not None else int(cfg.get("master_seed", 0))

    echo = {"master_seed": master_seed, "n_conditions": len(conditions), **profile.echo()}
    print("Validation study configuration")
    for key, value in echo.items():
        print(f"  {key} : {value}")

    summary = run_validation_study(
        conditions,
        args.out_dir,
        master_seed=master_seed,
        profile=profile,
        n_jobs=args.threads,
    )
    doc = {
        "echo": summary.echo,
        "skipped": [{"condition_id": cid, "reason": reason} for cid, reason in summary.skipped],
        "by_algorithm": summary.algorithm_rows,
        "by_target": summary.target_rows,
        "reproducibility": _repro_block("validate", master_seed, echo),
    }
    _write_json(Path(args.out_dir) / "study_summary.json", doc)
    print(f"study outputs written to {args.out_dir}")
    for row in summary.algorithm_rows:
        print(
            f"  {row['algorithm']}: {row['n_conditions']} conditions, "
            f"mean delta {row['mean_delta']:+.5f}, MAE {row['mae']:.5f}, "
            f"within 0.01: {row['pct_within_001']:.1f}%"
        )
    if summary.skipped:
        print(f"  skipped {len(summary.skipped)} infeasible condition(s)", file=sys.stderr)
    return EXIT_OK


# ----------------------------------------------------------------------------
# compare


def cmd_compare(args) -> int:
    first = _load_result(args.first)
    second = _load_result(args.second)
    report = compare_calibrations(first, second)
    print("Calibration comparison")
    print(f"  Target reliability  : {_fmt(report['target_rho'])}")
    print(f"  First c*            : {report['c_eqc']:.6f}")
    print(f"  Second c*           : {report['c_sac']:.6f}")
    print(f"  Absolute difference : {report['abs_diff']:.6f}")
    print(f"  Percent difference  : {report['pct_diff']:.2f}%")
    print(f"  Agreement (< 5%)    : {'yes' if report['agree_5pct'] else 'no'}")
    if args.out:
        report["reproducibility"] = _repro_block("compare", None, {})
        _write_json(args.out, report)
    return EXIT_OK


# ----------------------------------------------------------------------------
# shapes


def _parse_shape_list(text: str, seed: int) -> list[LatentSpec]:
    specs = []
    for i, chunk in enumerate(text.split(",")):
        chunk = chunk.strip()
        if not chunk:
            continue
        name, _, params_text = chunk.partition(":")
        params = _parse_kv(params_text.replace(";", ",")) if params_text else {}
        if "df" in params:
            params["nu"] = params.pop("df")
        if not params:
            params = dict(VALIDATION_SHAPE_PARAMS.get(name, {}))
        specs.append(LatentSpec(shape=name, shape_params=params, seed=rng.child_seed(seed, "shapes", i)))
    return specs


def cmd_shapes(args) -> int:
    specs = _parse_shape_list(args.shapes, args.seed)
    table = describe_shapes(specs, args.n)
    table.to_csv(args.out)
    print(f"density table with {len(table.densities)} shape column(s) written to {args.out}")
    moment_block = {}
    for label, moments in table.moments.items():
        spec = specs[list(table.densities).index(label)]
        theo = theoretical_moments(spec)
        moment_block[label] = {"sample": moments, "theoretical": theo}
        print(
            f"  {label}: sample mean {moments['mean']:+.4f}, var {moments['var']:.4f}, "
            f"skew {moments['skew']:+.4f} (theory {theo['skewness']:+.4f}), "
            f"excess kurtosis {moments['excess_kurtosis']:+.4f} (theory {theo['excess_kurtosis']:+.4f})"
        )
    _write_json(
        str(args.out) + ".meta.json",
        {
            "n": args.n,
            "shapes": [s.to_dict() for s in specs],
            "moments": moment_block,
            "reproducibility": _repro_block("shapes", args.seed, {"shapes": args.shapes}),
        },
    )
    return EXIT_OK


# ----------------------------------------------------------------------------
# parser


def _add_structure_flags(p: argparse.ArgumentParser, with_target: bool) -> None:
    if with_target:
        p.add_argument("--target", type=float, required=True, help="target reliability in (0,1)")
    else:
        p.add_argument("--target", type=float, default=None, help="optional target to screen")
    p.add_argument("--items", type=int, default=30, help="test length I")
    p.add_argument("--model", choices=("rasch", "twopl"), default="rasch")
    p.add_argument("--latent-shape", default="normal",
                   choices=("normal", "bimodal", "skew_pos", "heavy_tail", "mixture"))
    p.add_argument("--latent-params", default=None,
                   help="key=value list (delta, k, nu, mu, sigma) or a JSON object")
    p.add_argument("--item-source", choices=("parametric", "pool"), default="parametric",
                   help="'pool' resamples an empirical difficulty pool")
    p.add_argument("--pool-file", default=None, help="custom pool CSV (default: bundled pool)")
    p.add_argument("--gen-method", choices=("copula", "conditional", "independent"), default=None)
    p.add_argument("--rho", type=float, default=-0.3, help="target Spearman(beta, log lambda)")
    p.add_argument("--mu-log", type=float, default=0.0)
    p.add_argument("--sigma-log", type=float, default=0.3)
    p.add_argument("--difficulty-mu", type=float, default=0.0)
    p.add_argument("--difficulty-sigma", type=float, default=1.0)
    p.add_argument("--m", type=int, default=10000, help="quadrature size M")
    p.add_argument("--c-lower", type=float, default=0.3)
    p.add_argument("--c-upper", type=float, default=3.0)
    p.add_argument("--seed", type=int, default=0)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="irtcalib",
        description="Reliability-targeted IRT simulation: calibrate, screen, generate, validate.",
    )
    parser.add_argument("--version", action="version", version=f"irtcalib {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("calibrate", help="solve for the discrimination scale c*")
    _add_structure_flags(p, with_target=True)
    p.add_argument("--algorithm", choices=("eqc", "sac"), default="eqc")
    p.add_argument("--metric", choices=("info", "msem"), default="info")
    p.add_argument("--tolerance", type=float, default=1e-8)
    p.add_argument("--n-iter", type=int, default=300)
    p.add_argument("--burn-in", type=int, default=None)
    p.add_argument("--m-per-iter", type=int, default=1000)
    p.add_argument("--warm-start", choices=("eqc", "midpoint"), default="eqc")
    p.add_argument("--out", default=None, help="write the result JSON here")
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("bounds", help="feasibility screening for a configuration")
    _add_structure_flags(p, with_target=False)
    p.add_argument("--scan-msem", action="store_true",
                   help="also scan the MSEM metric for monotonicity on the interval")
    p.add_argument("--grid-size", type=int, default=15)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("generate", help="generate a response matrix from a stored calibration")
    p.add_argument("--calibration", required=True, help="result JSON from 'calibrate'")
    p.add_argument("--n", type=int, required=True, help="number of persons")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="response CSV path")
    p.add_argument("--header", action="store_true", help="write item ids as a header row")
    p.add_argument("--emit-theta", action="store_true", help="include true abilities in the sidecar")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("validate", help="run a factorial validation study")
    p.add_argument("--config", required=True, help="study config JSON")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--profile", choices=("desk", "full"), default="desk")
    p.add_argument("--master-seed", type=int, default=None, help="override the config's master_seed")
    p.add_argument("--threads", type=int,
                   default=int(os.environ.get("IRTCALIB_THREADS", os.cpu_count() or 1)))
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("compare", help="compare two stored calibration results")
    p.add_argument("--first", required=True, help="result JSON (e.g. from EQC)")
    p.add_argument("--second", required=True, help="result JSON (e.g. from SAC)")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("shapes", help="emit a latent density table")
    p.add_argument("--shapes", required=True,
                   help="comma list, optional params after a colon: 'normal,bimodal:delta=0.8'")
    p.add_argument("--n", type=int, default=10000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_shapes)
    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse handles --help and flag errors itself
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (ParameterError, ConfigurationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (IngestionError, OSError) as exc:
        print(f"file error: {exc}", file=sys.stderr)
        return EXIT_IO
    except IrtcalibError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as exc:  # malformed inputs must never produce a traceback
        print(f"unexpected error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
