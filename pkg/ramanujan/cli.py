import json
import sys
from argparse import ArgumentParser, Namespace
from logging import Logger
from typing import Any, Callable, Dict, List, Optional, Sequence

import numpy as np

import pandas as pd

from ramanujan.cfunc import eval_c_grid
from ramanujan.master import forward_transform_grid, reconstruct_general, verify_routes
from ramanujan.model import Model, build_model
from ramanujan.phi_ode import eval_phi
from ramanujan.sinetype import build_sine_type, decay_envelope, residue_bound_ratios, residue_ratio_growth
from ramanujan.spectrum import solve_eigen
from ramanujan.symbols import SymbolFunction, exp_shift, rational_damped, zero_symbol
from ramanujan.regression import CASES, run_regression
from ramanujan.utils.constants import (
    ENVELOPE_SPREAD_MAX,
    RESIDUE_GROWTH_MAX,
    CMethodChoices,
    NumericalError,
    OutputFormat,
    PathChoices,
)
from ramanujan.utils.utils import RunConfig, config_hash, get_logger, load_run_config, parse_grid, save_json, save_table


SYMBOL_CHOICES = ["exp_shift", "rational_damped", "zero"]
EXIT_OK, EXIT_INVALID, EXIT_NUMERICAL = 0, 2, 3


def _parse_roots(roots: Optional[str]) -> Optional[List[float]]:
    if roots is None:
        return None
    return [float(r) for r in roots.split(",") if r.strip() != ""]


def _parse_floats(values: str) -> List[float]:
    return [float(v) for v in values.split(",") if v.strip() != ""]


def _load_config(args: Namespace) -> RunConfig:
    overrides = dict(
        alpha=args.alpha,
        beta=args.beta,
        roots=_parse_roots(args.roots),
        series_order=args.series_order,
        n_max=args.nmax,
        t_grid=args.tgrid,
        lambda_grid=args.lgrid,
        format=args.format,
        path=args.out,
    )
    return load_run_config(args.config, overrides)


def _build_model(config: RunConfig) -> Model:
    section = config["model"]
    return build_model(section["alpha"], section["beta"], section["roots"], section["series_order"])


def _output_path(config: RunConfig, command: str, action: str, suffix: str = "") -> Optional[str]:
    """results/<command>/<action><suffix>.<format> unless output.path is given; "-" means stdout."""
    path, fmt = config["output"]["path"], config["output"]["format"]
    if path == "-":
        return None
    if path is None:
        return f"results/{command}/{action}{suffix}.{fmt}"
    return path if suffix == "" else f"{path.rsplit('.', 1)[0]}{suffix}.{fmt}"


def _sidecar_path(table_path: Optional[str]) -> Optional[str]:
    return None if table_path is None else f"{table_path.rsplit('.', 1)[0]}.meta.json"


def _emit(config: RunConfig, table: pd.DataFrame, path: Optional[str], meta: Optional[Dict[str, Any]] = None) -> None:
    save_table(table, path, config["output"]["format"])
    if meta is None:
        return

    meta_path = _sidecar_path(path)
    if meta_path is None:
        sys.stderr.write(json.dumps(meta, indent=4, sort_keys=True) + "\n")
    else:
        save_json(meta_path, meta)


def _to_builtin(value: Any) -> Any:
    if isinstance(value, dict):
        return {str(k): _to_builtin(v) for k, v in value.items()}
    if isinstance(value, (list, tuple, np.ndarray)):
        return [_to_builtin(v) for v in value]
    if isinstance(value, (np.bool_, bool)):
        return bool(value)
    if isinstance(value, (np.floating, np.integer)):
        return value.item()
    return value


def model_show(args: Namespace, config: RunConfig, logger: Logger) -> int:
    model = _build_model(config)
    info = dict(
        model.to_dict(),
        rho=model.rho,
        rho_0=model.rho_0,
        kappa=model.kappa,
        theta=model.theta,
        liouville_shift=model.liouville_shift,
        condition_report=model.condition_report,
    )
    path = _output_path(config, "model", "show")
    info = _to_builtin(info)
    if path is None:
        sys.stdout.write(json.dumps(info, indent=4, sort_keys=True) + "\n")
    else:
        save_json(path.rsplit(".", 1)[0] + ".json", info)
    return EXIT_OK


def _parse_lambda(args: Namespace) -> complex:
    """--lambda RE,IM, or the --lam alias taking a Python complex literal."""
    if args.lambda_parts is None:
        return complex(args.lam)

    parts = _parse_floats(args.lambda_parts)
    if len(parts) not in (1, 2):
        raise ValueError(f"--lambda must be RE or RE,IM, but got {args.lambda_parts}")
    return complex(parts[0], parts[1] if len(parts) == 2 else 0.0)


def phi_eval(args: Namespace, config: RunConfig, logger: Logger) -> int:
    model = _build_model(config)
    lam = _parse_lambda(args)
    if args.t is None:
        t = parse_grid(config["ranges"]["t_grid"])
    else:
        t = parse_grid(args.t if ":" in args.t else _parse_floats(args.t))
    path_choice = PathChoices.imaginary_segment if args.imag else PathChoices(args.path)
    phi = eval_phi(model, lam, t[t > 0], config["tolerances"]["ode_tol"], path=path_choice)
    logger.info(f"phi_{lam} on the {path_choice.value}, estimated error {phi.est_error}")

    table = pd.DataFrame(
        dict(
            t=phi.nodes,
            phi_re=phi.values.real,
            phi_im=phi.values.imag,
            dphi_re=phi.derivs.real,
            dphi_im=phi.derivs.imag,
            est_error=phi.est_error,
        )
    )
    _emit(config, table, _output_path(config, "phi", "eval"))
    return EXIT_OK


def cfunc_eval(args: Namespace, config: RunConfig, logger: Logger) -> int:
    model = _build_model(config)
    if args.lambda_parts is None:
        lams = parse_grid(config["ranges"]["lambda_grid"]) + 1j * args.im
    else:
        lams = np.array([_parse_lambda(args)])
    method = CMethodChoices(args.method)
    values, errors = eval_c_grid(model, lams, method, config["tolerances"]["ode_tol"])
    table = pd.DataFrame(
        dict(
            lam_re=lams.real,
            lam_im=lams.imag,
            c_re=values.real,
            c_im=values.imag,
            est_error=errors,
            method=method.value,
        )
    )
    if np.all(lams.imag == 0):
        table["plancherel_density"] = 1 / np.abs(values) ** 2
    _emit(config, table, _output_path(config, "cfunc", "eval"))
    return EXIT_OK


def spectrum_solve(args: Namespace, config: RunConfig, logger: Logger) -> int:
    model = _build_model(config)
    tols = config["tolerances"]
    data = solve_eigen(model, config["ranges"]["n_max"], tols["eigen_tol"], tols["ode_tol"], workers=args.workers)
    table = pd.DataFrame(
        dict(
            n=np.arange(data.nus.size),
            nu=data.nus,
            mu=data.mus,
            c_n=data.matching,
            shoot_residual=data.diagnostics["shoot_residual"],
            nu_liouville=data.liouville_nus,
        )
    )
    meta = dict(
        model=model.to_dict(),
        tolerances=dict(tols),
        config_hash=config_hash(dict(model=config["model"], tolerances=config["tolerances"])),
        m0=data.m0,
        n0=data.n0,
        liouville_shift=model.liouville_shift,
    )
    _emit(config, table, _output_path(config, "spectrum", "solve"), _to_builtin(meta))
    return EXIT_OK


def sinetype_table(args: Namespace, config: RunConfig, logger: Logger) -> int:
    model = _build_model(config)
    tols = config["tolerances"]
    data = solve_eigen(model, config["ranges"]["n_max"], tols["eigen_tol"], tols["ode_tol"])
    sine = build_sine_type(model, data)
    ratios = residue_bound_ratios(sine)
    table = pd.DataFrame(
        dict(
            n=ratios["n"],
            mu=ratios["mu"],
            d_re=sine.residues.real,
            d_im=sine.residues.imag,
            ratio=ratios["power_ratio"],
            spectral_ratio=ratios["spectral_ratio"],
        )
    )
    low, high = decay_envelope(sine)
    growth = residue_ratio_growth(sine)
    meta = dict(
        branch=sine.branch.value,
        n0=sine.n0,
        truncation_N=sine.truncation_N,
        rho_0=model.rho_0,
        envelope=[low, high],
        residue_growth=growth,
        bounded=bool(growth < RESIDUE_GROWTH_MAX and high / low < ENVELOPE_SPREAD_MAX),
    )
    _emit(config, table, _output_path(config, "sinetype", "table"), _to_builtin(meta))
    return EXIT_OK


def _build_symbol(args: Namespace) -> SymbolFunction:
    if args.symbol == "zero":
        return zero_symbol(args.p)
    if args.symbol == "rational_damped":
        return rational_damped(args.p)
    return exp_shift(args.p)


def master_verify(args: Namespace, config: RunConfig, logger: Logger) -> int:
    model = _build_model(config)
    tols = config["tolerances"]
    a = _build_symbol(args)
    sigmas = _parse_floats(args.sigmas)
    data = solve_eigen(model, config["ranges"]["n_max"], tols["eigen_tol"], tols["ode_tol"])
    sine = build_sine_type(model, data)
    t = parse_grid(config["ranges"]["t_grid"])
    if model.alpha > 0 and model.beta > 0:
        routes = verify_routes(model, data, sine, a, t, sigmas, tols["quad_tol"], tols["ode_tol"])
    else:
        routes = reconstruct_general(model, data, sine, a, t, tol=tols["quad_tol"], sigmas=sigmas)
    forward = forward_transform_grid(
        model, sine, a, parse_grid(config["ranges"]["lambda_grid"]), tols["quad_tol"], tols["ode_tol"]
    )

    max_residual = float(np.max(forward.residuals))
    passed = routes.max_discrepancy < tols["route_tol"] and max_residual < 1e-4
    summary = dict(
        symbol=args.symbol,
        p=args.p,
        sigmas=sigmas,
        max_discrepancy=routes.max_discrepancy,
        max_forward_residual=max_residual,
        t_out=forward.t_out,
        tolerances=dict(tols),
        passed=passed,
    )
    path = _output_path(config, "master", "verify")
    _emit(config, routes.to_frame(), path, _to_builtin(summary))
    _emit(config, forward.to_frame(), _output_path(config, "master", "verify", "_forward"))
    logger.info(f"master verify summary: {summary}")
    return EXIT_OK if passed else EXIT_NUMERICAL


def regress(args: Namespace, config: RunConfig, logger: Logger) -> int:
    summary = run_regression(config["tolerances"], args.baseline_dir, args.case)
    passed = all(case["passed"] for case in summary.values())
    save_json("results/regress/summary.json", _to_builtin(summary))
    for name, case in summary.items():
        state = "frozen" if case["frozen"] else ("ok" if case["passed"] else "FAILED")
        sys.stdout.write(f"{name}: {state}\n")
    return EXIT_OK if passed else EXIT_NUMERICAL


HANDLERS: Dict[str, Callable[[Namespace, RunConfig, Logger], int]] = {
    "model": model_show,
    "phi": phi_eval,
    "cfunc": cfunc_eval,
    "spectrum": spectrum_solve,
    "sinetype": sinetype_table,
    "master": master_verify,
    "regress": regress,
}


def _common_parser() -> ArgumentParser:
    parser = ArgumentParser(add_help=False)
    parser.add_argument("--config", type=str, default=None)
    parser.add_argument("--alpha", type=float, default=None)
    parser.add_argument("--beta", type=float, default=None)
    parser.add_argument("--roots", type=str, default=None, help="comma separated, empty for B = 1")
    parser.add_argument("--series-order", dest="series_order", type=int, default=None)
    parser.add_argument("--nmax", type=int, default=None)
    parser.add_argument("--tgrid", type=str, default=None)
    parser.add_argument("--lgrid", type=str, default=None)
    parser.add_argument("--format", type=str, choices=[f.value for f in OutputFormat], default=None)
    parser.add_argument("--out", type=str, default=None, help="output path, - for stdout")
    return parser


def build_parser() -> ArgumentParser:
    common = _common_parser()
    parser = ArgumentParser(prog="ramanujan")
    commands = parser.add_subparsers(dest="command", required=True)

    model = commands.add_parser("model").add_subparsers(dest="action", required=True)
    model.add_parser("show", parents=[common])

    phi = commands.add_parser("phi").add_subparsers(dest="action", required=True)
    phi_cmd = phi.add_parser("eval", parents=[common])
    lam_group = phi_cmd.add_mutually_exclusive_group(required=True)
    lam_group.add_argument("--lambda", dest="lambda_parts", type=str, default=None, help="RE,IM")
    lam_group.add_argument("--lam", type=str, default=None, help="complex literal, e.g. 1.5-0.2j")
    phi_cmd.add_argument("--t", type=str, default=None, help="T, a comma list or start:stop:step")
    phi_cmd.add_argument("--imag", action="store_true", help="evaluate s -> phi_lambda(is)")
    phi_cmd.add_argument("--path", choices=[PathChoices.real_axis.value, PathChoices.imaginary_segment.value])
    phi_cmd.set_defaults(path=PathChoices.real_axis.value)

    cfunc = commands.add_parser("cfunc").add_subparsers(dest="action", required=True)
    cfunc_cmd = cfunc.add_parser("eval", parents=[common])
    cfunc_cmd.add_argument("--method", choices=[m.value for m in CMethodChoices], default="wronskian")
    cfunc_cmd.add_argument(
        "--lambda", dest="lambda_parts", type=str, default=None, help="RE,IM; the lambda grid otherwise"
    )
    cfunc_cmd.add_argument("--im", type=float, default=0.0, help="imaginary part added to the lambda grid")

    spectrum = commands.add_parser("spectrum").add_subparsers(dest="action", required=True)
    spectrum_cmd = spectrum.add_parser("solve", parents=[common])
    spectrum_cmd.add_argument("--workers", type=int, default=None)

    sinetype = commands.add_parser("sinetype").add_subparsers(dest="action", required=True)
    sinetype.add_parser("table", parents=[common])

    master = commands.add_parser("master").add_subparsers(dest="action", required=True)
    master_cmd = master.add_parser("verify", parents=[common])
    master_cmd.add_argument("--symbol", choices=SYMBOL_CHOICES, default="exp_shift")
    master_cmd.add_argument("--p", type=float, default=1.0)
    master_cmd.add_argument("--sigmas", type=str, default="0,0.1,0.2")

    regress_cmd = commands.add_parser("regress", parents=[common])
    regress_cmd.add_argument("--baseline-dir", dest="baseline_dir", type=str, default="baselines")
    regress_cmd.add_argument("--case", action="append", choices=list(CASES.keys()), default=None)
    return parser


def run_command(argv: Optional[Sequence[str]] = None) -> int:
    """
    Run one subcommand.

    Returns:
        exit_code (int): 0 on success, 2 on invalid input, 3 on a numerical or acceptance failure.
    """
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as err:
        return int(err.code) if isinstance(err.code, int) else EXIT_INVALID

    logger = get_logger(args.command, "ramanujan")
    try:
        config = _load_config(args)
        return HANDLERS[args.command](args, config, logger)
    except (ValueError, KeyError, TypeError, FileNotFoundError) as err:
        logger.error(f"{args.command} rejected its input: {err}")
        sys.stderr.write(f"error: {err}\n")
        return EXIT_INVALID
    except NumericalError as err:
        logger.error(f"{args.command} failed numerically: {err}")
        sys.stderr.write(f"numerical failure: {err}\n")
        return EXIT_NUMERICAL
