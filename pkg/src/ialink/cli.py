"""Command line front end.

Exit codes: 0 success, 2 configuration error, 3 when more than 1% of the
attempted trials were rejected numerically.
"""

from __future__ import annotations

import argparse
import math
import sys

import numpy as np

from . import analysis, dps, harness
from .config import ConfigError, read_config

REJECTION_LIMIT = 0.01


def _build_scenario(args):
    base = None
    if args.preset:
        table = harness.presets()
        if args.preset not in table:
            raise ConfigError(f"unknown preset {args.preset!r}; "
                              f"have {', '.join(sorted(table))}")
        base = table[args.preset]
    raw = read_config(args.config) if args.config else {}
    if base is None and not raw:
        raise ConfigError("give --config, --preset or both")
    return harness.scenario_from_mapping(raw, base)


def _emit_fmt(args):
    return "both" if args.svg else "csv"


def _cmd_simulate(args):
    scenario = _build_scenario(args)
    table = harness.run_scenario(scenario, trials=args.trials, seed=args.seed)
    for path in harness.emit(table, _emit_fmt(args), args.out):
        print(path)
    if table.rejection_rate > REJECTION_LIMIT:
        print(f"rejection rate {table.rejection_rate:.2%} exceeds "
              f"{REJECTION_LIMIT:.0%}", file=sys.stderr)
        return 3
    return 0


def _cmd_sweep(args):
    table = harness.presets()
    names = args.presets.split(",") if args.presets else sorted(table)
    raw = read_config(args.config) if args.config else {}
    worst = 0.0
    for name in names:
        name = name.strip()
        if name not in table:
            raise ConfigError(f"unknown preset {name!r}")
        scenario = harness.scenario_from_mapping(dict(raw), table[name]) \
            if raw else table[name]
        result = harness.run_scenario(scenario, trials=args.trials,
                                      seed=args.seed)
        for path in harness.emit(result, _emit_fmt(args), args.out):
            print(path)
        worst = max(worst, result.rejection_rate)
    if worst > REJECTION_LIMIT:
        print(f"rejection rate {worst:.2%} exceeds {REJECTION_LIMIT:.0%}",
              file=sys.stderr)
        return 3
    return 0


def _cmd_dps_info(args):
    m = args.m
    if not 0.0 <= args.nu_d < 0.5:
        raise ConfigError("nu_d must lie in [0, 1/2)")
    p = 10.0 ** (args.snr_db / 10.0) if args.p is None else args.p
    if p <= 0:
        raise ConfigError("power must be positive")
    if args.nu_d == 0.0:
        raw = np.array([float(m)] + [0.0] * (m - 1))
        kappa = np.array([1.0] + [0.0] * (m - 1))
        d_ub = 1
    else:
        raw = np.linalg.eigvalsh(dps.flat_covariance(m, args.nu_d))[::-1]
        kappa = np.clip(2.0 * args.nu_d * raw, 0.0, 1.0)
        d_ub = dps.optimal_dimension_unquantized(m, args.nu_d, p)
    print("index,lam,kappa,d_ub")
    for i in range(m):
        print(f"{i + 1},{raw[i]:.17g},{kappa[i]:.17g},{d_ub}")
    return 0


def _cmd_bound(args):
    scenario = _build_scenario(args)
    cfg = scenario.cfg
    if args.seed is not None:
        cfg = cfg.replace(seed=args.seed)
    if args.d is not None:
        d = args.d
    elif isinstance(cfg.d_mode, int):
        d = cfg.d_mode
    else:
        d = analysis.adaptive_sds(cfg)[0]
    payload = cfg.payload_indices
    mse = analysis.mse_profile(cfg, d)
    ds = d * cfg.s
    zeta = analysis.zeta_profile(cfg, d) if ds > 1 else np.zeros(cfg.t)
    print("m,mse,zeta,pred_1,pred_2,pred_3,quant_1,quant_2,quant_3")
    for j, m in enumerate(payload):
        pred = analysis.prediction_leakage_bound(int(m), d, cfg)
        quant = analysis.quantization_leakage_bound(int(m), d, cfg)
        cells = [f"{m}", f"{mse[j]:.17g}", f"{zeta[j]:.17g}"]
        cells += [f"{x:.17g}" for x in pred] + [f"{x:.17g}" for x in quant]
        print(",".join(cells))
    dr_ub = analysis.rate_loss_upper_bound(cfg, d)
    r_lb = analysis.rate_lower_bound(args.perfect_rate, dr_ub) \
        if args.perfect_rate is not None else math.nan
    print()
    print("key,value")
    print(f"q_bound,{analysis.q_bound(cfg.n_d, ds):.17g}")
    print(f"dr_ub,{dr_ub:.17g}")
    print(f"r_lb,{r_lb:.17g}")
    print(f"d,{d}")
    return 0


def _cmd_plot(args):
    table = harness.from_csv(args.source)
    for path in harness.emit(table, "svg", args.out):
        print(path)
    return 0


def _add_common(p, trials=True):
    p.add_argument("--config", help="flat key=value configuration file")
    p.add_argument("--preset", help="named reference scenario, e.g. fig3")
    p.add_argument("--seed", type=int, help="override the base seed")
    if trials:
        p.add_argument("--trials", type=int, help="override the trial count")
        p.add_argument("--out", default=".", help="output directory")
        p.add_argument("--svg", action="store_true",
                       help="also render an SVG chart")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="ialink",
        description="Link-level interference alignment with limited "
                    "delayed feedback over time-variant channels.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run one scenario")
    _add_common(p)
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("sweep", help="run several preset scenarios")
    p.add_argument("--presets", help="comma list of presets (default: all)")
    _add_common(p)
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("dps-info",
                       help="subspace eigenvalues and dimension rule")
    p.add_argument("--m", type=int, required=True, help="pilot window length")
    p.add_argument("--nu-d", dest="nu_d", type=float, required=True,
                   help="normalized Doppler frequency")
    p.add_argument("--snr-db", dest="snr_db", type=float, default=30.0)
    p.add_argument("--p", type=float, help="linear power (overrides --snr-db)")
    p.set_defaults(func=_cmd_dps_info)

    p = sub.add_parser("bound", help="closed-form leakage and rate-loss bounds")
    _add_common(p, trials=False)
    p.add_argument("--d", type=int, help="subspace dimension (default: adaptive)")
    p.add_argument("--perfect-rate", type=float,
                   help="perfect-CSI mean rate for the rate lower bound")
    p.set_defaults(func=_cmd_bound)

    p = sub.add_parser("plot", help="render an SVG chart from a result CSV")
    p.add_argument("--from", dest="source", required=True,
                   help="result CSV written by simulate/sweep")
    p.add_argument("--out", default=".", help="output directory")
    p.set_defaults(func=_cmd_plot)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
