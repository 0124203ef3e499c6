"""Command-line interface.

Subcommands::

    sflgame run <config> [--out FILE] [--jobs K] [--scenario-dir DIR] [--integer-r]
    sflgame list [--scenario-dir DIR]
    sflgame fit <samples.csv> [--out FILE]
    sflgame privacy --threshold X --sigma Y [--table CSV]

Exit codes: 0 on success, 2 on configuration/input errors (the message
names the offending field), 3 on solver errors (no participation,
non-convergence, no qualifying cut, ...).
"""

from __future__ import annotations

import argparse
import sys

from .errors import ConfigError, SFLGameError, SolverError
from .privacy import PrivacyTable
from .regression import fit_report, read_samples_csv
from .scenarios import list_scenarios, load_scenario, resolve_scenario, run_scenario


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sflgame",
        description="Equilibrium, incentive-design, and efficiency solvers "
                    "for the split-federated-learning contribution game.")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a scenario config and emit CSV")
    run.add_argument("config", help="scenario file path or bundled scenario name")
    run.add_argument("--out", help="write CSV here instead of stdout")
    run.add_argument("--jobs", type=int, default=1, help="parallel sweep evaluations")
    run.add_argument("--scenario-dir", action="append", default=[],
                     help="extra directory to resolve scenario names in")
    run.add_argument("--integer-r", action="store_true",
                     help="round optimal incentives to the better integer "
                          "(stackelberg mode only)")

    lst = sub.add_parser("list", help="list discoverable scenario names")
    lst.add_argument("--scenario-dir", action="append", default=[],
                     help="extra directory to include in the listing")

    fit = sub.add_parser("fit", help="fit the workload/model-size curves from a samples CSV")
    fit.add_argument("samples", help="CSV with header l_c,gflops,mparams")
    fit.add_argument("--out", help="write CSV here instead of stdout")

    privacy = sub.add_parser("privacy", help="recommend the minimum cut layer "
                                             "for a leakage threshold")
    privacy.add_argument("--threshold", type=float, required=True,
                         help="maximum acceptable reconstruction SSIM in [0, 1]")
    privacy.add_argument("--sigma", type=float, required=True,
                         help="noise level; must be tabulated")
    privacy.add_argument("--table", help="privacy table CSV (default: bundled)")
    return parser


def _cmd_run(args) -> int:
    path = resolve_scenario(args.config, args.scenario_dir)
    scenario = load_scenario(path)
    if args.integer_r and scenario.mode != "stackelberg":
        raise ConfigError("--integer-r only applies to stackelberg scenarios")
    if args.out:
        with open(args.out, "w", newline="") as fh:
            run_scenario(scenario, out=fh, jobs=args.jobs, integer_r=args.integer_r)
    else:
        run_scenario(scenario, jobs=args.jobs, integer_r=args.integer_r)
    return 0


def _cmd_list(args) -> int:
    for name in list_scenarios(args.scenario_dir):
        print(name)
    return 0


def _cmd_fit(args) -> int:
    samples = read_samples_csv(args.samples)
    report = fit_report(samples)
    lines = ["model,coef0,coef1,rmse,n_samples"]
    if report.flops_slope is not None:
        lines.append(f"flops_linear,{report.flops_slope:.12g},"
                     f"{report.flops_intercept:.12g},{report.rmse_flops:.12g},"
                     f"{report.n_samples}")
    if report.params_scale is not None:
        lines.append(f"params_exponential,{report.params_scale:.12g},"
                     f"{report.params_rate:.12g},{report.rmse_params:.12g},"
                     f"{report.n_samples}")
    text = "\n".join(lines) + "\n"
    if args.out:
        with open(args.out, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


def _cmd_privacy(args) -> int:
    table = PrivacyTable.from_csv(args.table) if args.table else PrivacyTable.default()
    l_c = table.recommend_min_cut(args.threshold, args.sigma)
    record = table.lookup(l_c, args.sigma)
    print(f"l_c={l_c} ssim={record.ssim:.12g} accuracy={record.accuracy:.12g}")
    return 0


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    handlers = {"run": _cmd_run, "list": _cmd_list, "fit": _cmd_fit,
                "privacy": _cmd_privacy}
    try:
        return handlers[args.command](args)
    except SolverError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (ConfigError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except SFLGameError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
