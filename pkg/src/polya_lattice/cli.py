"""Command-line interface: ``polya-lattice {simulate,verify,curve,pmf,enumerate}``.

Any flag may also come from a ``--config FILE`` of ``key = value`` lines
(keys are flag names without the leading dashes); flags given on the
command line win. Exit status is 0 on success, 1 on a domain error or a
failed check, 2 on a usage error.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

from .analysis import capital_curve, rank_kendall_tau
from .core import ModelParams, log_polya_pmf
from .fileio import (
    atomic_write,
    curve_csv,
    read_snapshot,
    render_curve_svg,
    render_trajectory_svg,
    write_curve,
    write_report,
    write_trajectory,
)
from .simplex import enumerate_compositions
from .simulate import Fluctuation, Mode, ScenarioConfig, check_levels, run_ensemble, run_scenario
from .verify import run_checks


class UsageError(Exception):
    pass


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return value


def _non_negative_int(text: str) -> int:
    value = int(text)
    if value < 0:
        raise argparse.ArgumentTypeError(f"expected a non-negative integer, got {text}")
    return value


def _composition(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(part) for part in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _model_flags(p: argparse.ArgumentParser, multi: bool = False) -> None:
    nargs = "+" if multi else None
    p.add_argument("--alpha", type=float, nargs=nargs, required=True,
                   help="prior weight per stock (theta = stocks * alpha is derived)")
    p.add_argument("--stocks", type=_positive_int, nargs=nargs, required=True,
                   help="number of stocks / colors m")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="polya-lattice",
        description="Polya urn with UP, DOWN and DOWN/UP moves on integer compositions.",
    )
    parser.add_argument("--config", type=Path, help="key = value file mirroring the flags")
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run growth or two-phase market scenarios")
    _model_flags(sim)
    sim.add_argument("--mode", choices=[m.value for m in Mode], default=Mode.GROWTH_ONLY.value)
    sim.add_argument("--steps", type=_non_negative_int,
                     help="total steps (default 3000; two-phase: 4 x threshold)")
    sim.add_argument("--threshold", type=_non_negative_int,
                     help="level at which growth stops (two-phase only)")
    sim.add_argument("--fluctuation", choices=[f.value for f in Fluctuation], default=Fluctuation.PAIR.value,
                     help="post-threshold move: cap-conserving DOWN/UP pair (default) or single alternating moves")
    sim.add_argument("--seed", type=_non_negative_int, default=0, help="64-bit seed (default 0)")
    sim.add_argument("--record-every", type=_positive_int, default=1, help="recording cadence (default 1)")
    sim.add_argument("--replicas", type=_positive_int, default=1, help="independent replicas (default 1)")
    sim.add_argument("--jobs", type=_positive_int, default=1, help="worker processes for replicas (default 1)")
    sim.add_argument("--top-k", type=_positive_int, help="truncate curves to the top k stocks")
    sim.add_argument("--out-dir", type=Path, required=True, help="directory for output files")
    sim.add_argument("--format", choices=["csv", "svg"], action="append",
                     help="output format; repeat for several (default csv)")

    ver = sub.add_parser("verify", help="exact equilibrium checks by enumeration")
    _model_flags(ver, multi=True)
    levels = ver.add_mutually_exclusive_group(required=True)
    levels.add_argument("--level", type=_positive_int, nargs="+", help="levels n to check")
    levels.add_argument("--max-level", type=_positive_int, help="check every level 1..N")
    ver.add_argument("--output", type=Path, help="JSON-lines report path (default stdout)")
    ver.add_argument("--format", choices=["jsonl", "text"], default="jsonl")

    cur = sub.add_parser("curve", help="capital distribution curve of a market snapshot")
    cur.add_argument("--input", type=Path, required=True, help="CSV with header ticker,market_cap")
    cur.add_argument("--output", type=Path, help="curve CSV path (default stdout)")
    cur.add_argument("--top-k", type=_positive_int, help="keep the k largest stocks")
    cur.add_argument("--svg", type=Path, help="also write a log-log SVG plot")

    pmf = sub.add_parser("pmf", help="exact Polya probability of a composition")
    _model_flags(pmf)
    pmf.add_argument("--composition", type=_composition, required=True, help="e.g. 3,2,1")

    enum_ = sub.add_parser("enumerate", help="list the compositions of C_n in index order")
    enum_.add_argument("--stocks", type=_positive_int, required=True)
    enum_.add_argument("--level", type=_non_negative_int, required=True)
    enum_.add_argument("--output", type=Path, help="CSV path (default stdout)")
    return parser


def _config_argv(path: Path) -> list[str]:
    argv = []
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from None
    for lineno, line in enumerate(lines, start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        argv.append("--" + key.replace("_", "-"))
        argv.extend(value.split())
    return argv


def _expand_config(argv: list[str]) -> list[str]:
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config", type=Path)
    known, rest = pre.parse_known_args(argv)
    if known.config is None:
        return argv
    extra = _config_argv(known.config)
    # config flags go right after the subcommand so explicit flags override them
    for k, token in enumerate(rest):
        if not token.startswith("-"):
            return rest[:k + 1] + extra + rest[k + 1:]
    return rest + extra


def _emit(text: str, path: Path | None) -> None:
    if path is None:
        sys.stdout.write(text)
    else:
        atomic_write(path, text)


def cmd_simulate(args) -> int:
    mode = Mode(args.mode)
    if mode is Mode.TWO_PHASE and args.threshold is None:
        raise UsageError("--mode two-phase needs --threshold")
    if mode is Mode.GROWTH_ONLY and args.threshold is not None:
        raise UsageError("--threshold only applies to --mode two-phase")
    steps = args.steps
    if steps is None:
        steps = 4 * args.threshold if mode is Mode.TWO_PHASE else 3000
    formats = set(args.format or ["csv"])
    cfg = ScenarioConfig(
        params=ModelParams(args.alpha, args.stocks),
        mode=mode,
        total_steps=steps,
        threshold_level=args.threshold,
        seed=args.seed,
        record_every=args.record_every,
        fluctuation=Fluctuation(args.fluctuation),
    )
    if args.replicas == 1:
        trajectories = [run_scenario(cfg)]
    else:
        trajectories = run_ensemble(cfg, args.replicas, n_jobs=args.jobs)

    args.out_dir.mkdir(parents=True, exist_ok=True)
    for r, traj in enumerate(trajectories):
        check_levels(traj)
        prefix = "" if len(trajectories) == 1 else f"replica_{r:03d}_"
        terminal = capital_curve(traj.terminal, args.top_k) if traj.levels[-1] > 0 else None
        curves, names = [], []
        if mode is Mode.TWO_PHASE and cfg.threshold_level > 0:
            curves.append(capital_curve(traj.at_step(cfg.threshold_level), args.top_k))
            names.append(f"t={cfg.threshold_level}")
        if terminal is not None:
            curves.append(terminal)
            names.append(f"t={cfg.total_steps}")
        out = args.out_dir
        if "csv" in formats:
            write_trajectory(out / f"{prefix}trajectory.csv", traj)
            if terminal is not None:
                write_curve(out / f"{prefix}curve_terminal.csv", terminal)
            if len(curves) == 2:
                write_curve(out / f"{prefix}curve_threshold.csv", curves[0])
        if "svg" in formats:
            render_trajectory_svg(traj, out / f"{prefix}trajectory.svg",
                                  title=f"Market weights, {cfg.params.m} stocks (alpha={cfg.params.alpha:g})")
            if curves:
                render_curve_svg(curves, out / f"{prefix}curves.svg", names=names)
        line = {"replica": r, "terminal_level": int(traj.levels[-1]), "recorded_steps": len(traj.steps)}
        if len(curves) == 2:
            start, end = traj.at_step(cfg.threshold_level), traj.terminal
            line["kendall_tau"] = rank_kendall_tau(start, end)
        print(json.dumps(line))
    return 0


def cmd_verify(args) -> int:
    levels = args.level if args.level is not None else list(range(1, args.max_level + 1))
    reports = []
    for alpha in args.alpha:
        for m in args.stocks:
            params = ModelParams(alpha, m)
            for n in levels:
                reports.extend(run_checks(params, n))
    if args.format == "jsonl":
        if args.output is None:
            for r in reports:
                print(json.dumps(r.to_dict()))
        else:
            write_report(args.output, reports)
    else:
        text = "".join(
            f"{'PASS' if r.passed else 'FAIL'} {r.check:<22} alpha={r.params['alpha']:g} m={r.params['m']} "
            f"n={r.params['n']} residual={r.residual:.3e}\n"
            for r in reports
        )
        _emit(text, args.output)
    failed = [r for r in reports if not r.passed]
    if failed:
        print(f"error: {len(failed)} of {len(reports)} checks exceeded tolerance", file=sys.stderr)
        return 1
    return 0


def cmd_curve(args) -> int:
    snapshot = read_snapshot(args.input)
    curve = capital_curve(snapshot, args.top_k)
    _emit(curve_csv(curve), args.output)
    if args.svg is not None:
        render_curve_svg(curve, args.svg, names=[snapshot.label], title=f"Capital distribution curve: {snapshot.label}")
    return 0


def cmd_pmf(args) -> int:
    params = ModelParams(args.alpha, args.stocks)
    logp = log_polya_pmf(params, args.composition)
    print(f"probability={math.exp(logp)!r} log_probability={logp!r}")
    return 0


def cmd_enumerate(args) -> int:
    states = enumerate_compositions(args.stocks, args.level)
    header = "index," + ",".join(f"n{i + 1}" for i in range(args.stocks)) + "\n"
    body = "".join(f"{k}," + ",".join(map(str, row)) + "\n" for k, row in enumerate(states.tolist()))
    _emit(header + body, args.output)
    return 0


COMMANDS = {
    "simulate": cmd_simulate,
    "verify": cmd_verify,
    "curve": cmd_curve,
    "pmf": cmd_pmf,
    "enumerate": cmd_enumerate,
}


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(_expand_config(argv))
        return COMMANDS[args.command](args)
    except SystemExit as exc:
        return int(exc.code) if isinstance(exc.code, int) else 2
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, OverflowError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
