"""Command-line front end.

Exit codes: 0 on success, 2 for configuration errors, 3 for I/O errors.
"""

from __future__ import annotations

import argparse
import csv
import io
import logging
import math
import sys
import warnings
from pathlib import Path

from . import config as cfgmod
from .config import ConfigError, RunConfig
from .errors import InvalidRegimeError
from .finite_size import AzumaBudget, finite_size_key_rate
from .montecarlo import compare, simulate
from .observables import analytic_observables
from .oracle import actual_key_rate_curve
from .params import make_window
from .phase_bound import (
    ClampWarning,
    PointResult,
    _default_workers,
    evaluate_point,
    find_achievable_distance,
    scan_distance,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IO = 3

SCAN_COLUMNS = [
    "l_km", "eta", "nu_i", "nu_f", "fil_all", "fil_win", "vac_win",
    "bit_win", "phase_bound", "key_rate", "key_rate_oracle", "feasible",
]
FINITE_COLUMNS = ["n_pairs", "epsilon_code", "epsilon_test", "phase_bound", "key_rate", "feasible"]
ORACLE_MU_LIMIT = 1e6

log = logging.getLogger("b92srp")


class OutputError(OSError):
    pass


def fmt(x) -> str:
    """Twelve significant digits; integers and flags are written plainly."""
    if x is None:
        return ""
    if isinstance(x, bool):
        return "1" if x else "0"
    if isinstance(x, int):
        return str(x)
    return format(float(x), ".12g")


# --- argument parsing -------------------------------------------------------

_FLAGS = [
    ("--mu", "mu", float),
    ("--kappa", "kappa", float),
    ("--a", "a", float),
    ("--p", "p", float),
    ("--xi", "xi", float),
    ("--eta-bob", "eta_bob", float),
    ("--t", "t", float),
    ("--l", "l", float),
    ("--l-min", "l_min", float),
    ("--l-max", "l_max", float),
    ("--l-step", "l_step", float),
    ("--trials", "trials", int),
    ("--seed", "seed", int),
    ("--n-pairs", "n_pairs", float),
    ("--delta", "delta", float),
    ("--out", "out", str),
]


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="flat 'key = value' config file")
    for flag, dest, kind in _FLAGS:
        common.add_argument(flag, dest=dest, type=kind, default=None)
    common.add_argument("--use-oracle", dest="use_oracle", action="store_true", default=None,
                        help="add the exact-channel key rate column (mu <= 1e6 only)")
    common.add_argument("--two-eta", dest="two_eta", action="store_true", default=None,
                        help="bound the 1x rate with a separate test-pair survival rate")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(
        prog="b92srp", description="Key rates for B92 with a strong reference pulse."
    )
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("keyrate", parents=[common], help="evaluate one distance")
    sub.add_parser("scan", parents=[common], help="key rate over a distance grid (CSV)")
    sub.add_parser("find-distance", parents=[common], help="largest distance with positive key")
    sub.add_parser("simulate", parents=[common], help="Monte-Carlo check of the observables")
    sub.add_parser("finite-size", parents=[common], help="key rate against block size (CSV)")
    return parser


def resolve_config(args: argparse.Namespace) -> RunConfig:
    cfg = RunConfig()
    if args.config:
        cfg = cfgmod.load(args.config, cfg)
    overrides = {dest: getattr(args, dest) for _, dest, _ in _FLAGS}
    overrides["use_oracle"] = args.use_oracle
    overrides["two_eta"] = args.two_eta
    return cfgmod.with_overrides(cfg, overrides).validate()


# --- output helpers ---------------------------------------------------------

def _csv_text(header: list[str], rows: list[list[str]]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _emit(text: str, path: str, stdout) -> None:
    if not path:
        stdout.write(text)
        return
    try:
        Path(path).write_text(text)
    except OSError as exc:
        raise OutputError(f"cannot write {path}: {exc}") from exc


def scan_row(res: PointResult, oracle_rate: float | None) -> list[str]:
    w, o = res.window, res.observables
    return [
        fmt(res.l),
        fmt(res.eta),
        fmt(w.nu_i) if w else "",
        fmt(w.nu_f) if w else "",
        fmt(o.fil_all) if o else "",
        fmt(o.fil_win) if o else "",
        fmt(o.vac_win) if o else "",
        fmt(o.bit_win) if o else "",
        fmt(res.phase_bound),
        fmt(res.key_rate),
        fmt(oracle_rate),
        fmt(res.feasible),
    ]


def _oracle_rates(cfg: RunConfig, grid: list[float]) -> list[float | None]:
    if not cfg.use_oracle or cfg.mu > ORACLE_MU_LIMIT:
        if cfg.use_oracle:
            log.warning("mu=%g is above %g; oracle column left empty", cfg.mu, ORACLE_MU_LIMIT)
        return [None] * len(grid)
    return [r.key_rate for r in actual_key_rate_curve(cfg.protocol(), cfg.channel(), grid)]


# --- subcommands ------------------------------------------------------------

def cmd_keyrate(cfg: RunConfig, stdout) -> int:
    res = evaluate_point(cfg.protocol(), cfg.channel(), two_eta=cfg.two_eta)
    oracle = _oracle_rates(cfg, [cfg.l])[0]
    lines = [f"l_km = {fmt(res.l)}", f"eta = {fmt(res.eta)}"]
    if res.window is None:
        lines.append(f"window = invalid ({res.note})")
    else:
        lines.append(f"window = [{res.window.nu_i}, {res.window.nu_f}]")
        for k, v in res.observables.as_dict().items():
            lines.append(f"{k} = {fmt(v)}")
        lines.append(f"eta_tilde = {fmt(res.observables.eta_tilde)}")
    lines += [
        f"phase_bound = {fmt(res.phase_bound)}",
        f"key_rate = {fmt(res.key_rate)}",
        f"feasible = {'true' if res.feasible else 'false'}",
    ]
    if oracle is not None:
        lines.append(f"key_rate_oracle = {fmt(oracle)}")
    stdout.write("\n".join(lines) + "\n")
    if cfg.out:
        _emit(_csv_text(SCAN_COLUMNS, [scan_row(res, oracle)]), cfg.out, stdout)
    return EXIT_OK


def cmd_scan(cfg: RunConfig, stdout) -> int:
    grid = cfg.l_grid()
    results = scan_distance(cfg.protocol(), cfg.channel(), grid, two_eta=cfg.two_eta)
    oracle = _oracle_rates(cfg, grid)
    rows = [scan_row(r, o) for r, o in zip(results, oracle)]
    _emit(_csv_text(SCAN_COLUMNS, rows), cfg.out, stdout)
    return EXIT_OK


def cmd_find_distance(cfg: RunConfig, stdout) -> int:
    la = find_achievable_distance(cfg.protocol(), cfg.channel(), two_eta=cfg.two_eta)
    stdout.write(f"{la:.2f}\n")
    return EXIT_OK


def cmd_simulate(cfg: RunConfig, stdout) -> int:
    params, channel = cfg.protocol(), cfg.channel()
    try:
        window = make_window(params, channel)
    except InvalidRegimeError as exc:
        raise ConfigError(f"l: {exc}") from exc
    tally = simulate(params, channel, window, cfg.trials, cfg.seed, workers=_default_workers())
    table = compare(tally, analytic_observables(params, channel, window))
    header = ["quantity", "count", "empirical", "analytic", "stderr", "z", "lower", "upper", "pass"]
    rows = [
        [c.name, str(getattr(tally, c.name)), fmt(c.empirical), fmt(c.analytic), fmt(c.stderr),
         fmt(c.z), fmt(c.lower), fmt(c.upper), fmt(c.passed)]
        for c in table
    ]
    report = (
        f"# trials = {tally.n_trials}, seed = {tally.seed}, l_km = {fmt(cfg.l)}, "
        f"window = [{window.nu_i}, {window.nu_f}]\n" + _csv_text(header, rows)
    )
    _emit(report, cfg.out, stdout)
    return EXIT_OK


def n_pairs_grid(n_pairs: float) -> list[float]:
    decades = [10.0**k for k in range(6, 19)]
    return sorted(set(decades) | {float(n_pairs)}) + [math.inf]


def cmd_finite_size(cfg: RunConfig, stdout) -> int:
    params, channel = cfg.protocol(), cfg.channel()
    try:
        window = make_window(params, channel)
    except InvalidRegimeError as exc:
        raise ConfigError(f"l: {exc}") from exc
    obs = analytic_observables(params, channel, window)
    rows = []
    for n in n_pairs_grid(cfg.n_pairs):
        budget = AzumaBudget(n, params.t, cfg.delta)
        res = finite_size_key_rate(obs, budget, params, window)
        rows.append([
            "inf" if math.isinf(n) else fmt(n), fmt(budget.epsilon_code), fmt(budget.epsilon_test),
            fmt(res.phase_bound), fmt(res.key_rate), fmt(res.feasible),
        ])
    _emit(_csv_text(FINITE_COLUMNS, rows), cfg.out, stdout)
    return EXIT_OK


COMMANDS = {
    "keyrate": cmd_keyrate,
    "scan": cmd_scan,
    "find-distance": cmd_find_distance,
    "simulate": cmd_simulate,
    "finite-size": cmd_finite_size,
}


def main(argv: list[str] | None = None, stdout=None) -> int:
    stdout = stdout or sys.stdout
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = resolve_config(args)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", ClampWarning)
            return COMMANDS[args.command](cfg, stdout)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
