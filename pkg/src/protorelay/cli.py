"""Command-line front end.

Every flag can also come from a ``--config`` file of ``key = value`` lines
(``#`` starts a comment).  Keys are the long flag names, with ``-`` or
``_``; flags given on the command line win over the file.

Exit codes: 0 success, 1 validation failure, 2 bad arguments or config,
3 I/O error.
"""
from __future__ import annotations

import argparse
import contextlib
import sys
from pathlib import Path

import numpy as np

from . import ber_theory, harness, pexit, validation
from .protograph import build

EXIT_OK, EXIT_VALIDATION, EXIT_ARGS, EXIT_IO = 0, 1, 2, 3


class CliError(Exception):
    def __init__(self, message, code=EXIT_ARGS):
        super().__init__(message)
        self.code = code


def int_list(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a comma-separated integer list, got {text!r}")


def float_list(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a comma-separated number list, got {text!r}")


def str_list(text: str) -> list[str]:
    return [v.strip().lower() for v in text.split(",") if v.strip()]


def sweep(text: str) -> list[float]:
    """Eb/N0 sweep: ``a:b:step`` (both ends included) or a comma list."""
    if ":" not in text:
        return float_list(text)
    try:
        a, b, step = (float(v) for v in text.split(":"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected start:stop:step, got {text!r}")
    if step <= 0 or b < a:
        raise argparse.ArgumentTypeError(f"sweep {text!r} needs step > 0 and stop >= start")
    k = int(np.floor((b - a) / step + 1e-9))
    return [round(a + i * step, 10) for i in range(k + 1)]


def read_config(path) -> dict[str, str]:
    """Parse a flat ``key = value`` file into a dict of strings."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise CliError(f"cannot read config file {path}: {exc}", EXIT_IO)
    out = {}
    for no, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise CliError(f"{path}:{no}: expected key = value")
        key, val = (s.strip() for s in line.split("=", 1))
        out[key.replace("-", "_")] = val
    return out


def _add_out(p):
    p.add_argument("--out", default="-", help="CSV output path ('-' for stdout)")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="protorelay",
                                 description="Protograph LDPC codes over fading relay channels.")
    ap.add_argument("--config", help="flat key = value file supplying flag values")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("thresholds", help="PEXIT decoding thresholds")
    p.add_argument("--family", type=str_list, default=["ar3a"])
    p.add_argument("--n", type=int_list, default=[0])
    p.add_argument("--m", type=float_list, default=[1.0])
    p.add_argument("--d", type=float, default=0.4)
    p.add_argument("--q", type=int, default=100_000)
    p.add_argument("--tmaxp", type=int, default=500)
    p.add_argument("--tol-db", type=float, default=0.01)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--inverse", choices=["closed_form", "numeric"], default="closed_form")
    _add_out(p)

    p = sub.add_parser("ber-theory", help="theoretical BER curves")
    p.add_argument("--protocol", choices=["ef", "df"], type=str.lower, default="ef")
    p.add_argument("--family", type=str_list, default=["ar3a"])
    p.add_argument("--n", type=int_list, default=[3])
    p.add_argument("--m", type=float_list, default=[2.0])
    p.add_argument("--d", type=float, default=0.4)
    p.add_argument("--ebn0", type=sweep, required=False)
    p.add_argument("--tmax", type=int, default=100)
    p.add_argument("--q", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=0)
    _add_out(p)

    p = sub.add_parser("simulate", help="Monte-Carlo BER simulation")
    p.add_argument("--protocol", choices=["ef", "df"], type=str.lower, default="ef")
    p.add_argument("--family", type=str.lower, default="ar3a")
    p.add_argument("--n", type=int, default=3)
    p.add_argument("--z", type=int, default=512)
    p.add_argument("--m", type=float, default=2.0)
    p.add_argument("--d", type=float, default=0.4)
    p.add_argument("--ebn0", type=sweep, required=False)
    p.add_argument("--max-iter", type=int, default=100)
    p.add_argument("--min-error-blocks", type=int, default=100)
    p.add_argument("--max-blocks", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--chunk-blocks", type=int, default=32)
    p.add_argument("--code-seed", type=int, default=0)
    p.add_argument("--girth", type=int, choices=[4, 6, 8], default=6)
    _add_out(p)

    p = sub.add_parser("validate", help="self-checks and reference threshold spot checks")
    p.add_argument("--q", type=int, default=10_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--skip-thresholds", action="store_true")
    return ap


def _apply_config(ap: argparse.ArgumentParser, argv, values: dict[str, str]):
    """Install config values as defaults of the chosen subcommand, then reparse."""
    pre, _ = ap.parse_known_args(argv)
    sub = next(a for a in ap._actions if isinstance(a, argparse._SubParsersAction))
    sp = sub.choices[pre.command]
    actions = {a.dest: a for a in sp._actions if a.dest != "help"}
    defaults = {}
    for key, val in values.items():
        if key not in actions:
            raise CliError(f"unknown config key {key!r} for '{pre.command}'")
        act = actions[key]
        if isinstance(act, argparse._StoreTrueAction):
            if val.lower() not in ("true", "false", "1", "0", "yes", "no"):
                raise CliError(f"config key {key!r} expects true/false")
            defaults[key] = val.lower() in ("true", "1", "yes")
            continue
        try:
            conv = act.type(val) if act.type else val
        except (argparse.ArgumentTypeError, ValueError) as exc:
            raise CliError(f"config key {key!r}: {exc}")
        if act.choices is not None and conv not in act.choices:
            raise CliError(f"config key {key!r}: {val!r} not in {list(act.choices)}")
        defaults[key] = conv
    sp.set_defaults(**defaults)
    return ap.parse_args(argv)


@contextlib.contextmanager
def _open_out(path):
    if path == "-":
        yield sys.stdout
        return
    try:
        fh = open(path, "w", encoding="utf-8", newline="")
    except OSError as exc:
        raise CliError(f"cannot open {path} for writing: {exc}", EXIT_IO)
    with fh:
        yield fh


def _need_sweep(args):
    if not args.ebn0:
        raise CliError("--ebn0 is required (a:b:step or a comma list)")


def cmd_thresholds(args) -> int:
    results = []
    for fam in args.family:
        for n in args.n:
            base = build(fam, n)
            for m in args.m:
                results.append(pexit.threshold_search(
                    base, m, d=args.d, tol_db=args.tol_db, q=args.q, t_max=args.tmaxp,
                    seed=args.seed, inverse=args.inverse))
    with _open_out(args.out) as fh:
        pexit.write_thresholds_csv(results, fh)
    return EXIT_OK


def cmd_ber_theory(args) -> int:
    _need_sweep(args)
    curve = ber_theory.ef_ber_curve if args.protocol == "ef" else ber_theory.df_ber_curve
    with _open_out(args.out) as fh:
        first = True
        for fam in args.family:
            for n in args.n:
                base = build(fam, n)
                for m in args.m:
                    pts = curve(base, m, args.d, args.ebn0, t_max=args.tmax, q=args.q,
                                seed=args.seed)
                    ber_theory.write_ber_csv(base, pts, fh, header=first)
                    first = False
    return EXIT_OK


def cmd_simulate(args) -> int:
    _need_sweep(args)
    cfg = harness.SimConfig(
        family=args.family, n=args.n, z=args.z, m=args.m, d=args.d, protocol=args.protocol,
        ebn0_db=tuple(args.ebn0), max_iter=args.max_iter,
        min_error_blocks=args.min_error_blocks, max_blocks=args.max_blocks, seed=args.seed,
        workers=args.workers, chunk_blocks=args.chunk_blocks, code_seed=args.code_seed,
        girth=args.girth)

    def report(p):
        print(f"Eb/N0 {p.ebn0_db:.3f} dB  BER {p.ber:.3e}  BLER {p.bler:.3e}  "
              f"blocks {p.blocks}  {p.wall_seconds:.1f} s", file=sys.stderr)

    code = harness.build_code(cfg)
    points = harness.run_experiment(cfg, code=code, progress=report)
    with _open_out(args.out) as fh:
        harness.write_sim_csv(cfg, code, points, fh)
    return EXIT_OK


def cmd_validate(args) -> int:
    results = validation.run_checks(q=args.q, thresholds=not args.skip_thresholds, seed=args.seed)
    for name, ok, detail in results:
        print(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")
    failed = sum(not ok for _, ok, _ in results)
    print(f"{len(results) - failed} passed, {failed} failed")
    return EXIT_OK if failed == 0 else EXIT_VALIDATION


COMMANDS = {"thresholds": cmd_thresholds, "ber-theory": cmd_ber_theory,
            "simulate": cmd_simulate, "validate": cmd_validate}


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_ARGS
    try:
        if args.config:
            try:
                args = _apply_config(ap, argv, read_config(args.config))
            except SystemExit as exc:
                return EXIT_OK if exc.code == 0 else EXIT_ARGS
        return COMMANDS[args.command](args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except (harness.ConfigError, pexit.BracketError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ARGS
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
