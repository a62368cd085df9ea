"""Command-line front end.

Subcommands: construct, sweep, estimate, simulate, kernel, oracle-compare.
SNRs on the command line are Es/N0 in dB. Relative output paths resolve
against ``$POLARGA_OUTPUT_DIR`` when it is set.

Exit codes: 0 success, 1 usage error, 2 runtime error.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import math
import os
import shlex
import sys

import numpy as np

from . import __version__
from . import channel_sim, construction, ga_kernel, oracles
from .construction import Method, PolarCodeSpec, db_to_linear

OUTPUT_DIR_ENV = "POLARGA_OUTPUT_DIR"


class UsageError(Exception):
    pass


def _out_path(path: str) -> str:
    base = os.environ.get(OUTPUT_DIR_ENV)
    if base and not os.path.isabs(path):
        return os.path.join(base, path)
    return path


def _provenance(argv: list[str], body: str) -> str:
    digest = hashlib.sha256(body.encode()).hexdigest()
    return (
        f"# polarga {__version__}\n"
        f"# args: {shlex.join(argv)}\n"
        f"# content-sha256: {digest}\n"
    )


def _emit_csv(args, argv, header: list[str], rows) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow(row)
    body = buf.getvalue()
    text = _provenance(argv, body) + body
    if args.output:
        with open(_out_path(args.output), "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _fmt(x: float) -> str:
    return f"{x:.10g}"


def _resolve_k(args) -> int:
    N = 1 << args.n
    if (args.K is None) == (args.rate is None):
        raise UsageError("give exactly one of --K or --rate")
    if args.K is not None:
        K = args.K
    else:
        K = args.rate * N
        if abs(K - round(K)) > 1e-9:
            raise UsageError(f"rate {args.rate} does not give an integer K for N={N}")
        K = int(round(K))
    if not 0 <= K <= N:
        raise UsageError(f"K must be in [0, {N}]")
    return K


def _db_grid(spec: str) -> list[float]:
    # "start:stop:step" inclusive, or a comma list
    if ":" in spec:
        start, stop, step = (float(t) for t in spec.split(":"))
        count = int(math.floor((stop - start) / step + 1e-9)) + 1
        return [round(start + i * step, 10) for i in range(count)]
    return [float(t) for t in spec.split(",") if t.strip()]


def _gamma_grid(args) -> np.ndarray:
    return np.logspace(math.log10(args.gamma_min), math.log10(args.gamma_max), args.points)


def _read_code(path: str) -> PolarCodeSpec:
    try:
        with open(path) as fh:
            text = fh.read()
        # provenance lines precede the versioned header
        lines = text.splitlines()
        start = next(i for i, l in enumerate(lines) if l.strip() == construction.CODE_SPEC_HEADER)
        return PolarCodeSpec.from_json("\n".join(lines[start:]))
    except (OSError, StopIteration, ValueError, KeyError) as exc:
        raise RuntimeError(f"cannot read code spec {path!r}: {exc}") from exc


# --------------------------------------------------------------------------- commands


def cmd_construct(args, argv) -> None:
    K = _resolve_k(args)
    snr = db_to_linear(args.design_snr_db)
    rel = construction.reliabilities(args.n, snr, args.method)
    code = construction.select_info_set(rel, K)
    code.design_snr_db = args.design_snr_db
    est = construction.estimate_bler(code, rel).value
    body = code.to_json()
    text = _provenance(argv, body) + body
    if args.output:
        with open(_out_path(args.output), "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    if args.reliability_out:
        with open(_out_path(args.reliability_out), "w") as fh:
            fh.write(rel.to_csv())
    print(f"estimated BLER at design SNR: {est:.6e}", file=sys.stderr)


def cmd_sweep(args, argv) -> None:
    K = _resolve_k(args)
    rows = []
    for db in _db_grid(args.snr_db):
        est = construction.min_estimated_bler(args.n, K, db_to_linear(db), args.method).value
        rows.append([_fmt(db), f"{est:.10e}"])
    _emit_csv(args, argv, ["design_snr_db", "min_est_bler"], rows)


def cmd_estimate(args, argv) -> None:
    code = _read_code(args.code)
    method = Method.parse(args.method or code.method or Method.IMPROVED_GA)
    rows = []
    for db in _db_grid(args.snr_db):
        rel = construction.reliabilities(code.n, db_to_linear(db), method)
        est = construction.estimate_bler(code, rel).value
        rows.append([_fmt(db), f"{est:.10e}"])
    _emit_csv(args, argv, ["channel_snr_db", "est_bler"], rows)


def cmd_simulate(args, argv) -> None:
    code = _read_code(args.code)
    out = _out_path(args.output)
    failures = 0
    for db in _db_grid(args.snr_db):
        cfg = channel_sim.TrialConfig(
            code=code,
            snr=db_to_linear(db),
            max_blocks=args.max_blocks,
            target_block_errors=args.target_errors,
            seed=args.seed,
            workers=args.workers,
            all_zero=args.all_zero,
        )
        res = channel_sim.run_trials(cfg)
        try:
            row = channel_sim.append_campaign_row(out, code, cfg.snr, res)
        except OSError as exc:
            failures += 1
            print(f"snr {db} dB: could not write row: {exc}", file=sys.stderr)
            continue
        print(",".join(str(row[k]) for k in channel_sim.CAMPAIGN_FIELDS), file=sys.stderr)
    if failures:
        raise RuntimeError(f"{failures} campaign rows could not be written")


def cmd_kernel(args, argv) -> None:
    g = _gamma_grid(args)
    cols = {
        "gamma": g,
        "xi_hat": ga_kernel.xi_hat(g),
        "Xi_improved": ga_kernel.check_node_transform(g, "improved-ga"),
        "Xi_conventional": ga_kernel.check_node_transform(g, "conventional-ga"),
        "Xi_ha": ga_kernel.check_node_transform(g, "ha-ga"),
        "asymptote": g - 4.0 * math.log(2.0),
    }
    if args.with_exact_mean:
        cols["exact_mean"] = np.array([oracles.exact_mean_boxplus(x) for x in g])
    rows = [[_fmt(c[i]) for c in cols.values()] for i in range(g.size)]
    _emit_csv(args, argv, list(cols), rows)


def cmd_oracle_compare(args, argv) -> None:
    g = _gamma_grid(args)
    header = [
        "gamma", "xi_hat", "xi_numeric", "Xi_improved", "Xi_conventional",
        "Xi_ha", "exact_mean", "asymptote",
    ]
    rows = []
    for x in g:
        rows.append(
            [
                _fmt(x),
                _fmt(ga_kernel.xi_hat(x)),
                _fmt(oracles.log_phi_numeric(x)),
                _fmt(ga_kernel.check_node_transform(x, "improved-ga")),
                _fmt(ga_kernel.check_node_transform(x, "conventional-ga")),
                _fmt(ga_kernel.check_node_transform(x, "ha-ga")),
                _fmt(oracles.exact_mean_boxplus(x)),
                _fmt(x - 4.0 * math.log(2.0)),
            ]
        )
    _emit_csv(args, argv, header, rows)


# --------------------------------------------------------------------------- parser


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _method(value: str) -> Method:
    try:
        return Method.parse(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"unknown method {value!r}")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="polarga", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"polarga {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def code_args(sp):
        sp.add_argument("--n", type=int, required=True)
        k = sp.add_mutually_exclusive_group()
        k.add_argument("--K", type=int)
        k.add_argument("--rate", type=float)
        sp.add_argument("--method", type=_method, default=Method.IMPROVED_GA,
                        help="improved-ga | conventional-ga | ha-ga | llr-flipping")

    sp = sub.add_parser("construct", help="design a code and write its spec file")
    code_args(sp)
    sp.add_argument("--design-snr-db", type=float, required=True)
    sp.add_argument("--output", "-o")
    sp.add_argument("--reliability-out")
    sp.set_defaults(func=cmd_construct)

    sp = sub.add_parser("sweep", help="minimum estimated BLER over a design-SNR grid")
    code_args(sp)
    sp.add_argument("--snr-db", required=True, help="start:stop:step or comma list")
    sp.add_argument("--output", "-o")
    sp.set_defaults(func=cmd_sweep)

    sp = sub.add_parser("estimate", help="estimated BLER of a given code over channel SNRs")
    sp.add_argument("--code", required=True)
    sp.add_argument("--snr-db", required=True)
    sp.add_argument("--method", type=_method, default=None)
    sp.add_argument("--output", "-o")
    sp.set_defaults(func=cmd_estimate)

    sp = sub.add_parser("simulate", help="Monte-Carlo SC decoding campaign")
    sp.add_argument("--code", required=True)
    sp.add_argument("--snr-db", required=True)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--max-blocks", type=int, default=10**7)
    sp.add_argument("--target-errors", type=int, default=100)
    sp.add_argument("--workers", type=int, default=1)
    sp.add_argument("--all-zero", action="store_true")
    sp.add_argument("--output", "-o", required=True, help="campaign CSV, appended to")
    sp.set_defaults(func=cmd_simulate)

    for name, func, exact in (
        ("kernel", cmd_kernel, False),
        ("oracle-compare", cmd_oracle_compare, True),
    ):
        sp = sub.add_parser(name)
        sp.add_argument("--gamma-min", type=float, default=1e-3)
        sp.add_argument("--gamma-max", type=float, default=100.0)
        sp.add_argument("--points", type=int, default=50)
        sp.add_argument("--output", "-o")
        if not exact:
            sp.add_argument("--with-exact-mean", action="store_true")
        sp.set_defaults(func=func)
    return p


def _attach_grid_values(argv: list[str]) -> list[str]:
    # argparse reads "-2:-1:0.1" or "-1.5,-1" as an option; glue it to its flag
    out: list[str] = []
    i = 0
    while i < len(argv):
        if argv[i] == "--snr-db" and i + 1 < len(argv):
            out.append(f"--snr-db={argv[i + 1]}")
            i += 2
        else:
            out.append(argv[i])
            i += 1
    return out


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(_attach_grid_values(argv))
        args.func(args, argv)
    except UsageError as exc:
        print(f"polarga: usage error: {exc}", file=sys.stderr)
        return 1
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    except (RuntimeError, ValueError, OSError) as exc:
        print(f"polarga: error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
