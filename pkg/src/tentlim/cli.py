"""Command-line interface: ``tentlim <command> [options]``.

Exit codes: 0 when everything passed, 1 when a check or verification failed,
2 for invalid input.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys

from . import __version__
from .chains import ChainError, ChainSpec, assign_links, build_chain, verify_chain
from .folding import (
    FoldingPattern,
    PatternError,
    format_levels,
    fp_c0,
    fp_r,
    fp_r_two_sided,
    parse_levels,
)
from .harness import LINK_GROUPS, ConfigError, RunConfig, compare_fp_r, suite
from .kneading import (
    HorizonError,
    KneadingData,
    KneadingError,
    KneadingMap,
    is_admissible,
    is_fibonacci_like,
    kappa_data,
)
from .numeric import SlopeError, solve_slope
from .symmetry import (
    ArcWindow,
    Source,
    SymmetryError,
    classify_link_symmetric,
    classify_window,
    is_link_symmetric,
    link_symmetric_windows,
)

EXIT_OK, EXIT_FAIL, EXIT_INPUT = 0, 1, 2


class InputError(Exception):
    pass


# --- helpers --------------------------------------------------------------------


def _load_json(path: str):
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise InputError(f"{path} is not valid JSON: {exc}") from None


def load_kneading(path: str | None, k_max: int = 60) -> KneadingMap:
    if path is None:
        return KneadingMap.fibonacci(k_max)
    return KneadingMap.from_json(_load_json(path))


def _load_spec(path: str) -> ChainSpec:
    try:
        return ChainSpec.from_json(_load_json(path))
    except (KeyError, TypeError) as exc:
        raise InputError(f"{path} is not a chain spec: missing {exc}") from None


def load_pattern(path: str) -> FoldingPattern:
    """A folding pattern from JSON ``{side, entries}`` or whitespace text."""
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from None
    if text.lstrip().startswith("{"):
        return FoldingPattern.from_json(json.loads(text))
    return FoldingPattern(parse_levels(text), "window")


class Output:
    def __init__(self, fmt: str, path: str | None):
        self.fmt = fmt
        self.path = path

    def emit(self, data, text: str | None = None, rows: list[list] | None = None) -> None:
        if self.fmt == "json":
            out = json.dumps(data, indent=2, sort_keys=True) + "\n"
        elif self.fmt == "csv":
            if rows is None:
                raise InputError("csv output is not available for this command")
            buf = io.StringIO()
            csv.writer(buf, lineterminator="\n").writerows(rows)
            out = buf.getvalue()
        else:
            out = (text if text is not None else json.dumps(data, indent=2, sort_keys=True)) + "\n"
        if self.path:
            with open(self.path, "w") as fh:
                fh.write(out)
        else:
            sys.stdout.write(out)


def _kd(args) -> KneadingData:
    Q = load_kneading(args.kneading, args.k_max)
    if not is_admissible(Q):
        raise KneadingError(f"kneading map is not admissible: {is_admissible(Q).first_violation}")
    return KneadingData.build(Q, args.symbols)


# --- commands ---------------------------------------------------------------------


def cmd_kneading(args, out: Output) -> int:
    Q = load_kneading(args.kneading, args.k_max)
    adm = is_admissible(Q)
    data = {"Q": list(Q.values), "admissible": bool(adm), "first_violation": adm.first_violation}
    if adm:
        kd = KneadingData.build(Q, args.symbols)
        data["S"] = [int(x) for x in kd.S.s_values]
        data["fibonacci_like"] = is_fibonacci_like(Q)
        data["nu"] = "".join(map(str, kd.nu.symbols[: args.show]))
        try:
            data["kappa"] = kappa_data(kd.nu).kappa
        except (KneadingError, HorizonError) as exc:
            data["kappa"] = None
            data["kappa_error"] = str(exc)
    text = "\n".join(f"{k}: {' '.join(map(str, v)) if isinstance(v, list) else v}" for k, v in data.items())
    rows = [["k", "Q", "S"]] + [[k, Q(k), data.get("S", [None] * (k + 1))[k] if adm else ""]
                                  for k in range(1, Q.k_max + 1)]
    out.emit(data, text, rows)
    return EXIT_OK if adm else EXIT_FAIL


def cmd_fold(args, out: Output) -> int:
    kd = _kd(args)
    if args.side == "C0":
        fp = fp_c0(kd, args.salient)
    elif args.two_sided:
        fp = fp_r_two_sided(kd, args.salient)
    else:
        fp = fp_r(kd, args.salient)
    start = args.start or 0
    end = args.end if args.end is not None else len(fp)
    if not 0 <= start < end <= len(fp):
        raise InputError(f"window [{start}, {end}) outside the pattern of length {len(fp)}")
    part = fp.window(start, end) if (start, end) != (0, len(fp)) else fp
    data = part.to_json(kd.S)
    data["range"] = [start, end]
    rows = [["index", "level"]] + [[start + i, "INF" if x < 0 else int(x)] for i, x in enumerate(part.entries)]
    out.emit(data, format_levels(part.entries), rows)
    return EXIT_OK


def _params(kd: KneadingData):
    return solve_slope(kd.nu, 40, 1e-13)


def cmd_chain(args, out: Output) -> int:
    kd = _kd(args)
    P = _params(kd)
    if args.action == "build":
        spec = build_chain(P, kd.S, args.p, args.epsilon, args.depth)
        data = spec.to_json()
        out.emit(data, json.dumps(data, indent=2), [["boundary"]] + [[b] for b in spec.boundaries])
        return EXIT_OK
    if not args.spec:
        raise InputError("chain verify needs --spec")
    spec = _load_spec(args.spec)
    rep = verify_chain(spec, P, kd, args.depth)
    data = rep.to_json()
    text = "\n".join(f"{k}: {'pass' if v else 'FAIL'}" for k, v in rep.passed.items())
    rows = [["property", "passed"]] + [[k, v] for k, v in rep.passed.items()]
    out.emit(data, text, rows)
    return EXIT_OK if rep.ok else EXIT_FAIL


def cmd_classify(args, out: Output) -> int:
    kd = _kd(args)
    P = _params(kd)
    fp = load_pattern(args.pattern)
    if args.chain:
        spec = _load_spec(args.chain)
    else:
        from .chains import stipulated_chain
        spec = stipulated_chain(P, LINK_GROUPS, args.mesh, args.depth)
    src = Source(fp.entries, assign_links(spec, P, args.depth))
    records = []
    if args.batch:
        for i, j in link_symmetric_windows(src, args.max_len):
            c = classify_link_symmetric(ArcWindow(src, i, j))
            records.append({"range": [i, j], **c.to_json()})
    else:
        start = args.start if args.start is not None else 0
        end = args.end if args.end is not None else len(fp) - 1
        w = ArcWindow(src, start, end)
        c = classify_window(w)
        rec = {"range": [start, end], **c.to_json()}
        if is_link_symmetric(w):
            rec["link_symmetric_outcome"] = classify_link_symmetric(w).to_json()
        records.append(rec)
    text = "\n".join(f"[{r['range'][0]}, {r['range'][1]}] {r['class']} nodes={r['nodes']}" for r in records)
    rows = [["start", "end", "class"]] + [[r["range"][0], r["range"][1], r["class"]] for r in records]
    out.emit(records if args.batch else records[0], text, rows)
    return EXIT_OK


def cmd_compare(args, out: Output) -> int:
    Q1 = load_kneading(args.kneading, args.k_max)
    if args.other:
        Q2 = load_kneading(args.other, args.k_max)
    else:
        Q2 = KneadingMap.with_offset(args.offset, args.k_max)
    rep = compare_fp_r(Q1, Q2, args.salient)
    data = rep.to_json()
    rows = [["diverged", "index", "side", "block", "horizon"],
            [rep.diverged, rep.index, rep.side, rep.block, rep.horizon]]
    out.emit(data, rep.message, rows)
    return EXIT_OK


def cmd_suite(args, out: Output) -> int:
    cfg = RunConfig(kneading=load_kneading(args.kneading, args.k_max), depth=args.depth, p=args.p,
                    epsilon=args.epsilon, salient=args.salient, n_symbols=args.symbols)
    if args.window_len:
        cfg.window_len = args.window_len
    if args.scan_steps:
        cfg.scan_steps = args.scan_steps
    only = args.only.split(",") if args.only else None
    results = suite(cfg, only)
    ok = all(r.ok for r in results)
    data = {"ok": ok, "checks": [r.to_json(args.timings) for r in results]}
    text = "\n".join(r.line() for r in results) + f"\n{'ALL PASS' if ok else 'FAILURES'}"
    rows = [["id", "title", "ok"]] + [[r.id, r.title, r.ok] for r in results]
    out.emit(data, text, rows)
    return EXIT_OK if ok else EXIT_FAIL


def cmd_plotdata(args, out: Output) -> int:
    kd = _kd(args)
    P = _params(kd)
    depth = min(args.depth, P.N)
    rows = [["kind", "n", "x"]] + [["c", n, repr(P.point(n))] for n in range(depth + 1)]
    if args.chain:
        spec = _load_spec(args.chain)
        rows += [["boundary", i, repr(b)] for i, b in enumerate(spec.boundaries)]
    data = {"s": P.s, "points": [P.point(n) for n in range(depth + 1)]}
    if args.format != "json":
        out.fmt = "csv"
    out.emit(data, None, rows)
    return EXIT_OK


# --- parser -------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--kneading", metavar="FILE", help="kneading map JSON (default: Fibonacci)")
    common.add_argument("--k-max", type=int, default=60, help="stored range of Q (default 60)")
    common.add_argument("--symbols", type=int, default=16384, help="kneading symbols to compute")
    common.add_argument("--format", choices=("json", "text", "csv"), default="text")
    common.add_argument("--out", metavar="PATH", help="write output to PATH instead of stdout")

    parser = argparse.ArgumentParser(prog="tentlim", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("kneading", parents=[common], help="cutting times, admissibility, kappa")
    p.add_argument("--show", type=int, default=64, help="kneading symbols to print")
    p.set_defaults(func=cmd_kneading)

    p = sub.add_parser("fold", parents=[common], help="generate FP(C0) or FP(R)")
    p.add_argument("--side", choices=("C0", "R"), default="C0")
    p.add_argument("--salient", type=int, default=8)
    p.add_argument("--two-sided", action="store_true", help="FP(R): --salient per side")
    p.add_argument("--start", type=int)
    p.add_argument("--end", type=int, help="exclusive end index")
    p.set_defaults(func=cmd_fold)

    p = sub.add_parser("chain", parents=[common], help="build or verify a chain")
    p.add_argument("action", choices=("build", "verify"))
    p.add_argument("--p", type=int, default=8)
    p.add_argument("--epsilon", type=float, default=0.05)
    p.add_argument("--depth", type=int, default=150)
    p.add_argument("--spec", metavar="FILE")
    p.set_defaults(func=cmd_chain)

    p = sub.add_parser("classify", parents=[common], help="classify pattern windows")
    p.add_argument("--pattern", required=True, metavar="FILE")
    p.add_argument("--chain", metavar="FILE", help="chain JSON (default: the grouped test chain)")
    p.add_argument("--start", type=int)
    p.add_argument("--end", type=int, help="inclusive end index")
    p.add_argument("--depth", type=int, default=150)
    p.add_argument("--mesh", type=float, default=2e-3)
    p.add_argument("--batch", action="store_true", help="all link-symmetric windows")
    p.add_argument("--max-len", type=int, default=40)
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("compare", parents=[common], help="compare FP(R) of two maps")
    p.add_argument("--other", metavar="FILE", help="second kneading map JSON")
    p.add_argument("--offset", type=int, default=3, help="second map Q(k)=max(k-d,0) (default 3)")
    p.add_argument("--salient", type=int, default=8, help="salient points per side")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("suite", parents=[common], help="run the acceptance battery")
    p.add_argument("--depth", type=int, default=150)
    p.add_argument("--p", type=int, default=8)
    p.add_argument("--epsilon", type=float, default=0.05)
    p.add_argument("--salient", type=int, default=20)
    p.add_argument("--window-len", type=int)
    p.add_argument("--scan-steps", type=int)
    p.add_argument("--only", help="comma-separated check ids, e.g. c01,c05")
    p.add_argument("--timings", action="store_true", help="include run times in JSON")
    p.set_defaults(func=cmd_suite)

    p = sub.add_parser("plotdata", parents=[common], help="CSV of c_n and chain boundaries")
    p.add_argument("--depth", type=int, default=150)
    p.add_argument("--chain", metavar="FILE")
    p.set_defaults(func=cmd_plotdata)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    out = Output(args.format, args.out)
    try:
        return args.func(args, out)
    except (InputError, ConfigError, KneadingError, PatternError, SymmetryError, ChainError,
            SlopeError, HorizonError, ValueError, KeyError) as exc:
        print(f"tentlim: error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
