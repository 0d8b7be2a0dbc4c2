"""Command-line front end: solve, bench, verify, gen."""

from __future__ import annotations

import argparse
import dataclasses
import csv
import io
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import graph as G
from .core import HermitianOperand
from .parallel import ParallelConfig
from .pipeline import (
    InstanceTooLargeError,
    SolveReport,
    approximate_low_rank,
    brute_force_oracle,
    greedy_baseline,
    random_baseline,
)

EXIT_OK, EXIT_INPUT, EXIT_TIMEOUT = 0, 1, 2
ALGOS = ("rank1", "rankr", "approx", "random", "greedy", "oracle")
FORMATS = ("gset", "edgelist", "synthetic", "npy")
BENCH_COLUMNS = ["instance", "algorithm", "rank", "k", "n", "m", "cut_value", "objective",
                 "wall_time_ms", "candidates_evaluated", "timed_out", "ratio", "error"]


class InputError(ValueError):
    pass


# --------------------------------------------------------------------------- inputs

def parse_generator(spec: str) -> G.WeightedGraph:
    """``er:n=200,p=0.05,seed=1`` | ``regular:n=100,d=5,seed=1`` | ``torus:rows=30,cols=30``."""
    kind, _, rest = spec.partition(":")
    kw = {}
    for item in filter(None, rest.split(",")):
        key, eq, val = item.partition("=")
        if not eq:
            raise InputError(f"bad generator parameter {item!r}")
        kw[key.strip()] = val.strip()
    try:
        if kind == "er":
            return G.generate_er(int(kw["n"]), float(kw["p"]), int(kw.get("seed", 0)))
        if kind == "regular":
            return G.generate_regular(int(kw["n"]), int(kw["d"]), int(kw.get("seed", 0)))
        if kind == "torus":
            return G.generate_torus(int(kw["rows"]), int(kw["cols"]))
    except KeyError as exc:
        raise InputError(f"generator {kind!r} needs parameter {exc.args[0]!r}") from None
    except ValueError as exc:
        raise InputError(str(exc)) from None
    raise InputError(f"unknown generator {kind!r} (er, regular, torus)")


def load_input(source: str, fmt: str):
    """Returns (graph or None, objective operand)."""
    if fmt == "synthetic":
        g = parse_generator(source)
        return g, G.laplacian(g)
    path = Path(source)
    if not path.is_file():
        raise InputError(f"cannot read input {source!r}")
    if fmt == "npy":
        M = np.load(path)
        if M.ndim != 2 or M.shape[0] != M.shape[1]:
            raise InputError(f"matrix input must be square, got {M.shape}")
        herm = np.abs(M - M.conj().T).max() <= 1e-10 * max(1.0, np.abs(M).max())
        return None, HermitianOperand(M, hermitian=bool(herm))
    try:
        g = G.load_graph(path, fmt)
    except G.GraphError as exc:
        raise InputError(f"{source}: {exc}") from None
    return g, G.laplacian(g)


def run_algorithm(algo: str, g, Q, rank: int, K: int, engine: ParallelConfig, seed: int) -> SolveReport:
    if algo in ("random", "greedy"):
        if g is None:
            raise InputError(f"{algo} baseline needs a graph input")
        fn = random_baseline if algo == "random" else greedy_baseline
        return fn(g, seed, K=K, engine=engine)
    if algo == "oracle":
        t0 = time.perf_counter()
        a, obj = brute_force_oracle(Q, K)
        cut = G.cut_value(g, a) if g is not None and K == 3 else None
        n = a.n
        return SolveReport("oracle", None, K, n, obj, a, K ** (n - 1),
                           int((time.perf_counter() - t0) * 1000), cut_value=cut, seed=seed,
                           workers=engine.workers)
    r = 1 if algo == "rank1" else rank
    if r < 1:
        raise InputError("rank must be >= 1")
    rep = approximate_low_rank(Q, r, K, engine, graph=g, seed=seed)
    if algo == "approx":
        rep = dataclasses.replace(rep, algorithm="approx")
    return rep


# --------------------------------------------------------------------------- config

def read_config(path) -> dict:
    """Flat ``key = value`` file; '#' starts a comment."""
    out = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, eq, val = line.partition("=")
        if not eq:
            raise InputError(f"{path}:{lineno}: expected key = value")
        out[key.strip().replace("-", "_")] = val.strip()
    return out


def _add_run_flags(p: argparse.ArgumentParser):
    p.add_argument("--format", choices=FORMATS, default="gset")
    p.add_argument("--k", type=int, default=3)
    p.add_argument("--rank", type=int, default=1)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--timeout", type=float, default=None, help="seconds, checked between batches")
    p.add_argument("--output", default=None)
    p.add_argument("--output-format", choices=("json", "csv"), default="json")
    p.add_argument("--config", default=None, help="key=value file; flags take precedence")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="lowrankcut", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="solve one instance")
    p.add_argument("input", help="graph file, .npy matrix, or generator spec with --format synthetic")
    p.add_argument("--algo", choices=ALGOS, default="rank1")
    _add_run_flags(p)

    p = sub.add_parser("bench", help="run several algorithms over several instances")
    p.add_argument("inputs", nargs="+")
    p.add_argument("--algos", default="rank1,random,greedy", help="comma separated")
    _add_run_flags(p)

    p = sub.add_parser("verify", help="run the acceptance suite")
    p.add_argument("--quick", action="store_true")
    p.add_argument("--gset-dir", default="data/gset")

    p = sub.add_parser("gen", help="write a synthetic graph")
    p.add_argument("spec", help="er:n=..,p=..,seed=.. | regular:n=..,d=..,seed=.. | torus:rows=..,cols=..")
    p.add_argument("--format", choices=("gset", "edgelist"), default="gset")
    p.add_argument("--output", default=None)
    return ap


def parse_args(argv=None) -> argparse.Namespace:
    ap = build_parser()
    args = ap.parse_args(argv)
    cfg_path = getattr(args, "config", None)
    if cfg_path:
        sub = ap._subparsers._group_actions[0].choices[args.command]
        try:
            cfg = read_config(cfg_path)
        except OSError as exc:
            raise InputError(f"cannot read config {cfg_path!r}: {exc}") from None
        known = {a.dest for a in sub._actions}
        unknown = set(cfg) - known
        if unknown:
            raise InputError(f"unknown config keys: {sorted(unknown)}")
        sub.set_defaults(**cfg)
        # string defaults go through each flag's type conversion
        args = ap.parse_args(argv)
        for a in sub._actions:
            if a.dest in cfg and a.choices is not None and getattr(args, a.dest) not in a.choices:
                raise InputError(f"config value {a.dest}={getattr(args, a.dest)!r} not in {list(a.choices)}")
    return args


# --------------------------------------------------------------------------- commands

def _write(text: str, output):
    if output:
        Path(output).write_text(text)
    else:
        sys.stdout.write(text)


def _engine(args) -> ParallelConfig:
    if args.workers < 1:
        raise InputError("workers must be >= 1")
    return ParallelConfig(workers=args.workers).with_timeout(args.timeout)


def cmd_solve(args) -> int:
    if args.algo in ("rankr", "approx") and args.rank < 1:
        raise InputError("rank must be >= 1")
    g, Q = load_input(args.input, args.format)
    try:
        rep = run_algorithm(args.algo, g, Q, args.rank, args.k, _engine(args), args.seed)
    except InstanceTooLargeError as exc:
        raise InputError(str(exc)) from None
    row = rep.to_dict(args.input, g.m if g is not None else None)
    if args.output_format == "json":
        text = json.dumps(row) + "\n"
    else:
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=list(row))
        w.writeheader()
        w.writerow({**row, "assignment": " ".join(map(str, row["assignment"]))})
        text = buf.getvalue()
    _write(text, args.output)
    return EXIT_TIMEOUT if rep.timed_out else EXIT_OK


def bench_rows(inputs, algos, fmt, rank, K, workers, seed, timeout) -> list[dict]:
    rows = []
    for src in inputs:
        try:
            g, Q = load_input(src, fmt)
        except (InputError, G.GraphError) as exc:
            rows.append({"instance": src, "error": str(exc)})
            continue
        inst_rows = []
        for algo in algos:
            row = {"instance": src, "algorithm": algo, "k": K, "n": Q.n,
                   "m": g.m if g is not None else None}
            try:
                engine = ParallelConfig(workers=workers).with_timeout(timeout)
                rep = run_algorithm(algo, g, Q, rank, K, engine, seed)
                d = rep.to_dict(src, row["m"])
                row.update({k: d[k] for k in ("rank", "cut_value", "objective", "wall_time_ms",
                                              "candidates_evaluated", "timed_out")})
            except Exception as exc:  # noqa: BLE001 - recorded per row
                row["error"] = f"{type(exc).__name__}: {exc}"
            inst_rows.append(row)
        scores = [r.get("cut_value") if r.get("cut_value") is not None else r.get("objective")
                  for r in inst_rows]
        best = max((s for s in scores if s is not None), default=None)
        for r, s in zip(inst_rows, scores):
            r["ratio"] = s / best if s is not None and best else None
        rows.extend(inst_rows)
    return [{c: r.get(c) for c in BENCH_COLUMNS} for r in rows]


def cmd_bench(args) -> int:
    algos = [a.strip() for a in args.algos.split(",") if a.strip()]
    bad = [a for a in algos if a not in ALGOS]
    if bad:
        raise InputError(f"unknown algorithms {bad}")
    rows = bench_rows(args.inputs, algos, args.format, args.rank, args.k, args.workers,
                      args.seed, args.timeout)
    if args.output_format == "json":
        text = json.dumps(rows, indent=1) + "\n"
    else:
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=BENCH_COLUMNS, lineterminator="\n")
        w.writeheader()
        w.writerows(rows)
        text = buf.getvalue()
    _write(text, args.output)
    return EXIT_OK


def cmd_verify(args) -> int:
    from .verify import run_verify

    results = run_verify(quick=args.quick, gset_dir=args.gset_dir)
    failed = [r for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} criteria passed")
    return EXIT_OK if not failed else 1


def cmd_gen(args) -> int:
    g = parse_generator(args.spec)
    text = G.format_gset(g) if args.format == "gset" else G.format_edgelist(g)
    _write(text, args.output)
    return EXIT_OK


COMMANDS = {"solve": cmd_solve, "bench": cmd_bench, "verify": cmd_verify, "gen": cmd_gen}


def main(argv=None) -> int:
    try:
        args = parse_args(argv)
        return COMMANDS[args.command](args)
    except (InputError, G.GraphError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
