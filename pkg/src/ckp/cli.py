"""Command-line front end and benchmark harness.

Subcommands::

    ckp generate --family sc --n 100 --rho 0.9 --seed 7 --out inst.json
    ckp solve    --alg ncr --in inst.json [--json]
    ckp separate --in inst.json --x point.txt
    ckp bench    --suite smoke --out bench.csv

Exit codes: 0 ok, 2 usage / unreadable input, 3 invalid instance, 4 solver failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from .approx import solve_approx
from .bounds import convex_bound, separate
from .core import CKPError, Instance, InvalidInstanceError, check, validate
from .exact import MAX_BRUTE_N, branch_and_bound, brute_force
from .generators import FAMILIES, GenSpec, generate
from .ncr import solve_ncr

EXIT_OK, EXIT_USAGE, EXIT_INVALID, EXIT_SOLVER = 0, 2, 3, 4
ALGORITHMS = ("ncr", "approx", "convex", "exact-bf", "exact-bb")

SUITES = {
    "smoke": {"sizes": (10, 15), "seeds": 5},
    "paper": {"sizes": (100, 500, 1000, 5000), "seeds": 10},
}

BENCH_COLUMNS = [
    "row", "family", "n", "rho", "seed", "capacity_factor",
    "z_NC", "z_C", "z_A", "z_OPT", "exact_proven",
    "delta_count", "delta_star_count", "bb_nodes",
    "cgap_NC", "gap_A",
    "t_ncr", "t_approx", "t_convex", "t_exact",
    "error",
]
TIME_COLUMNS = ("t_ncr", "t_approx", "t_convex", "t_exact")


@dataclass
class RunRecord:
    instance: str
    alg: str
    value: float
    time_s: float
    counters: dict = field(default_factory=dict)
    extra: dict = field(default_factory=dict)


def _timed(fn, *args, **kw):
    t0 = time.perf_counter()
    out = fn(*args, **kw)
    return out, time.perf_counter() - t0


def run_algorithm(inst: Instance, alg: str, time_limit=None, node_limit=1_000_000,
                  force=False) -> RunRecord:
    if alg == "ncr":
        res, dt = _timed(solve_ncr, inst, force=force)
        sol = res.solution
        return RunRecord(inst.name, alg, res.z_nc, dt,
                         counters={"delta_count": res.deltas.delta_count,
                                   "delta_star_count": res.deltas.delta_star_count},
                         extra={"delta_L": res.deltas.delta_L, "delta_U": res.deltas.delta_U,
                                "delta_star": sol.delta, "frac_index": sol.frac_index,
                                "x": sol.x.tolist()})
    if alg == "approx":
        (sol, cert), dt = _timed(solve_approx, inst, force=force)
        return RunRecord(inst.name, alg, cert.z_a, dt,
                         extra={"z_NC": cert.z_nc, "ratio": cert.ratio,
                                "gap_percent": cert.gap_percent, "items": sol.items})
    if alg == "convex":
        check(inst, force=force)
        res, dt = _timed(convex_bound, inst)
        return RunRecord(inst.name, alg, res.z_c, dt, counters={"iterations": res.iterations},
                         extra={"lambda_star": res.lambda_star, "primal_value": res.primal_value,
                                "duality_gap": res.duality_gap})
    if alg == "exact-bf":
        check(inst, force=force)
        res, dt = _timed(brute_force, inst)
    elif alg == "exact-bb":
        res, dt = _timed(branch_and_bound, inst, node_limit=node_limit,
                         time_limit=time_limit, force=force)
    else:
        raise ValueError(f"unknown algorithm {alg!r}")
    items = [int(j) for j in np.flatnonzero(res.x_opt > 0.5)]
    return RunRecord(inst.name, alg, res.z_opt, dt, counters={"nodes": res.nodes},
                     extra={"proven": res.proven, "items": items})


def _format_record(rec: RunRecord) -> str:
    lines = [f"instance: {rec.instance}", f"algorithm: {rec.alg}",
             f"value: {rec.value!r}", f"time_s: {rec.time_s:.6f}"]
    for k, v in {**rec.counters, **rec.extra}.items():
        if k == "x":
            v = " ".join(f"{xi:.12g}" for xi in v)
        lines.append(f"{k}: {v}")
    if rec.alg == "approx":
        lines.append(f"gap%: {rec.extra['gap_percent']:.6f}")
    return "\n".join(lines) + "\n"


# --------------------------------------------------------------------------
# bench
# --------------------------------------------------------------------------

def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return str(int(v))
    if isinstance(v, float):
        if math.isnan(v):
            return ""
        return repr(v)
    return str(v)


def bench_row(spec: GenSpec, exact_max_n: int = 1000, node_limit: int = 20000,
              time_limit: float = 30.0) -> dict:
    row = {k: None for k in BENCH_COLUMNS}
    row.update(row="run", family=spec.family, n=spec.n, rho=spec.rho, seed=spec.seed,
               capacity_factor=spec.capacity_factor)
    try:
        inst = generate(spec)
        ncr, row["t_ncr"] = _timed(solve_ncr, inst)
        (sol, cert), row["t_approx"] = _timed(solve_approx, inst)
        cvx, row["t_convex"] = _timed(convex_bound, inst)
        row.update(z_NC=ncr.z_nc, z_C=cvx.z_c, z_A=cert.z_a,
                   delta_count=ncr.deltas.delta_count,
                   delta_star_count=ncr.deltas.delta_star_count)
        z_lb, z_ub = cert.z_a, ncr.z_nc
        if spec.n <= MAX_BRUTE_N:
            ex, row["t_exact"] = _timed(brute_force, inst)
        elif spec.n <= exact_max_n:
            ex, row["t_exact"] = _timed(branch_and_bound, inst, node_limit=node_limit,
                                        time_limit=time_limit)
            row["bb_nodes"] = ex.nodes
        else:
            ex = None
        if ex is not None:
            row["exact_proven"] = ex.proven
            z_lb = max(z_lb, ex.z_opt)
            if ex.proven:
                row["z_OPT"] = ex.z_opt
                z_ub = min(z_ub, ex.z_opt)
        if cvx.z_c - z_lb > 0:
            row["cgap_NC"] = 100.0 * (cvx.z_c - ncr.z_nc) / (cvx.z_c - z_lb)
        row["gap_A"] = 100.0 * (z_ub - cert.z_a) / z_ub
    except CKPError as exc:
        row["error"] = f"{type(exc).__name__}: {exc}"
    return row


def _bench_row_star(args):
    return bench_row(*args)


def _averages(rows: list[dict]) -> list[dict]:
    cells: dict = {}
    for r in rows:
        if r["row"] != "run" or r["error"]:
            continue
        key = (r["family"], r["n"], r["rho"], r["capacity_factor"])
        cells.setdefault(key, []).append(r)
    out = []
    numeric = [c for c in BENCH_COLUMNS if c not in
               ("row", "family", "n", "rho", "seed", "capacity_factor", "error")]
    for (fam, n, rho, cf), group in cells.items():
        avg = {k: None for k in BENCH_COLUMNS}
        avg.update(row="avg", family=fam, n=n, rho=rho, capacity_factor=cf)
        for col in numeric:
            vals = [float(r[col]) for r in group if r[col] is not None]
            if vals:
                avg[col] = float(sum(vals) / len(vals))
        out.append(avg)
    return out


def bench_specs(suite: str, seeds: int, rho: float, sizes, capacity_factor: float = 1.0):
    return [GenSpec(fam, n, rho, seed, capacity_factor)
            for fam in FAMILIES for n in sizes for seed in range(seeds)]


def render_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(BENCH_COLUMNS)
    for r in rows:
        w.writerow([_fmt(r[c]) for c in BENCH_COLUMNS])
    return buf.getvalue()


def run_bench(specs, jobs: int = 1, **kw) -> list[dict]:
    args = [(s, kw.get("exact_max_n", 1000), kw.get("node_limit", 20000),
             kw.get("time_limit", 30.0)) for s in specs]
    if jobs > 1 and len(args) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_bench_row_star, args))
    else:
        rows = [_bench_row_star(a) for a in args]
    return rows + _averages(rows)


# --------------------------------------------------------------------------
# argument handling
# --------------------------------------------------------------------------

def _sizes(text: str):
    try:
        return tuple(int(s) for s in text.split(",") if s.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad size list {text!r}")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ckp", description=__doc__.split("\n")[0])
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write a seeded benchmark instance")
    g.add_argument("--family", required=True, type=str.upper, choices=FAMILIES)
    g.add_argument("--n", required=True, type=int)
    g.add_argument("--rho", type=float, default=0.9)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--capacity-factor", type=float, default=1.0)
    g.add_argument("--out", required=True)

    s = sub.add_parser("solve", help="run one algorithm on an instance file")
    s.add_argument("--alg", required=True, choices=ALGORITHMS)
    s.add_argument("--in", dest="path", required=True)
    s.add_argument("--json", action="store_true")
    s.add_argument("--time-limit", type=float, default=None)
    s.add_argument("--node-limit", type=int, default=1_000_000)
    s.add_argument("--force", action="store_true", help="warn instead of failing on violated assumptions")

    e = sub.add_parser("separate", help="separation oracle for the polyhedral relaxation")
    e.add_argument("--in", dest="path", required=True)
    e.add_argument("--x", dest="xpath", required=True, help="one value per line")
    e.add_argument("--json", action="store_true")

    b = sub.add_parser("bench", help="run a benchmark suite into a CSV file")
    b.add_argument("--suite", choices=sorted(SUITES), default="smoke")
    b.add_argument("--out", required=True)
    b.add_argument("--seeds", type=int, default=None)
    b.add_argument("--rho", type=float, default=0.9)
    b.add_argument("--sizes", type=_sizes, default=None)
    b.add_argument("--capacity-factor", type=float, default=1.0)
    b.add_argument("--jobs", type=int, default=os.cpu_count() or 1)
    b.add_argument("--exact-max-n", type=int, default=1000)
    b.add_argument("--node-limit", type=int, default=20000)
    b.add_argument("--time-limit", type=float, default=30.0)
    return p


def _load(path: str) -> Instance:
    with open(path, encoding="utf-8") as fh:
        return Instance.from_json(fh.read())


def _cmd_generate(args) -> int:
    try:
        spec = GenSpec(args.family, args.n, args.rho, args.seed, args.capacity_factor)
    except CKPError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        inst = generate(spec)
    except CKPError as exc:
        print(f"invalid instance: {exc}", file=sys.stderr)
        return EXIT_INVALID
    inst.save(args.out)
    problems = validate(inst)
    print(f"wrote {args.out}: {inst.name} n={inst.n} b={inst.b:g} kappa={inst.kappa:.10f}")
    print("validation: ok" if not problems else "validation: " + "; ".join(problems))
    return EXIT_OK if not problems else EXIT_INVALID


def _cmd_solve(args) -> int:
    try:
        inst = _load(args.path)
    except (OSError, ValueError, KeyError, TypeError) as exc:
        print(f"cannot read instance: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        rec = run_algorithm(inst, args.alg, time_limit=args.time_limit,
                            node_limit=args.node_limit, force=args.force)
    except InvalidInstanceError as exc:
        print(f"invalid instance: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except CKPError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    if args.json:
        print(json.dumps(asdict(rec)))
    else:
        sys.stdout.write(_format_record(rec))
    return EXIT_OK


def _cmd_separate(args) -> int:
    try:
        inst = _load(args.path)
        with open(args.xpath, encoding="utf-8") as fh:
            x = np.array([float(s) for s in fh.read().split()])
    except (OSError, ValueError, KeyError, TypeError) as exc:
        print(f"cannot read input: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if x.shape != (inst.n,):
        print(f"expected {inst.n} values, got {x.size}", file=sys.stderr)
        return EXIT_USAGE
    res = separate(inst, x)
    verdict = "in P_P" if res.member(inst.b) else "not in P_P"
    if args.json:
        print(json.dumps({"eta": res.eta, "b": inst.b, "verdict": verdict, "pi": res.pi.tolist()}))
    else:
        print(f"eta: {res.eta!r}")
        print(f"b: {inst.b!r}")
        print(f"verdict: {verdict}")
        print("pi: " + " ".join(f"{v:.12g}" for v in res.pi))
    return EXIT_OK


def _cmd_bench(args) -> int:
    cfg = SUITES[args.suite]
    sizes = args.sizes or cfg["sizes"]
    seeds = args.seeds if args.seeds is not None else cfg["seeds"]
    try:
        specs = bench_specs(args.suite, seeds, args.rho, sizes, args.capacity_factor)
    except CKPError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    rows = run_bench(specs, jobs=max(1, args.jobs), exact_max_n=args.exact_max_n,
                     node_limit=args.node_limit, time_limit=args.time_limit)
    with open(args.out, "w", encoding="utf-8", newline="") as fh:
        fh.write(render_csv(rows))
    runs = [r for r in rows if r["row"] == "run"]
    ok = sum(1 for r in runs if not r["error"])
    print(f"wrote {args.out}: {ok}/{len(runs)} runs succeeded")
    return EXIT_OK if ok else EXIT_SOLVER


def main(argv: Optional[list[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    handler = {"generate": _cmd_generate, "solve": _cmd_solve,
               "separate": _cmd_separate, "bench": _cmd_bench}[args.command]
    return handler(args)


if __name__ == "__main__":
    sys.exit(main())
