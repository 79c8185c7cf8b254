"""Command-line front end: ``lsorder <command> [flags]``.

Exit codes: 0 success, 1 verification violation, 2 parse error, 3 semantic error.
"""
from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import time
from dataclasses import dataclass, field
from typing import Iterator, TextIO

from . import oracle
from .geometry import UnitPoint, read_points, write_points
from .grid_orders import all_pairs_orderings, directional_orderings, gap_orderings
from .locality_graph import (BcpState, Color, FamilyTooLarge, LocalityGraph, PointRecord,
                             bcp_family, bcp_query, from_scratch_edges, spanner_edges,
                             spanner_family, stretch_check)
from .lso import (LsoParams, build_classic, build_gap, deserialize, predicted_m, serialize)
from .packing import sphere_packing

EXIT_OK, EXIT_VIOLATION, EXIT_PARSE, EXIT_SEMANTIC = 0, 1, 2, 3
COMMANDS = ("build", "verify", "stream", "bcp", "spanner", "pack-sphere", "grid-orders",
            "lowerbound", "bench")
BENCH_COLUMNS = ("eps", "d", "kind", "m", "build_seconds", "mean_update_seconds",
                 "edges_per_point")


class CliError(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


# -------------------------------------------------------------------------- PRNG


class SplitMix64:
    """splitmix64: state += 0x9E3779B97F4A7C15, then two xor-shift-multiply rounds.
    ``uniform`` takes the top 53 bits as a double in [0, 1)."""

    MASK = (1 << 64) - 1

    def __init__(self, seed: int):
        self.state = seed & self.MASK

    def next_u64(self) -> int:
        self.state = (self.state + 0x9E3779B97F4A7C15) & self.MASK
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & self.MASK
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & self.MASK
        return z ^ (z >> 31)

    def uniform(self) -> float:
        return (self.next_u64() >> 11) * 2.0 ** -53

    def below(self, n: int) -> int:
        return self.next_u64() % n


def random_points(n: int, d: int, seed: int) -> list[UnitPoint]:
    rng = SplitMix64(seed)
    return [UnitPoint.from_floats([rng.uniform() for _ in range(d)]) for _ in range(n)]


# -------------------------------------------------------------------------- config


@dataclass
class RunConfig:
    command: str
    eps: float = 0.25
    gamma: float | None = None
    dim: int = 2
    kind: str = "gap"
    seed: int = 1
    points: str | None = None
    ops: str | None = None
    family: str | None = None
    out: str | None = None
    format: str = "json"
    check: int = 0
    mode: str | None = None
    t: int | None = None
    alpha: int | None = None
    radius: float | None = None
    n: int = 100
    eps_list: list[float] = field(default_factory=list)
    timing: bool = False
    threads: int = 0

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise CliError(EXIT_PARSE, f"unknown command {self.command}")
        if not 0 < self.eps <= 0.5:
            raise CliError(EXIT_PARSE, "--eps must lie in (0, 1/2]")
        if self.gamma is None:
            self.gamma = max(self.eps, 0.125)
        if not 0 < self.gamma <= 0.5:
            raise CliError(EXIT_PARSE, "--gamma must lie in (0, 1/2]")
        if self.gamma < self.eps:
            print(f"lsorder: warning: gamma {self.gamma} < eps {self.eps}; the gap "
                  "guarantee is only proven for gamma >= eps", file=sys.stderr)
        if not 1 <= self.dim <= 8:
            raise CliError(EXIT_PARSE, "--dim must lie in [1, 8]")
        if self.format not in ("json", "csv"):
            raise CliError(EXIT_PARSE, "--format must be json or csv")
        for name in ("points", "ops", "family", "out"):
            if getattr(self, name) == "":
                raise CliError(EXIT_PARSE, f"--{name} must not be empty")


def _threads() -> int:
    raw = os.environ.get("LSO_THREADS")
    if raw is None:
        return os.cpu_count() or 1
    try:
        value = int(raw)
    except ValueError:
        raise CliError(EXIT_PARSE, f"LSO_THREADS must be an integer, got {raw!r}") from None
    if value < 1:
        raise CliError(EXIT_PARSE, "LSO_THREADS must be positive")
    return value


# ------------------------------------------------------------------------ streams


@dataclass(frozen=True)
class Op:
    line: int
    insert: bool
    id: int
    color: Color = Color.NONE
    coords: tuple[float, ...] = ()


def parse_ops(lines, d: int) -> Iterator[Op]:
    """``+ <id> <R|B|N> <d coords>`` or ``- <id>``; blank lines and '#' comments skipped."""
    for lineno, raw in enumerate(lines, 1):
        tok = raw.split()
        if not tok or tok[0].startswith("#"):
            continue
        try:
            if tok[0] == "+":
                if len(tok) != 3 + d:
                    raise ValueError(f"expected {3 + d} fields, got {len(tok)}")
                coords = tuple(float(x) for x in tok[3:])
                if not all(0.0 <= x < 1.0 for x in coords):
                    raise ValueError("coordinates must lie in [0, 1)")
                yield Op(lineno, True, int(tok[1]), Color(tok[2]), coords)
            elif tok[0] == "-":
                if len(tok) != 2:
                    raise ValueError("a delete takes exactly one id")
                yield Op(lineno, False, int(tok[1]))
            else:
                raise ValueError(f"unknown op {tok[0]!r}")
        except ValueError as exc:
            raise CliError(EXIT_PARSE, f"line {lineno}: {exc}") from None


def _family_for(cfg: RunConfig, cap: int | None = 20_000):
    if cfg.command == "bcp":
        return bcp_family(cfg.eps, cfg.dim)
    if cfg.command == "spanner":
        return spanner_family(cfg.eps, cfg.dim)
    if cfg.family:
        with open(cfg.family, "rb") as fh:
            return deserialize(fh)
    params = (LsoParams.classic(cfg.eps, cfg.dim) if cfg.kind == "classic"
              else LsoParams.gap(cfg.eps, cfg.gamma, cfg.dim))
    m = predicted_m(params)
    if cap is not None and m is not None and m > cap:
        raise FamilyTooLarge(m, cap)
    return build_classic(cfg.eps, cfg.dim) if cfg.kind == "classic" \
        else build_gap(cfg.eps, cfg.gamma, cfg.dim)


def run_stream(cfg: RunConfig, out: TextIO) -> int:
    if not cfg.ops:
        raise CliError(EXIT_PARSE, "--ops is required")
    with open(cfg.ops) as fh:
        ops = list(parse_ops(fh, cfg.dim))
    try:
        family = _family_for(cfg)
    except FamilyTooLarge as exc:
        raise CliError(EXIT_SEMANTIC, str(exc)) from None
    graph = LocalityGraph(family)
    state = BcpState(graph)
    rows, checks = [], []
    for k, op in enumerate(ops):
        start = time.perf_counter()
        try:
            if op.insert:
                state.insert(PointRecord(op.id, UnitPoint.from_floats(op.coords), op.color))
            else:
                state.delete(op.id)
        except KeyError as exc:
            raise CliError(EXIT_SEMANTIC, f"line {op.line}: {exc.args[0]}") from None
        elapsed = time.perf_counter() - start
        best = bcp_query(state)
        row = {"op_index": k, "edge_count": graph.edge_count(), "max_degree": graph.max_degree(),
               "bcp": None if best is None else {"red": best[0], "blue": best[1],
                                                 "dist": best[2]}}
        if cfg.timing:
            row["seconds"] = elapsed
        rows.append(row)
        if cfg.check and (k + 1) % cfg.check == 0:
            ok = from_scratch_edges(family, graph.records.values()) == graph.edges
            checks.append({"op_index": k, "agrees": ok})
    summary = {"n": graph.n, "edges": graph.edge_count(), "max_degree": graph.max_degree(),
               "m": family.m, "ops": len(ops)}
    if cfg.check:
        summary["checks"] = len(checks)
        summary["checks_passed"] = sum(c["agrees"] for c in checks)
    json.dump({"schema": 1, "ops": rows, "checks": checks, "summary": summary}, out)
    out.write("\n")
    return EXIT_OK if all(c["agrees"] for c in checks) else EXIT_VIOLATION


# ------------------------------------------------------------------- other commands


def _load_points(cfg: RunConfig) -> list[UnitPoint]:
    if cfg.points:
        with open(cfg.points) as fh:
            try:
                rows = read_points(fh)
            except ValueError as exc:
                raise CliError(EXIT_PARSE, str(exc)) from None
        try:
            return [UnitPoint.from_floats(r) for r in rows]
        except ValueError as exc:
            raise CliError(EXIT_PARSE, str(exc)) from None
    return random_points(cfg.n, cfg.dim, cfg.seed)


def run_build(cfg: RunConfig, out: TextIO) -> int:
    if not cfg.out:
        raise CliError(EXIT_PARSE, "--out is required")
    fam = build_classic(cfg.eps, cfg.dim) if cfg.kind == "classic" \
        else build_gap(cfg.eps, cfg.gamma, cfg.dim)
    with open(cfg.out, "wb") as fh:
        serialize(fam, fh)
    p = fam.params
    json.dump({"schema": 1, "kind": p.kind, "lam": p.lam, "grid_side": p.big_e,
               "alpha": p.alpha, "m": fam.m, "out": cfg.out}, out)
    out.write("\n")
    return EXIT_OK


def run_verify(cfg: RunConfig, out: TextIO) -> int:
    mode = cfg.mode or "gap"
    if mode in ("grid", "gaporders") and cfg.t is not None:
        if mode == "grid":
            report = oracle.verify_grid_conclusion(directional_orderings(cfg.t, cfg.dim),
                                                   cfg.t, cfg.dim)
        else:
            report = oracle.verify_gap_orderings(
                gap_orderings(cfg.t, cfg.alpha or cfg.t, cfg.dim))
    else:
        # the verifiers never materialize all orderings, so no size cap here
        family = _family_for(cfg, cap=None)
        p = family.params
        if mode == "grid":
            report = oracle.verify_grid_conclusion(family.grid_orders, p.big_e, p.d)
        elif mode == "gaporders":
            report = oracle.verify_gap_orderings(family.grid_orders)
        elif mode == "classic":
            report = oracle.verify_locality(family, _load_points(cfg), p.eps)
        elif mode == "gap":
            report = oracle.verify_locality_gap(family, _load_points(cfg), p.eps, p.gamma)
        else:
            raise CliError(EXIT_PARSE, f"unknown verify mode {mode}")
    json.dump(report.to_json(), out)
    out.write("\n")
    return EXIT_OK if report.passed else EXIT_VIOLATION


def run_spanner(cfg: RunConfig, out: TextIO) -> int:
    try:
        family = _family_for(cfg)
    except FamilyTooLarge as exc:
        raise CliError(EXIT_SEMANTIC, str(exc)) from None
    graph = LocalityGraph(family)
    pts = _load_points(cfg)
    for i, p in enumerate(pts):
        graph.insert(PointRecord(i, p))
    edges = spanner_edges(graph)
    rep = stretch_check(edges, {i: p.to_floats() for i, p in enumerate(pts)})
    json.dump({"schema": 1, "n": len(pts), "m": family.m, "edges": len(edges),
               "max_stretch": rep.max_stretch, "pair": rep.pair,
               "within_bound": rep.max_stretch <= 1 + cfg.eps + 1e-9}, out)
    out.write("\n")
    return EXIT_OK if rep.max_stretch <= 1 + cfg.eps + 1e-9 else EXIT_VIOLATION


def run_pack_sphere(cfg: RunConfig, out: TextIO) -> int:
    r = cfg.radius if cfg.radius is not None else cfg.eps
    try:
        pk = sphere_packing(cfg.dim, r)
    except ValueError as exc:
        raise CliError(EXIT_SEMANTIC, str(exc)) from None
    out.write(write_points(pk.points))
    return EXIT_OK


def run_grid_orders(cfg: RunConfig, out: TextIO) -> int:
    if cfg.t is None:
        raise CliError(EXIT_PARSE, "--t is required")
    kind = cfg.kind if cfg.kind in ("walecki", "directional", "gap") else "walecki"
    if kind == "walecki":
        orders = all_pairs_orderings(cfg.t, cfg.dim)
    elif kind == "directional":
        orders = directional_orderings(cfg.t, cfg.dim)
    else:
        orders = gap_orderings(cfg.t, cfg.alpha or 1, cfg.dim)
    for o in orders:
        out.write(" ".join(map(str, o.sequence.tolist())) + "\n")
    return EXIT_OK


def run_lowerbound(cfg: RunConfig, out: TextIO) -> int:
    kind = cfg.mode or "grid"
    try:
        if kind == "grid":
            rep = oracle.lower_bound_grid_instance(cfg.eps, cfg.dim)
        elif kind == "sphere":
            rep = oracle.lower_bound_sphere_instance(cfg.eps, cfg.dim)
        elif kind == "spanner":
            rows = oracle.spanner_edge_lower_bound_report(cfg.eps_list or [cfg.eps], cfg.dim,
                                                          cfg.n)
            json.dump({"schema": 1, "rows": rows}, out)
            out.write("\n")
            return EXIT_OK
        else:
            raise CliError(EXIT_PARSE, f"unknown lower-bound kind {kind}")
    except ValueError as exc:
        raise CliError(EXIT_SEMANTIC, str(exc)) from None
    json.dump({"schema": 1, "kind": kind, "n": len(rep.points),
               "premise_holds": rep.premise_holds, "implied_bound": rep.implied_bound,
               **oracle._jsonable(rep.detail)}, out)
    out.write("\n")
    return EXIT_OK if rep.premise_holds else EXIT_VIOLATION


def bench_rows(cfg: RunConfig) -> list[dict]:
    rows = []
    pts = random_points(cfg.n, cfg.dim, cfg.seed)
    for eps in cfg.eps_list or [cfg.eps]:
        for kind in ("classic", "gap"):
            params = (LsoParams.classic(eps, cfg.dim) if kind == "classic"
                      else LsoParams.gap(eps, cfg.gamma, cfg.dim))
            m = predicted_m(params)
            row = {"eps": eps, "d": cfg.dim, "kind": kind, "m": m, "build_seconds": "",
                   "mean_update_seconds": "", "edges_per_point": ""}
            if m is not None and m <= 20_000:
                start = time.perf_counter()
                fam = build_classic(eps, cfg.dim) if kind == "classic" \
                    else build_gap(eps, cfg.gamma, cfg.dim)
                row["build_seconds"] = time.perf_counter() - start
                graph = LocalityGraph(fam)
                start = time.perf_counter()
                for i, p in enumerate(pts):
                    graph.insert(PointRecord(i, p))
                row["mean_update_seconds"] = (time.perf_counter() - start) / len(pts)
                row["edges_per_point"] = graph.edge_count() / len(pts)
            rows.append(row)
    rows.sort(key=lambda r: (r["eps"], r["kind"]))
    if not cfg.timing:
        for r in rows:
            for col in ("build_seconds", "mean_update_seconds"):
                r[col] = "" if r[col] == "" else "-"
    return rows


def run_bench(cfg: RunConfig, out: TextIO) -> int:
    rows = bench_rows(cfg)
    if cfg.format == "csv":
        writer = csv.DictWriter(out, fieldnames=BENCH_COLUMNS, lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)
    else:
        json.dump({"schema": 1, "rows": rows}, out)
        out.write("\n")
    return EXIT_OK


RUNNERS = {"build": run_build, "verify": run_verify, "stream": run_stream, "bcp": run_stream,
           "spanner": run_spanner, "pack-sphere": run_pack_sphere,
           "grid-orders": run_grid_orders, "lowerbound": run_lowerbound, "bench": run_bench}


# ------------------------------------------------------------------------- parser


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise CliError(EXIT_PARSE, message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="lsorder", description=__doc__.splitlines()[0])
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--eps", type=float, default=0.25)
    parser.add_argument("--gamma", type=float, default=None,
                        help="gap constant (default max(eps, 1/8))")
    parser.add_argument("--dim", type=int, default=2)
    parser.add_argument("--kind", default="gap",
                        help="classic|gap for families, walecki|directional|gap for grid-orders")
    parser.add_argument("--seed", type=int, default=1)
    parser.add_argument("--points")
    parser.add_argument("--ops")
    parser.add_argument("--family")
    parser.add_argument("--out")
    parser.add_argument("--format", default="json")
    parser.add_argument("--check", type=int, default=0, metavar="EVERY",
                        help="compare against a from-scratch rebuild every EVERY ops")
    parser.add_argument("--mode", help="verify: classic|gap|grid|gaporders; "
                                       "lowerbound: grid|sphere|spanner")
    parser.add_argument("--t", type=int)
    parser.add_argument("--alpha", type=int)
    parser.add_argument("--radius", type=float)
    parser.add_argument("--n", type=int, default=100, help="synthetic point count")
    parser.add_argument("--eps-list", type=lambda s: [float(x) for x in s.split(",")],
                        default=[])
    parser.add_argument("--timing", action="store_true",
                        help="include wall-clock columns (reports stop being reproducible)")
    return parser


def main(argv=None, out: TextIO | None = None) -> int:
    out = out or sys.stdout
    try:
        ns = build_parser().parse_args(argv)
        cfg = RunConfig(**{k: v for k, v in vars(ns).items()}, threads=_threads())
        return RUNNERS[cfg.command](cfg, out)
    except CliError as exc:
        print(f"lsorder: {exc}", file=sys.stderr)
        return exc.code
    except OSError as exc:
        print(f"lsorder: {exc}", file=sys.stderr)
        return EXIT_PARSE


if __name__ == "__main__":
    sys.exit(main())
