"""Command-line front end: ``nocurl simulate | learn | eval | bench``.

Exit codes: 0 on success, 1 on invalid input, 2 when some bench rows failed.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .algorithm import ALL_METHODS, InternalError, learn
from .core import CsvFormatError, DimensionError, format_matrix_csv, read_matrix_csv, write_matrix_csv
from .dagspace import is_dag
from .metrics import delta_f, shd
from .objectives import Dataset, h_poly
from .synth import GENERATOR_VERSION, NOISE_KINDS, GraphSpec, simulate

FORMAT_VERSION = 1
RESULT_COLUMNS = [
    "variant", "d", "scheme", "k", "noise", "seed", "shd", "extra", "missing", "reverse",
    "delta_f", "time_seconds", "final_h", "error",
]
METRIC_COLUMNS = ["shd", "extra", "missing", "reverse", "delta_f", "time_seconds", "final_h"]


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: {message}")


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _out_dir(path: str) -> Path:
    out = Path(path)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise UsageError(f"cannot create output directory {out}: {exc.strerror}") from None
    if not os.access(out, os.W_OK):
        raise UsageError(f"output directory {out} is not writable")
    return out


def _load_data(path: str) -> Dataset:
    try:
        return Dataset(read_matrix_csv(path))
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None
    except CsvFormatError as exc:
        raise UsageError(f"{path}: {exc}") from None


def _load_matrix(path: str) -> np.ndarray:
    try:
        return read_matrix_csv(path)
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None
    except CsvFormatError as exc:
        raise UsageError(f"{path}: {exc}") from None


def cmd_simulate(args) -> int:
    try:
        spec = GraphSpec(args.d, args.scheme, args.k, args.seed)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    if args.n < 1:
        raise UsageError("--n must be positive")
    a0, data = simulate(spec, args.n, args.noise)
    out = _out_dir(args.out)
    write_matrix_csv(data.x, out / "X.csv")
    write_matrix_csv(a0, out / "A_true.csv")
    _write_json(out / "meta.json", {
        "format_version": FORMAT_VERSION,
        "generator_version": GENERATOR_VERSION,
        "d": args.d, "scheme": args.scheme, "k": args.k, "n": args.n,
        "noise": args.noise, "seed": args.seed, "edges": int(np.count_nonzero(a0)),
    })
    return 0


def cmd_learn(args) -> int:
    data = _load_data(args.data)
    try:
        res = learn(data, args.variant, lambdas=args.lam or None, eps=args.eps,
                    h_kind=args.h, seed=args.seed)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    out = _out_dir(args.out)
    write_matrix_csv(res.a_hat, out / "A_hat.csv")
    _write_json(out / "result.json", {"format_version": FORMAT_VERSION, "seed": args.seed, **res.summary()})
    return 0


def cmd_eval(args) -> int:
    pred = _load_matrix(args.pred)
    truth = _load_matrix(args.truth)
    try:
        report = shd(pred, truth).as_dict()
        if args.data:
            report["delta_f"] = delta_f(pred, truth, _load_data(args.data))
    except DimensionError as exc:
        raise UsageError(str(exc)) from None
    print(json.dumps(report, sort_keys=True))
    return 0


@dataclass
class BenchConfig:
    d: list[int] = field(default_factory=lambda: [10])
    scheme: str = "er"
    k: float = 3
    noise: str = "gaussian"
    n: int = 1000
    trials: int = 1
    variants: list[str] = field(default_factory=lambda: ["nocurl2"])
    seed: int = 0
    out: str = "bench_out"
    eps: float = 0.3
    h: str = "poly"

    def __post_init__(self):
        self.d = [int(v) for v in self.d]
        self.variants = list(self.variants)
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if not self.variants:
            raise ValueError("variants must be nonempty")
        bad = [v for v in self.variants if v not in ALL_METHODS]
        if bad:
            raise ValueError(f"unknown variants {bad}; expected from {list(ALL_METHODS)}")
        if self.noise not in NOISE_KINDS:
            raise ValueError(f"unknown noise kind {self.noise!r}")
        if self.n < 1:
            raise ValueError("n must be positive")
        for d in self.d:
            GraphSpec(d, self.scheme, self.k, 0)


def data_seed(master: int, trial: int) -> int:
    return master ^ trial


def algo_seed(master: int, trial: int, variant: str) -> int:
    return master ^ trial ^ zlib.crc32(variant.encode())


@dataclass(frozen=True)
class _Job:
    cfg: BenchConfig
    d: int
    trial: int
    variants: tuple[str, ...]


def _run_job(job: _Job) -> list[tuple[dict, np.ndarray | None]]:
    cfg = job.cfg
    seed = data_seed(cfg.seed, job.trial)
    a0, data = simulate(GraphSpec(job.d, cfg.scheme, cfg.k, seed), cfg.n, cfg.noise)
    rows = []
    for v in job.variants:
        row = {"variant": v, "d": job.d, "scheme": cfg.scheme, "k": cfg.k, "noise": cfg.noise, "seed": seed}
        a_hat = None
        try:
            res = learn(data, v, eps=cfg.eps, h_kind=cfg.h, seed=algo_seed(cfg.seed, job.trial, v))
            a_hat = res.a_hat
            if not is_dag(a_hat) or h_poly(a_hat) > 1e-8:
                raise InternalError(f"variant {v} emitted a cyclic graph")
            row.update(shd(a_hat, a0).as_dict())
            row["delta_f"] = delta_f(a_hat, a0, data)
            row["time_seconds"] = res.wall_time
            row["final_h"] = res.final_h
            row["error"] = ""
        except (InternalError, ValueError, ArithmeticError, np.linalg.LinAlgError) as exc:
            row.update({c: "" for c in METRIC_COLUMNS})
            row["error"] = f"{type(exc).__name__}: {exc}"
        rows.append((row, a_hat))
    return rows


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def format_results_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(RESULT_COLUMNS)
    for r in rows:
        w.writerow([_fmt(r[c]) for c in RESULT_COLUMNS])
    return buf.getvalue()


def summarize(rows: list[dict], cfg: BenchConfig) -> dict:
    """Mean and standard error (sample std over sqrt of count) per variant and graph size."""
    cells = []
    for d in cfg.d:
        for v in cfg.variants:
            ok = [r for r in rows if r["d"] == d and r["variant"] == v and not r["error"]]
            cell = {"variant": v, "d": d, "scheme": cfg.scheme, "k": cfg.k, "noise": cfg.noise,
                    "trials": len(ok), "failed": sum(1 for r in rows if r["d"] == d and r["variant"] == v) - len(ok)}
            for c in METRIC_COLUMNS:
                vals = np.array([float(r[c]) for r in ok])
                if vals.size == 0:
                    cell[c] = {"mean": None, "se": None}
                    continue
                se = float(vals.std(ddof=1) / math.sqrt(vals.size)) if vals.size > 1 else 0.0
                cell[c] = {"mean": float(vals.mean()), "se": se}
            cells.append(cell)
    return {"format_version": FORMAT_VERSION, "generator_version": GENERATOR_VERSION,
            "config": asdict(cfg), "cells": cells}


def run_bench(cfg: BenchConfig, jobs: int = 1) -> tuple[list[dict], int]:
    """Run every trial for every variant, write outputs, and return ``(rows, exit_code)``."""
    out = _out_dir(cfg.out)
    todo = [_Job(cfg, d, t, tuple(cfg.variants)) for d in cfg.d for t in range(cfg.trials)]
    if jobs > 1 and len(todo) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_run_job, todo))
    else:
        results = [_run_job(j) for j in todo]

    rows = []
    mat_dir = out / "a_hat"
    mat_dir.mkdir(exist_ok=True)
    for job, job_rows in zip(todo, results):
        for row, a_hat in job_rows:
            rows.append(row)
            if a_hat is not None:
                name = f"{row['variant']}_d{job.d}_{cfg.scheme}{cfg.k:g}_{cfg.noise}_t{job.trial}.csv"
                (mat_dir / name).write_text(format_matrix_csv(a_hat))
    (out / "results.csv").write_text(format_results_csv(rows))
    _write_json(out / "summary.json", summarize(rows, cfg))
    return rows, 2 if any(r["error"] for r in rows) else 0


def _default_jobs() -> int:
    env = os.environ.get("NOCURL_JOBS")
    if env:
        try:
            n = int(env)
        except ValueError:
            raise UsageError(f"NOCURL_JOBS must be an integer, got {env!r}") from None
        if n < 1:
            raise UsageError("NOCURL_JOBS must be >= 1")
        return n
    return os.cpu_count() or 1


def cmd_bench(args) -> int:
    settings = {}
    if args.config:
        try:
            settings = json.loads(Path(args.config).read_text())
        except OSError as exc:
            raise UsageError(f"cannot read {args.config}: {exc.strerror}") from None
        except json.JSONDecodeError as exc:
            raise UsageError(f"{args.config}: invalid JSON ({exc})") from None
        if not isinstance(settings, dict):
            raise UsageError(f"{args.config}: expected a JSON object")
    for key in ("d", "scheme", "k", "noise", "n", "trials", "variants", "seed", "out", "eps", "h"):
        val = getattr(args, key)
        if val is not None:
            settings[key] = val
    try:
        cfg = BenchConfig(**settings)
    except TypeError as exc:
        raise UsageError(f"bad bench configuration: {exc}") from None
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    jobs = args.jobs if args.jobs is not None else _default_jobs()
    if jobs < 1:
        raise UsageError("--jobs must be >= 1")
    _, code = run_bench(cfg, jobs)
    return code


def _csv_list(conv):
    def parse(text):
        try:
            return [conv(t) for t in text.split(",") if t]
        except ValueError:
            raise argparse.ArgumentTypeError(f"bad list {text!r}") from None
    return parse


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="nocurl", description="DAG structure learning with curl-free ordering potentials.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("simulate", help="sample a random DAG and linear-SEM data")
    s.add_argument("--d", type=int, required=True)
    s.add_argument("--scheme", choices=["er", "sf"], default="er")
    s.add_argument("--k", type=float, default=3)
    s.add_argument("--n", type=int, default=1000)
    s.add_argument("--noise", choices=list(NOISE_KINDS), default="gaussian")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("learn", help="learn a DAG from an n x d data CSV")
    s.add_argument("--data", required=True)
    s.add_argument("--variant", choices=list(ALL_METHODS), default="nocurl2")
    s.add_argument("--lambda", dest="lam", type=float, action="append",
                   help="penalty coefficient; repeat for a sequence")
    s.add_argument("--eps", type=float, default=0.3)
    s.add_argument("--h", choices=["poly", "expm"], default="poly")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_learn)

    s = sub.add_parser("eval", help="compare a learned graph to the truth")
    s.add_argument("--pred", required=True)
    s.add_argument("--truth", required=True)
    s.add_argument("--data")
    s.set_defaults(func=cmd_eval)

    s = sub.add_parser("bench", help="run trials x variants and summarize")
    s.add_argument("--config", help="JSON file with BenchConfig fields; flags override it")
    s.add_argument("--d", type=_csv_list(int))
    s.add_argument("--scheme", choices=["er", "sf"])
    s.add_argument("--k", type=float)
    s.add_argument("--noise", choices=list(NOISE_KINDS))
    s.add_argument("--n", type=int)
    s.add_argument("--trials", type=int)
    s.add_argument("--variants", type=_csv_list(str))
    s.add_argument("--seed", type=int)
    s.add_argument("--eps", type=float)
    s.add_argument("--h", choices=["poly", "expm"])
    s.add_argument("--out")
    s.add_argument("--jobs", type=int, help="worker processes (default: $NOCURL_JOBS or core count)")
    s.set_defaults(func=cmd_bench)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except InternalError as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
