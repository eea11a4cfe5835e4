"""Command-line frontend.

Every command writes JSON (one object per line, keys sorted) so that runs
with the same seed are byte-identical.  Exit codes: 1 for configuration
errors, 2 for unsatisfiable tasks, 3 when a sample fails its constraint
re-check or is missing from the enumeration it is evaluated against.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import time
from contextlib import contextmanager

import numpy as np

from .constraints import parse_constraints
from .data import ParseError, TransactionDatabase, parse_cp4im, parse_fimi
from .evaluation import (EmpiricalDistribution, enumerate_all, js_components,
                         factor_band_profile, pattern_key, target_from_qualities)
from .measures import MEASURES, MeasureError
from .tasks import ORACLES, Task, TaskError, check_pattern, make_oracle
from .weightgen import (SamplerParams, UnsatisfiableTask, estimate_total_weight, estimation_rng,
                        sample_patterns)

log = logging.getLogger("flexics")

EXIT_CONFIG = 1
EXIT_UNSAT = 2
EXIT_MISMATCH = 3


class CliFailure(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


def _dump(obj) -> str:
    return json.dumps(obj, sort_keys=True)


@contextmanager
def _open_output(path):
    if path in (None, "-"):
        yield sys.stdout
    else:
        with open(path, "w", encoding="utf-8") as fh:
            yield fh


def load_database(path: str, fmt: str) -> TransactionDatabase:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise CliFailure(EXIT_CONFIG, f"cannot read dataset: {exc}") from None
    try:
        return parse_cp4im(text) if fmt == "cp4im" else parse_fimi(text)
    except ParseError as exc:
        raise CliFailure(EXIT_CONFIG, f"{path}: {exc}") from None


def build_task(args) -> Task:
    db = load_database(args.dataset, args.format)
    try:
        constraints = parse_constraints(args.constraints)
    except ValueError as exc:
        raise CliFailure(EXIT_CONFIG, str(exc)) from None
    if args.measure == "purity" and args.format != "cp4im":
        raise CliFailure(EXIT_CONFIG, "purity requires a cp4im dataset")
    try:
        return Task(db, constraints, args.measure, args.oracle, args.tiling)
    except (TaskError, MeasureError) as exc:
        raise CliFailure(EXIT_CONFIG, str(exc)) from None


def _pattern_record(task: Task, pattern, quality, weight) -> dict:
    if task.tiling:
        return {"patterns": [list(p) for p in pattern], "area": quality, "weight": weight}
    return {"items": list(pattern), "quality": quality, "weight": weight}


def _record_pattern(rec: dict):
    if "patterns" in rec:
        return tuple(tuple(p) for p in rec["patterns"])
    return tuple(rec["items"])


def _record_quality(rec: dict) -> float:
    return rec["area"] if "patterns" in rec else rec["quality"]


def _task_summary(task: Task) -> dict:
    return {"constraints": str(task.constraints), "measure": task.measure,
            "oracle": task.oracle, "tiling": task.tiling}


def _verify(task: Task, pattern) -> None:
    problem = check_pattern(task, pattern)
    if problem:
        raise CliFailure(EXIT_MISMATCH, f"sample {pattern_key(pattern)!r} violates constraints: {problem}")


def cmd_sample(args) -> int:
    task = build_task(args)
    spec = task.spec()
    started = time.perf_counter()
    run = sample_patterns(task, args.n, args.kappa, args.seed, until_accepted=True, jobs=args.jobs, spec=spec)
    with _open_output(args.output) as out:
        for s in run.samples:
            _verify(task, s.pattern)
            out.write(_dump(_pattern_record(task, s.pattern, s.quality, s.weight)) + "\n")
        summary = {
            "task": _task_summary(task),
            "kappa": args.kappa,
            "seed": args.seed,
            "accepted": len(run.samples),
            "attempts": run.attempts,
            "failures": run.failures,
            "oracle_calls": run.oracle_calls,
            "estimation": run.estimation.to_dict(),
        }
        if args.timing:
            summary["wall_clock"] = time.perf_counter() - started
        out.write(_dump({"summary": summary}) + "\n")
    log.info("accepted %d of %d attempts", len(run.samples), run.attempts)
    return 0


def cmd_estimate(args) -> int:
    task = build_task(args)
    spec = task.spec()
    started = time.perf_counter()
    oracle = make_oracle(task, spec)
    est = estimate_total_weight(oracle, spec, SamplerParams(args.kappa), estimation_rng(args.seed))
    doc = est.to_dict()
    doc["total_quality_estimate"] = est.total_weight_estimate * spec.scaling_constant
    doc["task"] = _task_summary(task)
    doc["seed"] = args.seed
    if args.timing:
        doc["wall_clock"] = time.perf_counter() - started
    with _open_output(args.output) as out:
        out.write(_dump(doc) + "\n")
    return 0


def cmd_enumerate(args) -> int:
    task = build_task(args)
    spec = task.spec()
    dist = enumerate_all(make_oracle(task, spec))
    order = sorted(range(len(dist)), key=lambda k: pattern_key(dist.support[k]))
    with _open_output(args.output) as out:
        for k in order:
            p = dist.support[k]
            q = float(dist.qualities[k])
            out.write(_dump(_pattern_record(task, p, q, q / spec.scaling_constant)) + "\n")
        out.write(_dump({"summary": {"task": _task_summary(task), "count": len(dist), "z": dist.z}}) + "\n")
    return 0


def _read_records(path: str):
    records, summary = [], None
    try:
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, 1):
                if not line.strip():
                    continue
                rec = json.loads(line)
                if "summary" in rec:
                    summary = rec["summary"]
                elif "items" in rec or "patterns" in rec:
                    records.append(rec)
                else:
                    raise CliFailure(EXIT_CONFIG, f"{path}:{lineno}: unrecognized record")
    except OSError as exc:
        raise CliFailure(EXIT_CONFIG, f"cannot read {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise CliFailure(EXIT_CONFIG, f"{path}: invalid JSON ({exc})") from None
    return records, summary


def _load_target(path: str):
    records, _ = _read_records(path)
    patterns = [_record_pattern(r) for r in records]
    if len(set(patterns)) != len(patterns):
        raise CliFailure(EXIT_CONFIG, f"{path}: duplicate patterns in enumeration")
    return target_from_qualities(patterns, [_record_quality(r) for r in records]), records


def cmd_ideal(args) -> int:
    try:
        dist, records = _load_target(args.enumeration)
    except UnsatisfiableTask:
        raise CliFailure(EXIT_UNSAT, "enumeration is empty") from None
    rng = np.random.default_rng(np.random.SeedSequence(args.seed, spawn_key=(2,)))
    draws = rng.choice(len(dist), size=args.n, p=dist.probabilities) if args.n else []
    with _open_output(args.output) as out:
        for k in draws:
            out.write(_dump(records[int(k)]) + "\n")
        out.write(_dump({"summary": {"ideal": True, "seed": args.seed, "accepted": args.n}}) + "\n")
    return 0


def cmd_evaluate(args) -> int:
    try:
        target, _ = _load_target(args.enumeration)
    except UnsatisfiableTask:
        raise CliFailure(EXIT_UNSAT, "enumeration is empty") from None
    samples, _ = _read_records(args.samples)
    emp = EmpiricalDistribution.from_samples(_record_pattern(r) for r in samples)
    unknown = [p for p in emp.counts if p not in target.index]
    if unknown:
        raise CliFailure(EXIT_MISMATCH, f"{len(unknown)} sampled pattern(s) missing from the enumeration, "
                                        f"e.g. {pattern_key(unknown[0])!r}")
    if not emp.total:
        raise CliFailure(EXIT_CONFIG, "no samples to evaluate")
    js, kl_t, kl_e = js_components(target, emp)
    table = [{"pattern": pattern_key(p), "target": float(pt), "count": emp.counts.get(p, 0),
              "empirical": emp.probability(p)}
             for p, pt in zip(target.support, target.probabilities)]
    doc = {
        "js": js,
        "kl_t_m": kl_t,
        "kl_e_m": kl_e,
        "factor2_fraction": factor_band_profile(target, emp, 2.0),
        "n_samples": emp.total,
        "support_size": len(target),
        "z": target.z,
        "patterns": table,
    }
    with _open_output(args.output) as out:
        out.write(_dump(doc) + "\n")
    return 0


def _task_options(p: argparse.ArgumentParser, sampling: bool = True) -> None:
    p.add_argument("--dataset", required=True, help="transaction file")
    p.add_argument("--format", choices=("fimi", "cp4im"), default="fimi")
    p.add_argument("--oracle", choices=ORACLES, default="cp",
                   help="table enumerates once, then filters (default: cp)")
    p.add_argument("--constraints", required=True, help="e.g. minfreq=0.09,closed,minlen=7")
    p.add_argument("--tiling", action="store_true", help="sample non-overlapping 2-tilings")
    p.add_argument("--measure", choices=MEASURES, default="uniform")
    if sampling:
        p.add_argument("--kappa", type=float, default=0.9, help="accuracy/speed trade-off in (0, 1)")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--timing", action="store_true", help="include wall-clock seconds in the output")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="flexics", description="Weighted constrained pattern sampling.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sample", help="draw accepted samples")
    _task_options(p)
    p.add_argument("--n", type=int, default=100, help="number of accepted samples")
    p.add_argument("--jobs", type=int, default=1, help="worker processes; output does not depend on it")
    p.add_argument("--output", help="write here instead of stdout")
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("estimate", help="estimate the total weight")
    _task_options(p)
    p.add_argument("--output", help="write here instead of stdout")
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("enumerate", help="list every solution with its quality")
    _task_options(p, sampling=False)
    p.add_argument("--output", help="write here instead of stdout")
    p.set_defaults(func=cmd_enumerate)

    p = sub.add_parser("ideal", help="exact sampler over an enumeration file")
    p.add_argument("--enumeration", required=True, help="output of the enumerate command")
    p.add_argument("--n", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output", help="write here instead of stdout")
    p.set_defaults(func=cmd_ideal)

    p = sub.add_parser("evaluate", help="compare samples with an enumeration")
    p.add_argument("--samples", required=True)
    p.add_argument("--enumeration", required=True)
    p.add_argument("--output", help="write here instead of stdout")
    p.set_defaults(func=cmd_evaluate)
    return parser


def main(argv=None) -> int:
    level = os.environ.get("FLEXICS_LOG", "WARNING").upper()
    logging.basicConfig(level=level if isinstance(logging.getLevelName(level), int) else "WARNING",
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    args = build_parser().parse_args(argv)
    if getattr(args, "n", 0) < 0:
        print("flexics: --n must be non-negative", file=sys.stderr)
        return EXIT_CONFIG
    if getattr(args, "jobs", 1) < 1:
        print("flexics: --jobs must be positive", file=sys.stderr)
        return EXIT_CONFIG
    try:
        if hasattr(args, "kappa"):
            SamplerParams(args.kappa)
        return args.func(args)
    except CliFailure as exc:
        print(f"flexics: {exc}", file=sys.stderr)
        return exc.code
    except UnsatisfiableTask as exc:
        print(f"flexics: unsatisfiable task: {exc}", file=sys.stderr)
        return EXIT_UNSAT
    except ValueError as exc:
        print(f"flexics: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
