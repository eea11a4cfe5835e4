"""Weighted sampling of constrained patterns by random XOR partitioning.

Two phases.  Estimation shrinks cells with random parity constraints until
their weight drops under ``pivot_est`` and turns the surviving weight into
an estimate of the total weight; the median over iterations fixes the
starting number of constraints.  Sampling then looks for a cell whose weight
lies within ``[lo_thresh, hi_thresh]`` and draws from it exactly.

All cell thresholds are expressed relative to ``w_max_hat``, the running
upper bound on solution weights (smallest weight seen times the tilt bound).
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from typing import List, Optional

import numpy as np

from .cell import Cell
from .gf2 import draw_random_xor, draw_random_xors
from .measures import MeasureSpec, evaluate_quality

__all__ = [
    "UnsatisfiableTask",
    "SamplerParams",
    "EstimationResult",
    "SampleResult",
    "SampleRun",
    "WeightTracker",
    "epsilon_of_kappa",
    "thresholds",
    "estimate_total_weight",
    "initial_num_xors",
    "generate_one_sample",
    "sample_exactly",
    "sample_patterns",
    "estimation_rng",
    "sample_rng",
]

log = logging.getLogger(__name__)

PIVOT_EST = 46
EST_ITERATIONS = 17
LEAPFROG_AFTER = 3
# thresholds(0.9) == (6.7, 49.4)
LO_CONST = 6.7 * 0.9 ** 2 / 1.9
HI_CONST = 49.4 * 0.9 ** 2 / 1.9 ** 3


class UnsatisfiableTask(RuntimeError):
    pass


def _check_kappa(kappa: float) -> None:
    if not 0.0 < kappa < 1.0:
        raise ValueError(f"kappa must lie in (0, 1), got {kappa}")


def epsilon_of_kappa(kappa: float) -> float:
    """Sampling error bound: ``(1+k)(2.36 + 0.51/(1-k)^2) - 1``."""
    _check_kappa(kappa)
    return (1.0 + kappa) * (2.36 + 0.51 / (1.0 - kappa) ** 2) - 1.0


def thresholds(kappa: float):
    """``(lo_thresh, hi_thresh)`` for the sampling phase cell weight."""
    _check_kappa(kappa)
    lo = LO_CONST * (1.0 + kappa) / kappa ** 2
    hi = HI_CONST * (1.0 + kappa) ** 3 / kappa ** 2
    return lo, hi


@dataclass(frozen=True)
class SamplerParams:
    kappa: float = 0.9
    pivot_est: float = PIVOT_EST
    est_iterations: int = EST_ITERATIONS
    max_extra_xors: int = 3
    max_restarts: int = 10
    early_stop: bool = True

    def __post_init__(self):
        _check_kappa(self.kappa)

    @cached_property
    def lo_thresh(self) -> float:
        return thresholds(self.kappa)[0]

    @cached_property
    def hi_thresh(self) -> float:
        return thresholds(self.kappa)[1]

    @cached_property
    def pivot_samp(self) -> float:
        return math.sqrt(self.lo_thresh * self.hi_thresh)

    @property
    def epsilon_kappa(self) -> float:
        return epsilon_of_kappa(self.kappa)


class WeightTracker:
    """Smallest weight observed so far and the derived ``w_max_hat``."""

    __slots__ = ("tilt_bound", "w_min")

    def __init__(self, tilt_bound: float, w_min: float = 1.0):
        self.tilt_bound = tilt_bound
        self.w_min = w_min

    @property
    def w_max(self) -> float:
        return min(1.0, self.w_min * self.tilt_bound)

    def observe(self, cell: Cell) -> None:
        if len(cell):
            self.w_min = min(self.w_min, cell.min_weight)

    def copy(self) -> "WeightTracker":
        return WeightTracker(self.tilt_bound, self.w_min)


@dataclass
class EstimationResult:
    total_weight_estimate: float
    n_xor_initial: int
    w_min_observed: float
    w_max_hat: float
    trace: List[dict] = field(default_factory=list)
    oracle_calls: int = 0

    def to_dict(self) -> dict:
        return {
            "total_weight_estimate": self.total_weight_estimate,
            "n_xor_initial": self.n_xor_initial,
            "w_min_observed": self.w_min_observed,
            "w_max_hat": self.w_max_hat,
            "iterations": self.trace,
            "oracle_calls": self.oracle_calls,
        }


@dataclass
class SampleResult:
    pattern: object = None
    weight: Optional[float] = None
    cell_size: Optional[int] = None
    cell_weight: Optional[float] = None
    n_xors: Optional[int] = None
    quality: Optional[float] = None
    oracle_calls: int = 0

    @property
    def failed(self) -> bool:
        return self.pattern is None


def estimation_rng(seed) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(0,)))


@lru_cache(maxsize=64)
def _sample_key(seed) -> tuple:
    return tuple(int(k) for k in np.random.SeedSequence(seed, spawn_key=(1,)).generate_state(2, np.uint64))


def sample_rng(seed, index: int) -> np.random.Generator:
    """Stream for sampling attempt ``index``: one Philox key per seed, one counter block per attempt."""
    if index < 0:
        raise ValueError("attempt index must be non-negative")
    return np.random.Generator(np.random.Philox(counter=[0, 0, 0, index], key=np.array(_sample_key(seed), dtype=np.uint64)))


def initial_num_xors(total_weight_estimate: float, params: SamplerParams, w_max: float = 1.0) -> int:
    """Constraint count putting the expected cell weight at the threshold midpoint."""
    if total_weight_estimate <= 0:
        raise ValueError("total weight estimate must be positive")
    return max(0, round(math.log2(total_weight_estimate / (w_max * params.pivot_samp))))


def _estimate_once(oracle, params, rng, tracker, start, max_restarts=1000):
    calls = restarts = 0
    n = oracle.num_vars
    while restarts <= max_restarts:
        xors = draw_random_xors(n, start, rng)
        while True:
            cap = params.pivot_est * tracker.w_max
            cell = oracle.solve_bounded(xors, cap)
            calls += 1
            tracker.observe(cell)
            if not len(cell):
                break
            if not cell.truncated and cell.total_weight <= params.pivot_est * tracker.w_max:
                est = cell.total_weight * 2.0 ** len(xors)
                return est, len(xors), cell.total_weight, restarts, calls
            xors.append(draw_random_xor(n, rng))
        if not xors:
            raise UnsatisfiableTask("the constrained task has no solutions")
        restarts += 1
    raise RuntimeError("estimation kept hitting empty cells")


def _median_converged(estimates, params, w_max) -> bool:
    """Whether the remaining iterations can no longer change the XOR count.

    The final median is the middle order statistic of all iterations; with
    ``r`` iterations left it is bracketed by two order statistics of the
    current estimates.
    """
    total = params.est_iterations
    mid = (total - 1) // 2
    remaining = total - len(estimates)
    low = mid - remaining
    if low < 0:
        return False
    ordered = sorted(estimates)
    return initial_num_xors(ordered[low], params, w_max) == initial_num_xors(ordered[mid], params, w_max)


def estimate_total_weight(oracle, spec: MeasureSpec, params: SamplerParams, rng: np.random.Generator,
                          tracker: Optional[WeightTracker] = None) -> EstimationResult:
    """Median-of-iterations estimate of the total solution weight."""
    tracker = tracker or WeightTracker(spec.tilt_bound)
    estimates, trace = [], []
    calls = 0
    smallest = None
    for it in range(params.est_iterations):
        start = smallest if (it >= LEAPFROG_AFTER and smallest is not None) else 0
        est, used, cell_weight, restarts, c = _estimate_once(oracle, params, rng, tracker, start)
        calls += c
        estimates.append(est)
        smallest = used if smallest is None else min(smallest, used)
        trace.append({"iteration": it, "start_xors": start, "n_xors": used, "cell_weight": cell_weight,
                      "estimate": est, "restarts": restarts})
        if params.early_stop and _median_converged(estimates, params, tracker.w_max):
            break
    total = float(np.median(estimates))
    w_max = tracker.w_max
    n_xor = initial_num_xors(total, params, w_max)
    log.debug("estimation: %d iterations, total weight %.4g, N_XOR %d", len(estimates), total, n_xor)
    return EstimationResult(total, n_xor, tracker.w_min, w_max, trace, calls)


def sample_exactly(cell: Cell, rng: np.random.Generator):
    """Draw one solution of ``cell`` with probability proportional to its weight."""
    if cell.truncated:
        raise ValueError("cannot sample from a truncated cell")
    if not len(cell) or cell.total_weight <= 0:
        raise ValueError("cell has no weight to sample from")
    return cell.pattern_at(_draw_index(cell, rng))


def _draw_index(cell, rng) -> int:
    return cell.locate(rng.random())


def generate_one_sample(oracle, spec: MeasureSpec, est: EstimationResult, params: SamplerParams,
                        rng: np.random.Generator, tracker: Optional[WeightTracker] = None) -> SampleResult:
    """One sampling attempt; a failed attempt returns a result without pattern.

    Starts one constraint above the estimate (leapfrogging).  A cell that is
    too heavy gets another constraint (at most ``max_extra_xors`` in total
    counting the leapfrog one); a cell that is too light at the start loses
    the leapfrog constraint once.  Empty cells restart with fresh constraints.
    """
    tracker = tracker or WeightTracker(spec.tilt_bound, est.w_min_observed)
    n = oracle.num_vars
    calls = 0
    for _ in range(params.max_restarts + 1):
        xors = draw_random_xors(n, est.n_xor_initial + 1, rng)
        added = 1
        removed = False
        while True:
            cap = params.hi_thresh * tracker.w_max
            cell = oracle.solve_bounded(xors, cap)
            calls += 1
            tracker.observe(cell)
            if not len(cell) and xors:
                break  # restart
            lo = params.lo_thresh * tracker.w_max
            hi = params.hi_thresh * tracker.w_max
            weight = cell.total_weight
            if not cell.truncated and lo <= weight <= hi:
                k = _draw_index(cell, rng)
                pattern, w = cell.pattern_at(k), cell.weight_at(k)
                return SampleResult(pattern, w, len(cell), weight, len(xors), oracle_calls=calls)
            if removed:
                return SampleResult(oracle_calls=calls)
            if cell.truncated or weight > hi:
                if added >= params.max_extra_xors:
                    return SampleResult(oracle_calls=calls)
                xors.append(draw_random_xor(n, rng))
                added += 1
                continue
            if added == 1 and xors:
                xors.pop()
                removed = True
                continue
            return SampleResult(oracle_calls=calls)
    return SampleResult(oracle_calls=calls)


@dataclass
class SampleRun:
    kappa: float
    seed: int
    samples: List[SampleResult]
    failures: int
    attempts: int
    estimation: EstimationResult
    oracle_calls: int = 0
    wall_clock: float = 0.0

    @property
    def patterns(self) -> list:
        return [s.pattern for s in self.samples]

    @property
    def failure_rate(self) -> float:
        return self.failures / self.attempts if self.attempts else 0.0


def _attempt_range(oracle, spec, est, params, seed, first, count):
    out = []
    for index in range(first, first + count):
        out.append(generate_one_sample(oracle, spec, est, params, sample_rng(seed, index)))
    return out


def _worker(args):
    from .tasks import make_oracle

    task, spec, est, params, seed, first, count = args
    return _attempt_range(make_oracle(task, spec), spec, est, params, seed, first, count)


def sample_patterns(task, n: int, kappa: float = 0.9, seed: int = 0, *, until_accepted: bool = False,
                    jobs: int = 1, oracle=None, spec: Optional[MeasureSpec] = None,
                    params: Optional[SamplerParams] = None, max_attempts: Optional[int] = None) -> SampleRun:
    """Estimate once, then run ``n`` sampling attempts (or until ``n`` accepted samples).

    Attempt ``i`` draws from its own random stream, so results do not depend
    on ``jobs``.
    """
    started = time.perf_counter()
    params = params or SamplerParams(kappa)
    if spec is None:
        spec = task.spec()
    if oracle is None:
        from .tasks import make_oracle

        oracle = make_oracle(task, spec)
    est = estimate_total_weight(oracle, spec, params, estimation_rng(seed))
    results: List[SampleResult] = []
    accepted = []
    attempts = 0
    limit = max_attempts if max_attempts is not None else (20 * n + 100 if until_accepted else n)
    while True:
        need = n - (len(accepted) if until_accepted else attempts)
        if need <= 0 or attempts >= limit:
            break
        batch = min(need, limit - attempts)
        if jobs > 1 and task is not None and batch > 1:
            from concurrent.futures import ProcessPoolExecutor

            chunk = -(-batch // jobs)
            jobs_args = [(task, spec, est, params, seed, attempts + s, min(chunk, batch - s))
                         for s in range(0, batch, chunk)]
            with ProcessPoolExecutor(max_workers=jobs) as pool:
                chunk_results = [r for part in pool.map(_worker, jobs_args) for r in part]
        else:
            chunk_results = _attempt_range(oracle, spec, est, params, seed, attempts, batch)
        attempts += batch
        for r in chunk_results:
            results.append(r)
            if not r.failed:
                accepted.append(r)
        if until_accepted:
            accepted = accepted[:n] if len(accepted) > n else accepted
    db = getattr(oracle, "db", None) if task is None else task.db
    for r in accepted:
        r.quality = evaluate_quality(spec, r.pattern, db) if db is not None else r.weight * spec.scaling_constant
    calls = est.oracle_calls + sum(r.oracle_calls for r in results)
    failures = sum(1 for r in results if r.failed)
    return SampleRun(kappa, seed, accepted, failures, attempts, est, calls, time.perf_counter() - started)
