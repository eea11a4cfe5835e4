"""Acceptance suite: twelve numbered criteria, one PASS/FAIL line each.

Under pytest the lines are collected and printed in the terminal summary.
The module also runs standalone::

    python3 tests/test_acceptance.py

Criteria 7 to 9 draw roughly four million accepted samples per kappa and
dominate the runtime (about 20 minutes on one core).  Criterion 12 needs the
CP4IM vote dataset; point FLEXICS_VOTE at it, otherwise it is skipped.
"""

import io
import math
import os
import sys
from collections import Counter
from functools import lru_cache

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(__file__))

from brute import brute_itemsets, brute_tilings, check_gf2_against_brute, random_db_array  # noqa: E402
from flexics import cli  # noqa: E402
from flexics.constraints import ConstraintSet  # noqa: E402
from flexics.data import TransactionDatabase, generate_synthetic_db, parse_cp4im  # noqa: E402
from flexics.evaluation import (EmpiricalDistribution, band_fraction, enumerate_all,  # noqa: E402
                                factor_band_profile, ideal_sample, js_divergence)
from flexics.gf2 import XorConstraint, assign_and_propagate, build_system, draw_random_xors  # noqa: E402
from flexics.measures import measure_spec  # noqa: E402
from flexics.oracle_cp import CpOracle, build_itemset_csp, build_tiling_csp, cp_solve_bounded  # noqa: E402
from flexics.oracle_eclat import EclatOracle  # noqa: E402
from flexics.tasks import Task, check_pattern, make_oracle  # noqa: E402
from flexics.weightgen import (SamplerParams, epsilon_of_kappa, estimate_total_weight,  # noqa: E402
                               estimation_rng, sample_patterns, thresholds)

REPORT = []

CONSTRAINT_SETS = {
    "F": dict(closed=False, minlen=None),
    "FC": dict(closed=True, minlen=None),
    "FL": dict(closed=False, minlen=2),
    "FCL": dict(closed=True, minlen=2),
}


def record(number, ok, detail):
    line = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
    REPORT.append(line)
    print(line, flush=True)
    return ok


def skip_line(number, reason):
    line = f"criterion {number:>2}: SKIP  {reason}"
    REPORT.append(line)
    print(line, flush=True)


# -- 1, 2: closed-form constants and the worked GF(2) example ---------------

def test_c01_epsilon_and_thresholds():
    eps = epsilon_of_kappa(0.9)
    lo, hi = thresholds(0.9)
    ok = abs(eps - 100.38) <= 0.01 and abs(lo / 6.7 - 1) <= 0.01 and abs(hi / 49.4 - 1) <= 0.01
    assert record(1, ok, f"eps(0.9)={eps:.4f} thresholds=({lo:.3f}, {hi:.3f})")


def test_c02_worked_xor_system():
    xors = [XorConstraint.from_vars(5, [0, 4], 1), XorConstraint.from_vars(5, [1, 2, 3, 4], 0),
            XorConstraint.from_vars(5, [0, 1, 2, 4], 0), XorConstraint.from_vars(5, [1, 3, 4], 1)]
    system = build_system(5, xors)
    derived = system.assignments()
    outcome = assign_and_propagate(system, [(0, 1), (4, 1)])
    ok = derived == [(1, 0), (2, 1)] and outcome.conflict and system.conflict
    shown = ", ".join(f"x{v + 1}={b}" for v, b in derived)
    assert record(2, ok, f"derived {{{shown}}}; x1=1, x5=1 -> {system.status}")


# -- 3: propagation against brute force ---------------------------------------

def test_c03_gf2_soundness():
    bad = []
    for seed in range(500):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(1, 9))
        xors = draw_random_xors(n, int(rng.integers(0, 5)), rng)
        order = rng.permutation(n).tolist()
        steps = []
        while order:
            take = int(rng.integers(1, 4))
            steps.append([(v, int(rng.integers(0, 2))) for v in order[:take]])
            order = order[take:]
        try:
            check_gf2_against_brute(build_system(n, xors), n, xors, steps)
        except AssertionError:
            bad.append(seed)
    assert record(3, not bad, f"500 systems (<= 8 vars, <= 4 XORs), discrepancies: {bad or 0}")


# -- 4, 5: oracle exactness and cross-oracle agreement ------------------------

@lru_cache(maxsize=None)
def oracle_sweep():
    """200 random databases; returns (mismatches, eclat/cp cell disagreements, checks)."""
    mismatches, disagreements, checks = [], [], 0
    for seed in range(200):
        rng = np.random.default_rng(10_000 + seed)
        m, n = int(rng.integers(2, 13)), int(rng.integers(4, 41))
        db = TransactionDatabase.from_array(random_db_array(rng, m, n, rng.uniform(0.25, 0.75)))
        theta = int(rng.integers(1, max(2, n // 3) + 1))
        xors = draw_random_xors(m, int(rng.integers(0, 5)), rng)
        cells = {}
        for name, opts in CONSTRAINT_SETS.items():
            cons = ConstraintSet.from_count(theta, n, **opts)
            spec = measure_spec("freq", db, cons)
            cells[name] = CpOracle(build_itemset_csp(db, cons), spec).solve_bounded(xors)
            checks += 1
            if set(cells[name].patterns) != brute_itemsets(db, theta, xors, **opts):
                mismatches.append((seed, "cp", name))
        spec = measure_spec("freq", db, ConstraintSet.from_count(theta, n))
        eclat = EclatOracle(db, theta, spec).solve_bounded(xors)
        checks += 1
        if set(eclat.patterns) != brute_itemsets(db, theta, xors):
            mismatches.append((seed, "eclat", "F"))
        same = (dict(eclat.solutions) == dict(cells["F"].solutions) and len(eclat) == len(cells["F"])
                and math.isclose(eclat.total_weight, cells["F"].total_weight, rel_tol=1e-12))
        if not same:
            disagreements.append(seed)
    return mismatches, disagreements, checks


def test_c04_oracle_exactness():
    mismatches, _, checks = oracle_sweep()
    assert record(4, not mismatches,
                  f"{checks} oracle runs on 200 databases (cp F/FC/FL/FCL, eclat F), "
                  f"discrepancies: {mismatches or 0}")


def test_c05_cross_oracle_agreement():
    _, disagreements, _ = oracle_sweep()
    assert record(5, not disagreements,
                  f"200 minfreq-only cells, eclat vs cp (solutions and freq weights), "
                  f"differing: {disagreements or 0}")


# -- 6: estimation accuracy -----------------------------------------------------

# (items, transactions, density, seed, minfreq, measure); 588 to 28954 solutions
ESTIMATION_INSTANCES = [
    (14, 60, 0.6, 0, 0.15, "uniform"), (14, 60, 0.6, 1, 0.15, "uniform"),
    (16, 60, 0.6, 0, 0.15, "freq"), (14, 60, 0.6, 0, 0.10, "uniform"),
    (18, 60, 0.6, 0, 0.15, "uniform"), (14, 60, 0.6, 2, 0.10, "freq"),
    (16, 60, 0.6, 0, 0.10, "uniform"), (20, 80, 0.55, 0, 0.10, "uniform"),
    (16, 60, 0.6, 2, 0.10, "freq"), (20, 80, 0.55, 1, 0.10, "uniform"),
    (18, 60, 0.6, 0, 0.10, "uniform"), (16, 50, 0.7, 0, 0.15, "freq"),
    (18, 60, 0.6, 1, 0.10, "uniform"), (20, 60, 0.6, 0, 0.10, "uniform"),
    (18, 50, 0.7, 0, 0.15, "freq"), (20, 60, 0.6, 0, 0.07, "uniform"),
    (16, 50, 0.7, 0, 0.10, "uniform"), (20, 50, 0.65, 0, 0.10, "freq"),
    (18, 60, 0.6, 0, 0.05, "uniform"), (18, 50, 0.7, 0, 0.10, "uniform"),
]


def test_c06_estimation_accuracy():
    errors, worst = [], (1.0, None)
    sizes = []
    for m, n, density, seed, theta, measure in ESTIMATION_INSTANCES:
        task = Task(generate_synthetic_db(m, n, density, seed=seed), ConstraintSet(theta), measure, "table")
        oracle = make_oracle(task)
        spec = task.spec()
        sizes.append(len(oracle))
        z = math.fsum(oracle.weights)
        factors = []
        for s in range(25):
            est = estimate_total_weight(oracle, spec, SamplerParams(), estimation_rng(s)).total_weight_estimate
            factors.append(max(est / z, z / est))
        errors.extend(factors)
        inside = float(np.mean(np.array(factors) <= 1.8))
        if inside < worst[0] or worst[1] is None:
            worst = (inside, (m, n, density, seed, theta, measure))
    ok = worst[0] >= 0.8 and 500 <= min(sizes) and max(sizes) <= 50_000
    errors = np.array(errors)
    assert record(6, ok,
                  f"20 instances ({min(sizes)}-{max(sizes)} solutions) x 25 seeds; worst in-band rate "
                  f"{worst[0]:.2f}; empirical factor median {np.median(errors):.3f}, "
                  f"p80 {np.quantile(errors, 0.8):.3f}, max {errors.max():.3f}")


# -- 7, 8, 9: sampling accuracy on the benchmark instance ---------------------

BENCH = dict(num_items=12, num_transactions=60, density=0.8, seed=0, labeled=True)
BENCH_SETS = {"F": ConstraintSet(0.35), "FCL": ConstraintSet(0.35, closed=True, minlen=3)}
KAPPAS = (0.1, 0.9)
SAMPLE_SEED = 7
N_JS = 10 ** 5
N_BAND = 10 ** 6


@lru_cache(maxsize=None)
def sampling_grid():
    """Counts of accepted samples per (measure, constraint set, kappa).

    uniform/freq runs go to 10^6 samples; their first 10^5 accepted samples
    are exactly what a 10^5 run with the same seed would produce, so they
    double as the JS runs.
    """
    db = generate_synthetic_db(**BENCH)
    grid = {}
    for measure in ("uniform", "freq", "purity"):
        for name, cons in BENCH_SETS.items():
            task = Task(db, cons, measure, "table")
            oracle = make_oracle(task)
            target = enumerate_all(oracle)
            ideal = ideal_sample(target, np.random.default_rng(SAMPLE_SEED), N_JS)
            for kappa in KAPPAS:
                n = N_JS if measure == "purity" else N_BAND
                run = sample_patterns(task, n, kappa, seed=SAMPLE_SEED, oracle=oracle, until_accepted=True)
                patterns = run.patterns
                grid[measure, name, kappa] = dict(
                    target=target,
                    js=js_divergence(target, EmpiricalDistribution(Counter(patterns[:N_JS]), N_JS)),
                    ideal_js=js_divergence(target, ideal),
                    full=EmpiricalDistribution(Counter(patterns), len(patterns)),
                    accepted=len(patterns),
                    failure_rate=run.failure_rate,
                )
                print(f"  {measure:>7} {name:<3} kappa={kappa}: {len(target)} solutions, "
                      f"JS={grid[measure, name, kappa]['js']:.5f} "
                      f"ideal={grid[measure, name, kappa]['ideal_js']:.5f} "
                      f"failures={run.failure_rate:.3f}", flush=True)
    return grid


@pytest.mark.slow
def test_c07_sampling_accuracy():
    grid = sampling_grid()
    ratios = {k: v["js"] / v["ideal_js"] for k, v in grid.items()}
    sizes = {len(v["target"]) for v in grid.values()}
    spreads = {}
    for measure in ("uniform", "freq", "purity"):
        for name in BENCH_SETS:
            js = [grid[measure, name, k]["js"] for k in KAPPAS]
            spreads[measure, name] = max(js) / min(js) - 1
    worst_ratio = max(ratios, key=ratios.get)
    worst_spread = max(spreads, key=spreads.get)
    ok_ratio = all(r <= 1.5 for r in ratios.values())
    ok_kappa = all(s <= 0.10 for s in spreads.values())
    ok_size = all(500 <= s <= 5000 for s in sizes)
    assert record(7, ok_ratio and ok_kappa and ok_size,
                  f"12 runs at 1e5 ({min(sizes)}-{max(sizes)} solutions); max JS/ideal "
                  f"{ratios[worst_ratio]:.3f} at {worst_ratio}; max kappa spread "
                  f"{100 * spreads[worst_spread]:.1f}% at {worst_spread}")


@pytest.mark.slow
def test_c08_factor_two_band():
    grid = sampling_grid()
    fractions = {k: factor_band_profile(v["target"], v["full"], 2.0)
                 for k, v in grid.items() if k[0] != "purity"}
    sizes_ok = all(len(grid[k]["target"]) <= 1000 and grid[k]["accepted"] >= N_BAND for k in fractions)
    worst = min(fractions, key=fractions.get)
    assert record(8, sizes_ok and fractions[worst] >= 0.9,
                  f"8 runs at 1e6; lowest in-band fraction {fractions[worst]:.4f} at {worst}")


@pytest.mark.slow
def test_c09_hard_band():
    grid = sampling_grid()
    fractions = {}
    for k, v in grid.items():
        if k[0] == "purity":
            continue
        bound = 1 + epsilon_of_kappa(k[2])
        fractions[k] = band_fraction(v["target"].as_dict(), v["full"].as_dict(), 1 / bound, bound)
    worst = min(fractions, key=fractions.get)
    assert record(9, fractions[worst] == 1.0,
                  f"8 runs at 1e6; lowest fraction inside [1/(1+eps), 1+eps] {fractions[worst]:.4f} at {worst}")


# -- 10: tilings ---------------------------------------------------------------

def tiling_oracle_mismatches(count=100):
    bad = []
    for seed in range(count):
        rng = np.random.default_rng(20_000 + seed)
        m, n = int(rng.integers(2, 7)), int(rng.integers(2, 9))
        db = TransactionDatabase.from_array(random_db_array(rng, m, n, rng.uniform(0.3, 0.7)))
        theta, lam = int(rng.integers(1, 3)), int(rng.integers(1, 3))
        lam = min(lam, m)
        xors = draw_random_xors(2 * m, int(rng.integers(0, 5)), rng)
        cell = cp_solve_bounded(build_tiling_csp(db, theta, lam), xors)
        if set(cell.patterns) != brute_tilings(db, theta, lam, xors) or len(cell) != len(set(cell.patterns)):
            bad.append(seed)
    return bad


@pytest.mark.slow
def test_c10_tilings():
    bad = tiling_oracle_mismatches()
    db = generate_synthetic_db(10, 20, 0.5, seed=1)
    task = Task(db, ConstraintSet(0.1, closed=True, minlen=2), "area", "table", tiling=True)
    oracle = make_oracle(task)
    target = enumerate_all(oracle)
    n = 10 ** 4
    run = sample_patterns(task, n, 0.9, seed=SAMPLE_SEED, oracle=oracle, until_accepted=True)
    violations = [p for p in run.patterns if check_pattern(task, p) is not None]
    js = js_divergence(target, EmpiricalDistribution.from_samples(run.patterns))
    ideal = js_divergence(target, ideal_sample(target, np.random.default_rng(SAMPLE_SEED), n))
    ok = not bad and not violations and len(run.patterns) == n and js <= 1.5 * ideal
    assert record(10, ok,
                  f"100 tiny dbs vs brute force, mismatches: {bad or 0}; {len(run.patterns)} sampled "
                  f"2-tilings ({len(target)} solutions), violations: {len(violations)}; "
                  f"JS {js:.5f} vs ideal {ideal:.5f} (ratio {js / ideal:.3f})")


# -- 11: determinism -----------------------------------------------------------

def _run_cli(argv):
    out = io.StringIO()
    saved = sys.stdout
    sys.stdout = out
    try:
        code = cli.main(argv)
    finally:
        sys.stdout = saved
    return code, out.getvalue().encode()


def test_c11_determinism(tmp_path):
    db = generate_synthetic_db(**BENCH)
    data = tmp_path / "bench.dat"
    data.write_text("".join(" ".join(map(str, t)) + f" {y}\n" for t, y in zip(db.transactions(), db.labels)))
    common = ["--dataset", str(data), "--format", "cp4im", "--constraints", "minfreq=0.35,closed,minlen=3",
              "--measure", "purity"]
    enum = tmp_path / "enum.jsonl"
    samples = tmp_path / "samples.jsonl"
    assert cli.main(["enumerate", *common, "--oracle", "table", "--output", str(enum)]) == 0
    assert cli.main(["sample", *common, "--oracle", "table", "--n", "300", "--seed", "4",
                     "--output", str(samples)]) == 0
    commands = {
        "sample/cp": ["sample", *common, "--oracle", "cp", "--n", "60", "--seed", "4"],
        "sample/table": ["sample", *common, "--oracle", "table", "--n", "300", "--seed", "4"],
        "sample/jobs=2": ["sample", *common, "--oracle", "table", "--n", "300", "--seed", "4", "--jobs", "2"],
        "estimate": ["estimate", *common, "--oracle", "table", "--seed", "9"],
        "enumerate": ["enumerate", *common],
        "ideal": ["ideal", "--enumeration", str(enum), "--n", "500", "--seed", "2"],
        "evaluate": ["evaluate", "--samples", str(samples), "--enumeration", str(enum)],
    }
    differing = []
    outputs = {}
    for name, argv in commands.items():
        first, second = _run_cli(argv), _run_cli(argv)
        outputs[name] = first[1]
        if first[0] != 0 or first != second:
            differing.append(name)
    if outputs["sample/table"] != outputs["sample/jobs=2"] or outputs["sample/table"] != samples.read_bytes():
        differing.append("sample across jobs/output targets")
    assert record(11, not differing,
                  f"{len(commands)} commands run twice, byte-identical; differing: {differing or 'none'}")


# -- 12: vote dataset (optional) -----------------------------------------------

def test_c12_vote_dataset():
    path = os.environ.get("FLEXICS_VOTE")
    if not path or not os.path.exists(path):
        skip_line(12, "vote dataset not available (set FLEXICS_VOTE); non-gating")
        pytest.skip("vote dataset not available")
    with open(path) as fh:
        db = parse_cp4im(fh)
    f_task = Task(db, ConstraintSet(0.09), "uniform", "table")
    fcl_task = Task(db, ConstraintSet(0.09, closed=True, minlen=7), "uniform", "table")
    details, ok = [], True
    for name, task, expected_js in (("F", f_task, 0.013), ("FCL", fcl_task, 0.004)):
        oracle = make_oracle(task)
        target = enumerate_all(oracle)
        run = sample_patterns(task, 9 * 10 ** 5, 0.9, seed=SAMPLE_SEED, oracle=oracle, until_accepted=True)
        js = js_divergence(target, EmpiricalDistribution.from_samples(run.patterns))
        count_ok = abs(len(target) / 60_000 - 1) <= 0.1 if name == "F" else len(target) >= 15_000
        ok = ok and count_ok and abs(js - expected_js) <= 0.005
        details.append(f"{name}: {len(target)} solutions, JS {js:.4f}")
    record(12, ok, "; ".join(details) + " (non-gating)")


if __name__ == "__main__":
    import tempfile
    from pathlib import Path

    failed = 0
    for name, fn in sorted((k, v) for k, v in globals().items() if k.startswith("test_c")):
        try:
            if name == "test_c11_determinism":
                with tempfile.TemporaryDirectory() as tmp:
                    fn(Path(tmp))
            else:
                fn()
        except AssertionError:
            failed += 1
        except pytest.skip.Exception:
            pass
    sys.exit(1 if failed else 0)
