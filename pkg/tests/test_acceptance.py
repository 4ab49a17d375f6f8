"""Acceptance checks.  Each check prints one PASS/FAIL line with its measured numbers.

Run directly (``python3 tests/test_acceptance.py``) or through pytest; the
lines also appear in pytest output because capture is disabled for them.
"""

from __future__ import annotations

import contextlib
import io
import sys
from dataclasses import dataclass

import numpy as np
import pytest

from medsketch import bounds, cli, oracle
from medsketch.datasets import parse_dataset
from medsketch.experiments import ExperimentConfig, csv_text, loglog_slope, run_freq_experiment, run_inner_experiment
from medsketch.hashing import MERSENNE_61
from medsketch.median import random_discrete_dist, tightness_dist
from medsketch.simulate import MomentAccumulator, QueryPlan, SimulationSetup, inner_error_batches, point_error_batches
from medsketch.sketch import SketchParams, SparseVector, deserialize, from_vector, serialize

# pinned protocol and tolerances
MC_TRIALS = 10**6
ONE_NONZERO_TRIALS = 10**7
REL_TOL_EXACT_LAW = 0.05
SLOPE_T2 = (-2.2, -1.8)
ZIPF_REL_TOL = 0.30
ZIPF_TARGETS = {1.2: (6.94e-5, 3.99e-7, 100.0), 0.8: (9.56e-6, 2.09e-7, 25.0)}
ORACLE_INSTANCES = 600
ORACLE_SEED = 20240601
DIST_COUNT = 1000
DIST_SEED = 7
TIGHTNESS_MIN = 0.2
AGREEMENT_SE = 5.0
AGREEMENT_ABS = 1e-9
S_4_512 = [1 << b for b in range(2, 10)]


def report(name: str, ok: bool, detail: str) -> bool:
    print(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}", flush=True)
    return ok


def _quiet_cli(argv) -> int:
    with contextlib.redirect_stdout(io.StringIO()):
        return cli.main(argv)


def _freq(dataset, t_values, s_grid, trials, order=2, query_mode="off"):
    cfg = ExperimentConfig(dataset=parse_dataset(dataset), t_values=t_values, s_grid=s_grid, trials=trials,
                           queries_per_trial=1, order=order, query_mode=query_mode)
    return run_freq_experiment(cfg)


def _inner(dataset, t_values, s_grid, trials):
    cfg = ExperimentConfig(dataset=parse_dataset(dataset), t_values=t_values, s_grid=s_grid, trials=trials,
                           queries_per_trial=1)
    return run_inner_experiment(cfg)


def check_one_hot_single_row_law(tmp_dir) -> bool:
    out = tmp_dir / "c1.csv"
    _quiet_cli(["freq", "--dataset", "onehot:2:0", "--t", "1", "--order", "2", "--query-mode", "off",
              "--s-grid", "4,16,64,256", "--trials", str(MC_TRIALS), "--queries", "1", "--out", str(out)])
    rows = [line.split(",") for line in out.read_text().splitlines()[1:]]
    scaled = {int(r[2]): float(r[6]) for r in rows}
    ok = len(scaled) == 4 and all(abs(x - 1) <= REL_TOL_EXACT_LAW for x in scaled.values())
    return report("one-hot t=1 MSE*s", ok, " ".join(f"s={s}:{x:.4f}" for s, x in sorted(scaled.items())))


def check_one_hot_median_scaling() -> bool:
    rep = _freq("onehot:2:0", [2], S_4_512, ONE_NONZERO_TRIALS)
    s, m = rep.series(2)
    under = bool(np.all(m <= 3 / s**2))
    slope = loglog_slope(s, m)
    ok = under and SLOPE_T2[0] <= slope <= SLOPE_T2[1]
    worst = float(np.max(m * s**2))
    return report("one-hot t=2 MSE<=3/s^2 and slope", ok,
                  f"max MSE*s^2={worst:.3f} (<=3) slope={slope:.3f} in {SLOPE_T2}")


def check_zipf_variance_targets() -> bool:
    ok, parts = True, []
    for alpha, (v1, v2, min_ratio) in ZIPF_TARGETS.items():
        rep = _freq(f"zipf:1000:{alpha}", [1, 2], [1024], MC_TRIALS, query_mode="support")
        m1, m2 = rep.get(1, 1024).moment, rep.get(2, 1024).moment
        good = (abs(m1 / v1 - 1) <= ZIPF_REL_TOL and abs(m2 / v2 - 1) <= ZIPF_REL_TOL and m1 / m2 >= min_ratio)
        ok &= good
        parts.append(f"alpha={alpha}: t1={m1:.3e} (target {v1:.3e}) t2={m2:.3e} (target {v2:.3e}) "
                     f"ratio={m1 / m2:.1f} (>={min_ratio:g})")
    return report("Zipf variance reproduction", ok, "; ".join(parts))


def check_one_hot_fourth_moment() -> bool:
    rep = _freq("onehot:2:0", [1, 2], S_4_512, ONE_NONZERO_TRIALS, order=4)
    s, m1 = rep.series(1)
    _, m2 = rep.series(2)
    law = m1 * s
    ok = bool(np.all(np.abs(law - 1) <= REL_TOL_EXACT_LAW) and np.all(m2 <= 3 / s**2))
    return report("one-hot 4th moment", ok,
                  f"t=1 moment*s in [{law.min():.4f}, {law.max():.4f}]; t=2 max moment*s^2={np.max(m2 * s**2):.3f}")


def check_inner_product_counterexample() -> bool:
    one = _inner("disjoint:1", [1, 2], S_4_512, ONE_NONZERO_TRIALS)
    s, m1 = one.series(1)
    _, m2 = one.series(2)
    big = _inner("disjoint:64", [2], [1 << b for b in range(4, 13)], MC_TRIALS)
    sb, mb = big.series(2)
    ok = bool(np.all(np.abs(m1 * s - 1) <= REL_TOL_EXACT_LAW) and np.all(m2 <= 3 / s**2)
              and np.all(mb * sb**2 <= 3))
    return report("inner-product counterexample and fix", ok,
                  f"pair(1) t=1 MSE*s in [{(m1 * s).min():.4f}, {(m1 * s).max():.4f}], "
                  f"t=2 max MSE*s^2={np.max(m2 * s**2):.3f}; pair(64) t=2 max MSE*s^2={np.max(mb * sb**2):.4f}")


@dataclass(frozen=True)
class Instance:
    kind: str
    v: SparseVector
    w: SparseVector | None
    j: int | None
    s: int
    t: int

    def exact(self):
        if self.kind == "point":
            return oracle.median_point_error_dist(self.v, self.j, self.s, self.t)
        return oracle.median_inner_error_dist(self.v, self.w, self.s, self.t)

    def checks(self):
        if self.kind == "point":
            return bounds.point_query_checks(self.v, self.j, self.s, self.t)
        return bounds.inner_product_checks(self.v, self.w, self.s, self.t)


def oracle_instances(n: int = ORACLE_INSTANCES, seed: int = ORACLE_SEED) -> list[Instance]:
    """Random point and inner-product instances on at most 5 random keys below 2**61 - 1."""
    rng = np.random.default_rng(seed)

    def values(k):
        return rng.choice([-1.0, 1.0], size=k) * rng.integers(1, 9, size=k) / 4

    out = []
    while len(out) < n:
        s, t = int(rng.choice([2, 4, 8])), int(rng.integers(1, 4))
        pool = np.unique(rng.integers(0, MERSENNE_61, size=5, dtype=np.uint64))
        rng.shuffle(pool)
        if rng.random() < 0.6:
            k = int(rng.integers(1, pool.size + 1))
            v = SparseVector.from_arrays(pool[:k], values(k))
            off = k < pool.size and rng.random() < 0.5
            j = int(pool[k] if off else pool[rng.integers(0, k)])
            out.append(Instance("point", v, None, j, s, t))
        else:
            in_v, in_w = rng.random(pool.size) < 0.6, rng.random(pool.size) < 0.6
            in_v[rng.integers(0, pool.size)] = True
            in_w[rng.integers(0, pool.size)] = True
            v = SparseVector.from_arrays(pool[in_v], values(int(in_v.sum())))
            w = SparseVector.from_arrays(pool[in_w], values(int(in_w.sum())))
            out.append(Instance("inner", v, w, None, s, t))
    return out


def check_oracle_bound_suite(instances) -> bool:
    violations, checked = [], 0
    for inst in instances:
        for c in inst.checks():
            checked += 1
            if not c.holds:
                violations.append(f"{inst.kind} s={inst.s} t={inst.t} {c}")
    kinds = sum(i.kind == "point" for i in instances)
    ok = len(instances) >= 500 and not violations
    detail = f"{len(instances)} instances ({kinds} point, {len(instances) - kinds} inner), {checked} inequalities, {len(violations)} violations"
    if violations:
        detail += "; first: " + violations[0]
    return report("exact oracle bound suite", ok, detail)


def check_median_moment_suite() -> bool:
    rng = np.random.default_rng(DIST_SEED)
    violations, checked = 0, 0
    for _ in range(DIST_COUNT):
        dist = random_discrete_dist(rng)
        for t in (1, 2, 3):
            for q in (1, 2):
                for c in bounds.median_moment_checks(dist, t, q):
                    checked += 1
                    violations += not c.holds
    ratio = bounds.tightness_ratio(tightness_dist(100), t=2, q=1)
    ok = violations == 0 and ratio >= TIGHTNESS_MIN
    return report("median moment suite", ok,
                  f"{DIST_COUNT} distributions, {checked} inequalities, {violations} violations; "
                  f"tightness ratio k=100: {ratio:.4f} (>={TIGHTNESS_MIN})")


def _mc_moments(inst: Instance, seed: int) -> MomentAccumulator:
    setup = SimulationSetup([inst.t], [inst.s], MC_TRIALS, seed=seed)
    if inst.kind == "point":
        batches = point_error_batches(inst.v, QueryPlan.fixed_keys([inst.j]), setup)
    else:
        batches = inner_error_batches(inst.v, inst.w, setup)
    return MomentAccumulator((1, 2)).consume(batches)


def check_oracle_vs_hashing_agreement(instances) -> bool:
    worst, failures = 0.0, []
    for i, inst in enumerate(instances):
        exact = inst.exact()
        acc = _mc_moments(inst, seed=i)
        for order in (1, 2):
            est = acc.result(inst.t, inst.s, order)
            gap = abs(est.moment - exact.moment(order))
            z = gap / est.stderr if est.stderr > 0 else (0.0 if gap <= AGREEMENT_ABS else np.inf)
            worst = max(worst, z if gap > AGREEMENT_ABS else 0.0)
            if gap > AGREEMENT_SE * est.stderr + AGREEMENT_ABS:
                failures.append(f"#{i} {inst.kind} d={len(inst.v)} s={inst.s} t={inst.t} order={order} z={z:.1f}")
    ok = not failures
    detail = (f"{len(instances)} instances x orders 1,2 at {MC_TRIALS} trials; worst |z|={worst:.2f} "
              f"(<= {AGREEMENT_SE:g}); {len(failures)} outside")
    if failures:
        detail += "; e.g. " + ", ".join(failures[:3])
    return report("oracle vs multiply-shift Monte-Carlo", ok, detail)


def check_determinism_linearity_serialization(tmp_dir) -> bool:
    args = ["freq", "--dataset", "zipf:200:1.1", "--t", "1,2", "--s-grid", "8..64", "--trials", "2000",
            "--queries", "10", "--seed", "12345"]
    a, b = tmp_dir / "a.csv", tmp_dir / "b.csv"
    _quiet_cli(args + ["--out", str(a)])
    _quiet_cli(args + ["--out", str(b)])
    same_csv = a.read_bytes() == b.read_bytes() and len(a.read_bytes()) > 0
    cfg = ExperimentConfig(dataset=parse_dataset("zipf:200:1.1"), t_values=[1, 2], s_grid=[8, 16, 32, 64],
                           trials=2000, queries_per_trial=10, seed=12345)
    same_csv &= csv_text(run_freq_experiment(cfg)).encode() == a.read_bytes()

    rng = np.random.default_rng(99)
    linear, round_trip = True, True
    for trial in range(50):
        keys = rng.integers(0, 2**63, size=60, dtype=np.uint64)
        v = SparseVector.from_arrays(keys[:40], rng.integers(-512, 513, size=40) / 16)
        w = SparseVector.from_arrays(keys[20:], rng.integers(-512, 513, size=40) / 16)
        family = "fourwise" if trial % 2 else "pairwise"
        if family == "fourwise":
            v = SparseVector.from_arrays(v.keys >> np.uint64(3), v.values)
            w = SparseVector.from_arrays(w.keys >> np.uint64(3), w.values)
        p = SketchParams(t=int(rng.integers(1, 4)), s=int(2 ** rng.integers(1, 8)),
                         master_seed=int(rng.integers(0, 2**63)), sign_family=family)
        sv, sw, svw = from_vector(v, p), from_vector(w, p), from_vector(v + w, p)
        linear &= (sv + sw).table.tobytes() == svw.table.tobytes()
        noisy = from_vector(SparseVector.from_arrays(keys, rng.normal(size=60)), SketchParams(p.t, p.s, p.master_seed))
        for sk in (svw, noisy):
            back = deserialize(serialize(sk))
            round_trip &= back.params == sk.params and back.table.tobytes() == sk.table.tobytes()
    ok = same_csv and linear and round_trip
    return report("determinism, linearity, serialization", ok,
                  f"byte-identical CSV={same_csv} bit-exact linearity={linear} round-trip={round_trip}")


@pytest.fixture(scope="module")
def instances():
    return oracle_instances()


def test_one_hot_single_row_law(tmp_path, capsys):
    with capsys.disabled():
        ok = check_one_hot_single_row_law(tmp_path)
    assert ok


def test_one_hot_median_scaling(capsys):
    with capsys.disabled():
        ok = check_one_hot_median_scaling()
    assert ok


def test_zipf_variance_targets(capsys):
    with capsys.disabled():
        ok = check_zipf_variance_targets()
    assert ok


def test_one_hot_fourth_moment(capsys):
    with capsys.disabled():
        ok = check_one_hot_fourth_moment()
    assert ok


def test_inner_product_counterexample(capsys):
    with capsys.disabled():
        ok = check_inner_product_counterexample()
    assert ok


def test_oracle_bound_suite(instances, capsys):
    with capsys.disabled():
        ok = check_oracle_bound_suite(instances)
    assert ok


def test_median_moment_suite(capsys):
    with capsys.disabled():
        ok = check_median_moment_suite()
    assert ok


def test_oracle_vs_hashing_agreement(instances, capsys):
    with capsys.disabled():
        ok = check_oracle_vs_hashing_agreement(instances)
    assert ok


def test_determinism_linearity_serialization(tmp_path, capsys):
    with capsys.disabled():
        ok = check_determinism_linearity_serialization(tmp_path)
    assert ok


if __name__ == "__main__":
    import tempfile
    from pathlib import Path

    with tempfile.TemporaryDirectory() as d:
        inst = oracle_instances()
        results = [check_one_hot_single_row_law(Path(d)), check_one_hot_median_scaling(), check_zipf_variance_targets(), check_one_hot_fourth_moment(), check_inner_product_counterexample(),
                   check_oracle_bound_suite(inst), check_median_moment_suite(), check_oracle_vs_hashing_agreement(inst), check_determinism_linearity_serialization(Path(d))]
    sys.exit(0 if all(results) else 1)
