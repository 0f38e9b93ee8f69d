"""End-to-end acceptance checks.

Every test prints exactly one ``[PASS]`` / ``[FAIL]`` / ``[SKIP]`` line for its
criterion (visible with ``pytest -s`` or in the captured output on failure),
then asserts. Run just this file with::

    pytest tests/test_acceptance.py -v -s
"""
import math
import os

import numpy as np
import pytest
from scipy import integrate

from panfis_fuse import orchestrator
from panfis_fuse.data import SynthConfig, synth_rss
from panfis_fuse.fusion import MergeConfig, bhattacharyya_olap, fuse, merge_pair, overlap_score
from panfis_fuse.inference import evaluate
from panfis_fuse.learner import LearnerConfig, PANFISLearner, learn_arrays, learn_chunk
from panfis_fuse.model_io import dumps_model
from panfis_fuse.orchestrator import train_scalable, train_single
from panfis_fuse.rule_model import Rule, RuleBase, Sample, is_spd

from conftest import make_rule, random_spd

N_TRAIN = 200_000
N_TEST = 83_100
BENCH_SEED = 1


def verdict(capsys, number, ok, detail, skipped=False):
    tag = "SKIP" if skipped else ("PASS" if ok else "FAIL")
    with capsys.disabled():
        print(f"\n[{tag}] criterion {number}: {detail}")


@pytest.fixture(scope="module")
def bench():
    full = synth_rss(SynthConfig(n=N_TRAIN + N_TEST, seed=BENCH_SEED))
    return full.slice(0, N_TRAIN), full.slice(N_TRAIN, N_TRAIN + N_TEST)


@pytest.fixture(scope="module")
def single_run(bench):
    train, test = bench
    return train_single(train, test=test)


@pytest.fixture(scope="module")
def scalable_run(bench):
    train, test = bench
    return train_scalable(train, 50, test=test)


@pytest.mark.slow
def test_criterion_1_fusion_compaction(capsys, scalable_run):
    _, rep = scalable_run
    reduction = rep.fusion.reduction
    ok = reduction >= 0.40 and rep.wall_clock_total < 300
    verdict(capsys, 1, ok,
            f"P=50 rules {rep.rules_before} -> {rep.rules_after}, reduction {reduction:.1%} (need >= 40%), "
            f"wall clock {rep.wall_clock_total:.1f}s (need < 300s)")
    assert ok


@pytest.mark.slow
def test_criterion_2_accuracy_retention(capsys, single_run, scalable_run):
    acc_single = single_run[1].accuracy
    acc_scal = scalable_run[1].accuracy
    ok = acc_scal >= acc_single - 0.03 and min(acc_single, acc_scal) >= 0.75
    verdict(capsys, 2, ok,
            f"single {acc_single:.4f}, scalable P=50 {acc_scal:.4f}, gap {100 * (acc_single - acc_scal):.2f} points "
            f"(need <= 3.00 and both >= 0.75)")
    assert ok


@pytest.mark.slow
def test_criterion_3_speedup(capsys, bench, single_run):
    train, _ = bench
    cpus = os.cpu_count() or 1
    _, rep = train_scalable(train, 8)
    srep = single_run[1]
    t_single = srep.wall_clock_total - srep.stage_seconds["evaluate"]
    t_scal = rep.wall_clock_total
    ok = t_scal <= 0.5 * t_single
    detail = (f"single {t_single:.2f}s, scalable P=8 on {rep.n_jobs} workers {t_scal:.2f}s, "
              f"ratio {t_scal / t_single:.2f} (need <= 0.50), {cpus} hardware threads")
    if cpus < 8:
        verdict(capsys, 3, ok, detail + " -- needs >= 8, not evaluable here", skipped=True)
        pytest.skip(f"speedup criterion needs >= 8 hardware threads, machine has {cpus}")
    verdict(capsys, 3, ok, detail)
    assert ok


def bc_quad(c1, var1, c2, var2):
    def integrand(x):
        p = math.exp(-0.5 * (x - c1) ** 2 / var1) / math.sqrt(2 * math.pi * var1)
        q = math.exp(-0.5 * (x - c2) ** 2 / var2) / math.sqrt(2 * math.pi * var2)
        return math.sqrt(p * q)

    mid = 0.5 * (c1 + c2)
    span = abs(c1 - c2) + 12 * math.sqrt(max(var1, var2))
    val, _ = integrate.quad(integrand, mid - span, mid + span, epsabs=1e-13, epsrel=1e-12, limit=200)
    return val


def test_criterion_4_bhattacharyya_oracle(capsys):
    rng = np.random.default_rng(404)
    worst = 0.0
    for _ in range(200):
        a = float(np.exp(rng.uniform(np.log(0.05), np.log(20.0))))
        c1, c2 = rng.uniform(-6, 6, size=2)
        got = overlap_score(make_rule(c1, [[a]]), make_rule(c2, [[a]]))
        worst = max(worst, abs(got - bc_quad(c1, 1 / a, c2, 1 / a)))
    hand1 = bhattacharyya_olap(make_rule(0.0), make_rule(2.0))
    hand2 = bhattacharyya_olap(make_rule(0.0, [[1.0]]), make_rule(0.0, [[4.0]]))
    err1 = abs(hand1 - 0.5)
    err2 = abs(hand2 - 0.5 * math.log(1.25))
    ok = worst < 1e-6 and err1 < 1e-9 and err2 < 1e-9 and abs(hand2 - 0.111572) < 1e-6
    verdict(capsys, 4, ok,
            f"200 pairs max |score - quad| {worst:.2e} (need < 1e-6); "
            f"hand cases olap {hand1:.12f}, {hand2:.12f} errors {err1:.1e}, {err2:.1e} (need < 1e-9)")
    assert ok


def random_pair(rng):
    p = int(rng.integers(1, 6))
    k = int(rng.integers(1, 5))

    def one():
        return Rule(rng.normal(0, 3, size=p), random_spd(rng, p), int(rng.integers(1, 1000)),
                    rng.normal(0, 1, size=(p + 1, k)))

    a, b = one(), one()
    return (a, b) if a.support >= b.support else (b, a)


def in_hull(c, a, b):
    seg = b - a
    denom = float(seg @ seg)
    if denom == 0.0:
        return np.allclose(c, a, rtol=0, atol=1e-12)
    t = float((c - a) @ seg) / denom
    resid = np.max(np.abs(a + t * seg - c))
    return -1e-12 <= t <= 1 + 1e-12 and resid <= 1e-9 * (1 + np.max(np.abs(seg)))


def test_criterion_5_merge_algebra(capsys):
    rng = np.random.default_rng(505)
    fails = {"support": 0, "hull": 0, "spd": 0, "symmetry": 0, "idempotence": 0}
    cfg = MergeConfig(thr=0.8)
    for _ in range(10_000):
        win, k = random_pair(rng)
        m = merge_pair(win, k)
        fails["support"] += m.support != win.support + k.support
        fails["hull"] += not in_hull(m.center, win.center, k.center)
        fails["spd"] += not (is_spd(m.inv_dispersion)
                             and np.max(np.abs(m.inv_dispersion - m.inv_dispersion.T)) <= 1e-9)
        fails["symmetry"] += abs(bhattacharyya_olap(win, k) - bhattacharyya_olap(k, win)) >= 1e-12
        once, _ = fuse([RuleBase((win, k), win.p, win.n_classes)], cfg)
        _, again = fuse([once], cfg)
        fails["idempotence"] += len(again.merge_events) != 0
    total = sum(fails.values())
    verdict(capsys, 5, total == 0, f"10000 random pairs, failures by property {fails}")
    assert total == 0


@pytest.mark.slow
def test_criterion_6_determinism(capsys, bench, single_run, monkeypatch):
    train, _ = bench
    notes = []

    p1, _ = train_scalable(train, 1)
    same_p1 = dumps_model(p1) == dumps_model(single_run[0])
    notes.append(f"P=1 byte-identical {same_p1}")

    small = train.slice(0, 40_000)
    outputs = set()
    pools = [("serial", 1), ("thread", 2), ("thread", 5), ("process", 3), ("process", 8)]
    for backend, n_jobs in pools:
        model, _ = train_scalable(small, 8, n_jobs=n_jobs, backend=backend)
        outputs.add(dumps_model(model))
    notes.append(f"{len(pools)} pool configurations gave {len(outputs)} distinct model(s)")

    visits = np.zeros(len(small), dtype=int)
    real = orchestrator._learn_partition

    def counting(X, y, cfg, n_classes, index):
        lo, hi = plan.boundaries[index]
        visits[lo:hi] += 1
        return real(X, y, cfg, n_classes, index)

    plan = orchestrator.partition(len(small), 8)
    monkeypatch.setattr(orchestrator, "_learn_partition", counting)
    train_scalable(small, 8, n_jobs=2, backend="thread")
    monkeypatch.undo()

    stream_visits = np.zeros(len(small), dtype=int)

    def stream():
        for i in range(len(small)):
            stream_visits[i] += 1
            yield Sample(small.X[i], int(small.y[i]))

    learn_chunk(stream(), LearnerConfig().resolve(small.X), n_classes=4)
    once = bool(np.all(visits == 1) and np.all(stream_visits == 1))
    notes.append(f"every sample visited exactly once {once}")

    ok = same_p1 and len(outputs) == 1 and once
    verdict(capsys, 6, ok, "; ".join(notes))
    assert ok


def test_criterion_7_learner_sanity(capsys):
    rng = np.random.default_rng(707)
    notes = []

    # centers ten initial spreads apart, clusters well inside one spread
    n = 1000
    y = rng.integers(0, 2, size=n)
    y[:2] = [0, 1]
    X = np.where(y == 0, 0.0, 10.0)[:, None] + rng.normal(0, 0.05, size=(n, 1))
    cfg2 = LearnerConfig(init_spread=1.0)
    grows_at_second = math.exp(-0.5 * (X[1, 0] - X[0, 0]) ** 2) < cfg2.eps_coverage
    base = learn_arrays(X, y, cfg2, 2)
    m = evaluate(base, np.array([[0.0], [10.0]]), np.array([0, 1]))
    two_ok = grows_at_second and len(base) == 2 and m.accuracy == 1.0
    notes.append(f"two clusters -> {len(base)} rules, accuracy at centers {m.accuracy:.0%}")

    data = synth_rss(SynthConfig(n=10_000, seed=7, sigma=2.0))
    cfg = LearnerConfig().resolve(data.X)
    learner = PANFISLearner(cfg, 4)
    support_ok, checked, coverage_min = True, 0, 1.0
    for x, label in zip(data.X, data.y):
        learner.learn_one(x, label)
        if learner.pruned == 0:
            support_ok &= int(learner.arr.support.sum()) == learner.processed
            checked += 1
        d = x - learner.arr.centers
        fire = np.exp(-0.5 * np.einsum("ri,rij,rj->r", d, learner.arr.inv_disp, d))
        coverage_min = min(coverage_min, float(fire.max()))
    coverage_ok = coverage_min >= cfg.eps_coverage
    notes.append(f"support sum == processed on {checked} steps before first prune {support_ok}")
    notes.append(f"min post-sample coverage {coverage_min:.4f} over 10000 samples (need >= {cfg.eps_coverage})")

    ok = two_ok and support_ok and checked > 0 and coverage_ok
    verdict(capsys, 7, ok, "; ".join(notes))
    assert ok
