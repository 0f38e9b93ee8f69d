"""Driver/worker pipeline: partition, learn chunks in parallel, gather, fuse."""
from __future__ import annotations

import dataclasses
import multiprocessing
import os
import time
from concurrent.futures import ProcessPoolExecutor, ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from .data import Dataset
from .exceptions import ChunkError, UsageError
from .fusion import FusionReport, MergeConfig, fuse
from .inference import EvalMetrics, evaluate
from .learner import LearnerConfig, learn_arrays
from .rule_model import RuleBase

BACKENDS = ("process", "thread", "serial")


@dataclass(frozen=True)
class PartitionPlan:
    P: int
    boundaries: Tuple[Tuple[int, int], ...]

    def sizes(self):
        return [e - s for s, e in self.boundaries]


def partition(n: int, P: int) -> PartitionPlan:
    """Contiguous balanced ranges; the first ``n % P`` chunks take one extra."""
    if not 1 <= P <= n:
        raise UsageError(f"need 1 <= P <= n, got P={P}, n={n}")
    base, extra = divmod(n, P)
    bounds = []
    start = 0
    for i in range(P):
        end = start + base + (1 if i < extra else 0)
        bounds.append((start, end))
        start = end
    return PartitionPlan(P, tuple(bounds))


@dataclass
class RunReport:
    mode: str
    partitions: int
    n_train: int
    wall_clock_total: float
    stage_seconds: Dict[str, float]
    chunk_rules: List[int]
    fusion: Optional[FusionReport] = None
    metrics: Optional[EvalMetrics] = None
    n_jobs: int = 1
    config: Dict[str, object] = field(default_factory=dict)

    @property
    def accuracy(self):
        return None if self.metrics is None else self.metrics.accuracy

    @property
    def rules_before(self):
        return self.fusion.rules_before if self.fusion else sum(self.chunk_rules)

    @property
    def rules_after(self):
        return self.fusion.rules_after if self.fusion else sum(self.chunk_rules)


def _as_dataset(data) -> Dataset:
    if isinstance(data, Dataset):
        X, y = data
    else:
        X, y = data
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=np.int64)
    if X.ndim == 1:
        X = X[:, None]
    if X.ndim != 2 or X.shape[0] == 0:
        raise UsageError("training data is empty")
    if y.shape != (X.shape[0],):
        raise UsageError("X and y lengths differ")
    if y.min() < 0:
        raise UsageError("labels must be non-negative")
    return Dataset(X, y)


def _learn_partition(X, y, cfg, n_classes, index):
    return learn_arrays(X, y, cfg, n_classes, origin=index)


def _snapshot(cfg, mcfg=None):
    snap = {f"learner.{k}": v for k, v in dataclasses.asdict(cfg).items()}
    if mcfg is not None:
        snap.update({f"merge.{k}": v for k, v in dataclasses.asdict(mcfg).items()})
    return snap


def default_n_jobs(P):
    return max(1, min(P, os.cpu_count() or 1))


def _executor(backend, n_jobs):
    if backend == "thread":
        return ThreadPoolExecutor(n_jobs)
    methods = multiprocessing.get_all_start_methods()
    ctx = multiprocessing.get_context("fork" if "fork" in methods else None)
    return ProcessPoolExecutor(n_jobs, mp_context=ctx)


def learn_partitions(data: Dataset, plan: PartitionPlan, cfg: LearnerConfig, n_classes,
                     n_jobs=1, backend="process") -> List[RuleBase]:
    """Run one learner per range and gather results in partition order."""
    if backend not in BACKENDS:
        raise UsageError(f"backend must be one of {BACKENDS}")
    tasks = [(data.X[s:e], data.y[s:e], cfg, n_classes, i) for i, (s, e) in enumerate(plan.boundaries)]
    if backend == "serial" or n_jobs == 1:
        bases = []
        for t in tasks:
            try:
                bases.append(_learn_partition(*t))
            except Exception as exc:
                raise ChunkError(t[-1], exc) from exc
        return bases
    with _executor(backend, n_jobs) as ex:
        futures = [ex.submit(_learn_partition, *t) for t in tasks]
        bases = []
        for i, fut in enumerate(futures):
            try:
                bases.append(fut.result())
            except Exception as exc:
                for f in futures:
                    f.cancel()
                raise ChunkError(i, exc) from exc
    return bases


def train_scalable(data, P: int, cfg: Optional[LearnerConfig] = None, mcfg: Optional[MergeConfig] = None,
                   *, n_jobs: Optional[int] = None, backend="process", n_classes: Optional[int] = None,
                   test=None):
    """Chunk-parallel training followed by rule-base fusion.

    With ``P == 1`` and ``mcfg.thr == cfg.sker`` the fusion step is a no-op,
    so the model equals :func:`train_single` exactly.

    Returns ``(RuleBase, RunReport)``.
    """
    t0 = time.perf_counter()
    data = _as_dataset(data)
    cfg = (cfg or LearnerConfig()).resolve(data.X)
    mcfg = mcfg or MergeConfig(thr=cfg.thr, rls_init=cfg.rls_init)
    n_classes = n_classes or int(data.y.max()) + 1
    n_jobs = n_jobs or default_n_jobs(P)
    stages = {}

    t = time.perf_counter()
    plan = partition(len(data), P)
    stages["partition"] = time.perf_counter() - t

    t = time.perf_counter()
    bases = learn_partitions(data, plan, cfg, n_classes, n_jobs=n_jobs, backend=backend)
    stages["learn"] = time.perf_counter() - t

    t = time.perf_counter()
    model, freport = fuse(bases, mcfg)
    stages["fuse"] = time.perf_counter() - t

    metrics = None
    if test is not None:
        t = time.perf_counter()
        test = _as_dataset(test)
        metrics = evaluate(model, test.X, test.y)
        stages["evaluate"] = time.perf_counter() - t

    report = RunReport(
        mode="scalable",
        partitions=P,
        n_train=len(data),
        wall_clock_total=time.perf_counter() - t0,
        stage_seconds=stages,
        chunk_rules=[len(b) for b in bases],
        fusion=freport,
        metrics=metrics,
        n_jobs=n_jobs,
        config=_snapshot(cfg, mcfg),
    )
    return model, report


def train_single(data, cfg: Optional[LearnerConfig] = None, *, n_classes: Optional[int] = None, test=None):
    """One learner over the whole stream, no fusion."""
    t0 = time.perf_counter()
    data = _as_dataset(data)
    cfg = (cfg or LearnerConfig()).resolve(data.X)
    n_classes = n_classes or int(data.y.max()) + 1
    stages = {}

    t = time.perf_counter()
    model = learn_arrays(data.X, data.y, cfg, n_classes, origin=0)
    stages["learn"] = time.perf_counter() - t

    metrics = None
    if test is not None:
        t = time.perf_counter()
        test = _as_dataset(test)
        metrics = evaluate(model, test.X, test.y)
        stages["evaluate"] = time.perf_counter() - t

    report = RunReport(
        mode="single",
        partitions=1,
        n_train=len(data),
        wall_clock_total=time.perf_counter() - t0,
        stage_seconds=stages,
        chunk_rules=[len(model)],
        metrics=metrics,
        config=_snapshot(cfg),
    )
    return model, report
