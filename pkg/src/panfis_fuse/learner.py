"""Single-pass evolving learner that turns one data chunk into a rule base.

Every sample is seen once. A sample poorly covered by the current rules
(max firing below ``eps_coverage``) seeds a new rule; otherwise the best-firing
rule absorbs it and its consequent takes one weighted RLS step. Low-volume
rules are pruned and redundant rules merged on a fixed sample cadence.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Iterable, Optional, Sequence, Tuple, Union

import numpy as np

from .exceptions import NumericError, UsageError
from .fusion import merge_scan
from .rule_model import (
    Rule,
    RuleArrays,
    RuleBase,
    Sample,
    contributions_from_logvol,
    ensure_spd,
    firing_strength,
    is_spd,
    log_volume_from_logdet,
    symmetrize,
)

WINNER_JITTER = 1e-9


@dataclass(frozen=True)
class LearnerConfig:
    """Thresholds and cadences of the chunk learner.

    ``init_spread`` is the per-dimension standard deviation of the first rule.
    Leave it ``None`` and call :meth:`resolve` with the training inputs to get
    the default of one tenth of the per-dimension range.
    """

    eps_coverage: float = 0.135
    kerr: float = 0.01
    sker: float = 0.8
    thr: float = 0.8
    init_spread: Optional[Union[float, Tuple[float, ...]]] = None
    spread_floor: float = 1e-3
    rls_init: float = 1e5
    prune_every: int = 50
    merge_every: int = 50

    def __post_init__(self):
        for name in ("eps_coverage", "kerr"):
            v = getattr(self, name)
            if not 0.0 < v < 1.0:
                raise UsageError(f"{name} must lie in (0, 1), got {v}")
        for name in ("sker", "thr"):
            v = getattr(self, name)
            if not 0.0 < v <= 1.0:
                raise UsageError(f"{name} must lie in (0, 1], got {v}")
        if not self.spread_floor > 0 or not self.rls_init > 0:
            raise UsageError("spread_floor and rls_init must be positive")
        if self.prune_every < 1 or self.merge_every < 1:
            raise UsageError("prune_every and merge_every must be positive")
        if self.init_spread is not None:
            spread = np.atleast_1d(np.asarray(self.init_spread, dtype=float))
            if spread.ndim != 1 or not np.all(spread > 0) or not np.all(np.isfinite(spread)):
                raise UsageError("init_spread must be positive")
            value = float(spread[0]) if spread.size == 1 else tuple(float(s) for s in spread)
            object.__setattr__(self, "init_spread", value)

    def resolve(self, X) -> "LearnerConfig":
        """Fill in ``init_spread`` from the data range if it is unset."""
        if self.init_spread is not None:
            return self
        X = np.asarray(X, dtype=float)
        if X.ndim != 2 or X.shape[0] == 0:
            raise UsageError("resolve needs a non-empty 2-D input array")
        spread = np.maximum(0.1 * (X.max(axis=0) - X.min(axis=0)), self.spread_floor)
        return replace(self, init_spread=tuple(float(s) for s in spread))

    def spread_vector(self, p) -> np.ndarray:
        if self.init_spread is None:
            raise UsageError("init_spread is unresolved; call LearnerConfig.resolve(X) first")
        s = np.atleast_1d(np.asarray(self.init_spread, dtype=float))
        if s.size == 1:
            return np.full(p, s[0])
        if s.size != p:
            raise UsageError(f"init_spread has {s.size} entries for {p} inputs")
        return s


@dataclass(frozen=True)
class LearnerState:
    base: RuleBase
    processed: int
    grown: int
    pruned: int
    merged: int
    winner_updates: int
    jitter_events: int


# array kernels shared by the pure operations and the streaming learner

def _new_rule_arrays(x, y, sigma, n_classes, rls_init):
    p = x.shape[0]
    a = np.diag(1.0 / sigma**2)
    w = np.zeros((p + 1, n_classes))
    w[0, y] = 1.0
    return x.copy(), a, 1, w, rls_init * np.eye(p + 1)


def _new_rule_sigma(centers, x, cfg: LearnerConfig):
    p = x.shape[0]
    if centers.shape[0] == 0:
        return cfg.spread_vector(p)
    dist = np.sqrt(np.min(np.sum((centers - x) ** 2, axis=1)))
    return np.full(p, max(0.5 * dist, cfg.spread_floor))


def _winner_step(c, a, n, x):
    """Running-mean center and recursive covariance with rank-one inverse update."""
    n1 = n + 1
    g = 1.0 / n1
    e = x - c
    c1 = c + e * g
    # Sigma_new = (1-g) (Sigma + g e e^T); invert with Sherman-Morrison
    ae = a @ e
    a1 = (a - (ae[:, None] * ae) * (g / (1.0 + g * (e @ ae)))) / (1.0 - g)
    a1 = 0.5 * (a1 + a1.T)
    jitter = 0
    spd = a1[0, 0] > 0 and math.isfinite(a1[0, 0]) if a1.shape[0] == 1 else is_spd(a1)
    if not spd:
        a1, jitter = ensure_spd(a1, WINNER_JITTER)
    return c1, a1, n1, jitter


def _rls_step(w, cov, x, y, weight):
    """One locally weighted RLS step toward the one-hot target of ``y``."""
    if weight == 0.0:
        return w, cov
    u = np.empty(x.shape[0] + 1)
    u[0] = 1.0
    u[1:] = x
    pu = cov @ u
    denom = 1.0 + weight * (u @ pu)
    gain = pu * (weight / denom)
    if not (denom > 0 and math.isfinite(gain.sum())):
        raise NumericError("non-finite RLS gain")
    err = -(u @ w)
    err[y] += 1.0
    w1 = w + gain[:, None] * err
    cov1 = cov - gain[:, None] * pu
    return w1, 0.5 * (cov1 + cov1.T)


def _dominant_class(arr: RuleArrays):
    out = arr.consequent[:, 0, :] + np.einsum("ri,ric->rc", arr.centers, arr.consequent[:, 1:, :])
    return np.argmax(out, axis=1)


def _prune_mask(arr: RuleArrays, kerr):
    """Boolean keep-mask; guards the last rule and sole carriers of a class."""
    r = len(arr)
    keep = np.ones(r, dtype=bool)
    if r <= 1:
        return keep
    contrib = contributions_from_logvol(log_volume_from_logdet(arr.p, arr.logdets()))
    keep = contrib >= kerr
    dom = _dominant_class(arr)
    for o in np.unique(dom[~keep]):
        if not np.any(keep & (dom == o)):
            carriers = np.flatnonzero(dom == o)
            keep[carriers[np.argmax(contrib[carriers])]] = True
    if not keep.any():
        keep[int(np.argmax(contrib))] = True
    return keep


class PANFISLearner:
    """Streaming learner over one chunk; owns its rule arrays exclusively.

    >>> learner = PANFISLearner(LearnerConfig(init_spread=1.0), n_classes=2)
    >>> learner.learn_one([0.0], 0)
    >>> len(learner.rule_base())
    1
    """

    def __init__(self, cfg: LearnerConfig, n_classes: int, p: Optional[int] = None):
        if n_classes < 1:
            raise UsageError("n_classes must be positive")
        self.cfg = cfg
        self.n_classes = int(n_classes)
        self.p = p
        self.arr = None if p is None else RuleArrays.empty(p, self.n_classes)
        self.processed = 0
        self.grown = 0
        self.pruned = 0
        self.merged = 0
        self.winner_updates = 0
        self.jitter_events = 0

    def _check(self, x, y):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        if self.arr is None:
            if x.ndim != 1 or x.size == 0:
                raise UsageError("samples must be non-empty 1-D feature vectors")
            self.p = x.shape[0]
            self.arr = RuleArrays.empty(self.p, self.n_classes)
        if x.shape != (self.p,):
            raise UsageError(f"sample {self.processed} has shape {x.shape}, expected ({self.p},)")
        if not np.all(np.isfinite(x)):
            raise UsageError(f"sample {self.processed} has non-finite features")
        y = int(y)
        if not 0 <= y < self.n_classes:
            raise UsageError(f"sample {self.processed} has label {y} outside 0..{self.n_classes - 1}")
        return x, y

    def prune(self):
        keep = _prune_mask(self.arr, self.cfg.kerr)
        dropped = int((~keep).sum())
        if dropped:
            self.arr.keep(keep)
            self.pruned += dropped

    def merge(self):
        events, _, _ = merge_scan(self.arr, self.cfg.sker, "and", max_passes=10**9, rls_init=self.cfg.rls_init)
        self.merged += len(events)

    def learn_one(self, x, y):
        x, y = self._check(x, y)
        self._step(x, y)

    def _step(self, x, y):
        cfg = self.cfg
        n = self.processed
        if n and n % cfg.prune_every == 0:
            self.prune()
        if n and n % cfg.merge_every == 0:
            self.merge()
        arr = self.arr
        if len(arr):
            d = x - arr.centers
            m = np.einsum("ri,rij,rj->r", d, arr.inv_disp, d)
            phi = np.exp(-0.5 * m)
            win = int(np.argmax(phi))
        if len(arr) == 0 or phi[win] < cfg.eps_coverage:
            sigma = _new_rule_sigma(arr.centers, x, cfg)
            arr.append(*_new_rule_arrays(x, y, sigma, self.n_classes, cfg.rls_init))
            self.grown += 1
        else:
            c1, a1, n1, jit = _winner_step(arr.centers[win], arr.inv_disp[win], int(arr.support[win]), x)
            arr.centers[win] = c1
            arr.inv_disp[win] = a1
            arr.support[win] = n1
            self.jitter_events += jit
            w1, cov1 = _rls_step(arr.consequent[win], arr.rls_cov[win], x, y, phi[win] / phi.sum())
            arr.consequent[win] = w1
            arr.rls_cov[win] = cov1
            self.winner_updates += 1
        self.processed += 1

    def learn(self, samples: Iterable):
        for s in samples:
            if isinstance(s, Sample):
                self.learn_one(s.x, s.y)
            else:
                x, y = s
                self.learn_one(x, y)
        return self

    def finalize(self, origin=None) -> RuleBase:
        """End-of-chunk prune and merge, then snapshot the rule base."""
        if self.arr is None or len(self.arr) == 0:
            raise UsageError("learner has not seen any samples")
        self.prune()
        self.merge()
        return self.rule_base(origin)

    def rule_base(self, origin=None) -> RuleBase:
        if self.arr is None:
            raise UsageError("learner has not seen any samples")
        return self.arr.to_base(origin)

    @property
    def state(self) -> LearnerState:
        return LearnerState(
            self.rule_base(),
            self.processed,
            self.grown,
            self.pruned,
            self.merged,
            self.winner_updates,
            self.jitter_events,
        )


def learn_chunk(samples: Iterable, cfg: LearnerConfig, n_classes: Optional[int] = None, origin=None) -> RuleBase:
    """Learn one rule base from an ordered chunk in a single pass.

    ``samples`` yields :class:`Sample` objects or ``(x, y)`` pairs and is
    iterated exactly once. When ``n_classes`` is omitted the chunk is buffered
    first and the class count taken as the largest label plus one.
    """
    if n_classes is None:
        samples = list(samples)
        if not samples:
            raise UsageError("empty chunk")
        n_classes = 1 + max(s.y if isinstance(s, Sample) else int(s[1]) for s in samples)
    learner = PANFISLearner(cfg, n_classes)
    learner.learn(samples)
    if learner.processed == 0:
        raise UsageError("empty chunk")
    return learner.finalize(origin)


def learn_arrays(X, y, cfg: LearnerConfig, n_classes: Optional[int] = None, origin=None) -> RuleBase:
    """Array front end of :func:`learn_chunk`; validates the chunk up front."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y)
    if X.ndim != 2 or X.shape[0] == 0 or X.shape[1] == 0:
        raise UsageError("empty chunk")
    if y.shape != (X.shape[0],):
        raise UsageError("X and y lengths differ")
    if not np.all(np.isfinite(X)):
        raise UsageError("chunk has non-finite features")
    if n_classes is None:
        n_classes = int(y.max()) + 1
    if y.min() < 0 or y.max() >= n_classes:
        raise UsageError(f"labels must lie in 0..{n_classes - 1}")
    learner = PANFISLearner(cfg, n_classes, p=X.shape[1])
    for x, label in zip(X, y.tolist()):
        learner._step(x, label)
    return learner.finalize(origin)


# pure single-event operations on immutable rules

def should_grow(base: RuleBase, s: Sample, cfg: LearnerConfig) -> bool:
    if len(base) == 0:
        return True
    return max(firing_strength(r, s.x) for r in base.rules) < cfg.eps_coverage


def grow_rule(base: RuleBase, s: Sample, cfg: LearnerConfig) -> RuleBase:
    """Append a rule centred on ``s.x``.

    The new spread is half the Euclidean distance to the nearest existing
    center (floored at ``cfg.spread_floor``); the first rule uses
    ``cfg.init_spread``.
    """
    x = np.asarray(s.x, dtype=float)
    if x.shape != (base.p,):
        raise UsageError("sample dimension does not match the rule base")
    if s.y >= base.n_classes:
        raise UsageError("label outside the rule base's classes")
    centers = np.array([r.center for r in base.rules]).reshape(-1, base.p)
    sigma = _new_rule_sigma(centers, x, cfg)
    c, a, n, w, cov = _new_rule_arrays(x, s.y, sigma, base.n_classes, cfg.rls_init)
    return RuleBase(base.rules + (Rule(c, a, n, w, cov),), base.p, base.n_classes, base.origin)


def update_winner(rule: Rule, s: Sample) -> Rule:
    x = np.asarray(s.x, dtype=float)
    if x.shape != (rule.p,):
        raise UsageError("sample dimension does not match the rule")
    c1, a1, n1, _ = _winner_step(rule.center, rule.inv_dispersion, rule.support, x)
    return Rule(c1, a1, n1, rule.consequent, rule.rls_cov)


def update_consequents(rule: Rule, s: Sample, weight: float = 1.0) -> Rule:
    """One RLS step on the winner, with gain scaled by its normalized firing."""
    x = np.asarray(s.x, dtype=float)
    if x.shape != (rule.p,):
        raise UsageError("sample dimension does not match the rule")
    if s.y >= rule.n_classes:
        raise UsageError("label outside the rule's classes")
    w1, cov1 = _rls_step(np.array(rule.consequent), np.array(rule.rls_cov), x, s.y, float(weight))
    return Rule(rule.center, rule.inv_dispersion, rule.support, w1, cov1)


def prune_rules(base: RuleBase, cfg: LearnerConfig) -> RuleBase:
    if len(base) == 0:
        raise UsageError("cannot prune an empty rule base")
    keep = _prune_mask(RuleArrays.from_base(base), cfg.kerr)
    rules = tuple(r for r, k in zip(base.rules, keep) if k)
    return RuleBase(rules, base.p, base.n_classes, base.origin)


def merge_redundant(base: RuleBase, cfg: LearnerConfig) -> RuleBase:
    """Merge pairs passing the fusion test at threshold ``cfg.sker``."""
    if len(base) < 2:
        return base
    arr = RuleArrays.from_base(base)
    events, _, _ = merge_scan(arr, cfg.sker, "and", max_passes=10**9, rls_init=cfg.rls_init)
    if not events:
        return base
    return arr.to_base(base.origin)
