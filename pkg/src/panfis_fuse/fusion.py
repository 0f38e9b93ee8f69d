"""Merging of rule bases collected from independent chunk learners.

Two rules are merged when their Bhattacharyya coefficient reaches ``thr`` and
the merged ellipsoid passes the blow-up (homogeneity) test. Merged parameters
are support-weighted averages of the parents.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import List, NamedTuple, Sequence

import numpy as np

from .exceptions import NumericError, UsageError
from .rule_model import (
    Rule,
    RuleArrays,
    RuleBase,
    _logdet_spd,
    contributions_from_logvol,
    log_volume_from_logdet,
)

log = logging.getLogger(__name__)

CRITERIA = ("and", "or")


@dataclass(frozen=True)
class MergeConfig:
    """Fusion settings.

    ``criterion="or"`` switches to the disjunctive merge test; it merges far
    more aggressively and is meant for experiments only.
    """

    thr: float = 0.8
    max_passes: int = 1000
    criterion: str = "and"
    rls_init: float = 1e5

    def __post_init__(self):
        if not 0.0 < self.thr <= 1.0:
            raise UsageError(f"thr must lie in (0, 1], got {self.thr}")
        if self.max_passes < 1:
            raise UsageError("max_passes must be positive")
        if self.criterion not in CRITERIA:
            raise UsageError(f"criterion must be one of {CRITERIA}")
        if not self.rls_init > 0:
            raise UsageError("rls_init must be positive")


class MergeEvent(NamedTuple):
    winner: int
    absorbed: int
    score: float


@dataclass
class FusionReport:
    rules_before: int
    rules_after: int
    merge_events: List[MergeEvent] = field(default_factory=list)
    passes: int = 0
    converged: bool = True

    @property
    def warning(self):
        if self.converged:
            return None
        return f"max_passes reached after {self.passes} passes; output may hold mergeable pairs"

    @property
    def reduction(self) -> float:
        if self.rules_before == 0:
            return 0.0
        return 1.0 - self.rules_after / self.rules_before


def _quad(d, m):
    # explicit accumulation keeps every entry bitwise independent of batch shape
    p = d.shape[-1]
    acc = np.zeros(d.shape[:-1])
    for i in range(p):
        for j in range(p):
            acc = acc + d[..., i] * m[..., i, j] * d[..., j]
    return acc


def _pair_olap(ca, aa, la, cb, ab, lb):
    """Broadcast Bhattacharyya distance from stored inverse dispersions."""
    d = ca - cb
    m = 0.5 * (aa + ab)
    sign, ldm = np.linalg.slogdet(m)
    if np.any(sign <= 0):
        raise NumericError("averaged inverse dispersion is not positive-definite")
    olap = 0.125 * _quad(d, m) + 0.5 * (ldm - 0.5 * (la + lb))
    return np.maximum(olap, 0.0)


def _rule_terms(rule: Rule):
    return rule.center, rule.inv_dispersion, _logdet_spd(rule.inv_dispersion)


def bhattacharyya_olap(win: Rule, k: Rule) -> float:
    """Bhattacharyya distance between two rules (0 for identical rules)."""
    if win.p != k.p:
        raise UsageError("rules differ in input dimension")
    return float(_pair_olap(*_rule_terms(win), *_rule_terms(k)))


def overlap_score(win: Rule, k: Rule) -> float:
    """Bhattacharyya coefficient ``exp(-olap)`` in (0, 1]."""
    return math.exp(-bhattacharyya_olap(win, k))


def _merged_params(cw, aw, nw, ww, ck, ak, nk, wk):
    n = nw + nk
    t = nk / n
    lo, hi = np.minimum(cw, ck), np.maximum(cw, ck)
    c = np.clip(cw + t * (ck - cw), lo, hi)
    a = aw + t * (ak - aw)
    w = ww + t * (wk - ww)
    return c, a, n, w


def merge_pair(win: Rule, k: Rule, rls_init=1e5) -> Rule:
    """Support-weighted merge of ``k`` into ``win``.

    Center, inverse dispersion and consequent are support-weighted means of
    the parents; support is their sum. The RLS covariance is reset.
    """
    if win.p != k.p or win.n_classes != k.n_classes:
        raise UsageError("rules differ in shape")
    if win.support < k.support:
        raise UsageError("winner must carry at least as much support as the absorbed rule")
    c, a, n, w = _merged_params(
        win.center, win.inv_dispersion, win.support, win.consequent,
        k.center, k.inv_dispersion, k.support, k.consequent,
    )
    return Rule(c, a, n, w, rls_init * np.eye(win.p + 1))


def homogeneity_bound(log_v_merged, log_v_win, log_v_k, p):
    """``V_merged <= p * (V_win + V_k)`` evaluated in log space."""
    return log_v_merged <= math.log(p) + np.logaddexp(log_v_win, log_v_k)


def homogeneity_check(win: Rule, k: Rule) -> bool:
    if win.support < k.support:
        win, k = k, win
    p = win.p
    merged = merge_pair(win, k)
    lv = log_volume_from_logdet(p, _logdet_spd(np.stack([merged.inv_dispersion, win.inv_dispersion, k.inv_dispersion])))
    return bool(homogeneity_bound(lv[0], lv[1], lv[2], p))


def _score_row(arr: RuleArrays, logdet, t):
    olap = _pair_olap(arr.centers[t], arr.inv_disp[t], logdet[t], arr.centers, arr.inv_disp, logdet)
    s = np.exp(-olap)
    s[t] = -np.inf
    return s


def _score_matrix(arr: RuleArrays, logdet):
    olap = _pair_olap(
        arr.centers[:, None], arr.inv_disp[:, None], logdet[:, None],
        arr.centers[None], arr.inv_disp[None], logdet[None],
    )
    s = np.exp(-olap)
    np.fill_diagonal(s, -np.inf)
    return s


def _winner_of(support, i, j):
    # more support wins; ties go to the lower pool index
    if support[i] > support[j] or (support[i] == support[j] and i < j):
        return i, j
    return j, i


def _homogeneity_row(arr: RuleArrays, logdet, t):
    """Blow-up test of target ``t`` against every rule, vectorized."""
    p = arr.p
    n = arr.support
    idx = np.arange(len(arr))
    t_wins = (n[t] > n) | ((n[t] == n) & (t < idx))
    n_win = np.where(t_wins, n[t], n)
    n_lose = np.where(t_wins, n, n[t])
    a_win = np.where(t_wins[:, None, None], arr.inv_disp[t], arr.inv_disp)
    a_lose = np.where(t_wins[:, None, None], arr.inv_disp, arr.inv_disp[t])
    frac = (n_lose / (n_win + n_lose))[:, None, None]
    sign, ld_m = np.linalg.slogdet(a_win + frac * (a_lose - a_win))
    ok = homogeneity_bound(
        log_volume_from_logdet(p, ld_m),
        log_volume_from_logdet(p, logdet[t]),
        log_volume_from_logdet(p, logdet),
        p,
    )
    ok = ok & (sign > 0)
    ok[t] = False
    return ok


def merge_scan(arr: RuleArrays, thr, criterion="and", max_passes=1000, rls_init=1e5):
    """Merge qualifying pairs in ``arr`` in place until a fixed point.

    Each pass ranks rules by descending statistical contribution; the first
    target (in rank order) owning a qualifying partner (in pool order) is
    merged, the result takes the winner's slot and the pass restarts.

    Returns ``(events, passes, converged)``.
    """
    events = []
    if len(arr) < 2:
        return events, 0, True
    p = arr.p
    logdet = arr.logdets()
    scores = _score_matrix(arr, logdet)
    passes = 0
    while passes < max_passes:
        passes += 1
        contrib = contributions_from_logvol(log_volume_from_logdet(p, logdet))
        merged = False
        for t in np.argsort(-contrib, kind="stable"):
            close = scores[t] >= thr
            if criterion == "and":
                if not close.any():
                    continue
                qualify = close & _homogeneity_row(arr, logdet, t)
            else:
                qualify = close | _homogeneity_row(arr, logdet, t)
            hits = np.flatnonzero(qualify)
            if hits.size == 0:
                continue
            k = int(hits[0])
            w, lose = _winner_of(arr.support, int(t), k)
            events.append(MergeEvent(w, lose, float(scores[t, k])))
            c, a, n, wt = _merged_params(
                arr.centers[w], arr.inv_disp[w], arr.support[w], arr.consequent[w],
                arr.centers[lose], arr.inv_disp[lose], arr.support[lose], arr.consequent[lose],
            )
            arr.centers[w] = c
            arr.inv_disp[w] = a
            arr.support[w] = n
            arr.consequent[w] = wt
            arr.rls_cov[w] = rls_init * np.eye(p + 1)
            logdet[w] = _logdet_spd(a)
            keep = np.ones(len(arr), dtype=bool)
            keep[lose] = False
            arr.keep(keep)
            logdet = logdet[keep]
            scores = scores[keep][:, keep]
            w_new = w - (1 if lose < w else 0)
            row = _score_row(arr, logdet, w_new)
            scores[w_new, :] = row
            scores[:, w_new] = row
            merged = True
            break
        if not merged:
            return events, passes, True
        if len(arr) < 2:
            return events, passes, True
    return events, passes, False


def fuse(bases: Sequence[RuleBase], cfg: MergeConfig | None = None):
    """Merge a list of rule bases into one model.

    The pool is the concatenation of ``bases`` in the given order.

    Returns
    -------
    (RuleBase, FusionReport)
    """
    cfg = cfg or MergeConfig()
    bases = list(bases)
    if not bases:
        raise UsageError("nothing to fuse")
    p, n_classes = bases[0].p, bases[0].n_classes
    for b in bases:
        if b.p != p or b.n_classes != n_classes:
            raise UsageError("all rule bases must share input dimension and class count")
    rules = [r for b in bases for r in b.rules]
    if not rules:
        raise UsageError("all rule bases are empty")
    arr = RuleArrays.from_rules(rules, p, n_classes)
    events, passes, converged = merge_scan(arr, cfg.thr, cfg.criterion, cfg.max_passes, cfg.rls_init)
    report = FusionReport(len(rules), len(arr), events, passes, converged)
    if not converged:
        log.warning(report.warning)
    out = arr.to_base(origin="fused")
    return out, report
