"""Ellipsoidal fuzzy rules and the geometry every other module builds on.

A rule is a multivariate Gaussian antecedent (center plus inverse dispersion
matrix) paired with a first-order TSK consequent holding one ``(p + 1)``
weight column per class over the extended input ``[1, x]``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .exceptions import NumericError, UsageError

SYMMETRY_TOL = 1e-9
EIGEN_FLOOR = 1e-12


def _frozen(a, dtype=float):
    a = np.array(a, dtype=dtype, copy=True)
    a.flags.writeable = False
    return a


def symmetrize(a):
    return 0.5 * (a + np.swapaxes(a, -1, -2))


def is_spd(a) -> bool:
    try:
        np.linalg.cholesky(a)
    except np.linalg.LinAlgError:
        return False
    return bool(np.all(np.isfinite(a)))


def ensure_spd(a, jitter=EIGEN_FLOOR):
    """Re-symmetrize ``a`` and add diagonal jitter until it factors.

    Returns ``(matrix, n_jitter)``; ``n_jitter`` counts jitter additions.
    """
    a = symmetrize(a)
    if not np.all(np.isfinite(a)):
        raise NumericError("non-finite dispersion matrix")
    eye = np.eye(a.shape[-1])
    n = 0
    step = jitter
    while not is_spd(a):
        a = a + step * eye
        n += 1
        step *= 10.0
        if n > 40:
            raise NumericError("could not restore positive-definiteness")
    return a, n


@dataclass(frozen=True)
class Sample:
    """One labelled observation."""

    x: np.ndarray
    y: int

    def __post_init__(self):
        x = _frozen(np.atleast_1d(self.x))
        if x.ndim != 1 or not np.all(np.isfinite(x)):
            raise UsageError("sample features must be a finite 1-D vector")
        if int(self.y) < 0:
            raise UsageError("class labels must be non-negative")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", int(self.y))


@dataclass(frozen=True, eq=False)
class Rule:
    """An immutable ellipsoidal rule.

    Attributes
    ----------
    center : (p,) array
    inv_dispersion : (p, p) SPD array
    support : int
        Number of samples the rule has absorbed.
    consequent : (p + 1, n_classes) array
        Column ``o`` is the linear model for class ``o`` over ``[1, x]``.
    rls_cov : (p + 1, p + 1) SPD array
        Learner-local RLS covariance. Not persisted, reset on merge.
    """

    center: np.ndarray
    inv_dispersion: np.ndarray
    support: int
    consequent: np.ndarray
    rls_cov: np.ndarray = None

    def __post_init__(self):
        c = _frozen(np.atleast_1d(self.center))
        p = c.shape[0]
        a = np.atleast_2d(np.asarray(self.inv_dispersion, dtype=float))
        w = np.asarray(self.consequent, dtype=float)
        if w.ndim == 1:
            w = w.reshape(p + 1, -1)
        if a.shape != (p, p):
            raise UsageError(f"inv_dispersion must be {p}x{p}, got {a.shape}")
        if w.shape[0] != p + 1:
            raise UsageError(f"consequent must have {p + 1} rows, got {w.shape[0]}")
        if not np.all(np.isfinite(c)) or not np.all(np.isfinite(w)):
            raise NumericError("rule parameters must be finite")
        if np.max(np.abs(a - a.T), initial=0.0) > SYMMETRY_TOL * max(1.0, np.max(np.abs(a))):
            raise NumericError("inv_dispersion is not symmetric")
        if not is_spd(a):
            raise NumericError("inv_dispersion is not positive-definite")
        if int(self.support) < 1 or int(self.support) != self.support:
            raise UsageError("support must be a positive integer")
        if self.rls_cov is None:
            cov = 1e5 * np.eye(p + 1)
        else:
            cov = np.atleast_2d(np.asarray(self.rls_cov, dtype=float))
            if cov.shape != (p + 1, p + 1):
                raise UsageError("rls_cov has the wrong shape")
        object.__setattr__(self, "center", c)
        object.__setattr__(self, "inv_dispersion", _frozen(a))
        object.__setattr__(self, "support", int(self.support))
        object.__setattr__(self, "consequent", _frozen(w))
        object.__setattr__(self, "rls_cov", _frozen(cov))

    @property
    def p(self) -> int:
        return self.center.shape[0]

    @property
    def n_classes(self) -> int:
        return self.consequent.shape[1]

    def outputs(self, x) -> np.ndarray:
        """Per-class linear outputs at ``x``."""
        x = np.asarray(x, dtype=float)
        return self.consequent[0] + x @ self.consequent[1:]

    def same_as(self, other: "Rule", include_rls=False) -> bool:
        """Exact (bitwise) equality of the persisted fields."""
        ok = (
            self.support == other.support
            and np.array_equal(self.center, other.center)
            and np.array_equal(self.inv_dispersion, other.inv_dispersion)
            and np.array_equal(self.consequent, other.consequent)
        )
        if include_rls:
            ok = ok and np.array_equal(self.rls_cov, other.rls_cov)
        return ok


@dataclass(frozen=True, eq=False)
class RuleBase:
    """Ordered rules sharing input dimension ``p`` and class count.

    ``origin`` is a free-form provenance tag: a partition index or ``"fused"``.
    """

    rules: tuple
    p: int
    n_classes: int
    origin: object = None

    def __post_init__(self):
        rules = tuple(self.rules)
        for r in rules:
            if r.p != self.p or r.n_classes != self.n_classes:
                raise UsageError(
                    f"rule of shape (p={r.p}, classes={r.n_classes}) does not fit "
                    f"base (p={self.p}, classes={self.n_classes})"
                )
        object.__setattr__(self, "rules", rules)

    def __len__(self):
        return len(self.rules)

    def __iter__(self):
        return iter(self.rules)

    def __getitem__(self, i):
        return self.rules[i]

    @property
    def total_support(self) -> int:
        return sum(r.support for r in self.rules)

    def same_as(self, other: "RuleBase", include_rls=False) -> bool:
        return (
            self.p == other.p
            and self.n_classes == other.n_classes
            and len(self) == len(other)
            and all(a.same_as(b, include_rls) for a, b in zip(self.rules, other.rules))
        )


def _check_x(rule: Rule, x) -> np.ndarray:
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if x.shape != (rule.p,):
        raise UsageError(f"expected a vector of length {rule.p}, got shape {x.shape}")
    return x


def mahalanobis_sq(rule: Rule, x) -> float:
    d = _check_x(rule, x) - rule.center
    return float(d @ rule.inv_dispersion @ d)


def firing_strength(rule: Rule, x) -> float:
    """Gaussian membership ``exp(-0.5 (x - c)^T A (x - c))``."""
    val = math.exp(-0.5 * mahalanobis_sq(rule, x))
    if not math.isfinite(val):
        raise NumericError("non-finite firing strength")
    return val


def log_unit_ball_volume(p: int) -> float:
    return 0.5 * p * math.log(math.pi) - math.lgamma(0.5 * p + 1.0)


def log_volume_from_logdet(p: int, logdet):
    return log_unit_ball_volume(p) - 0.5 * np.asarray(logdet)


def _logdet_spd(a):
    sign, logdet = np.linalg.slogdet(a)
    if np.any(sign <= 0) or not np.all(np.isfinite(logdet)):
        raise NumericError("inverse dispersion has non-positive determinant")
    return logdet


def rule_volume(rule: Rule) -> float:
    """Volume of the unit-Mahalanobis ellipsoid ``{x : (x-c)^T A (x-c) <= 1}``."""
    vol = math.exp(float(log_volume_from_logdet(rule.p, _logdet_spd(rule.inv_dispersion))))
    if not (math.isfinite(vol) and vol > 0):
        raise NumericError("rule volume is not finite and positive")
    return vol


def contributions_from_logvol(log_vol) -> np.ndarray:
    lv = np.asarray(log_vol, dtype=float)
    w = np.exp(lv - lv.max())
    return w / w.sum()


def contributions(base: RuleBase) -> np.ndarray:
    """Volume share of every rule; sums to one."""
    if len(base) == 0:
        raise UsageError("statistical contribution of an empty rule base")
    a = np.stack([r.inv_dispersion for r in base.rules])
    return contributions_from_logvol(log_volume_from_logdet(base.p, _logdet_spd(a)))


def statistical_contribution(base: RuleBase, i: int) -> float:
    if len(base) == 0:
        raise UsageError("statistical contribution of an empty rule base")
    if not 0 <= i < len(base):
        raise UsageError(f"rule index {i} out of range for {len(base)} rules")
    return float(contributions(base)[i])


class RuleArrays:
    """Mutable stacked view of a rule base used inside learners and fusion.

    Rows are rules in canonical order. Only the owning learner or fusion call
    mutates it; :meth:`to_base` copies into immutable :class:`Rule` objects.
    """

    def __init__(self, centers, inv_disp, support, consequent, rls_cov, n_classes):
        self.centers = centers
        self.inv_disp = inv_disp
        self.support = support
        self.consequent = consequent
        self.rls_cov = rls_cov
        self.n_classes = n_classes

    @classmethod
    def empty(cls, p, n_classes):
        return cls(
            np.empty((0, p)),
            np.empty((0, p, p)),
            np.empty(0, dtype=np.int64),
            np.empty((0, p + 1, n_classes)),
            np.empty((0, p + 1, p + 1)),
            n_classes,
        )

    @classmethod
    def from_rules(cls, rules: Sequence[Rule], p, n_classes):
        if not rules:
            return cls.empty(p, n_classes)
        return cls(
            np.stack([r.center for r in rules]),
            np.stack([r.inv_dispersion for r in rules]),
            np.array([r.support for r in rules], dtype=np.int64),
            np.stack([r.consequent for r in rules]),
            np.stack([r.rls_cov for r in rules]),
            n_classes,
        )

    @classmethod
    def from_base(cls, base: RuleBase):
        return cls.from_rules(base.rules, base.p, base.n_classes)

    @property
    def p(self):
        return self.centers.shape[1]

    def __len__(self):
        return self.centers.shape[0]

    def append(self, center, inv_disp, support, consequent, rls_cov):
        self.centers = np.concatenate([self.centers, center[None]])
        self.inv_disp = np.concatenate([self.inv_disp, inv_disp[None]])
        self.support = np.append(self.support, np.int64(support))
        self.consequent = np.concatenate([self.consequent, consequent[None]])
        self.rls_cov = np.concatenate([self.rls_cov, rls_cov[None]])

    def keep(self, mask_or_index):
        self.centers = self.centers[mask_or_index]
        self.inv_disp = self.inv_disp[mask_or_index]
        self.support = self.support[mask_or_index]
        self.consequent = self.consequent[mask_or_index]
        self.rls_cov = self.rls_cov[mask_or_index]

    def copy(self):
        return RuleArrays(
            self.centers.copy(),
            self.inv_disp.copy(),
            self.support.copy(),
            self.consequent.copy(),
            self.rls_cov.copy(),
            self.n_classes,
        )

    def logdets(self):
        return _logdet_spd(self.inv_disp) if len(self) else np.empty(0)

    def rule(self, i) -> Rule:
        return Rule(
            self.centers[i],
            self.inv_disp[i],
            int(self.support[i]),
            self.consequent[i],
            self.rls_cov[i],
        )

    def to_base(self, origin=None) -> RuleBase:
        return RuleBase(tuple(self.rule(i) for i in range(len(self))), self.p, self.n_classes, origin)
