import numpy as np
import pytest
from hypothesis import strategies as st

from panfis_fuse.rule_model import Rule, RuleBase


def make_rule(center, inv=None, support=1, n_classes=2, consequent=None):
    center = np.atleast_1d(np.asarray(center, dtype=float))
    p = center.shape[0]
    inv = np.eye(p) if inv is None else np.atleast_2d(np.asarray(inv, dtype=float))
    if consequent is None:
        consequent = np.zeros((p + 1, n_classes))
        consequent[0, 0] = 1.0
    return Rule(center, inv, support, consequent)


def make_base(rules, origin=None):
    return RuleBase(tuple(rules), rules[0].p, rules[0].n_classes, origin)


def random_spd(rng, p, lo=0.05, hi=20.0):
    q, _ = np.linalg.qr(rng.standard_normal((p, p)))
    eig = np.exp(rng.uniform(np.log(lo), np.log(hi), size=p))
    a = (q * eig) @ q.T
    return 0.5 * (a + a.T)


def random_rule(rng, p, n_classes=3, support=None):
    return Rule(
        rng.normal(0, 3, size=p),
        random_spd(rng, p),
        int(rng.integers(1, 500)) if support is None else support,
        rng.normal(0, 1, size=(p + 1, n_classes)),
    )


seeds = st.integers(min_value=0, max_value=2**32 - 1)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
