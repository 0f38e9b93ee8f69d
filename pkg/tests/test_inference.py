import numpy as np
import pytest

from panfis_fuse.data import SynthConfig, synth_rss
from panfis_fuse.exceptions import UsageError
from panfis_fuse.inference import decision_scores, evaluate, predict, predict_labels
from panfis_fuse.learner import LearnerConfig, learn_arrays
from panfis_fuse.rule_model import Rule, RuleBase

from conftest import make_base, make_rule, random_rule


def const_rule(center, outputs, inv=1.0, support=1):
    w = np.zeros((2, len(outputs)))
    w[0] = outputs
    return make_rule(center, [[inv]], support=support, consequent=w)


def scaled(base, k):
    return RuleBase(
        tuple(Rule(r.center, r.inv_dispersion, r.support, k * r.consequent) for r in base),
        base.p, base.n_classes,
    )


class TestPredict:
    def test_single_rule(self):
        pred = predict(make_base([const_rule(0.0, [0.9, 0.1])]), [0.7])
        assert pred.label == 0
        np.testing.assert_allclose(pred.scores, [0.9, 0.1], atol=1e-15)

    def test_symmetric_blend_ties_low(self):
        base = make_base([const_rule(-1.0, [1.0, 0.0]), const_rule(1.0, [0.0, 1.0])])
        pred = predict(base, [0.0])
        np.testing.assert_allclose(pred.scores, [0.5, 0.5], atol=1e-15)
        assert pred.label == 0

    def test_underflow_falls_back_to_nearest(self):
        w_near = np.array([[0.2, 0.1, 0.0], [0.0, 0.0, 0.01]])
        base = make_base([
            const_rule(0.0, [1.0, 0.0, 0.0]),
            make_rule(3.0, [[1.0]], consequent=w_near),
        ])
        x = 103.0
        assert np.exp(-0.5 * 100.0**2) == 0.0
        pred = predict(base, [x])
        expected = base[1].outputs([x])
        np.testing.assert_allclose(pred.scores, expected)
        assert pred.label == int(np.argmax(expected)) == 2

    def test_empty_base(self):
        with pytest.raises(UsageError):
            predict(RuleBase((), 1, 2), [0.0])

    def test_dimension_mismatch(self):
        with pytest.raises(UsageError):
            predict(make_base([make_rule([0.0, 0.0])]), [0.0])

    def test_argmax_scale_invariance(self, rng):
        base = make_base([random_rule(rng, 2, n_classes=4) for _ in range(7)])
        X = rng.normal(0, 4, size=(500, 2))
        ref = predict_labels(base, X)
        for k in (0.01, 3.0, 1e4):
            np.testing.assert_array_equal(predict_labels(scaled(base, k), X), ref)

    def test_rule_order_invariance(self, rng):
        rules = [random_rule(rng, 3, n_classes=4) for _ in range(9)]
        X = rng.normal(0, 3, size=(400, 3))
        ref = decision_scores(make_base(rules), X)
        perm = rng.permutation(len(rules))
        got = decision_scores(make_base([rules[i] for i in perm]), X)
        np.testing.assert_allclose(got, ref, atol=1e-12, rtol=0)
        np.testing.assert_array_equal(np.argmax(got, 1), np.argmax(ref, 1))

    def test_batch_matches_single(self, rng):
        base = make_base([random_rule(rng, 2) for _ in range(5)])
        X = rng.normal(0, 3, size=(20, 2))
        batch = decision_scores(base, X)
        for x, row in zip(X, batch):
            np.testing.assert_allclose(predict(base, x).scores, row, atol=1e-14)


class TestEvaluate:
    def test_separated_centers(self):
        data = synth_rss(SynthConfig(n=4000, class_means=[0.0, 30.0, 60.0, 90.0], sigma=1.0, seed=2))
        base = learn_arrays(data.X, data.y, LearnerConfig().resolve(data.X), 4)
        m = evaluate(base, np.array([[0.0], [30.0], [60.0], [90.0]]), np.arange(4))
        assert m.accuracy == 1.0

    def test_single_class(self):
        base = make_base([const_rule(0.0, [0.0, 1.0, 0.0])])
        X = np.linspace(-3, 3, 25)[:, None]
        m = evaluate(base, X, np.ones(25, dtype=int))
        assert m.accuracy == 1.0
        assert m.confusion[1, 1] == 25
        assert m.confusion.sum() == 25

    def test_random_labels_chance(self, rng):
        data = synth_rss(SynthConfig(n=20000, seed=9))
        base = learn_arrays(data.X, data.y, LearnerConfig().resolve(data.X), 4)
        X = rng.uniform(-80, -44, size=(40000, 1))
        y = rng.integers(0, 4, size=40000)
        # binomial sd at n=40000 is ~0.0022, so 0.02 is ~9 sd
        assert abs(evaluate(base, X, y).accuracy - 0.25) <= 0.02

    def test_invariants_and_purity(self, rng):
        base = make_base([random_rule(rng, 1, n_classes=3) for _ in range(4)])
        X = rng.normal(0, 3, size=(300, 1))
        y = rng.integers(0, 3, size=300)
        a, b = evaluate(base, X, y), evaluate(base, X, y)
        assert a.confusion.sum() == a.n == 300
        assert a.accuracy == np.trace(a.confusion) / 300
        np.testing.assert_array_equal(a.confusion, b.confusion)

    def test_errors(self):
        base = make_base([make_rule(0.0)])
        with pytest.raises(UsageError):
            evaluate(base, np.empty((0, 1)), np.empty(0, dtype=int))
        with pytest.raises(UsageError):
            evaluate(base, np.zeros((3, 2)), np.zeros(3, dtype=int))
        with pytest.raises(UsageError):
            evaluate(base, np.zeros((3, 1)), np.array([0, 1, 5]))
