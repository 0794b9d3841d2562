import math

import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from fsb.classifier import (
    AdamState,
    HeadClassifier,
    HeadModel,
    TrainConfig,
    adam_step,
    init_head,
    load_head,
    loss_and_grad,
    predict,
    predict_proba,
    save_head,
    softmax,
    train_head,
)
from fsb.errors import (
    DegenerateInput,
    LabelOutOfRange,
    NonFiniteInput,
    ShapeMismatch,
)


def linear_model(W2, b2=None):
    W2 = np.asarray(W2, dtype=np.float64)
    return HeadModel(W1=None, b1=None, W2=W2, b2=b2 if b2 is not None else np.zeros(W2.shape[0]))


class TestSoftmax:
    def test_uniform_on_equal_logits(self):
        np.testing.assert_allclose(softmax([0.0, 0.0, 0.0]), [1 / 3] * 3, atol=1e-15)

    def test_large_magnitude_does_not_overflow(self):
        p = softmax([1000.0, 0.0])
        assert p[0] == pytest.approx(1.0)
        assert p[1] == pytest.approx(0.0, abs=1e-300)
        assert np.isfinite(p).all()

    def test_closed_form_log_ratio(self):
        p = softmax(np.log([1.0, 2.0, 3.0]))
        np.testing.assert_allclose(p, [1 / 6, 2 / 6, 3 / 6], atol=1e-15)

    def test_rows_sum_to_one(self):
        rng = np.random.default_rng(0)
        logits = rng.normal(scale=100, size=(50, 7))
        sums = softmax(logits).sum(axis=1)
        np.testing.assert_allclose(sums, 1.0, atol=1e-12)

    def test_rejects_non_finite(self):
        with pytest.raises(NonFiniteInput):
            softmax([np.nan, 0.0])


class TestLossAndGrad:
    def test_zero_weights_balanced_two_class(self):
        model = linear_model(np.zeros((2, 4)))
        X = np.random.default_rng(0).normal(size=(6, 4))
        y = np.array([0, 1, 0, 1, 0, 1])
        loss, _ = loss_and_grad(model, X, y, l2_lambda=0.0)
        assert loss == pytest.approx(math.log(2), rel=1e-12)

    def test_penalty_is_exactly_lambda_times_square_sum(self):
        rng = np.random.default_rng(1)
        cfg = TrainConfig(hidden_size=5, seed=3)
        model = init_head(4, 3, cfg)
        X = rng.normal(size=(7, 4))
        y = rng.integers(0, 3, size=7)
        loss0, _ = loss_and_grad(model, X, y, l2_lambda=0.0)
        loss1, _ = loss_and_grad(model, X, y, l2_lambda=0.7)
        square_sum = np.sum(model.W1**2) + np.sum(model.W2**2)
        assert loss1 - loss0 == pytest.approx(0.7 * square_sum, rel=1e-12)

    @pytest.mark.parametrize("hidden", [0, 5])
    @pytest.mark.parametrize("lam", [0.0, 0.3])
    def test_gradients_match_finite_differences(self, hidden, lam):
        rel = max_gradcheck_error(seed=hidden * 7 + int(lam * 10), hidden=hidden, lam=lam)
        assert rel < 1e-5

    def test_label_out_of_range(self):
        model = linear_model(np.zeros((2, 3)))
        with pytest.raises(LabelOutOfRange):
            loss_and_grad(model, np.zeros((1, 3)), [2], 0.0)

    def test_shape_mismatch(self):
        model = linear_model(np.zeros((2, 3)))
        with pytest.raises(ShapeMismatch):
            loss_and_grad(model, np.zeros((1, 4)), [0], 0.0)


def max_gradcheck_error(seed, hidden, lam, input_dim=7, ways=3, rows=4, h=1e-6):
    """Max relative error of analytic vs central-difference gradients."""
    rng = np.random.default_rng(seed)
    cfg = TrainConfig(hidden_size=hidden, seed=seed)
    X = rng.normal(size=(rows, input_dim))
    y = rng.integers(0, ways, size=rows)
    model = init_head(input_dim, ways, cfg)
    # keep hidden pre-activations away from the ReLU kink that finite
    # differences cannot cross
    if hidden:
        pre = X @ model.W1.T + model.b1
        assert np.abs(pre).min() > 1e-4, "resample the seed"
    _, grads = loss_and_grad(model, X, y, lam)
    worst = 0.0
    for name, param in model.params().items():
        flat = param.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + h
            up, _ = loss_and_grad(model, X, y, lam)
            flat[i] = orig - h
            down, _ = loss_and_grad(model, X, y, lam)
            flat[i] = orig
            numeric = (up - down) / (2 * h)
            analytic = grads[name].reshape(-1)[i]
            denom = max(abs(analytic), abs(numeric), 1e-3)
            worst = max(worst, abs(analytic - numeric) / denom)
    return worst


class TestAdam:
    def test_zero_gradient_leaves_weights_unchanged(self):
        model = linear_model(np.array([[1.0, -2.0]]))
        before = model.W2.copy()
        state = AdamState()
        zero = {"W2": np.zeros_like(model.W2), "b2": np.zeros_like(model.b2)}
        for t in range(1, 6):
            adam_step(model, zero, state, TrainConfig(), t)
        np.testing.assert_array_equal(model.W2, before)

    def test_first_step_magnitude(self):
        cfg = TrainConfig(learning_rate=0.05)
        model = linear_model(np.array([[0.0]]))
        grads = {"W2": np.array([[0.3]]), "b2": np.zeros(1)}
        adam_step(model, grads, AdamState(), cfg, 1)
        expected = -cfg.learning_rate * 0.3 / (abs(0.3) + cfg.adam_eps)
        assert model.W2[0, 0] == pytest.approx(expected, rel=1e-9)

    def test_matches_scalar_reference(self):
        # independent transcription of Adam with bias correction
        cfg = TrainConfig(learning_rate=0.01)
        g_seq = [0.5, -1.25, 0.03, 2.0, -0.6]
        w_ref, m, v = 0.2, 0.0, 0.0
        for t, g in enumerate(g_seq, start=1):
            m = cfg.adam_beta1 * m + (1 - cfg.adam_beta1) * g
            v = cfg.adam_beta2 * v + (1 - cfg.adam_beta2) * g * g
            m_hat = m / (1 - cfg.adam_beta1**t)
            v_hat = v / (1 - cfg.adam_beta2**t)
            w_ref -= cfg.learning_rate * m_hat / (math.sqrt(v_hat) + cfg.adam_eps)

        model = linear_model(np.array([[0.2]]))
        state = AdamState()
        for t, g in enumerate(g_seq, start=1):
            grads = {"W2": np.array([[g]]), "b2": np.zeros(1)}
            adam_step(model, grads, state, cfg, t)
        assert model.W2[0, 0] == pytest.approx(w_ref, rel=1e-14)

    def test_rejects_step_zero(self):
        model = linear_model(np.zeros((1, 1)))
        with pytest.raises(ValueError):
            adam_step(model, {"W2": np.zeros((1, 1)), "b2": np.zeros(1)}, AdamState(), TrainConfig(), 0)


class TestTrainHead:
    def test_orthogonal_one_shot_reaches_perfect_train_accuracy(self):
        X = np.eye(2)
        y = np.array([0, 1])
        cfg = TrainConfig(learning_rate=1e-3, epochs=100, hidden_size=0, l2_lambda=0.0)
        model, trace = train_head(X, y, 2, cfg)
        assert (predict(model, X) == y).all()
        assert len(trace.per_epoch_loss) == 100
        assert trace.per_epoch_loss[-1] < trace.per_epoch_loss[0]

    def test_huge_penalty_drives_predictions_uniform(self):
        rng = np.random.default_rng(2)
        X = rng.normal(size=(10, 6))
        y = np.arange(10) % 2
        # step budget lr * epochs must cover the distance from init to zero;
        # Adam then oscillates around the penalty minimum at step-size scale
        cfg = TrainConfig(learning_rate=1e-2, epochs=300, hidden_size=0, l2_lambda=1e6)
        model, _ = train_head(X, y, 2, cfg)
        assert np.abs(model.W2).max() < 1e-2
        proba = predict_proba(model, X)
        np.testing.assert_allclose(proba, 0.5, atol=2e-2)

    def test_training_accuracy_non_increasing_in_penalty(self):
        rng = np.random.default_rng(5)
        X = np.vstack([rng.normal(loc=m, size=(8, 12)) for m in (-2.0, 0.0, 2.0)])
        y = np.repeat(np.arange(3), 8)
        accs = []
        for lam in (0.0, 0.1, 1.0, 10.0):
            cfg = TrainConfig(learning_rate=1e-2, epochs=150, hidden_size=0,
                              l2_lambda=lam, seed=9)
            model, _ = train_head(X, y, 3, cfg)
            accs.append(float(np.mean(predict(model, X) == y)))
        assert all(a >= b for a, b in zip(accs, accs[1:]))

    def test_separated_gaussians_generalize(self):
        rng = np.random.default_rng(3)
        means = 20.0 * np.eye(5, 16)
        X_train = np.vstack([rng.normal(loc=means[c], size=(5, 16)) for c in range(5)])
        X_query = np.vstack([rng.normal(loc=means[c], size=(40, 16)) for c in range(5)])
        y_train = np.repeat(np.arange(5), 5)
        y_query = np.repeat(np.arange(5), 40)
        cfg = TrainConfig(learning_rate=1e-2, epochs=100, hidden_size=8, l2_lambda=0.1)
        model, _ = train_head(X_train, y_train, 5, cfg)
        assert np.mean(predict(model, X_query) == y_query) >= 0.99

    def test_same_seed_same_weights(self):
        rng = np.random.default_rng(4)
        X = rng.normal(size=(6, 5))
        y = np.array([0, 1, 2, 0, 1, 2])
        cfg = TrainConfig(epochs=30, hidden_size=4, seed=123)
        a, _ = train_head(X, y, 3, cfg)
        b, _ = train_head(X, y, 3, cfg)
        np.testing.assert_array_equal(a.W1, b.W1)
        np.testing.assert_array_equal(a.W2, b.W2)

    def test_missing_class_is_degenerate(self):
        with pytest.raises(DegenerateInput):
            train_head(np.eye(3), [0, 0, 1], 3, TrainConfig(hidden_size=0))

    def test_empty_support_rejected(self):
        with pytest.raises(ShapeMismatch):
            train_head(np.empty((0, 3)), [], 2, TrainConfig())


class TestPredict:
    def test_zero_weight_model_is_uniform(self):
        model = linear_model(np.zeros((4, 3)))
        proba = predict_proba(model, np.random.default_rng(0).normal(size=(5, 3)))
        np.testing.assert_allclose(proba, 0.25, atol=1e-15)

    def test_duplicate_queries_get_identical_rows(self):
        model = linear_model(np.random.default_rng(1).normal(size=(3, 4)))
        X = np.random.default_rng(2).normal(size=(1, 4))
        proba = predict_proba(model, np.vstack([X, X]))
        np.testing.assert_array_equal(proba[0], proba[1])

    def test_rows_sum_to_one(self):
        model = linear_model(np.random.default_rng(1).normal(size=(3, 4)))
        proba = predict_proba(model, np.random.default_rng(3).normal(size=(20, 4)))
        np.testing.assert_allclose(proba.sum(axis=1), 1.0, atol=1e-12)

    def test_width_mismatch(self):
        model = linear_model(np.zeros((2, 3)))
        with pytest.raises(ShapeMismatch):
            predict_proba(model, np.zeros((1, 4)))

    def test_class_permutation_equivariance(self):
        rng = np.random.default_rng(6)
        cfg = TrainConfig(hidden_size=5, seed=8)
        model = init_head(4, 3, cfg)
        X = rng.normal(size=(10, 4))
        perm = np.array([2, 0, 1])
        permuted = HeadModel(
            W1=model.W1, b1=model.b1, W2=model.W2[perm], b2=model.b2[perm]
        )
        base = predict_proba(model, X)
        # softmax normalization sums in permuted order: equal up to 1 ulp
        np.testing.assert_allclose(predict_proba(permuted, X), base[:, perm], atol=1e-15)
        # argmax maps through the permutation wherever the max is strict
        inverse = np.argsort(perm)
        strict = np.ptp(np.sort(base, axis=1)[:, -2:], axis=1) > 1e-9
        assert strict.any()
        np.testing.assert_array_equal(
            predict(permuted, X)[strict], inverse[predict(model, X)][strict]
        )


class TestSerialization:
    @pytest.mark.parametrize("hidden", [0, 6])
    def test_round_trip(self, tmp_path, hidden):
        model = init_head(5, 3, TrainConfig(hidden_size=hidden, seed=2))
        path = tmp_path / "head.fsbh"
        save_head(path, model)
        loaded = load_head(path)
        assert loaded.hidden_size == hidden
        np.testing.assert_array_equal(loaded.W2, model.W2)
        np.testing.assert_array_equal(loaded.b2, model.b2)
        if hidden:
            np.testing.assert_array_equal(loaded.W1, model.W1)
            np.testing.assert_array_equal(loaded.b1, model.b1)

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "junk.fsbh"
        path.write_bytes(b"WHAT" + b"\x00" * 16)
        with pytest.raises(ValueError, match="magic"):
            load_head(path)


class TestHeadClassifierEstimator:
    def make_blobs(self):
        rng = np.random.default_rng(11)
        X = np.vstack([rng.normal(loc=m, size=(12, 6)) for m in (-3.0, 3.0)])
        y = np.array(["cat"] * 12 + ["dog"] * 12)
        return X, y

    def test_fit_predict_with_string_labels(self):
        X, y = self.make_blobs()
        clf = HeadClassifier(learning_rate=1e-2, epochs=80, hidden_size=0, l2_lambda=0.1)
        clf.fit(X, y)
        assert set(clf.predict(X)) <= {"cat", "dog"}
        assert clf.score(X, y) == 1.0
        np.testing.assert_allclose(clf.predict_proba(X).sum(axis=1), 1.0, atol=1e-12)

    def test_sklearn_params_protocol(self):
        clf = HeadClassifier(epochs=17, hidden_size=3)
        assert clone(clf).get_params() == clf.get_params()
        clf.set_params(epochs=20)
        assert clf.get_params()["epochs"] == 20

    def test_unfitted_predict_raises(self):
        with pytest.raises(NotFittedError):
            HeadClassifier().predict(np.zeros((1, 2)))
