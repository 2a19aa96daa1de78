import math

import numpy as np
import pytest

from aoml import neuralcore as nc
from aoml.errors import NonFiniteLoss, ShapeMismatch
from aoml.neuralcore import Adam, Parameter, RandomSource, grad_check


class TestRandomSource:
    def test_same_seed_same_draws(self):
        a = RandomSource(99).normal((3, 4))
        b = RandomSource(99).normal((3, 4))
        np.testing.assert_array_equal(a, b)

    def test_fork_is_deterministic_and_independent_of_order(self):
        root = RandomSource(5)
        x = root.fork("a").normal((2, 2))
        root.normal((10, 10))  # consume from the parent stream
        y = RandomSource(5).fork("a").normal((2, 2))
        np.testing.assert_array_equal(x, y)

    def test_forks_differ_by_tag(self):
        root = RandomSource(5)
        assert root.fork("a").seed != root.fork("b").seed


class TestPrimitives:
    def test_row_softmax_rows_sum_to_one(self):
        rng = np.random.default_rng(1)
        x = rng.normal(size=(7, 9)).astype(np.float32) * 10
        s, _ = nc.row_softmax(x)
        np.testing.assert_allclose(s.sum(axis=-1), 1.0, atol=1e-5)

    def test_cross_entropy_uniform_logits_is_log_k(self):
        logits = np.zeros((4, 5), dtype=np.float32)
        targets = np.array([0, 1, 2, 4])
        loss, _ = nc.cross_entropy(logits, targets)
        assert loss == pytest.approx(math.log(5), abs=1e-5)

    def test_cross_entropy_respects_mask(self):
        logits = np.zeros((3, 5), dtype=np.float32)
        logits[2, :] = np.array([100, 0, 0, 0, 0])
        mask = np.array([True, True, False])
        loss, _ = nc.cross_entropy(logits, np.array([0, 0, 1]), mask)
        assert loss == pytest.approx(math.log(5), abs=1e-5)

    def test_dropout_p0_is_identity(self):
        x = np.ones((4, 4), dtype=np.float32)
        out, back = nc.dropout(x, 0.0, RandomSource(0))
        np.testing.assert_array_equal(out, x)
        np.testing.assert_array_equal(back(x)[0], x)

    def test_dropout_eval_is_identity(self):
        x = np.ones((4, 4), dtype=np.float32)
        out, _ = nc.dropout(x, 0.9, RandomSource(0), train=False)
        np.testing.assert_array_equal(out, x)

    def test_dropout_scales_kept_entries(self):
        x = np.ones((100, 100), dtype=np.float32)
        out, _ = nc.dropout(x, 0.25, RandomSource(3))
        kept = out[out != 0]
        np.testing.assert_allclose(kept, 1 / 0.75, rtol=1e-6)
        assert abs(kept.size / x.size - 0.75) < 0.02

    def test_dropout_deterministic_for_seed(self):
        x = np.ones((10, 10), dtype=np.float32)
        a, _ = nc.dropout(x, 0.5, RandomSource(8))
        b, _ = nc.dropout(x, 0.5, RandomSource(8))
        np.testing.assert_array_equal(a, b)

    def test_sigmoid_matches_formula_and_is_stable(self):
        x = np.array([-500.0, -2.0, 0.0, 2.0, 500.0], dtype=np.float32)
        s, _ = nc.sigmoid(x)
        assert s[2] == pytest.approx(0.5)
        assert s[1] == pytest.approx(1 / (1 + math.exp(2)), rel=1e-5)
        assert np.all(np.isfinite(s))

    def test_bce_matches_manual(self):
        logits = np.array([0.3, -1.2, 2.0], dtype=np.float32)
        targets = np.array([1.0, 0.0, 1.0], dtype=np.float32)
        loss, _ = nc.binary_cross_entropy(logits, targets)
        p = 1 / (1 + np.exp(-logits.astype(np.float64)))
        manual = -np.mean(targets * np.log(p) + (1 - targets) * np.log(1 - p))
        assert loss == pytest.approx(manual, rel=1e-5)

    def test_matmul_shape_mismatch(self):
        with pytest.raises(ShapeMismatch):
            nc.matmul(np.ones((2, 3), np.float32), np.ones((4, 2), np.float32))

    def test_bias_add_shape_mismatch(self):
        with pytest.raises(ShapeMismatch):
            nc.bias_add(np.ones((2, 3), np.float32), np.ones((1, 4), np.float32))

    def test_layer_norm_normalizes_rows(self):
        rng = np.random.default_rng(4)
        x = rng.normal(size=(5, 16)).astype(np.float32) * 3 + 2
        gamma = np.ones((1, 16), np.float32)
        beta = np.zeros((1, 16), np.float32)
        out, _ = nc.layer_norm(x, gamma, beta)
        np.testing.assert_allclose(out.mean(axis=-1), 0.0, atol=1e-5)
        np.testing.assert_allclose(out.std(axis=-1), 1.0, atol=1e-3)

    def test_gelu_known_values(self):
        x = np.array([0.0, 1.0, -1.0], dtype=np.float32)
        out, _ = nc.gelu(x)
        assert out[0] == 0.0
        assert out[1] == pytest.approx(0.8413447, abs=1e-5)
        assert out[2] == pytest.approx(-0.1586553, abs=1e-5)

    def test_finite_inputs_give_finite_outputs(self):
        rng = np.random.default_rng(12)
        x = (rng.normal(size=(6, 8)) * 20).astype(np.float32)
        for out in (nc.row_softmax(x)[0], nc.gelu(x)[0], nc.sigmoid(x)[0]):
            assert np.all(np.isfinite(out))


class TestAdam:
    def test_zero_gradient_leaves_parameters_unchanged(self):
        p = Parameter("w", np.full((2, 2), 3.0, dtype=np.float32))
        before = p.value.copy()
        Adam([p], lr=0.5).step()
        np.testing.assert_array_equal(p.value, before)

    def test_first_step_magnitude_is_about_lr(self):
        p = Parameter("w", np.array([[1.0]], dtype=np.float32))
        p.grad[...] = 1.0
        Adam([p], lr=0.1).step()
        # bias-corrected first step: lr * g / (|g| + eps) = lr
        assert p.value[0, 0] == pytest.approx(0.9, abs=1e-6)

    def test_deterministic_across_runs(self):
        def run():
            rs = RandomSource(17)
            p = Parameter("w", rs.normal((4, 4)))
            opt = Adam([p], lr=1e-2)
            for i in range(5):
                p.grad[...] = rs.normal((4, 4))
                opt.step()
            return p.value
        np.testing.assert_array_equal(run(), run())

    def test_grads_zeroed_after_step(self):
        p = Parameter("w", np.ones((2, 2), dtype=np.float32))
        p.grad[...] = 1.0
        Adam([p]).step()
        np.testing.assert_array_equal(p.grad, 0.0)

    def test_step_counter(self):
        p = Parameter("w", np.ones((1, 1), dtype=np.float32))
        opt = Adam([p])
        opt.step()
        opt.step()
        assert opt.t == 2

    def test_duplicate_names_rejected(self):
        a = Parameter("w", np.ones((1, 1), dtype=np.float32))
        b = Parameter("w", np.ones((1, 1), dtype=np.float32))
        with pytest.raises(ValueError):
            Adam([a, b])


class TestGradCheck:
    def test_identity_loss(self):
        p = Parameter("w", np.array([[2.0]], dtype=np.float32))

        def loss_fn():
            p.grad += 1.0
            return float(p.value[0, 0])

        assert grad_check(loss_fn, [p]) < 1e-6

    def test_linear_plus_cross_entropy(self):
        rs = RandomSource(2)
        w = Parameter("w", rs.normal((6, 4), std=0.5))
        b = Parameter("b", rs.normal((1, 4), std=0.5))
        x = rs.normal((3, 6))
        targets = np.array([0, 3, 1])

        def loss_fn():
            logits = x @ w.value + b.value
            loss, back = nc.cross_entropy(logits, targets)
            (dlogits,) = back()
            w.grad += x.T @ dlogits
            b.grad += dlogits.sum(axis=0, keepdims=True)
            return loss

        assert grad_check(loss_fn, [w, b]) < 1e-2

    def test_64bit_mode_is_much_tighter(self):
        with nc.use_dtype(np.float64):
            rs = RandomSource(2)
            w = Parameter("w", rs.normal((5, 3), std=0.5))
            x = rs.normal((4, 5))
            targets = np.array([0, 2, 1, 1])

            def loss_fn():
                logits = x @ w.value
                loss, back = nc.cross_entropy(logits, targets)
                (dlogits,) = back()
                w.grad += x.T @ dlogits
                return loss

            assert grad_check(loss_fn, [w]) < 1e-5

    def test_nonfinite_loss_raises(self):
        p = Parameter("w", np.array([[1.0]], dtype=np.float32))

        def loss_fn():
            return float("nan")

        with pytest.raises(NonFiniteLoss):
            grad_check(loss_fn, [p])
