"""Elementary tensor op behavior: values, gradients, and error contracts."""

import numpy as np
import pytest

from garmentcast.autograd import (
    NumericError,
    ShapeError,
    Tensor,
    absolute,
    binary_cross_entropy_with_logits,
    categorical_cross_entropy_with_logits,
    concat,
    embedding,
    gradient_check,
    l2_normalize,
    mae_loss,
    matmul,
    mse_loss,
    narrow,
    pad,
    sigmoid,
    softmax,
    transpose,
    tsum,
)


class TestForwardValues:
    def test_softmax_uniform_on_equal_logits(self):
        out = softmax(Tensor([0.0, 0.0, 0.0, 0.0]))
        np.testing.assert_allclose(out.data, [0.25, 0.25, 0.25, 0.25])

    def test_softmax_rows_sum_to_one(self):
        rng = np.random.default_rng(0)
        out = softmax(Tensor(rng.normal(size=(50, 7)) * 30.0), axis=-1)
        np.testing.assert_allclose(out.data.sum(axis=-1), 1.0, atol=1e-12)

    def test_sigmoid_open_unit_interval(self):
        rng = np.random.default_rng(1)
        out = sigmoid(Tensor(rng.normal(size=200) * 50.0))
        assert np.all(out.data > 0.0) and np.all(out.data < 1.0)

    def test_l2_normalize_unit_norm(self):
        rng = np.random.default_rng(2)
        out = l2_normalize(Tensor(rng.normal(size=(20, 6))))
        np.testing.assert_allclose(np.linalg.norm(out.data, axis=-1), 1.0, atol=1e-12)

    def test_l2_normalize_zero_vector_passthrough(self):
        x = Tensor(np.zeros((3, 4)), requires_grad=True)
        out = l2_normalize(x)
        np.testing.assert_array_equal(out.data, np.zeros((3, 4)))
        tsum(out).backward()
        np.testing.assert_array_equal(x.grad, np.zeros((3, 4)))

    def test_determinism_bit_identical(self):
        def run():
            rng = np.random.default_rng(3)
            x = Tensor(rng.normal(size=(4, 5)))
            w = Tensor(rng.normal(size=(5, 2)))
            return (softmax(x, axis=-1) @ w).data

        assert np.array_equal(run(), run())


class TestBackward:
    def test_sum_gradient_is_ones(self):
        x = Tensor(np.arange(12.0).reshape(3, 4), requires_grad=True)
        tsum(x).backward()
        np.testing.assert_array_equal(x.grad, np.ones((3, 4)))

    def test_square_sum_gradient(self):
        x = Tensor([2.0, -3.0], requires_grad=True)
        tsum(x * x).backward()
        np.testing.assert_allclose(x.grad, [4.0, -6.0])

    def test_duplicated_consumer_doubles_gradient(self):
        x = Tensor([1.0, 2.0], requires_grad=True)
        tsum(x * 3.0).backward()
        single = x.grad.copy()
        x.grad = None
        tsum((x * 3.0) + (x * 3.0)).backward()
        np.testing.assert_array_equal(x.grad, 2.0 * single)

    def test_backward_requires_scalar(self):
        x = Tensor([1.0, 2.0], requires_grad=True)
        with pytest.raises(ShapeError):
            (x * x).backward()

    def test_each_node_visited_once(self):
        # shared subexpression: y = s + s with s = x*2; grad x must be exactly 4
        x = Tensor([1.0], requires_grad=True)
        s = x * 2.0
        tsum(s + s).backward()
        np.testing.assert_array_equal(x.grad, [4.0])


class TestErrors:
    def test_non_finite_input_rejected(self):
        with pytest.raises(NumericError):
            Tensor([1.0, np.inf])

    def test_non_finite_intermediate_rejected(self):
        x = Tensor([1e308])
        with pytest.raises(NumericError) as err:
            _ = x * 1e10
        assert "mul" in str(err.value)

    def test_matmul_shape_mismatch_named(self):
        with pytest.raises(ShapeError) as err:
            matmul(Tensor(np.ones((2, 3))), Tensor(np.ones((4, 2))))
        assert "matmul" in str(err.value)

    def test_embedding_index_out_of_range(self):
        with pytest.raises(ShapeError):
            embedding(Tensor(np.ones((3, 2))), np.array([0, 3]))

    def test_narrow_out_of_range(self):
        with pytest.raises(ShapeError):
            narrow(Tensor(np.ones((2, 3))), 1, 2, 2)


class TestElementaryGradients:
    """Finite-difference checks for each elementary op on small random shapes."""

    def check(self, build, params, seeds=3):
        for seed in range(seeds):
            rng = np.random.default_rng(seed)
            wrt = params(rng)
            report = gradient_check(lambda: build(wrt), wrt)
            assert report.passed, report.failures()

    def test_arithmetic_chain(self):
        def params(rng):
            return {"a": Tensor(rng.normal(size=(3, 4)), requires_grad=True),
                    "b": Tensor(rng.normal(size=(3, 4)) + 3.0, requires_grad=True)}

        self.check(lambda p: tsum((p["a"] * p["b"] + p["a"] - p["b"]) / p["b"]), params)

    def test_matmul_broadcast_batch(self):
        def params(rng):
            return {"a": Tensor(rng.normal(size=(2, 3, 4)), requires_grad=True),
                    "w": Tensor(rng.normal(size=(4, 5)), requires_grad=True)}

        self.check(lambda p: tsum(matmul(p["a"], p["w"]) ** 2), params)

    def test_softmax(self):
        def params(rng):
            return {"x": Tensor(rng.normal(size=(4, 6)), requires_grad=True)}

        weights = np.random.default_rng(99).normal(size=(4, 6))
        self.check(lambda p: tsum(softmax(p["x"], axis=-1) * weights), params)

    def test_sigmoid_tanh_abs(self):
        def params(rng):
            return {"x": Tensor(rng.normal(size=(5, 3)) + 0.2, requires_grad=True)}

        self.check(lambda p: tsum(sigmoid(p["x"]) + absolute(p["x"])), params)

    def test_concat_narrow_pad_transpose(self):
        def params(rng):
            return {"a": Tensor(rng.normal(size=(2, 3)), requires_grad=True),
                    "b": Tensor(rng.normal(size=(2, 2)), requires_grad=True)}

        def build(p):
            joined = concat([p["a"], p["b"]], axis=1)
            padded = pad(joined, 0, 1, 0)
            return tsum(transpose(padded, (1, 0)) ** 2) + tsum(narrow(joined, 1, 1, 3))

        self.check(build, params)

    def test_l2_normalize_grad(self):
        def params(rng):
            return {"x": Tensor(rng.normal(size=(3, 5)) + 0.5, requires_grad=True)}

        weights = np.random.default_rng(7).normal(size=(3, 5))
        self.check(lambda p: tsum(l2_normalize(p["x"]) * weights), params)

    def test_embedding_grad(self):
        idx = np.array([0, 2, 2, 1])

        def params(rng):
            return {"table": Tensor(rng.normal(size=(3, 4)), requires_grad=True)}

        self.check(lambda p: tsum(embedding(p["table"], idx) ** 2), params)

    def test_losses(self):
        target = np.random.default_rng(11).uniform(0.1, 0.9, size=(4, 3))
        labels = np.array([0, 2, 1, 2])

        def params(rng):
            return {"x": Tensor(rng.normal(size=(4, 3)) + 0.05, requires_grad=True)}

        self.check(lambda p: mse_loss(p["x"], target), params)
        self.check(lambda p: mae_loss(p["x"], target), params)
        self.check(lambda p: binary_cross_entropy_with_logits(p["x"], target), params)
        self.check(lambda p: categorical_cross_entropy_with_logits(p["x"], labels), params)
