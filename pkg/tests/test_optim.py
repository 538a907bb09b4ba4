"""Adam optimizer contract tests."""

import numpy as np
import pytest

from garmentcast.autograd import Adam, MissingGradientError, Tensor, adam_step, tsum


def test_zero_gradient_leaves_params_unchanged():
    p = Tensor([1.5, -2.0], requires_grad=True)
    opt = Adam({"p": p}, lr=0.1)
    p.grad = np.zeros(2)
    opt.step()
    np.testing.assert_array_equal(p.data, [1.5, -2.0])
    assert opt.step_count == 1


def test_first_step_hand_computed():
    # m1 = 0.1, v1 = 0.001; bias-corrected both become 1.0, so the update is
    # lr * 1 / (1 + eps) -- essentially the full learning rate.
    p = Tensor([1.0], requires_grad=True)
    opt = Adam({"p": p}, lr=0.1)
    p.grad = np.array([1.0])
    opt.step()
    np.testing.assert_allclose(p.data, [0.9], atol=1e-8)


def test_convex_quadratic_strictly_decreases():
    p = Tensor([3.0], requires_grad=True)
    opt = Adam({"p": p}, lr=0.05)
    losses = []
    for _ in range(2):
        p.grad = None
        loss = tsum(p * p)
        loss.backward()
        losses.append(loss.item())
        opt.step()
    final = tsum(p * p).item()
    assert losses[1] < losses[0]
    assert final < losses[1]


def test_missing_gradient_names_parameter():
    a = Tensor([1.0], requires_grad=True)
    b = Tensor([2.0], requires_grad=True)
    opt = Adam({"alpha": a, "beta": b})
    a.grad = np.array([0.5])
    with pytest.raises(MissingGradientError, match="beta"):
        opt.step()


def test_step_count_strictly_increases():
    p = Tensor([0.0], requires_grad=True)
    opt = Adam({"p": p})
    for expected in (1, 2, 3):
        p.grad = np.array([0.1])
        opt.step()
        assert opt.step_count == expected


def test_functional_adam_step_matches_class():
    p1 = Tensor([1.0, 2.0], requires_grad=True)
    p2 = Tensor([1.0, 2.0], requires_grad=True)
    o1 = Adam({"p": p1}, lr=0.01)
    o2 = Adam({"p": p2}, lr=0.01)
    g = np.array([0.3, -0.7])
    p1.grad = g.copy()
    o1.step()
    adam_step({"p": p2}, {"p": g}, o2)
    np.testing.assert_array_equal(p1.data, p2.data)


def test_moment_buffers_match_parameter_shapes():
    p = Tensor(np.zeros((3, 4)), requires_grad=True)
    opt = Adam({"p": p})
    assert opt._m["p"].shape == (3, 4)
    assert opt._v["p"].shape == (3, 4)
