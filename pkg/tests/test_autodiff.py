import numpy as np
import pytest

from wavemesh import autodiff as ad
from wavemesh.errors import SingleVertexShape

from .conftest import build_bank_for, jittered_grid


def finite_difference(fn, arrays, h=1e-4):
    """Central finite differences of a scalar function of several arrays."""
    grads = []
    for arr in arrays:
        g = np.zeros_like(arr)
        flat = arr.reshape(-1)
        gf = g.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + h
            fp = fn()
            flat[i] = orig - h
            fm = fn()
            flat[i] = orig
            gf[i] = (fp - fm) / (2 * h)
        grads.append(g)
    return grads


def check_op(build, arrays, rtol=1e-6, atol=1e-9):
    """build() -> scalar Tensor wired to the given parameter arrays."""
    tensors = [ad.param(a) for a in arrays]
    loss = build(tensors)
    ad.backward(loss)

    def value():
        return float(build([ad.constant(a) for a in arrays]).value)

    fd = finite_difference(value, arrays)
    for t, g in zip(tensors, fd):
        got = t.grad if t.grad is not None else np.zeros_like(g)
        assert np.allclose(got, g, rtol=rtol, atol=atol), (
            np.abs(got - g).max())


def _total(t):
    # reduce to a scalar through ops that are themselves on the tape
    flat = ad.mul(t, t)
    v = ad.Tensor(flat.value.sum(),
                  parents=((flat, lambda g: g * np.ones_like(flat.value)),))
    return v


class TestPrimitives:
    def test_matmul_and_add(self):
        rng = np.random.default_rng(0)
        a = rng.standard_normal((4, 3))
        b = rng.standard_normal((3, 5))
        c = rng.standard_normal(5)
        check_op(lambda t: _total(ad.add(ad.matmul(t[0], t[1]), t[2])),
                 [a, b, c])

    def test_mul_broadcast(self):
        rng = np.random.default_rng(1)
        x = rng.standard_normal((6, 4))
        s = rng.standard_normal(4)
        check_op(lambda t: _total(ad.mul(t[0], t[1])), [x, s])

    def test_selu(self):
        rng = np.random.default_rng(2)
        x = rng.standard_normal((5, 3)) * 2
        check_op(lambda t: _total(ad.selu(t[0])), [x])

    def test_standardize(self):
        rng = np.random.default_rng(3)
        x = rng.standard_normal((7, 4))
        gamma = rng.standard_normal(4) + 1.5
        beta = rng.standard_normal(4)
        check_op(lambda t: _total(ad.standardize(t[0], t[1], t[2])),
                 [x, gamma, beta], rtol=1e-5, atol=1e-8)

    def test_standardize_single_vertex_rejected(self):
        with pytest.raises(SingleVertexShape):
            ad.standardize(ad.constant(np.ones((1, 3))),
                           ad.constant(np.ones(3)), ad.constant(np.zeros(3)))

    def test_gather_rows(self):
        rng = np.random.default_rng(4)
        x = rng.standard_normal((6, 3))
        perm = np.array([3, 1, 0, 5, 4, 2])
        check_op(lambda t: _total(ad.gather_rows(t[0], perm)), [x])

    def test_softmax_cross_entropy_gradient_formula(self):
        rng = np.random.default_rng(5)
        logits = rng.standard_normal((8, 5))
        labels = rng.integers(0, 5, 8)
        t = ad.param(logits)
        loss = ad.softmax_cross_entropy(t, labels)
        ad.backward(loss)
        z = logits - logits.max(axis=1, keepdims=True)
        probs = np.exp(z) / np.exp(z).sum(axis=1, keepdims=True)
        onehot = np.eye(5)[labels]
        assert np.allclose(t.grad, (probs - onehot) / 8, atol=1e-12)

    def test_label_out_of_range(self):
        with pytest.raises(ValueError):
            ad.softmax_cross_entropy(ad.constant(np.zeros((2, 3))),
                                     np.array([0, 3]))

    def test_diamond_accumulation(self):
        # the same tensor feeding two consumers must receive both
        # gradient contributions
        x = np.array([[2.0]])
        t = ad.param(x)
        y = ad.add(ad.mul(t, t), t)  # x^2 + x -> dy/dx = 2x + 1
        ad.backward(y)
        assert np.allclose(t.grad, [[5.0]])


class TestWaveletMix:
    def test_gradients_wrt_inputs_and_weights(self):
        mesh = jittered_grid(4, 3, seed=8)  # 20 vertices
        bank = build_bank_for(mesh, k=10, directions=2, alpha=50.0, scales=2,
                              tighten=False)
        rng = np.random.default_rng(6)
        x = rng.standard_normal((mesh.n_vertices, 3))
        thetas = [[rng.standard_normal((3, 3)) for _ in range(2)]
                  for _ in range(2)]

        def build(t):
            xt = t[0]
            tt = [[t[1 + m * 2 + j] for j in range(2)] for m in range(2)]
            return _total(ad.wavelet_mix(xt, tt, bank))

        check_op(build, [x] + [th for row in thetas for th in row],
                 rtol=1e-5, atol=1e-8)

    def test_matches_apply_filter_composition(self):
        from wavemesh.wavelets import apply_filter
        mesh = jittered_grid(4, 3, seed=9)
        bank = build_bank_for(mesh, k=10, directions=2, alpha=50.0, scales=2,
                              tighten=False)
        rng = np.random.default_rng(7)
        x = rng.standard_normal((mesh.n_vertices, 3))
        thetas = [[rng.standard_normal((3, 3)) for _ in range(2)]
                  for _ in range(2)]
        got = ad.wavelet_mix(
            ad.constant(x),
            [[ad.constant(t) for t in row] for row in thetas], bank).value
        want = sum(apply_filter(bank, m, j, x) @ thetas[m][j]
                   for m in range(2) for j in range(2))
        assert np.abs(got - want).max() < 1e-12
