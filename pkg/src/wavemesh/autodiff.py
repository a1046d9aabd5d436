"""Minimal reverse-mode tape over float64 numpy arrays.

Just enough machinery for the trainable pipeline: every op records its
parents together with vector-Jacobian closures, ``backward`` walks the
graph once in reverse topological order. Gradients accumulate by
addition, so shared subexpressions are handled correctly.
"""

import numpy as np

from .errors import SingleVertexShape

SELU_SCALE = 1.05070098
SELU_ALPHA = 1.67326324
NORM_EPS = 1e-5


class Tensor:
    __slots__ = ("value", "grad", "parents", "requires_grad")

    def __init__(self, value, parents=(), requires_grad=False):
        self.value = value
        self.grad = None
        self.parents = parents
        self.requires_grad = requires_grad or any(
            p.requires_grad for p, _ in parents)

    @property
    def shape(self):
        return np.shape(self.value)


def constant(value):
    return Tensor(np.asarray(value))


def param(value):
    return Tensor(value, requires_grad=True)


def backward(root):
    """Accumulate gradients of ``root`` (a scalar) into the graph."""
    order = []
    seen = set()
    stack = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in seen or not node.requires_grad:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for parent, _ in node.parents:
            stack.append((parent, False))

    root.grad = np.ones_like(np.asarray(root.value, dtype=np.float64))
    for node in reversed(order):
        if node.grad is None:
            continue
        for parent, vjp in node.parents:
            if not parent.requires_grad:
                continue
            g = vjp(node.grad)
            parent.grad = g if parent.grad is None else parent.grad + g


def _unbroadcast(grad, shape):
    """Reduce ``grad`` back to ``shape`` after numpy broadcasting."""
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, dim in enumerate(shape):
        if dim == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


def add(a, b):
    value = a.value + b.value
    return Tensor(value, parents=(
        (a, lambda g: _unbroadcast(g, np.shape(a.value))),
        (b, lambda g: _unbroadcast(g, np.shape(b.value))),
    ))


def mul(a, b):
    value = a.value * b.value
    return Tensor(value, parents=(
        (a, lambda g: _unbroadcast(g * b.value, np.shape(a.value))),
        (b, lambda g: _unbroadcast(g * a.value, np.shape(b.value))),
    ))


def matmul(a, b):
    value = a.value @ b.value
    return Tensor(value, parents=(
        (a, lambda g: g @ b.value.T),
        (b, lambda g: a.value.T @ g),
    ))


def affine(x, w, b):
    return add(matmul(x, w), b)


def selu(a):
    x = a.value
    pos = x > 0
    expx = np.exp(np.minimum(x, 0.0))
    value = np.where(pos, SELU_SCALE * x, SELU_SCALE * SELU_ALPHA * (expx - 1.0))

    def vjp(g):
        return g * np.where(pos, SELU_SCALE, SELU_SCALE * SELU_ALPHA * expx)

    return Tensor(value, parents=((a, vjp),))


def standardize(x, gamma, beta, eps=NORM_EPS):
    """Per-feature standardization over the vertex axis with affine."""
    v = x.value
    if v.ndim != 2 or v.shape[0] < 2:
        raise SingleVertexShape(
            f"standardization needs at least 2 vertices, got shape {v.shape}")
    n = v.shape[0]
    mean = v.mean(axis=0)
    centered = v - mean
    var = (centered**2).mean(axis=0)
    inv_std = 1.0 / np.sqrt(var + eps)
    xhat = centered * inv_std
    value = xhat * gamma.value + beta.value

    def vjp_x(g):
        gx = g * gamma.value
        return inv_std * (gx - gx.mean(axis=0)
                          - xhat * (gx * xhat).mean(axis=0))

    return Tensor(value, parents=(
        (x, vjp_x),
        (gamma, lambda g: (g * xhat).sum(axis=0)),
        (beta, lambda g: g.sum(axis=0)),
    ))


def gather_rows(x, index):
    index = np.asarray(index)

    def vjp(g):
        out = np.zeros_like(x.value)
        np.add.at(out, index, g)
        return out

    return Tensor(x.value[index], parents=((x, vjp),))


def wavelet_mix(x, thetas, bank, normalized=True):
    """sum_{m,j} (normalized wavelet filter applied to x) @ theta[m][j].

    thetas is an M x J nested list of Tensors. The per-direction
    eigenbasis projection is shared across scales, forward and backward.
    """
    v = x.value
    n_dir = len(thetas)
    n_scale = len(thetas[0])
    spectra = bank.spectra
    dtype = v.dtype

    coeffs = []
    filtered = []
    out = None
    for m in range(n_dir):
        spec = spectra[m]
        phi = spec.eigenvectors.astype(dtype, copy=False)
        mass = spec.mass.astype(dtype, copy=False)
        c = phi.T @ (mass[:, None] * v)
        coeffs.append((phi, mass, c))
        row = []
        for j in range(n_scale):
            resp = bank.responses[m, j].astype(dtype, copy=False)
            f = phi @ (resp[:, None] * c)
            if normalized:
                f /= bank.l1_normalizers[m, j].astype(dtype, copy=False)[:, None]
            row.append(f)
            term = f @ thetas[m][j].value
            out = term if out is None else out + term
        filtered.append(row)

    def vjp_x(g):
        gx = np.zeros_like(v)
        for m in range(n_dir):
            phi, mass, _ = coeffs[m]
            acc = None
            for j in range(n_scale):
                gz = g @ thetas[m][j].value.T
                if normalized:
                    gz = gz / bank.l1_normalizers[m, j].astype(
                        dtype, copy=False)[:, None]
                resp = bank.responses[m, j].astype(dtype, copy=False)
                contrib = resp[:, None] * (phi.T @ gz)
                acc = contrib if acc is None else acc + contrib
            gx += mass[:, None] * (phi @ acc)
        return gx

    def make_vjp_theta(m, j):
        return lambda g: filtered[m][j].T @ g

    parents = [(x, vjp_x)]
    for m in range(n_dir):
        for j in range(n_scale):
            parents.append((thetas[m][j], make_vjp_theta(m, j)))
    return Tensor(out, parents=tuple(parents))


def softmax_cross_entropy(logits, labels):
    """Mean cross entropy; gradient is (softmax - onehot) / n."""
    z = logits.value
    labels = np.asarray(labels)
    n, c = z.shape
    if labels.min() < 0 or labels.max() >= c:
        raise ValueError(
            f"labels must lie in [0, {c}), got range "
            f"[{labels.min()}, {labels.max()}]")
    shifted = z - z.max(axis=1, keepdims=True)
    expz = np.exp(shifted)
    total = expz.sum(axis=1, keepdims=True)
    log_probs = shifted - np.log(total)
    loss = -log_probs[np.arange(n), labels].mean()
    probs = expz / total

    def vjp(g):
        grad = probs.copy()
        grad[np.arange(n), labels] -= 1.0
        return g * grad / n

    return Tensor(np.float64(loss), parents=((logits, vjp),))
