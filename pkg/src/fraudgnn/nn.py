"""Minimal dense-matrix substrate with reverse-mode gradients and Adam.

Every value is a 2-D float64 matrix wrapped in a Tensor. Operations record
a trace while any input requires gradients; backward() replays the trace in
reverse topological order. The op set is exactly what the model needs, not
a general autodiff library.
"""

from __future__ import annotations

import numpy as np

from .errors import FraudGnnError, ShapeError


class UsageError(FraudGnnError, RuntimeError):
    """Autodiff misuse, e.g. backward() on a trace-free tensor."""


def _as2d(data) -> np.ndarray:
    arr = np.asarray(data, dtype=np.float64)
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    elif arr.ndim == 1:
        arr = arr.reshape(1, -1)
    elif arr.ndim != 2:
        raise ShapeError(f"tensors are 2-D; got array of shape {arr.shape}")
    return arr


class Tensor:
    """2-D float64 matrix; set requires_grad=True to make it a trainable leaf."""

    __slots__ = ("data", "grad", "requires_grad", "_parents", "_vjp")

    def __init__(self, data, requires_grad: bool = False):
        self.data = _as2d(data)
        self.grad: np.ndarray | None = None
        self.requires_grad = requires_grad
        self._parents: tuple[Tensor, ...] = ()
        self._vjp = None

    @property
    def rows(self) -> int:
        return self.data.shape[0]

    @property
    def cols(self) -> int:
        return self.data.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.data.shape

    def item(self) -> float:
        if self.data.size != 1:
            raise ShapeError(f"item() needs a 1x1 tensor, got {self.shape}")
        return float(self.data[0, 0])

    def zero_grad(self):
        self.grad = None

    def __repr__(self):
        return f"Tensor(shape={self.shape}, requires_grad={self.requires_grad})"


def _wrap(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def _record(out_data: np.ndarray, parents: tuple[Tensor, ...], vjp) -> Tensor:
    out = Tensor(out_data)
    if any(p.requires_grad or p._parents for p in parents):
        out.requires_grad = True
        out._parents = parents
        out._vjp = vjp
    return out


def _unbroadcast(g: np.ndarray, shape: tuple[int, int]) -> np.ndarray:
    if g.shape == shape:
        return g
    if shape[0] == 1 and g.shape[0] > 1:
        g = g.sum(axis=0, keepdims=True)
    if shape[1] == 1 and g.shape[1] > 1:
        g = g.sum(axis=1, keepdims=True)
    return g


# ---------------------------------------------------------------------------
# primitives
# ---------------------------------------------------------------------------

def matmul(a, b) -> Tensor:
    a, b = _wrap(a), _wrap(b)
    if a.cols != b.rows:
        raise ShapeError(f"matmul mismatch: {a.shape} @ {b.shape}")
    out = a.data @ b.data

    def vjp(g):
        return g @ b.data.T, a.data.T @ g

    return _record(out, (a, b), vjp)


def add(a, b) -> Tensor:
    a, b = _wrap(a), _wrap(b)
    try:
        out = a.data + b.data
    except ValueError:
        raise ShapeError(f"add broadcast mismatch: {a.shape} + {b.shape}") from None

    def vjp(g):
        return _unbroadcast(g, a.shape), _unbroadcast(g, b.shape)

    return _record(out, (a, b), vjp)


def sub(a, b) -> Tensor:
    a, b = _wrap(a), _wrap(b)
    try:
        out = a.data - b.data
    except ValueError:
        raise ShapeError(f"sub broadcast mismatch: {a.shape} - {b.shape}") from None

    def vjp(g):
        return _unbroadcast(g, a.shape), _unbroadcast(-g, b.shape)

    return _record(out, (a, b), vjp)


def mul(a, b) -> Tensor:
    a, b = _wrap(a), _wrap(b)
    try:
        out = a.data * b.data
    except ValueError:
        raise ShapeError(f"mul broadcast mismatch: {a.shape} * {b.shape}") from None

    def vjp(g):
        return _unbroadcast(g * b.data, a.shape), _unbroadcast(g * a.data, b.shape)

    return _record(out, (a, b), vjp)


def neg(a) -> Tensor:
    a = _wrap(a)
    return _record(-a.data, (a,), lambda g: (-g,))


def concat(a, b) -> Tensor:
    """Column-wise concatenation: (n,p) || (n,q) -> (n,p+q)."""
    a, b = _wrap(a), _wrap(b)
    if a.rows != b.rows:
        raise ShapeError(f"concat needs equal row counts: {a.shape} || {b.shape}")
    out = np.concatenate([a.data, b.data], axis=1)
    p = a.cols

    def vjp(g):
        return g[:, :p], g[:, p:]

    return _record(out, (a, b), vjp)


def slice_rows(a, r0: int, r1: int) -> Tensor:
    a = _wrap(a)
    out = a.data[r0:r1, :]

    def vjp(g):
        da = np.zeros_like(a.data)
        da[r0:r1, :] = g
        return (da,)

    return _record(out.copy(), (a,), vjp)


def slice_cols(a, c0: int, c1: int) -> Tensor:
    a = _wrap(a)
    out = a.data[:, c0:c1]

    def vjp(g):
        da = np.zeros_like(a.data)
        da[:, c0:c1] = g
        return (da,)

    return _record(out.copy(), (a,), vjp)


def take_rows(a, idx) -> Tensor:
    """Gather rows by integer index (duplicates allowed)."""
    a = _wrap(a)
    idx = np.asarray(idx, dtype=np.int64)
    out = a.data[idx, :]

    def vjp(g):
        da = np.zeros_like(a.data)
        np.add.at(da, idx, g)
        return (da,)

    return _record(out, (a,), vjp)


def gather(values, idx) -> Tensor:
    """Index a column vector (m,1) with an (n,z) index matrix -> (n,z)."""
    values = _wrap(values)
    if values.cols != 1:
        raise ShapeError(f"gather expects a column vector, got {values.shape}")
    idx = np.asarray(idx, dtype=np.int64)
    out = values.data[idx, 0]

    def vjp(g):
        dv = np.zeros_like(values.data)
        np.add.at(dv[:, 0], idx.ravel(), g.ravel())
        return (dv,)

    return _record(out, (values,), vjp)


def neighbor_sum(weights, values, idx) -> Tensor:
    """out[i] = sum_j weights[i,j] * values[idx[i,j]]  ((n,z),(m,d),(n,z) -> (n,d)).

    Padding entries must carry weight 0; their index may point anywhere valid.
    """
    weights, values = _wrap(weights), _wrap(values)
    idx = np.asarray(idx, dtype=np.int64)
    if weights.shape != idx.shape:
        raise ShapeError(f"neighbor_sum weights {weights.shape} vs idx {idx.shape}")
    gathered = values.data[idx]  # (n, z, d)
    out = np.einsum("nz,nzd->nd", weights.data, gathered)

    def vjp(g):
        dw = np.einsum("nd,nzd->nz", g, gathered)
        dv = np.zeros_like(values.data)
        np.add.at(dv, idx, weights.data[:, :, None] * g[:, None, :])
        return dw, dv

    return _record(out, (weights, values), vjp)


# ---------------------------------------------------------------------------
# nonlinearities and reductions
# ---------------------------------------------------------------------------

def relu(a) -> Tensor:
    a = _wrap(a)
    out = np.maximum(a.data, 0.0)
    return _record(out, (a,), lambda g: (g * (a.data > 0),))


def leaky_relu(a, slope: float = 0.01) -> Tensor:
    a = _wrap(a)
    out = np.where(a.data > 0, a.data, slope * a.data)
    return _record(out, (a,), lambda g: (g * np.where(a.data > 0, 1.0, slope),))


def identity(a) -> Tensor:
    a = _wrap(a)
    return _record(a.data.copy(), (a,), lambda g: (g,))


def sigmoid(a) -> Tensor:
    a = _wrap(a)
    out = 1.0 / (1.0 + np.exp(-a.data))
    return _record(out, (a,), lambda g: (g * out * (1.0 - out),))


def tanh(a) -> Tensor:
    a = _wrap(a)
    out = np.tanh(a.data)
    return _record(out, (a,), lambda g: (g * (1.0 - out * out),))


def log(a) -> Tensor:
    a = _wrap(a)
    out = np.log(a.data)
    return _record(out, (a,), lambda g: (g / a.data,))


def clamp(a, lo: float, hi: float) -> Tensor:
    a = _wrap(a)
    out = np.clip(a.data, lo, hi)
    inside = (a.data > lo) & (a.data < hi)
    return _record(out, (a,), lambda g: (g * inside,))


def softmax_rows(a, mask: np.ndarray | None = None) -> Tensor:
    """Row-wise softmax; masked-out entries get probability 0.

    Overflow-safe via per-row max subtraction. Rows with no valid entry come
    out all-zero (used for isolated nodes).
    """
    a = _wrap(a)
    x = a.data
    if mask is None:
        valid = np.ones_like(x, dtype=bool)
    else:
        valid = np.asarray(mask, dtype=bool)
        if valid.shape != x.shape:
            raise ShapeError(f"softmax mask {valid.shape} vs data {x.shape}")
    neg = np.where(valid, x, -np.inf)
    rowmax = neg.max(axis=1, keepdims=True)
    rowmax = np.where(np.isfinite(rowmax), rowmax, 0.0)
    e = np.where(valid, np.exp(np.where(valid, x, 0.0) - rowmax), 0.0)
    s = e.sum(axis=1, keepdims=True)
    out = e / np.where(s > 0, s, 1.0)

    def vjp(g):
        dot = (g * out).sum(axis=1, keepdims=True)
        return (out * (g - dot),)

    return _record(out, (a,), vjp)


def l2_normalize_rows(a) -> Tensor:
    """Scale each row to unit L2 norm; all-zero rows are left at zero."""
    a = _wrap(a)
    norms = np.linalg.norm(a.data, axis=1, keepdims=True)
    safe = np.where(norms > 0, norms, 1.0)
    out = a.data / safe

    def vjp(g):
        dot = (g * out).sum(axis=1, keepdims=True)
        da = (g - out * dot) / safe
        return (np.where(norms > 0, da, 0.0),)

    return _record(out, (a,), vjp)


def sum_all(a) -> Tensor:
    a = _wrap(a)
    out = np.array([[a.data.sum()]])
    return _record(out, (a,), lambda g: (np.full_like(a.data, g[0, 0]),))


def mean_all(a) -> Tensor:
    a = _wrap(a)
    n = a.data.size
    out = np.array([[a.data.mean()]])
    return _record(out, (a,), lambda g: (np.full_like(a.data, g[0, 0] / n),))


# ---------------------------------------------------------------------------
# backward pass
# ---------------------------------------------------------------------------

def backward(loss: Tensor):
    """Populate .grad for every tensor reachable from a scalar loss."""
    if loss.shape != (1, 1):
        raise UsageError(f"backward expects a 1x1 loss, got {loss.shape}")
    if loss._vjp is None:
        raise UsageError("backward before forward: the loss records no trace")

    topo: list[Tensor] = []
    seen: set[int] = set()
    stack: list[tuple[Tensor, bool]] = [(loss, False)]
    while stack:
        node, processed = stack.pop()
        if processed:
            topo.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for p in node._parents:
            if id(p) not in seen and (p._parents or p.requires_grad):
                stack.append((p, False))

    loss.grad = np.ones((1, 1))
    for node in reversed(topo):
        if node._vjp is None or node.grad is None:
            continue
        grads = node._vjp(node.grad)
        for parent, g in zip(node._parents, grads):
            if g is None or not (parent.requires_grad or parent._parents):
                continue
            parent.grad = g if parent.grad is None else parent.grad + g


def zero_grads(params):
    for p in params:
        p.zero_grad()


# ---------------------------------------------------------------------------
# initialization and optimization
# ---------------------------------------------------------------------------

def glorot_uniform(rows: int, cols: int, rng: np.random.Generator) -> Tensor:
    """Uniform(-b, b) with b = sqrt(6 / (fan_in + fan_out))."""
    bound = np.sqrt(6.0 / (rows + cols))
    return Tensor(rng.uniform(-bound, bound, size=(rows, cols)), requires_grad=True)


class AdamState:
    """Adam with bias correction; step() consumes and zeroes the gradients."""

    def __init__(self, params: list[Tensor], lr: float = 1e-3,
                 beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.params = list(params)
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.step_count = 0
        self.m = [np.zeros_like(p.data) for p in self.params]
        self.v = [np.zeros_like(p.data) for p in self.params]

    def step(self):
        self.step_count += 1
        b1, b2 = self.beta1, self.beta2
        for i, p in enumerate(self.params):
            g = p.grad if p.grad is not None else np.zeros_like(p.data)
            self.m[i] = b1 * self.m[i] + (1 - b1) * g
            self.v[i] = b2 * self.v[i] + (1 - b2) * g * g
            m_hat = self.m[i] / (1 - b1 ** self.step_count)
            v_hat = self.v[i] / (1 - b2 ** self.step_count)
            p.data -= self.lr * m_hat / (np.sqrt(v_hat) + self.eps)
            p.grad = None
