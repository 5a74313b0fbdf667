"""Dense float32 tensors (rank <= 3) with tape-based reverse-mode autodiff.

Every model in this package runs on this engine. Operations record onto an
explicit :class:`Tape`; the backward rules are themselves written in terms
of the primitive operations, so a backward pass can optionally be recorded
onto the tape again (``create_graph=True``). That second-order path exists
solely so the discriminator can be trained through its input-gradient
penalty; it is not a general higher-order-derivative facility.

Conventions:
  * data is float32 and treated as immutable once a Tensor is built;
    only ``grad`` mutates, and only during a backward pass
  * a tape and the tensors recorded on it belong to one logical thread;
    independent tapes may run in parallel
"""

from __future__ import annotations

import threading
from contextlib import contextmanager

import numpy as np

from ._kernels import conv1d_forward as _k_conv_fwd
from ._kernels import conv1d_input_grad as _k_conv_gx
from ._kernels import conv1d_kernel_grad as _k_conv_gk

MAX_RANK = 3


class ShapeError(ValueError):
    """Operands with incompatible or unsupported shapes."""


class Tensor:
    """A dense float32 array of rank <= 3 plus an optional gradient slot."""

    __slots__ = ("data", "requires_grad", "grad")

    def __init__(self, data, requires_grad: bool = False):
        arr = np.asarray(data, dtype=np.float32)
        if arr.ndim > MAX_RANK:
            raise ShapeError(
                f"rank {arr.ndim} exceeds the supported maximum of {MAX_RANK}"
            )
        self.data = arr
        self.requires_grad = bool(requires_grad)
        self.grad = None

    @property
    def shape(self):
        return self.data.shape

    @property
    def ndim(self):
        return self.data.ndim

    def item(self) -> float:
        if self.data.size != 1:
            raise ShapeError(f"item() needs a single-element tensor, got {self.shape}")
        return float(self.data.reshape(-1)[0])

    def zero_grad(self):
        self.grad = None

    def __repr__(self):
        flag = ", requires_grad=True" if self.requires_grad else ""
        return f"Tensor(shape={self.shape}{flag})"

    # operator sugar; scalars and arrays are lifted to constants
    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        return mul(self, other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        return div(self, other)

    def __rtruediv__(self, other):
        return div(other, self)

    def __neg__(self):
        return neg(self)

    def __matmul__(self, other):
        return matmul(self, other)


class _Node:
    __slots__ = ("out", "inputs", "vjp")

    def __init__(self, out, inputs, vjp):
        self.out = out
        self.inputs = inputs
        self.vjp = vjp


_ACTIVE = threading.local()


def _tape_stack():
    stack = getattr(_ACTIVE, "stack", None)
    if stack is None:
        stack = []
        _ACTIVE.stack = stack
    return stack


def _current_tape():
    stack = _tape_stack()
    return stack[-1] if stack else None


class Tape:
    """Ordered operation record, replayed in exact reverse order by backward."""

    def __init__(self):
        self._nodes: list[_Node] = []

    def __enter__(self):
        _tape_stack().append(self)
        return self

    def __exit__(self, exc_type, exc, tb):
        popped = _tape_stack().pop()
        assert popped is self, "tape exited out of order"
        return False

    def __len__(self):
        return len(self._nodes)

    def backward(self, loss, create_graph: bool = False):
        backward(loss, self, create_graph=create_graph)

    def grad(self, output, wrt, create_graph: bool = False):
        return grad_of(output, wrt, self, create_graph=create_graph)


@contextmanager
def no_grad():
    """Disable recording within the block; ops become plain forward math."""
    _tape_stack().append(None)
    try:
        yield
    finally:
        _tape_stack().pop()


@contextmanager
def _keep_recording():
    yield


def _make(result_data, inputs, vjp):
    tape = _current_tape()
    track = tape is not None and any(t.requires_grad for t in inputs)
    out = Tensor(result_data, requires_grad=track)
    if track:
        tape._nodes.append(_Node(out, inputs, vjp))
    return out


def _lift(v) -> Tensor:
    return v if isinstance(v, Tensor) else Tensor(np.asarray(v, dtype=np.float32))


def _sweep(loss: Tensor, tape: Tape, create_graph: bool):
    """Reverse pass over a snapshot of the tape.

    Returns {id(tensor): (tensor, grad Tensor)} for every tensor that
    accumulated a gradient, leaves included.
    """
    if loss.data.size != 1:
        raise ShapeError(f"backward requires a scalar loss, got shape {loss.shape}")
    nodes = list(tape._nodes)
    pending = {id(loss): (loss, Tensor(np.ones_like(loss.data)))}
    received = {}
    ctx = _keep_recording() if create_graph else no_grad()
    with ctx:
        for node in reversed(nodes):
            got = pending.pop(id(node.out), None)
            if got is None:
                continue
            _, g = got
            received[id(node.out)] = (node.out, g)
            for inp, gi in zip(node.inputs, node.vjp(g)):
                if gi is None or not inp.requires_grad:
                    continue
                prev = pending.get(id(inp))
                if prev is None:
                    pending[id(inp)] = (inp, gi)
                else:
                    pending[id(inp)] = (inp, add(prev[1], gi))
    received.update(pending)
    return received


def backward(loss: Tensor, tape: Tape | None = None, create_graph: bool = False):
    """Populate .grad on every requires_grad tensor reachable from ``loss``.

    Gradients accumulate additively, both across fan-out within one pass
    and across repeated backward calls.
    """
    tape = tape if tape is not None else _current_tape()
    if tape is None:
        raise RuntimeError("backward() needs an active or explicit tape")
    received = _sweep(loss, tape, create_graph)
    for t, g in received.values():
        t.grad = g.data.copy() if t.grad is None else t.grad + g.data


def grad_of(output: Tensor, wrt: Tensor, tape: Tape | None = None,
            create_graph: bool = True) -> Tensor:
    """d(output)/d(wrt) as a Tensor, without touching any .grad slot.

    With ``create_graph=True`` the returned tensor stays on the tape and
    is differentiable in a subsequent backward pass.
    """
    tape = tape if tape is not None else _current_tape()
    if tape is None:
        raise RuntimeError("grad_of() needs an active or explicit tape")
    received = _sweep(output, tape, create_graph)
    got = received.get(id(wrt))
    if got is None:
        return Tensor(np.zeros_like(wrt.data))
    return got[1]


# ---------------------------------------------------------------------------
# primitives


def _unbroadcast(g: Tensor, shape) -> Tensor:
    if g.shape == tuple(shape):
        return g
    while g.ndim > len(shape):
        g = sum_axis(g, 0)
    for ax, n in enumerate(shape):
        if n == 1 and g.shape[ax] != 1:
            g = sum_axis(g, ax, keepdims=True)
    return g


def add(a, b):
    a, b = _lift(a), _lift(b)

    def vjp(g):
        return _unbroadcast(g, a.shape), _unbroadcast(g, b.shape)

    return _make(a.data + b.data, (a, b), vjp)


def sub(a, b):
    a, b = _lift(a), _lift(b)

    def vjp(g):
        return _unbroadcast(g, a.shape), _unbroadcast(neg(g), b.shape)

    return _make(a.data - b.data, (a, b), vjp)


def neg(a):
    a = _lift(a)

    def vjp(g):
        return (neg(g),)

    return _make(-a.data, (a,), vjp)


def mul(a, b):
    a, b = _lift(a), _lift(b)

    def vjp(g):
        ga = _unbroadcast(mul(g, b), a.shape) if a.requires_grad else None
        gb = _unbroadcast(mul(g, a), b.shape) if b.requires_grad else None
        return ga, gb

    return _make(a.data * b.data, (a, b), vjp)


def div(a, b):
    a, b = _lift(a), _lift(b)

    def vjp(g):
        ga = _unbroadcast(div(g, b), a.shape) if a.requires_grad else None
        gb = (
            _unbroadcast(neg(div(mul(g, a), mul(b, b))), b.shape)
            if b.requires_grad
            else None
        )
        return ga, gb

    return _make(a.data / b.data, (a, b), vjp)


def matmul(a, b):
    a, b = _lift(a), _lift(b)
    if a.ndim != 2 or b.ndim != 2:
        raise ShapeError(f"matmul expects rank-2 operands, got {a.shape} @ {b.shape}")
    if a.shape[1] != b.shape[0]:
        raise ShapeError(
            f"matmul inner extents disagree: {a.shape} @ {b.shape}"
        )

    def vjp(g):
        ga = matmul(g, transpose(b)) if a.requires_grad else None
        gb = matmul(transpose(a), g) if b.requires_grad else None
        return ga, gb

    return _make(a.data @ b.data, (a, b), vjp)


def transpose(a):
    a = _lift(a)
    if a.ndim != 2:
        raise ShapeError(f"transpose expects rank 2, got {a.shape}")

    def vjp(g):
        return (transpose(g),)

    return _make(a.data.T.copy(), (a,), vjp)


def reshape(a, shape):
    a = _lift(a)
    old = a.shape

    def vjp(g):
        return (reshape(g, old),)

    return _make(a.data.reshape(shape), (a,), vjp)


def relu(a):
    a = _lift(a)
    mask = Tensor((a.data > 0).astype(np.float32))

    def vjp(g):
        return (mul(g, mask),)

    return _make(np.maximum(a.data, 0.0), (a,), vjp)


def clip(a, lo: float, hi: float):
    """Clamp values into [lo, hi]; gradient passes only inside the range."""
    a = _lift(a)
    mask = Tensor(((a.data > lo) & (a.data < hi)).astype(np.float32))

    def vjp(g):
        return (mul(g, mask),)

    return _make(np.clip(a.data, lo, hi), (a,), vjp)


def exp(a):
    a = _lift(a)
    holder = []

    def vjp(g):
        return (mul(g, holder[0]),)

    out = _make(np.exp(a.data), (a,), vjp)
    holder.append(out)
    return out


def log(a):
    a = _lift(a)

    def vjp(g):
        return (div(g, a),)

    return _make(np.log(a.data), (a,), vjp)


def sqrt(a):
    a = _lift(a)
    holder = []

    def vjp(g):
        return (div(mul(g, _lift(0.5)), holder[0]),)

    out = _make(np.sqrt(a.data), (a,), vjp)
    holder.append(out)
    return out


def sigmoid(a):
    a = _lift(a)
    x = a.data
    # stable in both tails, no overflow warnings
    y = np.where(x >= 0, 1.0 / (1.0 + np.exp(-np.abs(x))),
                 np.exp(-np.abs(x)) / (1.0 + np.exp(-np.abs(x)))).astype(np.float32)
    holder = []

    def vjp(g):
        out = holder[0]
        return (mul(g, mul(out, sub(_lift(1.0), out))),)

    out = _make(y, (a,), vjp)
    holder.append(out)
    return out


def softmax(a):
    """Row-wise softmax over the last axis, computed with max subtraction."""
    a = _lift(a)
    m = a.data.max(axis=-1, keepdims=True)
    e = np.exp(a.data - m)
    y = (e / e.sum(axis=-1, keepdims=True)).astype(np.float32)
    holder = []

    def vjp(g):
        out = holder[0]
        s = sum_axis(mul(g, out), -1, keepdims=True)
        return (mul(out, sub(g, s)),)

    out = _make(y, (a,), vjp)
    holder.append(out)
    return out


def sum_axis(a, axis=None, keepdims: bool = False):
    a = _lift(a)
    shape = a.shape

    def vjp(g):
        if axis is None:
            return (broadcast_to(g, shape),)
        if not keepdims:
            kept = list(g.shape)
            kept.insert(axis if axis >= 0 else len(shape) + axis, 1)
            g = reshape(g, tuple(kept))
        return (broadcast_to(g, shape),)

    return _make(a.data.sum(axis=axis, keepdims=keepdims), (a,), vjp)


def broadcast_to(a, shape):
    a = _lift(a)
    old = a.shape

    def vjp(g):
        return (_unbroadcast(g, old),)

    return _make(np.ascontiguousarray(np.broadcast_to(a.data, shape)), (a,), vjp)


def mean(a):
    a = _lift(a)
    return mul(sum_axis(a), _lift(1.0 / a.data.size))


def mean_axis(a, axis, keepdims: bool = False):
    a = _lift(a)
    n = a.shape[axis]
    return mul(sum_axis(a, axis, keepdims=keepdims), _lift(1.0 / n))


def concat_features(parts):
    """Concatenate along the last (feature) axis."""
    parts = [_lift(p) for p in parts]
    widths = [p.shape[-1] for p in parts]
    offs = np.concatenate([[0], np.cumsum(widths)])

    def vjp(g):
        return tuple(
            slice_features(g, int(offs[i]), int(offs[i + 1]))
            if parts[i].requires_grad
            else None
            for i in range(len(parts))
        )

    return _make(np.concatenate([p.data for p in parts], axis=-1), tuple(parts), vjp)


def slice_features(a, start: int, stop: int):
    a = _lift(a)
    total = a.shape[-1]

    def vjp(g):
        return (pad_features(g, start, total),)

    return _make(np.ascontiguousarray(a.data[..., start:stop]), (a,), vjp)


def pad_features(a, start: int, total: int):
    """Embed ``a`` into a zero block of ``total`` feature columns at ``start``."""
    a = _lift(a)
    width = a.shape[-1]
    out = np.zeros(a.shape[:-1] + (total,), dtype=np.float32)
    out[..., start:start + width] = a.data

    def vjp(g):
        return (slice_features(g, start, start + width),)

    return _make(out, (a,), vjp)


def slice_rows(a, start: int, stop: int):
    """Slice along the leading (time) axis."""
    a = _lift(a)
    total = a.shape[0]

    def vjp(g):
        return (pad_rows(g, start, total),)

    return _make(np.ascontiguousarray(a.data[start:stop]), (a,), vjp)


def pad_rows(a, start: int, total: int):
    a = _lift(a)
    n = a.shape[0]
    out = np.zeros((total,) + a.shape[1:], dtype=np.float32)
    out[start:start + n] = a.data

    def vjp(g):
        return (slice_rows(g, start, start + n),)

    return _make(out, (a,), vjp)


def embedding(table, ids):
    """Row lookup: table (N x d) indexed by an integer id sequence."""
    table = _lift(table)
    ids = np.asarray(ids, dtype=np.intp)
    if ids.ndim != 1:
        raise ShapeError("embedding needs a flat id sequence")
    if ids.size and (ids.min() < 0 or ids.max() >= table.shape[0]):
        raise IndexError(
            f"embedding id out of range [0, {table.shape[0]}): "
            f"{int(ids.min())}..{int(ids.max())}"
        )

    def vjp(g):
        return (embedding_grad(g, ids, table.shape[0]),)

    return _make(table.data[ids], (table,), vjp)


def embedding_grad(g, ids, n_rows: int):
    g = _lift(g)
    ids = np.asarray(ids, dtype=np.intp)
    out = np.zeros((n_rows, g.shape[-1]), dtype=np.float32)
    np.add.at(out, ids, g.data)

    def vjp(u):
        return (embedding(u, ids),)

    return _make(out, (g,), vjp)


def stop_gradient(a) -> Tensor:
    return Tensor(_lift(a).data)


# ---------------------------------------------------------------------------
# convolution along the time axis ("same-ceil" padding)


def _conv_geometry(t_in: int, w: int, stride: int):
    left = (w - 1) // 2
    t_out = -(-t_in // stride)
    return left, t_out


def conv1d(x, kernel, stride: int):
    """Cross-correlation along time: x (T x d_in), kernel (w x d_in x d_out).

    Zero padding is symmetric-ceil: left pad (w-1)//2, right pad as needed
    so the output length is exactly ceil(T/stride).
    """
    x, kernel = _lift(x), _lift(kernel)
    if x.ndim != 2 or kernel.ndim != 3:
        raise ShapeError(
            f"conv1d expects (T x d_in) input and (w x d_in x d_out) kernel, "
            f"got {x.shape} and {kernel.shape}"
        )
    t_in, d_in = x.shape
    if t_in == 0:
        raise ShapeError("conv1d requires at least one input frame")
    w, kd_in, _ = kernel.shape
    if w < 1:
        raise ShapeError("kernel width must be >= 1")
    if stride < 1:
        raise ShapeError("stride must be >= 1")
    if kd_in != d_in:
        raise ShapeError(
            f"kernel expects {kd_in} input channels, input has {d_in}"
        )
    left, t_out = _conv_geometry(t_in, w, stride)
    data = _k_conv_fwd(
        np.ascontiguousarray(x.data), np.ascontiguousarray(kernel.data),
        stride, left, t_out,
    )

    def vjp(g):
        gx = _conv1d_input_vjp(g, kernel, stride, left, t_in) if x.requires_grad else None
        gk = _conv1d_kernel_vjp(x, g, w, stride, left) if kernel.requires_grad else None
        return gx, gk

    return _make(data, (x, kernel), vjp)


def _conv1d_input_vjp(g, kernel, stride: int, left: int, t_in: int):
    """Adjoint of conv1d w.r.t. its input; itself differentiable in g and kernel."""
    g, kernel = _lift(g), _lift(kernel)
    data = _k_conv_gx(
        np.ascontiguousarray(g.data), np.ascontiguousarray(kernel.data),
        stride, left, t_in,
    )
    t_out = g.shape[0]
    w = kernel.shape[0]

    def vjp(u):
        gg = conv1d(u, kernel, stride) if g.requires_grad else None
        gk = _conv1d_kernel_vjp(u, g, w, stride, left) if kernel.requires_grad else None
        return gg, gk

    out = _make(data, (g, kernel), vjp)
    if out.shape[0] != t_in or g.shape[0] != t_out:
        raise ShapeError("inconsistent convolution geometry")
    return out


def _conv1d_kernel_vjp(x, g, w: int, stride: int, left: int):
    """Adjoint of conv1d w.r.t. its kernel; itself differentiable in x and g."""
    x, g = _lift(x), _lift(g)
    data = _k_conv_gk(
        np.ascontiguousarray(x.data), np.ascontiguousarray(g.data),
        w, stride, left,
    )
    t_in = x.shape[0]

    def vjp(u):
        gx = _conv1d_input_vjp(g, u, stride, left, t_in) if x.requires_grad else None
        gg = conv1d(x, u, stride) if g.requires_grad else None
        return gx, gg

    return _make(data, (x, g), vjp)


# ---------------------------------------------------------------------------
# composites


def linear(x, weight, bias):
    return add(matmul(x, weight), bias)


def layer_norm(x, gain, bias, eps: float = 1e-5):
    """Normalize over the last axis, then apply an affine gain and bias."""
    x = _lift(x)
    mu = mean_axis(x, -1, keepdims=True)
    xc = sub(x, mu)
    var = mean_axis(mul(xc, xc), -1, keepdims=True)
    normed = mul(xc, div(_lift(1.0), sqrt(add(var, _lift(eps)))))
    return add(mul(normed, gain), bias)


def sample_gumbel(rng: np.random.Generator, shape) -> np.ndarray:
    u = rng.random(size=shape, dtype=np.float32)
    return (-np.log(-np.log(u + 1e-20) + 1e-20)).astype(np.float32)


def gumbel_softmax(logits, temperature: float, rng: np.random.Generator):
    """softmax((logits + Gumbel noise) / temperature) over the last axis."""
    if temperature <= 0:
        raise ValueError(f"temperature must be positive, got {temperature}")
    logits = _lift(logits)
    noise = Tensor(sample_gumbel(rng, logits.shape))
    return softmax(mul(add(logits, noise), _lift(1.0 / float(temperature))))


def argmax_last(a) -> np.ndarray:
    """Row-wise argmax over the last axis; ties resolve to the lower index."""
    data = a.data if isinstance(a, Tensor) else np.asarray(a)
    return np.argmax(data, axis=-1)


def one_hot(ids, depth: int) -> np.ndarray:
    ids = np.asarray(ids, dtype=np.intp)
    out = np.zeros((ids.size, depth), dtype=np.float32)
    out[np.arange(ids.size), ids] = 1.0
    return out
