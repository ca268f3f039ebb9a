"""Dense float64 tensors with reverse-mode automatic differentiation.

The graph is recorded eagerly: every operation that involves at least one
gradient-requiring tensor stores its parents and a backward closure on the
result. ``Tensor.backward()`` on a scalar root replays the closures in
reverse topological order, accumulates ``.grad`` buffers on the leaves and
then drops the graph so a tensor can be reused as a leaf in the next
iteration. Tensors are confined to a single optimization run; only
gradient-free tensors (e.g. network weights) may be shared across threads.
"""

from __future__ import annotations

from typing import Callable, Iterable, Optional, Union

import numpy as np

from .errors import ConfigurationError, NonFiniteError

Scalar = Union[int, float]


def _check_finite(data: np.ndarray, op: str) -> None:
    if not np.all(np.isfinite(data)):
        raise NonFiniteError(f"non-finite values produced by '{op}'")


class Tensor:
    """N-dimensional float64 array participating in an autodiff graph."""

    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward", "_op")

    def __init__(
        self,
        data,
        requires_grad: bool = False,
        _parents: tuple = (),
        _backward: Optional[Callable[[np.ndarray], None]] = None,
        _op: str = "leaf",
    ):
        arr = np.asarray(data, dtype=np.float64)
        _check_finite(arr, _op)
        self.data = arr
        self.grad: Optional[np.ndarray] = None
        self.requires_grad = bool(requires_grad)
        self._parents = _parents
        self._backward = _backward
        self._op = _op

    # -- basic introspection -------------------------------------------------

    @property
    def shape(self) -> tuple:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return self.data.size

    def item(self) -> float:
        return float(self.data.reshape(-1)[0]) if self.size == 1 else self._not_scalar()

    def _not_scalar(self):
        raise ConfigurationError(f"expected a scalar tensor, got shape {self.shape}")

    def __repr__(self) -> str:
        return f"Tensor(shape={self.shape}, op={self._op}, requires_grad={self.requires_grad})"

    # -- graph construction helpers -------------------------------------------

    @staticmethod
    def _result(data: np.ndarray, parents: Iterable["Tensor"], backward, op: str) -> "Tensor":
        parents = tuple(p for p in parents if isinstance(p, Tensor))
        if any(p.requires_grad or p._parents for p in parents):
            return Tensor(data, requires_grad=True, _parents=parents, _backward=backward, _op=op)
        return Tensor(data, _op=op)

    def _accumulate(self, g: np.ndarray) -> None:
        # Gradients are only kept where they can flow onward; constant
        # tensors shared between runs must never be written to.
        if not (self.requires_grad or self._parents):
            return
        if self.grad is None:
            self.grad = g.copy() if isinstance(g, np.ndarray) else np.asarray(g, dtype=np.float64)
        else:
            self.grad = self.grad + g

    @staticmethod
    def _coerce(value: Union["Tensor", np.ndarray, Scalar]) -> "Tensor":
        return value if isinstance(value, Tensor) else Tensor(np.asarray(value, dtype=np.float64))

    @staticmethod
    def _match_shapes(a: "Tensor", b: "Tensor", op: str) -> None:
        # Deliberately no general broadcasting: only same-shape or scalar.
        if a.shape != b.shape and a.size != 1 and b.size != 1:
            raise ConfigurationError(f"shape mismatch in '{op}': {a.shape} vs {b.shape}")

    @staticmethod
    def _reduce_to(g: np.ndarray, shape: tuple) -> np.ndarray:
        if g.shape == shape:
            return g
        return np.sum(g).reshape(shape) if np.prod(shape, dtype=int) == 1 else np.broadcast_to(g, shape)

    # -- arithmetic ------------------------------------------------------------

    def __add__(self, other) -> "Tensor":
        other = Tensor._coerce(other)
        Tensor._match_shapes(self, other, "add")
        out_data = self.data + other.data

        def backward(g: np.ndarray) -> None:
            self._accumulate(Tensor._reduce_to(g, self.shape))
            other._accumulate(Tensor._reduce_to(g, other.shape))

        return Tensor._result(out_data, (self, other), backward, "add")

    __radd__ = __add__

    def __neg__(self) -> "Tensor":
        def backward(g: np.ndarray) -> None:
            self._accumulate(-g)

        return Tensor._result(-self.data, (self,), backward, "neg")

    def __sub__(self, other) -> "Tensor":
        return self + (-Tensor._coerce(other))

    def __rsub__(self, other) -> "Tensor":
        return Tensor._coerce(other) + (-self)

    def __mul__(self, other) -> "Tensor":
        other = Tensor._coerce(other)
        Tensor._match_shapes(self, other, "mul")
        out_data = self.data * other.data

        def backward(g: np.ndarray) -> None:
            self._accumulate(Tensor._reduce_to(g * other.data, self.shape))
            other._accumulate(Tensor._reduce_to(g * self.data, other.shape))

        return Tensor._result(out_data, (self, other), backward, "mul")

    __rmul__ = __mul__

    def __pow__(self, exponent: Scalar) -> "Tensor":
        if not isinstance(exponent, (int, float)):
            raise ConfigurationError("tensor exponent must be a Python number")
        out_data = self.data ** exponent

        def backward(g: np.ndarray) -> None:
            self._accumulate(g * exponent * self.data ** (exponent - 1))

        return Tensor._result(out_data, (self,), backward, f"pow{exponent}")

    def __matmul__(self, other: "Tensor") -> "Tensor":
        other = Tensor._coerce(other)
        if self.ndim != 2 or other.ndim != 2:
            raise ConfigurationError(
                f"matmul expects 2-D operands, got {self.shape} @ {other.shape}"
            )
        if self.shape[1] != other.shape[0]:
            raise ConfigurationError(f"matmul shape mismatch: {self.shape} @ {other.shape}")
        out_data = self.data @ other.data

        def backward(g: np.ndarray) -> None:
            self._accumulate(g @ other.data.T)
            other._accumulate(self.data.T @ g)

        return Tensor._result(out_data, (self, other), backward, "matmul")

    @property
    def T(self) -> "Tensor":
        if self.ndim != 2:
            raise ConfigurationError(f"T expects a 2-D tensor, got {self.shape}")

        def backward(g: np.ndarray) -> None:
            self._accumulate(g.T)

        return Tensor._result(self.data.T.copy(), (self,), backward, "transpose")

    def reshape(self, *shape) -> "Tensor":
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        out_data = self.data.reshape(shape)

        def backward(g: np.ndarray) -> None:
            self._accumulate(g.reshape(self.shape))

        return Tensor._result(out_data, (self,), backward, "reshape")

    def __getitem__(self, key) -> "Tensor":
        out_data = self.data[key]

        def backward(g: np.ndarray) -> None:
            full = np.zeros_like(self.data)
            full[key] += g
            self._accumulate(full)

        return Tensor._result(np.ascontiguousarray(out_data), (self,), backward, "slice")

    def sum(self, axis=None) -> "Tensor":
        out_data = np.asarray(self.data.sum(axis=axis))

        def backward(g: np.ndarray) -> None:
            if axis is None:
                self._accumulate(np.broadcast_to(g, self.shape).astype(np.float64))
            else:
                expanded = np.expand_dims(g, axis)
                self._accumulate(np.broadcast_to(expanded, self.shape).astype(np.float64))

        return Tensor._result(out_data, (self,), backward, "sum")

    def mean(self, axis=None) -> "Tensor":
        if axis is None:
            count = self.size
        else:
            axes = axis if isinstance(axis, tuple) else (axis,)
            count = int(np.prod([self.shape[a] for a in axes]))
        return self.sum(axis=axis) * (1.0 / count)

    # -- backward pass ----------------------------------------------------------

    def backward(self) -> dict:
        """Backpropagate from a scalar root.

        Returns a map from every gradient-requiring leaf reached by the
        traversal to its gradient buffer; the same buffers are left on the
        leaves' ``.grad``. The recorded graph is released afterwards.
        """
        if self.size != 1:
            raise ConfigurationError(
                f"backward() requires a scalar root, got shape {self.shape}"
            )

        topo: list[Tensor] = []
        visited: set[int] = set()
        stack: list[tuple[Tensor, bool]] = [(self, False)]
        while stack:
            node, processed = stack.pop()
            if processed:
                topo.append(node)
                continue
            if id(node) in visited:
                continue
            visited.add(id(node))
            stack.append((node, True))
            for parent in node._parents:
                if id(parent) not in visited:
                    stack.append((parent, False))

        self.grad = np.ones_like(self.data)
        for node in reversed(topo):
            if node._backward is not None and node.grad is not None:
                node._backward(node.grad)
                _check_finite(node.grad, f"backward:{node._op}")

        leaves = {
            node: node.grad
            for node in topo
            if node.requires_grad and not node._parents and node.grad is not None
        }

        # Consume the graph: interior nodes cannot be backpropagated twice
        # and their buffers are freed eagerly.
        for node in topo:
            if node._parents:
                node._parents = ()
                node._backward = None
                node.grad = None
        return leaves

    def zero_grad(self) -> None:
        self.grad = None

    def detached(self) -> "Tensor":
        """Copy of the values with no graph linkage and no gradient."""
        return Tensor(self.data.copy())


# -- neural network building blocks ---------------------------------------------


def relu(x: Tensor) -> Tensor:
    """Elementwise max(0, x); the subgradient at exactly 0 is 0."""
    mask = x.data > 0.0
    out_data = np.where(mask, x.data, 0.0)

    def backward(g: np.ndarray) -> None:
        x._accumulate(g * mask)

    return Tensor._result(out_data, (x,), backward, "relu")


def conv2d(
    x: Tensor,
    weights: Tensor,
    bias: Optional[Tensor] = None,
    stride: int = 1,
    padding: int = 0,
) -> Tensor:
    """2-D cross-correlation of a C×H×W input with C_out×C_in×k×k weights.

    Output spatial extent is floor((H + 2*padding - k) / stride) + 1.
    Differentiable with respect to the input, the weights and the bias.
    """
    if x.ndim != 3:
        raise ConfigurationError(f"conv2d input must be C×H×W, got {x.shape}")
    if weights.ndim != 4 or weights.shape[2] != weights.shape[3]:
        raise ConfigurationError(
            f"conv2d weights must be C_out×C_in×k×k with square kernel, got {weights.shape}"
        )
    if stride < 1 or padding < 0:
        raise ConfigurationError(f"conv2d needs stride >= 1 and padding >= 0, got {stride}, {padding}")
    c_in, h, w = x.shape
    c_out, wc_in, k, _ = weights.shape
    if wc_in != c_in:
        raise ConfigurationError(
            f"conv2d channel mismatch: input {x.shape} vs weights {weights.shape}"
        )
    if k > h + 2 * padding or k > w + 2 * padding:
        raise ConfigurationError(
            f"conv2d kernel {k}×{k} larger than padded input {h + 2 * padding}×{w + 2 * padding}"
        )
    if bias is not None and bias.shape != (c_out,):
        raise ConfigurationError(f"conv2d bias must have shape ({c_out},), got {bias.shape}")

    xp = np.pad(x.data, ((0, 0), (padding, padding), (padding, padding))) if padding else x.data
    h_out = (h + 2 * padding - k) // stride + 1
    w_out = (w + 2 * padding - k) // stride + 1
    # windows: (C_in, H_out, W_out, k, k) view, no copy
    windows = np.lib.stride_tricks.sliding_window_view(xp, (k, k), axis=(1, 2))[
        :, ::stride, ::stride
    ]
    out_data = np.tensordot(weights.data, windows, axes=([1, 2, 3], [0, 3, 4]))
    if bias is not None:
        out_data = out_data + bias.data[:, None, None]

    def backward(g: np.ndarray) -> None:
        if weights.requires_grad or weights._parents:
            dw = np.tensordot(g, windows, axes=([1, 2], [1, 2]))
            weights._accumulate(dw)
        if bias is not None and (bias.requires_grad or bias._parents):
            bias._accumulate(g.sum(axis=(1, 2)))
        if x.requires_grad or x._parents:
            dxp = np.zeros_like(xp)
            # One strided accumulation per kernel offset; exact for any stride.
            for di in range(k):
                for dj in range(k):
                    contrib = np.tensordot(weights.data[:, :, di, dj], g, axes=([0], [0]))
                    dxp[
                        :,
                        di : di + stride * h_out : stride,
                        dj : dj + stride * w_out : stride,
                    ] += contrib
            dx = dxp[:, padding : padding + h, padding : padding + w] if padding else dxp
            x._accumulate(dx)

    parents = (x, weights) if bias is None else (x, weights, bias)
    return Tensor._result(out_data, parents, backward, "conv2d")


def avg_pool2d(x: Tensor, window: int) -> Tensor:
    """Non-overlapping mean pooling; H and W must be divisible by the window."""
    if x.ndim != 3:
        raise ConfigurationError(f"avg_pool2d input must be C×H×W, got {x.shape}")
    if window < 1:
        raise ConfigurationError(f"pool window must be positive, got {window}")
    c, h, w = x.shape
    if h % window or w % window:
        raise ConfigurationError(
            f"avg_pool2d extents {h}×{w} not divisible by window {window}"
        )
    h_out, w_out = h // window, w // window
    blocks = x.data.reshape(c, h_out, window, w_out, window)
    out_data = blocks.mean(axis=(2, 4))

    def backward(g: np.ndarray) -> None:
        spread = np.repeat(np.repeat(g, window, axis=1), window, axis=2)
        x._accumulate(spread / (window * window))

    return Tensor._result(out_data, (x,), backward, "avg_pool2d")


def max_pool2d(x: Tensor, window: int) -> Tensor:
    """Non-overlapping max pooling; ties route the gradient to the first maximum."""
    if x.ndim != 3:
        raise ConfigurationError(f"max_pool2d input must be C×H×W, got {x.shape}")
    if window < 1:
        raise ConfigurationError(f"pool window must be positive, got {window}")
    c, h, w = x.shape
    if h % window or w % window:
        raise ConfigurationError(
            f"max_pool2d extents {h}×{w} not divisible by window {window}"
        )
    h_out, w_out = h // window, w // window
    blocks = x.data.reshape(c, h_out, window, w_out, window).transpose(0, 1, 3, 2, 4)
    flat = blocks.reshape(c, h_out, w_out, window * window)
    idx = flat.argmax(axis=-1)
    out_data = np.take_along_axis(flat, idx[..., None], axis=-1)[..., 0]

    def backward(g: np.ndarray) -> None:
        dflat = np.zeros_like(flat)
        np.put_along_axis(dflat, idx[..., None], g[..., None], axis=-1)
        dx = (
            dflat.reshape(c, h_out, w_out, window, window)
            .transpose(0, 1, 3, 2, 4)
            .reshape(c, h, w)
        )
        x._accumulate(dx)

    return Tensor._result(out_data, (x,), backward, "max_pool2d")
