"""Minimal reverse-mode automatic differentiation over numpy arrays.

Every operation records its inputs and a closure that routes the output
gradient back to them; calling :func:`backward` on a scalar loss walks
the recorded graph in reverse topological order.  Arrays are 64-bit
floats throughout, and every tensor is checked for NaN/Inf on creation,
so a divergence surfaces at the op that produced it.

The op set is exactly what the models need: dense linear algebra,
elementwise arithmetic, relu/softplus, row gather and segment-sum for
sparse message passing, concatenation, and reductions.
"""

from __future__ import annotations

import numpy as np
from scipy import sparse


class ShapeMismatchError(ValueError):
    """Operands have incompatible shapes for the requested op."""


class GraphCycleError(RuntimeError):
    """The recorded graph contains a cycle (defensive; construction
    order makes this impossible)."""


class Tensor:
    """One node of the computation graph."""

    __slots__ = ("data", "grad", "requires_grad", "parents", "backward_fn")

    def __init__(self, data, requires_grad: bool = False,
                 parents: tuple["Tensor", ...] = (), backward_fn=None):
        arr = np.asarray(data, dtype=np.float64)
        # One-pass finiteness gate: a NaN/Inf anywhere leaves the sum
        # non-finite.  (A finite array whose sum overflows is rejected
        # too; values of that size are divergence in practice.)
        with np.errstate(over="ignore", invalid="ignore"):
            if not np.isfinite(arr.sum()):
                raise FloatingPointError("non-finite values entering the graph")
        self.data = arr
        self.grad: np.ndarray | None = None
        self.requires_grad = requires_grad or any(p.requires_grad for p in parents)
        self.parents = parents if self.requires_grad else ()
        self.backward_fn = backward_fn if self.requires_grad else None

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    def item(self) -> float:
        return float(self.data)

    def zero_grad(self) -> None:
        self.grad = np.zeros_like(self.data)

    def _accumulate(self, grad: np.ndarray) -> None:
        if self.grad is None:
            # Copy: backward closures may hand out views of their own
            # gradient, which must not be mutated by later additions.
            self.grad = np.array(grad, dtype=np.float64)
        else:
            self.grad += grad

    # -- arithmetic ----------------------------------------------------

    def __add__(self, other):
        other = as_tensor(other)
        out_data = self.data + other.data

        def backward_fn(grad):
            return (_unbroadcast(grad, self.shape),
                    _unbroadcast(grad, other.shape))

        return Tensor(out_data, parents=(self, other), backward_fn=backward_fn)

    def __sub__(self, other):
        other = as_tensor(other)
        out_data = self.data - other.data

        def backward_fn(grad):
            return (_unbroadcast(grad, self.shape),
                    _unbroadcast(-grad, other.shape))

        return Tensor(out_data, parents=(self, other), backward_fn=backward_fn)

    def __mul__(self, other):
        other = as_tensor(other)
        out_data = self.data * other.data

        def backward_fn(grad):
            return (_unbroadcast(grad * other.data, self.shape),
                    _unbroadcast(grad * self.data, other.shape))

        return Tensor(out_data, parents=(self, other), backward_fn=backward_fn)

    def __neg__(self):
        def backward_fn(grad):
            return (-grad,)

        return Tensor(-self.data, parents=(self,), backward_fn=backward_fn)

    __radd__ = __add__
    __rmul__ = __mul__

    def __rsub__(self, other):
        return as_tensor(other) - self

    def __matmul__(self, other):
        other = as_tensor(other)
        if self.data.ndim != 2 or other.data.ndim != 2 \
                or self.shape[1] != other.shape[0]:
            raise ShapeMismatchError(
                f"matmul of {self.shape} with {other.shape}")
        out_data = self.data @ other.data

        def backward_fn(grad):
            return grad @ other.data.T, self.data.T @ grad

        return Tensor(out_data, parents=(self, other), backward_fn=backward_fn)

    # -- nonlinearities ------------------------------------------------

    def relu(self):
        mask = self.data > 0

        def backward_fn(grad):
            return (grad * mask,)

        return Tensor(np.maximum(self.data, 0.0), parents=(self,),
                      backward_fn=backward_fn)

    def leaky_relu(self, slope: float = 0.01):
        mask = self.data > 0

        def backward_fn(grad):
            return (grad * np.where(mask, 1.0, slope),)

        return Tensor(np.where(mask, self.data, slope * self.data),
                      parents=(self,), backward_fn=backward_fn)

    def softplus(self):
        # log(1 + exp(x)) via logaddexp for overflow safety.
        out_data = np.logaddexp(0.0, self.data)
        sigmoid = 1.0 / (1.0 + np.exp(-self.data))

        def backward_fn(grad):
            return (grad * sigmoid,)

        return Tensor(out_data, parents=(self,), backward_fn=backward_fn)

    # -- shape ops -----------------------------------------------------

    def reshape(self, *shape):
        old_shape = self.shape

        def backward_fn(grad):
            return (grad.reshape(old_shape),)

        return Tensor(self.data.reshape(*shape), parents=(self,),
                      backward_fn=backward_fn)

    def column(self, index: int):
        """One column of a 2-D tensor, as a 1-D tensor."""
        n_cols = self.shape[1]

        def backward_fn(grad):
            full = np.zeros(self.shape)
            full[:, index] = grad
            return (full,)

        if not 0 <= index < n_cols:
            raise ShapeMismatchError(f"column {index} of {self.shape}")
        return Tensor(self.data[:, index], parents=(self,),
                      backward_fn=backward_fn)

    def gather_rows(self, index):
        """Rows selected by an integer index vector (with repetition)."""
        index = as_index(index)
        n_rows = self.shape[0]

        def backward_fn(grad):
            return (index.scatter_add(grad, n_rows),)

        return Tensor(self.data[index.index], parents=(self,),
                      backward_fn=backward_fn)

    # -- reductions ----------------------------------------------------

    def sum(self):
        shape = self.shape

        def backward_fn(grad):
            return (np.full(shape, grad),)

        return Tensor(self.data.sum(), parents=(self,), backward_fn=backward_fn)

    def mean(self):
        shape = self.shape
        count = self.data.size

        def backward_fn(grad):
            return (np.full(shape, grad / count),)

        return Tensor(self.data.mean(), parents=(self,), backward_fn=backward_fn)


def as_tensor(value) -> Tensor:
    return value if isinstance(value, Tensor) else Tensor(value)


def _unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Sum a gradient down to the shape the operand had before
    broadcasting."""
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


def maximum(a: Tensor, b: Tensor) -> Tensor:
    """Elementwise maximum; gradient follows the winning branch
    (ties route to ``b``)."""
    a, b = as_tensor(a), as_tensor(b)
    take_a = a.data > b.data

    def backward_fn(grad):
        return (_unbroadcast(grad * take_a, a.shape),
                _unbroadcast(grad * ~take_a, b.shape))

    return Tensor(np.where(take_a, a.data, b.data), parents=(a, b),
                  backward_fn=backward_fn)


def concat_columns(tensors: list[Tensor]) -> Tensor:
    """Concatenate 2-D tensors along columns."""
    rows = {t.shape[0] for t in tensors}
    if len(rows) != 1:
        raise ShapeMismatchError(f"row counts differ: {sorted(rows)}")
    widths = [t.shape[1] for t in tensors]
    offsets = np.cumsum([0] + widths)

    def backward_fn(grad):
        return tuple(grad[:, offsets[i]:offsets[i + 1]]
                     for i in range(len(tensors)))

    return Tensor(np.concatenate([t.data for t in tensors], axis=1),
                  parents=tuple(tensors), backward_fn=backward_fn)


class IndexVector:
    """Integer row indices with a lazily built sparse scatter matrix.

    Scatter-adds (the aggregation step of message passing and its
    gather counterpart's gradient) become one CSR matmul; the matrix is
    built once and reused, which matters when the same graph batch is
    trained for many epochs.
    """

    __slots__ = ("index", "_plans")

    def __init__(self, index):
        self.index = np.asarray(index, dtype=np.int64)
        if self.index.ndim != 1:
            raise ShapeMismatchError("index vector must be one-dimensional")
        self._plans: dict[int, sparse.csr_matrix] = {}

    @property
    def size(self) -> int:
        return self.index.size

    def scatter_matrix(self, n_rows: int) -> sparse.csr_matrix:
        plan = self._plans.get(n_rows)
        if plan is None:
            ones = np.ones(self.index.size)
            positions = np.arange(self.index.size)
            plan = sparse.csr_matrix(
                (ones, (self.index, positions)),
                shape=(n_rows, self.index.size))
            self._plans[n_rows] = plan
        return plan

    def scatter_add(self, values: np.ndarray, n_rows: int) -> np.ndarray:
        return self.scatter_matrix(n_rows) @ values


def as_index(index) -> IndexVector:
    return index if isinstance(index, IndexVector) else IndexVector(index)


def segment_sum(values: Tensor, segment_ids, num_segments: int) -> Tensor:
    """Sum rows of ``values`` into ``num_segments`` buckets.

    Empty segments yield zero rows; the backward pass is a plain row
    gather.
    """
    segments = as_index(segment_ids)
    if values.data.ndim != 2 or segments.index.shape != (values.shape[0],):
        raise ShapeMismatchError(
            f"segment_sum of {values.shape} with ids {segments.index.shape}")
    if segments.size and (segments.index.min() < 0
                          or segments.index.max() >= num_segments):
        raise ShapeMismatchError("segment ids out of range")

    out = segments.scatter_add(values.data, num_segments)

    def backward_fn(grad):
        return (grad[segments.index],)

    return Tensor(out, parents=(values,), backward_fn=backward_fn)


def backward(loss: Tensor) -> None:
    """Populate gradients of everything reachable from a scalar loss."""
    if loss.data.ndim != 0:
        raise ShapeMismatchError("backward expects a scalar loss")
    topo: list[Tensor] = []
    on_path: set[int] = set()
    finished: set[int] = set()
    stack: list[tuple[Tensor, bool]] = [(loss, False)]
    while stack:
        node, processed = stack.pop()
        if processed:
            on_path.discard(id(node))
            finished.add(id(node))
            topo.append(node)
            continue
        if id(node) in finished:
            continue
        if id(node) in on_path:
            raise GraphCycleError("cycle detected in the recorded graph")
        on_path.add(id(node))
        stack.append((node, True))
        for parent in node.parents:
            if id(parent) not in finished:
                stack.append((parent, False))

    loss._accumulate(np.ones_like(loss.data))
    for node in reversed(topo):
        if node.backward_fn is None or node.grad is None:
            continue
        grads = node.backward_fn(node.grad)
        for parent, grad in zip(node.parents, grads):
            if parent.requires_grad:
                parent._accumulate(grad)
