"""Dense f64 tensors and a reverse-mode gradient tape.

Operations record themselves on the innermost active :class:`Tape` when at
least one input requires a gradient. Outside a tape nothing is recorded, so
plain evaluation (e.g. inference, pseudo-label assignment) carries no
bookkeeping cost.
"""

from __future__ import annotations

import os
from typing import Callable, Iterable, Sequence

import numpy as np

from molssl.errors import NonScalarLoss

DEBUG = os.environ.get("MOLSSL_DEBUG", "0") == "1"

_tape_stack: list["Tape"] = []

# op name -> multiplicative factor applied to that op's input gradients.
# Only used by the self-test to prove that a corrupted VJP is detected.
_grad_faults: dict[str, float] = {}


class Tensor:
    __slots__ = ("data", "requires_grad", "name", "__weakref__")

    def __init__(self, data, requires_grad: bool = False, name: str | None = None):
        self.data = np.asarray(data, dtype=np.float64)
        self.requires_grad = requires_grad
        self.name = name

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    def __len__(self):
        return self.data.shape[0]

    def __repr__(self):
        tag = f" name={self.name!r}" if self.name else ""
        return f"Tensor(shape={self.shape}{tag}, requires_grad={self.requires_grad})"

    def numpy(self) -> np.ndarray:
        return self.data

    def item(self) -> float:
        return float(self.data.reshape(-1)[0]) if self.data.size == 1 else float(self.data)

    def detach(self) -> "Tensor":
        return Tensor(self.data)

    # operator sugar; implementations live in ops
    def __add__(self, other):
        from molssl.tensorkit import ops
        return ops.add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        from molssl.tensorkit import ops
        return ops.sub(self, other)

    def __rsub__(self, other):
        from molssl.tensorkit import ops
        return ops.sub(other, self)

    def __mul__(self, other):
        from molssl.tensorkit import ops
        return ops.mul(self, other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if not np.isscalar(other):
            raise TypeError("only division by a scalar is supported")
        from molssl.tensorkit import ops
        return ops.mul(self, 1.0 / other)

    def __neg__(self):
        from molssl.tensorkit import ops
        return ops.mul(self, -1.0)

    def __matmul__(self, other):
        from molssl.tensorkit import ops
        return ops.matmul(self, other)


def parameter(data, name: str | None = None) -> Tensor:
    return Tensor(np.array(data, dtype=np.float64), requires_grad=True, name=name)


def as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


class _Node:
    __slots__ = ("out", "inputs", "vjp", "op")

    def __init__(self, out, inputs, vjp, op):
        self.out = out
        self.inputs = inputs
        self.vjp = vjp
        self.op = op


class Tape:
    """Ordered record of primitive operations; use as a context manager."""

    def __init__(self):
        self.nodes: list[_Node] = []

    def __enter__(self) -> "Tape":
        _tape_stack.append(self)
        return self

    def __exit__(self, *exc):
        popped = _tape_stack.pop()
        assert popped is self
        return False

    def __len__(self):
        return len(self.nodes)

    def ops(self) -> list[str]:
        return [n.op for n in self.nodes]

    def backward(self, loss: Tensor, wrt: Sequence[Tensor]) -> list[np.ndarray]:
        return backward(self, loss, wrt)


def active_tape() -> Tape | None:
    return _tape_stack[-1] if _tape_stack else None


def record(op: str, out_data: np.ndarray, inputs: Sequence[Tensor],
           vjp: Callable[[np.ndarray], Iterable[np.ndarray | None]]) -> Tensor:
    """Wrap ``out_data`` in a Tensor and, if needed, put it on the active tape."""
    if DEBUG and not np.all(np.isfinite(out_data)):
        if all(np.all(np.isfinite(t.data)) for t in inputs):
            raise FloatingPointError(f"{op} produced non-finite values from finite inputs")
    tape = active_tape()
    needs = tape is not None and any(t.requires_grad for t in inputs)
    out = Tensor(out_data, requires_grad=needs)
    if needs:
        tape.nodes.append(_Node(out, tuple(inputs), vjp, op))
    return out


def backward(tape: Tape, loss: Tensor, wrt: Sequence[Tensor]) -> list[np.ndarray]:
    """Gradients of scalar ``loss`` with respect to each tensor in ``wrt``.

    Tensors that do not influence the loss get a zero gradient of their shape.
    """
    if loss.data.size != 1:
        raise NonScalarLoss(f"loss must be scalar, got shape {loss.shape}")
    grads: dict[int, np.ndarray] = {id(loss): np.ones_like(loss.data)}
    for node in reversed(tape.nodes):
        g = grads.pop(id(node.out), None)
        if g is None:
            continue
        in_grads = node.vjp(g)
        factor = _grad_faults.get(node.op)
        for inp, ig in zip(node.inputs, in_grads):
            if ig is None or not inp.requires_grad:
                continue
            if factor is not None:
                ig = ig * factor
            key = id(inp)
            prev = grads.get(key)
            grads[key] = ig if prev is None else prev + ig
    return [
        np.array(grads[id(p)], dtype=np.float64).reshape(p.shape) if id(p) in grads else np.zeros_like(p.data)
        for p in wrt
    ]


class inject_gradient_fault:
    """Scale the input gradients of every ``op`` node by ``factor`` (testing aid)."""

    def __init__(self, op: str, factor: float = 1.5):
        self.op = op
        self.factor = factor

    def __enter__(self):
        _grad_faults[self.op] = self.factor
        return self

    def __exit__(self, *exc):
        _grad_faults.pop(self.op, None)
        return False
