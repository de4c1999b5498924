"""Reverse-mode autodiff on numpy buffers with an explicit tape.

The tape is also the training-memory proxy: each recorded node counts the
bytes of the buffers its adjoint will actually read (inputs, outputs or
masks, listed per op in ops.py). Nothing is recorded inside `no_grad()`
scopes or for ops none of whose inputs require grad, so frozen-backbone
forwards contribute zero nodes and zero saved bytes.

A Tape belongs to one forward/backward pair. `backward` consumes it: the
adjoint closures (and the activations they hold) are dropped, only the
node/byte statistics remain readable through `tape_stats`.
"""

from __future__ import annotations

from contextlib import contextmanager

import numpy as np

FLOAT_DTYPES = (np.float32, np.float64)


class AutogradError(RuntimeError):
    pass


class Tensor:
    """n-d float value with an optional gradient slot.

    `requires_grad=False` tensors never acquire a grad buffer. Op outputs
    are non-leaf; `backward` populates `.grad` only on requires-grad leaves.
    """

    __slots__ = ("values", "requires_grad", "grad", "is_leaf")

    def __init__(self, values, requires_grad: bool = False, dtype=None):
        arr = np.asarray(values, dtype=dtype)
        if arr.dtype not in FLOAT_DTYPES:
            arr = arr.astype(np.float32 if dtype is None else dtype)
        self.values = arr
        self.requires_grad = bool(requires_grad)
        self.grad = None
        self.is_leaf = True

    @property
    def shape(self) -> tuple[int, ...]:
        return self.values.shape

    @property
    def dtype(self):
        return self.values.dtype

    @property
    def nbytes(self) -> int:
        return self.values.nbytes

    def zero_grad(self) -> None:
        self.grad = None

    def copy_values(self) -> np.ndarray:
        return self.values.copy()

    def __repr__(self) -> str:
        flag = ", requires_grad=True" if self.requires_grad else ""
        return f"Tensor(shape={self.values.shape}, dtype={self.values.dtype}{flag})"


def tensor(values, requires_grad: bool = False, dtype=np.float32) -> Tensor:
    return Tensor(values, requires_grad=requires_grad, dtype=dtype)


def constant(values, dtype=np.float32) -> Tensor:
    return Tensor(values, requires_grad=False, dtype=dtype)


class Node:
    __slots__ = ("kind", "inputs", "output", "backward_fn", "saved_bytes")

    def __init__(self, kind, inputs, output, backward_fn, saved_bytes):
        self.kind = kind
        self.inputs = inputs
        self.output = output
        self.backward_fn = backward_fn
        self.saved_bytes = saved_bytes


class Tape:
    """Append-only record of differentiable ops, consumed once by backward."""

    __slots__ = ("nodes", "consumed", "adjoint_evals", "_output_ids", "_saved_bytes")

    def __init__(self):
        self.nodes: list[Node] = []
        self.consumed = False
        self.adjoint_evals = 0
        self._output_ids: set[int] = set()
        self._saved_bytes = 0

    def append(self, node: Node) -> None:
        if self.consumed:
            raise AutogradError("cannot record on a consumed tape")
        self.nodes.append(node)
        self._output_ids.add(id(node.output))
        self._saved_bytes += node.saved_bytes

    @property
    def node_count(self) -> int:
        return len(self.nodes)

    @property
    def saved_bytes(self) -> int:
        return self._saved_bytes


# Innermost entry wins: a Tape means "record here", None means no-grad.
_SCOPE_STACK: list[Tape | None] = []


def current_tape() -> Tape | None:
    return _SCOPE_STACK[-1] if _SCOPE_STACK else None


@contextmanager
def record(tape: Tape):
    """Record differentiable ops executed in this scope onto `tape`."""
    if tape.consumed:
        raise AutogradError("cannot record on a consumed tape")
    _SCOPE_STACK.append(tape)
    try:
        yield tape
    finally:
        _SCOPE_STACK.pop()


@contextmanager
def no_grad():
    """Run without recording; outputs do not require grad."""
    _SCOPE_STACK.append(None)
    try:
        yield
    finally:
        _SCOPE_STACK.pop()


def backward(loss: Tensor, tape: Tape) -> None:
    """Populate grads of requires-grad leaves reachable from `loss`.

    Walks the tape once in reverse; grads accumulate in reverse node order.
    Consumes the tape (closures and their saved activations are dropped;
    node statistics survive for tape_stats).
    """
    if tape.consumed:
        raise AutogradError("backward on a consumed tape")
    if not isinstance(loss, Tensor) or loss.values.size != 1:
        raise AutogradError("backward requires a scalar loss tensor")
    if id(loss) not in tape._output_ids:
        raise AutogradError("loss has no recorded path on this tape")

    pending: dict[int, np.ndarray] = {id(loss): np.ones_like(loss.values)}
    holders: dict[int, Tensor] = {id(loss): loss}
    for node in reversed(tape.nodes):
        g = pending.pop(id(node.output), None)
        if g is None:
            node.backward_fn = None
            continue
        tape.adjoint_evals += 1
        input_grads = node.backward_fn(g)
        node.backward_fn = None
        for x, gx in zip(node.inputs, input_grads):
            if gx is None:
                continue
            k = id(x)
            if k in pending:
                pending[k] = pending[k] + gx
            else:
                pending[k] = gx
                holders[k] = x
    tape.consumed = True

    for k, g in pending.items():
        t = holders[k]
        if t.is_leaf and t.requires_grad:
            t.grad = g if t.grad is None else t.grad + g


def tape_stats(tape: Tape) -> dict[str, int]:
    """Exact node count and saved-activation bytes of a tape."""
    return {"node_count": tape.node_count, "saved_bytes": tape.saved_bytes}


def apply_op(kind: str, out_values: np.ndarray, inputs: tuple[Tensor, ...],
             build_backward) -> Tensor:
    """Shared op plumbing: run or record depending on scope and inputs.

    `build_backward(need)` returns `(backward_fn, saved_arrays)` where
    `need[i]` says whether input i's grad will be requested. Only the
    buffers the closure actually captured count toward saved bytes.
    """
    tape = current_tape()
    need = tuple(x.requires_grad for x in inputs)
    if tape is None or not any(need):
        return Tensor(out_values)
    backward_fn, saved = build_backward(need)
    out = Tensor(out_values, requires_grad=True)
    out.is_leaf = False
    tape.append(Node(kind, inputs, out, backward_fn,
                     sum(int(a.nbytes) for a in saved)))
    return out
