"""Dense float64 tensors with reverse-mode automatic differentiation.

Values are immutable numpy arrays of rank 0..3.  Differentiation is
define-by-run: a Tape records one node per operation whose inputs are
bound to it, each node holding (parent id, vector-Jacobian product)
closures.  ``backward`` walks the records in reverse order from a scalar
loss, accumulating adjoints additively, and returns a gradient per leaf.

Operations are free functions.  They accept Tensors, numpy arrays, or
Python scalars; non-Tensor inputs are lifted to constants.  When no
input is bound to a tape the result is a plain constant and nothing is
recorded, so the same code path serves both inference and training.

``grad_check`` compares tape gradients against central finite
differences and is the ground truth the rest of the package is tested
against.
"""

from __future__ import annotations

from typing import Callable, Sequence

import numpy as np
from scipy import special as _sp

from .errors import (
    ContractError,
    DimensionError,
    NumericError,
    ParameterError,
    RankError,
)

MAX_RANK = 3


class Tensor:
    """Immutable float64 array, optionally bound to a Tape node.

    ``data`` is always read-only; building a Tensor from external data
    copies it, so callers can never mutate a value after the fact.
    """

    __slots__ = ("data", "tape", "nid")

    def __init__(self, data):
        arr = np.array(data, dtype=np.float64)
        if arr.ndim > MAX_RANK:
            raise RankError(f"rank {arr.ndim} exceeds the supported maximum of {MAX_RANK}")
        arr.setflags(write=False)
        self.data = arr
        self.tape = None
        self.nid = None

    @classmethod
    def _wrap(cls, arr: np.ndarray, tape: "Tape | None" = None, nid: int | None = None) -> "Tensor":
        # Internal fast path: trusts ``arr`` (freshly computed), no copy.
        # asarray (not ascontiguousarray) because the latter promotes 0-d
        # arrays to rank 1.
        t = object.__new__(cls)
        arr = np.asarray(arr, dtype=np.float64)
        if arr.ndim > MAX_RANK:
            raise RankError(f"rank {arr.ndim} exceeds the supported maximum of {MAX_RANK}")
        arr.setflags(write=False)
        t.data = arr
        t.tape = tape
        t.nid = nid
        return t

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return self.data.size

    def item(self) -> float:
        return float(self.data)

    def __repr__(self) -> str:
        bound = f", tape node {self.nid}" if self.tape is not None else ""
        return f"Tensor(shape={self.shape}{bound})\n{self.data}"

    # Operator sugar; all arithmetic is defined by the module-level ops.
    def __add__(self, other):
        return add(self, other)

    def __radd__(self, other):
        return add(other, self)

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        return mul(self, other)

    def __rmul__(self, other):
        return mul(other, self)

    def __truediv__(self, other):
        return div(self, other)

    def __rtruediv__(self, other):
        return div(other, self)

    def __matmul__(self, other):
        return matmul(self, other)

    def __neg__(self):
        return neg(self)


class Tape:
    """Append-only trace of operations for one differentiation pass."""

    __slots__ = ("_parents", "_leaves")

    def __init__(self):
        # _parents[nid] is a tuple of (parent nid, vjp closure) pairs.
        self._parents: list[tuple[tuple[int, Callable], ...]] = []
        # leaf nid -> shape, used to zero-fill gradients of unused leaves.
        self._leaves: dict[int, tuple[int, ...]] = {}

    def __len__(self) -> int:
        return len(self._parents)

    def _push(self, parents: tuple[tuple[int, Callable], ...]) -> int:
        self._parents.append(parents)
        return len(self._parents) - 1

    def leaf(self, value) -> Tensor:
        """Bind ``value`` as a watched input; its gradient will be reported."""
        t = value if isinstance(value, Tensor) else Tensor(value)
        nid = self._push(())
        self._leaves[nid] = t.data.shape
        return Tensor._wrap(t.data, self, nid)

    @property
    def leaf_ids(self) -> tuple[int, ...]:
        return tuple(self._leaves)


def _lift(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def _join(out: np.ndarray, entries: Sequence[tuple[Tensor, Callable]]) -> Tensor:
    """Record a node if any input is tape-bound; otherwise return a constant."""
    tape = None
    for t, _ in entries:
        if t.tape is not None:
            if tape is None:
                tape = t.tape
            elif tape is not t.tape:
                raise ContractError("operation mixes tensors bound to different tapes")
    if tape is None:
        return Tensor._wrap(out)
    parents = tuple((t.nid, vjp) for t, vjp in entries if t.tape is not None)
    return Tensor._wrap(out, tape, tape._push(parents))


def _unbroadcast(g: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Sum ``g`` down to ``shape``, undoing numpy broadcasting."""
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for ax, (ge, se) in enumerate(zip(g.shape, shape)):
        if se == 1 and ge != 1:
            g = g.sum(axis=ax, keepdims=True)
    return g


def _check_broadcast(a: Tensor, b: Tensor, op: str) -> tuple[int, ...]:
    try:
        return np.broadcast_shapes(a.shape, b.shape)
    except ValueError:
        raise DimensionError(f"{op}: shapes {a.shape} and {b.shape} do not broadcast") from None


def _require_finite(arr: np.ndarray, op: str) -> None:
    if not np.all(np.isfinite(arr)):
        raise NumericError(f"{op} produced non-finite values")


# ---------------------------------------------------------------------------
# arithmetic


def add(a, b) -> Tensor:
    """Elementwise sum with numpy-style broadcasting."""
    a, b = _lift(a), _lift(b)
    _check_broadcast(a, b, "add")
    out = a.data + b.data
    return _join(out, (
        (a, lambda g: _unbroadcast(g, a.data.shape)),
        (b, lambda g: _unbroadcast(g, b.data.shape)),
    ))


# Contract alias: broadcasting addition is the documented entry point for
# bias application.
add_broadcast = add


def sub(a, b) -> Tensor:
    a, b = _lift(a), _lift(b)
    _check_broadcast(a, b, "sub")
    out = a.data - b.data
    return _join(out, (
        (a, lambda g: _unbroadcast(g, a.data.shape)),
        (b, lambda g: _unbroadcast(-g, b.data.shape)),
    ))


def mul(a, b) -> Tensor:
    a, b = _lift(a), _lift(b)
    _check_broadcast(a, b, "mul")
    out = a.data * b.data
    return _join(out, (
        (a, lambda g: _unbroadcast(g * b.data, a.data.shape)),
        (b, lambda g: _unbroadcast(g * a.data, b.data.shape)),
    ))


def div(a, b) -> Tensor:
    a, b = _lift(a), _lift(b)
    _check_broadcast(a, b, "div")
    with np.errstate(divide="ignore", invalid="ignore"):
        out = a.data / b.data
    _require_finite(out, "div")
    return _join(out, (
        (a, lambda g: _unbroadcast(g / b.data, a.data.shape)),
        (b, lambda g: _unbroadcast(-g * a.data / (b.data * b.data), b.data.shape)),
    ))


def neg(a) -> Tensor:
    a = _lift(a)
    return _join(-a.data, ((a, lambda g: -g),))


def matmul(a, b) -> Tensor:
    """Matrix product; a leading batch axis broadcasts against rank 2."""
    a, b = _lift(a), _lift(b)
    if a.ndim < 2 or b.ndim < 2:
        raise RankError(f"matmul requires rank >= 2 operands, got {a.shape} @ {b.shape}")
    if a.shape[-1] != b.shape[-2]:
        raise DimensionError(f"matmul: inner extents disagree for {a.shape} @ {b.shape}")
    if a.ndim == 3 and b.ndim == 3 and a.shape[0] != b.shape[0]:
        raise DimensionError(f"matmul: batch extents disagree for {a.shape} @ {b.shape}")
    out = a.data @ b.data

    def vjp_a(g):
        return _unbroadcast(g @ np.swapaxes(b.data, -1, -2), a.data.shape)

    def vjp_b(g):
        return _unbroadcast(np.swapaxes(a.data, -1, -2) @ g, b.data.shape)

    return _join(out, ((a, vjp_a), (b, vjp_b)))


def transpose(a) -> Tensor:
    """Swap the last two axes.  Rank-1 input is a contract violation."""
    a = _lift(a)
    if a.ndim < 2:
        raise RankError(f"transpose requires rank >= 2, got shape {a.shape}")
    out = np.swapaxes(a.data, -1, -2)
    return _join(out, ((a, lambda g: np.swapaxes(g, -1, -2)),))


def reshape(a, shape) -> Tensor:
    a = _lift(a)
    shape = tuple(int(s) for s in shape)
    if int(np.prod(shape)) != a.size:
        raise DimensionError(f"reshape: cannot view {a.shape} as {shape}")
    out = a.data.reshape(shape)
    return _join(out, ((a, lambda g: g.reshape(a.data.shape)),))


def concat(a, b, axis: int = -1) -> Tensor:
    """Join two tensors along ``axis`` (defaults to the feature axis)."""
    a, b = _lift(a), _lift(b)
    if a.ndim != b.ndim:
        raise DimensionError(f"concat: rank mismatch {a.shape} vs {b.shape}")
    ax = axis % a.ndim if a.ndim else 0
    for d in range(a.ndim):
        if d != ax and a.shape[d] != b.shape[d]:
            raise DimensionError(f"concat: shapes {a.shape} and {b.shape} disagree off axis {axis}")
    out = np.concatenate([a.data, b.data], axis=ax)
    na = a.shape[ax]

    def take(g, start, stop):
        idx = [slice(None)] * g.ndim
        idx[ax] = slice(start, stop)
        return g[tuple(idx)]

    return _join(out, (
        (a, lambda g: take(g, 0, na)),
        (b, lambda g: take(g, na, None)),
    ))


def expand_rows(a, n: int) -> Tensor:
    """Repeat a single row n times along the second-to-last axis."""
    a = _lift(a)
    if a.ndim < 2:
        raise RankError(f"expand_rows requires rank >= 2, got shape {a.shape}")
    if a.shape[-2] != 1:
        raise DimensionError(f"expand_rows: row extent must be 1, got shape {a.shape}")
    if n < 1:
        raise ParameterError(f"expand_rows: target row count must be >= 1, got {n}")
    out = np.repeat(a.data, n, axis=-2)
    return _join(out, ((a, lambda g: g.sum(axis=-2, keepdims=True)),))


# ---------------------------------------------------------------------------
# reductions


def _norm_axes(axis, ndim: int):
    if axis is None:
        return None
    if isinstance(axis, int):
        axis = (axis,)
    return tuple(sorted(a % ndim for a in axis))


def mean(a, axis=None, keepdims: bool = False) -> Tensor:
    a = _lift(a)
    axes = _norm_axes(axis, a.ndim)
    out = a.data.mean(axis=axes, keepdims=keepdims)
    count = a.size / max(out.size, 1)

    def vjp(g):
        if not keepdims and axes is not None:
            g = np.expand_dims(g, axes)
        return np.broadcast_to(g / count, a.data.shape)

    return _join(np.asarray(out), ((a, vjp),))


def tensor_sum(a, axis=None, keepdims: bool = False) -> Tensor:
    a = _lift(a)
    axes = _norm_axes(axis, a.ndim)
    out = a.data.sum(axis=axes, keepdims=keepdims)

    def vjp(g):
        if not keepdims and axes is not None:
            g = np.expand_dims(g, axes)
        return np.broadcast_to(g, a.data.shape).copy()

    return _join(np.asarray(out), ((a, vjp),))


# ---------------------------------------------------------------------------
# nonlinearities


def relu(a) -> Tensor:
    """max(x, 0); the subgradient at exactly 0 is taken as 0."""
    a = _lift(a)
    out = np.maximum(a.data, 0.0)
    return _join(out, ((a, lambda g: g * (a.data > 0.0)),))


def clip_min(a, floor: float) -> Tensor:
    """max(x, floor); gradient passes through only where x > floor."""
    a = _lift(a)
    out = np.maximum(a.data, float(floor))
    return _join(out, ((a, lambda g: g * (a.data > floor)),))


def sqrt(a) -> Tensor:
    a = _lift(a)
    out = np.sqrt(a.data)
    _require_finite(out, "sqrt")
    return _join(out, ((a, lambda g: g * 0.5 / out),))


def log(a) -> Tensor:
    a = _lift(a)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.log(a.data)
    _require_finite(out, "log")
    return _join(out, ((a, lambda g: g / a.data),))


def softplus(a) -> Tensor:
    """log(1 + exp(x)), computed overflow-free via logaddexp."""
    a = _lift(a)
    out = np.logaddexp(0.0, a.data)
    return _join(out, ((a, lambda g: g * _sp.expit(a.data)),))


def lgamma(a) -> Tensor:
    """log |Gamma(x)| for positive x; derivative is the digamma function."""
    a = _lift(a)
    out = _sp.gammaln(a.data)
    _require_finite(out, "lgamma")
    return _join(np.asarray(out), ((a, lambda g: g * _sp.digamma(a.data)),))


def dropout(a, rate: float, mode: str, rng: np.random.Generator | None = None) -> Tensor:
    """Inverted dropout: zero with probability ``rate``, scale by 1/(1-rate).

    Eval mode (and rate 0) is the identity and consumes no randomness, so
    expectations match between train and eval.
    """
    a = _lift(a)
    if mode not in ("train", "eval"):
        raise ParameterError(f"dropout: mode must be 'train' or 'eval', got {mode!r}")
    rate = float(rate)
    if not 0.0 <= rate < 1.0:
        raise ParameterError(f"dropout: rate must lie in [0, 1), got {rate}")
    if mode == "eval" or rate == 0.0:
        return a
    if rng is None:
        raise ParameterError("dropout: train mode with rate > 0 requires an rng")
    keep = (rng.random(a.shape) >= rate) / (1.0 - rate)
    return _join(a.data * keep, ((a, lambda g: g * keep),))


# ---------------------------------------------------------------------------
# differentiation


def backward(tape: Tape, loss: Tensor) -> dict[int, Tensor]:
    """Accumulate d(loss)/d(leaf) for every leaf bound to ``tape``.

    ``loss`` must be a scalar recorded on ``tape``.  Unused leaves get
    zero gradients of their own shape.
    """
    if not isinstance(loss, Tensor) or loss.tape is not tape or loss.nid is None:
        raise ContractError("backward: loss is not a node of this tape")
    if loss.data.ndim != 0:
        raise ContractError(f"backward: loss must be a scalar, got shape {loss.data.shape}")
    adjoint: list[np.ndarray | None] = [None] * len(tape)
    adjoint[loss.nid] = np.ones((), dtype=np.float64)
    for nid in range(loss.nid, -1, -1):
        g = adjoint[nid]
        if g is None:
            continue
        for pid, vjp in tape._parents[nid]:
            contrib = vjp(g)
            adjoint[pid] = contrib if adjoint[pid] is None else adjoint[pid] + contrib
    grads: dict[int, Tensor] = {}
    for lid, shape in tape._leaves.items():
        g = adjoint[lid]
        grads[lid] = Tensor._wrap(np.zeros(shape) if g is None else np.asarray(g))
    return grads


def grad_check(f, params: Sequence, step: float = 1e-5) -> float:
    """Worst relative error between tape and central-difference gradients.

    ``f`` maps a list of bound Tensors to a scalar Tensor and must be
    deterministic (re-seed any rng it uses internally).  Every element of
    every parameter is perturbed by ±step; the error metric is
    |analytic - numeric| / max(1, |analytic|, |numeric|).
    """
    base = [np.array(_lift(p).data) for p in params]
    tape = Tape()
    bound = [tape.leaf(p) for p in base]
    loss = f(bound)
    if not isinstance(loss, Tensor) or loss.data.ndim != 0:
        raise ContractError("grad_check: f must return a scalar Tensor")
    grads = backward(tape, loss)
    analytic = [np.array(grads[t.nid].data) for t in bound]

    def value_at(arrs) -> float:
        out = f([Tensor(a) for a in arrs])
        v = float(out.data)
        if not np.isfinite(v):
            raise NumericError("grad_check: f returned a non-finite value")
        return v

    worst = 0.0
    for pi in range(len(base)):
        flat = base[pi].reshape(-1)
        for k in range(flat.size):
            orig = flat[k]
            work = [b if i != pi else b.copy() for i, b in enumerate(base)]
            wflat = work[pi].reshape(-1)
            wflat[k] = orig + step
            up = value_at(work)
            wflat[k] = orig - step
            down = value_at(work)
            numeric = (up - down) / (2.0 * step)
            a = analytic[pi].reshape(-1)[k]
            err = abs(a - numeric) / max(1.0, abs(a), abs(numeric))
            worst = max(worst, err)
    return worst
