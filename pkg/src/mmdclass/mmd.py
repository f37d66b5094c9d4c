"""Unbiased MMD^2 between two sample sequences, batch and streaming.

The pair sums follow the ordered-pair convention: ``s_xx`` sums k(x_i, x_j)
over all i != j, so each unordered pair is counted twice.
"""

from __future__ import annotations

import enum
import math

import numpy as np

from .errors import LengthError, ValidationError
from .kernel import KernelSpec

# rows per Gram block in the batch estimator; bounds memory at large n
_BLOCK = 1024


class Side(str, enum.Enum):
    X = "x"
    Y = "y"


def as_sequence(values, name="sequence") -> np.ndarray:
    """Coerce to a 1-D float array, rejecting non-finite samples."""
    arr = np.asarray(values, dtype=float).reshape(-1)
    if not np.all(np.isfinite(arr)):
        raise ValidationError(name, "samples must be finite")
    return arr


def _offdiag_sum(k: KernelSpec, a: np.ndarray) -> float:
    total = 0.0
    for start in range(0, a.size, _BLOCK):
        rows = a[start:start + _BLOCK]
        total += float(k(rows[:, None], a[None, :]).sum())
    return total - float(k(a, a).sum())


def _cross_sum(k: KernelSpec, a: np.ndarray, b: np.ndarray) -> float:
    total = 0.0
    for start in range(0, a.size, _BLOCK):
        rows = a[start:start + _BLOCK]
        total += float(k(rows[:, None], b[None, :]).sum())
    return total


def _combine(s_xx, s_yy, s_xy, n1, n2):
    return s_xx / (n1 * (n1 - 1)) + s_yy / (n2 * (n2 - 1)) - 2.0 * s_xy / (n1 * n2)


def mmd2_batch(x, y, k: KernelSpec) -> float:
    """Unbiased MMD^2 estimate between sequences ``x`` and ``y``.

    The value is a U-statistic and may be negative; it always lies in
    [-2 K0, 2 K0].

    Raises:
        LengthError: if either sequence has fewer than 2 samples.
        ValidationError: if a sample is not finite.
    """
    x, y = as_sequence(x, "x"), as_sequence(y, "y")
    if x.size < 2 or y.size < 2:
        raise LengthError(f"MMD^2 needs >= 2 samples per side, got {x.size} and {y.size}")
    return _combine(_offdiag_sum(k, x), _offdiag_sum(k, y), _cross_sum(k, x, y), x.size, y.size)


class _Compensated:
    """Neumaier running sum."""

    __slots__ = ("total", "comp")

    def __init__(self):
        self.total = 0.0
        self.comp = 0.0

    def add(self, value: float):
        t = self.total + value
        if abs(self.total) >= abs(value):
            self.comp += (self.total - t) + value
        else:
            self.comp += (value - t) + self.total
        self.total = t

    @property
    def value(self) -> float:
        return self.total + self.comp


def _neumaier_add(total, comp, value):
    t = total + value
    comp = comp + np.where(np.abs(total) >= np.abs(value), (total - t) + value, (value - t) + total)
    return t, comp


class _Buffer:
    """Append-only growable float buffer with shape (rows, capacity)."""

    def __init__(self, rows=None, capacity=64):
        self._rows = rows
        shape = (capacity,) if rows is None else (rows, capacity)
        self._data = np.empty(shape)
        self.size = 0

    def _reserve(self, extra):
        need = self.size + extra
        cap = self._data.shape[-1]
        if need <= cap:
            return
        while cap < need:
            cap *= 2
        grown = np.empty(self._data.shape[:-1] + (cap,))
        grown[..., :self.size] = self.view
        self._data = grown

    def extend(self, values):
        m = values.shape[-1]
        self._reserve(m)
        self._data[..., self.size:self.size + m] = values
        self.size += m

    @property
    def view(self) -> np.ndarray:
        return self._data[..., :self.size]


class MmdAccumulator:
    """Streaming MMD^2 between an x-sequence and a y-sequence.

    Each push adds the new sample's kernel interactions with everything
    already buffered, so the cost of a push is linear in the buffer sizes and
    ``value()`` is O(1).
    """

    def __init__(self, kernel: KernelSpec):
        self.kernel = kernel
        self._bufs = {Side.X: _Buffer(), Side.Y: _Buffer()}
        self._sxx = _Compensated()
        self._syy = _Compensated()
        self._sxy = _Compensated()

    @property
    def n1(self) -> int:
        return self._bufs[Side.X].size

    @property
    def n2(self) -> int:
        return self._bufs[Side.Y].size

    @property
    def x(self) -> np.ndarray:
        return self._bufs[Side.X].view

    @property
    def y(self) -> np.ndarray:
        return self._bufs[Side.Y].view

    @property
    def s_xx(self) -> float:
        return self._sxx.value

    @property
    def s_yy(self) -> float:
        return self._syy.value

    @property
    def s_xy(self) -> float:
        return self._sxy.value

    def push(self, side, sample: float) -> "MmdAccumulator":
        side = Side(side)
        sample = float(sample)
        if not math.isfinite(sample):
            raise ValidationError("sample", "samples must be finite")
        k = self.kernel
        own, other = (self.x, self.y) if side is Side.X else (self.y, self.x)
        same_sum = self._sxx if side is Side.X else self._syy
        if own.size:
            same_sum.add(2.0 * float(k(sample, own).sum()))
        if other.size:
            self._sxy.add(float(k(sample, other).sum()))
        self._bufs[side].extend(np.array([sample]))
        return self

    def push_x(self, sample: float) -> "MmdAccumulator":
        return self.push(Side.X, sample)

    def push_y(self, sample: float) -> "MmdAccumulator":
        return self.push(Side.Y, sample)

    def value(self) -> float:
        if self.n1 < 2 or self.n2 < 2:
            raise LengthError(f"MMD^2 needs >= 2 samples per side, have {self.n1} and {self.n2}")
        return _combine(self.s_xx, self.s_yy, self.s_xy, self.n1, self.n2)


class MmdBank:
    """One testing sequence against M training sequences, updated in blocks.

    All training sequences share a common length. ``values()`` returns the M
    estimates MMD^2(x, y_j) from cached pair sums. This is the vectorised
    form of M :class:`MmdAccumulator` objects sharing their x side.
    """

    def __init__(self, kernel: KernelSpec, num_streams: int):
        self.kernel = kernel
        self.num_streams = num_streams
        self._x = _Buffer()
        self._ys = _Buffer(rows=num_streams)
        self._sxx = _Compensated()
        self._syy = np.zeros(num_streams)
        self._cyy = np.zeros(num_streams)
        self._sxy = np.zeros(num_streams)
        self._cxy = np.zeros(num_streams)

    @property
    def n(self) -> int:
        return self._x.size

    @property
    def N(self) -> int:
        return self._ys.size

    @property
    def x(self) -> np.ndarray:
        return self._x.view

    @property
    def ys(self) -> np.ndarray:
        return self._ys.view

    def push_test(self, values) -> None:
        v = np.asarray(values, dtype=float).reshape(-1)
        if v.size == 0:
            return
        k = self.kernel
        x_old = self.x
        d_xx = float(k(v[:, None], v[None, :]).sum()) - float(k(v, v).sum())
        if x_old.size:
            d_xx += 2.0 * float(k(v[:, None], x_old[None, :]).sum())
        self._sxx.add(d_xx)
        if self.N:
            d_xy = k(v[None, :, None], self.ys[:, None, :]).sum(axis=(1, 2))
            self._sxy, self._cxy = _neumaier_add(self._sxy, self._cxy, d_xy)
        self._x.extend(v)

    def push_train(self, block) -> None:
        w = np.asarray(block, dtype=float)
        if w.ndim != 2 or w.shape[0] != self.num_streams:
            raise ValueError(f"training block must have shape ({self.num_streams}, m), got {w.shape}")
        if w.shape[1] == 0:
            return
        k = self.kernel
        d_yy = k(w[:, :, None], w[:, None, :]).sum(axis=(1, 2)) - k(w, w).sum(axis=1)
        if self.N:
            d_yy = d_yy + 2.0 * k(w[:, :, None], self.ys[:, None, :]).sum(axis=(1, 2))
        self._syy, self._cyy = _neumaier_add(self._syy, self._cyy, d_yy)
        if self.n:
            d_xy = k(w[:, :, None], self.x[None, None, :]).sum(axis=(1, 2))
            self._sxy, self._cxy = _neumaier_add(self._sxy, self._cxy, d_xy)
        self._ys.extend(w)

    def values(self) -> np.ndarray:
        n, N = self.n, self.N
        if n < 2 or N < 2:
            raise LengthError(f"MMD^2 needs >= 2 samples per side, have {n} and {N}")
        s_xx = self._sxx.value
        s_yy = self._syy + self._cyy
        s_xy = self._sxy + self._cxy
        return s_xx / (n * (n - 1)) + s_yy / (N * (N - 1)) - 2.0 * s_xy / (n * N)


def acc_push(acc: MmdAccumulator, side, sample: float) -> MmdAccumulator:
    return acc.push(side, sample)


def acc_value(acc: MmdAccumulator) -> float:
    return acc.value()
