"""Bounded positive-definite kernels on scalar observations."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import UnsupportedKernel, ValidationError


class KernelKind(str, enum.Enum):
    GAUSSIAN = "gaussian"


@dataclass(frozen=True)
class KernelSpec:
    """A kernel with a known uniform bound ``sup_bound``.

    Calling a KernelSpec evaluates the kernel elementwise with numpy broadcasting,
    so ``k(x[:, None], y[None, :])`` gives a Gram matrix.
    """

    sigma0: float = 1.0
    kind: KernelKind = KernelKind.GAUSSIAN

    def __post_init__(self):
        object.__setattr__(self, "kind", KernelKind(self.kind))
        if not (math.isfinite(self.sigma0) and self.sigma0 > 0):
            raise ValidationError("kernel.sigma0", f"must be a positive finite number, got {self.sigma0!r}")
        # cached for the hot path
        object.__setattr__(self, "_scale", -0.5 / (self.sigma0 * self.sigma0))

    def __call__(self, x, y):
        d = np.subtract(x, y)
        return np.exp(d * d * self._scale)

    @property
    def sup_bound(self) -> float:
        if self.kind is KernelKind.GAUSSIAN:
            return 1.0
        raise UnsupportedKernel(f"no sup bound known for kernel {self.kind!r}")

    def to_dict(self) -> dict:
        return {"kind": self.kind.value, "sigma0": self.sigma0}


def evaluate(k: KernelSpec, x: float, y: float) -> float:
    """Scalar kernel value k(x, y)."""
    d = x - y
    return math.exp(d * d * k._scale)


def sup_bound(k: KernelSpec) -> float:
    """K0, the maximum of k over all pairs. Exactly 1 for the Gaussian kernel."""
    return k.sup_bound
