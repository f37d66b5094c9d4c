"""Gaussian generating models, their uncertainty sets, and cluster distances.

Uncertainty sets are taken inside the equal-variance Gaussian shift family
around each center: ``MeanInterval(r)`` is {N(e, s^2): |e - mu| <= r} and
``MmdBall(delta)`` is the members of that family within population MMD^2
``delta`` of the center. Population MMD^2 between two such models grows
strictly with the mean gap, so every min/max over a set is attained at the
point of the reachable mean interval closest to (or farthest from) the
other model's mean.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Optional, Sequence, Union

import numpy as np

from .errors import (MissingNull, SeparationError, UnsupportedKernel,
                     UnsupportedUncertainty, ValidationError)
from .kernel import KernelKind, KernelSpec


@dataclass(frozen=True)
class GaussianModel:
    mean: float
    variance: float = 1.0

    def __post_init__(self):
        if not math.isfinite(self.mean):
            raise ValidationError("mean", f"must be finite, got {self.mean!r}")
        if not (math.isfinite(self.variance) and self.variance > 0):
            raise ValidationError("variance", f"must be positive, got {self.variance!r}")

    @property
    def std(self) -> float:
        return math.sqrt(self.variance)

    def shifted(self, mean: float) -> "GaussianModel":
        return GaussianModel(mean, self.variance)


@dataclass(frozen=True)
class MeanInterval:
    radius: float = 0.0

    def __post_init__(self):
        if not (self.radius >= 0 and math.isfinite(self.radius)):
            raise ValidationError("radius", f"must be nonnegative, got {self.radius!r}")


@dataclass(frozen=True)
class MmdBall:
    delta: float = 0.0

    def __post_init__(self):
        if not (self.delta >= 0 and math.isfinite(self.delta)):
            raise ValidationError("delta", f"must be nonnegative, got {self.delta!r}")


Uncertainty = Union[MeanInterval, MmdBall]


@dataclass(frozen=True)
class ClusterSpec:
    center: GaussianModel
    uncertainty: Uncertainty = field(default_factory=MeanInterval)

    @property
    def level(self) -> float:
        """The radius or delta, whichever form the set takes."""
        u = self.uncertainty
        return u.radius if isinstance(u, MeanInterval) else u.delta

    def with_level(self, level: float) -> "ClusterSpec":
        u = self.uncertainty
        new = MeanInterval(level) if isinstance(u, MeanInterval) else MmdBall(level)
        return replace(self, uncertainty=new)


def sample(model: GaussianModel, n: int, rng: np.random.Generator) -> np.ndarray:
    """``n`` i.i.d. draws from ``model``."""
    if n < 0:
        raise ValueError(f"n must be nonnegative, got {n}")
    return model.mean + model.std * rng.standard_normal(n)


def _check_gaussian(k: KernelSpec):
    if k.kind is not KernelKind.GAUSSIAN:
        raise UnsupportedKernel(f"closed-form MMD^2 needs a Gaussian kernel, got {k.kind!r}")


def expected_kernel(a: GaussianModel, b: GaussianModel, k: KernelSpec) -> float:
    """E k(X, Y) for independent X ~ a, Y ~ b under the Gaussian kernel.

    X - Y ~ N(mu_a - mu_b, s_a^2 + s_b^2), and the Gaussian integral gives
    s0 / sqrt(s0^2 + v) * exp(-m^2 / (2 (s0^2 + v))).
    """
    _check_gaussian(k)
    s2 = k.sigma0 ** 2 + a.variance + b.variance
    gap = a.mean - b.mean
    return k.sigma0 / math.sqrt(s2) * math.exp(-gap * gap / (2.0 * s2))


def mmd2_population(a: GaussianModel, b: GaussianModel, k: KernelSpec) -> float:
    """Population MMD^2 between two Gaussian models."""
    if a == b:
        return 0.0
    value = expected_kernel(a, a, k) + expected_kernel(b, b, k) - 2.0 * expected_kernel(a, b, k)
    return max(value, 0.0)


def shift_mmd2(model: GaussianModel, gap: float, k: KernelSpec) -> float:
    """MMD^2 between ``model`` and the same model shifted by ``gap``."""
    _check_gaussian(k)
    s2 = k.sigma0 ** 2 + 2.0 * model.variance
    return 2.0 * k.sigma0 / math.sqrt(s2) * -math.expm1(-gap * gap / (2.0 * s2))


def shift_radius(cluster: ClusterSpec, k: KernelSpec) -> float:
    """Half-width of the mean interval the cluster's uncertainty set covers.

    For ``MmdBall`` this inverts :func:`shift_mmd2`; it is ``inf`` when
    ``delta`` reaches the supremum of the shift family.
    """
    u = cluster.uncertainty
    if isinstance(u, MeanInterval):
        return u.radius
    _check_gaussian(k)
    s2 = k.sigma0 ** 2 + 2.0 * cluster.center.variance
    ceiling = 2.0 * k.sigma0 / math.sqrt(s2)
    if u.delta >= ceiling:
        return math.inf
    return math.sqrt(-2.0 * s2 * math.log1p(-u.delta / ceiling))


def as_mean_interval(cluster: ClusterSpec, k: KernelSpec) -> ClusterSpec:
    """The same set expressed as a ``MeanInterval`` cluster."""
    return replace(cluster, uncertainty=MeanInterval(shift_radius(cluster, k)))


def max_intra(cluster: ClusterSpec, k: KernelSpec) -> float:
    """max over Q in S(P) of MMD^2(Q, P)."""
    u = cluster.uncertainty
    if isinstance(u, MmdBall):
        return min(u.delta, 2.0 * k.sigma0 / math.sqrt(k.sigma0 ** 2 + 2.0 * cluster.center.variance))
    return shift_mmd2(cluster.center, u.radius, k)


def min_inter(source: ClusterSpec, target: GaussianModel, k: KernelSpec) -> float:
    """min over Q in S(source) of MMD^2(Q, target)."""
    r = shift_radius(source, k)
    mu = source.center.mean
    nearest = min(max(target.mean, mu - r), mu + r)
    return mmd2_population(source.center.shifted(nearest), target, k)


def worst_case_q(cluster: ClusterSpec, target: Optional[GaussianModel] = None,
                 kernel: Optional[KernelSpec] = None) -> GaussianModel:
    """Interval endpoint used as the adversarial testing distribution.

    With ``target=None`` the endpoint farthest from the center (both are,
    so the lower one); otherwise the endpoint with the smallest MMD^2 to
    ``target``, which is the endpoint nearest its mean. Ties go to the lower
    endpoint.
    """
    u = cluster.uncertainty
    if not isinstance(u, MeanInterval):
        raise UnsupportedUncertainty("worst_case_q needs a MeanInterval set; convert with as_mean_interval")
    c = cluster.center
    if u.radius == 0:
        return c
    lo, hi = c.shifted(c.mean - u.radius), c.shifted(c.mean + u.radius)
    if target is None:
        return lo
    if kernel is not None:
        d_lo, d_hi = mmd2_population(lo, target, kernel), mmd2_population(hi, target, kernel)
    else:
        d_lo, d_hi = abs(lo.mean - target.mean), abs(hi.mean - target.mean)
    return hi if d_hi < d_lo else lo


@dataclass(frozen=True)
class Problem:
    """M training clusters, an optional null cluster, kernel, and ratio alpha.

    Construction checks M >= 2 and D1 > D2; with a null cluster it also checks
    that P0 lies outside every S_{2 delta}(P_i) and that the barred distances
    are separated.
    """

    clusters: tuple
    kernel: KernelSpec = field(default_factory=KernelSpec)
    alpha: float = 1.0
    null_cluster: Optional[ClusterSpec] = None

    def __post_init__(self):
        object.__setattr__(self, "clusters", tuple(self.clusters))
        if len(self.clusters) < 2:
            raise ValidationError("clusters", f"need at least 2 clusters, got {len(self.clusters)}")
        if not (math.isfinite(self.alpha) and self.alpha > 0):
            raise ValidationError("alpha", f"must be positive, got {self.alpha!r}")
        d1_, d2_ = d1(self), d2(self)
        if not d1_ > d2_:
            raise SeparationError("clusters", f"d1 <= d2: clusters not separable (d1={d1_:.6g}, d2={d2_:.6g})")
        if self.null_cluster is not None:
            k = self.kernel
            p0 = self.null_cluster.center
            for i, c in enumerate(self.clusters, start=1):
                doubled = c.with_level(2.0 * c.level)
                if mmd2_population(p0, c.center, k) <= max_intra(doubled, k):
                    raise ValidationError("null", f"P0 lies inside S_2delta(P_{i})")
            b1, b2 = d1_bar(self), d2_bar(self)
            if not b1 > b2:
                raise SeparationError("null", f"d1_bar <= d2_bar: null not separable (d1_bar={b1:.6g}, d2_bar={b2:.6g})")

    @property
    def M(self) -> int:
        return len(self.clusters)

    @property
    def has_null(self) -> bool:
        return self.null_cluster is not None

    def with_level(self, level: float) -> "Problem":
        """Copy with every uncertainty set (null included) resized to ``level``."""
        null = self.null_cluster.with_level(level) if self.null_cluster is not None else None
        return replace(self, clusters=tuple(c.with_level(level) for c in self.clusters), null_cluster=null)

    @cached_property
    def distances(self) -> dict:
        out = {"d1": d1(self), "d2": d2(self)}
        if self.has_null:
            out.update(d1_bar=d1_bar(self), d2_bar=d2_bar(self))
        return out


def _d1_over(problem: Problem, pool: Sequence[ClusterSpec]) -> float:
    k = problem.kernel
    best = math.inf
    # pool starts with the training clusters in order, so j == i is the own set
    for i, ci in enumerate(problem.clusters):
        for j, cj in enumerate(pool):
            if j == i:
                continue
            best = min(best, min_inter(cj, ci.center, k))
    return best


def d1(problem: Problem) -> float:
    """Minimal inter-cluster distance over the training clusters."""
    return _d1_over(problem, problem.clusters)


def d2(problem: Problem) -> float:
    """Maximal intra-cluster distance over the training clusters."""
    return max(max_intra(c, problem.kernel) for c in problem.clusters)


def d1_bar(problem: Problem) -> float:
    """As :func:`d1`, with the null cluster added to the foreign sets."""
    if problem.null_cluster is None:
        raise MissingNull("null", "d1_bar needs a null cluster")
    return _d1_over(problem, problem.clusters + (problem.null_cluster,))


def d2_bar(problem: Problem) -> float:
    """As :func:`d2`, with the null cluster's own set included."""
    if problem.null_cluster is None:
        raise MissingNull("null", "d2_bar needs a null cluster")
    return max(d2(problem), max_intra(problem.null_cluster, problem.kernel))


def benchmark_problem(M: int = 10, radius: float = 0.1, spacing: float = 1.5, alpha: float = 1.0,
                      sigma0: float = 1.0, with_null: bool = True, ball: bool = False) -> Problem:
    """The benchmark layout: P_i = N(spacing*(i-1), 1), P0 = N(spacing*M, 1).

    ``ball=True`` reads ``radius`` as an MMD^2 radius instead of a mean radius.
    """
    unc = MmdBall(radius) if ball else MeanInterval(radius)
    clusters = tuple(ClusterSpec(GaussianModel(spacing * i, 1.0), unc) for i in range(M))
    null = ClusterSpec(GaussianModel(spacing * M, 1.0), unc) if with_null else None
    return Problem(clusters, KernelSpec(sigma0), alpha, null)
