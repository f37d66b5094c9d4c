"""Achievable error exponents and finite-sample error envelopes.

All exponents are built from three functions of the cluster distances
(D1, D2), the kernel bound K0 and the training ratio alpha::

    g1       = (D1 - D2)^2 / (32 K0^2 (1 + 2/alpha))
    g2(a)    = (D1 - a)^2  / (32 K0^2 (1 + 1/alpha))
    g3(a)    = (a - D2)^2  / (32 K0^2 (1 + 1/alpha))

General-case (null hypothesis) exponents reuse the same functions with the
barred distances, so callers pass ``ExponentParams.from_problem(p, general=True)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Optional, Sequence, Union

from .errors import ArityError, DomainError, ValidationError

SIMPLE, GENERAL = "simple", "general"
FIXED, SEQUENTIAL, TWO_PHASE = "fixed", "sequential", "two_phase"


@dataclass(frozen=True)
class ExponentParams:
    D1: float
    D2: float
    K0: float = 1.0
    alpha: float = 1.0

    def __post_init__(self):
        if not self.D1 > self.D2 >= 0:
            raise ValidationError("D1/D2", f"need D1 > D2 >= 0, got D1={self.D1!r}, D2={self.D2!r}")
        if not self.K0 > 0:
            raise ValidationError("K0", "must be positive")
        if not self.alpha > 0:
            raise ValidationError("alpha", "must be positive")

    @classmethod
    def from_problem(cls, problem, general: bool = False) -> "ExponentParams":
        dist = problem.distances
        if general:
            from .clusters import d1_bar, d2_bar
            D1, D2 = d1_bar(problem), d2_bar(problem)
        else:
            D1, D2 = dist["d1"], dist["d2"]
        return cls(D1, D2, problem.kernel.sup_bound, problem.alpha)

    @property
    def _scale(self) -> float:
        return 32.0 * self.K0 ** 2

    def g1(self) -> float:
        return (self.D1 - self.D2) ** 2 / (self._scale * (1.0 + 2.0 / self.alpha))

    def g2(self, a: float) -> float:
        return (self.D1 - a) ** 2 / (self._scale * (1.0 + 1.0 / self.alpha))

    def g3(self, a: float) -> float:
        return (a - self.D2) ** 2 / (self._scale * (1.0 + 1.0 / self.alpha))

    def in_range(self, a: float) -> bool:
        return self.D2 < a < self.D1

    # One-sided versions: the event "statistic < a" only decays when a < D1,
    # and "statistic > a" only when a > D2. Outside, the rate is zero.
    def g2_eff(self, a: float) -> float:
        return self.g2(a) if a < self.D1 else 0.0

    def g3_eff(self, a: float) -> float:
        return self.g3(a) if a > self.D2 else 0.0


class GValues(NamedTuple):
    g1: float
    g2: float
    g3: float
    in_range: bool


def g_funcs(p: ExponentParams, a: float) -> GValues:
    """(g1, g2(a), g3(a)) by formula; ``in_range`` flags D2 < a < D1."""
    return GValues(p.g1(), p.g2(a), p.g3(a), p.in_range(a))


@dataclass(frozen=True)
class Exponent:
    """An exponent value with an explicit status.

    ``status`` is ``"positive"`` for a numeric bound, ``"zero"`` when the
    bound gives no decay, and ``"n/a"`` when the error type does not apply.
    """

    value: float
    status: str = "positive"

    @classmethod
    def of(cls, value: float) -> "Exponent":
        return cls(value) if value > 0 else cls.zero()

    @classmethod
    def zero(cls) -> "Exponent":
        return cls(0.0, "zero")

    @classmethod
    def not_applicable(cls) -> "Exponent":
        return cls(math.nan, "n/a")

    @property
    def is_zero(self) -> bool:
        return self.status == "zero"

    def __float__(self):
        return self.value

    def __str__(self):
        return self.status if self.status != "positive" else f"{self.value:.6g}"


@dataclass(frozen=True)
class ExponentReport:
    misclassification_exponent: Exponent
    false_alarm_exponent: Exponent
    regime_note: str


Thresholds = Union[None, float, Sequence[float]]


def _unpack(thresholds: Thresholds, arity: int, label: str):
    if arity == 0:
        if thresholds is not None and (not isinstance(thresholds, (tuple, list)) or len(thresholds)):
            raise ArityError("thresholds", f"{label} takes no thresholds")
        return ()
    if isinstance(thresholds, (int, float)):
        thresholds = (float(thresholds),)
    if thresholds is None or len(thresholds) != arity:
        raise ArityError("thresholds", f"{label} needs {arity} threshold(s), got {thresholds!r}")
    return tuple(float(t) for t in thresholds)


def _fixed_general(p: ExponentParams, lam: float) -> tuple:
    if lam >= p.D1:
        return Exponent.of(p.g1()), Exponent.zero(), "lambda >= D1: simple-case exponent; false alarm exponent zero"
    fa = Exponent.of(p.g2(lam))
    if lam <= p.D2:
        return Exponent.zero(), fa, "lambda <= D2: misclassification exponent zero"
    mis = min(max(p.g1(), p.g2(lam)), p.g3(lam))
    return Exponent.of(mis), fa, "D2 < lambda < D1"


def achievable_exponents(test: str, case: str, p: ExponentParams, thresholds: Thresholds = None,
                         K: Optional[int] = None) -> ExponentReport:
    """Asymptotic achievable exponents for one (test, case) combination.

    Threshold arity: fixed/simple none; sequential/simple, two_phase/simple and
    fixed/general take lambda; sequential/general takes (lambda1, lambda2);
    two_phase/general takes (lambda1, lambda2, lambda3). Two-phase tests also
    need ``K >= 1``. Boundary values of lambda fall in the degenerate regime.
    """
    test, case = str(getattr(test, "value", test)), str(getattr(case, "value", case))
    label = f"{test}/{case}"
    arity = {(FIXED, SIMPLE): 0, (SEQUENTIAL, SIMPLE): 1, (TWO_PHASE, SIMPLE): 1,
             (FIXED, GENERAL): 1, (SEQUENTIAL, GENERAL): 2, (TWO_PHASE, GENERAL): 3}
    if (test, case) not in arity:
        raise ValidationError("test/case", f"unknown combination {label}")
    lams = _unpack(thresholds, arity[test, case], label)
    if test == TWO_PHASE and (K is None or int(K) < 1):
        raise ArityError("K", f"{label} needs K >= 1, got {K!r}")
    if case == GENERAL and test != FIXED and lams[0] > lams[1]:
        raise DomainError("lambda1", f"lambda1 > lambda2 ({lams[0]} > {lams[1]})")

    na = Exponent.not_applicable()
    g1 = p.g1()

    if case == SIMPLE:
        if test == FIXED:
            return ExponentReport(Exponent.of(g1), na, "fixed-length")
        lam = lams[0]
        if test == SEQUENTIAL:
            if lam <= p.D2:
                return ExponentReport(Exponent.of(g1), na, "lambda <= D2: reduces to fixed-length")
            if lam >= p.D1:
                return ExponentReport(Exponent.zero(), na, "lambda >= D1: expected stopping time unbounded")
            return ExponentReport(Exponent.of(max(g1, p.g3(lam))), na, "D2 < lambda < D1")
        if not p.in_range(lam):
            return ExponentReport(Exponent.of(g1), na, "lambda outside (D2, D1): reduces to fixed-length")
        mis = min(max(g1, p.g3(lam)), K * g1)
        return ExponentReport(Exponent.of(mis), na, "D2 < lambda < D1")

    if test == FIXED:
        return ExponentReport(*_fixed_general(p, lams[0]))

    lam1, lam2 = lams[0], lams[1]
    both_in = p.in_range(lam1) and p.in_range(lam2)

    if test == SEQUENTIAL:
        mis = Exponent.of(p.g3(lam2)) if both_in else Exponent.zero()
        fa = Exponent.of(p.g2(lam1)) if lam1 < p.D1 else Exponent.zero()
        note = "(lambda1, lambda2) in (D2, D1)^2" if both_in else "(lambda1, lambda2) not in (D2, D1)^2"
        return ExponentReport(mis, fa, note)

    lam3 = lams[2]
    fixed_mis, fixed_fa, _ = _fixed_general(p, lam3)
    if both_in:
        mis = Exponent.of(min(p.g3_eff(lam2), K * p.g3_eff(lam3), max(K * g1, K * p.g2_eff(lam3))))
        note = "(lambda1, lambda2) in (D2, D1)^2"
    elif lam1 >= p.D1 or lam2 <= p.D2:
        mis = fixed_mis
        note = "degenerate thresholds: fixed-length with lambda3"
    else:
        mis = Exponent.zero()
        note = "(lambda1, lambda2) straddle a D boundary: no guarantee"
    if lam1 < p.D1:
        fa = Exponent.of(min(p.g2(lam1), K * p.g2_eff(lam3)))
    else:
        fa = fixed_fa
    return ExponentReport(mis, fa, note)


def finite_n_envelope(n: int, M: int, exponent: float) -> float:
    """min(1, (M - 1) exp(-n * exponent)): union bound over M - 1 competitors."""
    if n < 1 or M < 2 or exponent < 0:
        raise ValueError("need n >= 1, M >= 2, exponent >= 0")
    return min(1.0, (M - 1) * math.exp(-n * exponent))


def false_alarm_envelope(n: int, M: int, exponent: float) -> float:
    """min(1, M exp(-n * exponent)): union bound over all M training streams."""
    if n < 1 or M < 1 or exponent < 0:
        raise ValueError("need n >= 1, M >= 1, exponent >= 0")
    return min(1.0, M * math.exp(-n * exponent))


def mcdiarmid_tail(epsilon: float, c: Optional[Sequence[float]] = None, *, sum_sq: Optional[float] = None) -> float:
    """Bounded-differences tail exp(-2 eps^2 / sum c_k^2).

    Pass either the per-coordinate constants ``c`` or their precomputed
    ``sum_sq`` (see the ``lipschitz_sum_*`` helpers).
    """
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    if sum_sq is None:
        if not c or any(ck <= 0 for ck in c):
            raise ValueError("c must be a nonempty list of positive constants")
        sum_sq = math.fsum(ck * ck for ck in c)
    if math.isinf(epsilon):
        return 0.0
    return math.exp(-2.0 * epsilon * epsilon / sum_sq)


def lipschitz_sum_pair(K0: float, alpha: float, n: int) -> float:
    """Sum of squared constants for MMD^2(x, y_i) - MMD^2(x, y_j): (64 K0^2 / n)(1 + 2/alpha)."""
    return 64.0 * K0 ** 2 / n * (1.0 + 2.0 / alpha)


def lipschitz_sum_single(K0: float, alpha: float, t: int) -> float:
    """Sum of squared constants for a single MMD^2(x, y_j): (64 K0^2 / t)(1 + 1/alpha)."""
    return 64.0 * K0 ** 2 / t * (1.0 + 1.0 / alpha)
