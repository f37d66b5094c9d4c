"""Fixed-length, sequential and two-phase MMD classifiers.

Each test exists in a simple form (decide among H_1..H_M) and a general
form that can also answer the null hypothesis. Hypotheses are 1-based;
``NULL`` (0) and ``CENSORED`` (-1) are the non-hypothesis outcomes.

Streaming tests pull samples from a :class:`SampleSource`. At testing
length n every training stream holds ``training_length(alpha, n)`` samples.
"""

from __future__ import annotations

import enum
import math
import time
from dataclasses import dataclass
from typing import Optional, Protocol, Sequence

import numpy as np

from .clusters import GaussianModel
from .errors import DomainError, SourceExhausted, ValidationError
from .kernel import KernelSpec
from .mmd import MmdBank, as_sequence, mmd2_batch

NULL = 0
CENSORED = -1


class Case(str, enum.Enum):
    SIMPLE = "simple"
    GENERAL = "general"


class TestKind(str, enum.Enum):
    __test__ = False  # not a pytest class

    FIXED = "fixed"
    SEQUENTIAL = "sequential"
    TWO_PHASE = "two_phase"


class Phase(str, enum.Enum):
    FIRST = "first"
    SECOND = "second"


@dataclass(frozen=True)
class Verdict:
    decision: int
    tau: int
    phase: Optional[Phase] = None

    @property
    def label(self) -> str:
        if self.decision == NULL:
            return "null"
        if self.decision == CENSORED:
            return "censored"
        return f"H{self.decision}"

    def to_dict(self) -> dict:
        out = {"decision": self.label, "tau": self.tau}
        if self.phase is not None:
            out["phase"] = self.phase.value
        return out


def training_length(alpha: float, n: int) -> int:
    """ceil(alpha * n), robust to float noise such as 0.1 * 30 = 3.0000000000000004."""
    return math.ceil(round(alpha * n, 9))


@dataclass(frozen=True)
class TestConfig:
    """Parameters shared by all tests; unused fields are ignored.

    ``lam`` is the single threshold (simple sequential and two-phase, general
    fixed-length); ``lam1``..``lam3`` are the general-case thresholds.
    """

    __test__ = False

    alpha: float = 1.0
    n: int = 25
    N0: int = 10
    K: int = 2
    lam: Optional[float] = None
    lam1: Optional[float] = None
    lam2: Optional[float] = None
    lam3: Optional[float] = None
    tau_max: int = 10_000

    def validate(self, test, case) -> "TestConfig":
        test, case = TestKind(test), Case(case)
        if not (math.isfinite(self.alpha) and self.alpha > 0):
            raise ValidationError("alpha", "must be positive")
        if test is TestKind.SEQUENTIAL:
            if self.N0 < 3:
                raise ValidationError("N0", f"must be >= 3 so the first check has 2 testing samples, got {self.N0}")
            if training_length(self.alpha, self.N0 - 1) < 2:
                raise ValidationError("alpha", "alpha * (N0 - 1) gives fewer than 2 training samples at the first check")
            if self.tau_max < self.N0:
                raise ValidationError("tau_max", f"must be >= N0 ({self.N0}), got {self.tau_max}")
        else:
            if self.n < 2:
                raise ValidationError("n", f"must be >= 2, got {self.n}")
            if training_length(self.alpha, self.n) < 2:
                raise ValidationError("alpha", "alpha * n gives fewer than 2 training samples")
        if test is TestKind.TWO_PHASE and self.K < 1:
            raise ValidationError("K", f"must be >= 1, got {self.K}")
        needed = []
        if case is Case.SIMPLE and test is not TestKind.FIXED:
            needed = ["lam"]
        elif case is Case.GENERAL:
            needed = {TestKind.FIXED: ["lam"], TestKind.SEQUENTIAL: ["lam1", "lam2"],
                      TestKind.TWO_PHASE: ["lam1", "lam2", "lam3"]}[test]
        for name in needed:
            value = getattr(self, name)
            if value is None or not math.isfinite(value):
                raise ValidationError(name.replace("lam", "lambda"), f"required by {test.value}/{case.value}")
        if case is Case.GENERAL and test is not TestKind.FIXED and self.lam1 > self.lam2:
            raise DomainError("lambda1", f"lambda1 ({self.lam1}) > lambda2 ({self.lam2})")
        return self


def rank_values(values: Sequence[float]) -> tuple:
    """(i_star, min_val, second_val) from the M estimates; i_star is 1-based."""
    values = np.asarray(values)
    i = int(np.argmin(values))
    rest = np.delete(values, i)
    return i + 1, float(values[i]), float(rest.min())


def rank(x, ys, k: KernelSpec) -> tuple:
    """Rank training sequences by MMD^2 to ``x``; ties go to the lowest index."""
    if len(ys) < 2:
        raise ValidationError("ys", "need at least 2 training sequences")
    return rank_values([mmd2_batch(x, y, k) for y in ys])


def _decide(i_star: int, min_val: float, case: Case, lam: Optional[float]) -> int:
    if case is Case.SIMPLE:
        return i_star
    return i_star if min_val < lam else NULL


def classify_fixed(x, ys, k: KernelSpec, case=Case.SIMPLE, lam: Optional[float] = None) -> Verdict:
    """Fixed-length decision on complete sequences.

    Simple: the argmin hypothesis. General: the argmin if its MMD^2 is below
    ``lam``, otherwise ``NULL``.
    """
    case = Case(case)
    if case is Case.GENERAL and lam is None:
        raise ValidationError("lambda", "general case needs a threshold")
    x = as_sequence(x, "x")
    ys = [as_sequence(y, f"y{j}") for j, y in enumerate(ys, start=1)]
    i_star, min_val, _ = rank(x, ys, k)
    return Verdict(_decide(i_star, min_val, case, lam), x.size)


class SampleSource(Protocol):
    num_streams: int

    def take_test(self, m: int) -> np.ndarray:
        """Next ``m`` testing samples."""

    def take_train(self, m: int) -> np.ndarray:
        """Next ``m`` samples of every training stream, shape (M, m)."""


class ArraySource:
    """Replays fixed sequences; raises :class:`SourceExhausted` past the end."""

    def __init__(self, x, ys):
        self.x = as_sequence(x, "x")
        self.ys = [as_sequence(y, f"y{j}") for j, y in enumerate(ys, start=1)]
        self.num_streams = len(self.ys)
        self._i = 0
        self._j = 0

    def take_test(self, m: int) -> np.ndarray:
        if self._i + m > self.x.size:
            raise SourceExhausted(f"testing sequence has {self.x.size} samples, need {self._i + m}")
        out = self.x[self._i:self._i + m]
        self._i += m
        return out

    def take_train(self, m: int) -> np.ndarray:
        stop = self._j + m
        short = [j for j, y in enumerate(self.ys, start=1) if y.size < stop]
        if short:
            raise SourceExhausted(f"training sequence y{short[0]} too short, need {stop} samples")
        out = np.stack([y[self._j:stop] for y in self.ys])
        self._j = stop
        return out


class GaussianSource:
    """Independent Gaussian streams, one generator per stream.

    Because each stream owns its generator, the k-th sample of a stream does
    not depend on how the draws were batched, so all tests run on a given
    seed see the same sequences. Time spent drawing is accumulated in
    ``sampling_time`` so callers can exclude it from timings.
    """

    def __init__(self, test_model: GaussianModel, train_models: Sequence[GaussianModel],
                 test_rng: np.random.Generator, train_rngs: Sequence[np.random.Generator]):
        if len(train_models) != len(train_rngs):
            raise ValueError("one generator per training stream required")
        self.test_model = test_model
        self.train_models = list(train_models)
        self.num_streams = len(self.train_models)
        self._test_rng = test_rng
        self._train_rngs = list(train_rngs)
        self._means = np.array([m.mean for m in self.train_models])[:, None]
        self._stds = np.array([m.std for m in self.train_models])[:, None]
        self.sampling_time = 0.0

    def take_test(self, m: int) -> np.ndarray:
        t0 = time.perf_counter()
        out = self.test_model.mean + self.test_model.std * self._test_rng.standard_normal(m)
        self.sampling_time += time.perf_counter() - t0
        return out

    def take_train(self, m: int) -> np.ndarray:
        t0 = time.perf_counter()
        z = np.stack([g.standard_normal(m) for g in self._train_rngs]) if m else np.empty((self.num_streams, 0))
        out = self._means + self._stds * z
        self.sampling_time += time.perf_counter() - t0
        return out


def _grow(bank: MmdBank, src: SampleSource, alpha: float, n: int) -> None:
    """Extend training streams to the length for n, then the testing stream to n."""
    bank.push_train(src.take_train(training_length(alpha, n) - bank.N))
    bank.push_test(src.take_test(n - bank.n))


def run_fixed(src: SampleSource, cfg: TestConfig, case, k: KernelSpec) -> Verdict:
    """Fixed-length test drawing its n testing samples from ``src``."""
    case = Case(case)
    cfg.validate(TestKind.FIXED, case)
    bank = MmdBank(k, src.num_streams)
    _grow(bank, src, cfg.alpha, cfg.n)
    i_star, min_val, _ = rank_values(bank.values())
    return Verdict(_decide(i_star, min_val, case, cfg.lam), cfg.n)


def _stops(case: Case, cfg: TestConfig, min_val: float, second_val: float) -> bool:
    if case is Case.SIMPLE:
        return second_val > cfg.lam
    return (min_val < cfg.lam1 and second_val > cfg.lam2) or min_val > cfg.lam2


def run_sequential(src: SampleSource, cfg: TestConfig, case, k: KernelSpec) -> Verdict:
    """Sequential test: check after every testing sample from n = N0 - 1.

    Stops at the first n where the second-smallest MMD^2 exceeds lambda
    (simple), or where (min < lambda1 and second > lambda2) or min > lambda2
    (general), then decides as the fixed-length test (general: with lambda1).
    Returns ``CENSORED`` at ``tau_max`` if no check fires.
    """
    case = Case(case)
    cfg.validate(TestKind.SEQUENTIAL, case)
    bank = MmdBank(k, src.num_streams)
    lam_final = None if case is Case.SIMPLE else cfg.lam1
    for n in range(cfg.N0 - 1, cfg.tau_max + 1):
        _grow(bank, src, cfg.alpha, n)
        i_star, min_val, second_val = rank_values(bank.values())
        if _stops(case, cfg, min_val, second_val):
            return Verdict(_decide(i_star, min_val, case, lam_final), n)
    return Verdict(CENSORED, cfg.tau_max)


def run_two_phase(src: SampleSource, cfg: TestConfig, case, k: KernelSpec) -> Verdict:
    """Two-phase test: stop at n if the sequential rule fires there, else at K n.

    Phase two extends the phase-one buffers with (K - 1) n new testing samples
    rather than starting over. Simple: phase two decides by argmin. General:
    phase one decides with lambda1, phase two with lambda3. With K = 1 the
    second phase adds no samples, so tau is always n.
    """
    case = Case(case)
    cfg.validate(TestKind.TWO_PHASE, case)
    bank = MmdBank(k, src.num_streams)
    _grow(bank, src, cfg.alpha, cfg.n)
    i_star, min_val, second_val = rank_values(bank.values())
    simple = case is Case.SIMPLE
    if _stops(case, cfg, min_val, second_val):
        return Verdict(_decide(i_star, min_val, case, None if simple else cfg.lam1), cfg.n, Phase.FIRST)
    if cfg.K > 1:
        _grow(bank, src, cfg.alpha, cfg.K * cfg.n)
        i_star, min_val, _ = rank_values(bank.values())
    return Verdict(_decide(i_star, min_val, case, None if simple else cfg.lam3), cfg.K * cfg.n, Phase.SECOND)


RUNNERS = {TestKind.FIXED: run_fixed, TestKind.SEQUENTIAL: run_sequential, TestKind.TWO_PHASE: run_two_phase}
