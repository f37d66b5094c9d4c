"""Monte Carlo estimation of misclassification and false alarm probabilities.

Every trial draws from its own random streams, derived from
``(base_seed, trial_index)`` with ``numpy.random.SeedSequence`` spawn keys,
so results do not depend on worker count or execution order.
"""

from __future__ import annotations

import enum
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from functools import cached_property
from statistics import NormalDist
from typing import Callable, Optional, Sequence

import numpy as np

from .classifiers import (CENSORED, NULL, RUNNERS, Case, GaussianSource, TestConfig,
                          TestKind, Verdict)
from .clusters import (ClusterSpec, GaussianModel, Problem, as_mean_interval,
                       d1_bar, d2_bar, mmd2_population, worst_case_q)
from .errors import ValidationError

log = logging.getLogger(__name__)

Z95 = NormalDist().inv_cdf(0.975)

SWEEPABLE = ("n", "N0", "K", "lambda", "lambda1", "lambda2", "lambda3", "trials", "true_hypothesis", "delta")

# config key -> TestConfig field
_CFG_FIELDS = {"n": "n", "N0": "N0", "K": "K", "lambda": "lam", "lambda1": "lam1",
               "lambda2": "lam2", "lambda3": "lam3"}


class QPolicy(str, enum.Enum):
    WORST_CASE = "worst_case"
    CENTER = "center"
    UNIFORM = "uniform"


def auto_thresholds(problem: Problem, case: Case) -> dict:
    """Default thresholds placed inside (D2, D1) (barred in the general case).

    lambda is the midpoint; lambda1 / lambda2 sit a quarter of the gap in from
    each end, and lambda3 is the midpoint.
    """
    if Case(case) is Case.SIMPLE:
        lo, hi = problem.distances["d2"], problem.distances["d1"]
    else:
        lo, hi = d2_bar(problem), d1_bar(problem)
    gap = hi - lo
    mid = lo + 0.5 * gap
    return {"lam": mid, "lam1": lo + 0.25 * gap, "lam2": hi - 0.25 * gap, "lam3": mid}


@dataclass(frozen=True)
class ExperimentSpec:
    problem: Problem
    test: TestKind
    case: Case
    cfg: TestConfig = field(default_factory=TestConfig)
    true_hypothesis: int = 1
    q_policy: QPolicy = QPolicy.WORST_CASE
    trials: int = 1000
    base_seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "test", TestKind(self.test))
        object.__setattr__(self, "case", Case(self.case))
        object.__setattr__(self, "q_policy", QPolicy(self.q_policy))
        if self.trials < 1:
            raise ValidationError("trials", f"must be >= 1, got {self.trials}")
        if not 0 <= self.base_seed < 2 ** 64:
            raise ValidationError("seed", "must be an unsigned 64-bit integer")
        if not 0 <= self.true_hypothesis <= self.problem.M:
            raise ValidationError("hypothesis", f"must be null or H1..H{self.problem.M}")
        if self.case is Case.GENERAL and not self.problem.has_null:
            raise ValidationError("null", "general-case tests need a null cluster")
        if self.true_hypothesis == NULL and self.case is not Case.GENERAL:
            raise ValidationError("hypothesis", "the null hypothesis needs case = general")
        if self.cfg.alpha != self.problem.alpha:
            raise ValidationError("alpha", f"test config alpha {self.cfg.alpha} != problem alpha {self.problem.alpha}")
        self.effective_cfg.validate(self.test, self.case)

    @cached_property
    def effective_cfg(self) -> TestConfig:
        """``cfg`` with unset thresholds filled by :func:`auto_thresholds`."""
        auto = auto_thresholds(self.problem, self.case)
        missing = {name: value for name, value in auto.items() if getattr(self.cfg, name) is None}
        return replace(self.cfg, **missing)

    @property
    def true_cluster(self) -> ClusterSpec:
        if self.true_hypothesis == NULL:
            return self.problem.null_cluster
        return self.problem.clusters[self.true_hypothesis - 1]

    @cached_property
    def _interval_cluster(self) -> ClusterSpec:
        return as_mean_interval(self.true_cluster, self.problem.kernel)

    @cached_property
    def nearest_foreign(self) -> GaussianModel:
        """Closest other center (by population MMD^2) to the true cluster's center."""
        p, k = self.problem, self.problem.kernel
        own = self.true_cluster.center
        pool = [c.center for i, c in enumerate(p.clusters, start=1) if i != self.true_hypothesis]
        if self.case is Case.GENERAL and self.true_hypothesis != NULL:
            pool.append(p.null_cluster.center)
        dists = [mmd2_population(own, c, k) for c in pool]
        return pool[int(np.argmin(dists))]

    @cached_property
    def worst_case_model(self) -> GaussianModel:
        return worst_case_q(self._interval_cluster, self.nearest_foreign, self.problem.kernel)

    def testing_model(self, rng: np.random.Generator) -> GaussianModel:
        """The distribution Q the testing sequence is drawn from in one trial."""
        if self.q_policy is QPolicy.WORST_CASE:
            return self.worst_case_model
        center = self.true_cluster.center
        if self.q_policy is QPolicy.CENTER:
            return center
        r = self._interval_cluster.uncertainty.radius
        if not math.isfinite(r):
            raise ValidationError("q_policy", "uniform policy needs a bounded uncertainty set")
        return center.shifted(rng.uniform(center.mean - r, center.mean + r))


@dataclass(frozen=True)
class TrialOutcome:
    verdict: Verdict
    correct: bool
    wall_time: float


@dataclass(frozen=True)
class ExperimentResult:
    trials: int
    errors: int
    censored: int
    error_prob: float
    error_ci95: float
    ci_low: float
    ci_high: float
    mean_tau: float
    mean_wall_time: float
    censored_fraction: float


def trial_streams(base_seed: int, trial_index: int, count: int) -> list:
    """``count`` independent generators for one trial."""
    seq = np.random.SeedSequence(base_seed, spawn_key=(trial_index,))
    return [np.random.default_rng(s) for s in seq.spawn(count)]


Runner = Callable[..., Verdict]


def run_trial(spec: ExperimentSpec, trial_index: int, runner: Optional[Runner] = None) -> TrialOutcome:
    """Run one independent trial.

    Streams: 0 feeds the testing sequence, 1..M the training sequences, and
    the last one the per-trial choice of Q. Wall time covers the classifier
    only; time spent drawing samples is subtracted.
    """
    p = spec.problem
    streams = trial_streams(spec.base_seed, trial_index, p.M + 2)
    q = spec.testing_model(streams[-1])
    src = GaussianSource(q, [c.center for c in p.clusters], streams[0], streams[1:p.M + 1])
    runner = runner or RUNNERS[spec.test]
    t0 = time.perf_counter()
    verdict = runner(src, spec.effective_cfg, spec.case, p.kernel)
    wall = max(time.perf_counter() - t0 - src.sampling_time, 0.0)
    return TrialOutcome(verdict, verdict.decision == spec.true_hypothesis, wall)


def _run_chunk(spec: ExperimentSpec, start: int, stop: int, runner: Optional[Runner]):
    decisions = np.empty(stop - start, dtype=np.int64)
    taus = np.empty(stop - start, dtype=np.int64)
    walls = np.empty(stop - start)
    for j, idx in enumerate(range(start, stop)):
        out = run_trial(spec, idx, runner)
        decisions[j], taus[j], walls[j] = out.verdict.decision, out.verdict.tau, out.wall_time
    return start, decisions, taus, walls


def run_trials(spec: ExperimentSpec, workers: int = 1, runner: Optional[Runner] = None):
    """Arrays (decision, tau, wall_time) indexed by trial, in trial order."""
    T = spec.trials
    decisions = np.empty(T, dtype=np.int64)
    taus = np.empty(T, dtype=np.int64)
    walls = np.empty(T)
    if workers <= 1 or T < 2:
        chunks = [_run_chunk(spec, 0, T, runner)]
    else:
        size = max(1, math.ceil(T / (4 * workers)))
        bounds = [(s, min(s + size, T)) for s in range(0, T, size)]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(_run_chunk, spec, a, b, runner) for a, b in bounds]
            chunks = [f.result() for f in futures]
    for start, d, t, w in chunks:
        decisions[start:start + d.size] = d
        taus[start:start + d.size] = t
        walls[start:start + d.size] = w
    return decisions, taus, walls


def binomial_ci(errors: int, trials: int) -> tuple:
    """(half_width, low, high) of a 95% interval for errors / trials.

    Wald, except at 0 or ``trials`` errors where the Wald width collapses;
    there the Wilson interval is used and the half-width is its larger side.
    """
    p = errors / trials
    if 0 < errors < trials:
        hw = Z95 * math.sqrt(p * (1 - p) / trials)
        return hw, max(0.0, p - hw), min(1.0, p + hw)
    z2 = Z95 * Z95
    centre = (p + z2 / (2 * trials)) / (1 + z2 / trials)
    spread = Z95 * math.sqrt(p * (1 - p) / trials + z2 / (4 * trials * trials)) / (1 + z2 / trials)
    low, high = max(0.0, centre - spread), min(1.0, centre + spread)
    return max(p - low, high - p), low, high


def summarize(spec: ExperimentSpec, decisions, taus, walls) -> ExperimentResult:
    T = decisions.size
    errors = int(np.count_nonzero(decisions != spec.true_hypothesis))
    censored = int(np.count_nonzero(decisions == CENSORED))
    hw, low, high = binomial_ci(errors, T)
    return ExperimentResult(
        trials=T, errors=errors, censored=censored, error_prob=errors / T, error_ci95=hw,
        ci_low=low, ci_high=high, mean_tau=float(taus.sum()) / T, mean_wall_time=float(walls.mean()),
        censored_fraction=censored / T)


def estimate(spec: ExperimentSpec, workers: int = 1, runner: Optional[Runner] = None) -> ExperimentResult:
    """Error probability, stopping time and timing over ``spec.trials`` trials.

    ``runner`` replaces the configured test (used for rigged classifiers in
    tests); it must be picklable when ``workers > 1``.
    """
    log.debug("estimate %s/%s H=%d q=%s trials=%d", spec.test.value, spec.case.value,
              spec.true_hypothesis, spec.q_policy.value, spec.trials)
    return summarize(spec, *run_trials(spec, workers, runner))


def apply_overrides(spec: ExperimentSpec, point: dict) -> ExperimentSpec:
    """A copy of ``spec`` with grid-point overrides applied and re-validated."""
    cfg_changes, spec_changes = {}, {}
    problem = spec.problem
    for key, value in point.items():
        if key in _CFG_FIELDS:
            cfg_changes[_CFG_FIELDS[key]] = value
        elif key in ("trials", "true_hypothesis"):
            spec_changes[key] = value
        elif key == "delta":
            try:
                problem = problem.with_level(float(value))
            except ValidationError as exc:
                raise ValidationError("delta", f"{value}: {exc.rule}") from exc
        else:
            raise ValidationError(key, f"cannot be swept; allowed: {', '.join(SWEEPABLE)}")
    return replace(spec, problem=problem, cfg=replace(spec.cfg, **cfg_changes), **spec_changes)


def default_x(spec: ExperimentSpec) -> tuple:
    if spec.test is TestKind.SEQUENTIAL:
        return "N0", spec.cfg.N0
    return "n", spec.cfg.n


@dataclass(frozen=True)
class SweepRow:
    x_param: str
    x_value: float
    spec: ExperimentSpec
    result: ExperimentResult


def sweep(spec: ExperimentSpec, grid: Sequence[dict], workers: int = 1,
          runner: Optional[Runner] = None) -> list:
    """One :class:`ExperimentResult` per grid point, in grid order.

    The x-axis of a point is its first override, or the test's natural
    length parameter when the point is empty.
    """
    rows = []
    for point in grid:
        point_spec = apply_overrides(spec, point)
        if point:
            x_param = next(iter(point))
            x_value = point[x_param]
        else:
            x_param, x_value = default_x(point_spec)
        rows.append(SweepRow(x_param, x_value, point_spec, estimate(point_spec, workers, runner)))
    return rows
