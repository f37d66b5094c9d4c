"""Experiment config files: a TOML document with named keys for every parameter.

Top-level keys ``seed``, ``alpha``, ``clusters`` and ``null`` describe the
problem; ``[kernel]``, ``[defaults]`` and ``[exponents]`` are optional
sections; each ``[[tests]]`` table becomes one experiment, optionally with a
``[tests.sweep]`` grid. Omitted values fall back to the benchmark setup:
ten unit-variance Gaussians at means 1.5 (i - 1), mean radius 0.1, a null at
mean 15, sigma0 = 1, alpha = 1 and K = 2.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import tomli
import tomli_w

from .classifiers import NULL, Case, TestConfig, TestKind
from .clusters import ClusterSpec, GaussianModel, MeanInterval, MmdBall, Problem
from .errors import ParseError, ValidationError
from .kernel import KernelSpec
from .montecarlo import SWEEPABLE, ExperimentSpec, QPolicy

DEFAULT_SEED = 20240601
DEFAULT_M = 10
DEFAULT_SPACING = 1.5
DEFAULT_RADIUS = 0.1

BUILTIN_DEFAULTS = {"trials": 50000, "q_policy": "worst_case", "n": 25, "N0": 10, "K": 2, "tau_max": 10000}

_TEST_KEYS = {"name", "test", "case", "hypothesis", "q_policy", "trials", "seed", "n", "N0", "K",
              "lambda", "lambda1", "lambda2", "lambda3", "tau_max", "sweep"}
_DEFAULT_KEYS = {"trials", "q_policy", "n", "N0", "K", "tau_max"}
_EXPONENT_KEYS = {"lambda", "lambda1", "lambda2", "lambda3", "K"}
_TOP_KEYS = {"seed", "alpha", "clusters", "null", "kernel", "defaults", "exponents", "tests"}
_LAMBDA_FIELDS = {"lambda": "lam", "lambda1": "lam1", "lambda2": "lam2", "lambda3": "lam3"}


@dataclass(frozen=True)
class NamedExperiment:
    name: str
    spec: ExperimentSpec
    grid: tuple = ()


@dataclass(frozen=True)
class Config:
    problem: Problem
    experiments: tuple = ()
    seed: int = DEFAULT_SEED
    exponents: dict = field(default_factory=dict)

    @property
    def specs(self) -> list:
        return [e.spec for e in self.experiments]


def _check_keys(table: dict, allowed: set, where: str):
    for key in table:
        if key not in allowed:
            raise ValidationError(f"{where}.{key}" if where else key, "unknown key")


def _number(table: dict, key: str, where: str, default=None, kind=float):
    value = table.get(key, default)
    if value is None:
        return None
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ValidationError(f"{where}.{key}", f"must be a number, got {value!r}")
    if kind is int:
        if isinstance(value, float) and not value.is_integer():
            raise ValidationError(f"{where}.{key}", f"must be an integer, got {value!r}")
        return int(value)
    return float(value)


def _cluster(entry, where: str) -> ClusterSpec:
    if not isinstance(entry, dict):
        raise ValidationError(where, "must be a table {mean, variance, radius | delta}")
    _check_keys(entry, {"mean", "variance", "radius", "delta"}, where)
    if "radius" in entry and "delta" in entry:
        raise ValidationError(where, "give either radius (mean interval) or delta (MMD ball), not both")
    if "mean" not in entry:
        raise ValidationError(f"{where}.mean", "required")
    try:
        center = GaussianModel(_number(entry, "mean", where), _number(entry, "variance", where, 1.0))
        if "delta" in entry:
            return ClusterSpec(center, MmdBall(_number(entry, "delta", where)))
        return ClusterSpec(center, MeanInterval(_number(entry, "radius", where, 0.0)))
    except ValidationError as exc:
        if exc.field.startswith(where):
            raise
        raise type(exc)(f"{where}.{exc.field}", exc.rule) from exc


def _hypothesis(value, M: int, where: str) -> int:
    if isinstance(value, str):
        text = value.strip().lower()
        if text in ("null", "h0", "hr"):
            return NULL
        if text.startswith("h") and text[1:].isdigit():
            value = int(text[1:])
    if isinstance(value, bool) or not isinstance(value, int) or not 0 <= value <= M:
        raise ValidationError(where, f"must be 'null' or H1..H{M}, got {value!r}")
    return value


def _grid(sweep, where: str, M: int) -> tuple:
    if not isinstance(sweep, dict):
        raise ValidationError(where, "must be a table")
    _check_keys(sweep, {"param", "values", "start", "stop", "step", "points"}, where)
    if "points" in sweep:
        points = sweep["points"]
        if not isinstance(points, list) or not all(isinstance(p, dict) for p in points):
            raise ValidationError(f"{where}.points", "must be a list of tables")
    else:
        param = sweep.get("param")
        if param not in SWEEPABLE:
            raise ValidationError(f"{where}.param", f"must be one of {', '.join(SWEEPABLE)}, got {param!r}")
        if "values" in sweep:
            values = sweep["values"]
            if not isinstance(values, list):
                raise ValidationError(f"{where}.values", "must be a list")
        else:
            start = _number(sweep, "start", where, kind=int)
            stop = _number(sweep, "stop", where, kind=int)
            step = _number(sweep, "step", where, 1, kind=int)
            if start is None or stop is None or step < 1:
                raise ValidationError(where, "needs values, or start/stop[/step] with step >= 1")
            values = list(range(start, stop + 1, step))
        points = [{param: v} for v in values]
    out = []
    for i, point in enumerate(points):
        clean = {}
        for key, value in point.items():
            if key not in SWEEPABLE:
                raise ValidationError(f"{where}[{i}].{key}", f"cannot be swept; allowed: {', '.join(SWEEPABLE)}")
            if key == "true_hypothesis":
                value = _hypothesis(value, M, f"{where}[{i}].{key}")
            elif key in ("n", "N0", "K", "trials"):
                value = _number(point, key, f"{where}[{i}]", kind=int)
            else:
                value = _number(point, key, f"{where}[{i}]")
            clean[key] = value
        out.append(clean)
    return tuple(out)


def _experiment(table, index: int, problem: Problem, defaults: dict, seed: int) -> NamedExperiment:
    where = f"tests[{index}]"
    if not isinstance(table, dict):
        raise ValidationError(where, "must be a table")
    _check_keys(table, _TEST_KEYS, where)
    name = str(table.get("name", f"test{index + 1}"))
    merged = {**defaults, **table}
    try:
        test = TestKind(str(merged.get("test", "fixed")).replace("-", "_"))
    except ValueError:
        raise ValidationError(f"{where}.test", f"must be fixed, sequential or two_phase, got {merged.get('test')!r}")
    try:
        case = Case(str(merged.get("case", "simple")))
    except ValueError:
        raise ValidationError(f"{where}.case", f"must be simple or general, got {merged.get('case')!r}")
    try:
        q_policy = QPolicy(str(merged["q_policy"]))
    except ValueError:
        raise ValidationError(f"{where}.q_policy", f"must be worst_case, center or uniform, got {merged['q_policy']!r}")
    cfg = TestConfig(
        alpha=problem.alpha,
        n=_number(merged, "n", where, kind=int),
        N0=_number(merged, "N0", where, kind=int),
        K=_number(merged, "K", where, kind=int),
        tau_max=_number(merged, "tau_max", where, kind=int),
        **{f: _number(merged, key, where) for key, f in _LAMBDA_FIELDS.items()},
    )
    try:
        spec = ExperimentSpec(
            problem=problem, test=test, case=case, cfg=cfg,
            true_hypothesis=_hypothesis(merged.get("hypothesis", "H1"), problem.M, f"{where}.hypothesis"),
            q_policy=q_policy, trials=_number(merged, "trials", where, kind=int),
            base_seed=_number(merged, "seed", where, seed, kind=int))
    except ValidationError as exc:
        if exc.field.startswith(where):
            raise
        raise type(exc)(f"{where}.{exc.field}", exc.rule) from exc
    grid = _grid(table["sweep"], f"{where}.sweep", problem.M) if "sweep" in table else ()
    return NamedExperiment(name, spec, grid)


def parse_config(text: str) -> Config:
    """Parse and fully validate a config document.

    Raises:
        ParseError: the text is not valid TOML.
        ValidationError: a value breaks an invariant; ``field`` names it.
    """
    try:
        doc = tomli.loads(text)
    except tomli.TOMLDecodeError as exc:
        raise ParseError(f"config syntax: {exc}") from exc
    _check_keys(doc, _TOP_KEYS, "")

    kernel_table = doc.get("kernel", {})
    _check_keys(kernel_table, {"kind", "sigma0"}, "kernel")
    try:
        kernel = KernelSpec(_number(kernel_table, "sigma0", "kernel", 1.0), kernel_table.get("kind", "gaussian"))
    except ValueError as exc:
        if isinstance(exc, ValidationError):
            raise
        raise ValidationError("kernel.kind", f"unsupported kernel {kernel_table.get('kind')!r}") from exc

    if "clusters" in doc:
        if not isinstance(doc["clusters"], list):
            raise ValidationError("clusters", "must be a list of tables")
        clusters = tuple(_cluster(c, f"clusters[{i}]") for i, c in enumerate(doc["clusters"]))
    else:
        clusters = tuple(ClusterSpec(GaussianModel(DEFAULT_SPACING * i, 1.0), MeanInterval(DEFAULT_RADIUS))
                         for i in range(DEFAULT_M))
    if "null" in doc:
        null = _cluster(doc["null"], "null")
    elif "clusters" not in doc:
        null = ClusterSpec(GaussianModel(DEFAULT_SPACING * DEFAULT_M, 1.0), MeanInterval(DEFAULT_RADIUS))
    else:
        null = None
    problem = Problem(clusters, kernel, _number(doc, "alpha", "", 1.0), null)

    seed = _number(doc, "seed", "", DEFAULT_SEED, kind=int)
    defaults_table = doc.get("defaults", {})
    _check_keys(defaults_table, _DEFAULT_KEYS, "defaults")
    defaults = {**BUILTIN_DEFAULTS, **defaults_table}

    exponents = doc.get("exponents", {})
    _check_keys(exponents, _EXPONENT_KEYS, "exponents")
    exponents = {k: _number(exponents, k, "exponents", kind=int if k == "K" else float) for k in exponents}

    tests = doc.get("tests", [])
    if not isinstance(tests, list):
        raise ValidationError("tests", "must be an array of tables")
    experiments = tuple(_experiment(t, i, problem, defaults, seed) for i, t in enumerate(tests))
    names = [e.name for e in experiments]
    dupes = {n for n in names if names.count(n) > 1}
    if dupes:
        raise ValidationError("tests.name", f"duplicate test names: {', '.join(sorted(dupes))}")
    return Config(problem, experiments, seed, exponents)


def load_config(path) -> Config:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config(fh.read())


def _cluster_table(c: ClusterSpec) -> dict:
    out = {"mean": c.center.mean, "variance": c.center.variance}
    if isinstance(c.uncertainty, MmdBall):
        out["delta"] = c.uncertainty.delta
    else:
        out["radius"] = c.uncertainty.radius
    return out


def _hyp_text(h: int) -> str:
    return "null" if h == NULL else f"H{h}"


def dump_config(config: Config) -> str:
    """Render ``config`` as TOML; ``parse_config`` of the result reproduces it."""
    p = config.problem
    doc = {"seed": config.seed, "alpha": p.alpha, "clusters": [_cluster_table(c) for c in p.clusters]}
    if p.null_cluster is not None:
        doc["null"] = _cluster_table(p.null_cluster)
    doc["kernel"] = p.kernel.to_dict()
    if config.exponents:
        doc["exponents"] = dict(config.exponents)
    tests = []
    for e in config.experiments:
        s, cfg = e.spec, e.spec.cfg
        t = {"name": e.name, "test": s.test.value, "case": s.case.value,
             "hypothesis": _hyp_text(s.true_hypothesis), "q_policy": s.q_policy.value,
             "trials": s.trials, "seed": s.base_seed, "n": cfg.n, "N0": cfg.N0, "K": cfg.K,
             "tau_max": cfg.tau_max}
        for key, f in _LAMBDA_FIELDS.items():
            if getattr(cfg, f) is not None:
                t[key] = getattr(cfg, f)
        if e.grid:
            points = [{k: (_hyp_text(v) if k == "true_hypothesis" else v) for k, v in pt.items()} for pt in e.grid]
            keys = {tuple(pt) for pt in e.grid}
            if len(keys) == 1 and len(next(iter(keys))) == 1:
                param = next(iter(keys))[0]
                t["sweep"] = {"param": param, "values": [pt[param] for pt in points]}
            else:
                t["sweep"] = {"points": points}
        tests.append(t)
    if tests:
        doc["tests"] = tests
    return tomli_w.dumps(doc)


def config_hash(config: Config) -> str:
    """SHA-256 of the canonical rendering of ``config``."""
    return hashlib.sha256(dump_config(config).encode("utf-8")).hexdigest()
