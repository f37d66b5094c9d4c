"""Command-line front end: ``simulate``, ``exponents`` and ``classify``.

Exit codes: 0 success, 1 invalid input (usage, config or data), 2 I/O failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import os
import sys
from dataclasses import asdict, dataclass, field, replace
from datetime import datetime, timezone
from pathlib import Path

from . import __version__
from .classifiers import (ArraySource, Case, TestConfig, TestKind, classify_fixed,
                          run_sequential, run_two_phase)
from .config import Config, NamedExperiment, config_hash, load_config
from .errors import MmdClassError, ValidationError
from .exponents import ExponentParams, achievable_exponents
from .kernel import KernelSpec
from .montecarlo import auto_thresholds, sweep

log = logging.getLogger("mmdclass")

CSV_COLUMNS = ["x_param", "x_value", "expected_tau", "error_prob", "ci95", "censored_frac",
               "mean_wall_time_s", "trials", "seed"]

COMBINATIONS = [("fixed", "simple"), ("sequential", "simple"), ("two_phase", "simple"),
                ("fixed", "general"), ("sequential", "general"), ("two_phase", "general")]


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


@dataclass
class RunManifest:
    config_hash: str
    tool_version: str
    started_at: str
    finished_at: str = ""
    output_paths: list = field(default_factory=list)
    seed: int = 0
    workers: int = 1


def _fmt(value) -> str:
    if isinstance(value, bool):
        return str(int(value))
    if isinstance(value, int):
        return str(value)
    value = float(value)
    if value.is_integer() and abs(value) < 2 ** 53:
        return str(int(value))
    return format(value, ".17g")


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def default_workers() -> int:
    env = os.environ.get("MMD_CLASSIFY_WORKERS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            log.warning("ignoring non-integer MMD_CLASSIFY_WORKERS=%r", env)
    return os.cpu_count() or 1


def _override(config: Config, seed=None, trials=None) -> Config:
    if seed is None and trials is None:
        return config
    experiments = []
    for e in config.experiments:
        spec = e.spec
        if seed is not None:
            spec = replace(spec, base_seed=seed)
        if trials is not None:
            spec = replace(spec, trials=trials)
        grid = tuple({k: v for k, v in pt.items() if not (trials is not None and k == "trials")} for pt in e.grid)
        experiments.append(NamedExperiment(e.name, spec, grid))
    return replace(config, experiments=tuple(experiments), seed=config.seed if seed is None else seed)


def render_csv(experiment: NamedExperiment, rows, digest: str, timing: bool = True) -> str:
    s = experiment.spec
    buf = io.StringIO()
    buf.write(f"# config_hash={digest} experiment={experiment.name} test={s.test.value} case={s.case.value} "
              f"hypothesis={'null' if s.true_hypothesis == 0 else 'H%d' % s.true_hypothesis} "
              f"q_policy={s.q_policy.value}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for row in rows:
        r = row.result
        writer.writerow([row.x_param, _fmt(row.x_value), _fmt(r.mean_tau), _fmt(r.error_prob), _fmt(r.error_ci95),
                         _fmt(r.censored_fraction), _fmt(r.mean_wall_time) if timing else "nan",
                         r.trials, row.spec.base_seed])
    return buf.getvalue()


def cmd_simulate(args) -> int:
    config = _override(load_config(args.config), args.seed, args.trials)
    digest = config_hash(config)
    workers = args.workers or default_workers()
    manifest = RunManifest(digest, __version__, _now(), seed=config.seed, workers=workers)
    out = Path(args.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        print(f"error: cannot create output directory {out}: {exc}", file=sys.stderr)
        return 2
    for experiment in config.experiments:
        log.info("running %s (%d grid points)", experiment.name, len(experiment.grid) or 1)
        rows = sweep(experiment.spec, experiment.grid or ({},), workers)
        path = out / f"{experiment.name}.csv"
        try:
            path.write_text(render_csv(experiment, rows, digest, timing=not args.no_timing), encoding="utf-8")
        except OSError as exc:
            print(f"error: cannot write {path}: {exc}", file=sys.stderr)
            return 2
        manifest.output_paths.append(str(path))
        print(f"wrote {path}")
    manifest.finished_at = _now()
    try:
        (out / "manifest.json").write_text(json.dumps(asdict(manifest), indent=2) + "\n", encoding="utf-8")
    except OSError as exc:
        print(f"error: cannot write manifest: {exc}", file=sys.stderr)
        return 2
    return 0


def _exponent_thresholds(config: Config, problem, case: str) -> dict:
    auto = auto_thresholds(problem, Case(case))
    given = {"lam": config.exponents.get("lambda"), "lam1": config.exponents.get("lambda1"),
             "lam2": config.exponents.get("lambda2"), "lam3": config.exponents.get("lambda3")}
    return {k: (v if v is not None else auto[k]) for k, v in given.items()}


def exponent_table(config: Config, problem=None) -> list:
    """Rows of (test, case, thresholds, ExponentReport or None) for all six combinations."""
    problem = problem or config.problem
    K = int(config.exponents.get("K", 2))
    rows = []
    for test, case in COMBINATIONS:
        if case == "general" and not problem.has_null:
            rows.append((test, case, None, None))
            continue
        p = ExponentParams.from_problem(problem, general=(case == "general"))
        th = _exponent_thresholds(config, problem, case)
        if case == "simple":
            lams = None if test == "fixed" else th["lam"]
        else:
            lams = {"fixed": th["lam"], "sequential": (th["lam1"], th["lam2"]),
                    "two_phase": (th["lam1"], th["lam2"], th["lam3"])}[test]
        rows.append((test, case, lams, achievable_exponents(test, case, p, lams, K if test == "two_phase" else None)))
    return rows


def _lams_text(lams) -> str:
    if lams is None:
        return "-"
    if isinstance(lams, tuple):
        return ",".join(f"{v:.6g}" for v in lams)
    return f"{lams:.6g}"


def cmd_exponents(args) -> int:
    config = load_config(args.config)
    problem = config.problem
    dist = problem.distances
    print(f"D1     = {dist['d1']:.10g}")
    print(f"D2     = {dist['d2']:.10g}")
    if problem.has_null:
        print(f"D1_bar = {dist['d1_bar']:.10g}")
        print(f"D2_bar = {dist['d2_bar']:.10g}")
    print(f"K0 = {problem.kernel.sup_bound:g}, alpha = {problem.alpha:g}, K = {int(config.exponents.get('K', 2))}")
    print()
    header = f"{'test':<11} {'case':<8} {'thresholds':<30} {'misclass':>12} {'false_alarm':>12}  regime"
    print(header)
    print("-" * len(header))
    csv_rows = []
    for test, case, lams, rep in exponent_table(config):
        if rep is None:
            print(f"{test:<11} {case:<8} {'-':<30} {'n/a':>12} {'n/a':>12}  no null cluster")
            continue
        print(f"{test:<11} {case:<8} {_lams_text(lams):<30} {str(rep.misclassification_exponent):>12} "
              f"{str(rep.false_alarm_exponent):>12}  {rep.regime_note}")
        csv_rows.append([test, case, _lams_text(lams), _fmt(rep.misclassification_exponent.value),
                         rep.misclassification_exponent.status, _fmt(rep.false_alarm_exponent.value),
                         rep.false_alarm_exponent.status, rep.regime_note])

    sweep_rows = []
    if args.delta_sweep:
        print()
        print(f"{'delta':>10} {'D1':>12} {'D2':>12} " + " ".join(f"{t[:5] + '/' + c[:3]:>12}" for t, c in COMBINATIONS))
        for delta in args.delta_sweep:
            try:
                sub = problem.with_level(delta)
            except ValidationError as exc:
                print(f"{delta:>10.6g}  {exc.rule}")
                continue
            table = exponent_table(config, sub)
            values = [rep.misclassification_exponent if rep else None for _, _, _, rep in table]
            print(f"{delta:>10.6g} {sub.distances['d1']:>12.6g} {sub.distances['d2']:>12.6g} "
                  + " ".join(f"{(str(v) if v else 'n/a'):>12}" for v in values))
            sweep_rows.append([_fmt(delta), _fmt(sub.distances["d1"]), _fmt(sub.distances["d2"])]
                              + [(_fmt(v.value) if v else "nan") for v in values])

    if args.csv:
        try:
            with open(args.csv, "w", newline="", encoding="utf-8") as fh:
                w = csv.writer(fh, lineterminator="\n")
                w.writerow(["test", "case", "thresholds", "misclassification_exponent", "misclassification_status",
                            "false_alarm_exponent", "false_alarm_status", "regime"])
                w.writerows(csv_rows)
                if sweep_rows:
                    fh.write("\n")
                    w.writerow(["delta", "d1", "d2"] + [f"{t}_{c}" for t, c in COMBINATIONS])
                    w.writerows(sweep_rows)
        except OSError as exc:
            print(f"error: cannot write {args.csv}: {exc}", file=sys.stderr)
            return 2
    return 0


def read_columns(path) -> dict:
    """Columns of a headed CSV of reals; trailing empty cells allowed (ragged columns)."""
    with open(path, newline="", encoding="utf-8") as fh:
        rows = [r for r in csv.reader(fh) if r and not r[0].startswith("#")]
    if not rows:
        raise ValidationError(str(path), "empty file")
    header = [h.strip() for h in rows[0]]
    columns = {h: [] for h in header}
    for lineno, row in enumerate(rows[1:], start=2):
        for name, cell in zip(header, row):
            cell = cell.strip()
            if not cell:
                continue
            try:
                value = float(cell)
            except ValueError:
                raise ValidationError(f"{path}:{lineno}", f"not a number: {cell!r}") from None
            if not math.isfinite(value):
                raise ValidationError(f"{path}:{lineno}", f"non-finite value {cell!r}")
            columns[name].append(value)
    return columns


def _training_columns(columns: dict, path) -> list:
    names = sorted((h for h in columns if h.lower().startswith("y") and h[1:].isdigit()), key=lambda h: int(h[1:]))
    if len(names) < 2:
        raise ValidationError(str(path), "need training columns y1..yM with M >= 2")
    if [int(h[1:]) for h in names] != list(range(1, len(names) + 1)):
        raise ValidationError(str(path), f"training columns must be y1..yM, got {', '.join(names)}")
    return [columns[h] for h in names]


def cmd_classify(args) -> int:
    test, case = TestKind(args.test.replace("-", "_")), Case(args.case)
    if case is Case.GENERAL:
        needed = {TestKind.FIXED: ["lam"], TestKind.SEQUENTIAL: ["lam1", "lam2"],
                  TestKind.TWO_PHASE: ["lam1", "lam2", "lam3"]}[test]
    else:
        needed = [] if test is TestKind.FIXED else ["lam"]
    missing = ["--" + n.replace("lam", "lambda") for n in needed if getattr(args, n) is None]
    if missing:
        raise UsageError(f"{test.value}/{case.value} requires {', '.join(missing)}")

    xcols = read_columns(args.x)
    if "x" in xcols:
        x = xcols["x"]
    elif len(xcols) == 1:
        x = next(iter(xcols.values()))
    else:
        raise ValidationError(str(args.x), "no column named x")
    ys = _training_columns(read_columns(args.ys) if args.ys else xcols, args.ys or args.x)
    kernel = KernelSpec(args.sigma0)

    if test is TestKind.FIXED:
        verdict = classify_fixed(x, ys, kernel, case, args.lam)
    else:
        cfg = TestConfig(alpha=args.alpha, n=args.n if args.n is not None else len(x), N0=args.N0, K=args.K,
                         lam=args.lam, lam1=args.lam1, lam2=args.lam2, lam3=args.lam3,
                         tau_max=args.tau_max if args.tau_max is not None else len(x))
        runner = run_sequential if test is TestKind.SEQUENTIAL else run_two_phase
        verdict = runner(ArraySource(x, ys), cfg, case, kernel)
    print(json.dumps(verdict.to_dict(), separators=(",", ":")))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="mmdclass", description="MMD-based sequence classification under distribution uncertainty.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sim = sub.add_parser("simulate", help="run the experiments in a config and write CSVs")
    sim.add_argument("--config", required=True)
    sim.add_argument("--out", required=True, help="output directory")
    sim.add_argument("--workers", type=int, default=None,
                     help="worker processes (default: $MMD_CLASSIFY_WORKERS or CPU count)")
    sim.add_argument("--seed", type=int, default=None, help="override every experiment's base seed")
    sim.add_argument("--trials", type=int, default=None, help="override every experiment's trial count")
    sim.add_argument("--no-timing", action="store_true",
                     help="write nan for mean_wall_time_s so reruns are byte-identical")
    sim.set_defaults(func=cmd_simulate)

    exp = sub.add_parser("exponents", help="print D-values and achievable exponents for a config")
    exp.add_argument("--config", required=True)
    exp.add_argument("--csv", default=None, help="also write the table to this CSV file")
    exp.add_argument("--delta-sweep", default=None, type=lambda s: [float(v) for v in s.split(",") if v.strip()],
                     help="comma-separated uncertainty levels to tabulate")
    exp.set_defaults(func=cmd_exponents)

    cls = sub.add_parser("classify", help="classify sequences read from CSV files")
    cls.add_argument("--x", required=True, help="CSV with a column named x (the testing sequence)")
    cls.add_argument("--ys", default=None, help="CSV with columns y1..yM (default: read them from --x)")
    cls.add_argument("--test", default="fixed", choices=["fixed", "sequential", "two_phase", "two-phase"])
    cls.add_argument("--case", default="simple", choices=["simple", "general"])
    cls.add_argument("--lambda", dest="lam", type=float)
    cls.add_argument("--lambda1", dest="lam1", type=float)
    cls.add_argument("--lambda2", dest="lam2", type=float)
    cls.add_argument("--lambda3", dest="lam3", type=float)
    cls.add_argument("--alpha", type=float, default=1.0)
    cls.add_argument("--n", type=int, default=None, help="first-phase length (two-phase)")
    cls.add_argument("--N0", type=int, default=10)
    cls.add_argument("--K", type=int, default=2)
    cls.add_argument("--tau-max", dest="tau_max", type=int, default=None)
    cls.add_argument("--sigma0", type=float, default=1.0)
    cls.set_defaults(func=cmd_classify)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # usage errors, --help, --version
        return exc.code if isinstance(exc.code, int) else 1
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except MmdClassError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
