"""Plot the CSVs written by ``mmdclass simulate``.

Usage:
    python scripts/plot_figures.py RESULTS_DIR [--out PLOTS_DIR]

Needs matplotlib, which the package itself does not depend on. Each panel
is drawn only if its CSVs are present, so partial runs still plot.
"""

import argparse
import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

TESTS = ("fixed", "sequential", "two_phase")


def read(path: Path) -> dict:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(line for line in fh if not line.startswith("#")))
    cols = {k: [r[k] for r in rows] for k in rows[0]} if rows else {}
    for k in ("x_value", "expected_tau", "error_prob", "ci95", "mean_wall_time_s"):
        cols[k] = [float(v) for v in cols.get(k, [])]
    return cols


def panel(ax, results: Path, prefix: str, x: str, y: str, xlabel: str, ylabel: str, log_y=True) -> bool:
    drawn = False
    for test in TESTS:
        path = results / f"{prefix}_{test}.csv"
        if not path.exists():
            continue
        c = read(path)
        ax.plot(c[x], c[y], marker=".", label=test.replace("_", "-"))
        drawn = True
    if drawn:
        ax.set_xlabel(xlabel)
        ax.set_ylabel(ylabel)
        if log_y:
            ax.set_yscale("log")
        ax.grid(True, which="both", alpha=0.3)
        ax.legend()
    return drawn


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("results", type=Path)
    ap.add_argument("--out", type=Path, default=None)
    args = ap.parse_args()
    out = args.out or args.results
    out.mkdir(parents=True, exist_ok=True)

    plots = [
        ("error_vs_tau_simple", "simple", "expected_tau", "error_prob", "E[tau]", "misclassification probability"),
        ("time_vs_tau_simple", "simple", "expected_tau", "mean_wall_time_s", "E[tau]", "mean running time (s)"),
        ("error_vs_time_simple", "simple", "mean_wall_time_s", "error_prob", "mean running time (s)",
         "misclassification probability"),
        ("error_vs_tau_general", "general", "expected_tau", "error_prob", "E[tau]", "misclassification probability"),
        ("false_alarm_vs_tau", "null", "expected_tau", "error_prob", "E[tau]", "false alarm probability"),
    ]
    for name, prefix, x, y, xl, yl in plots:
        fig, ax = plt.subplots(figsize=(5, 3.5))
        if panel(ax, args.results, prefix, x, y, xl, yl, log_y=(y == "error_prob")):
            fig.tight_layout()
            fig.savefig(out / f"{name}.png", dpi=150)
            print(f"wrote {out / (name + '.png')}")
        plt.close(fig)

    fig, ax = plt.subplots(figsize=(5, 3.5))
    drawn = False
    for test in ("fixed", "two_phase"):
        for case in ("simple", "general"):
            path = args.results / f"delta_{case}_{test}.csv"
            if path.exists():
                c = read(path)
                ax.plot(c["x_value"], c["error_prob"], marker=".", label=f"{test.replace('_', '-')}, {case}")
                drawn = True
    if drawn:
        ax.set_xlabel("delta")
        ax.set_ylabel("misclassification probability")
        ax.set_yscale("log")
        ax.grid(True, which="both", alpha=0.3)
        ax.legend()
        fig.tight_layout()
        fig.savefig(out / "error_vs_delta.png", dpi=150)
        print(f"wrote {out / 'error_vs_delta.png'}")
    plt.close(fig)


if __name__ == "__main__":
    main()
