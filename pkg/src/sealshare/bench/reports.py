"""Benchmark report container and renderers.

A report is a grid of cells, each with mean and sample standard deviation
over R runs (R >= 3, default 15). Renderers emit a plain-text table, a CSV
with one machine-readable row per cell, and a matplotlib figure saved next
to the CSV.
"""

from __future__ import annotations

import csv
import os
import platform
import statistics
from dataclasses import dataclass, field
from pathlib import Path

from ..errors import MalformedInput

DEFAULT_RUNS = 15


def summarize(samples: list[float]) -> tuple[float, float]:
    """(mean, sample stddev with the n-1 formula)."""
    if len(samples) < 2:
        return (samples[0] if samples else 0.0), 0.0
    return statistics.fmean(samples), statistics.stdev(samples)


def _cpu_model() -> str:
    try:
        with open("/proc/cpuinfo") as fh:
            for line in fh:
                if line.lower().startswith("model name"):
                    return line.split(":", 1)[1].strip()
    except OSError:
        pass
    return platform.processor() or platform.machine()


def environment_descriptor(profile: str | None = None) -> dict:
    return {
        "cpu": _cpu_model(),
        "cores": os.cpu_count(),
        "platform": platform.platform(),
        "profile": profile or "-",
    }


@dataclass
class BenchReport:
    title: str
    key_columns: list[str]               # grid parameter column names
    metric_columns: list[str]            # metric base names (mean/std emitted per metric)
    runs: int
    environment: dict
    rows: list[dict] = field(default_factory=list)

    def __post_init__(self):
        if self.runs < 3:
            raise MalformedInput("benchmarks need at least 3 runs per cell")

    def add_row(self, keys: dict, samples: dict[str, list[float]]) -> None:
        row = dict(keys)
        for metric, values in samples.items():
            mean, std = summarize(values)
            row[f"{metric}_mean"] = mean
            row[f"{metric}_std"] = std
            row[f"{metric}_samples"] = list(values)
        self.rows.append(row)

    # ------------------------------------------------------------- renderers

    def _columns(self) -> list[str]:
        cols = list(self.key_columns)
        for metric in self.metric_columns:
            cols += [f"{metric}_mean", f"{metric}_std"]
        return cols

    def to_text(self) -> str:
        cols = self._columns()
        widths = {c: max(len(c), 12) for c in cols}
        def fmt(v):
            return f"{v:.7f}" if isinstance(v, float) else str(v)
        lines = [f"# {self.title}  (R={self.runs}, {self.environment['cpu']}, "
                 f"{self.environment['cores']} cores, profile {self.environment['profile']})"]
        lines.append("  ".join(c.rjust(widths[c]) for c in cols))
        for row in self.rows:
            lines.append("  ".join(fmt(row[c]).rjust(widths[c]) for c in cols))
        return "\n".join(lines)

    def write_csv(self, path: str | Path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        cols = self._columns()
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(cols)
            for row in self.rows:
                writer.writerow([row[c] for c in cols])
        return path

    def write_figure(self, path: str | Path, x_column: str,
                     series_column: str | None = None) -> Path:
        """Line plot of every metric's mean against `x_column`, one line per
        value of `series_column` (log-log: benchmark grids span decades)."""
        import matplotlib
        matplotlib.use("Agg")
        import matplotlib.pyplot as plt

        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        fig, axes = plt.subplots(1, len(self.metric_columns),
                                 figsize=(5.2 * len(self.metric_columns), 4.0),
                                 squeeze=False)
        series_values = sorted({row[series_column] for row in self.rows}) \
            if series_column else [None]
        for ax, metric in zip(axes[0], self.metric_columns):
            for sv in series_values:
                rows = [r for r in self.rows
                        if series_column is None or r[series_column] == sv]
                rows.sort(key=lambda r: r[x_column])
                xs = [r[x_column] for r in rows]
                ys = [r[f"{metric}_mean"] for r in rows]
                errs = [r[f"{metric}_std"] for r in rows]
                label = f"{series_column}={sv}" if series_column else metric
                ax.errorbar(xs, ys, yerr=errs, marker="o", capsize=3, label=label)
            ax.set_xlabel(x_column)
            ax.set_ylabel(f"{metric} seconds")
            ax.set_title(metric)
            ax.set_xscale("log")
            ax.set_yscale("log")
            ax.grid(True, which="both", alpha=0.3)
            ax.legend(fontsize=8)
        fig.suptitle(self.title)
        fig.tight_layout()
        fig.savefig(path, dpi=130)
        plt.close(fig)
        return path
