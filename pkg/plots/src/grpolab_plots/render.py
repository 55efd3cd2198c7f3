"""Render figure analogs from the frozen grpolab CSV schemas.

Inputs are plain CSV files; this package never imports the simulator. Output
is SVG with a fixed hash salt and no timestamp metadata, so re-rendering the
same inputs produces byte-identical files.

Figure kinds and the exact column lists they require:
  weights     p,k,w_sgrpo,w_drgrpo_unscaled,w_drgrpo_scaled09
  deviation   k,a_pos,a_neg,mismatch_term,true_pos_term,true_neg_term,total
  robustness  method,injected_p,assumption_p,step,accuracy_mean,accuracy_std
  entropy     step,accuracy,entropy,mean_weight,gated_fraction,mean_observed_reward
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
from matplotlib.figure import Figure

matplotlib.rcParams["svg.hashsalt"] = "grpolab-plots"

FIGURE_SCHEMAS: dict[str, tuple[str, ...]] = {
    "weights": ("p", "k", "w_sgrpo", "w_drgrpo_unscaled", "w_drgrpo_scaled09"),
    "deviation": ("k", "a_pos", "a_neg", "mismatch_term", "true_pos_term", "true_neg_term", "total"),
    "robustness": ("method", "injected_p", "assumption_p", "step", "accuracy_mean", "accuracy_std"),
    "entropy": ("step", "accuracy", "entropy", "mean_weight", "gated_fraction", "mean_observed_reward"),
}

_TEXT_COLUMNS = {"method"}


class SchemaMismatchError(ValueError):
    """The CSV header does not match the frozen column list for the figure kind."""


class EmptyDataError(ValueError):
    """The CSV parsed but contains no data rows."""


@dataclass(frozen=True)
class PlotSpec:
    kind: str
    inputs: tuple[Path, ...]
    output: Path
    title: str | None = None

    def __post_init__(self) -> None:
        if self.kind not in FIGURE_SCHEMAS:
            raise ValueError(f"unknown figure kind {self.kind!r}; expected one of {sorted(FIGURE_SCHEMAS)}")
        object.__setattr__(self, "inputs", tuple(Path(p) for p in self.inputs))
        object.__setattr__(self, "output", Path(self.output))
        if not self.inputs:
            raise ValueError("at least one input CSV is required")
        if self.kind != "entropy" and len(self.inputs) != 1:
            raise ValueError(f"figure kind {self.kind!r} takes exactly one input CSV")


def load_table(path: Path, kind: str) -> dict[str, list]:
    """Parse a CSV against the frozen schema; errors name the offending columns."""
    expected = FIGURE_SCHEMAS[kind]
    text = Path(path).read_text(encoding="utf-8")
    lines = [line for line in text.split("\n") if line]
    if not lines:
        raise EmptyDataError(f"{path}: empty file")
    header = lines[0].split(",")
    missing = [c for c in expected if c not in header]
    extra = [c for c in header if c not in expected]
    if missing or extra:
        parts = []
        if missing:
            parts.append(f"missing column(s) {missing}")
        if extra:
            parts.append(f"unexpected column(s) {extra}")
        raise SchemaMismatchError(f"{path}: {'; '.join(parts)} for figure kind {kind!r}")
    if len(lines) == 1:
        raise EmptyDataError(f"{path}: no data rows")
    table: dict[str, list] = {c: [] for c in expected}
    for line in lines[1:]:
        cells = line.split(",")
        if len(cells) != len(header):
            raise SchemaMismatchError(f"{path}: row has {len(cells)} cells, header has {len(header)}")
        for column, cell in zip(header, cells):
            table[column].append(cell if column in _TEXT_COLUMNS else float(cell))
    return table


def _unique_in_order(values):
    seen = []
    for v in values:
        if v not in seen:
            seen.append(v)
    return seen


def _weights_figure(table: dict[str, list], ax) -> None:
    for p in _unique_in_order(table["p"]):
        ks = [k for k, q in zip(table["k"], table["p"]) if q == p]
        ws = [w for w, q in zip(table["w_sgrpo"], table["p"]) if q == p]
        ax.plot(ks, ws, marker="o", markersize=3, label=f"S-GRPO p={p:g}")
    first_p = table["p"][0]
    ks = [k for k, q in zip(table["k"], table["p"]) if q == first_p]
    dr = [w for w, q in zip(table["w_drgrpo_scaled09"], table["p"]) if q == first_p]
    ax.plot(ks, dr, linestyle="--", color="black", label="Dr. GRPO (scaled to 0.9)")
    ax.set_xlabel("successful responses k")
    ax.set_ylabel("group weight")
    ax.legend(fontsize=8)


def _deviation_figure(table: dict[str, list], ax) -> None:
    ax.plot(table["k"], table["total"], marker="o", markersize=3, linewidth=2, label="total")
    for column in ("mismatch_term", "true_pos_term", "true_neg_term"):
        ax.plot(table["k"], table[column], linestyle="--", linewidth=1, label=column)
    ax.set_xlabel("observed successes k")
    ax.set_ylabel("advantage deviation from one false positive")
    ax.legend(fontsize=8)


def _robustness_figure(table: dict[str, list], ax) -> None:
    keys = _unique_in_order(list(zip(table["method"], table["injected_p"], table["assumption_p"])))
    for method, injected, assumption in keys:
        rows = [
            i
            for i in range(len(table["step"]))
            if (table["method"][i], table["injected_p"][i], table["assumption_p"][i])
            == (method, injected, assumption)
        ]
        steps = [table["step"][i] for i in rows]
        mean = [table["accuracy_mean"][i] for i in rows]
        std = [table["accuracy_std"][i] for i in rows]
        label = f"{method} inj={injected:g}"
        if method == "sgrpo":
            label += f" p={assumption:g}"
        (line,) = ax.plot(steps, mean, label=label)
        ax.fill_between(
            steps,
            [m - s for m, s in zip(mean, std)],
            [m + s for m, s in zip(mean, std)],
            alpha=0.2,
            color=line.get_color(),
        )
    ax.set_xlabel("training step")
    ax.set_ylabel("greedy accuracy (mean ± 1 std over seeds)")
    ax.set_ylim(0.0, 1.05)
    ax.legend(fontsize=8)


def _entropy_figure(tables: dict[str, dict[str, list]], ax) -> None:
    for name, table in tables.items():
        ax.plot(table["step"], table["entropy"], label=name)
    ax.set_xlabel("training step")
    ax.set_ylabel("policy entropy (nats)")
    ax.legend(fontsize=8)


def build_figure(spec: PlotSpec) -> Figure:
    """Validate inputs and build the figure; raising before any file is written."""
    fig, ax = plt.subplots(figsize=(6.4, 4.0), dpi=100)
    try:
        if spec.kind == "entropy":
            tables = {Path(p).stem: load_table(p, "entropy") for p in spec.inputs}
            _entropy_figure(tables, ax)
        elif spec.kind == "weights":
            _weights_figure(load_table(spec.inputs[0], "weights"), ax)
        elif spec.kind == "deviation":
            _deviation_figure(load_table(spec.inputs[0], "deviation"), ax)
        else:
            _robustness_figure(load_table(spec.inputs[0], "robustness"), ax)
    except Exception:
        plt.close(fig)
        raise
    if spec.title:
        ax.set_title(spec.title)
    fig.tight_layout()
    return fig


def render(spec: PlotSpec) -> Path:
    """Build and write the SVG; output is byte-identical for identical inputs."""
    fig = build_figure(spec)
    try:
        spec.output.parent.mkdir(parents=True, exist_ok=True)
        fig.savefig(spec.output, format="svg", metadata={"Date": None})
    finally:
        plt.close(fig)
    return spec.output
