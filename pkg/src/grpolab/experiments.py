"""Figure-level experiment drivers with reproducible CSV output.

Four experiment kinds: the false-positive deviation sweep, the weight-curve
sweep, the noise-robustness training comparison, and the noise-assumption
sweep. Every run directory gets a manifest (key-value text) echoing the full
configuration, the seed list, and a checksum per output file; re-running a
manifest reproduces every CSV byte for byte.

Frozen CSV schemas (UTF-8, LF line endings, '.' decimal separator):
  traces:      step,accuracy,entropy,mean_weight,gated_fraction,mean_observed_reward
  deviation:   k,a_pos,a_neg,mismatch_term,true_pos_term,true_neg_term,total
  weights:     p,k,w_sgrpo,w_drgrpo_unscaled,w_drgrpo_scaled09
  aggregate:   method,injected_p,assumption_p,step,accuracy_mean,accuracy_std
  smoothness:  method,assumption_p,seed,entropy_diff_std,final_accuracy
"""

from __future__ import annotations

import dataclasses
import enum
import hashlib
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np

from .advantage import (
    DEFAULT_EPSILON,
    Method,
    NoiseSpec,
    dr_grpo_weight,
    mismatch_deviation,
    optimal_weight,
)
from .noise import RngSeed
from .simulate import TRACE_COLUMNS, SurrogateConfig, TrainingTrace, make_toy_bank, train

DEVIATION_COLUMNS = ("k", "a_pos", "a_neg", "mismatch_term", "true_pos_term", "true_neg_term", "total")
WEIGHT_COLUMNS = ("p", "k", "w_sgrpo", "w_drgrpo_unscaled", "w_drgrpo_scaled09")
AGGREGATE_COLUMNS = ("method", "injected_p", "assumption_p", "step", "accuracy_mean", "accuracy_std")
SMOOTHNESS_COLUMNS = ("method", "assumption_p", "seed", "entropy_diff_std", "final_accuracy")

DR_GRPO_PLOT_SCALE = 0.9


class ExperimentError(RuntimeError):
    """An experiment run aborted; details are recorded in the manifest."""


class ExperimentKind(enum.Enum):
    DEVIATION_SWEEP = "deviation"
    WEIGHT_SWEEP = "weights"
    NOISE_ROBUSTNESS = "robustness"
    ASSUMPTION_SWEEP = "assumptions"


@dataclass(frozen=True)
class ExperimentConfig:
    """Parameters of one experiment invocation; echoed verbatim into the manifest."""

    kind: ExperimentKind
    out_dir: Path
    group_n: int = 16
    p_list: tuple[float, ...] = (0.0, 0.10, 0.15, 0.20)
    injected_list: tuple[float, ...] = (0.10, 0.20)
    assumption_list: tuple[float, ...] = (0.0, 0.05, 0.10, 0.15, 0.20)
    assumption_injected_p: float = 0.20
    steps: int = 300
    seeds: tuple[int, ...] = tuple(range(1, 11))
    num_tasks: int = 64
    num_responses: int = 8
    group_size: int = 8
    learning_rate: float = 32.0
    tasks_per_step: int = 4
    inner_epochs: int = 1
    clip_epsilon: float = 0.2
    epsilon: float = DEFAULT_EPSILON
    init_scale: float = 0.0
    bank_seed: int = 0xBA5E
    workers: int = 4

    def __post_init__(self) -> None:
        object.__setattr__(self, "out_dir", Path(self.out_dir))
        object.__setattr__(self, "p_list", tuple(self.p_list))
        object.__setattr__(self, "injected_list", tuple(self.injected_list))
        object.__setattr__(self, "assumption_list", tuple(self.assumption_list))
        object.__setattr__(self, "seeds", tuple(int(s) for s in self.seeds))
        problems = self.violations()
        if problems:
            raise ValueError("invalid experiment config: " + "; ".join(problems))

    def violations(self) -> list[str]:
        """Every violated constraint, so callers can report them all at once."""
        problems = []
        if self.group_n < 4:
            problems.append(f"group_n must be >= 4, got {self.group_n}")
        for name in ("p_list", "injected_list", "assumption_list"):
            values = getattr(self, name)
            if not values:
                problems.append(f"{name} must be non-empty")
            for p in values:
                if not 0.0 <= p < 0.5:
                    problems.append(f"{name} entries must lie in [0, 0.5), got {p}")
        if not 0.0 <= self.assumption_injected_p < 0.5:
            problems.append(f"assumption_injected_p must lie in [0, 0.5), got {self.assumption_injected_p}")
        if self.steps < 1:
            problems.append(f"steps must be >= 1, got {self.steps}")
        if not self.seeds:
            problems.append("seeds must be non-empty")
        if len(set(self.seeds)) != len(self.seeds):
            problems.append("seeds must be distinct")
        if any(s < 0 for s in self.seeds):
            problems.append("seeds must be non-negative")
        if self.workers < 1:
            problems.append(f"workers must be >= 1, got {self.workers}")
        return problems

    def surrogate_config(self, method: Method, injected_p: float, assumption_p: float) -> SurrogateConfig:
        return SurrogateConfig(
            method=method,
            clip_epsilon=self.clip_epsilon,
            learning_rate=self.learning_rate,
            inner_epochs=self.inner_epochs,
            noise_assumption_p=assumption_p,
            injected_noise_p=injected_p,
            epsilon=self.epsilon,
            group_size=self.group_size,
            init_scale=self.init_scale,
            tasks_per_step=self.tasks_per_step,
        )


# ---------------------------------------------------------------------------
# CSV formatting


def format_cell(value: object) -> str:
    """Canonical cell text: ints bare, floats via shortest round-trip repr."""
    if isinstance(value, bool):
        raise TypeError("booleans have no CSV representation here")
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def write_csv(path: Path, columns: Sequence[str], rows: Iterable[Sequence[object]]) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(columns) + "\n")
        for row in rows:
            if len(row) != len(columns):
                raise ValueError(f"row width {len(row)} does not match {len(columns)} columns")
            fh.write(",".join(format_cell(v) for v in row) + "\n")


def write_trace_csv(path: Path, trace: TrainingTrace) -> None:
    write_csv(path, TRACE_COLUMNS, trace.rows())


def read_csv(path: Path) -> tuple[list[str], list[list[str]]]:
    text = Path(path).read_text(encoding="utf-8")
    lines = [line for line in text.split("\n") if line]
    if not lines:
        raise ValueError(f"{path}: empty CSV")
    header = lines[0].split(",")
    return header, [line.split(",") for line in lines[1:]]


# ---------------------------------------------------------------------------
# Manifests


@dataclass
class RunManifest:
    """Config echo plus per-output checksums; the unit of reproducibility."""

    experiment: str
    config_items: list[tuple[str, str]]
    seeds: tuple[int, ...]
    outputs: dict[str, str] = field(default_factory=dict)
    failures: dict[str, str] = field(default_factory=dict)
    wall_clock_seconds: float = 0.0

    @property
    def inputs_hash(self) -> str:
        """Content hash over the canonical config echo, blob-style."""
        body = "\n".join(f"{key} = {value}" for key, value in self.config_items)
        blob = f"config {len(body)}\0{body}".encode("utf-8")
        return "sha256:" + hashlib.sha256(blob).hexdigest()


MANIFEST_NAME = "manifest.txt"


def _config_items(config: ExperimentConfig) -> list[tuple[str, str]]:
    items = []
    for f in dataclasses.fields(config):
        value = getattr(config, f.name)
        if f.name == "out_dir":
            continue  # location is not an input to the results
        if isinstance(value, ExperimentKind):
            text = value.value
        elif isinstance(value, tuple):
            text = ",".join(format_cell(v) for v in value)
        else:
            text = format_cell(value)
        items.append((f.name, text))
    return items


def file_checksum(path: Path) -> str:
    return "sha256:" + hashlib.sha256(Path(path).read_bytes()).hexdigest()


def write_manifest(manifest: RunManifest, out_dir: Path) -> Path:
    """Serialize in documented order: version, experiment, hash, wall clock,
    config.* lines, seed echo, failed.* lines, output.* checksum lines."""
    lines = [
        "manifest_version = 1",
        f"experiment = {manifest.experiment}",
        f"inputs_hash = {manifest.inputs_hash}",
        f"wall_clock_seconds = {manifest.wall_clock_seconds!r}",
    ]
    lines.extend(f"config.{key} = {value}" for key, value in manifest.config_items)
    lines.append("seeds = " + ",".join(str(s) for s in manifest.seeds))
    lines.extend(f"failed.{name} = {msg}" for name, msg in sorted(manifest.failures.items()))
    lines.extend(f"output.{name} = {digest}" for name, digest in sorted(manifest.outputs.items()))
    path = Path(out_dir) / MANIFEST_NAME
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def read_manifest(path: Path) -> RunManifest:
    manifest = RunManifest(experiment="", config_items=[], seeds=())
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if not line.strip():
            continue
        key, _, value = line.partition(" = ")
        if key == "experiment":
            manifest.experiment = value
        elif key == "wall_clock_seconds":
            manifest.wall_clock_seconds = float(value)
        elif key == "seeds":
            manifest.seeds = tuple(int(s) for s in value.split(",") if s)
        elif key.startswith("config."):
            manifest.config_items.append((key[len("config."):], value))
        elif key.startswith("output."):
            manifest.outputs[key[len("output."):]] = value
        elif key.startswith("failed."):
            manifest.failures[key[len("failed."):]] = value
    if not manifest.experiment:
        raise ValueError(f"{path}: not a run manifest")
    return manifest


def config_from_items(items: Sequence[tuple[str, str]], out_dir: Path) -> ExperimentConfig:
    """Rebuild an ExperimentConfig from manifest config.* lines."""
    types = {f.name: f.type for f in dataclasses.fields(ExperimentConfig)}
    kwargs: dict[str, object] = {"out_dir": Path(out_dir)}
    for key, text in items:
        if key not in types:
            raise ValueError(f"unknown config key {key!r} in manifest")
        if key == "kind":
            kwargs[key] = ExperimentKind(text)
        elif key in ("p_list", "injected_list", "assumption_list"):
            kwargs[key] = tuple(float(v) for v in text.split(",") if v)
        elif key == "seeds":
            kwargs[key] = tuple(int(v) for v in text.split(",") if v)
        elif key in ("group_n", "steps", "num_tasks", "num_responses", "group_size",
                     "tasks_per_step", "inner_epochs", "bank_seed", "workers"):
            kwargs[key] = int(text)
        elif key == "out_dir":
            continue
        else:
            kwargs[key] = float(text)
    return ExperimentConfig(**kwargs)


# ---------------------------------------------------------------------------
# Sweep rows (pure)


def deviation_rows(n: int) -> list[tuple[object, ...]]:
    """One row per k in [1, n-1] of the single-false-positive deviation report."""
    if n < 4:
        raise ValueError(f"n must be >= 4 for a meaningful sweep, got {n}")
    rows = []
    for k in range(1, n):
        rep = mismatch_deviation(n, k)
        rows.append((k, rep.a_pos, rep.a_neg, rep.mismatch_term, rep.true_pos_term, rep.true_neg_term, rep.total))
    return rows


def weight_rows(n: int, p_list: Sequence[float], epsilon: float = DEFAULT_EPSILON) -> list[tuple[object, ...]]:
    """Full (p, k) grid of S-GRPO and Dr. GRPO weights, k in [0, n]."""
    rows = []
    for p in p_list:
        noise = NoiseSpec(p=p, epsilon=epsilon)
        for k in range(n + 1):
            rows.append(
                (
                    p,
                    k,
                    optimal_weight(n, k, noise),
                    dr_grpo_weight(n, k, epsilon),
                    dr_grpo_weight(n, k, epsilon, plot_scale=DR_GRPO_PLOT_SCALE),
                )
            )
    return rows


# ---------------------------------------------------------------------------
# Experiment drivers


def _p_token(p: float) -> str:
    return f"{p:.2f}"


def trace_filename(method: Method, injected_p: float, assumption_p: float, seed: int) -> str:
    return f"trace_{method.value}_inj{_p_token(injected_p)}_p{_p_token(assumption_p)}_seed{seed}.csv"


def _run_pool(
    jobs: Sequence[tuple[str, Callable[[], object]]], workers: int
) -> tuple[dict[str, object], dict[str, str]]:
    """Execute independent jobs in a thread pool; collect results and failures by name."""
    results: dict[str, object] = {}
    failures: dict[str, str] = {}
    with ThreadPoolExecutor(max_workers=workers) as pool:
        futures = {name: pool.submit(fn) for name, fn in jobs}
        for name, future in futures.items():
            try:
                results[name] = future.result()
            except Exception as exc:  # noqa: BLE001 - recorded in the manifest
                failures[name] = f"{type(exc).__name__}: {exc}"
    return results, failures


def _finish(
    config: ExperimentConfig,
    started: float,
    written: Sequence[Path],
    failures: dict[str, str],
) -> RunManifest:
    manifest = RunManifest(
        experiment=config.kind.value,
        config_items=_config_items(config),
        seeds=config.seeds,
        failures=dict(failures),
        wall_clock_seconds=time.time() - started,
    )
    for path in written:
        manifest.outputs[Path(path).name] = file_checksum(path)
    write_manifest(manifest, config.out_dir)
    if failures:
        details = "; ".join(f"{name}: {msg}" for name, msg in sorted(failures.items()))
        raise ExperimentError(f"{len(failures)} run(s) aborted: {details}")
    return manifest


def run_deviation_sweep(config: ExperimentConfig) -> RunManifest:
    started = time.time()
    config.out_dir.mkdir(parents=True, exist_ok=True)
    path = config.out_dir / f"deviation_n{config.group_n}.csv"
    write_csv(path, DEVIATION_COLUMNS, deviation_rows(config.group_n))
    return _finish(config, started, [path], {})


def run_weight_sweep(config: ExperimentConfig) -> RunManifest:
    started = time.time()
    config.out_dir.mkdir(parents=True, exist_ok=True)
    path = config.out_dir / f"weights_n{config.group_n}.csv"
    write_csv(path, WEIGHT_COLUMNS, weight_rows(config.group_n, config.p_list, config.epsilon))
    return _finish(config, started, [path], {})


def _train_one(
    config: ExperimentConfig, method: Method, injected_p: float, assumption_p: float, seed: int
) -> Path:
    bank = make_toy_bank(
        num_tasks=config.num_tasks,
        num_responses=config.num_responses,
        seed=RngSeed(config.bank_seed),
    )
    trace = train(
        bank,
        config.surrogate_config(method, injected_p, assumption_p),
        config.steps,
        RngSeed(seed),
    )
    path = config.out_dir / trace_filename(method, injected_p, assumption_p, seed)
    write_trace_csv(path, trace)
    return path


def _accuracy_aggregate(
    config: ExperimentConfig, runs: Sequence[tuple[Method, float, float]]
) -> list[tuple[object, ...]]:
    """Mean and sample std of accuracy per step across seeds, from the trace CSVs."""
    rows: list[tuple[object, ...]] = []
    for method, injected_p, assumption_p in runs:
        per_seed = []
        for seed in config.seeds:
            path = config.out_dir / trace_filename(method, injected_p, assumption_p, seed)
            header, body = read_csv(path)
            col = header.index("accuracy")
            per_seed.append([float(r[col]) for r in body])
        matrix = np.asarray(per_seed)
        for step in range(matrix.shape[1]):
            rows.append(
                (
                    method.value,
                    injected_p,
                    assumption_p,
                    step,
                    float(matrix[:, step].mean()),
                    float(matrix[:, step].std(ddof=1)) if matrix.shape[0] > 1 else 0.0,
                )
            )
    return rows


def run_noise_robustness(config: ExperimentConfig) -> RunManifest:
    """GRPO vs S-GRPO (assumption matched to the injected level) per injected p and seed."""
    started = time.time()
    config.out_dir.mkdir(parents=True, exist_ok=True)
    runs = []
    for injected in config.injected_list:
        runs.append((Method.GRPO, injected, 0.0))
        runs.append((Method.S_GRPO, injected, injected))
    jobs = [
        (
            trace_filename(method, injected, assumption, seed),
            lambda m=method, i=injected, a=assumption, s=seed: _train_one(config, m, i, a, s),
        )
        for method, injected, assumption in runs
        for seed in config.seeds
    ]
    results, failures = _run_pool(jobs, config.workers)
    written = [Path(p) for _, p in sorted(results.items())]
    if not failures:
        agg = config.out_dir / "robustness_aggregate.csv"
        write_csv(agg, AGGREGATE_COLUMNS, _accuracy_aggregate(config, runs))
        written.append(agg)
    return _finish(config, started, written, failures)


def run_assumption_sweep(config: ExperimentConfig) -> RunManifest:
    """S-GRPO across assumption levels plus a GRPO baseline, at fixed injected noise."""
    started = time.time()
    config.out_dir.mkdir(parents=True, exist_ok=True)
    injected = config.assumption_injected_p
    runs = [(Method.GRPO, injected, 0.0)]
    runs.extend((Method.S_GRPO, injected, p) for p in config.assumption_list)
    jobs = [
        (
            trace_filename(method, injected, assumption, seed),
            lambda m=method, i=injected, a=assumption, s=seed: _train_one(config, m, i, a, s),
        )
        for method, injected, assumption in runs
        for seed in config.seeds
    ]
    results, failures = _run_pool(jobs, config.workers)
    written = [Path(p) for _, p in sorted(results.items())]
    if not failures:
        rows: list[tuple[object, ...]] = []
        for method, injected_p, assumption_p in runs:
            for seed in config.seeds:
                path = config.out_dir / trace_filename(method, injected_p, assumption_p, seed)
                header, body = read_csv(path)
                entropy = [float(r[header.index("entropy")]) for r in body]
                accuracy = [float(r[header.index("accuracy")]) for r in body]
                rows.append(
                    (
                        method.value,
                        assumption_p,
                        seed,
                        float(np.std(np.diff(entropy))),
                        accuracy[-1],
                    )
                )
        summary = config.out_dir / "assumption_smoothness.csv"
        write_csv(summary, SMOOTHNESS_COLUMNS, rows)
        written.append(summary)
    return _finish(config, started, written, failures)


_RUNNERS = {
    ExperimentKind.DEVIATION_SWEEP: run_deviation_sweep,
    ExperimentKind.WEIGHT_SWEEP: run_weight_sweep,
    ExperimentKind.NOISE_ROBUSTNESS: run_noise_robustness,
    ExperimentKind.ASSUMPTION_SWEEP: run_assumption_sweep,
}


def run_experiment(config: ExperimentConfig) -> RunManifest:
    return _RUNNERS[config.kind](config)


@dataclass(frozen=True)
class RerunReport:
    identical: bool
    mismatched: tuple[str, ...]
    missing: tuple[str, ...]


def rerun_manifest(manifest_path: Path, out_dir: Path) -> RerunReport:
    """Re-execute a manifest's configuration into out_dir and compare checksums."""
    manifest = read_manifest(manifest_path)
    config = config_from_items(manifest.config_items, out_dir)
    rerun = run_experiment(config)
    mismatched = tuple(
        sorted(
            name
            for name, digest in manifest.outputs.items()
            if name in rerun.outputs and rerun.outputs[name] != digest
        )
    )
    missing = tuple(sorted(set(manifest.outputs) - set(rerun.outputs)))
    return RerunReport(identical=not mismatched and not missing, mismatched=mismatched, missing=missing)
