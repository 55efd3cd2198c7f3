"""Command-line entry point: one subcommand per experiment plus oracle checks.

Configuration is layered: built-in defaults, then an optional flat key=value
config file (typed parsing, unknown keys rejected), then command-line flags.
The default output directory comes from --out or the GRPOLAB_OUT environment
variable. Exit status is 0 only if every requested run completed and all
output checksums were written to the manifest.
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import dataclass
from pathlib import Path

from .experiments import (
    ExperimentConfig,
    ExperimentError,
    ExperimentKind,
    config_from_items,
    run_experiment,
)
from .oracles import covariance_grid_error, mc_weight_scan

_ENV_OUT = "GRPOLAB_OUT"

_FILE_KEYS = {
    "group_n", "p_list", "injected_list", "assumption_list", "assumption_injected_p",
    "steps", "seeds", "num_tasks", "num_responses", "group_size", "learning_rate",
    "tasks_per_step", "inner_epochs", "clip_epsilon", "epsilon", "init_scale",
    "bank_seed", "workers",
}


@dataclass(frozen=True)
class CliInvocation:
    subcommand: str
    config: ExperimentConfig | None
    oracle_samples: int = 1_000_000
    verbosity: int = 0


def parse_seed_spec(spec: str) -> tuple[int, ...]:
    """Seed lists as '1..10' (inclusive range) or '1,2,3'."""
    spec = spec.strip()
    if ".." in spec:
        lo_text, _, hi_text = spec.partition("..")
        lo, hi = int(lo_text), int(hi_text)
        return tuple(range(lo, hi + 1))
    return tuple(int(s) for s in spec.split(",") if s.strip())


def parse_float_list(spec: str) -> tuple[float, ...]:
    return tuple(float(s) for s in spec.split(",") if s.strip())


def load_config_file(path: Path) -> dict[str, str]:
    """Flat 'key = value' lines; '#' comments; unknown keys rejected."""
    if not path.exists():
        raise ValueError(f"config file not found: {path}")
    entries: dict[str, str] = {}
    for lineno, raw in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ValueError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
        key = key.strip()
        if key not in _FILE_KEYS:
            raise ValueError(f"{path}:{lineno}: unknown config key {key!r}")
        entries[key] = value.strip()
    return entries


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="grpolab",
        description="Group-relative policy optimization under reward noise, at desk scale.",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", type=Path, default=None, help="flat key=value config file")
        p.add_argument("--out", type=Path, default=None,
                       help=f"output directory (default: ${_ENV_OUT} or ./runs/<subcommand>)")
        p.add_argument("--seeds", type=str, default=None, help="seed list, '1..10' or '1,2,3'")
        p.add_argument("-v", "--verbose", action="count", default=0)

    p_dev = sub.add_parser("deviation", help="single-false-positive deviation sweep over k")
    p_dev.add_argument("--n", type=int, default=None, help="group size N")
    common(p_dev)

    p_w = sub.add_parser("weights", help="S-GRPO and Dr. GRPO weight curves over (p, k)")
    p_w.add_argument("--n", type=int, default=None, help="group size N")
    p_w.add_argument("--p", type=str, default=None, help="comma-separated assumption levels")
    common(p_w)

    p_rob = sub.add_parser("robustness", help="GRPO vs S-GRPO training under injected noise")
    p_rob.add_argument("--injected", type=str, default=None, help="comma-separated injected noise levels")
    p_rob.add_argument("--steps", type=int, default=None)
    p_rob.add_argument("--workers", type=int, default=None)
    common(p_rob)

    p_ass = sub.add_parser("assumptions", help="S-GRPO noise-assumption sweep at fixed injected noise")
    p_ass.add_argument("--assume", type=str, default=None, help="comma-separated assumption levels")
    p_ass.add_argument("--injected", type=str, default=None, help="single injected noise level")
    p_ass.add_argument("--steps", type=int, default=None)
    p_ass.add_argument("--workers", type=int, default=None)
    common(p_ass)

    p_or = sub.add_parser("oracle", help="Monte-Carlo optimality scan and covariance enumeration")
    p_or.add_argument("--samples", type=int, default=1_000_000)
    p_or.add_argument("-v", "--verbose", action="count", default=0)

    return parser


_KINDS = {
    "deviation": ExperimentKind.DEVIATION_SWEEP,
    "weights": ExperimentKind.WEIGHT_SWEEP,
    "robustness": ExperimentKind.NOISE_ROBUSTNESS,
    "assumptions": ExperimentKind.ASSUMPTION_SWEEP,
}


def parse_and_validate(argv: list[str] | None = None) -> CliInvocation:
    """Parse argv into a fully validated invocation or exit with every violation."""
    parser = _build_parser()
    args = parser.parse_args(argv)

    if args.subcommand == "oracle":
        if args.samples < 1:
            parser.error("--samples must be >= 1")
        return CliInvocation("oracle", None, oracle_samples=args.samples, verbosity=args.verbose)

    out_dir = args.out
    if out_dir is None:
        env = os.environ.get(_ENV_OUT)
        out_dir = Path(env) / args.subcommand if env else Path("runs") / args.subcommand

    items: list[tuple[str, str]] = []
    try:
        if args.config is not None:
            items.extend(load_config_file(args.config).items())
    except ValueError as exc:
        parser.error(str(exc))

    def put(key: str, text: str) -> None:
        items.append((key, text))

    if args.seeds is not None:
        put("seeds", args.seeds)
    if getattr(args, "n", None) is not None:
        put("group_n", str(args.n))
    if getattr(args, "p", None) is not None:
        put("p_list", args.p)
    if args.subcommand == "robustness" and args.injected is not None:
        put("injected_list", args.injected)
    if args.subcommand == "assumptions":
        if args.assume is not None:
            put("assumption_list", args.assume)
        if args.injected is not None:
            put("assumption_injected_p", args.injected)
    if getattr(args, "steps", None) is not None:
        put("steps", str(args.steps))
    if getattr(args, "workers", None) is not None:
        put("workers", str(args.workers))

    normalized = [("kind", _KINDS[args.subcommand].value)]
    for key, text in items:
        if key == "seeds":
            try:
                text = ",".join(str(s) for s in parse_seed_spec(text))
            except ValueError:
                parser.error(f"invalid seed spec {text!r}; use '1..10' or '1,2,3'")
        normalized.append((key, text))
    try:
        config = config_from_items(normalized, out_dir)
    except ValueError as exc:
        parser.error(str(exc))
    return CliInvocation(args.subcommand, config, verbosity=args.verbose)


_ORACLE_GRID_T = (0.2, 0.5, 0.8)
_ORACLE_GRID_P = (0.05, 0.1, 0.2)


def _run_oracle(invocation: CliInvocation) -> int:
    """Grid-scan the Monte-Carlo optimality check and the covariance enumeration."""
    ok = True
    print("optimal-weight scan (grid step 0.01):")
    for t in _ORACLE_GRID_T:
        for p in _ORACLE_GRID_P:
            res = mc_weight_scan(t, p, samples=invocation.oracle_samples)
            passed = res.gap <= 0.02
            ok = ok and passed
            print(
                f"  t={t} p={p}: scan minimum at w={res.scanned_w:.2f}, "
                f"closed form {res.predicted_w:.4f}, gap {res.gap:.4f} "
                f"[{'pass' if passed else 'FAIL'}]"
            )
    t_grid = [i / 20 for i in range(21)]
    p_grid = [i / 20 for i in range(10)]
    err = covariance_grid_error(t_grid, p_grid)
    passed = err <= 1e-12
    ok = ok and passed
    print(f"covariance enumeration: max |closed form - enumeration| = {err:.3e} [{'pass' if passed else 'FAIL'}]")
    return 0 if ok else 1


def run(invocation: CliInvocation) -> int:
    """Execute the invocation; 0 only when every run completed with checksums."""
    if invocation.subcommand == "oracle":
        return _run_oracle(invocation)
    config = invocation.config
    assert config is not None
    try:
        manifest = run_experiment(config)
    except ExperimentError as exc:
        print(f"error: {exc}", file=sys.stderr)
        print(f"see {config.out_dir / 'manifest.txt'} for details", file=sys.stderr)
        return 1
    if invocation.verbosity:
        for name in sorted(manifest.outputs):
            print(f"wrote {config.out_dir / name}")
    print(f"{invocation.subcommand}: {len(manifest.outputs)} file(s) in {config.out_dir}")
    return 0


def main(argv: list[str] | None = None) -> int:
    return run(parse_and_validate(argv))


if __name__ == "__main__":
    sys.exit(main())
