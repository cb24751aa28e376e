"""Command line front end: declare a grid of runs, execute it, and emit
machine-readable results.

Outputs land in the chosen directory as submissions.csv (one row per
submission with its windowed average), success_curve.csv (success ratio
against submission budget per cell), and summary.json (per-cell first
success times, medians, ratios, area ratios, and the exact seeds).
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .harness import (TrialConfig, relative_auc, run_trials, success_curve,
                      success_ratio)
from .mechanisms import MechanismConfig, MechanismKind
from .model import PARAM_DIM

_DEFAULT_CLIP = {"laplace": 0.01, "prs": 1.0, "none": 0.7}
_DEFAULT_BUFFER = {"laplace": 1, "prs": 100, "none": 1}


@dataclass(frozen=True)
class CellSpec:
    """One (mechanism, epsilon, buffer) grid point."""

    index: int
    mechanism: str
    epsilon: float  # inf for the non-private baseline
    buffer: int
    trial_config: TrialConfig


@dataclass(frozen=True)
class ExperimentSpec:
    """Whole run grid plus the shared settings, straight from the flags."""

    mechanisms: tuple[str, ...]
    epsilons: tuple[float, ...]
    buffers: tuple[int, ...] | None
    trials: int
    n_max: int
    workers: int
    master_seed: int
    clip: float | None
    reduced_dim: int | None
    rounds: int
    out: Path
    early_stop: bool

    def cells(self) -> list[CellSpec]:
        out = []
        for mech in self.mechanisms:
            eps_grid = (math.inf,) if mech == "none" else self.epsilons
            buf_grid = self.buffers or (_DEFAULT_BUFFER[mech],)
            for eps in eps_grid:
                for buf in buf_grid:
                    mechanism = MechanismConfig(
                        epsilon=eps,
                        clip_size=self.clip if self.clip is not None else _DEFAULT_CLIP[mech],
                        dim=PARAM_DIM,
                        kind=MechanismKind(mech),
                        reduced_dim=self.reduced_dim,
                        rounds=self.rounds,
                    )
                    cfg = TrialConfig(
                        mechanism=mechanism, max_buf=buf, n_max=self.n_max,
                        workers=self.workers, trials=self.trials,
                        master_seed=self.master_seed, early_stop=self.early_stop)
                    out.append(CellSpec(index=len(out), mechanism=mech,
                                        epsilon=eps, buffer=buf,
                                        trial_config=cfg))
        return out


def parse_args(argv=None) -> ExperimentSpec:
    parser = argparse.ArgumentParser(
        prog="pgc",
        description="Run private-gradient training cells and emit score data.")
    parser.add_argument("--mechanism", nargs="+", default=["none"],
                        choices=["laplace", "prs", "none"],
                        help="randomizer kinds to run (grid axis)")
    parser.add_argument("--epsilon", nargs="+", type=float, default=[1.0],
                        help="privacy budgets (grid axis, ignored for none)")
    parser.add_argument("--buffer", nargs="+", type=int, default=None,
                        help="aggregation buffer sizes (default per mechanism)")
    parser.add_argument("--trials", type=int, default=20,
                        help="trials per cell")
    parser.add_argument("--max-submissions", type=int, default=90_000,
                        help="submission cap per trial")
    parser.add_argument("--workers", type=int, default=9,
                        help="concurrent agents per trial")
    parser.add_argument("--seed", type=int, default=1,
                        help="master seed; every cell and trial derives from it")
    parser.add_argument("--clip", type=float, default=None,
                        help="clip size (default 0.01 laplace, 1.0 prs, 0.7 none)")
    parser.add_argument("--reduced-dim", type=int, default=None,
                        help="projection width for prs (default from budget)")
    parser.add_argument("--rounds", type=int, default=1,
                        help="submissions per agent; each spends epsilon/rounds")
    parser.add_argument("--out", type=Path, default=Path("results"),
                        help="output directory")
    parser.add_argument("--no-early-stop", action="store_true",
                        help="keep running to the cap after a success")
    args = parser.parse_args(argv)

    if any(e <= 0 for e in args.epsilon):
        parser.error("--epsilon values must be positive")
    if args.buffer is not None and any(b < 1 for b in args.buffer):
        parser.error("--buffer values must be at least 1")
    if args.trials < 1:
        parser.error("--trials must be at least 1")
    if args.max_submissions < 1:
        parser.error("--max-submissions must be at least 1")
    if args.workers < 1:
        parser.error("--workers must be at least 1")
    if args.rounds < 1:
        parser.error("--rounds must be at least 1")
    if args.clip is not None and args.clip <= 0:
        parser.error("--clip must be positive")
    if args.reduced_dim is not None and not 1 <= args.reduced_dim <= PARAM_DIM:
        parser.error(f"--reduced-dim must lie in [1, {PARAM_DIM}]")

    return ExperimentSpec(
        mechanisms=tuple(dict.fromkeys(args.mechanism)),  # dedupe, keep order
        epsilons=tuple(dict.fromkeys(args.epsilon)),
        buffers=tuple(args.buffer) if args.buffer is not None else None,
        trials=args.trials, n_max=args.max_submissions, workers=args.workers,
        master_seed=args.seed, clip=args.clip, reduced_dim=args.reduced_dim,
        rounds=args.rounds, out=args.out, early_stop=not args.no_early_stop)


def run_experiment(spec: ExperimentSpec, log=None):
    """Run every cell; returns [(cell, [TrialMetrics, ...]), ...]."""
    results = []
    for cell in spec.cells():
        if log is not None:
            log(f"cell {cell.index}: mechanism={cell.mechanism} "
                f"epsilon={_fmt(cell.epsilon)} buffer={cell.buffer}")

        def progress(k, metrics, cell=cell):
            if log is not None:
                log(f"  trial {k + 1}/{cell.trial_config.trials}: "
                    f"fst={_fmt(metrics.fst)} "
                    f"submissions={len(metrics.scores)}")

        results.append((cell, run_trials(cell.trial_config, cell.index,
                                         progress=progress)))
    return results


def _fmt(x) -> str:
    """Shortest decimal that round-trips; inf stays the word inf."""
    if isinstance(x, float):
        return repr(x)
    return str(x)


def _jsonable(x):
    if isinstance(x, float) and math.isinf(x):
        return "inf"
    return x


def emit_results(results, spec: ExperimentSpec) -> list[Path]:
    """Write the three output files; on failure remove what was started."""
    out_dir = spec.out
    created: list[Path] = []
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        sub_path = out_dir / "submissions.csv"
        created.append(sub_path)
        with open(sub_path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["mechanism", "epsilon", "buffer", "trial", "n",
                        "score", "mu"])
            for cell, trials in results:
                for k, metrics in enumerate(trials):
                    for i, score in enumerate(metrics.scores):
                        mu = (_fmt(float(metrics.mu[i]))
                              if i < len(metrics.mu) else "")
                        w.writerow([cell.mechanism, _fmt(cell.epsilon),
                                    cell.buffer, k, i + 1, int(score), mu])

        curve_path = out_dir / "success_curve.csv"
        created.append(curve_path)
        grid = _curve_grid(spec.n_max)
        with open(curve_path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["mechanism", "epsilon", "buffer", "n", "success_ratio"])
            for cell, trials in results:
                curve = success_curve([m.fst for m in trials], grid)
                for n, ratio in zip(grid, curve):
                    w.writerow([cell.mechanism, _fmt(cell.epsilon),
                                cell.buffer, int(n), _fmt(float(ratio))])

        summary_path = out_dir / "summary.json"
        created.append(summary_path)
        with open(summary_path, "w") as fh:
            json.dump(_summarize(results, spec), fh, indent=2, sort_keys=True)
            fh.write("\n")
        return created
    except OSError:
        for p in created:
            p.unlink(missing_ok=True)
        raise


def _curve_grid(n_max: int) -> np.ndarray:
    stride = max(1, n_max // 2000)
    return np.unique(np.concatenate(
        [[1], np.arange(stride, n_max + 1, stride), [n_max]]))


def _summarize(results, spec: ExperimentSpec) -> dict:
    full_grid = np.arange(1, spec.n_max + 1)
    baseline_area = None
    for cell, trials in results:
        if cell.mechanism == "none":
            baseline_area = success_curve([m.fst for m in trials], full_grid)
            break

    cells = []
    for cell, trials in results:
        fsts = [m.fst for m in trials]
        rel_auc = None
        if baseline_area is not None and np.sum(baseline_area) > 0:
            rel_auc = relative_auc(success_curve(fsts, full_grid), baseline_area)
        cells.append({
            "mechanism": cell.mechanism,
            "epsilon": _jsonable(cell.epsilon),
            "buffer": cell.buffer,
            "clip_size": cell.trial_config.mechanism.clip_size,
            "reduced_dim": cell.trial_config.mechanism.reduced_dim,
            "rounds": cell.trial_config.mechanism.rounds,
            "trials": len(trials),
            "fst": [_jsonable(f) for f in fsts],
            "median_fst": _jsonable(float(np.median(fsts))),
            "success_ratio": success_ratio(fsts, spec.n_max),
            "relative_auc": rel_auc,
            "early_stopped": [m.early_stopped for m in trials],
            "seeds": [[spec.master_seed, cell.index, k]
                      for k in range(len(trials))],
        })
    return {
        "version": __version__,
        "numpy_version": np.__version__,
        "master_seed": spec.master_seed,
        "workers": spec.workers,
        "n_max": spec.n_max,
        "target": results[0][0].trial_config.target if results else None,
        "window": results[0][0].trial_config.window if results else None,
        "early_stop": spec.early_stop,
        "cells": cells,
    }


def main(argv=None) -> int:
    spec = parse_args(argv)
    results = run_experiment(spec, log=print)
    try:
        paths = emit_results(results, spec)
    except OSError as exc:
        print(f"error: could not write results: {exc}", file=sys.stderr)
        return 1
    for p in paths:
        print(f"wrote {p}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
