"""Trial runner and summary metrics.

A trial pits a pool of single-shot agents against one aggregator until
the submission cap is hit or the windowed average score clears the
target.  On top of per-trial score traces sit the summary metrics:
windowed averages, first success time, success ratio over trials, and
the area ratio of success curves.
"""

from __future__ import annotations

import itertools
import math
import queue
import threading
import time
from dataclasses import dataclass, field

import numpy as np

from .agent import AgentTask, Submission, craft_submission, run_episode
from .aggregator import CentralAggregator
from .cartpole import GRAVITY_CHOICES, EnvConfig
from .mechanisms import MechanismConfig
from .model import LossConfig, exploration_rate, init_params


@dataclass(frozen=True)
class TrialConfig:
    """One cell's worth of run settings."""

    mechanism: MechanismConfig
    max_buf: int = 1
    n_max: int = 90_000
    target: float = 195.0
    window: int = 10
    workers: int = 9
    trials: int = 20
    master_seed: int = 1
    eta: float = 0.5
    loss: LossConfig = field(default_factory=LossConfig)
    gravity_choices: tuple[float, ...] = GRAVITY_CHOICES
    max_steps: int = 200
    early_stop: bool = True

    def __post_init__(self) -> None:
        if self.window < 1:
            raise ValueError(f"window must be at least 1, got {self.window}")
        if self.n_max < 1:
            raise ValueError(f"n_max must be at least 1, got {self.n_max}")
        if self.workers < 1:
            raise ValueError(f"workers must be at least 1, got {self.workers}")
        if self.trials < 1:
            raise ValueError(f"trials must be at least 1, got {self.trials}")
        if self.max_buf < 1:
            raise ValueError(f"max_buf must be at least 1, got {self.max_buf}")
        if not self.gravity_choices:
            raise ValueError("gravity_choices must not be empty")


@dataclass
class TrialMetrics:
    """Everything one trial leaves behind."""

    scores: np.ndarray       # int, in arrival order
    mu: np.ndarray           # windowed averages; mu[i] starts at submission i+1
    fst: float               # first success time, inf when never reached
    success: bool
    early_stopped: bool = False


def average_score(scores, n: int, m: int) -> float:
    """Mean of the m scores starting at 1-based submission index n."""
    scores = np.asarray(scores, dtype=float)
    if m < 1 or n < 1 or n + m - 1 > len(scores):
        raise ValueError(
            f"window [{n}, {n + m - 1}] out of range for {len(scores)} scores")
    return float(scores[n - 1:n - 1 + m].sum() / m)


def windowed_scores(scores, m: int) -> np.ndarray:
    """average_score for every admissible start, as one array.

    Scores are small integers, so the sliding sums are exact and the
    result is bit-identical to computing each window separately.
    """
    scores = np.asarray(scores, dtype=float)
    if m < 1:
        raise ValueError(f"window must be at least 1, got {m}")
    if len(scores) < m:
        return np.empty(0)
    csum = np.concatenate([[0.0], np.cumsum(scores)])
    return (csum[m:] - csum[:-m]) / m


def first_success_time(metrics: TrialMetrics, target: float) -> float:
    """Smallest window start whose average clears the target, else inf."""
    hits = np.nonzero(metrics.mu >= target)[0]
    return float(hits[0] + 1) if hits.size else math.inf


def success_ratio(fsts, n: int) -> float:
    """Share of trials whose first success time is at most n."""
    fsts = list(fsts)
    if not fsts:
        raise ValueError("need at least one trial")
    return sum(1 for f in fsts if f <= n) / len(fsts)


def success_curve(fsts, grid) -> np.ndarray:
    """success_ratio evaluated on an increasing grid of budgets."""
    finite = np.sort([f for f in fsts if math.isfinite(f)])
    counts = np.searchsorted(finite, np.asarray(grid), side="right")
    return counts / len(list(fsts))


def relative_auc(curve, baseline) -> float:
    """Area under one success curve relative to another.

    Both curves must sit on the same uniform grid; areas are plain step
    sums, so common grid spacing cancels.
    """
    curve = np.asarray(curve, dtype=float)
    baseline = np.asarray(baseline, dtype=float)
    if curve.shape != baseline.shape:
        raise ValueError(f"grids differ: {curve.shape} vs {baseline.shape}")
    base_area = float(baseline.sum())
    if base_area == 0.0:
        raise ValueError("baseline curve has zero area")
    return float(curve.sum()) / base_area


class _ScoreRecorder:
    """Arrival-ordered score log with online success detection."""

    def __init__(self, cfg: TrialConfig):
        self.cfg = cfg
        self.scores: list[int] = []
        self._window_sum = 0
        self.fst: float = math.inf
        self.success = False
        self.early_stopped = False

    def record(self, score: int) -> bool:
        """Append one score; True when the trial should stop."""
        self.scores.append(score)
        i = len(self.scores)
        m = self.cfg.window
        self._window_sum += score
        if i > m:
            self._window_sum -= self.scores[i - m - 1]
        if i >= m and not self.success and self._window_sum / m >= self.cfg.target:
            self.fst = float(i - m + 1)
            self.success = True
        if self.success and self.cfg.early_stop and i < self.cfg.n_max:
            self.early_stopped = True
            return True
        return i >= self.cfg.n_max

    def finish(self) -> TrialMetrics:
        scores = np.array(self.scores, dtype=int)
        return TrialMetrics(scores=scores,
                            mu=windowed_scores(scores, self.cfg.window),
                            fst=self.fst, success=self.success,
                            early_stopped=self.early_stopped)


def _one_submission(cfg: TrialConfig, agg: CentralAggregator,
                    rng: np.random.Generator, agent_id: int) -> Submission:
    """One full agent activation: snapshot, private env, episode, release."""
    params, n = agg.snapshot()
    gravity = cfg.gravity_choices[int(rng.integers(len(cfg.gravity_choices)))]
    task = AgentTask(
        agent_id=agent_id,
        env=EnvConfig(gravity=gravity, max_steps=cfg.max_steps),
        mechanism=cfg.mechanism,
        alpha=exploration_rate(n),
        params=params,
        loss=cfg.loss,
    )
    hist, score = run_episode(task, rng)
    return craft_submission(task, hist, score, rng)


def _run_serial(cfg: TrialConfig, agg: CentralAggregator,
                recorder: _ScoreRecorder, rng: np.random.Generator) -> None:
    for agent_id in itertools.count():
        sub = _one_submission(cfg, agg, rng, agent_id)
        agg.receive(sub)
        if recorder.record(sub.score):
            return


def _run_threaded(cfg: TrialConfig, agg: CentralAggregator,
                  recorder: _ScoreRecorder, worker_seeds) -> None:
    stop = threading.Event()
    inbox: queue.Queue[Submission] = queue.Queue(maxsize=2 * cfg.workers)
    errors: list[BaseException] = []

    def work(worker_idx: int, seed) -> None:
        rng = np.random.default_rng(seed)
        ids = itertools.count(worker_idx, cfg.workers)  # disjoint id streams
        try:
            while not stop.is_set():
                inbox.put(_one_submission(cfg, agg, rng, next(ids)))
        except BaseException as exc:  # surface worker crashes to the caller
            errors.append(exc)

    threads = [threading.Thread(target=work, args=(i, s), daemon=True)
               for i, s in enumerate(worker_seeds)]
    for t in threads:
        t.start()
    try:
        while True:
            try:
                sub = inbox.get(timeout=10.0)
            except queue.Empty:
                if errors:
                    raise errors[0]
                if not any(t.is_alive() for t in threads):
                    raise RuntimeError("all workers exited early")
                continue
            agg.receive(sub)
            if recorder.record(sub.score):
                return
    finally:
        stop.set()
        # unblock producers stuck on the full queue, then let them exit
        while any(t.is_alive() for t in threads):
            try:
                inbox.get_nowait()
            except queue.Empty:
                time.sleep(0.001)
        for t in threads:
            t.join()
        if errors:
            raise errors[0]


def run_trial(cfg: TrialConfig, seed) -> TrialMetrics:
    """Run one trial to the submission cap or, with early_stop, to the
    first success.

    seed may be an integer or a numpy SeedSequence.  The run is fully
    deterministic for workers=1; with more workers the arrival order
    depends on thread scheduling.
    """
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    init_seed, *worker_seeds = ss.spawn(cfg.workers + 1)
    params = init_params(np.random.default_rng(init_seed))
    agg = CentralAggregator(params, eta=cfg.eta, max_buf=cfg.max_buf)
    recorder = _ScoreRecorder(cfg)
    if cfg.workers == 1:
        _run_serial(cfg, agg, recorder, np.random.default_rng(worker_seeds[0]))
    else:
        _run_threaded(cfg, agg, recorder, worker_seeds)
    return recorder.finish()


def trial_seed(master_seed: int, cell_index: int, trial_index: int) -> np.random.SeedSequence:
    """Per-trial seed: a counter-keyed split of the master seed."""
    return np.random.SeedSequence(master_seed, spawn_key=(cell_index, trial_index))


def run_trials(cfg: TrialConfig, cell_index: int = 0,
               progress=None) -> list[TrialMetrics]:
    """All of a cell's trials, each under its own derived seed."""
    out = []
    for k in range(cfg.trials):
        metrics = run_trial(cfg, trial_seed(cfg.master_seed, cell_index, k))
        out.append(metrics)
        if progress is not None:
            progress(k, metrics)
    return out
