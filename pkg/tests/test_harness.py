"""Trial runner and the summary metric suite."""

import math

import numpy as np
import pytest

from pgc.harness import (
    TrialConfig,
    TrialMetrics,
    _ScoreRecorder,
    average_score,
    first_success_time,
    relative_auc,
    run_trial,
    run_trials,
    success_curve,
    success_ratio,
    trial_seed,
    windowed_scores,
)
from pgc.mechanisms import MechanismConfig, MechanismKind
from pgc.model import PARAM_DIM


def _cfg(**kw):
    mech = kw.pop("mechanism", None) or MechanismConfig(
        epsilon=np.inf, clip_size=0.7, dim=PARAM_DIM, kind=MechanismKind.NONE)
    base = dict(mechanism=mech, max_buf=1, n_max=40, window=5, workers=1,
                trials=2, master_seed=7)
    base.update(kw)
    return TrialConfig(**base)


def test_average_score_hand_case():
    scores = [10, 10, 200, 200, 200]
    assert average_score(scores, 1, 2) == 10.0
    assert average_score(scores, 2, 2) == 105.0
    assert average_score(scores, 3, 2) == 200.0
    with pytest.raises(ValueError):
        average_score(scores, 5, 2)
    with pytest.raises(ValueError):
        average_score(scores, 0, 2)


def test_windowed_scores_bit_identical_to_per_window_means():
    rng = np.random.default_rng(1)
    scores = rng.integers(0, 201, size=3000)
    for m in (1, 10, 37):
        mu = windowed_scores(scores, m)
        assert mu.shape == (len(scores) - m + 1,)
        for n in (1, 2, len(mu) // 2, len(mu)):
            assert mu[n - 1] == average_score(scores, n, m)


def test_windowed_scores_short_input():
    assert windowed_scores([1, 2], 5).size == 0


def test_first_success_time_hand_case():
    scores = np.array([10, 10, 200, 200, 200])
    mu = windowed_scores(scores, 2)
    metrics = TrialMetrics(scores=scores, mu=mu, fst=0.0, success=False)
    assert first_success_time(metrics, 150.0) == 3.0
    assert first_success_time(metrics, 500.0) == math.inf


def test_success_ratio():
    fsts = [100.0, 5000.0, math.inf, 200.0]
    assert success_ratio(fsts, 1000) == 0.5
    assert success_ratio(fsts, 10_000) == 0.75
    assert success_ratio(fsts, 50) == 0.0
    with pytest.raises(ValueError):
        success_ratio([], 10)


def test_success_curve_and_relative_auc_hand_case():
    base = success_curve([1.0, 2.0], [1, 2, 3])
    assert np.array_equal(base, [0.5, 1.0, 1.0])
    mech = success_curve([2.0, math.inf], [1, 2, 3])
    assert np.array_equal(mech, [0.0, 0.5, 0.5])
    assert relative_auc(mech, base) == pytest.approx(1.0 / 2.5)
    assert relative_auc(base, base) == 1.0
    with pytest.raises(ValueError):
        relative_auc(mech, np.zeros(3))
    with pytest.raises(ValueError):
        relative_auc(mech, base[:2])


def test_recorder_detects_success_at_window_start():
    cfg = _cfg(n_max=100, window=3, target=50.0, early_stop=True)
    rec = _ScoreRecorder(cfg)
    for s in [10, 10, 10, 60, 90]:
        stopped = rec.record(s)
    assert stopped
    # window (3,4,5) averages 160/3 >= 50, the first to clear the bar
    assert rec.fst == 3.0
    assert rec.success
    assert rec.early_stopped
    m = rec.finish()
    assert np.array_equal(m.scores, [10, 10, 10, 60, 90])


def test_recorder_without_early_stop_runs_to_cap():
    cfg = _cfg(n_max=6, window=2, target=5.0, early_stop=False)
    rec = _ScoreRecorder(cfg)
    outs = [rec.record(9) for _ in range(6)]
    assert outs == [False] * 5 + [True]
    assert rec.fst == 1.0
    assert not rec.early_stopped


def test_recorder_success_on_final_submission_is_not_early():
    cfg = _cfg(n_max=2, window=2, target=5.0, early_stop=True)
    rec = _ScoreRecorder(cfg)
    assert not rec.record(9)
    assert rec.record(9)
    assert rec.success
    assert not rec.early_stopped


def test_run_trial_single_worker_is_reproducible():
    cfg = _cfg(n_max=60, early_stop=False)
    a = run_trial(cfg, 123)
    b = run_trial(cfg, 123)
    assert np.array_equal(a.scores, b.scores)
    assert np.array_equal(a.mu, b.mu)
    assert a.fst == b.fst
    c = run_trial(cfg, 124)
    assert not np.array_equal(a.scores, c.scores)


def test_run_trial_score_trace_properties():
    cfg = _cfg(n_max=50, early_stop=False)
    m = run_trial(cfg, 5)
    assert m.scores.shape == (50,)
    assert m.scores.dtype.kind == "i"
    assert np.all((m.scores >= 1) & (m.scores <= 200))
    assert m.mu.shape == (46,)
    assert not m.early_stopped


def test_run_trial_threaded_completes_and_counts():
    cfg = _cfg(n_max=40, workers=3, early_stop=False)
    m = run_trial(cfg, 9)
    assert m.scores.shape == (40,)
    assert np.all((m.scores >= 1) & (m.scores <= 200))


def test_trial_seeds_are_distinct_and_stable():
    a = trial_seed(1, 0, 0)
    b = trial_seed(1, 0, 1)
    c = trial_seed(1, 1, 0)
    states = {tuple(s.generate_state(4)) for s in (a, b, c)}
    assert len(states) == 3
    again = trial_seed(1, 0, 0)
    assert np.array_equal(a.generate_state(4), again.generate_state(4))


def test_run_trials_runs_each_trial_under_its_own_seed():
    cfg = _cfg(n_max=30, trials=3, early_stop=False)
    seen = []
    out = run_trials(cfg, cell_index=2,
                     progress=lambda k, m: seen.append(k))
    assert seen == [0, 1, 2]
    assert len(out) == 3
    # distinct seeds give distinct traces
    assert not np.array_equal(out[0].scores, out[1].scores)
    # and the direct per-seed run reproduces trial k exactly
    direct = run_trial(cfg, trial_seed(cfg.master_seed, 2, 1))
    assert np.array_equal(direct.scores, out[1].scores)


def test_trial_config_validation():
    with pytest.raises(ValueError):
        _cfg(window=0)
    with pytest.raises(ValueError):
        _cfg(workers=0)
    with pytest.raises(ValueError):
        _cfg(n_max=0)
    with pytest.raises(ValueError):
        _cfg(gravity_choices=())
