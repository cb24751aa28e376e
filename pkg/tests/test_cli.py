"""Front end: flag parsing, grid expansion, output files."""

import csv
import json
import math

import numpy as np
import pytest

from pgc.cli import (
    ExperimentSpec,
    emit_results,
    main,
    parse_args,
    run_experiment,
)
from pgc.mechanisms import MechanismKind


def test_defaults():
    spec = parse_args([])
    assert spec.mechanisms == ("none",)
    assert spec.epsilons == (1.0,)
    assert spec.buffers is None
    assert spec.trials == 20
    assert spec.n_max == 90_000
    assert spec.workers == 9
    assert spec.master_seed == 1
    assert spec.early_stop


def test_grid_expansion_and_per_mechanism_defaults():
    spec = parse_args(["--mechanism", "laplace", "prs", "none",
                       "--epsilon", "1", "2", "5", "10"])
    cells = spec.cells()
    # laplace and prs run the epsilon grid, none collapses to one cell
    assert len(cells) == 4 + 4 + 1
    assert [c.index for c in cells] == list(range(9))
    lap = [c for c in cells if c.mechanism == "laplace"]
    assert [c.epsilon for c in lap] == [1.0, 2.0, 5.0, 10.0]
    assert all(c.buffer == 1 for c in lap)
    assert all(c.trial_config.mechanism.clip_size == 0.01 for c in lap)
    prs = [c for c in cells if c.mechanism == "prs"]
    assert all(c.buffer == 100 for c in prs)
    assert all(c.trial_config.mechanism.clip_size == 1.0 for c in prs)
    none = [c for c in cells if c.mechanism == "none"]
    assert len(none) == 1
    assert math.isinf(none[0].epsilon)
    assert none[0].buffer == 1
    assert none[0].trial_config.mechanism.clip_size == 0.7
    assert none[0].trial_config.mechanism.kind is MechanismKind.NONE


def test_explicit_buffer_and_clip_applied_everywhere():
    spec = parse_args(["--mechanism", "prs", "--epsilon", "5",
                       "--buffer", "10", "50", "--clip", "0.5"])
    cells = spec.cells()
    assert [c.buffer for c in cells] == [10, 50]
    assert all(c.trial_config.mechanism.clip_size == 0.5 for c in cells)


def test_duplicate_flags_are_deduped():
    spec = parse_args(["--mechanism", "laplace", "laplace",
                       "--epsilon", "1", "1", "2"])
    assert spec.mechanisms == ("laplace",)
    assert spec.epsilons == (1.0, 2.0)


def test_reduced_dim_and_rounds_flow_through():
    spec = parse_args(["--mechanism", "prs", "--epsilon", "5",
                       "--reduced-dim", "3", "--rounds", "2"])
    mech = spec.cells()[0].trial_config.mechanism
    assert mech.reduced_dim == 3
    assert mech.rounds == 2
    assert mech.epsilon_per_round == 2.5


def test_flag_validation_errors():
    for argv in (
        ["--epsilon", "0"],
        ["--epsilon", "-1"],
        ["--buffer", "0"],
        ["--trials", "0"],
        ["--max-submissions", "0"],
        ["--workers", "0"],
        ["--rounds", "0"],
        ["--clip", "-0.1"],
        ["--reduced-dim", "0"],
        ["--reduced-dim", "113"],
        ["--mechanism", "gauss"],
    ):
        with pytest.raises(SystemExit):
            parse_args(argv)


def test_full_matrix_is_expressible():
    # 2 mechanisms x 4 budgets x 20 trials x 90k cap in one invocation
    spec = parse_args(["--mechanism", "laplace", "prs", "none",
                       "--epsilon", "1", "2", "5", "10",
                       "--trials", "20", "--max-submissions", "90000",
                       "--workers", "9"])
    cells = spec.cells()
    assert len(cells) == 9
    assert all(c.trial_config.trials == 20 for c in cells)
    assert all(c.trial_config.n_max == 90_000 for c in cells)


def _tiny_spec(tmp_path, **kw):
    argv = ["--mechanism", "none", "--trials", "2", "--max-submissions", "30",
            "--workers", "1", "--seed", "3", "--no-early-stop",
            "--out", str(tmp_path / "res")]
    for k, v in kw.items():
        argv += [k] + list(v)
    return parse_args(argv)


def test_emit_results_files_and_shapes(tmp_path):
    spec = _tiny_spec(tmp_path)
    results = run_experiment(spec)
    paths = emit_results(results, spec)
    names = {p.name for p in paths}
    assert names == {"submissions.csv", "success_curve.csv", "summary.json"}

    with open(tmp_path / "res" / "submissions.csv") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["mechanism", "epsilon", "buffer", "trial", "n",
                       "score", "mu"]
    body = rows[1:]
    assert len(body) == 2 * 30
    assert body[0][:5] == ["none", "inf", "1", "0", "1"]
    # windowed column empty once fewer than window scores remain
    assert body[29][6] == ""
    assert body[20][6] != ""

    with open(tmp_path / "res" / "summary.json") as fh:
        summary = json.load(fh)
    assert summary["master_seed"] == 3
    assert summary["n_max"] == 30
    assert len(summary["cells"]) == 1
    cell = summary["cells"][0]
    assert cell["mechanism"] == "none"
    assert cell["epsilon"] == "inf"
    assert cell["trials"] == 2
    assert len(cell["fst"]) == 2
    assert cell["seeds"] == [[3, 0, 0], [3, 0, 1]]
    # baseline against itself
    if cell["relative_auc"] is not None:
        assert cell["relative_auc"] == 1.0


def test_submissions_csv_is_reproducible_bytes(tmp_path):
    spec_a = _tiny_spec(tmp_path / "a")
    emit_results(run_experiment(spec_a), spec_a)
    spec_b = _tiny_spec(tmp_path / "b")
    emit_results(run_experiment(spec_b), spec_b)
    a = (tmp_path / "a" / "res" / "submissions.csv").read_bytes()
    b = (tmp_path / "b" / "res" / "submissions.csv").read_bytes()
    assert a == b


def test_main_runs_end_to_end(tmp_path, capsys):
    rc = main(["--mechanism", "none", "--trials", "1",
               "--max-submissions", "20", "--workers", "1",
               "--no-early-stop", "--out", str(tmp_path / "r")])
    assert rc == 0
    assert (tmp_path / "r" / "summary.json").exists()
    out = capsys.readouterr().out
    assert "cell 0" in out


def test_main_reports_write_failures(tmp_path, capsys):
    blocker = tmp_path / "blocked"
    blocker.write_text("a file, not a directory")
    rc = main(["--mechanism", "none", "--trials", "1",
               "--max-submissions", "10", "--workers", "1",
               "--no-early-stop", "--out", str(blocker / "sub")])
    assert rc == 1
    assert capsys.readouterr().err != ""
