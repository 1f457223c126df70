import json

import numpy as np
import pandas as pd
import pytest

from rstar import cli
from rstar.errors import NumericalError
from rstar.experiments import ThesisConfig
from rstar.models import simulate_full_model
from rstar.mue import BreakGrid, STATISTICS
from rstar.timeseries_io import STATE_COLUMNS, write_timeseries


@pytest.fixture(scope="module")
def toy_csv(tmp_path_factory):
    d = tmp_path_factory.mktemp("toy")
    sim = simulate_full_model(ThesisConfig().true_params(), 120, np.random.default_rng(7))
    return write_timeseries(sim.data, d / "toy.csv")


def _config(tmp_path, toy_csv, **kw):
    cfg = {"data": str(toy_csv), "country": "TOY", "lambda_g": 0.05, "out_dir": "out",
           "optimizer": {"n_restarts": 0}, **kw}
    path = tmp_path / "run.json"
    path.write_text(json.dumps(cfg))
    return path


def test_zero_break_styles_fails_before_compute(tmp_path, toy_csv):
    path = _config(tmp_path, toy_csv, break_styles=[])
    assert cli.main(["estimate", "--config", str(path)]) == 2
    assert not (tmp_path / "out").exists()


def test_replication_requires_lambda_g(tmp_path, toy_csv):
    cfg = json.loads(_config(tmp_path, toy_csv).read_text())
    del cfg["lambda_g"]
    (tmp_path / "run.json").write_text(json.dumps(cfg))
    assert cli.main(["estimate", "--config", str(tmp_path / "run.json")]) == 2


def test_missing_data_is_io_error(tmp_path):
    assert cli.main(["estimate", "--data", str(tmp_path / "nope.csv"), "--pipeline", "corrected"]) == 4


def test_bad_json_is_validation_error(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text("{not json")
    assert cli.main(["estimate", "--config", str(path)]) == 2


def test_config_overrides_flags(tmp_path, toy_csv):
    path = _config(tmp_path, toy_csv, country="CFG")
    cfg = cli.load_config(str(path), {"country": "FLAG", "pipeline": "corrected"})
    assert cfg.country == "CFG"
    assert cfg.pipeline == "corrected"
    assert cfg.out_dir == str(tmp_path / "out")


@pytest.fixture(scope="module")
def both_run(tmp_path_factory, toy_csv):
    d = tmp_path_factory.mktemp("both")
    path = _config(d, toy_csv, pipeline="both")
    assert cli.main(["estimate", "--config", str(path)]) == 0
    return d / "out"


def test_both_pipeline_fills_every_cell(both_run):
    table = pd.read_csv(both_run / "mue_table.csv")
    cells = {(r.model, r.style, r.statistic) for r in table.itertuples()}
    expect = {(m, s, st) for m in ("hlw-rfile", "hlw-mle", "correct") for s in ("hlw", "sw") for st in STATISTICS}
    assert cells == expect
    assert table["lambda_z"].notna().all()


def test_both_pipeline_outputs(both_run):
    for label in ("hlw-replication", "corrected"):
        states = pd.read_csv(both_run / f"states_{label}.csv")
        assert list(states.columns) == list(STATE_COLUMNS)
        np.testing.assert_allclose(states.rstar_smoothed, states.g_smoothed + states.z_smoothed, atol=1e-7)
        params = json.loads((both_run / f"params_{label}.json").read_text())
        assert params["end_of_sample"]["date"] == states.date.iloc[-1]
        ftau = pd.read_csv(both_run / f"ftau_{label}.csv")
        T = len(states)
        n_rows = sum(BreakGrid.for_convention(s, T).n_tau for s in ("hlw", "sw"))
        per_model = 2 if label == "hlw-replication" else 1
        assert len(ftau) == per_model * n_rows
    corrected = json.loads((both_run / "params_corrected.json").read_text())
    assert 0.0 <= corrected["lr_test_a0"]["p_value"] <= 1.0


def test_rerun_is_identical(tmp_path, toy_csv):
    path = _config(tmp_path, toy_csv, pipeline="corrected", break_styles=["sw"])
    assert cli.main(["estimate", "--config", str(path)]) == 0
    first = {p.name: p.read_bytes() for p in (tmp_path / "out").iterdir()}
    assert cli.main(["estimate", "--config", str(path)]) == 0
    assert first == {p.name: p.read_bytes() for p in (tmp_path / "out").iterdir()}


def test_failure_leaves_partial_outputs(tmp_path, toy_csv, monkeypatch):
    def boom(*a, **k):
        raise NumericalError("stage 3 failed")

    monkeypatch.setattr(cli, "fit_stage3", boom)
    path = _config(tmp_path, toy_csv, pipeline="corrected", break_styles=["sw"])
    assert cli.main(["estimate", "--config", str(path)]) == 3
    names = sorted(p.name for p in (tmp_path / "out").iterdir())
    assert names and all(n.endswith(".partial") for n in names)
    ftau = pd.read_csv(tmp_path / "out" / "ftau_corrected.csv.partial")
    assert set(ftau.variant) == {"correct/sw"}


def test_simulate_lookup_smoke_and_determinism(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert cli.main(["simulate-lookup", "--reps", "100", "--seed", "5", "--out", str(a)]) == 0
    assert cli.main(["simulate-lookup", "--reps", "100", "--seed", "5", "--out", str(b)]) == 0
    frame = pd.read_csv(a)
    assert list(frame.columns) == ["lambda", "stat", "median", "q05", "q95"]
    assert len(frame) == 31 * 4
    assert a.read_bytes() == b.read_bytes()
    meta = json.loads(a.with_suffix(".json").read_text())
    assert meta["n_reps"] == 100 and meta["seed"] == 5 and meta["T_sim"] == 500 and meta["L_divisor"] == "T"


def test_simulate_lookup_unwritable(tmp_path):
    target = tmp_path / "file"
    target.write_text("")
    assert cli.main(["simulate-lookup", "--reps", "100", "--out", str(target / "x.csv")]) == 4


def test_recursive_two_windows(tmp_path, toy_csv):
    path = _config(tmp_path, toy_csv, optimizer={"n_restarts": 0, "budget": 40000})
    dates = pd.read_csv(toy_csv).date
    out = tmp_path / "rec.csv"
    code = cli.main(["recursive", "--config", str(path), "--first-end", dates.iloc[-2], "--out", str(out)])
    assert code == 0
    frame = pd.read_csv(out)
    assert len(frame) == 2
    assert list(frame.columns[:3]) == ["window_end", "sigma_g", "sigma_z"] and frame.columns[-1] == "loglik"


def test_break_test_writes_ftau(tmp_path):
    rng = np.random.default_rng(0)
    y = np.r_[rng.normal(size=60), rng.normal(size=60) + 2.0]
    series = tmp_path / "s.csv"
    pd.DataFrame({"y": y, "x": rng.normal(size=120)}).to_csv(series, index=False)
    for style in ("sw", "hlw"):
        out = tmp_path / f"f_{style}.csv"
        assert cli.main(["break-test", "--input", str(series), "--style", style, "--out", str(out)]) == 0
        frame = pd.read_csv(out)
        assert len(frame) == BreakGrid.for_convention(style, 120).n_tau
        assert frame.tau.iloc[int(frame.F.argmax())] in range(55, 66)


def test_break_test_needs_y(tmp_path):
    series = tmp_path / "s.csv"
    pd.DataFrame({"x": np.arange(30.0)}).to_csv(series, index=False)
    assert cli.main(["break-test", "--input", str(series), "--style", "sw"]) == 2
