import numpy as np
import pandas as pd
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from rstar.errors import IoError, MissingColumn, NaNInWindow, NonContiguousDates, SeriesTooShort, ValidationError
from rstar.models import observables
from rstar.mue import BreakGrid, fstat_sequence_sw
from rstar.timeseries_io import (
    FTAU_COLUMNS, STATE_COLUMNS, TimeSeriesData, VariantOutput, expected_inflation, load_country_csv,
    normalize_quarter, parse_quarter, write_outputs, write_timeseries,
)

finite = st.floats(-50, 50, allow_nan=False, allow_infinity=False)


def _frame(dates, rng=None):
    rng = rng or np.random.default_rng(0)
    n = len(dates)
    return pd.DataFrame({"date": dates, "gdp.log": 800 + np.cumsum(rng.normal(size=n)),
                         "inflation": rng.normal(2, 1, n), "interest": rng.normal(4, 1, n)})


def _quarters(start_year, n):
    return [f"{start_year + i // 4}:Q{i % 4 + 1}" for i in range(n)]


def test_minimal_file(tmp_path):
    path = tmp_path / "d.csv"
    _frame(_quarters(1961, 4)).to_csv(path, index=False)
    data = load_country_csv(path)
    assert len(data) == 4 and data.dates == ("1961:Q1", "1961:Q2", "1961:Q3", "1961:Q4")
    assert np.isnan(data.expected_inflation[:3]).all() and np.isfinite(data.expected_inflation[3])


def test_gap_reports_missing_quarter(tmp_path):
    path = tmp_path / "d.csv"
    _frame(["1961:Q1", "1961:Q2", "1961:Q4", "1962:Q1"]).to_csv(path, index=False)
    with pytest.raises(NonContiguousDates) as info:
        load_country_csv(path)
    assert info.value.date == "1961:Q3"


def test_missing_column(tmp_path):
    path = tmp_path / "d.csv"
    _frame(_quarters(1961, 8)).drop(columns="interest").to_csv(path, index=False)
    with pytest.raises(MissingColumn):
        load_country_csv(path)


def test_missing_file_is_io_error(tmp_path):
    with pytest.raises(IoError):
        load_country_csv(tmp_path / "none.csv")


def test_nan_inside_window(tmp_path):
    path = tmp_path / "d.csv"
    f = _frame(_quarters(1961, 12))
    f.loc[2, "interest"] = np.nan
    f.to_csv(path, index=False)
    with pytest.raises(NaNInWindow) as info:
        load_country_csv(path)
    assert info.value.date == "1961:Q3"
    # outside the window it does not matter
    assert len(load_country_csv(path, ("1961:Q4", None))) == 9


def test_window_uses_prewindow_inflation(tmp_path):
    path = tmp_path / "d.csv"
    f = _frame(_quarters(1960, 20))
    f.to_csv(path, index=False)
    full = load_country_csv(path)
    win = load_country_csv(path, ("1961:Q1", "1963:Q4"))
    assert win.dates[0] == "1961:Q1" and win.dates[-1] == "1963:Q4"
    np.testing.assert_array_equal(win.expected_inflation, full.expected_inflation[4:16])


def test_date_formats():
    assert parse_quarter("1987Q2") == (1987, 2)
    assert parse_quarter("1987:q2") == (1987, 2)
    assert normalize_quarter("1987-04-01") == "1987:Q2"
    assert normalize_quarter("1987-10") == "1987:Q4"
    with pytest.raises(ValidationError):
        parse_quarter("1987-05-01")


def test_expected_inflation_examples():
    np.testing.assert_array_equal(expected_inflation(np.full(10, 2.0))[3:], 2.0)
    assert expected_inflation([4.0, 0.0, 0.0, 0.0])[3] == 1.0
    with pytest.raises(SeriesTooShort):
        expected_inflation([1.0, 2.0])


@given(arrays(np.float64, st.integers(4, 80), elements=finite))
def test_expected_inflation_matches_loop(x):
    got = expected_inflation(x)
    for t in range(x.size):
        if t < 3:
            assert np.isnan(got[t])
        else:
            assert got[t] == pytest.approx(sum(x[t - k] for k in range(4)) / 4.0, abs=1e-12)


@given(arrays(np.float64, st.integers(4, 60), elements=finite), finite)
def test_expected_inflation_shift(x, c):
    np.testing.assert_allclose(expected_inflation(x + c)[3:], expected_inflation(x)[3:] + c, atol=1e-10)


@given(arrays(np.float64, 12, elements=finite), finite)
def test_real_rate_translation(i, c):
    dates = _quarters(1970, 12)
    pie = expected_inflation(np.linspace(1, 3, 12))
    a = TimeSeriesData(dates, np.zeros(12), np.zeros(12), i, pie)
    b = TimeSeriesData(dates, np.zeros(12), np.zeros(12), i + c, pie)
    np.testing.assert_allclose(b.real_rate[3:], a.real_rate[3:] + c, atol=1e-10)
    np.testing.assert_array_equal(a.real_rate[3:], i[3:] - pie[3:])


@settings(max_examples=25, deadline=None)
@given(arrays(np.float64, (3, 24), elements=st.floats(-1e6, 1e6, allow_nan=False)))
def test_round_trip(tmp_path_factory, values):
    path = tmp_path_factory.mktemp("rt") / "d.csv"
    data = TimeSeriesData(_quarters(1990, 24), values[0], values[1], values[2])
    write_timeseries(data, path)
    back = load_country_csv(path)
    assert back.dates == data.dates
    for name in ("log_output", "inflation", "nominal_rate"):
        np.testing.assert_array_equal(getattr(back, name), getattr(data, name))


def test_too_short_after_lags():
    rng = np.random.default_rng(1)
    n = 20
    pie = expected_inflation(rng.normal(size=n))
    data = TimeSeriesData(_quarters(1970, n), rng.normal(size=n), rng.normal(size=n), rng.normal(size=n), pie)
    with pytest.raises(SeriesTooShort):
        observables(data)


def test_write_outputs_empty(tmp_path):
    paths = write_outputs({"x": VariantOutput()}, tmp_path)
    assert sorted(p.name for p in paths) == ["ftau_x.csv", "params_x.json", "states_x.csv"]
    assert pd.read_csv(tmp_path / "states_x.csv").columns.tolist() == list(STATE_COLUMNS)
    assert len(pd.read_csv(tmp_path / "states_x.csv")) == 0
    assert pd.read_csv(tmp_path / "ftau_x.csv").columns.tolist() == list(FTAU_COLUMNS)


def test_write_outputs_row_count(tmp_path):
    T = 200
    grid = BreakGrid.sw(T)
    dates = _quarters(1960, T)
    rng = np.random.default_rng(2)
    ftau = {}
    for name in ("a", "b"):
        f = fstat_sequence_sw(rng.normal(size=T), grid)
        ftau[name] = pd.DataFrame({"date": [dates[t - 1] for t in grid.taus], "tau": grid.taus, "F": f})
    write_outputs({"run": VariantOutput(ftau=ftau, params={"k": np.float64(0.1234567891234)})}, tmp_path,
                  suffix=".partial")
    frame = pd.read_csv(tmp_path / "ftau_run.csv.partial")
    assert len(frame) == 2 * grid.n_tau
    assert set(frame.variant) == {"a", "b"}
    assert (tmp_path / "params_run.json.partial").read_text().count("0.123456789") == 1
