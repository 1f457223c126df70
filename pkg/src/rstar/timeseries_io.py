"""Quarterly macro data: loading, validation, derived series and output files."""
from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np
import pandas as pd

from .errors import IoError, MissingColumn, NaNInWindow, NonContiguousDates, SeriesTooShort, ValidationError

COLUMNS = ("date", "gdp.log", "inflation", "interest")
OUTPUT_FLOAT_FORMAT = "%.9g"

_QUARTER_RE = re.compile(r"^(\d{4}):?Q([1-4])$", re.IGNORECASE)
_ISO_RE = re.compile(r"^(\d{4})-(\d{2})(?:-(\d{2}))?$")


def parse_quarter(text: str) -> tuple[int, int]:
    """Parse ``YYYY:Qn``, ``YYYYQn`` or an ISO first-month-of-quarter date."""
    s = str(text).strip()
    m = _QUARTER_RE.match(s)
    if m:
        return int(m.group(1)), int(m.group(2))
    m = _ISO_RE.match(s)
    if m:
        month = int(m.group(2))
        if month in (1, 4, 7, 10):
            return int(m.group(1)), (month - 1) // 3 + 1
    raise ValidationError(f"unrecognised quarter {text!r}")


def format_quarter(year: int, quarter: int) -> str:
    return f"{year}:Q{quarter}"


def normalize_quarter(text: str) -> str:
    return format_quarter(*parse_quarter(text))


def next_quarter(year: int, quarter: int) -> tuple[int, int]:
    return (year + 1, 1) if quarter == 4 else (year, quarter + 1)


def quarter_index(text: str) -> int:
    """Integer quarter count, handy for date arithmetic."""
    y, q = parse_quarter(text)
    return 4 * y + (q - 1)


def quarter_from_index(idx: int) -> str:
    return format_quarter(idx // 4, idx % 4 + 1)


@dataclass(frozen=True)
class TimeSeriesData:
    """Aligned quarterly observables.

    ``expected_inflation`` and ``real_rate`` are derived, never read from file.
    Constructing an instance validates the invariants.
    """

    dates: tuple[str, ...]
    log_output: np.ndarray
    inflation: np.ndarray
    nominal_rate: np.ndarray
    expected_inflation: np.ndarray = field(default=None)
    real_rate: np.ndarray = field(default=None)

    def __post_init__(self):
        n = len(self.dates)
        arrays = {}
        for name in ("log_output", "inflation", "nominal_rate"):
            a = np.asarray(getattr(self, name), dtype=float)
            if a.shape != (n,):
                raise ValidationError(f"{name} has length {a.shape}, expected {n}")
            arrays[name] = a
        pie = self.expected_inflation
        if pie is None:
            pie = np.full(n, np.nan)
        pie = np.asarray(pie, dtype=float)
        real = arrays["nominal_rate"] - pie
        for name, a in (*arrays.items(), ("expected_inflation", pie), ("real_rate", real)):
            a.setflags(write=False)
            object.__setattr__(self, name, a)
        object.__setattr__(self, "dates", tuple(normalize_quarter(d) for d in self.dates))
        _check_contiguous(self.dates)

    def __len__(self):
        return len(self.dates)

    def slice(self, start: int, stop: int) -> "TimeSeriesData":
        return TimeSeriesData(
            dates=self.dates[start:stop],
            log_output=self.log_output[start:stop],
            inflation=self.inflation[start:stop],
            nominal_rate=self.nominal_rate[start:stop],
            expected_inflation=self.expected_inflation[start:stop],
        )

    def window(self, start: str | None = None, end: str | None = None) -> "TimeSeriesData":
        """Restrict to ``[start, end]`` (inclusive quarter labels)."""
        idx = [quarter_index(d) for d in self.dates]
        lo = 0 if start is None else _position(idx, quarter_index(start), start)
        hi = len(idx) - 1 if end is None else _position(idx, quarter_index(end), end)
        if hi < lo:
            raise ValidationError(f"empty window {start}..{end}")
        return self.slice(lo, hi + 1)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            {
                "date": list(self.dates),
                "gdp.log": self.log_output,
                "inflation": self.inflation,
                "interest": self.nominal_rate,
            }
        )


def _position(idx: list[int], target: int, label: str) -> int:
    try:
        return idx.index(target)
    except ValueError:
        raise ValidationError(f"window endpoint {label} not in data") from None


def _check_contiguous(dates: Sequence[str]) -> None:
    for prev, cur in zip(dates, dates[1:]):
        expected = format_quarter(*next_quarter(*parse_quarter(prev)))
        if cur != expected:
            raise NonContiguousDates(expected)


def expected_inflation(inflation) -> np.ndarray:
    """Four-quarter trailing mean of inflation; the first three entries are NaN."""
    x = np.asarray(inflation, dtype=float)
    if x.ndim != 1 or x.size < 4:
        raise SeriesTooShort("expected inflation needs at least 4 observations")
    out = np.full(x.size, np.nan)
    out[3:] = (x[3:] + x[2:-1] + x[1:-2] + x[:-3]) / 4.0
    return out


def load_country_csv(path, window: tuple[str | None, str | None] | None = None) -> TimeSeriesData:
    """Read a ``date,gdp.log,inflation,interest`` file.

    Expected inflation is computed on the whole file before windowing, so a
    window may use pre-window inflation. Leading entries where it is still
    undefined are left as NaN; the model's observable builder drops them
    together with the other lag rows.
    """
    path = Path(path)
    try:
        frame = pd.read_csv(path, dtype={"date": str}, float_precision="round_trip")
    except FileNotFoundError as exc:
        raise IoError(f"no such file: {path}") from exc
    except OSError as exc:
        raise IoError(str(exc)) from exc
    frame.columns = [c.strip() for c in frame.columns]
    for col in COLUMNS:
        if col not in frame.columns:
            raise MissingColumn(col)
    dates = [normalize_quarter(d) for d in frame["date"]]
    _check_contiguous(dates)
    infl = frame["inflation"].to_numpy(dtype=float)
    pie = np.full(len(dates), np.nan)
    if len(dates) >= 4:
        pie = expected_inflation(infl)
    data = TimeSeriesData(
        dates=tuple(dates),
        log_output=frame["gdp.log"].to_numpy(dtype=float),
        inflation=infl,
        nominal_rate=frame["interest"].to_numpy(dtype=float),
        expected_inflation=pie,
    )
    if window is not None:
        data = data.window(*window)
    for name, col in (("gdp.log", data.log_output), ("inflation", data.inflation), ("interest", data.nominal_rate)):
        bad = np.flatnonzero(~np.isfinite(col))
        if bad.size:
            raise NaNInWindow(name, data.dates[bad[0]])
    return data


def write_timeseries(data: TimeSeriesData, path) -> Path:
    """Write the input schema at full double precision (loads back exactly)."""
    path = Path(path)
    try:
        data.to_frame().to_csv(path, index=False, float_format="%.17g")
    except OSError as exc:
        raise IoError(str(exc)) from exc
    return path


STATE_COLUMNS = (
    "date",
    "rstar_filtered", "g_filtered", "z_filtered", "ytilde_filtered",
    "rstar_smoothed", "g_smoothed", "z_smoothed", "ytilde_smoothed",
)
FTAU_COLUMNS = ("date", "tau", "F", "variant")


@dataclass
class VariantOutput:
    """Everything emitted for one labelled model run.

    ``states`` holds the columns of ``STATE_COLUMNS``; ``ftau`` maps a break
    variant label to a frame with ``date``, ``tau`` and ``F`` columns.
    """

    states: pd.DataFrame | None = None
    ftau: dict[str, pd.DataFrame] = field(default_factory=dict)
    params: dict = field(default_factory=dict)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return float(f"{v:.9g}") if np.isfinite(v) else None
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def write_json(obj, path) -> Path:
    path = Path(path)
    try:
        path.write_text(json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n")
    except OSError as exc:
        raise IoError(str(exc)) from exc
    return path


def write_outputs(run: Mapping[str, VariantOutput], out_dir, suffix: str = "") -> list[Path]:
    """Write ``states_<v>.csv``, ``ftau_<v>.csv`` and ``params_<v>.json`` per variant."""
    out_dir = Path(out_dir)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise IoError(str(exc)) from exc
    written = []
    for label, res in run.items():
        states = res.states if res.states is not None else pd.DataFrame(columns=STATE_COLUMNS)
        frames = [
            f.assign(variant=name)[list(FTAU_COLUMNS)] for name, f in res.ftau.items() if len(f)
        ]
        ftau = pd.concat(frames, ignore_index=True) if frames else pd.DataFrame(columns=FTAU_COLUMNS)
        targets = (
            (out_dir / f"states_{label}.csv{suffix}", states.reindex(columns=STATE_COLUMNS)),
            (out_dir / f"ftau_{label}.csv{suffix}", ftau),
        )
        for path, frame in targets:
            try:
                frame.to_csv(path, index=False, float_format=OUTPUT_FLOAT_FORMAT)
            except OSError as exc:
                raise IoError(str(exc)) from exc
            written.append(path)
        written.append(write_json(res.params, out_dir / f"params_{label}.json{suffix}"))
    return written
