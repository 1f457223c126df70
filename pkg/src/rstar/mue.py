"""Median unbiased estimation of the signal-to-noise ratio lambda_z = lambda / T.

Break regressions come in two styles:

* ``sw``: the regressand is built once with the estimated lag polynomials,
  then regressed on a constant and the break dummy D_t(tau) = 1{t > tau}.
* ``hlw``: the regressand is the smoothed output gap and the lag terms enter
  as extra regressors whose coefficients are re-estimated at every tau.

F(tau) is the squared homoskedastic t statistic on the dummy. MW, EW and QLR
summarize the F sequence; Nyblom's L uses the demeaned regressand directly.
Statistics map to lambda through a look-up table of simulated median
functions of the local-level model.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable, Literal, Sequence

import numpy as np
import pandas as pd

from .errors import (
    DegenerateDummy, EmptyGrid, IoError, RankDeficient, UnknownStatistic, ValidationError, VariantMismatch,
    ZeroVariance,
)
from .models import ModelData, StageParams

STATISTICS = ("L", "MW", "EW", "QLR")
Style = Literal["sw", "hlw"]


# ---------------------------------------------------------------------------
# grids and statistics

@dataclass(frozen=True)
class BreakGrid:
    """Break dates tau0..tau1 (1-based: the dummy is 1 for t > tau)."""

    tau0: int
    tau1: int
    T: int
    convention: str = "custom"

    def __post_init__(self):
        if not (1 < self.tau0 < self.tau1 < self.T):
            raise EmptyGrid(f"need 1 < tau0 < tau1 < T, got tau0={self.tau0}, tau1={self.tau1}, T={self.T}")

    @classmethod
    def sw(cls, T: int) -> "BreakGrid":
        tau0 = int(math.floor(0.15 * T))
        return cls(tau0, T - tau0, T, "sw")

    @classmethod
    def hlw(cls, T: int) -> "BreakGrid":
        return cls(4, T - 4, T, "hlw")

    @classmethod
    def for_convention(cls, convention: str, T: int) -> "BreakGrid":
        if convention == "sw":
            return cls.sw(T)
        if convention == "hlw":
            return cls.hlw(T)
        raise ValidationError(f"unknown grid convention {convention!r}")

    @property
    def taus(self) -> np.ndarray:
        return np.arange(self.tau0, self.tau1 + 1)

    @property
    def n_tau(self) -> int:
        return self.tau1 - self.tau0 + 1

    def to_dict(self) -> dict:
        return {"tau0": self.tau0, "tau1": self.tau1, "T": self.T, "convention": self.convention}


def break_stats(f_seq) -> tuple[float, float, float]:
    """(MW, EW, QLR) of an F sequence; EW uses a max shift against overflow."""
    f = np.asarray(f_seq, dtype=float)
    if f.size == 0:
        raise EmptyGrid("empty F sequence")
    if not np.all(np.isfinite(f)):
        raise ValidationError("F sequence contains non-finite values")
    m = float(f.max())
    # shifting by the max keeps the constant case exact
    mw = m + float(np.mean(f - m))
    ew = m / 2.0 + math.log(float(np.mean(np.exp((f - m) / 2.0))))
    # rounding can push the log-mean a hair above its bound
    ew = min(ew, m / 2.0)
    return min(mw, m), ew, m


def _break_stats_rows(F: np.ndarray):
    m = F.max(axis=1)
    ew = m / 2.0 + np.log(np.mean(np.exp((F - m[:, None]) / 2.0), axis=1))
    mw = m + np.mean(F - m[:, None], axis=1)
    return np.minimum(mw, m), np.minimum(ew, m / 2.0), m


def nyblom_L(x, axis: int = -1):
    """T^-2 sum_t S_t^2 / sigma^2 with S_t partial sums of the demeaned series, variance divisor T."""
    a = np.asarray(x, dtype=float)
    if a.shape[axis] < 2:
        raise ValidationError("nyblom_L needs at least 2 observations")
    e = a - a.mean(axis=axis, keepdims=True)
    var = np.mean(e * e, axis=axis)
    scale = np.mean(a * a, axis=axis)
    if np.any(var <= 1e-24 * np.maximum(scale, 1e-300)) or np.any(var == 0.0):
        raise ZeroVariance("series has zero variance after demeaning")
    T = a.shape[axis]
    S = np.cumsum(e, axis=axis)
    L = np.sum(S * S, axis=axis) / (T * T * var)
    return float(L) if np.ndim(L) == 0 else L


def _f_from_between(between, total, dof):
    """F = dof * B / (SST - B), with the 0/0 case set to 0."""
    ssr = total - between
    tiny = 1e-14 * np.maximum(total, 1e-300)
    with np.errstate(divide="ignore", invalid="ignore"):
        F = dof * between / ssr
    F = np.where(ssr <= tiny, np.where(between <= tiny, 0.0, np.inf), F)
    return F


def fstat_sequence_sw(lhs, grid: BreakGrid) -> np.ndarray:
    """F(tau) from OLS of ``lhs`` on {1, D_t(tau)} for every tau of the grid.

    Uses the two-means closed form; ``lhs`` may be 2-D (rows = replications).
    """
    y = np.asarray(lhs, dtype=float)
    T = y.shape[-1]
    if T != grid.T:
        raise ValidationError(f"series length {T} does not match grid T={grid.T}")
    taus = grid.taus
    if taus[0] < 1 or taus[-1] > T - 1:
        raise DegenerateDummy("grid leaves an empty side")
    e = y - y.mean(axis=-1, keepdims=True)
    c = np.cumsum(e, axis=-1)
    sst = np.sum(e * e, axis=-1)
    c_tau = c[..., taus - 1]
    # e sums to 0, so mean after tau is -c_tau / (T - tau)
    m1 = c_tau / taus
    m2 = -c_tau / (T - taus)
    between = (m2 - m1) ** 2 * taus * (T - taus) / T
    return _f_from_between(between, np.asarray(sst)[..., None], T - 2)


def _dummy_matrix(T: int, taus: np.ndarray) -> np.ndarray:
    t = np.arange(1, T + 1)[:, None]
    return (t > taus[None, :]).astype(float)


def _independent_columns(X: np.ndarray, tol: float = 1e-10) -> np.ndarray:
    """Indices of a maximal set of linearly independent columns, kept in order."""
    keep: list[int] = []
    for j in range(X.shape[1]):
        cand = keep + [j]
        s = np.linalg.svd(X[:, cand], compute_uv=False)
        if s[-1] > tol * max(s[0], 1.0):
            keep = cand
    return np.array(keep, dtype=int)


def fstat_sequence_hlw(y, extras, grid: BreakGrid, include_intercept: bool = True,
                       drop_collinear: bool = False) -> np.ndarray:
    """F(tau) from OLS of ``y`` on {extras, [1], D_t(tau)}, all coefficients re-fit per tau.

    The dummy's t statistic is computed by partialling the other regressors
    out of y and D(tau) (Frisch-Waugh), which gives exactly the statistic of
    the full regression at each tau. With ``drop_collinear`` columns already
    spanned by earlier ones (e.g. a constant smoothed g next to the
    intercept) are removed instead of raising; the column space, and hence
    F, is unchanged.
    """
    y = np.asarray(y, dtype=float)
    T = y.size
    if T != grid.T:
        raise ValidationError(f"series length {T} does not match grid T={grid.T}")
    has_extras = extras is not None and np.size(extras) > 0
    X = np.asarray(extras, dtype=float).reshape(T, -1) if has_extras else np.zeros((T, 0))
    if include_intercept:
        X = np.column_stack([np.ones(T), X])
    taus = grid.taus
    D = _dummy_matrix(T, taus)
    if X.shape[1]:
        if drop_collinear:
            X = X[:, _independent_columns(X)]
        Qm, Rm = np.linalg.qr(X)
        diag = np.abs(np.diag(Rm))
        if diag.min() <= 1e-10 * max(diag.max(), 1.0):
            raise RankDeficient(int(taus[0]))
        ey = y - Qm @ (Qm.T @ y)
        eD = D - Qm @ (Qm.T @ D)
    else:
        ey, eD = y, D
    k = X.shape[1]
    dd = np.sum(eD * eD, axis=0)
    bad = dd <= 1e-10 * np.sum(D * D, axis=0)
    if np.any(bad):
        raise RankDeficient(int(taus[np.argmax(bad)]))
    dy = eD.T @ ey
    between = dy * dy / dd
    total = float(ey @ ey)
    return _f_from_between(between, np.full(taus.size, total), T - k - 1)


# ---------------------------------------------------------------------------
# Stage-2 regression inputs

@dataclass(frozen=True)
class SmoothedStates:
    """Smoothed Stage-2 quantities dated t (all length T)."""

    ytilde: np.ndarray
    ytilde_l1: np.ndarray
    ytilde_l2: np.ndarray
    g_l1: np.ndarray
    g_l2: np.ndarray

    @classmethod
    def from_state_means(cls, md: ModelData, means: np.ndarray) -> "SmoothedStates":
        """Read gaps and trend growth off Stage-2 state means (shared state layout)."""
        y = md.y
        ystar, ystar_l1, ystar_l2 = means[:, 0], means[:, 1], means[:, 2]
        return cls(y - ystar, md.exog[:, 0] - ystar_l1, md.exog[:, 1] - ystar_l2, means[:, 3], means[:, 4])


@dataclass(frozen=True)
class BreakInputs:
    equation: str
    lhs: np.ndarray
    """SW-style regressand (used for L in every style)"""
    y: np.ndarray | None = None
    extras: np.ndarray | None = None
    include_intercept: bool = True


MODEL_OF_EQUATION = {"hlw/hlw": "hlw", "hlw/sw": "hlw", "correct/hlw": "correct", "correct/sw": "correct"}


def stage2_break_inputs(equation: str, params: StageParams, states: SmoothedStates, md: ModelData,
                        model: str | None = None) -> BreakInputs:
    """Regression inputs for one of the four Stage-2 break-test forms.

    ``hlw/*`` labels belong to HLW's Stage-2 model, ``correct/*`` to the correct one;
    ``model`` (``"hlw"`` or ``"correct"``), when given, must match. The SW
    regressand of the same model is always attached as ``lhs``.
    """
    if equation not in MODEL_OF_EQUATION:
        raise ValidationError(f"unknown break equation {equation!r}")
    owner = MODEL_OF_EQUATION[equation]
    if model is not None and model != owner:
        raise VariantMismatch(f"{equation} needs smoothed states of the {owner} Stage-2 model, got {model}")
    p = params
    yt, yt1, yt2, g1, g2 = states.ytilde, states.ytilde_l1, states.ytilde_l2, states.g_l1, states.g_l2
    r1, r2 = md.r_l1, md.r_l2
    gap_poly = yt - p.a_y1 * yt1 - p.a_y2 * yt2
    if owner == "hlw":
        lhs = gap_poly - p.a_0 - 0.5 * p.a_r * (r1 + r2) - p.a_g * g1
        if equation == "hlw/sw":
            return BreakInputs(equation, lhs)
        extras = np.column_stack([yt1, yt2, 0.5 * (r1 + r2), g1])
        return BreakInputs(equation, lhs, yt, extras, True)
    lhs = gap_poly - 0.5 * p.a_r * (r1 - 4.0 * g1 + r2 - 4.0 * g2)
    if equation == "correct/sw":
        return BreakInputs(equation, lhs)
    extras = np.column_stack([yt1, yt2, 0.5 * (r1 + r2 - 4.0 * (g1 + g2))])
    return BreakInputs(equation, lhs, yt, extras, True)


STYLE_EQUATIONS = {(m, s): f"{m}/{s}" for m in ("hlw", "correct") for s in ("hlw", "sw")}


# ---------------------------------------------------------------------------
# look-up tables

@dataclass
class MueLookup:
    """Median (and 5%/95% quantile) functions of each statistic over lambda = 0..30.

    ``null`` optionally holds the simulated lambda = 0 draws of each
    statistic, used for p-values.
    """

    lambda_grid: np.ndarray
    median: dict[str, np.ndarray]
    q05: dict[str, np.ndarray]
    q95: dict[str, np.ndarray]
    T_sim: int = 500
    n_reps: int = 0
    seed: int | None = None
    L_divisor: str = "T"
    source: str = "simulated"
    isotonic_fixed: dict[str, bool] = field(default_factory=dict)
    null: dict[str, np.ndarray] | None = None
    raw_median: dict[str, np.ndarray] = field(default_factory=dict, repr=False)
    """medians before the monotonicity fix"""

    def __post_init__(self):
        self.lambda_grid = np.asarray(self.lambda_grid, dtype=float)
        for d in (self.median, self.q05, self.q95):
            for k in list(d):
                d[k] = np.asarray(d[k], dtype=float)
        for stat in self.median:
            self.raw_median.setdefault(stat, self.median[stat].copy())
        for stat in list(self.median):
            fixed = _enforce_increasing(self.median[stat])
            if fixed is not None:
                self.median[stat] = fixed
                self.isotonic_fixed[stat] = True
            else:
                self.isotonic_fixed.setdefault(stat, False)

    @property
    def statistics(self) -> tuple[str, ...]:
        return tuple(s for s in STATISTICS if s in self.median)

    def metadata(self) -> dict:
        return {"T_sim": self.T_sim, "n_reps": self.n_reps, "seed": self.seed, "L_divisor": self.L_divisor,
                "source": self.source, "grid": "sw", "isotonic_fixed": self.isotonic_fixed}

    def to_frame(self) -> pd.DataFrame:
        rows = []
        for stat in self.statistics:
            for i, lam in enumerate(self.lambda_grid):
                rows.append((int(lam), stat, self.median[stat][i], self.q05.get(stat, _nan(self))[i],
                             self.q95.get(stat, _nan(self))[i]))
        return pd.DataFrame(rows, columns=["lambda", "stat", "median", "q05", "q95"])

    def write(self, path) -> list[Path]:
        """Write the CSV, a sibling ``.json`` metadata file and, if present, ``_null.csv``."""
        path = Path(path)
        meta = path.with_suffix(".json")
        out = [path, meta]
        try:
            self.to_frame().to_csv(path, index=False, float_format="%.9g", lineterminator="\n")
            meta.write_text(json.dumps(self.metadata(), indent=2, sort_keys=True) + "\n")
            if self.null is not None:
                npath = null_path(path)
                pd.DataFrame({s: self.null[s] for s in self.statistics if s in self.null}).to_csv(
                    npath, index=False, float_format="%.9g", lineterminator="\n")
                out.append(npath)
        except OSError as e:
            raise IoError(f"cannot write look-up table {path}: {e}") from e
        return out

    @classmethod
    def read(cls, path) -> "MueLookup":
        path = Path(path)
        try:
            frame = pd.read_csv(path)
            meta = json.loads(path.with_suffix(".json").read_text()) if path.with_suffix(".json").exists() else {}
            npath = null_path(path)
            null = pd.read_csv(npath) if npath.exists() else None
        except OSError as e:
            raise IoError(f"cannot read look-up table {path}: {e}") from e
        missing = {"lambda", "stat", "median", "q05", "q95"} - set(frame.columns)
        if missing:
            raise ValidationError(f"look-up table missing columns {sorted(missing)}")
        grid = np.sort(frame["lambda"].unique())
        med, lo, hi = {}, {}, {}
        for stat, part in frame.groupby("stat", sort=False):
            part = part.set_index("lambda").reindex(grid)
            med[stat] = part["median"].to_numpy(float)
            lo[stat] = part["q05"].to_numpy(float)
            hi[stat] = part["q95"].to_numpy(float)
        lookup = cls(grid, med, lo, hi, T_sim=int(meta.get("T_sim", 500)), n_reps=int(meta.get("n_reps", 0)),
                     seed=meta.get("seed"), L_divisor=meta.get("L_divisor", "T"), source=meta.get("source", "file"),
                     null=None if null is None else {c: null[c].to_numpy(float) for c in null.columns})
        for stat, flag in meta.get("isotonic_fixed", {}).items():
            lookup.isotonic_fixed[stat] = lookup.isotonic_fixed.get(stat, False) or bool(flag)
        return lookup


def _nan(table: MueLookup) -> np.ndarray:
    return np.full(table.lambda_grid.size, np.nan)


def null_path(path: Path) -> Path:
    return path.with_name(path.stem + "_null.csv")


def _enforce_increasing(v: np.ndarray):
    """Isotonic fit plus a tiny ramp when ``v`` is not strictly increasing; None if already fine."""
    if np.all(np.diff(v) > 0):
        return None
    from scipy.optimize import isotonic_regression

    fit = isotonic_regression(v).x
    ramp = 1e-9 * np.maximum(np.abs(fit).max(), 1.0) * np.arange(v.size)
    return fit + ramp


SHIPPED = {"sw-table3": "lookup_sw_table3.csv", "regenerated": "lookup_regenerated.csv"}


def load_shipped_lookup(source: str = "sw-table3") -> MueLookup:
    """Packaged tables: ``sw-table3`` carries the published MW/EW/QLR medians
    with simulated L medians and quantile bands; ``regenerated`` is fully simulated."""
    if source not in SHIPPED:
        raise ValidationError(f"unknown look-up source {source!r}")
    with resources.as_file(resources.files("rstar") / "data" / SHIPPED[source]) as p:
        return MueLookup.read(p)


# ---------------------------------------------------------------------------
# simulation of the table

def _stats_rows(Y: np.ndarray, grid: BreakGrid) -> dict[str, np.ndarray]:
    F = fstat_sequence_sw(Y, grid)
    mw, ew, qlr = _break_stats_rows(F)
    return {"L": nyblom_L(Y, axis=1), "MW": mw, "EW": ew, "QLR": qlr}


def simulate_local_level(lam: float, T: int, n_reps: int, seed: int) -> np.ndarray:
    """n_reps x T draws of y_t = beta_t + u_t, beta_t = beta_{t-1} + (lam/T) eta_t, beta_0 = 0.

    Each replication has its own stream keyed by (seed, lam, rep).
    """
    out = np.empty((n_reps, T))
    for rep in range(n_reps):
        rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, int(lam), rep])))
        draws = rng.standard_normal((2, T))
        out[rep] = np.cumsum((lam / T) * draws[1]) + draws[0]
    return out


# 5%/95% bands need a few draws in each tail
MIN_REPS = 100


def simulate_lookup(T_sim: int = 500, n_reps: int = 5000, lambda_grid: Iterable[int] = range(31),
                    seed: int = 42, style: str = "sw", keep_null: bool = True) -> MueLookup:
    """Regenerate the look-up table from the local-level model with white-noise u_t."""
    if style != "sw":
        raise ValidationError("look-up tables are simulated with SW-style regressions only")
    if n_reps < MIN_REPS:
        raise ValidationError(f"n_reps must be at least {MIN_REPS}")
    lambdas = np.asarray(list(lambda_grid), dtype=int)
    grid = BreakGrid.sw(T_sim)
    med = {s: np.empty(lambdas.size) for s in STATISTICS}
    lo = {s: np.empty(lambdas.size) for s in STATISTICS}
    hi = {s: np.empty(lambdas.size) for s in STATISTICS}
    null = None
    for i, lam in enumerate(lambdas):
        stats = _stats_rows(simulate_local_level(lam, T_sim, n_reps, seed), grid)
        for s in STATISTICS:
            q = np.quantile(stats[s], [0.05, 0.5, 0.95])
            lo[s][i], med[s][i], hi[s][i] = q
        if lam == 0 and keep_null:
            null = {s: np.sort(stats[s]) for s in STATISTICS}
    return MueLookup(lambdas, med, lo, hi, T_sim=T_sim, n_reps=n_reps, seed=seed, source="simulated", null=null)


# ---------------------------------------------------------------------------
# inversion

@dataclass(frozen=True)
class MueEstimate:
    statistic: str
    value: float
    T: int
    lambda_hat: float
    lambda_z: float
    ci90: tuple[float, float]
    p_value: float | None = None
    extrapolated: bool = False
    ci_truncated: bool = False

    def to_dict(self) -> dict:
        return {"statistic": self.statistic, "value": self.value, "T": self.T, "lambda": self.lambda_hat,
                "lambda_z": self.lambda_z, "ci90": list(self.ci90), "p_value": self.p_value,
                "extrapolated": self.extrapolated, "ci_truncated": self.ci_truncated}


def _invert(curve: np.ndarray, grid: np.ndarray, value: float) -> tuple[float, str]:
    """Inverse of an increasing curve by linear interpolation: (lambda, 'below'|'inside'|'above')."""
    if not np.all(np.isfinite(curve)):
        return math.nan, "inside"
    if value <= curve[0]:
        return 0.0, "below"
    if value > curve[-1]:
        return float(grid[-1]), "above"
    i = int(np.searchsorted(curve, value, side="left")) - 1
    i = max(i, 0)
    frac = (value - curve[i]) / (curve[i + 1] - curve[i])
    return float(grid[i] + frac * (grid[i + 1] - grid[i])), "inside"


def p_value(stat: str, value: float, table: MueLookup) -> float | None:
    """Upper-tail probability under the simulated lambda = 0 null."""
    if table.null is None or stat not in table.null:
        return None
    draws = table.null[stat]
    return float(np.mean(draws >= value))


def lookup_mue(stat: str, value: float, table: MueLookup, T: int) -> MueEstimate:
    """Median-unbiased lambda and lambda_z = lambda / T for one statistic.

    Values at or below the lambda = 0 median give exactly 0; values above the
    last entry give the top of the grid with ``extrapolated`` set. The 90%
    interval inverts the 95% (lower end) and 5% (upper end) quantile curves.
    """
    if stat not in table.median:
        raise UnknownStatistic(f"look-up table has no {stat!r} entries")
    if T <= 0:
        raise ValidationError("T must be positive")
    value = float(value)
    lam, where = _invert(table.median[stat], table.lambda_grid, value)
    lo, lo_where = _invert(table.q95.get(stat, _nan(table)), table.lambda_grid, value)
    hi, _ = _invert(table.q05.get(stat, _nan(table)), table.lambda_grid, value)
    truncated = lo_where == "below"
    lambda_z = 0.0 if lam == 0.0 else lam / T
    return MueEstimate(stat, value, T, lam, lambda_z, (max(lo, 0.0) / T, max(hi, 0.0) / T),
                       p_value(stat, value, table), where == "above", truncated)


# ---------------------------------------------------------------------------
# orchestration

@dataclass
class BreakTestResult:
    style: str
    equation: str
    grid: BreakGrid
    dates: tuple[str, ...]
    f_seq: np.ndarray
    mw: float
    ew: float
    qlr: float
    L: float
    p_values: dict[str, float | None] = field(default_factory=dict)

    @property
    def statistics(self) -> dict[str, float]:
        return {"L": self.L, "MW": self.mw, "EW": self.ew, "QLR": self.qlr}

    def ftau_frame(self, label: str) -> pd.DataFrame:
        taus = self.grid.taus
        return pd.DataFrame({"date": [self.dates[t - 1] for t in taus], "tau": taus, "F": self.f_seq,
                             "variant": label})


@dataclass
class MueResult:
    T: int
    estimates: dict[str, MueEstimate]
    breaks: BreakTestResult

    @property
    def lambda_z_hat(self) -> dict[str, float]:
        return {k: v.lambda_z for k, v in self.estimates.items()}

    def to_dict(self) -> dict:
        return {"T": self.T, "style": self.breaks.style, "equation": self.breaks.equation,
                "grid": self.breaks.grid.to_dict(), "statistics": self.breaks.statistics,
                "estimates": {k: v.to_dict() for k, v in self.estimates.items()}}


def run_break_test(inputs: BreakInputs, style: str, dates: Sequence[str], grid_convention: str | None = None,
                   drop_collinear: bool = True) -> BreakTestResult:
    """F(tau) sequence and statistics for prepared inputs; the grid follows the style unless given."""
    T = inputs.lhs.size
    grid = BreakGrid.for_convention(grid_convention or style, T)
    if style == "sw":
        f = fstat_sequence_sw(inputs.lhs, grid)
    elif style == "hlw":
        if inputs.y is None:
            raise VariantMismatch(f"{inputs.equation} has no HLW-style regression form")
        f = fstat_sequence_hlw(inputs.y, inputs.extras, grid, inputs.include_intercept, drop_collinear)
    else:
        raise ValidationError(f"unknown break style {style!r}")
    mw, ew, qlr = break_stats(f)
    return BreakTestResult(style, inputs.equation, grid, tuple(dates), f, mw, ew, qlr, nyblom_L(inputs.lhs))


def mue_from_breaks(breaks: BreakTestResult, table: MueLookup, statistics: Sequence[str] = STATISTICS
                    ) -> MueResult:
    T = breaks.grid.T
    est = {s: lookup_mue(s, breaks.statistics[s], table, T) for s in statistics}
    breaks.p_values = {s: e.p_value for s, e in est.items()}
    return MueResult(T, est, breaks)


def estimate_lambda_z(model: str, style: str, params: StageParams, states: SmoothedStates, md: ModelData,
                      table: MueLookup) -> MueResult:
    """Break regressions of the given Stage-2 model and style, mapped to lambda_z.

    ``model`` is ``"hlw"`` (HLW's Stage-2 form, either sigma_g treatment) or
    ``"correct"``; the pair is the equation label ``<model>/<style>``.
    """
    if (model, style) not in STYLE_EQUATIONS:
        raise ValidationError(f"unknown model/style pair {(model, style)}")
    eq = STYLE_EQUATIONS[(model, style)]
    inputs = stage2_break_inputs(eq, params, states, md, model)
    return mue_from_breaks(run_break_test(inputs, style, md.dates), table)
