"""Maximum-likelihood estimation over transformed parameters.

Free parameters are optimized with Nelder-Mead in transformed space: shock
standard deviations as sigma = exp(u), everything else untransformed. Values
of u at or below ``LOG_FLOOR`` evaluate, and are reported, as sigma = 0, so
boundary estimates come out as exact zeros.

Restart policy: every start is optimized, then ``n_restarts`` further runs
begin from the best point so far with each coordinate scaled by a uniform
factor in [0.8, 1.2] (natural units). The best point over all runs wins.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Mapping, Sequence

import numpy as np
from scipy.optimize import minimize

from .errors import IoError, LikelihoodUndefined, NoConvergence, RstarError, ValidationError
from .models import (
    InitSpec, ModelVariant, StageParams, build, default_init, hp_trend, observables, resolve,
    system_parts,
)
from .ssm import fast_log_likelihood, kalman_filter
from .timeseries_io import TimeSeriesData, normalize_quarter, quarter_from_index, quarter_index

LOG_FLOOR = -15.0
PENALTY = 1e10
PERTURBATION = 0.2


def _is_sigma(name: str) -> bool:
    return name.startswith("sigma_")


def to_internal(name: str, value: float, transform: str) -> float:
    if transform == "log":
        return LOG_FLOOR if value <= math.exp(LOG_FLOOR) else math.log(value)
    return float(value)


def to_natural(name: str, u: float, transform: str) -> float:
    if transform == "log":
        return 0.0 if u <= LOG_FLOOR else math.exp(u)
    return float(u)


@dataclass
class StartRecord:
    origin: str
    start: dict
    loglik_start: float
    loglik_end: float
    n_evals: int
    spread: float
    converged: bool
    message: str

    def to_dict(self) -> dict:
        return dict(self.__dict__)


@dataclass
class ConvergenceReport:
    runs: list[StartRecord] = field(default_factory=list)
    best_run: int = -1
    converged: bool = True

    @property
    def n_evals(self) -> int:
        return sum(r.n_evals for r in self.runs)

    def to_dict(self) -> dict:
        return {"converged": self.converged, "best_run": self.best_run, "n_evals": self.n_evals,
                "runs": [r.to_dict() for r in self.runs]}


def maximize_likelihood(loglik: Callable[[dict], float], starts: Sequence[Mapping[str, float]],
                        transform: Mapping[str, str], *, budget: int = 20_000, tolerance: float = 1e-8,
                        n_restarts: int = 3, seed: int = 0) -> tuple[dict, float, ConvergenceReport]:
    """Maximize ``loglik`` over the parameters named in ``transform``.

    ``loglik`` takes a dict of natural-unit values and returns a float
    (-inf or nan for undefined points). Returns (best point, best value,
    report). Raises LikelihoodUndefined if no start has a finite value and
    NoConvergence if the winning run used its whole budget without the
    simplex values collapsing to within ``tolerance``.
    """
    names = list(transform)
    if not starts:
        raise ValidationError("at least one start is required")

    def encode(point):
        return np.array([to_internal(n, point[n], transform[n]) for n in names])

    def decode(u):
        return {n: to_natural(n, ui, transform[n]) for n, ui in zip(names, u)}

    def objective(u):
        val = loglik(decode(u))
        return -val if np.isfinite(val) else PENALTY

    report = ConvergenceReport()
    best_u, best_val = None, -math.inf
    rng = np.random.default_rng(seed)

    def run(point, origin):
        nonlocal best_u, best_val
        u0 = encode(point)
        f0 = objective(u0)
        if f0 >= PENALTY:
            report.runs.append(StartRecord(origin, dict(point), -math.inf, -math.inf, 1, math.inf, False,
                                           "likelihood undefined at start"))
            return
        res = minimize(objective, u0, method="Nelder-Mead",
                       options=dict(maxfev=budget, fatol=tolerance, xatol=1e-10, adaptive=len(names) > 4))
        vals = res.final_simplex[1]
        spread = float(vals.max() - vals.min())
        converged = spread <= tolerance or res.nfev < budget
        report.runs.append(StartRecord(origin, dict(point), -f0, -res.fun, int(res.nfev), spread, bool(converged),
                                       str(res.message)))
        if -res.fun > best_val:
            best_u, best_val = res.x, -res.fun
            report.best_run = len(report.runs) - 1

    for i, s in enumerate(starts):
        run(s, f"start:{i}")
    if best_u is None:
        raise LikelihoodUndefined("log-likelihood undefined at every start")
    for i in range(n_restarts):
        base = decode(best_u)
        jitter = rng.uniform(1.0 - PERTURBATION, 1.0 + PERTURBATION, size=len(names))
        run({n: base[n] * j for n, j in zip(names, jitter)}, f"restart:{i}")

    best = decode(best_u)
    report.converged = report.runs[report.best_run].converged
    if not report.converged:
        raise NoConvergence(f"optimizer budget of {budget} evaluations exhausted", (best, best_val, report))
    return best, best_val, report


# ---------------------------------------------------------------------------
# model fits

@dataclass(frozen=True)
class EstimationSpec:
    """What to estimate and how.

    ``fixed_params`` supplies every variant parameter not listed in
    ``free_params`` (including lambda_g / lambda_z for MUE-implied sigma
    modes). ``starts`` are dicts over ``free_params``; empty means heuristic
    starts from the data. ``constraints`` are natural-unit (lo, hi) bounds
    imposed as a penalty. ``init=None`` uses ``default_init`` on the data.
    """

    variant: ModelVariant
    free_params: tuple[str, ...]
    fixed_params: Mapping[str, float] = field(default_factory=dict)
    transform: Mapping[str, str] | None = None
    starts: tuple[Mapping[str, float], ...] = ()
    optimizer_budget: int = 20_000
    tolerance: float = 1e-8
    n_restarts: int = 3
    seed: int = 0
    constraints: Mapping[str, tuple[float, float]] = field(default_factory=dict)
    init: InitSpec | None = None
    stationary: bool = False

    def __post_init__(self):
        free = tuple(self.free_params)
        object.__setattr__(self, "free_params", free)
        object.__setattr__(self, "fixed_params", dict(self.fixed_params))
        overlap = set(free) & set(self.fixed_params)
        if overlap:
            raise ValidationError(f"parameters both free and fixed: {sorted(overlap)}")
        required = set(self.variant.estimable)
        if self.variant.sigma_g_mode == "MUE-implied":
            required.add("lambda_g")
        if not self.variant.is_stage2 and self.variant.sigma_z_mode == "MUE-implied":
            required.add("lambda_z")
        missing = required - set(free) - set(self.fixed_params)
        if missing:
            raise ValidationError(f"parameters neither free nor fixed: {sorted(missing)}")
        tr = {n: ("log" if _is_sigma(n) else "identity") for n in free}
        tr.update(self.transform or {})
        for n in free:
            if _is_sigma(n) and tr[n] != "log":
                raise ValidationError(f"{n} must use the log transform")
            if tr[n] not in ("log", "identity"):
                raise ValidationError(f"unknown transform {tr[n]!r} for {n}")
        object.__setattr__(self, "transform", {n: tr[n] for n in free})
        object.__setattr__(self, "starts", tuple(dict(s) for s in self.starts))
        for s in self.starts:
            if set(s) != set(free):
                raise ValidationError("each start must give exactly the free parameters")

    @classmethod
    def for_variant(cls, variant: ModelVariant, fixed: Mapping[str, float] | None = None, **kw) -> "EstimationSpec":
        """All estimable parameters free except those given in ``fixed``."""
        fixed = dict(fixed or {})
        free = tuple(n for n in variant.estimable if n not in fixed)
        return cls(variant, free, fixed, **kw)


@dataclass
class FitResult:
    params: StageParams
    log_likelihood: float
    report: ConvergenceReport
    init: InitSpec | None = None

    def to_dict(self) -> dict:
        return {"params": self.params.to_dict(), "log_likelihood": self.log_likelihood,
                "init": None if self.init is None else self.init.to_dict(), "report": self.report.to_dict()}


def default_starts(variant: ModelVariant, data: TimeSeriesData) -> dict[str, float]:
    """Heuristic start from OLS on an HP-filter gap.

    Gap-equation slopes regress the HP gap on its two lags and the lagged
    real rate average; inflation slopes come from the Phillips curve with the
    HP gap. Trend shock scales use differenced series.
    """
    md = observables(data)
    s = md.start
    y = data.log_output
    trend = hp_trend(y)
    gap = y - trend
    growth = np.diff(trend, prepend=np.nan)
    t = np.arange(s, len(data))
    r = data.real_rate
    cols = [gap[t - 1], gap[t - 2], 0.5 * (r[t - 1] + r[t - 2]), np.ones(t.size)]
    coef, *_ = np.linalg.lstsq(np.column_stack(cols), gap[t], rcond=None)
    sig_yt = float(np.std(gap[t] - np.column_stack(cols) @ coef))
    pi = data.inflation
    lag_mean = (pi[t - 2] + pi[t - 3] + pi[t - 4]) / 3.0
    X = np.column_stack([pi[t - 1] - lag_mean, gap[t - 1]])
    b, *_ = np.linalg.lstsq(X, pi[t] - lag_mean, rcond=None)
    sig_pi = float(np.std(pi[t] - lag_mean - X @ b))
    a_r = float(coef[2])
    start = dict(a_y1=float(coef[0]), a_y2=float(coef[1]), a_r=a_r if a_r < 0 else -0.05, a_0=float(coef[3]),
                 a_g=0.0, b_pi=float(np.clip(b[0], 0.05, 0.95)), b_y=float(max(b[1], 0.01)),
                 sigma_ytilde=max(sig_yt, 0.05), sigma_pi=max(sig_pi, 0.05),
                 sigma_ystar=max(0.5 * float(np.std(np.diff(y))), 0.05),
                 sigma_g=max(float(np.nanstd(np.diff(growth[1:]))), 0.02), sigma_z=0.1)
    if variant.tag == "Stage2HLW":
        start["a_g"] = -4.0 * start["a_r"]
    return start


def _merge(spec: EstimationSpec, free: Mapping[str, float]) -> StageParams:
    return StageParams(**{**spec.fixed_params, **free})


def _violates(spec: EstimationSpec, values: Mapping[str, float]) -> bool:
    for name, (lo, hi) in spec.constraints.items():
        v = values.get(name, spec.fixed_params.get(name))
        if v is not None and not (lo <= v <= hi):
            return True
    return False


def fit(spec: EstimationSpec, data: TimeSeriesData) -> FitResult:
    """Maximum-likelihood fit of ``spec.variant`` to ``data``."""
    md = observables(data)
    init = spec.init if spec.init is not None else default_init(spec.variant, data)
    init_s = init.for_states(spec.variant.n_state)
    a0 = np.asarray(init_s.mean, float)
    P0 = np.asarray(init_s.cov, float)
    if init_s.mode == "diffuse":
        P0 = 1e7 * np.eye(a0.size)
    n_skip = a0.size if init_s.mode == "diffuse" else 0
    obs = np.ascontiguousarray(md.obs)
    exog = np.ascontiguousarray(md.exog)

    def loglik(free: dict) -> float:
        if _violates(spec, free):
            return -math.inf
        try:
            p = resolve(_merge(spec, free), spec.variant)
            Z, A, T, Q, H = system_parts(spec.variant, p, spec.stationary)
        except RstarError:
            return -math.inf
        return fast_log_likelihood(Z, A, T, Q, H, a0, P0, obs, exog, n_skip)

    if not spec.free_params:
        params = resolve(_merge(spec, {}), spec.variant)
        ll = kalman_filter(build(spec.variant, params, init_s, spec.stationary), md.obs, md.exog).log_likelihood
        return FitResult(params, ll, ConvergenceReport(), init_s)

    starts = list(spec.starts)
    if not starts:
        guess = default_starts(spec.variant, data)
        starts = [{n: guess[n] for n in spec.free_params}]
    best, _, report = maximize_likelihood(loglik, starts, spec.transform, budget=spec.optimizer_budget,
                                          tolerance=spec.tolerance, n_restarts=spec.n_restarts, seed=spec.seed)
    params = resolve(_merge(spec, best), spec.variant)
    # final value through the validated path
    ll = kalman_filter(build(spec.variant, params, init_s, spec.stationary), md.obs, md.exog).log_likelihood
    return FitResult(params, ll, report, init_s)


def smoothed_fit(result: FitResult, variant: ModelVariant, data: TimeSeriesData, stationary: bool = False):
    """Filter and smoother output of ``variant`` at the fitted parameters."""
    from .ssm import kalman_smoother

    md = observables(data)
    model = build(variant, result.params, result.init, stationary)
    return md, kalman_smoother(kalman_filter(model, md.obs, md.exog), model)


# ---------------------------------------------------------------------------
# expanding windows

MIN_FIRST_WINDOW = 40


@dataclass
class WindowFit:
    window_end: str
    result: FitResult
    warm_start: dict | None


def fit_recursive(spec: EstimationSpec, data: TimeSeriesData, first_end: str,
                  last_end: str | None = None, init_fn: Callable[[TimeSeriesData], InitSpec] | None = None,
                  ) -> list[WindowFit]:
    """One fit per expanding window ending first_end, first_end+1Q, ...

    Each window starts from the previous window's solution followed by the
    cold starts of ``spec``. ``init_fn`` maps a window's data to its state
    prior; by default ``spec.init`` (or ``default_init`` when that is None).
    """
    first_end = normalize_quarter(first_end)
    last_end = normalize_quarter(last_end) if last_end else data.dates[-1]
    if quarter_index(first_end) - quarter_index(data.dates[0]) < MIN_FIRST_WINDOW:
        raise ValidationError(f"first window must end at least {MIN_FIRST_WINDOW} quarters after {data.dates[0]}")
    if quarter_index(last_end) < quarter_index(first_end):
        raise ValidationError("last window ends before the first")
    out: list[WindowFit] = []
    prev = None
    end = first_end
    cold = list(spec.starts)
    while quarter_index(end) <= quarter_index(last_end):
        window = data.window(None, end)
        if not cold:
            guess = default_starts(spec.variant, window)
            window_cold = [{n: guess[n] for n in spec.free_params}]
        else:
            window_cold = cold
        starts = ([prev] if prev is not None else []) + window_cold
        init = init_fn(window) if init_fn else spec.init
        wspec = EstimationSpec(
            spec.variant, spec.free_params, spec.fixed_params, spec.transform, tuple(starts),
            spec.optimizer_budget, spec.tolerance, spec.n_restarts, spec.seed, spec.constraints, init,
            spec.stationary,
        )
        try:
            res = fit(wspec, window)
        except RstarError as e:
            e.window_end = end
            e.completed = out
            e.args = (f"window ending {end}: {e}",) + tuple(e.args[1:])
            raise
        out.append(WindowFit(end, res, prev))
        p = res.params.to_dict()
        prev = {n: p[n] for n in spec.free_params}
        end = quarter_from_index(quarter_index(end) + 1)
    return out


def write_recursive_csv(fits: Sequence[WindowFit], path, names: Sequence[str] | None = None) -> Path:
    """CSV ``window_end,<param>...,loglik`` with 9 significant digits."""
    if not fits and names is None:
        names = []
    names = list(names) if names is not None else [k for k in fits[0].result.params.to_dict()]
    path = Path(path)
    try:
        with path.open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["window_end", *names, "loglik"])
            for f in fits:
                p = f.result.params.to_dict()
                w.writerow([f.window_end, *(f"{p.get(n, float('nan')):.9g}" for n in names),
                            f"{f.result.log_likelihood:.9g}"])
    except OSError as e:
        raise IoError(f"cannot write {path}: {e}") from e
    return path
