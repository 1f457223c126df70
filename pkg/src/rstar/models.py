"""Economic parameters to state-space form for the full model and both Stage-2 variants.

State ordering is shared across variants so that initial-state configuration
is portable::

    0 y*_t   1 y*_{t-1}   2 y*_{t-2}   3 g_{t-1}   4 g_{t-2}   [5 z_{t-1}   6 z_{t-2}]

Stage-2 models use the first five entries. Observables are ``(y_t, pi_t)``
and every variant reads the same exogenous design, see ``EXOG_NAMES``.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, field, fields, replace
from typing import Literal

import numpy as np

from .errors import InvalidParams, SeriesTooShort, ValidationError
from .ssm import StateSpaceModel
from .timeseries_io import TimeSeriesData, expected_inflation, quarter_from_index, quarter_index

EXOG_NAMES = ("y_l1", "y_l2", "r_l1", "r_l2", "pi_l1", "pi_l2", "pi_l3", "pi_l4", "const")
N_LAGS = 4

VariantTag = Literal["Full", "Stage2Correct", "Stage2CorrectPlusA0", "Stage2HLW"]
SigmaMode = Literal["MUE-implied", "MLE-free", "zero"]

SIGMA_NAMES = ("sigma_ytilde", "sigma_pi", "sigma_ystar", "sigma_g", "sigma_z")


@dataclass(frozen=True)
class StageParams:
    a_y1: float = 0.0
    a_y2: float = 0.0
    a_r: float = 0.0
    a_0: float = 0.0
    a_g: float = 0.0
    b_pi: float = 0.0
    b_y: float = 0.0
    sigma_ytilde: float = 0.0
    sigma_pi: float = 0.0
    sigma_ystar: float = 0.0
    sigma_g: float = 0.0
    sigma_z: float = 0.0
    lambda_g: float | None = None
    lambda_z: float | None = None

    def __post_init__(self):
        for name in SIGMA_NAMES:
            v = getattr(self, name)
            if not np.isfinite(v) or v < 0.0:
                raise InvalidParams(f"{name} must be a finite value >= 0, got {v}")
        for name in ("lambda_g", "lambda_z"):
            v = getattr(self, name)
            if v is not None and (not np.isfinite(v) or v < 0.0):
                raise InvalidParams(f"{name} must be >= 0, got {v}")

    def to_dict(self) -> dict:
        return {k: v for k, v in asdict(self).items() if v is not None}

    @classmethod
    def from_dict(cls, d: dict) -> "StageParams":
        names = {f.name for f in fields(cls)}
        unknown = set(d) - names
        if unknown:
            raise InvalidParams(f"unknown parameters {sorted(unknown)}")
        return cls(**{k: (None if v is None else float(v)) for k, v in d.items()})


@dataclass(frozen=True)
class ModelVariant:
    tag: VariantTag
    sigma_g_mode: SigmaMode = "MLE-free"
    sigma_z_mode: SigmaMode = "MLE-free"
    # Stage2HLW only: "iid" keeps HLW's diagonal trend-shock covariance,
    # "ma1" carries the eps^g_{t-1} term of the g_{t-2} trend equation exactly
    trend_error: Literal["iid", "ma1"] = "iid"

    def __post_init__(self):
        if self.tag not in ("Full", "Stage2Correct", "Stage2CorrectPlusA0", "Stage2HLW"):
            raise ValidationError(f"unknown variant {self.tag!r}")
        if self.is_stage2 and self.sigma_z_mode != "zero":
            object.__setattr__(self, "sigma_z_mode", "zero")

    @property
    def is_stage2(self) -> bool:
        return self.tag != "Full"

    @property
    def n_state(self) -> int:
        return 5 if self.is_stage2 else 7

    @property
    def param_names(self) -> tuple[str, ...]:
        """Structural parameters the variant uses (before sigma modes)."""
        base = ["a_y1", "a_y2", "a_r"]
        if self.tag in ("Stage2CorrectPlusA0", "Stage2HLW"):
            base.append("a_0")
        if self.tag == "Stage2HLW":
            base.append("a_g")
        base += ["b_pi", "b_y", "sigma_ytilde", "sigma_pi", "sigma_ystar", "sigma_g"]
        if not self.is_stage2:
            base.append("sigma_z")
        return tuple(base)

    @property
    def estimable(self) -> tuple[str, ...]:
        """Parameters left to the optimizer once sigma modes are applied."""
        out = list(self.param_names)
        if self.sigma_g_mode != "MLE-free":
            out.remove("sigma_g")
        if "sigma_z" in out and self.sigma_z_mode != "MLE-free":
            out.remove("sigma_z")
        return tuple(out)

    @property
    def label(self) -> str:
        return self.tag


@dataclass(frozen=True)
class InitSpec:
    """Prior for the state before the first observation."""

    mean: tuple[float, ...]
    cov: tuple[tuple[float, ...], ...]
    mode: Literal["fixed-prior", "diffuse"] = "fixed-prior"

    @classmethod
    def from_dict(cls, d: dict) -> "InitSpec":
        return cls(tuple(d["mean"]), tuple(tuple(r) for r in d["cov"]), d.get("mode", "fixed-prior"))

    def to_dict(self) -> dict:
        return {"mean": list(self.mean), "cov": [list(r) for r in self.cov], "mode": self.mode}

    def for_states(self, n_state: int) -> "InitSpec":
        """Truncate a 7-state prior to the Stage-2 layout (or check the size)."""
        mean = np.asarray(self.mean, float)
        cov = np.asarray(self.cov, float)
        if mean.size < n_state:
            raise ValidationError(f"init has {mean.size} states, model needs {n_state}")
        return InitSpec(tuple(mean[:n_state]), tuple(map(tuple, cov[:n_state, :n_state])), self.mode)


def resolve(p: StageParams, variant: ModelVariant) -> StageParams:
    """Fill sigma_g / sigma_z implied by the variant's sigma modes.

    sigma_g = lambda_g * sigma_ystar and sigma_z = lambda_z * sigma_ytilde / |a_r|.
    """
    upd = {}
    if variant.sigma_g_mode == "MUE-implied":
        if p.lambda_g is None:
            raise InvalidParams("sigma_g_mode MUE-implied needs lambda_g")
        upd["sigma_g"] = p.lambda_g * p.sigma_ystar
    elif variant.sigma_g_mode == "zero":
        upd["sigma_g"] = 0.0
    if variant.is_stage2 or variant.sigma_z_mode == "zero":
        upd["sigma_z"] = 0.0
    elif variant.sigma_z_mode == "MUE-implied":
        if p.lambda_z is None:
            raise InvalidParams("sigma_z_mode MUE-implied needs lambda_z")
        if p.lambda_z == 0.0:
            upd["sigma_z"] = 0.0
        elif p.a_r == 0.0:
            raise InvalidParams("lambda_z > 0 with a_r = 0 implies an infinite sigma_z")
        else:
            upd["sigma_z"] = p.lambda_z * p.sigma_ytilde / abs(p.a_r)
    return replace(p, **upd) if upd else p


def check_implied(p: StageParams, variant: ModelVariant, tol: float = 1e-12) -> None:
    if variant.sigma_g_mode == "MUE-implied":
        if abs(p.sigma_g - p.lambda_g * p.sigma_ystar) > tol:
            raise InvalidParams("sigma_g inconsistent with lambda_g * sigma_ystar")
    if not variant.is_stage2 and variant.sigma_z_mode == "MUE-implied":
        if abs(p.sigma_z * abs(p.a_r) - p.lambda_z * p.sigma_ytilde) > tol:
            raise InvalidParams("sigma_z inconsistent with lambda_z * sigma_ytilde / |a_r|")


def _check(p: StageParams, stationary: bool) -> None:
    if stationary and abs(p.a_y1 + p.a_y2) >= 1.0:
        raise InvalidParams(f"|a_y1 + a_y2| = {abs(p.a_y1 + p.a_y2):.4f} >= 1")


def _init_arrays(init: InitSpec | None, n_state: int):
    if init is None:
        return np.zeros(n_state), np.zeros((n_state, n_state)), "diffuse"
    init = init.for_states(n_state)
    return np.asarray(init.mean, float), np.asarray(init.cov, float), init.mode


def _inflation_row(p: StageParams, n_state: int):
    Z = np.zeros(n_state)
    Z[1] = -p.b_y
    A = np.zeros(len(EXOG_NAMES))
    A[0] = p.b_y
    A[4] = p.b_pi
    # lags 2-4 enter as their average so the lag weights sum to one
    A[5:8] = (1.0 - p.b_pi) / 3.0
    return Z, A


def _trend_block(n_state: int, sigma_ystar: float, sigma_g: float, exact_g_lag: bool):
    T = np.zeros((n_state, n_state))
    T[0, 0] = 1.0
    T[0, 3] = 1.0
    T[1, 0] = 1.0
    T[2, 1] = 1.0
    T[3, 3] = 1.0
    T[4, 3] = 1.0
    Q = np.zeros((n_state, n_state))
    Q[3, 3] = sigma_g**2
    if exact_g_lag:
        # y*_t = y*_{t-1} + g_{t-1} with g_{t-1} = g_{t-2} + eps^g_{t-1}:
        # the trend row carries eps^y*_t + eps^g_{t-1}
        Q[0, 0] = sigma_ystar**2 + sigma_g**2
        Q[0, 3] = Q[3, 0] = sigma_g**2
    else:
        Q[0, 0] = sigma_ystar**2
    return T, Q


def _assemble(parts, init, n_state):
    Z, A, T, Q, H = parts
    a0, P0, mode = _init_arrays(init, n_state)
    return StateSpaceModel(
        obs_load=Z, obs_exog=A, trans=T, trans_exog=np.zeros((n_state, len(EXOG_NAMES))),
        obs_cov=H, state_cov=Q, init_mean=a0, init_cov=P0, init_mode=mode,
    )


def _obs_cov(p: StageParams) -> np.ndarray:
    return np.diag([p.sigma_ytilde**2, p.sigma_pi**2])


def _full_parts(p: StageParams):
    n = 7
    zi, ai = _inflation_row(p, n)
    zy = np.array([1.0, -p.a_y1, -p.a_y2, -2.0 * p.a_r, -2.0 * p.a_r, -0.5 * p.a_r, -0.5 * p.a_r])
    ay = np.zeros(len(EXOG_NAMES))
    ay[[0, 1, 2, 3]] = [p.a_y1, p.a_y2, 0.5 * p.a_r, 0.5 * p.a_r]
    T, Q = _trend_block(n, p.sigma_ystar, p.sigma_g, exact_g_lag=True)
    T[5, 5] = 1.0
    T[6, 5] = 1.0
    Q[5, 5] = p.sigma_z**2
    return np.vstack([zy, zi]), np.vstack([ay, ai]), T, Q, _obs_cov(p)


def _correct_parts(p: StageParams, with_intercept: bool):
    n = 5
    zi, ai = _inflation_row(p, n)
    zy = np.array([1.0, -p.a_y1, -p.a_y2, -2.0 * p.a_r, -2.0 * p.a_r])
    ay = np.zeros(len(EXOG_NAMES))
    ay[[0, 1, 2, 3]] = [p.a_y1, p.a_y2, 0.5 * p.a_r, 0.5 * p.a_r]
    if with_intercept:
        ay[8] = p.a_0
    T, Q = _trend_block(n, p.sigma_ystar, p.sigma_g, exact_g_lag=True)
    return np.vstack([zy, zi]), np.vstack([ay, ai]), T, Q, _obs_cov(p)


def _hlw_parts(p: StageParams, trend_error: str):
    if trend_error not in ("iid", "ma1"):
        raise ValidationError(f"unknown trend_error {trend_error!r}")
    n = 5
    zi, ai = _inflation_row(p, n)
    zy = np.array([1.0, -p.a_y1, -p.a_y2, p.a_g, 0.0])
    ay = np.zeros(len(EXOG_NAMES))
    ay[[0, 1, 2, 3, 8]] = [p.a_y1, p.a_y2, 0.5 * p.a_r, 0.5 * p.a_r, p.a_0]
    T, Q = _trend_block(n, p.sigma_ystar, p.sigma_g, exact_g_lag=trend_error == "ma1")
    return np.vstack([zy, zi]), np.vstack([ay, ai]), T, Q, _obs_cov(p)


def build_full_model(p: StageParams, init: InitSpec | None = None, stationary: bool = False) -> StateSpaceModel:
    """Full model, z_t included.

    Gap equation a_y(L) ytilde_t = (a_r/2)(L + L^2)[r_t - 4 g_t - z_t] + eps.
    """
    _check(p, stationary)
    return _assemble(_full_parts(p), init, 7)


def build_stage2_correct(p: StageParams, with_intercept: bool = False, init: InitSpec | None = None,
                         stationary: bool = False) -> StateSpaceModel:
    """Full model with z_t removed: a_y(L) ytilde_t = [a_0 +] a_r(L)[r_t - 4 g_t] + eps."""
    _check(p, stationary)
    return _assemble(_correct_parts(p, with_intercept), init, 5)


def build_stage2_hlw(p: StageParams, init: InitSpec | None = None, trend_error: str = "iid",
                     stationary: bool = False) -> StateSpaceModel:
    """HLW's Stage-2 form.

    a_y(L) ytilde_t = a_0 + a_r(L) r_t + a_g g_{t-1} + eps, and
    y*_t = y*_{t-1} + g_{t-2} + eps^y*. With ``trend_error="ma1"`` the trend
    error is eps^y*_t + eps^g_{t-1} (non-diagonal state covariance).
    """
    _check(p, stationary)
    return _assemble(_hlw_parts(p, trend_error), init, 5)


def system_parts(variant: "ModelVariant", p: StageParams, stationary: bool = False):
    """Unvalidated (Z, A, T, Q, H) for the optimizer's inner loop; ``p`` already resolved."""
    _check(p, stationary)
    if variant.tag == "Full":
        return _full_parts(p)
    if variant.tag == "Stage2HLW":
        return _hlw_parts(p, variant.trend_error)
    return _correct_parts(p, variant.tag == "Stage2CorrectPlusA0")


def build(variant: ModelVariant, p: StageParams, init: InitSpec | None = None,
          stationary: bool = False) -> StateSpaceModel:
    p = resolve(p, variant)
    if variant.tag == "Full":
        return build_full_model(p, init, stationary)
    if variant.tag == "Stage2Correct":
        return build_stage2_correct(p, False, init, stationary)
    if variant.tag == "Stage2CorrectPlusA0":
        return build_stage2_correct(p, True, init, stationary)
    return build_stage2_hlw(p, init, variant.trend_error, stationary)


@dataclass(frozen=True)
class ModelData:
    """Estimation-sample arrays cut from a TimeSeriesData."""

    dates: tuple[str, ...]
    obs: np.ndarray
    exog: np.ndarray
    start: int

    @property
    def y(self) -> np.ndarray:
        return self.obs[:, 0]

    @property
    def r_l1(self) -> np.ndarray:
        return self.exog[:, 2]

    @property
    def r_l2(self) -> np.ndarray:
        return self.exog[:, 3]

    def __len__(self):
        return self.obs.shape[0]


MIN_T = 16


def observables(data: TimeSeriesData) -> ModelData:
    """Build ``obs`` = (y_t, pi_t) and the lag design for every usable t.

    The first usable t needs pi_{t-4} and a defined real rate at t-2.
    """
    r = data.real_rate
    finite = np.flatnonzero(np.isfinite(r))
    if finite.size == 0:
        raise ValidationError("real rate undefined everywhere (need 4 inflation observations)")
    start = max(N_LAGS, int(finite[0]) + 2)
    n = len(data)
    if n - start < MIN_T:
        raise SeriesTooShort(f"{n - start} usable observations after lags, need at least {MIN_T}")
    y, pi = data.log_output, data.inflation
    t = np.arange(start, n)
    obs = np.column_stack([y[t], pi[t]])
    exog = np.column_stack([
        y[t - 1], y[t - 2], r[t - 1], r[t - 2],
        pi[t - 1], pi[t - 2], pi[t - 3], pi[t - 4], np.ones(t.size),
    ])
    if not np.all(np.isfinite(exog)):
        bad = int(np.argmax(~np.all(np.isfinite(exog), axis=1)))
        raise ValidationError(f"undefined lag inputs at {data.dates[start + bad]}")
    return ModelData(tuple(data.dates[start:]), obs, exog, start)


def hp_trend(y: np.ndarray, lamb: float = 36000.0) -> np.ndarray:
    from statsmodels.tsa.filters.hp_filter import hpfilter

    _, trend = hpfilter(np.asarray(y, float), lamb=lamb)
    return np.asarray(trend)


def default_init(variant: ModelVariant, data: TimeSeriesData, sd_ystar: float = 1.0, sd_g: float = 0.25,
                 sd_z: float = 1.0) -> InitSpec:
    """Heuristic prior centred on an HP trend of log output, z centred at 0.

    Replication runs should pass the prior used by the reference code instead.
    """
    md = observables(data)
    trend = hp_trend(data.log_output)
    growth = np.diff(trend, prepend=trend[0] - (trend[1] - trend[0]))
    s = md.start - 1  # state before the first observation is dated start-1
    mean = [trend[s], trend[s - 1], trend[s - 2], growth[s - 1], growth[s - 2], 0.0, 0.0]
    sd = [sd_ystar] * 3 + [sd_g] * 2 + [sd_z] * 2
    n = variant.n_state
    cov = np.diag(np.square(sd[:n]))
    return InitSpec(tuple(mean[:n]), tuple(map(tuple, cov)), "fixed-prior")


# ---------------------------------------------------------------------------
# simulation from the structural equations (used by tests and experiments)

@dataclass
class SimulatedPaths:
    data: TimeSeriesData
    ystar: np.ndarray
    g: np.ndarray
    z: np.ndarray
    ytilde: np.ndarray
    real_rate: np.ndarray
    shocks: dict = field(default_factory=dict)


def simulate_full_model(p: StageParams, n_periods: int, rng: np.random.Generator, *, burn_in: int = 100,
                        g0: float = 0.75, z0: float = 0.0, rate_gap_rho: float = 0.8,
                        rate_gap_sd: float = 0.5, pi0: float = 2.0, start: str = "1960:Q1") -> SimulatedPaths:
    """Simulate y*, g, z, output gap, inflation and the real rate directly.

    Arrays are indexed by calendar period; ``g[t]`` and ``z[t]`` are the
    period-t levels. The real rate tracks the lagged natural rate plus an
    AR(1) gap, and the nominal rate is set so that nominal minus expected
    inflation reproduces it exactly.
    """
    n = n_periods + burn_in
    shocks = {
        "ytilde": p.sigma_ytilde * rng.standard_normal(n),
        "pi": p.sigma_pi * rng.standard_normal(n),
        "ystar": p.sigma_ystar * rng.standard_normal(n),
        "g": p.sigma_g * rng.standard_normal(n),
        "z": p.sigma_z * rng.standard_normal(n),
        "rate": rate_gap_sd * rng.standard_normal(n),
    }
    ystar, g, z, yt, pi, r, gap = (np.zeros(n) for _ in range(7))
    g[:2] = g0
    z[:2] = z0
    pi[:4] = pi0
    r[:2] = 4 * g0 + z0
    for t in range(2, n):
        g[t - 1] = g[t - 2] + shocks["g"][t - 1]
        z[t - 1] = z[t - 2] + shocks["z"][t - 1]
        g[t] = g[t - 1]
        z[t] = z[t - 1]
        ystar[t] = ystar[t - 1] + g[t - 1] + shocks["ystar"][t]
        rgap1 = r[t - 1] - 4 * g[t - 1] - z[t - 1]
        rgap2 = r[t - 2] - 4 * g[t - 2] - z[t - 2]
        yt[t] = p.a_y1 * yt[t - 1] + p.a_y2 * yt[t - 2] + 0.5 * p.a_r * (rgap1 + rgap2) + shocks["ytilde"][t]
        if t >= 4:
            pi[t] = (p.b_pi * pi[t - 1] + (1 - p.b_pi) * (pi[t - 2] + pi[t - 3] + pi[t - 4]) / 3
                     + p.b_y * yt[t - 1] + shocks["pi"][t])
        gap[t] = rate_gap_rho * gap[t - 1] + shocks["rate"][t]
        r[t] = 4 * g[t - 1] + z[t - 1] + gap[t]
    keep = slice(burn_in, n)
    # expected inflation at the window start uses burn-in quarters
    pie = expected_inflation(pi)[keep]
    nominal = r[keep] + pie
    first = quarter_index(start)
    dates = tuple(quarter_from_index(first + i) for i in range(n_periods))
    data = TimeSeriesData(dates, (ystar + yt)[keep], pi[keep], nominal, expected_inflation=pie)
    return SimulatedPaths(
        data=data, ystar=ystar[keep], g=g[keep], z=z[keep], ytilde=yt[keep], real_rate=r[keep],
        shocks={k: v[keep] for k, v in shocks.items()},
    )
