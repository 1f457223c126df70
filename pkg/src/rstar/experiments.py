"""Monte-Carlo comparison of the corrected and HLW Stage-2 MUE pipelines.

Each replication simulates the full model with a chosen lambda_z, fits both
Stage-2 models by ML (sigma_g free), smooths, and maps each pipeline's break
statistics to lambda_z. Two oracle columns isolate where bias enters: the
corrected pipeline evaluated at the true states, and at the true parameters
with smoothed states.
"""
from __future__ import annotations

import time
from dataclasses import asdict, dataclass, field

import numpy as np
import pandas as pd

from .errors import RstarError
from .mle import EstimationSpec, fit, smoothed_fit
from .models import ModelVariant, StageParams, build, default_init, observables, simulate_full_model
from .mue import STATISTICS, MueLookup, SmoothedStates, estimate_lambda_z, load_shipped_lookup
from .ssm import kalman_filter, kalman_smoother

# US-like magnitudes (HLW 2017 Stage-3 scale); sigma_z is set from lambda_z
THESIS_PARAMS = StageParams(a_y1=1.53, a_y2=-0.59, a_r=-0.071, b_pi=0.67, b_y=0.079, sigma_ytilde=0.354,
                            sigma_pi=0.786, sigma_ystar=0.575, sigma_g=0.03)

PIPELINES = (
    ("correct", "Stage2Correct", "sw"),
    ("correct", "Stage2Correct", "hlw"),
    ("hlw", "Stage2HLW", "hlw"),
    ("hlw", "Stage2HLW", "sw"),
)


@dataclass(frozen=True)
class ThesisConfig:
    T: int = 220
    lambda_z: float = 0.03
    n_reps: int = 200
    seed: int = 2024
    params: StageParams = THESIS_PARAMS
    n_restarts: int = 1
    optimizer_budget: int = 20_000
    oracles: bool = True

    def true_params(self) -> StageParams:
        p = self.params
        return StageParams(**{**p.to_dict(), "sigma_z": self.lambda_z * p.sigma_ytilde / abs(p.a_r)})

    def to_dict(self) -> dict:
        d = asdict(self)
        d["params"] = self.true_params().to_dict()
        return d


def _col(model: str, style: str, stat: str) -> str:
    return f"{model}_{style}_{stat}"


def thesis_replication(rep: int, cfg: ThesisConfig, table: MueLookup) -> dict:
    """One replication: lambda_z estimates keyed ``<model>_<style>_<stat>``."""
    p = cfg.true_params()
    rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, rep]))
    # 4 presample quarters feed the lags
    sim = simulate_full_model(p, cfg.T + 4, rng)
    md = observables(sim.data)
    row: dict = {"rep": rep}
    truth = {**p.to_dict(), "a_0": 0.0, "a_g": -4.0 * p.a_r}
    fits = {}
    for tag in ("Stage2Correct", "Stage2HLW"):
        v = ModelVariant(tag)
        free = v.estimable
        spec = EstimationSpec(v, free, {}, starts=({n: truth[n] for n in free},), n_restarts=cfg.n_restarts,
                              optimizer_budget=cfg.optimizer_budget, seed=cfg.seed + rep)
        try:
            res = fit(spec, sim.data)
            fits[tag] = (res, *smoothed_fit(res, v, sim.data))
            row[f"{tag}_loglik"] = res.log_likelihood
        except RstarError as e:
            row[f"{tag}_error"] = type(e).__name__
    for model, tag, style in PIPELINES:
        if tag not in fits:
            continue
        res, md_fit, fo = fits[tag]
        states = SmoothedStates.from_state_means(md_fit, fo.smoothed_mean)
        try:
            out = estimate_lambda_z(model, style, res.params, states, md_fit, table)
        except RstarError as e:
            row[f"{model}_{style}_error"] = type(e).__name__
            continue
        for stat in STATISTICS:
            row[_col(model, style, stat)] = out.estimates[stat].lambda_z
    if cfg.oracles:
        idx = np.arange(md.start, len(sim.data))
        true_states = SmoothedStates(sim.ytilde[idx], sim.ytilde[idx - 1], sim.ytilde[idx - 2], sim.g[idx - 1],
                                     sim.g[idx - 2])
        oracle = estimate_lambda_z("correct", "sw", p, true_states, md, table)
        v = ModelVariant("Stage2Correct")
        m = build(v, p, default_init(v, sim.data))
        fo = kalman_smoother(kalman_filter(m, md.obs, md.exog), m)
        at_truth = estimate_lambda_z("correct", "sw", p, SmoothedStates.from_state_means(md, fo.smoothed_mean),
                                     md, table)
        for stat in STATISTICS:
            row[f"oracle_states_{stat}"] = oracle.estimates[stat].lambda_z
            row[f"oracle_params_{stat}"] = at_truth.estimates[stat].lambda_z
    return row


@dataclass
class ThesisResult:
    config: ThesisConfig
    reps: pd.DataFrame
    seconds: float
    summary: dict = field(default_factory=dict)

    def median(self, column: str) -> float:
        return float(self.reps[column].median(skipna=True))

    def n_failed(self, column: str) -> int:
        return int(self.reps[column].isna().sum()) if column in self.reps else len(self.reps)


def run_thesis_experiment(cfg: ThesisConfig = ThesisConfig(), table: MueLookup | None = None,
                          progress=None) -> ThesisResult:
    table = table or load_shipped_lookup()
    t0 = time.perf_counter()
    rows = []
    for rep in range(cfg.n_reps):
        rows.append(thesis_replication(rep, cfg, table))
        if progress is not None:
            progress(rep, rows[-1])
    frame = pd.DataFrame(rows)
    result = ThesisResult(cfg, frame, time.perf_counter() - t0)
    for col in frame.columns:
        if col.endswith(STATISTICS) and frame[col].dtype.kind == "f":
            result.summary[col] = {"median": float(frame[col].median()), "n_missing": int(frame[col].isna().sum())}
    return result
