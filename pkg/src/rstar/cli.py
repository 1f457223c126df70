"""Command-line driver: staged estimation, MUE comparison, look-up tables, recursive fits.

Run ``rstar <command> --help`` for the flags of each command. A JSON config
passed with ``--config`` overrides the corresponding flags. Paths inside a
config file are resolved relative to the file's directory.
"""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np
import pandas as pd
from scipy import stats as sps

from .errors import IoError, RstarError, ValidationError
from .mle import EstimationSpec, FitResult, default_starts, fit, fit_recursive, smoothed_fit, write_recursive_csv
from .models import InitSpec, ModelVariant, default_init
from .mue import (
    STATISTICS, BreakInputs, MueLookup, MueResult, SmoothedStates, estimate_lambda_z, load_shipped_lookup,
    lookup_mue, run_break_test, simulate_lookup,
)
from .timeseries_io import (
    STATE_COLUMNS, OUTPUT_FLOAT_FORMAT, TimeSeriesData, VariantOutput, load_country_csv, normalize_quarter,
    write_outputs,
)

PIPELINES = ("hlw-replication", "corrected", "both")
STAGE3_MODES = ("fix-both-lambdas", "mle-sigma-g-given-lambda-z", "mle-all")
STYLES = ("hlw", "sw")


@dataclass(frozen=True)
class Stage2Column:
    """One Stage-2 model column of the comparison tables."""

    key: str
    variant: ModelVariant
    mue_model: str | None  # None: fitted for the likelihood-ratio test only


def stage2_columns(trend_error: str = "iid") -> dict[str, Stage2Column]:
    return {
        "hlw-rfile": Stage2Column("hlw-rfile", ModelVariant("Stage2HLW", "MUE-implied", trend_error=trend_error),
                                  "hlw"),
        "hlw-mle": Stage2Column("hlw-mle", ModelVariant("Stage2HLW", trend_error=trend_error), "hlw"),
        "correct": Stage2Column("correct", ModelVariant("Stage2Correct"), "correct"),
        "correct-a0": Stage2Column("correct-a0", ModelVariant("Stage2CorrectPlusA0"), None),
    }


PIPELINE_COLUMNS = {
    "hlw-replication": ("hlw-rfile", "hlw-mle"),
    "corrected": ("correct", "correct-a0"),
}


@dataclass(frozen=True)
class LookupSource:
    source: str = "shipped"  # shipped | regenerate | file
    table: str = "sw-table3"
    n_reps: int = 5000
    seed: int = 42
    path: str | None = None

    def __post_init__(self):
        if self.source not in ("shipped", "regenerate", "file"):
            raise ValidationError(f"unknown look-up source {self.source!r}")
        if self.source == "file" and not self.path:
            raise ValidationError("look-up source 'file' needs a path")

    def load(self) -> MueLookup:
        if self.source == "shipped":
            return load_shipped_lookup(self.table)
        if self.source == "file":
            return MueLookup.read(self.path)
        return simulate_lookup(n_reps=self.n_reps, seed=self.seed)


@dataclass(frozen=True)
class OptimizerConfig:
    budget: int = 20_000
    tolerance: float = 1e-8
    n_restarts: int = 3
    seed: int = 0


@dataclass(frozen=True)
class RunConfig:
    """Everything ``rstar estimate`` and ``rstar recursive`` need.

    ``lambda_g`` plays the role of HLW's Stage-1 estimate and is required by
    the HLW replication pipeline. ``starts`` maps a Stage-2 column key or
    ``"stage3"`` to a list of start dicts; missing entries come from the
    data-driven heuristic.
    """

    data: str
    country: str = "US"
    window: tuple[str | None, str | None] | None = None
    pipeline: str = "both"
    stage3_modes: tuple[str, ...] = ("mle-sigma-g-given-lambda-z",)
    break_styles: tuple[str, ...] = STYLES
    lookup: LookupSource = LookupSource()
    out_dir: str = "out"
    lambda_g: float | None = None
    mue_statistic: str = "EW"
    trend_error: str = "iid"
    init: InitSpec | None = None
    constraints: Mapping[str, tuple[float, float]] = field(default_factory=dict)
    starts: Mapping[str, tuple[Mapping[str, float], ...]] = field(default_factory=dict)
    optimizer: OptimizerConfig = OptimizerConfig()

    def __post_init__(self):
        if self.pipeline not in PIPELINES:
            raise ValidationError(f"pipeline must be one of {PIPELINES}, got {self.pipeline!r}")
        if not self.break_styles:
            raise ValidationError("select at least one break style")
        bad = [s for s in self.break_styles if s not in STYLES]
        if bad:
            raise ValidationError(f"unknown break styles {bad}")
        if not self.stage3_modes:
            raise ValidationError("select at least one stage3 mode")
        bad = [m for m in self.stage3_modes if m not in STAGE3_MODES]
        if bad:
            raise ValidationError(f"unknown stage3 modes {bad}")
        if self.mue_statistic not in STATISTICS:
            raise ValidationError(f"mue_statistic must be one of {STATISTICS}")
        if "hlw-replication" in self.pipelines and self.lambda_g is None:
            raise ValidationError("the hlw-replication pipeline needs lambda_g (HLW's Stage-1 estimate)")
        if self.lambda_g is not None and not self.lambda_g >= 0:
            raise ValidationError("lambda_g must be >= 0")
        known = {*stage2_columns(), "stage3"}
        if set(self.starts) - known:
            raise ValidationError(f"unknown start keys {sorted(set(self.starts) - known)}")

    @property
    def pipelines(self) -> tuple[str, ...]:
        return ("hlw-replication", "corrected") if self.pipeline == "both" else (self.pipeline,)

    @property
    def columns(self) -> tuple[str, ...]:
        return tuple(c for p in self.pipelines for c in PIPELINE_COLUMNS[p])

    @classmethod
    def from_dict(cls, d: Mapping) -> "RunConfig":
        d = dict(d)
        names = {f.name for f in fields(cls)}
        if "stage3_mode" in d:
            d["stage3_modes"] = d.pop("stage3_mode")
        unknown = set(d) - names
        if unknown:
            raise ValidationError(f"unknown config keys {sorted(unknown)}")
        if "data" not in d or d["data"] is None:
            raise ValidationError("config needs a data path")
        for key in ("stage3_modes", "break_styles"):
            if isinstance(d.get(key), str):
                d[key] = (d[key],)
            if key in d:
                d[key] = tuple(d[key])
        if d.get("window") is not None:
            w = tuple(d["window"])
            if len(w) != 2:
                raise ValidationError("window must be [start, end]")
            d["window"] = w
        try:
            if isinstance(d.get("lookup"), Mapping):
                d["lookup"] = LookupSource(**d["lookup"])
            if isinstance(d.get("optimizer"), Mapping):
                d["optimizer"] = OptimizerConfig(**d["optimizer"])
        except TypeError as e:
            raise ValidationError(str(e)) from None
        if isinstance(d.get("init"), Mapping):
            d["init"] = InitSpec.from_dict(d["init"])
        if "constraints" in d:
            d["constraints"] = {k: tuple(map(float, v)) for k, v in dict(d["constraints"]).items()}
        if "starts" in d:
            d["starts"] = {k: tuple(dict(s) for s in ([v] if isinstance(v, Mapping) else v))
                           for k, v in dict(d["starts"]).items()}
        return cls(**d)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["init"] = None if self.init is None else self.init.to_dict()
        return d


def load_config(path: str | None, overrides: Mapping | None = None) -> RunConfig:
    """Flags in ``overrides`` first, then the JSON file on top."""
    d = {k: v for k, v in (overrides or {}).items() if v is not None}
    if path is not None:
        p = Path(path)
        try:
            loaded = json.loads(p.read_text())
        except FileNotFoundError:
            raise IoError(f"no such config file: {p}") from None
        except OSError as e:
            raise IoError(str(e)) from None
        except json.JSONDecodeError as e:
            raise ValidationError(f"config {p} is not valid JSON: {e}") from None
        if not isinstance(loaded, dict):
            raise ValidationError("config must be a JSON object")
        base = p.resolve().parent
        for key in ("data", "out_dir"):
            if isinstance(loaded.get(key), str):
                loaded[key] = str(base / loaded[key])
        lk = loaded.get("lookup")
        if isinstance(lk, dict) and isinstance(lk.get("path"), str):
            loaded["lookup"] = {**lk, "path": str(base / lk["path"])}
        d.update(loaded)
    return RunConfig.from_dict(d)


# ---------------------------------------------------------------------------
# estimation pipeline

def _starts(cfg: RunConfig, key: str, spec_free: Sequence[str], guess: Mapping[str, float],
            extra: Sequence[Mapping[str, float]] = ()) -> tuple[dict, ...]:
    out = []
    for s in (*cfg.starts.get(key, ()), *extra):
        out.append({n: float(s.get(n, guess[n])) for n in spec_free})
    out.append({n: float(guess[n]) for n in spec_free})
    return tuple(out)


def _spec(cfg: RunConfig, variant: ModelVariant, key: str, data: TimeSeriesData, fixed: Mapping[str, float] = (),
          extra_starts: Sequence[Mapping[str, float]] = ()) -> EstimationSpec:
    fixed = dict(fixed)
    free = tuple(n for n in variant.estimable if n not in fixed)
    guess = default_starts(variant, data)
    init = cfg.init.for_states(variant.n_state) if cfg.init is not None else None
    o = cfg.optimizer
    return EstimationSpec(variant, free, fixed, starts=_starts(cfg, key, free, guess, extra_starts),
                          optimizer_budget=o.budget, tolerance=o.tolerance, n_restarts=o.n_restarts, seed=o.seed,
                          constraints=cfg.constraints, init=init)


def fit_stage2(cfg: RunConfig, column: Stage2Column, data: TimeSeriesData) -> FitResult:
    fixed = {"lambda_g": cfg.lambda_g} if column.variant.sigma_g_mode == "MUE-implied" else {}
    return fit(_spec(cfg, column.variant, column.key, data, fixed), data)


def state_frame(result: FitResult, variant: ModelVariant, data: TimeSeriesData) -> pd.DataFrame:
    """Filtered and smoothed r* = 4g + z, annualised g, z and the output gap.

    The state dated t holds g_{t-1} and z_{t-1}; as in HLW's code these are
    reported at date t. For filtered values that equals E[g_t | data to t].
    """
    md, fo = smoothed_fit(result, variant, data)
    out = {"date": list(md.dates)}
    for tag, means in (("filtered", fo.filtered_mean), ("smoothed", fo.smoothed_mean)):
        g = 4.0 * means[:, 3]
        z = means[:, 5]
        out[f"rstar_{tag}"] = g + z
        out[f"g_{tag}"] = g
        out[f"z_{tag}"] = z
        out[f"ytilde_{tag}"] = md.y - means[:, 0]
    return pd.DataFrame(out)[list(STATE_COLUMNS)]


def _stage3_variant(mode: str) -> ModelVariant:
    if mode == "fix-both-lambdas":
        return ModelVariant("Full", "MUE-implied", "MUE-implied")
    if mode == "mle-sigma-g-given-lambda-z":
        return ModelVariant("Full", "MLE-free", "MUE-implied")
    return ModelVariant("Full", "MLE-free", "MLE-free")


def fit_stage3(cfg: RunConfig, mode: str, data: TimeSeriesData, stage2: FitResult, lambda_g: float,
               lambda_z: float) -> FitResult:
    v = _stage3_variant(mode)
    fixed = {}
    if v.sigma_g_mode == "MUE-implied":
        fixed["lambda_g"] = lambda_g
    if v.sigma_z_mode == "MUE-implied":
        fixed["lambda_z"] = lambda_z
    warm = {**stage2.params.to_dict(), "sigma_z": max(stage2.params.sigma_g, 0.05)}
    return fit(_spec(cfg, v, "stage3", data, fixed, extra_starts=(warm,)), data)


def _pick_style(cfg: RunConfig, preferred: str) -> str:
    return preferred if preferred in cfg.break_styles else cfg.break_styles[0]


@dataclass
class EstimateRun:
    """Accumulates results so a failure can still write what was computed."""

    config: RunConfig
    outputs: dict[str, VariantOutput] = field(default_factory=dict)
    stage2: dict[str, FitResult] = field(default_factory=dict)
    mue: dict[tuple[str, str], MueResult] = field(default_factory=dict)
    stage3: dict[str, dict] = field(default_factory=dict)
    T: int | None = None
    sample: tuple[str, str] | None = None

    def mue_frame(self) -> pd.DataFrame:
        rows = []
        for (col, style), res in self.mue.items():
            for stat, est in res.estimates.items():
                rows.append({"model": col, "style": style, "statistic": stat, "value": est.value,
                             "p_value": est.p_value, "lambda": est.lambda_hat, "lambda_z": est.lambda_z,
                             "ci90_lo": est.ci90[0], "ci90_hi": est.ci90[1], "extrapolated": est.extrapolated,
                             "T": est.T})
        cols = ["model", "style", "statistic", "value", "p_value", "lambda", "lambda_z", "ci90_lo", "ci90_hi",
                "extrapolated", "T"]
        return pd.DataFrame(rows, columns=cols)

    def write(self, suffix: str = "") -> list[Path]:
        out_dir = Path(self.config.out_dir)
        paths = write_outputs(self.outputs, out_dir, suffix)
        path = out_dir / f"mue_table.csv{suffix}"
        try:
            self.mue_frame().to_csv(path, index=False, float_format=OUTPUT_FLOAT_FORMAT, lineterminator="\n")
        except OSError as e:
            raise IoError(str(e)) from e
        paths.append(path)
        if not suffix:
            for p in paths:
                Path(f"{p}.partial").unlink(missing_ok=True)
        return paths


def _stage3_labels(cfg: RunConfig) -> list[tuple[str, str, str]]:
    """(output label, pipeline, stage3 mode) triples."""
    out = []
    for pipe in cfg.pipelines:
        if pipe == "hlw-replication":
            out.append(("hlw-replication", pipe, "fix-both-lambdas"))
        else:
            for mode in cfg.stage3_modes:
                label = "corrected" if len(cfg.stage3_modes) == 1 else f"corrected-{mode}"
                out.append((label, pipe, mode))
    return out


def run_estimate(cfg: RunConfig, run: EstimateRun | None = None, table: MueLookup | None = None) -> EstimateRun:
    """Stage 2 fits, MUE per column and style, Stage 3 and state extraction."""
    run = run or EstimateRun(cfg)
    data = load_country_csv(cfg.data, cfg.window)
    run.sample = (data.dates[0], data.dates[-1])
    labels = _stage3_labels(cfg)
    for label, pipe, mode in labels:
        run.outputs[label] = VariantOutput(params={"country": cfg.country, "pipeline": pipe, "stage3_mode": mode,
                                                   "sample": list(run.sample), "stage2": {}, "mue": {}})
    table = table or cfg.lookup.load()
    cols = stage2_columns(cfg.trend_error)
    owners = {c: [lab for lab, pipe, _ in labels if c in PIPELINE_COLUMNS[pipe]] for c in cfg.columns}

    for key in cfg.columns:
        col = cols[key]
        res = fit_stage2(cfg, col, data)
        run.stage2[key] = res
        for lab in owners[key]:
            run.outputs[lab].params["stage2"][key] = {"variant": col.variant.tag, **res.to_dict()}
        if col.mue_model is None:
            continue
        md, fo = smoothed_fit(res, col.variant, data)
        run.T = md.obs.shape[0]
        states = SmoothedStates.from_state_means(md, fo.smoothed_mean)
        for style in cfg.break_styles:
            mue = estimate_lambda_z(col.mue_model, style, res.params, states, md, table)
            run.mue[(key, style)] = mue
            for lab in owners[key]:
                run.outputs[lab].params["mue"][f"{key}/{style}"] = mue.to_dict()
                run.outputs[lab].ftau[f"{key}/{style}"] = mue.breaks.ftau_frame(f"{key}/{style}")

    if "correct" in run.stage2 and "correct-a0" in run.stage2:
        lr = 2.0 * (run.stage2["correct-a0"].log_likelihood - run.stage2["correct"].log_likelihood)
        test = {"statistic": lr, "df": 1, "p_value": float(sps.chi2.sf(max(lr, 0.0), 1))}
        for lab in owners["correct"]:
            run.outputs[lab].params["lr_test_a0"] = test

    stat = cfg.mue_statistic
    for label, pipe, mode in labels:
        if pipe == "hlw-replication":
            src, style = "hlw-rfile", _pick_style(cfg, "hlw")
            lam_g = cfg.lambda_g
        else:
            src, style = "correct", _pick_style(cfg, "sw")
            p2 = run.stage2["correct"].params
            lam_g = cfg.lambda_g if cfg.lambda_g is not None else (
                p2.sigma_g / p2.sigma_ystar if p2.sigma_ystar > 0 else 0.0)
        lam_z = run.mue[(src, style)].estimates[stat].lambda_z
        res = fit_stage3(cfg, mode, data, run.stage2[src], lam_g, lam_z)
        v = _stage3_variant(mode)
        states = state_frame(res, v, data)
        run.outputs[label].states = states
        info = {"variant": v.tag, "sigma_g_mode": v.sigma_g_mode, "sigma_z_mode": v.sigma_z_mode,
                "lambda_z_source": {"model": src, "style": style, "statistic": stat},
                "lambda_g": lam_g if v.sigma_g_mode == "MUE-implied" else None,
                "lambda_z": lam_z if v.sigma_z_mode == "MUE-implied" else None, **res.to_dict()}
        end = {"date": states["date"].iloc[-1], "rstar_filtered": float(states["rstar_filtered"].iloc[-1]),
               "rstar_smoothed": float(states["rstar_smoothed"].iloc[-1])}
        run.outputs[label].params["stage3"] = info
        run.outputs[label].params["end_of_sample"] = end
        run.stage3[label] = {"fit": res, "end": end, "lambda_z": lam_z, "mode": mode}
    return run


def format_summary(run: EstimateRun) -> str:
    cfg = run.config
    lines = [f"{cfg.country} {run.sample[0]}..{run.sample[1]}  (T={run.T})", ""]
    mue_cols = [c for c in cfg.columns if stage2_columns()[c].mue_model]
    lines.append("lambda_z (median-unbiased)".ljust(22) + "".join(c.rjust(12) for c in mue_cols))
    for style in cfg.break_styles:
        for stat in STATISTICS:
            cells = []
            for c in mue_cols:
                r = run.mue.get((c, style))
                cells.append(f"{r.estimates[stat].lambda_z:12.6f}" if r else " " * 11 + "-")
            lines.append(f"  {style}-style {stat}".ljust(22) + "".join(cells))
    tests = [o.params["lr_test_a0"] for o in run.outputs.values() if "lr_test_a0" in o.params]
    if tests:
        t = tests[0]
        lines += ["", f"LR test a_0 = 0 (Correct vs Correct+a0): {t['statistic']:.4f}, p = {t['p_value']:.4f}"]
    width = max([len(f"  {lab} [{s['mode']}]") for lab, s in run.stage3.items()] + [10]) + 2
    lines += ["", "Stage 3".ljust(width) + "lambda_z".rjust(10) + "sigma_g".rjust(10) + "sigma_z".rjust(10)
              + "  r* end (filtered)  r* end (smoothed)"]
    for label, s in run.stage3.items():
        p = s["fit"].params
        lines.append(f"  {label} [{s['mode']}]".ljust(width) + f"{s['lambda_z']:10.6f}{p.sigma_g:10.5f}"
                     f"{p.sigma_z:10.5f}  {s['end']['rstar_filtered']:18.4f} {s['end']['rstar_smoothed']:18.4f}"
                     f"  ({s['end']['date']})")
    return "\n".join(lines)


def cmd_estimate(cfg: RunConfig, table: MueLookup | None = None, stream=sys.stdout) -> tuple[int, list[Path]]:
    run = EstimateRun(cfg)
    try:
        run_estimate(cfg, run, table)
    except RstarError as e:
        print(f"error: {e}", file=sys.stderr)
        paths = []
        if run.outputs:
            try:
                paths = run.write(".partial")
            except RstarError as e2:
                print(f"error writing partial outputs: {e2}", file=sys.stderr)
        return e.exit_code, paths
    paths = run.write()
    print(format_summary(run), file=stream)
    print("\nwrote " + ", ".join(str(p) for p in paths), file=stream)
    return 0, paths


# ---------------------------------------------------------------------------
# other commands

def cmd_simulate_lookup(n_reps: int, seed: int, out, T_sim: int = 500, lambda_max: int = 30,
                        stream=sys.stdout) -> int:
    table = simulate_lookup(T_sim=T_sim, n_reps=n_reps, lambda_grid=range(lambda_max + 1), seed=seed)
    out = Path(out)
    try:
        out.parent.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise IoError(str(e)) from e
    paths = table.write(out)
    print("lambda=0 medians: " + ", ".join(f"{s} {table.median[s][0]:.4f}" for s in table.statistics), file=stream)
    print("wrote " + ", ".join(map(str, paths)), file=stream)
    return 0


RECURSIVE_LEAD = ("sigma_g", "sigma_z")


def run_recursive(cfg: RunConfig, first_end: str, last_end: str | None = None):
    """Expanding-window fits of the full model with sigma_g and sigma_z free; returns (fits, names)."""
    data = load_country_csv(cfg.data, cfg.window)
    v = ModelVariant("Full")
    spec = _spec(cfg, v, "stage3", data)
    init_fn = None if cfg.init is not None else (lambda d: default_init(v, d))
    names = (*RECURSIVE_LEAD, *(n for n in spec.free_params if n not in RECURSIVE_LEAD))
    try:
        return fit_recursive(spec, data, first_end, last_end, init_fn), names
    except RstarError as e:
        e.names = names
        raise


def cmd_recursive(cfg: RunConfig, first_end: str, last_end: str | None = None, out=None,
                  stream=sys.stdout) -> int:
    out = Path(out) if out is not None else Path(cfg.out_dir) / f"recursive_{cfg.country}.csv"
    try:
        out.parent.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise IoError(str(e)) from e
    try:
        fits, names = run_recursive(cfg, first_end, last_end)
    except RstarError as e:
        done = getattr(e, "completed", None)
        if done:
            write_recursive_csv(done, f"{out}.partial", e.names)
        raise
    write_recursive_csv(fits, out, names)
    Path(f"{out}.partial").unlink(missing_ok=True)
    print(f"{len(fits)} windows {fits[0].window_end}..{fits[-1].window_end}; wrote {out}", file=stream)
    return 0


def cmd_break_test(input_path, style: str, grid: str | None = None, out=None, include_intercept: bool = True,
                   table: MueLookup | None = None, stream=sys.stdout) -> int:
    """Raw F(tau) and statistics for a user series.

    The CSV needs a ``y`` column; further numeric columns (other than
    ``date``) are extra regressors for the HLW style and ignored by the SW style.
    """
    path = Path(input_path)
    try:
        frame = pd.read_csv(path)
    except FileNotFoundError:
        raise IoError(f"no such file: {path}") from None
    except (OSError, pd.errors.ParserError) as e:
        raise IoError(str(e)) from None
    if "y" not in frame.columns:
        raise ValidationError("break-test input needs a 'y' column")
    y = frame["y"].to_numpy(float)
    extra_cols = [c for c in frame.columns if c not in ("y", "date")]
    X = frame[extra_cols].to_numpy(float) if extra_cols else None
    if not np.all(np.isfinite(y)) or (X is not None and not np.all(np.isfinite(X))):
        raise ValidationError("break-test input contains missing values")
    dates = [normalize_quarter(d) for d in frame["date"]] if "date" in frame.columns else \
        [str(i + 1) for i in range(y.size)]
    if style == "sw" and extra_cols:
        print(f"note: sw style ignores columns {extra_cols}", file=sys.stderr)
    inputs = BreakInputs("user", y, y, X, include_intercept)
    res = run_break_test(inputs, style, dates, grid)
    table = table or load_shipped_lookup()
    T = y.size
    print(f"T={T} style={style} grid={res.grid.convention} tau={res.grid.tau0}..{res.grid.tau1}", file=stream)
    for stat, value in res.statistics.items():
        est = lookup_mue(stat, value, table, T)
        p = "n/a" if est.p_value is None else f"{est.p_value:.4f}"
        print(f"  {stat:4s} {value:12.6f}  p={p}  lambda={est.lambda_hat:8.4f}  lambda/T={est.lambda_z:.6f}",
              file=stream)
    if out is not None:
        try:
            res.ftau_frame(f"{style}/{res.grid.convention}").to_csv(out, index=False,
                                                                     float_format=OUTPUT_FLOAT_FORMAT)
        except OSError as e:
            raise IoError(str(e)) from e
        print(f"wrote {out}", file=stream)
    return 0


# ---------------------------------------------------------------------------
# argument parsing

def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="rstar", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    def run_flags(p):
        p.add_argument("--config", help="JSON run config (overrides flags)")
        p.add_argument("--data", help="country CSV: date,gdp.log,inflation,interest")
        p.add_argument("--country")
        p.add_argument("--out-dir", dest="out_dir")
        p.add_argument("--window-start")
        p.add_argument("--window-end")
        p.add_argument("--lambda-g", dest="lambda_g", type=float)

    p = sub.add_parser("estimate", help="staged estimation and MUE comparison")
    run_flags(p)
    p.add_argument("--pipeline", choices=PIPELINES)
    p.add_argument("--stage3-mode", dest="stage3_mode", action="append", choices=STAGE3_MODES)
    p.add_argument("--break-styles", help="comma-separated subset of hlw,sw")
    p.add_argument("--lookup-source", choices=("shipped", "regenerate", "file"))
    p.add_argument("--lookup-path")

    p = sub.add_parser("simulate-lookup", help="regenerate the MUE look-up table")
    p.add_argument("--reps", type=int, default=5000)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--out", default="lookup.csv")
    p.add_argument("--T", dest="T_sim", type=int, default=500)
    p.add_argument("--lambda-max", type=int, default=30)

    p = sub.add_parser("recursive", help="expanding-window ML fits of the full model")
    run_flags(p)
    p.add_argument("--first-end", required=True)
    p.add_argument("--last-end")
    p.add_argument("--out")

    p = sub.add_parser("break-test", help="F(tau) sequence and statistics for a series")
    p.add_argument("--input", required=True)
    p.add_argument("--style", choices=STYLES, required=True)
    p.add_argument("--grid", choices=STYLES)
    p.add_argument("--out")
    p.add_argument("--no-intercept", action="store_true")
    return ap


def _flag_overrides(args) -> dict:
    d = {k: getattr(args, k, None) for k in ("data", "country", "out_dir", "lambda_g", "pipeline")}
    if getattr(args, "window_start", None) or getattr(args, "window_end", None):
        d["window"] = (args.window_start, args.window_end)
    if getattr(args, "stage3_mode", None):
        d["stage3_modes"] = tuple(args.stage3_mode)
    if getattr(args, "break_styles", None) is not None:
        d["break_styles"] = tuple(s for s in args.break_styles.split(",") if s.strip())
    if getattr(args, "lookup_source", None):
        d["lookup"] = {"source": args.lookup_source, "path": args.lookup_path}
    return d


def main(argv: Sequence[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    try:
        if args.command == "estimate":
            code, _ = cmd_estimate(load_config(args.config, _flag_overrides(args)))
            return code
        if args.command == "simulate-lookup":
            return cmd_simulate_lookup(args.reps, args.seed, args.out, args.T_sim, args.lambda_max)
        if args.command == "recursive":
            return cmd_recursive(load_config(args.config, _flag_overrides(args)), args.first_end, args.last_end,
                                 args.out)
        return cmd_break_test(args.input, args.style, args.grid, args.out, not args.no_intercept)
    except RstarError as e:
        print(f"error: {e}", file=sys.stderr)
        return e.exit_code


if __name__ == "__main__":
    sys.exit(main())
