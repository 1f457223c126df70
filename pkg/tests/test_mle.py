import math

import numpy as np
import pytest

from rstar.errors import LikelihoodUndefined, NoConvergence, ValidationError
from rstar.mle import (
    EstimationSpec, fit, fit_recursive, maximize_likelihood, to_internal, to_natural, write_recursive_csv,
)
from rstar.models import ModelVariant, StageParams, build, default_init, observables, simulate_full_model
from rstar.ssm import kalman_filter, local_level, simulate

TRUE = StageParams(a_y1=1.2, a_y2=-0.3, a_r=-0.1, b_pi=0.6, b_y=0.1, sigma_ytilde=0.4, sigma_pi=0.7,
                   sigma_ystar=0.5, sigma_g=0.05, sigma_z=0.0)


def _local_level_loglik(obs):
    def ll(point):
        return kalman_filter(local_level(point["sigma_level"], 1.0), obs).log_likelihood
    return ll


@pytest.fixture(scope="module")
def local_level_data():
    rng = np.random.default_rng(0)
    _, obs = simulate(local_level(1.0, 1.0, init_mode="fixed-prior"), 2000, rng)
    return obs


def test_local_level_sigma_consistent(local_level_data):
    ll = _local_level_loglik(local_level_data)
    best, val, _ = maximize_likelihood(ll, [{"sigma_level": 0.3}], {"sigma_level": "log"}, n_restarts=1)
    assert 0.9 < best["sigma_level"] < 1.1
    grid = np.linspace(0.8, 1.2, 81)
    oracle = grid[np.argmax([ll({"sigma_level": s}) for s in grid])]
    assert abs(best["sigma_level"] - oracle) <= 0.005 + 1e-12
    assert val >= max(ll({"sigma_level": s}) for s in grid) - 1e-9


def test_monotone_improvement(local_level_data):
    ll = _local_level_loglik(local_level_data[:300])
    starts = [{"sigma_level": s} for s in (0.05, 0.5, 3.0)]
    _, val, report = maximize_likelihood(ll, starts, {"sigma_level": "log"})
    assert all(val >= r.loglik_start for r in report.runs)
    assert val == max(r.loglik_end for r in report.runs)
    assert len(report.runs) == 3 + 3


def test_transform_round_trip():
    assert to_natural("sigma_g", to_internal("sigma_g", 0.3, "log"), "log") == pytest.approx(0.3)
    assert to_natural("sigma_g", to_internal("sigma_g", 0.0, "log"), "log") == 0.0
    assert to_natural("a_r", to_internal("a_r", -0.2, "identity"), "identity") == -0.2


def test_likelihood_undefined():
    with pytest.raises(LikelihoodUndefined):
        maximize_likelihood(lambda p: -math.inf, [{"x": 1.0}], {"x": "identity"})


def test_no_convergence_carries_result():
    def ll(p):
        return -(p["x"] - 3.0) ** 2 - (p["y"] + 1.0) ** 2

    with pytest.raises(NoConvergence) as info:
        maximize_likelihood(ll, [{"x": 0.0, "y": 0.0}], {"x": "identity", "y": "identity"}, budget=8,
                            n_restarts=0)
    best, val, report = info.value.result
    assert set(best) == {"x", "y"} and not report.converged


@pytest.fixture(scope="module")
def sim_data():
    return simulate_full_model(TRUE, 164, np.random.default_rng(3)).data


def _stage2_spec(a_r_start=-0.05, **kw):
    v = ModelVariant("Stage2Correct")
    fixed = {k: getattr(TRUE, k) for k in ("a_y1", "a_y2", "b_pi", "b_y", "sigma_pi")}
    free = ("a_r", "sigma_ytilde", "sigma_ystar", "sigma_g")
    start = {"a_r": a_r_start, "sigma_ytilde": 0.3, "sigma_ystar": 0.4, "sigma_g": 0.1}
    return EstimationSpec(v, free, fixed, starts=(start,), **kw)


def test_fit_stage2_reproducible_and_nonnegative(sim_data):
    a = fit(_stage2_spec(seed=5), sim_data)
    b = fit(_stage2_spec(seed=5), sim_data)
    assert a.params == b.params and a.log_likelihood == b.log_likelihood
    assert all(getattr(a.params, n) >= 0 for n in ("sigma_ytilde", "sigma_ystar", "sigma_g"))
    assert a.log_likelihood >= max(r.loglik_start for r in a.report.runs) - 1e-9
    md = observables(sim_data)
    direct = kalman_filter(build(ModelVariant("Stage2Correct"), a.params, a.init), md.obs, md.exog)
    assert a.log_likelihood == pytest.approx(direct.log_likelihood, abs=1e-9)


def test_zero_free_parameters(sim_data):
    v = ModelVariant("Stage2Correct")
    spec = EstimationSpec(v, (), {n: getattr(TRUE, n) for n in v.estimable})
    res = fit(spec, sim_data)
    md = observables(sim_data)
    init = default_init(v, sim_data)
    expect = kalman_filter(build(v, TRUE, init), md.obs, md.exog).log_likelihood
    assert res.log_likelihood == expect and res.report.n_evals == 0


def test_spec_validation():
    v = ModelVariant("Stage2Correct")
    with pytest.raises(ValidationError):
        EstimationSpec(v, ("a_r",), {})
    with pytest.raises(ValidationError):
        EstimationSpec.for_variant(v, {"a_r": 0.1}, transform={"sigma_g": "identity"})
    with pytest.raises(ValidationError):
        EstimationSpec(v, v.estimable, {"a_r": 0.0})
    full = ModelVariant("Full", sigma_z_mode="MUE-implied")
    assert "lambda_z" not in EstimationSpec.for_variant(full, {"lambda_z": 0.01}).free_params


def test_constraints_respected(sim_data):
    res = fit(_stage2_spec(a_r_start=-0.3, constraints={"a_r": (-1.0, -0.2)}), sim_data)
    assert -1.0 <= res.params.a_r <= -0.2
    with pytest.raises(LikelihoodUndefined):
        fit(_stage2_spec(constraints={"a_r": (-1.0, -0.2)}), sim_data)


def test_sigma_z_piles_up_at_zero():
    """True sigma_z = 0: ML estimates hit the boundary with positive probability."""
    v = ModelVariant("Full")
    fixed = {n: getattr(TRUE, n) for n in v.estimable if n != "sigma_z"}
    zeros = 0
    n_reps = 200
    for rep in range(n_reps):
        data = simulate_full_model(TRUE, 104, np.random.default_rng(1000 + rep)).data
        spec = EstimationSpec(v, ("sigma_z",), fixed, starts=({"sigma_z": 0.05},), n_restarts=1, seed=rep)
        zeros += fit(spec, data).params.sigma_z < 1e-6
    assert zeros / n_reps > 0.25


def test_recursive_two_windows(sim_data, tmp_path):
    spec = _stage2_spec(n_restarts=1)
    ends = sim_data.dates[-2:]
    fits = fit_recursive(spec, sim_data, ends[0], init_fn=lambda d: default_init(spec.variant, d))
    assert [f.window_end for f in fits] == list(ends)
    first = fits[0].result.params.to_dict()
    assert fits[0].warm_start is None
    assert fits[1].warm_start == {n: first[n] for n in spec.free_params}
    path = write_recursive_csv(fits, tmp_path / "rec.csv", names=spec.free_params)
    lines = path.read_text().splitlines()
    assert lines[0] == "window_end,a_r,sigma_ytilde,sigma_ystar,sigma_g,loglik"
    assert len(lines) == 3


def test_recursive_first_window_too_short(sim_data):
    with pytest.raises(ValidationError):
        fit_recursive(_stage2_spec(), sim_data, sim_data.dates[20])
