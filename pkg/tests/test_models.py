import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rstar.errors import InvalidParams
from rstar.models import (
    InitSpec, ModelVariant, StageParams, build, build_full_model, build_stage2_correct, build_stage2_hlw,
    check_implied, default_init, observables, resolve, simulate_full_model,
)
from rstar.ssm import kalman_filter

US_LIKE = StageParams(a_y1=1.53, a_y2=-0.59, a_r=-0.071, b_pi=0.67, b_y=0.079, sigma_ytilde=0.354,
                      sigma_pi=0.786, sigma_ystar=0.575, sigma_g=0.03, sigma_z=0.15)


def true_states(sim, idx):
    """Full-model state vector at calendar index ``idx``."""
    return np.array([sim.ystar[idx], sim.ystar[idx - 1], sim.ystar[idx - 2], sim.g[idx - 1],
                     sim.g[idx - 2], sim.z[idx - 1], sim.z[idx - 2]])


param_strategy = st.builds(
    StageParams,
    a_y1=st.floats(-1.5, 1.5), a_y2=st.floats(-0.9, 0.9), a_r=st.floats(-0.5, 0.5),
    a_0=st.floats(-1, 1), a_g=st.floats(-1, 1), b_pi=st.floats(0, 1), b_y=st.floats(-0.5, 0.5),
    sigma_ytilde=st.floats(0.1, 1), sigma_pi=st.floats(0.1, 1), sigma_ystar=st.floats(0.1, 1),
    sigma_g=st.floats(0, 0.2), sigma_z=st.floats(0, 0.3),
)


def _residuals(model, md, states):
    obs_res = md.obs - states @ model.obs_load.T - md.exog @ model.obs_exog.T
    trans_res = states[1:] - states[:-1] @ model.trans.T
    return obs_res, trans_res


@settings(max_examples=30, deadline=None)
@given(p=param_strategy, seed=st.integers(0, 1000))
def test_full_model_reproduces_structural_equations(p, seed):
    p = StageParams(**{**p.to_dict(), "a_y1": 0.6, "a_y2": 0.2})  # keep the simulation stable
    sim = simulate_full_model(p, 60, np.random.default_rng(seed))
    md = observables(sim.data)
    idx = np.arange(md.start, len(sim.data))
    states = np.array([true_states(sim, i) for i in idx])
    obs_res, trans_res = _residuals(build_full_model(p), md, states)
    scale = max(1.0, np.abs(md.obs).max())
    np.testing.assert_allclose(obs_res[:, 0], sim.shocks["ytilde"][idx], atol=1e-12 * scale * 100)
    np.testing.assert_allclose(obs_res[:, 1], sim.shocks["pi"][idx], atol=1e-12 * scale * 100)
    i = idx[1:]
    expected = np.zeros((i.size, 7))
    expected[:, 0] = sim.shocks["ystar"][i] + sim.shocks["g"][i - 1]
    expected[:, 3] = sim.shocks["g"][i - 1]
    expected[:, 5] = sim.shocks["z"][i - 1]
    np.testing.assert_allclose(trans_res, expected, atol=1e-12 * scale * 100)


@settings(max_examples=20, deadline=None)
@given(p=param_strategy, seed=st.integers(0, 1000))
def test_stage2_error_terms(p, seed):
    p = StageParams(**{**p.to_dict(), "a_y1": 0.6, "a_y2": 0.2})
    sim = simulate_full_model(p, 60, np.random.default_rng(seed))
    md = observables(sim.data)
    idx = np.arange(md.start, len(sim.data))
    states = np.array([true_states(sim, i)[:5] for i in idx])
    eps = sim.shocks["ytilde"][idx]
    zsum = sim.z[idx - 1] + sim.z[idx - 2]
    gsum = sim.g[idx - 1] + sim.g[idx - 2]
    tol = 1e-10 * max(1.0, np.abs(md.obs).max())

    # correct Stage 2: -a_r(L) z_t + eps
    res, trans = _residuals(build_stage2_correct(p), md, states)
    np.testing.assert_allclose(res[:, 0], eps - 0.5 * p.a_r * zsum, atol=tol)
    np.testing.assert_allclose(trans[:, 0], sim.shocks["ystar"][idx[1:]] + sim.shocks["g"][idx[1:] - 1], atol=tol)

    # HLW Stage 2: -a_r(L)4g_t - a_r(L)z_t + eps - (a_0 + a_g g_{t-1})
    res, trans = _residuals(build_stage2_hlw(p), md, states)
    expected = eps - 2 * p.a_r * gsum - 0.5 * p.a_r * zsum - p.a_0 - p.a_g * sim.g[idx - 1]
    np.testing.assert_allclose(res[:, 0], expected, atol=tol)
    # trend row: y*_t - y*_{t-1} - g_{t-2} = eps^y*_t + eps^g_{t-1}
    np.testing.assert_allclose(trans[:, 0], sim.shocks["ystar"][idx[1:]] + sim.shocks["g"][idx[1:] - 1], atol=tol)


def test_zero_sigma_z_gives_rstar_equal_4g():
    p = StageParams(**{**US_LIKE.to_dict(), "sigma_z": 0.0})
    sim = simulate_full_model(p, 200, np.random.default_rng(0))
    assert np.all(sim.z == 0.0)
    rstar = 4 * sim.g + sim.z
    np.testing.assert_array_equal(rstar, 4 * sim.g)


def test_deterministic_limit():
    p = StageParams(a_y1=0.5, a_y2=0.2, a_r=0.0, b_pi=0.5, b_y=0.1, sigma_pi=0.5)
    sim = simulate_full_model(p, 80, np.random.default_rng(1), rate_gap_sd=0.0)
    np.testing.assert_allclose(np.diff(sim.ystar), 0.75)
    yt = sim.ytilde
    np.testing.assert_allclose(yt[2:], 0.5 * yt[1:-1] + 0.2 * yt[:-2], atol=1e-14)


def test_lambda_z_consistency():
    p = StageParams(**{**US_LIKE.to_dict(), "lambda_z": 0.03, "lambda_g": 0.05})
    v = ModelVariant("Full", sigma_g_mode="MUE-implied", sigma_z_mode="MUE-implied")
    q = resolve(p, v)
    assert abs(q.sigma_z * abs(q.a_r) - 0.03 * q.sigma_ytilde) < 1e-12
    assert q.sigma_g == pytest.approx(0.05 * q.sigma_ystar, abs=1e-15)
    check_implied(q, v)
    with pytest.raises(InvalidParams):
        check_implied(p, v)


def test_lambda_z_with_zero_slope_rejected():
    p = StageParams(**{**US_LIKE.to_dict(), "a_r": 0.0, "lambda_z": 0.03})
    with pytest.raises(InvalidParams):
        resolve(p, ModelVariant("Full", sigma_z_mode="MUE-implied"))


def test_negative_sigma_rejected():
    with pytest.raises(InvalidParams):
        StageParams(sigma_g=-0.1)


def test_stationarity_flag():
    p = StageParams(a_y1=0.8, a_y2=0.3, sigma_ytilde=1, sigma_pi=1)
    build_full_model(p)
    with pytest.raises(InvalidParams):
        build_full_model(p, stationary=True)


@pytest.fixture(scope="module")
def sim_no_z():
    p = StageParams(**{**US_LIKE.to_dict(), "sigma_z": 0.0})
    sim = simulate_full_model(p, 150, np.random.default_rng(5))
    return p, sim, observables(sim.data)


def _init7(md):
    mean = [md.obs[0, 0]] * 3 + [0.75, 0.75, 0.0, 0.0]
    return InitSpec(tuple(mean), tuple(map(tuple, np.diag([1.0] * 3 + [0.04] * 2 + [0.0] * 2))))


def test_stage2_correct_equals_full_when_z_is_zero(sim_no_z):
    p, sim, md = sim_no_z
    init = _init7(md)
    full = kalman_filter(build_full_model(p, init), md.obs, md.exog).log_likelihood
    s2 = kalman_filter(build_stage2_correct(p, init=init), md.obs, md.exog).log_likelihood
    assert s2 == pytest.approx(full, abs=1e-8)


def test_zero_slope_makes_likelihood_invariant_to_rates(sim_no_z):
    p, sim, md = sim_no_z
    p0 = StageParams(**{**p.to_dict(), "a_r": 0.0})
    init = _init7(md)
    base = kalman_filter(build_stage2_correct(p0, init=init), md.obs, md.exog).log_likelihood
    exog = md.exog.copy()
    exog[:, 2:4] += np.random.default_rng(0).normal(size=(len(md), 2))
    moved = kalman_filter(build_stage2_correct(p0, init=init), md.obs, exog).log_likelihood
    assert moved == base


def test_plus_a0_nests_correct(sim_no_z):
    p, sim, md = sim_no_z
    init = _init7(md)
    a = kalman_filter(build(ModelVariant("Stage2Correct"), p, init), md.obs, md.exog).log_likelihood
    b = kalman_filter(build(ModelVariant("Stage2CorrectPlusA0"), p, init), md.obs, md.exog).log_likelihood
    assert a == b


def test_hlw_restriction_differs_only_in_g_lag_convention():
    p = StageParams(**{**US_LIKE.to_dict(), "a_0": 0.0, "a_g": -4 * US_LIKE.a_r})
    hlw = build_stage2_hlw(p, trend_error="ma1")
    cor = build_stage2_correct(p)
    # same total loading on trend growth, split over g_{t-1}, g_{t-2} vs g_{t-1} only
    assert hlw.obs_load[0, 3] + hlw.obs_load[0, 4] == pytest.approx(cor.obs_load[0, 3] + cor.obs_load[0, 4])
    np.testing.assert_array_equal(hlw.obs_load[:, :3], cor.obs_load[:, :3])
    np.testing.assert_array_equal(hlw.obs_exog, cor.obs_exog)
    np.testing.assert_array_equal(hlw.state_cov, cor.state_cov)
    np.testing.assert_array_equal(hlw.trans, cor.trans)


def test_hlw_trend_equations_coincide_when_sigma_g_zero():
    p = StageParams(**{**US_LIKE.to_dict(), "sigma_g": 0.0})
    iid = build_stage2_hlw(p, trend_error="iid")
    ma1 = build_stage2_hlw(p, trend_error="ma1")
    np.testing.assert_array_equal(iid.state_cov, ma1.state_cov)
    np.testing.assert_array_equal(iid.state_cov, build_stage2_correct(p).state_cov)


def test_hlw_iid_trend_covariance_is_diagonal():
    m = build_stage2_hlw(US_LIKE)
    assert np.count_nonzero(m.state_cov - np.diag(np.diag(m.state_cov))) == 0
    assert np.count_nonzero(build_stage2_correct(US_LIKE).state_cov[0, 3]) == 1


def test_output_gap_local_level_identity_large_sample():
    """Eq.-6a analogue: a_y(L)ytilde - a_r(L)[r - 4g] = -a_r(L) z + eps, slope 1."""
    sim = simulate_full_model(US_LIKE, 30_000, np.random.default_rng(11), start="1000:Q1")
    yt, r, g, z = sim.ytilde, sim.real_rate, sim.g, sim.z
    t = np.arange(2, yt.size)
    lhs = (yt[t] - US_LIKE.a_y1 * yt[t - 1] - US_LIKE.a_y2 * yt[t - 2]
           - 0.5 * US_LIKE.a_r * (r[t - 1] - 4 * g[t - 1] + r[t - 2] - 4 * g[t - 2]))
    level = -0.5 * US_LIKE.a_r * (z[t - 1] + z[t - 2])
    X = np.column_stack([np.ones(t.size), level])
    beta, *_ = np.linalg.lstsq(X, lhs, rcond=None)
    assert beta[1] == pytest.approx(1.0, abs=0.02)


def test_default_init_shapes(sim_no_z):
    _, sim, _ = sim_no_z
    for tag, n in (("Full", 7), ("Stage2HLW", 5)):
        init = default_init(ModelVariant(tag), sim.data)
        assert len(init.mean) == n and np.asarray(init.cov).shape == (n, n)


def test_params_roundtrip():
    p = StageParams(**{**US_LIKE.to_dict(), "lambda_z": 0.01})
    assert StageParams.from_dict(p.to_dict()) == p
    with pytest.raises(InvalidParams):
        StageParams.from_dict({"bogus": 1.0})
