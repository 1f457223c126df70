"""Linear Gaussian state-space engine.

Model, with exogenous inputs ``x_t`` and state ``s_t``::

    obs_t   = obs_load @ s_t + obs_exog @ x_t + e_t,      e_t ~ N(0, obs_cov)
    s_t     = trans @ s_{t-1} + trans_exog @ x_t + w_t,   w_t ~ N(0, state_cov)
    s_0     ~ N(init_mean, init_cov)

``init_mean``/``init_cov`` describe the state *before* the first observation,
so the first step of the filter is a prediction. The forward recursion is
compiled with numba because the likelihood sits inside every optimizer call.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numba
import numpy as np

from .errors import SingularResidualCovariance, ValidationError

DIFFUSE_KAPPA = 1e7
PSD_TOL = 1e-10
_LOG_2PI = math.log(2.0 * math.pi)


def _as_psd(name: str, m: np.ndarray) -> np.ndarray:
    if not np.allclose(m, m.T, rtol=0.0, atol=1e-12 * max(1.0, np.abs(m).max(initial=0.0))):
        raise ValidationError(f"{name} is not symmetric")
    m = 0.5 * (m + m.T)
    if m.size == 0:
        return m
    w, v = np.linalg.eigh(m)
    if w.min() < -PSD_TOL * max(1.0, w.max()):
        raise ValidationError(f"{name} is not positive semidefinite (min eigenvalue {w.min():.3g})")
    if w.min() < 0.0:
        m = (v * np.clip(w, 0.0, None)) @ v.T
        m = 0.5 * (m + m.T)
    return m


@dataclass(frozen=True)
class StateSpaceModel:
    obs_load: np.ndarray
    obs_exog: np.ndarray
    trans: np.ndarray
    trans_exog: np.ndarray
    obs_cov: np.ndarray
    state_cov: np.ndarray
    init_mean: np.ndarray
    init_cov: np.ndarray
    init_mode: str = "fixed-prior"

    def __post_init__(self):
        Z = np.atleast_2d(np.asarray(self.obs_load, dtype=float))
        n_obs, n_state = Z.shape
        T = np.asarray(self.trans, dtype=float).reshape(n_state, n_state)
        A = np.asarray(self.obs_exog, dtype=float)
        if A.size == 0:
            A = np.zeros((n_obs, 0))
        A = A.reshape(n_obs, -1)
        n_exog = A.shape[1]
        B = np.asarray(self.trans_exog, dtype=float)
        B = np.zeros((n_state, n_exog)) if B.size == 0 else B.reshape(n_state, n_exog)
        H = np.asarray(self.obs_cov, dtype=float).reshape(n_obs, n_obs)
        Q = np.asarray(self.state_cov, dtype=float).reshape(n_state, n_state)
        a0 = np.asarray(self.init_mean, dtype=float).reshape(n_state)
        P0 = np.asarray(self.init_cov, dtype=float).reshape(n_state, n_state)
        if self.init_mode not in ("fixed-prior", "diffuse"):
            raise ValidationError(f"unknown init_mode {self.init_mode!r}")
        if self.init_mode == "diffuse":
            P0 = DIFFUSE_KAPPA * np.eye(n_state)
        values = dict(
            obs_load=Z, obs_exog=A, trans=T, trans_exog=B,
            obs_cov=_as_psd("obs_cov", H), state_cov=_as_psd("state_cov", Q),
            init_mean=a0, init_cov=_as_psd("init_cov", P0),
        )
        for k, v in values.items():
            object.__setattr__(self, k, v)

    @property
    def n_obs(self) -> int:
        return self.obs_load.shape[0]

    @property
    def n_state(self) -> int:
        return self.obs_load.shape[1]

    @property
    def n_exog(self) -> int:
        return self.obs_exog.shape[1]

    @property
    def n_diffuse(self) -> int:
        return self.n_state if self.init_mode == "diffuse" else 0


@dataclass(frozen=True)
class FilterOutput:
    """Per-period filter (and optionally smoother) output.

    Index ``t`` refers to the ``t``-th observation: ``predicted_mean[t]`` is
    E[s_t | obs_<t], ``filtered_mean[t]`` is E[s_t | obs_<=t].
    """

    predicted_mean: np.ndarray
    predicted_cov: np.ndarray
    filtered_mean: np.ndarray
    filtered_cov: np.ndarray
    residuals: np.ndarray
    residual_cov: np.ndarray
    loglik_terms: np.ndarray
    log_likelihood: float
    smoothed_mean: np.ndarray | None = None
    smoothed_cov: np.ndarray | None = None

    @property
    def nobs(self) -> int:
        return self.residuals.shape[0]


@numba.njit(cache=True)
def _filter_loop(Z, T, H, Q, a0, P0, y, d, c):
    n_t, n_obs = y.shape
    n_s = a0.shape[0]
    a_pred = np.empty((n_t, n_s))
    P_pred = np.empty((n_t, n_s, n_s))
    a_filt = np.empty((n_t, n_s))
    P_filt = np.empty((n_t, n_s, n_s))
    v_all = np.empty((n_t, n_obs))
    S_all = np.empty((n_t, n_obs, n_obs))
    ll = np.empty(n_t)
    eye = np.eye(n_s)
    a = a0.copy()
    P = P0.copy()
    for t in range(n_t):
        ap = T @ a + c[t]
        Pp = T @ P @ T.T + Q
        Pp = 0.5 * (Pp + Pp.T)
        v = y[t] - d[t] - Z @ ap
        S = Z @ Pp @ Z.T + H
        S = 0.5 * (S + S.T)
        sign, logdet = np.linalg.slogdet(S)
        if not (sign > 0.0) or not np.isfinite(logdet):
            return t, a_pred, P_pred, a_filt, P_filt, v_all, S_all, ll
        Sinv = np.linalg.inv(S)
        K = Pp @ Z.T @ Sinv
        a = ap + K @ v
        IKZ = eye - K @ Z
        # Joseph form: stays PSD when noise variances are ~0
        P = IKZ @ Pp @ IKZ.T + K @ H @ K.T
        P = 0.5 * (P + P.T)
        a_pred[t] = ap
        P_pred[t] = Pp
        a_filt[t] = a
        P_filt[t] = P
        v_all[t] = v
        S_all[t] = S
        ll[t] = -0.5 * (n_obs * 1.8378770664093453 + logdet + v @ Sinv @ v)
    return -1, a_pred, P_pred, a_filt, P_filt, v_all, S_all, ll


@numba.njit(cache=True, error_model="numpy")
def _loglik_kernel(Z, T, H, Q, a0, P0, y, d, c, n_skip):
    """Likelihood-only forward pass with explicit loops and no per-step allocation.

    Same recursion as ``_filter_loop``. Returns (loglik, failing t or -1).
    """
    n_t, n_o = y.shape
    n_s = a0.shape[0]
    a = a0.copy()
    P = P0.copy()
    ap = np.empty(n_s)
    Pp = np.empty((n_s, n_s))
    TP = np.empty((n_s, n_s))
    ZP = np.empty((n_o, n_s))
    S = np.empty((n_o, n_o))
    L = np.empty((n_o, n_o))
    Sinv = np.empty((n_o, n_o))
    K = np.empty((n_s, n_o))
    M = np.empty((n_s, n_s))
    MP = np.empty((n_s, n_s))
    v = np.empty(n_o)
    w = np.empty(n_o)
    total = 0.0
    for t in range(n_t):
        for i in range(n_s):
            acc = c[t, i]
            for j in range(n_s):
                acc += T[i, j] * a[j]
            ap[i] = acc
        for i in range(n_s):
            for j in range(n_s):
                acc = 0.0
                for k in range(n_s):
                    acc += T[i, k] * P[k, j]
                TP[i, j] = acc
        for i in range(n_s):
            for j in range(i, n_s):
                acc = Q[i, j]
                for k in range(n_s):
                    acc += TP[i, k] * T[j, k]
                Pp[i, j] = acc
                Pp[j, i] = acc
        for i in range(n_o):
            acc = y[t, i] - d[t, i]
            for j in range(n_s):
                acc -= Z[i, j] * ap[j]
            v[i] = acc
            for j in range(n_s):
                acc2 = 0.0
                for k in range(n_s):
                    acc2 += Z[i, k] * Pp[k, j]
                ZP[i, j] = acc2
        for i in range(n_o):
            for j in range(i, n_o):
                acc = H[i, j]
                for k in range(n_s):
                    acc += ZP[i, k] * Z[j, k]
                S[i, j] = acc
                S[j, i] = acc
        # Cholesky of S
        logdet = 0.0
        for i in range(n_o):
            for j in range(i + 1):
                acc = S[i, j]
                for k in range(j):
                    acc -= L[i, k] * L[j, k]
                if i == j:
                    if not (acc > 0.0) or not np.isfinite(acc):
                        return np.nan, t
                    L[i, i] = math.sqrt(acc)
                    logdet += 2.0 * math.log(L[i, i])
                else:
                    L[i, j] = acc / L[j, j]
            for j in range(i + 1, n_o):
                L[i, j] = 0.0
        # Sinv = L^-T L^-1, column by column
        for col in range(n_o):
            for i in range(n_o):
                acc = 1.0 if i == col else 0.0
                for k in range(i):
                    acc -= L[i, k] * w[k]
                w[i] = acc / L[i, i]
            for i in range(n_o - 1, -1, -1):
                acc = w[i]
                for k in range(i + 1, n_o):
                    acc -= L[k, i] * Sinv[k, col]
                Sinv[i, col] = acc / L[i, i]
        quad = 0.0
        for i in range(n_o):
            for j in range(n_o):
                quad += v[i] * Sinv[i, j] * v[j]
        if t >= n_skip:
            total += -0.5 * (n_o * 1.8378770664093453 + logdet + quad)
        for i in range(n_s):
            for j in range(n_o):
                acc = 0.0
                for k in range(n_o):
                    acc += ZP[k, i] * Sinv[k, j]
                K[i, j] = acc
        for i in range(n_s):
            acc = ap[i]
            for j in range(n_o):
                acc += K[i, j] * v[j]
            a[i] = acc
        # Joseph form (I - KZ) Pp (I - KZ)' + K H K'
        for i in range(n_s):
            for j in range(n_s):
                acc = 1.0 if i == j else 0.0
                for k in range(n_o):
                    acc -= K[i, k] * Z[k, j]
                M[i, j] = acc
        for i in range(n_s):
            for j in range(n_s):
                acc = 0.0
                for k in range(n_s):
                    acc += M[i, k] * Pp[k, j]
                MP[i, j] = acc
        for i in range(n_s):
            for j in range(i, n_s):
                acc = 0.0
                for k in range(n_s):
                    acc += MP[i, k] * M[j, k]
                for k in range(n_o):
                    for m in range(n_o):
                        acc += K[i, k] * H[k, m] * K[j, m]
                P[i, j] = acc
                P[j, i] = acc
    return total, -1


def _prepare(model: StateSpaceModel, obs, exog):
    y = np.atleast_2d(np.asarray(obs, dtype=float))
    if y.shape[0] == model.n_obs and y.shape[1] != model.n_obs:
        y = y.T
    if y.ndim != 2 or y.shape[1] != model.n_obs:
        raise ValidationError(f"obs must be T x {model.n_obs}")
    if not np.all(np.isfinite(y)):
        raise ValidationError("obs contains missing values")
    n_t = y.shape[0]
    if model.n_exog == 0:
        x = np.zeros((n_t, 0))
    else:
        if exog is None:
            raise ValidationError("model has exogenous loadings but exog is None")
        x = np.asarray(exog, dtype=float).reshape(n_t, model.n_exog)
    d = x @ model.obs_exog.T
    c = x @ model.trans_exog.T
    return y, np.ascontiguousarray(d), np.ascontiguousarray(c)


def kalman_filter(model: StateSpaceModel, obs, exog=None) -> FilterOutput:
    """Predict/update recursion with the exact Gaussian log-likelihood.

    In diffuse mode the first ``n_state`` period contributions are left out
    of ``log_likelihood`` (they remain in ``loglik_terms``).
    """
    y, d, c = _prepare(model, obs, exog)
    fail, a_pred, P_pred, a_filt, P_filt, v, S, ll = _filter_loop(
        model.obs_load, model.trans, model.obs_cov, model.state_cov,
        model.init_mean, model.init_cov, y, d, c,
    )
    if fail >= 0:
        raise SingularResidualCovariance(int(fail))
    total = float(ll[model.n_diffuse:].sum())
    return FilterOutput(a_pred, P_pred, a_filt, P_filt, v, S, ll, total)


def log_likelihood(model: StateSpaceModel, obs, exog=None) -> float:
    return kalman_filter(model, obs, exog).log_likelihood


def fast_log_likelihood(obs_load, obs_exog, trans, state_cov, obs_cov, init_mean, init_cov,
                        obs, exog, n_skip: int = 0) -> float:
    """Log-likelihood from raw arrays, skipping model validation.

    Intended for optimizer inner loops where the matrices come from a trusted
    builder; ``exog`` must already be a contiguous T x n_exog float array and
    the transition carries no exogenous term. Returns -inf when a residual
    covariance is singular.
    """
    d = exog @ obs_exog.T
    c = np.zeros((obs.shape[0], trans.shape[0]))
    ll, fail = _loglik_kernel(obs_load, trans, obs_cov, state_cov, init_mean, init_cov, obs, d, c, n_skip)
    return -math.inf if fail >= 0 else ll


def kalman_smoother(filter_out: FilterOutput, model: StateSpaceModel) -> FilterOutput:
    """Fixed-interval smoother.

    Uses the backward (r_t, N_t) form of the Rauch-Tung-Striebel recursion,
    which only inverts residual covariances. Predicted state covariances are
    routinely singular here (duplicated lag states, zero shock variances), so
    the textbook gain P_t|t T' P_t+1|t^-1 is avoided.
    """
    Z, T = model.obs_load, model.trans
    a_pred, P_pred = filter_out.predicted_mean, filter_out.predicted_cov
    v, S = filter_out.residuals, filter_out.residual_cov
    n_t, n_s = a_pred.shape
    a_s = np.empty_like(a_pred)
    P_s = np.empty_like(P_pred)
    r = np.zeros(n_s)
    N = np.zeros((n_s, n_s))
    eye = np.eye(n_s)
    for t in range(n_t - 1, -1, -1):
        Sinv = np.linalg.inv(S[t])
        ZtSinv = Z.T @ Sinv
        if t < n_t - 1:
            K = P_pred[t] @ ZtSinv
            L = T @ (eye - K @ Z)
            r = ZtSinv @ v[t] + L.T @ r
            N = ZtSinv @ Z + L.T @ N @ L
        else:
            r = ZtSinv @ v[t]
            N = ZtSinv @ Z
        a_s[t] = a_pred[t] + P_pred[t] @ r
        Pt = P_pred[t] - P_pred[t] @ N @ P_pred[t]
        P_s[t] = 0.5 * (Pt + Pt.T)
    return replace(filter_out, smoothed_mean=a_s, smoothed_cov=P_s)


def simulate(model: StateSpaceModel, n_periods: int, rng: np.random.Generator, exog=None,
             init_state=None):
    """Draw (states, obs) from the model; returns arrays of shape T x n."""
    n_s, n_o = model.n_state, model.n_obs
    x = np.zeros((n_periods, model.n_exog)) if exog is None else np.asarray(exog, dtype=float)
    s = model.init_mean.copy() if init_state is None else np.asarray(init_state, dtype=float)
    states = np.empty((n_periods, n_s))
    obs = np.empty((n_periods, n_o))
    Lq = _psd_factor(model.state_cov)
    Lh = _psd_factor(model.obs_cov)
    for t in range(n_periods):
        s = model.trans @ s + model.trans_exog @ x[t] + Lq @ rng.standard_normal(n_s)
        states[t] = s
        obs[t] = model.obs_load @ s + model.obs_exog @ x[t] + Lh @ rng.standard_normal(n_o)
    return states, obs


def _psd_factor(m: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh(m)
    return v * np.sqrt(np.clip(w, 0.0, None))


def local_level(sigma_level: float, sigma_obs: float, init_mode: str = "diffuse",
                init_mean: float = 0.0, init_var: float = 0.0) -> StateSpaceModel:
    """y_t = mu_t + e_t, mu_t = mu_{t-1} + w_t."""
    return StateSpaceModel(
        obs_load=[[1.0]], obs_exog=np.zeros((1, 0)), trans=[[1.0]], trans_exog=np.zeros((1, 0)),
        obs_cov=[[sigma_obs**2]], state_cov=[[sigma_level**2]],
        init_mean=[init_mean], init_cov=[[init_var]], init_mode=init_mode,
    )
