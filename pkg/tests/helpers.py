"""Random model generators shared by the filter tests and the acceptance suite."""
import math

import numpy as np

from rstar.ssm import StateSpaceModel, simulate


def random_model(rng, n_state=None, n_obs=None, n_exog=None):
    n_s = n_state or int(rng.integers(1, 5))
    n_o = n_obs or int(rng.integers(1, 3))
    n_x = int(rng.integers(0, 3)) if n_exog is None else n_exog

    def spd(n, scale=1.0):
        a = rng.normal(size=(n, n))
        return scale * (a @ a.T / n + 0.1 * np.eye(n))

    return StateSpaceModel(
        obs_load=rng.normal(size=(n_o, n_s)),
        obs_exog=rng.normal(size=(n_o, n_x)),
        trans=0.9 * rng.normal(size=(n_s, n_s)) / math.sqrt(n_s),
        trans_exog=rng.normal(size=(n_s, n_x)),
        obs_cov=spd(n_o),
        state_cov=spd(n_s, 0.5),
        init_mean=rng.normal(size=n_s),
        init_cov=spd(n_s),
    )


def draw(rng, model, n_t):
    exog = rng.normal(size=(n_t, model.n_exog))
    _, obs = simulate(model, n_t, rng, exog=exog, init_state=model.init_mean)
    return obs, exog
