import json
from pathlib import Path

import numpy as np
import pytest

from mmsync.control import ControllerSpec
from mmsync.model import State, SystemParams, fluxes_from_currents
from mmsync.potential import PotentialEvaluator
from mmsync.steady_state import solve_pi

CONFIG_DIR = Path(__file__).resolve().parents[1] / "src" / "mmsync" / "configs"

OMEGA0 = 2.0 * np.pi * 50.0
IRS3 = np.array([1950.0, 975.0, 3900.0])
IRS2 = np.array([1950.0, 975.0])


def load_params(name):
    with open(CONFIG_DIR / name) as fh:
        return SystemParams.from_dict(json.load(fh))


@pytest.fixture(scope="session")
def params3():
    return load_params("ieee_like_3machine.json")


@pytest.fixture(scope="session")
def ssmap3(params3):
    return solve_pi(params3, OMEGA0, IRS3)


@pytest.fixture(scope="session")
def evaluator3(params3, ssmap3):
    return PotentialEvaluator(params3, ssmap3)


@pytest.fixture(scope="session")
def spec3():
    return ControllerSpec(kind="mmsf_energy", omega0=OMEGA0, i_r_star=IRS3)


@pytest.fixture(scope="session")
def params2():
    return load_params("two_machine.json")


@pytest.fixture(scope="session")
def ssmap2(params2):
    return solve_pi(params2, OMEGA0, IRS2)


@pytest.fixture(scope="session")
def evaluator2(params2, ssmap2):
    return PotentialEvaluator(params2, ssmap2)


@pytest.fixture(scope="session")
def params1():
    return SystemParams(
        M_r=[22000.0], D_r=[4000.0], L_r=[1.2], R_r=[1.68], L_m=[0.04],
        L_s=[0.0018], R_s=[0.166], C=[1e-5], G=[0.8],
        L_t=[], R_t=[], E=np.zeros((1, 0)),
    )


def random_state(params, rng, omega_scale=30.0, flux_scale=50.0, elec_scale=1e4):
    """Physically scaled random state around the operating magnitudes."""
    n, m = params.n, params.m
    return State(
        omega=OMEGA0 + rng.normal(0.0, omega_scale, n),
        theta=rng.uniform(-np.pi, np.pi, n),
        lam_r=rng.normal(0.0, flux_scale * 20, n),
        lam_s=rng.normal(0.0, flux_scale, 2 * n),
        v=rng.normal(0.0, elec_scale, 2 * n),
        i_t=rng.normal(0.0, elec_scale, 2 * m),
    )


def state_with_currents(params, rng, i_r=None, elec_scale=1e4):
    """Random state constructed from co-energy values (currents chosen first)."""
    n, m = params.n, params.m
    theta = rng.uniform(-np.pi, np.pi, n)
    i_s = rng.normal(0.0, elec_scale, 2 * n)
    i_r = rng.normal(0.0, elec_scale / 10.0, n) if i_r is None else np.asarray(i_r, float)
    lam_s, lam_r = fluxes_from_currents(params, theta, i_s, i_r)
    return State(
        omega=OMEGA0 + rng.normal(0.0, 30.0, n),
        theta=theta,
        lam_r=lam_r,
        lam_s=lam_s,
        v=rng.normal(0.0, elec_scale, 2 * n),
        i_t=rng.normal(0.0, elec_scale, 2 * m),
    )
