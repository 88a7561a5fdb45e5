import os

import numpy as np
import pytest

from wpbc.optimizer import DesignVariables
from wpbc.scenario import load_pinned_design, load_scenario

SCENARIO = os.path.join(os.path.dirname(__file__), "..", "scenarios", "defaults.scenario")


@pytest.fixture(scope="session")
def scenario_path():
    return os.path.abspath(SCENARIO)


@pytest.fixture(scope="session")
def config(scenario_path):
    return load_scenario(scenario_path)


@pytest.fixture(scope="session")
def stats(config):
    return config.link_stats()


@pytest.fixture(scope="session")
def pinned(scenario_path, config):
    zeta, alpha, p_ce = load_pinned_design(scenario_path, config)
    return np.asarray(zeta), alpha, p_ce


@pytest.fixture(scope="session")
def base_design(pinned):
    zeta, alpha, p_ce = pinned
    return DesignVariables(zeta=zeta, alpha=alpha, p_ce=p_ce)
