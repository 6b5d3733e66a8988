import numpy as np
import pytest

from lassodist import harness

FIG1_SEED = 20240501
FIG2_SEED = 1234
FIG3_SEED = 20250101
ZEROMASS_SEED = 77


def fig1_config(**overrides):
    base = dict(model_kind="orthogonal", M=4, N=4, x_spec=[(3, 4.0)],
                sigma=1.0, tau=1.0, L=10000, seed=FIG1_SEED)
    base.update(overrides)
    return harness.ExperimentConfig(**base)


def fig2_config(**overrides):
    base = dict(model_kind="full_rank", M=4, N=4, x_spec=[(3, 4.0)],
                sigma=1.0, tau=1.0, L=10000, seed=FIG2_SEED)
    base.update(overrides)
    return harness.ExperimentConfig(**base)


def fig3_config(**overrides):
    base = dict(model_kind="singular", M=4, N=8, x_spec=[(5, 8.0)],
                sigma=1.0, tau=2.0, L=10000, seed=FIG3_SEED)
    base.update(overrides)
    return harness.ExperimentConfig(**base)


@pytest.fixture(scope="session")
def fig1_report():
    return harness.run_experiment(fig1_config(), workers=1)


@pytest.fixture(scope="session")
def fig2_report():
    return harness.run_experiment(fig2_config(), workers=1)


@pytest.fixture(scope="session")
def fig3_report():
    return harness.run_experiment(fig3_config(), workers=1)


@pytest.fixture(scope="session")
def allbig_report():
    cfg = fig1_config(x_spec=[(1, 4.0), (2, 4.0), (3, 4.0), (4, 4.0)])
    return harness.run_experiment(cfg, workers=1)


@pytest.fixture(scope="session")
def zeromass_report():
    cfg = fig1_config(x_spec=[(2, 1.0), (3, 4.0)], seed=ZEROMASS_SEED)
    return harness.run_experiment(cfg, workers=1)


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(8675309)
