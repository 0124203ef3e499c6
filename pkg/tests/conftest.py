import numpy as np
import pytest

from sflgame import ClientProfile, CutCostModel, SystemParams

TABLE2 = dict(
    minibatches_per_epoch=100,
    epochs=5,
    rounds=20,
    d_req=2000.0,
    bits_per_param=32.0,
    smashed_size=24.5e6,
    gradient_size=24.5e6,
    full_model_gflops=4.3,
    computing_intensity=16.0,
    tau1=1.0,
    tau2=1.0,
    r_min=1.0,
    r_max=1000.0,
    l_min=3,
    l_max=12,
)

CLIENT = dict(
    cpu_freq=1.2e9,
    psi=2800.0,
    dataset_cap=10000.0,
    p_compute=4.0,
    p_tx=0.2,
    p_rx=0.2,
    rate_up_main=100e6,
    rate_down_main=200e6,
    rate_up_fed=100e6,
    rate_down_fed=200e6,
    offset=0.0,
)


def make_params(n_clients=5, **overrides) -> SystemParams:
    fields = {**TABLE2, "n_clients": n_clients, **overrides}
    return SystemParams(**fields)


def make_client(**overrides) -> ClientProfile:
    return ClientProfile(**{**CLIENT, **overrides})


def make_het_clients(dataset_cap=10000.0, offset=0.0):
    """The five-client mixed population: rising CPU speed, rising incentive weight."""
    freqs = [1.0e9, 1.1e9, 1.2e9, 1.2e9, 1.2e9]
    psis = [2600.0, 2600.0, 2600.0, 2700.0, 2800.0]
    return tuple(make_client(cpu_freq=f, psi=p, dataset_cap=dataset_cap, offset=offset)
                 for f, p in zip(freqs, psis))


@pytest.fixture
def params():
    return make_params()


@pytest.fixture
def client():
    return make_client()


@pytest.fixture
def cost_model():
    return CutCostModel(flops_slope=0.3779, flops_intercept=-0.212,
                        params_scale=0.1098, params_rate=0.4711)


@pytest.fixture
def het_clients():
    return make_het_clients()


def random_follower(rng, n=None, cap=1e12):
    """Random direct-coefficient contribution game for property tests."""
    from sflgame.followers import FollowerProblem

    n = n if n is not None else int(rng.integers(2, 21))
    h = 10.0 ** rng.uniform(np.log10(0.5), np.log10(50.0), n)
    psi = 10.0 ** rng.uniform(np.log10(5e2), np.log10(5e3), n)
    r = 10.0 ** rng.uniform(0.0, np.log10(400.0))
    return FollowerProblem(r=r, l_c=3, h=h, i_fixed=np.ones(n), psi=psi,
                           caps=np.full(n, cap), offsets=np.zeros(n))
