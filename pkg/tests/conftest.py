import sys
from pathlib import Path

import numpy as np
import pytest

try:
    import opsteer  # noqa: F401
except ImportError:
    sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from opsteer import AgentParams, Network, build_laplacian, make_network, random_network


K2_ADJACENCY = np.array([[0.0, 1.0], [1.0, 0.0]])


@pytest.fixture
def k2_net() -> Network:
    """Two mutually connected agents, half-stubborn, h = (0.5, 0.25).
    Mixing matrix [[2/3, 1/3], [1/3, 2/3]] with lambda_V = 1/3."""
    graph = build_laplacian(K2_ADJACENCY)
    params = AgentParams(
        lam=np.array([0.5, 0.5]), h=np.array([0.5, 0.25]), h_min=0.2, h_max=0.8
    )
    return make_network(graph, params)


@pytest.fixture
def single_net() -> Network:
    """One agent; the mixing matrix is [[1]] for any lam < 1."""
    graph = build_laplacian(np.array([[0.0]]))
    params = AgentParams(
        lam=np.array([0.3]), h=np.array([0.5]), h_min=0.5, h_max=0.5
    )
    return make_network(graph, params)


def rand_net(seed: int, n: int = 6, density: float = 0.5,
             lambda_range=(0.2, 0.8), h_range=(0.3, 0.7)) -> Network:
    graph, params = random_network(n, density, lambda_range, h_range, seed=seed)
    return make_network(graph, params)


def admissible_u(rng: np.random.Generator, h: np.ndarray,
                 lo: float = 0.0, hi: float = 1.0) -> np.ndarray:
    """Random control with h_i * u_i drawn uniformly in [lo, hi]."""
    return rng.uniform(lo, hi, h.shape[0]) / h
