"""Social network objects: graph Laplacian, agent parameters, and the
row-stochastic mixing matrix with its spectral diagnostics.

The mixing matrix V solves (Lam*L + I - Lam) V = (I - Lam), the fixed point
of stubborn-agent opinion averaging; its smallest singular value lambda_V
feeds the excitation margins used by the online controller.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidRange, NegativeWeight, NotStronglyConnected, SingularSystem

ROW_SUM_TOL = 1e-10      # accepted drift of V rows from 1 after normalization
ROW_DRIFT_TOL = 1e-8     # normalization allowed below this raw drift, error above
ENTRY_TOL = 1e-12        # float-noise clamp threshold for V entries
COND_LIMIT = 1e12        # condition estimate above this is treated as singular
LAMBDA_V_FLOOR = 1e-12   # lambda_V at or below this is rank deficiency, not noise
LAMBDA_CLAMP = 1.0 - 1e-6  # unit stubbornness weights zero a column of V


def _as_square_matrix(a) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"adjacency must be square, got shape {a.shape}")
    return a


def _reachable(support: np.ndarray, start: int) -> np.ndarray:
    """Bool mask of nodes reachable from start on the directed support."""
    n = support.shape[0]
    seen = np.zeros(n, dtype=bool)
    seen[start] = True
    frontier = [start]
    while frontier:
        nxt = []
        for i in frontier:
            for j in np.nonzero(support[i])[0]:
                if not seen[j]:
                    seen[j] = True
                    nxt.append(int(j))
        frontier = nxt
    return seen


def is_strongly_connected(adjacency: np.ndarray) -> bool:
    """Every ordered pair reachable on the support of the weight matrix."""
    support = np.asarray(adjacency) > 0
    if support.shape[0] == 1:
        return True
    return bool(_reachable(support, 0).all() and _reachable(support.T, 0).all())


@dataclass(frozen=True, eq=False)
class SocialGraph:
    """Directed weighted interaction graph and its Laplacian."""

    adjacency: np.ndarray
    laplacian: np.ndarray

    @property
    def n(self) -> int:
        return self.adjacency.shape[0]


@dataclass(frozen=True, eq=False)
class AgentParams:
    """Per-agent stubbornness weights (lam) and planner susceptibilities (h).

    lam[i] in [0, 1] weighs neighbor influence against the agent's prejudice.
    h[i] > 0 scales the planner's control; h_min/h_max are the prior bounds
    known to the controller (0 < h_min <= h_i <= h_max). Networks with no
    agent at lam < 1 are rejected when the mixing matrix is built.
    """

    lam: np.ndarray
    h: np.ndarray
    h_min: float
    h_max: float

    def __post_init__(self):
        lam = np.asarray(self.lam, dtype=float)
        h = np.asarray(self.h, dtype=float)
        if lam.shape != h.shape or lam.ndim != 1:
            raise ValueError("lam and h must be 1-d arrays of equal length")
        if (lam < 0).any() or (lam > 1).any():
            raise InvalidRange("stubbornness weights must lie in [0, 1]")
        if (h <= 0).any():
            raise InvalidRange("susceptibilities must be strictly positive")
        if not 0 < self.h_min <= self.h_max:
            raise InvalidRange("need 0 < h_min <= h_max")
        if (h < self.h_min - 1e-12).any() or (h > self.h_max + 1e-12).any():
            raise InvalidRange("h outside [h_min, h_max]")
        lam.setflags(write=False)
        h.setflags(write=False)
        object.__setattr__(self, "lam", lam)
        object.__setattr__(self, "h", h)


@dataclass(frozen=True, eq=False)
class MixingMatrix:
    """Row-stochastic opinion mixing matrix and its minimum singular value."""

    V: np.ndarray
    lambda_V: float

    def __post_init__(self):
        V = np.asarray(self.V, dtype=float)
        if (V < 0).any():
            raise SingularSystem("mixing matrix has negative entries")
        drift = np.abs(V.sum(axis=1) - 1.0).max()
        if drift > ROW_SUM_TOL:
            raise SingularSystem(f"mixing matrix rows drift {drift:.3e} from 1")
        if not self.lambda_V > LAMBDA_V_FLOOR:
            raise SingularSystem(
                f"mixing matrix is rank deficient (lambda_V = {self.lambda_V:.3e})"
            )
        V.setflags(write=False)
        object.__setattr__(self, "V", V)

    @classmethod
    def from_matrix(cls, V) -> "MixingMatrix":
        V = np.asarray(V, dtype=float)
        return cls(V=V, lambda_V=min_singular_value(V))


@dataclass(frozen=True, eq=False)
class Network:
    """Graph, agent parameters, and the derived mixing matrix."""

    graph: SocialGraph
    params: AgentParams
    mixing: MixingMatrix

    @property
    def n(self) -> int:
        return self.graph.n

    @property
    def h(self) -> np.ndarray:
        return self.params.h

    @property
    def V(self) -> np.ndarray:
        return self.mixing.V

    @property
    def lambda_V(self) -> float:
        return self.mixing.lambda_V


def build_laplacian(adjacency) -> SocialGraph:
    """Validate an adjacency matrix and return it with its graph Laplacian.

    Requires nonnegative weights, a zero diagonal, and strong connectivity
    of the directed support.
    """
    A = _as_square_matrix(adjacency)
    if (A < 0).any():
        raise NegativeWeight("adjacency weights must be nonnegative")
    if np.abs(np.diag(A)).max(initial=0.0) != 0.0:
        raise ValueError("adjacency diagonal must be zero")
    if not is_strongly_connected(A):
        raise NotStronglyConnected("graph support is not strongly connected")
    L = np.diag(A.sum(axis=1)) - A
    A = A.copy()
    A.setflags(write=False)
    L.setflags(write=False)
    return SocialGraph(adjacency=A, laplacian=L)


def min_singular_value(V) -> float:
    """Smallest singular value, sqrt of the least eigenvalue of V^T V."""
    return float(np.linalg.svd(np.asarray(V, dtype=float), compute_uv=False)[-1])


def build_mixing_matrix(graph: SocialGraph, params: AgentParams) -> MixingMatrix:
    """Solve (Lam*L + I - Lam) V = (I - Lam) and validate row stochasticity.

    Raises SingularSystem when the fixed-point system is numerically singular
    (condition estimate above 1e12, e.g. no non-stubborn agent) or when the
    solution violates the mixing-matrix invariants.
    """
    lam = params.lam
    if lam.shape[0] != graph.n:
        raise ValueError("params and graph disagree on agent count")
    M = lam[:, None] * graph.laplacian + np.diag(1.0 - lam)
    cond = np.linalg.cond(M)
    if not np.isfinite(cond) or cond > COND_LIMIT:
        raise SingularSystem(
            f"fixed-point system condition {cond:.3e} exceeds {COND_LIMIT:.0e}; "
            "check strong connectivity and that some agent has lam < 1"
        )
    V = np.linalg.solve(M, np.diag(1.0 - lam))
    low = V.min()
    if low < -ENTRY_TOL:
        raise SingularSystem(f"mixing matrix entry {low:.3e} below -{ENTRY_TOL:.0e}")
    np.clip(V, 0.0, None, out=V)
    drift = np.abs(V.sum(axis=1) - 1.0).max()
    if drift >= ROW_DRIFT_TOL:
        raise SingularSystem(f"mixing matrix row drift {drift:.3e}; not stochastic")
    V /= V.sum(axis=1, keepdims=True)
    return MixingMatrix(V=V, lambda_V=min_singular_value(V))


def make_network(graph: SocialGraph, params: AgentParams) -> Network:
    """Bundle graph and parameters with their mixing matrix."""
    return Network(graph=graph, params=params, mixing=build_mixing_matrix(graph, params))


def random_network(
    n: int,
    density: float,
    lambda_range: tuple[float, float],
    h_range: tuple[float, float],
    seed: int,
) -> tuple[SocialGraph, AgentParams]:
    """Deterministic scenario generator: undirected ring backbone plus
    random extra edges, parameters drawn uniformly from the given ranges.

    The ring keeps every draw strongly connected; one agent is clamped
    non-stubborn if a degenerate lambda range would leave none.
    """
    llo, lhi = float(lambda_range[0]), float(lambda_range[1])
    hlo, hhi = float(h_range[0]), float(h_range[1])
    if n < 2:
        raise InvalidRange("need at least 2 agents")
    if not 0.0 <= density <= 1.0:
        raise InvalidRange("density must lie in [0, 1]")
    if not 0.0 <= llo <= lhi <= 1.0:
        raise InvalidRange("lambda_range must satisfy 0 <= lo <= hi <= 1")
    if not 0.0 < hlo <= hhi:
        raise InvalidRange("h_range must satisfy 0 < lo <= hi")

    rng = np.random.default_rng(seed)
    A = np.zeros((n, n))
    ring_w = rng.uniform(0.5, 1.5, n)
    for i in range(n):
        j = (i + 1) % n
        A[i, j] = A[j, i] = ring_w[i]
    coin = rng.random((n, n))
    extra_w = rng.uniform(0.5, 1.5, (n, n))
    for i in range(n):
        for j in range(i + 1, n):
            if A[i, j] == 0.0 and coin[i, j] < density:
                A[i, j] = A[j, i] = extra_w[i, j]

    # clamp below 1 so the mixing matrix keeps full rank (lambda_V > 0)
    lam = np.minimum(rng.uniform(llo, lhi, n), LAMBDA_CLAMP)
    h = rng.uniform(hlo, hhi, n)

    graph = build_laplacian(A)
    params = AgentParams(lam=lam, h=h, h_min=hlo, h_max=hhi)
    return graph, params
