"""Online identification of the susceptibility vector theta (diag of H).

The one-step dynamics are affine in theta: x(t) = V x(t-1) + V diag(y) theta
with regressor weights y = u * (d - x(t-1)). A gradient-type update driven
by the state prediction error contracts the Lyapunov value
R = |theta_err|^2 / (2 psi) by (1 - kappa) per persistently excited step.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from . import _kernels
from .errors import GainTooLarge, InvalidGain, InvalidRange

THETA_FLOOR = 1e-6  # estimates are clamped positive; caps need theta_hat > 0


def spectral_norm(M: np.ndarray, tol: float = 1e-10, max_iter: int = 10000) -> float:
    """Largest singular value via power iteration on M^T M.

    Deterministic start vector; iterates until the Rayleigh quotient is
    stable to tol (relative)."""
    M = np.asarray(M, dtype=float)
    n = M.shape[1]
    v = np.ones(n) / np.sqrt(n)
    v[0] += 0.5  # break symmetry against eigenvectors orthogonal to 1
    v /= np.linalg.norm(v)
    prev = 0.0
    for _ in range(max_iter):
        w = M.T @ (M @ v)
        norm = np.linalg.norm(w)
        if norm == 0.0:
            return 0.0
        v = w / norm
        if abs(norm - prev) <= tol * max(norm, 1e-300):
            break
        prev = norm
    return float(np.sqrt(norm))


def beta_bound(V: np.ndarray, y_sup: float) -> float:
    """A priori regressor norm bound: |V diag(y)| <= |V| * max|y_j| <= beta
    whenever |y|_inf stays below y_sup."""
    if y_sup < 0:
        raise InvalidRange("y_sup must be nonnegative")
    return spectral_norm(V) * y_sup


class Regressor:
    """Sensitivity of one opinion update to theta.

    F = V diag(y) and f_tilde = V x_prev give the affine model
    x(t) = f_tilde + F theta with y = u * (d - x_prev).
    """

    def __init__(self, V: np.ndarray, x_prev: np.ndarray, u: np.ndarray, d: float):
        self.V = np.asarray(V, dtype=float)
        self.x_prev = np.asarray(x_prev, dtype=float)
        self.y = np.asarray(u, dtype=float) * (d - self.x_prev)

    @cached_property
    def F(self) -> np.ndarray:
        return self.V * self.y

    @cached_property
    def f_tilde(self) -> np.ndarray:
        return self.V @ self.x_prev

    @property
    def min_abs_y(self) -> float:
        return float(np.abs(self.y).min())


def build_regressor(x_prev: np.ndarray, u: np.ndarray, d: float, V: np.ndarray) -> Regressor:
    """Regressor for the transition that applies u to x_prev."""
    return Regressor(V=V, x_prev=x_prev, u=u, d=d)


def predict(reg: Regressor, theta_hat: np.ndarray) -> np.ndarray:
    """Model prediction x_hat = f_tilde + F theta_hat."""
    return reg.f_tilde + reg.F @ np.asarray(theta_hat, dtype=float)


@dataclass(eq=False)
class EstimatorState:
    """Parameter estimate with scalar adaptation gain psi and norm bound beta.

    The update needs psi < 2 / beta^2 to contract; psi = 1 / beta^2 is the
    tightest choice. theta_hat is clamped to [theta_floor, theta_ceil] after
    each update (clamp_events counts how often that actually engaged, which
    is zero on well-excited runs)."""

    theta_hat: np.ndarray
    psi: float
    beta: float
    theta_floor: float = THETA_FLOOR
    theta_ceil: float | None = None
    clamp_events: int = 0
    pred_errors: list[float] = field(default_factory=list)

    def __post_init__(self):
        self.theta_hat = np.asarray(self.theta_hat, dtype=float).copy()
        if not self.psi > 0:
            raise InvalidGain("psi must be positive")
        if not self.beta > 0:
            raise InvalidRange("beta must be positive")

    def update(self, reg: Regressor, x_observed: np.ndarray) -> "EstimatorState":
        """theta_hat += psi * F^T (x_obs - x_hat); returns self."""
        if not self.psi < 2.0 / self.beta**2:
            raise GainTooLarge(
                f"psi={self.psi} must be below 2/beta^2={2.0 / self.beta**2}"
            )
        xhat = _kernels.predict_opinion(reg.V, reg.x_prev, reg.y, self.theta_hat)
        resid = np.asarray(x_observed, dtype=float) - xhat
        self.pred_errors.append(float(np.abs(resid).max()))
        theta = self.theta_hat + self.psi * _kernels.regressor_correction(
            reg.V, reg.y, resid
        )
        clipped = np.clip(theta, self.theta_floor, self.theta_ceil)
        if not np.array_equal(clipped, theta):
            self.clamp_events += 1
        self.theta_hat = clipped
        return self


def lyapunov_value(theta_err: np.ndarray, psi: float) -> float:
    """R = |theta_err|^2 / (2 psi), the estimator's energy."""
    if not psi > 0:
        raise InvalidGain("psi must be positive")
    err = np.asarray(theta_err, dtype=float)
    return float(err @ err) / (2.0 * psi)


def kappa(psi: float, beta: float, alpha: float) -> float:
    """Per-step contraction rate 2 psi (1 - psi beta^2 / 2) alpha^2.

    Equals alpha^2 / beta^2 at the optimal gain psi = 1 / beta^2."""
    if not 0 < psi < 2.0 / beta**2:
        raise InvalidGain(f"need 0 < psi < 2/beta^2, got psi={psi}, beta={beta}")
    if not 0 <= alpha <= beta:
        raise InvalidGain(f"need 0 <= alpha <= beta, got alpha={alpha}, beta={beta}")
    return 2.0 * psi * (1.0 - 0.5 * psi * beta**2) * alpha**2


def theta_error_bound(r0: float, psi: float, kappa_value: float, t: int) -> float:
    """|theta_err(t)| <= sqrt(2 psi R(0)) (1 - kappa)^(t/2)."""
    if not psi > 0:
        raise InvalidGain("psi must be positive")
    if not 0.0 <= kappa_value <= 1.0:
        raise InvalidGain("kappa must lie in [0, 1]")
    if r0 < 0 or t < 0:
        raise InvalidRange("R(0) and t must be nonnegative")
    return float(np.sqrt(2.0 * psi * r0) * (1.0 - kappa_value) ** (t / 2.0))


def pe_margin(alpha: float, lambda_V: float, u_max: float) -> float:
    """Neighborhood radius delta = alpha / (lambda_V * u_max): keeping every
    |x_j - d| above delta lets the clipped excitation controller hold
    min_j |y_j| >= alpha / lambda_V."""
    if alpha < 0:
        raise InvalidRange("alpha must be nonnegative")
    if not lambda_V > 0 or not u_max > 0:
        raise InvalidRange("lambda_V and u_max must be positive")
    return alpha / (lambda_V * u_max)


@dataclass(frozen=True)
class PEVerdict:
    """Exact and sufficient persistent-excitation checks at level alpha."""

    exact: bool
    lambda_min_ftf: float
    sufficient: bool | None = None
    sufficient_bound: float | None = None


def verify_pe(
    reg: Regressor,
    alpha: float,
    lambda_V: float | None = None,
    rtol: float = 1e-9,
) -> PEVerdict:
    """Exact check lambda_min(F^T F) >= alpha^2 plus, when lambda_V is given,
    the sufficient bound (min_j|y_j| * lambda_V)^2 >= alpha^2.

    rtol absorbs float noise for controllers that sit exactly on the
    excitation level by design."""
    lam_min = float(np.linalg.eigvalsh(reg.F.T @ reg.F)[0])
    lam_min = max(lam_min, 0.0)
    threshold = alpha**2 * (1.0 - rtol)
    exact = lam_min >= threshold
    if lambda_V is None:
        return PEVerdict(exact=exact, lambda_min_ftf=lam_min)
    suff = (reg.min_abs_y * lambda_V) ** 2
    return PEVerdict(
        exact=exact,
        lambda_min_ftf=lam_min,
        sufficient=suff >= threshold,
        sufficient_bound=suff,
    )


@dataclass(frozen=True)
class PEDiagnostics:
    """Contraction diagnostics for one excited step."""

    alpha: float
    kappa: float
    m_t_min_eig: float
    theta_err_bound: float


def pe_diagnostics(
    reg: Regressor,
    psi: float,
    beta: float,
    alpha: float,
    r0: float,
    t: int,
) -> PEDiagnostics:
    """kappa, the least eigenvalue of M_t = I - (psi/2) F F^T (positive when
    psi < 2/beta^2), and the parameter error bound at time t."""
    n = reg.F.shape[0]
    M = np.eye(n) - 0.5 * psi * (reg.F @ reg.F.T)
    m_min = float(np.linalg.eigvalsh(M)[0])
    k = kappa(psi, beta, alpha)
    return PEDiagnostics(
        alpha=alpha,
        kappa=k,
        m_t_min_eig=m_min,
        theta_err_bound=theta_error_bound(r0, psi, k, t),
    )
