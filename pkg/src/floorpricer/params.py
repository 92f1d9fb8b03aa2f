"""Hyper-parameter bundle for the revenue and bid models.

Precision matrices are the inverse prior covariances scaled by the inverse
observation noise; they are added directly to the normal equations of every
regularized solve, so large precision means a tight prior. Forgetting
factors are per-second: an observation ``dt`` seconds old carries weight
``gamma ** dt``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np


class ConfigError(ValueError):
    pass


#: Precision used to pin a latent component to its prior mean (bias encoding).
PINNED_PRECISION = 1e8


def _check_spd(name: str, m: np.ndarray) -> np.ndarray:
    m = np.asarray(m, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ConfigError(f"{name} must be a square matrix")
    if not np.allclose(m, m.T):
        raise ConfigError(f"{name} must be symmetric")
    try:
        np.linalg.cholesky(m)
    except np.linalg.LinAlgError:
        raise ConfigError(f"{name} must be positive definite") from None
    return m


@dataclass(frozen=True)
class HyperParams:
    latent_dim: int
    gamma_revenue: float
    gamma_bid: float
    x0: np.ndarray
    y0: np.ndarray
    beta0: float
    m0: np.ndarray
    n0: np.ndarray
    user_precision: np.ndarray
    placement_precision: np.ndarray
    bias_precision: float
    bid_user_precision: np.ndarray
    bid_placement_precision: np.ndarray
    als_iterations: int = 2
    ucb_alpha: float = 1.0
    init_noise_stddev: float = math.sqrt(0.1)
    lambda_max: float = 20.0
    feature_dim: int = 0
    z0: np.ndarray | None = None
    feature_precision: np.ndarray | None = None

    def __post_init__(self):
        L = self.latent_dim
        if L < 1:
            raise ConfigError("latent_dim must be >= 1")
        if self.als_iterations < 1:
            raise ConfigError("als_iterations must be >= 1")
        # gamma = 1 (no forgetting) is admitted for offline-equivalence checks
        for g in (self.gamma_revenue, self.gamma_bid):
            if not (0.0 < g <= 1.0):
                raise ConfigError("forgetting factors must lie in (0, 1]")
        if self.ucb_alpha < 0:
            raise ConfigError("ucb_alpha must be nonnegative")
        if self.bias_precision <= 0:
            raise ConfigError("bias_precision must be positive")
        if self.lambda_max <= 0:
            raise ConfigError("lambda_max must be positive")
        for name in ("x0", "y0", "m0", "n0"):
            v = np.asarray(getattr(self, name), dtype=np.float64)
            if v.shape != (L,):
                raise ConfigError(f"{name} must have shape ({L},)")
            object.__setattr__(self, name, v)
        for name in (
            "user_precision",
            "placement_precision",
            "bid_user_precision",
            "bid_placement_precision",
        ):
            m = _check_spd(name, getattr(self, name))
            if m.shape != (L, L):
                raise ConfigError(f"{name} must have shape ({L}, {L})")
            object.__setattr__(self, name, m)
        if self.feature_dim:
            z0 = np.asarray(self.z0, dtype=np.float64)
            if z0.shape != (self.feature_dim,):
                raise ConfigError("z0 must match feature_dim")
            object.__setattr__(self, "z0", z0)
            fp = _check_spd("feature_precision", self.feature_precision)
            if fp.shape != (self.feature_dim, self.feature_dim):
                raise ConfigError("feature_precision must match feature_dim")
            object.__setattr__(self, "feature_precision", fp)

    @classmethod
    def default(
        cls,
        latent_dim: int = 2,
        gamma_revenue: float = math.exp(-1.0 / 1800.0),
        gamma_bid: float = math.exp(-1.0 / 3600.0),
        free_precision: float = 1.0,
        bias_precision: float = 0.01,
        bid_free_precision: float = 10.0,
        als_iterations: int = 2,
        ucb_alpha: float = 1.0,
        feature_dim: int = 0,
        feature_precision: float = 1.0,
    ) -> "HyperParams":
        """Bias-encoded defaults.

        With ``latent_dim >= 2``, component 0 carries a per-user bias (the
        placement side is pinned at 1 there) and component 1 a per-placement
        bias (user side pinned at 1); any further components are free
        interaction factors. The bid models use the same encoding.
        """
        L = latent_dim
        x0 = np.zeros(L)
        y0 = np.zeros(L)
        up = np.eye(L) * free_precision
        pp = np.eye(L) * free_precision
        m0 = np.zeros(L)
        n0 = np.zeros(L)
        bup = np.eye(L) * bid_free_precision
        bpp = np.eye(L) * bid_free_precision
        if L >= 2:
            y0[0] = 1.0
            pp[0, 0] = PINNED_PRECISION
            x0[1] = 1.0
            up[1, 1] = PINNED_PRECISION
            n0[0] = 1.0
            bpp[0, 0] = PINNED_PRECISION
            m0[1] = 1.0
            bup[1, 1] = PINNED_PRECISION
        kwargs = {}
        if feature_dim:
            kwargs = dict(
                feature_dim=feature_dim,
                z0=np.zeros(feature_dim),
                feature_precision=np.eye(feature_dim) * feature_precision,
            )
        return cls(
            latent_dim=L,
            gamma_revenue=gamma_revenue,
            gamma_bid=gamma_bid,
            x0=x0,
            y0=y0,
            beta0=0.0,
            m0=m0,
            n0=n0,
            user_precision=up,
            placement_precision=pp,
            bias_precision=bias_precision,
            bid_user_precision=bup,
            bid_placement_precision=bpp,
            als_iterations=als_iterations,
            ucb_alpha=ucb_alpha,
            **kwargs,
        )

    def with_(self, **changes) -> "HyperParams":
        return replace(self, **changes)


def decay_rate_to_gamma(rate_per_second: float) -> float:
    """Map a per-second decay rate ``r`` to ``gamma = exp(-r)``.

    The tuning grid is expressed in rates (e.g. 1e-6 .. 1e-1) so that
    forgetting horizons of minutes or hours stay representable.
    """
    if rate_per_second <= 0:
        raise ConfigError("decay rate must be positive")
    return math.exp(-rate_per_second)
