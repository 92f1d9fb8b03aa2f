"""Time-weighted latent-factor revenue profiles.

Per grid level k the expected revenue for (user u, placement p) is
``beta_k + x_uk . y_pk (+ theta . z_k)``. Each entity keeps, per level, its
factor vector plus decayed covariance/observation accumulators, so a single
auction is folded in with a handful of small regularized solves.
"""

from __future__ import annotations

from collections import OrderedDict
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .grid import FloorGrid
from .params import ConfigError, HyperParams

MS_PER_SECOND = 1000.0


class OutOfOrderError(ValueError):
    """Event timestamp precedes an entity's last update (strict mode)."""


@dataclass
class EntityState:
    """Per-level factors and time-weighted accumulators for one entity."""

    factors: np.ndarray  # (K, L)
    cov: np.ndarray      # (K, L, L)
    obs: np.ndarray      # (K, L)
    last_update: np.ndarray  # (K,) float64 ms

    @classmethod
    def fresh(cls, k: int, prior_mean: np.ndarray, noise: np.ndarray, t: float):
        L = prior_mean.shape[0]
        return cls(
            factors=np.ascontiguousarray(prior_mean + noise),
            cov=np.zeros((k, L, L)),
            obs=np.zeros((k, L)),
            last_update=np.full(k, float(t)),
        )

    def decay(self, t: float, gamma: float) -> None:
        dt = np.maximum(t - self.last_update, 0.0) / MS_PER_SECOND
        d = gamma ** dt
        self.cov *= d[:, None, None]
        self.obs *= d[:, None]
        self.last_update[:] = t


class ModelStore:
    """All revenue-model state: user/placement maps, global bias, features."""

    def __init__(
        self,
        grid: FloorGrid,
        hyper: HyperParams,
        seed: int = 0,
        max_users: int | None = None,
        max_placements: int | None = None,
        out_of_order: str = "reject",
    ):
        if out_of_order not in ("reject", "clamp"):
            raise ConfigError("out_of_order must be 'reject' or 'clamp'")
        self.grid = grid
        self.hyper = hyper
        self.out_of_order = out_of_order
        self.max_users = max_users
        self.max_placements = max_placements
        self.users: OrderedDict[str, EntityState] = OrderedDict()
        self.placements: OrderedDict[str, EntityState] = OrderedDict()
        K = grid.k
        self.beta = np.full(K, hyper.beta0, dtype=np.float64)
        self.beta_cov = np.zeros(K)
        self.beta_obs = np.zeros(K)
        self.beta_last = np.zeros(K)
        F = hyper.feature_dim
        self._theta_empty = np.zeros(0)
        if F:
            self.z = np.tile(hyper.z0, (K, 1))
            self.z_cov = np.zeros((K, F, F))
            self.z_obs = np.zeros((K, F))
            self.z_last = np.zeros(K)
        else:
            self.z = np.zeros((K, 0))
            self.z_cov = np.zeros((K, 0, 0))
            self.z_obs = np.zeros((K, 0))
            self.z_last = np.zeros(K)
        self.rng = np.random.Generator(np.random.PCG64(seed))
        self.n_updates = 0

    # -- prediction ---------------------------------------------------------

    def predict_profile(
        self, user_id: str, placement_id: str, features: np.ndarray | None = None
    ) -> np.ndarray:
        """Expected revenue per level; unknown entities fall back to the
        prior means, which is the cold-start behavior. Pure."""
        h = self.hyper
        u = self.users.get(user_id)
        p = self.placements.get(placement_id)
        xf = u.factors if u is not None else h.x0[None, :]
        yf = p.factors if p is not None else h.y0[None, :]
        profile = self.beta + np.sum(xf * yf, axis=1)
        if h.feature_dim:
            theta = self._check_features(features)
            profile = profile + self.z @ theta
        elif features is not None and len(features):
            raise ConfigError("features passed but feature_dim is 0")
        return profile

    def _check_features(self, features) -> np.ndarray:
        theta = np.asarray(
            features if features is not None else (), dtype=np.float64
        )
        if theta.shape != (self.hyper.feature_dim,):
            raise ConfigError(
                f"feature vector must have length {self.hyper.feature_dim}"
            )
        return theta

    # -- entity management --------------------------------------------------

    def _get_or_create(self, table: OrderedDict, entity_id: str, prior: np.ndarray,
                       cap: int | None, t: float) -> EntityState:
        state = table.get(entity_id)
        if state is None:
            if cap is not None and len(table) >= cap:
                table.popitem(last=False)
            noise = self.rng.normal(
                0.0, self.hyper.init_noise_stddev, (self.grid.k, prior.shape[0])
            )
            state = EntityState.fresh(self.grid.k, prior, noise, t)
            table[entity_id] = state
        else:
            table.move_to_end(entity_id)
        return state

    # -- updates ------------------------------------------------------------

    def update(
        self,
        user_id: str,
        placement_id: str,
        timestamp: int,
        target: np.ndarray,
        features: np.ndarray | None = None,
        mask: np.ndarray | None = None,
    ) -> None:
        """Fold one auction's per-level revenue vector into the model.

        Runs the configured number of alternated solves against the decayed
        accumulators, then folds the new observation in. ``mask`` limits the
        touched levels (masked-out levels are left bit-identical).
        """
        h = self.hyper
        K = self.grid.k
        target = np.asarray(target, dtype=np.float64)
        if target.shape != (K,):
            raise ConfigError(f"target must have shape ({K},)")
        if mask is None:
            mask = np.ones(K, dtype=np.bool_)
        else:
            mask = np.asarray(mask, dtype=np.bool_)
            if mask.shape != (K,):
                raise ConfigError(f"mask must have shape ({K},)")
            if not mask.any():
                return
        if h.feature_dim:
            theta = self._check_features(features)
        else:
            theta = self._theta_empty
        t = float(timestamp)
        u = self.users.get(user_id)
        p = self.placements.get(placement_id)
        if self.out_of_order == "reject":
            for st in (u, p):
                if st is not None and t < st.last_update[mask].max():
                    raise OutOfOrderError(
                        f"timestamp {timestamp} precedes entity last update"
                    )
            if t < self.beta_last[mask].max():
                raise OutOfOrderError(
                    f"timestamp {timestamp} precedes bias last update"
                )
        u = self._get_or_create(self.users, user_id, h.x0, self.max_users, t)
        p = self._get_or_create(
            self.placements, placement_id, h.y0, self.max_placements, t
        )
        zp = h.feature_precision if h.feature_dim else np.zeros((0, 0))
        z0 = h.z0 if h.feature_dim else np.zeros(0)
        kernels.revenue_update(
            mask, target, t,
            u.factors, u.cov, u.obs, u.last_update,
            p.factors, p.cov, p.obs, p.last_update,
            self.beta, self.beta_cov, self.beta_obs, self.beta_last,
            h.x0, h.y0, h.beta0,
            h.user_precision, h.placement_precision, h.bias_precision,
            h.gamma_revenue, h.gamma_revenue, h.gamma_revenue,
            h.als_iterations,
            theta, self.z, self.z_cov, self.z_obs, self.z_last, z0, zp,
            h.gamma_revenue,
        )
        self.n_updates += 1

    def decay_only(self, kind: str, entity_id: str, timestamp: int) -> None:
        """Explicitly age an entity's accumulators to ``timestamp``."""
        table = {"user": self.users, "placement": self.placements}[kind]
        state = table.get(entity_id)
        if state is None:
            return
        t = float(timestamp)
        if (t < state.last_update).any():
            raise OutOfOrderError("cannot decay into the past")
        state.decay(t, self.hyper.gamma_revenue)


# -- offline batch ALS (also the online path's test oracle) ------------------


def als_loss(
    events, grid: FloorGrid, hyper: HyperParams,
    beta: np.ndarray, x: dict, y: dict, t_ref: float,
) -> float:
    """Time-weighted regularized squared loss, summed over levels."""
    h = hyper
    total = 0.0
    for user_id, placement_id, t, target in events:
        w = h.gamma_revenue ** ((t_ref - t) / MS_PER_SECOND)
        resid = np.asarray(target) - beta - np.sum(x[user_id] * y[placement_id], axis=1)
        total += w * float(resid @ resid)
    for xu in x.values():
        d = xu - h.x0
        total += float(np.einsum("kl,lm,km->", d, h.user_precision, d))
    for yp in y.values():
        d = yp - h.y0
        total += float(np.einsum("kl,lm,km->", d, h.placement_precision, d))
    db = beta - h.beta0
    total += float(h.bias_precision * db @ db)
    return total


def batch_fit(
    events,
    grid: FloorGrid,
    hyper: HyperParams,
    iterations: int = 20,
    seed: int = 0,
    track_loss: bool = False,
):
    """Full alternating least squares over a finished event list.

    ``events`` is a list of ``(user_id, placement_id, timestamp_ms,
    revenue_vector)``. Returns a warm :class:`ModelStore` (and the per-sweep
    loss trace when ``track_loss``). Weights decay toward the latest event
    time, matching the online recursion's reference point.
    """
    if not events:
        raise ConfigError("batch_fit needs a nonempty event list")
    h = hyper
    K = grid.k
    L = h.latent_dim
    t_ref = float(max(e[2] for e in events))
    rng = np.random.Generator(np.random.PCG64(seed))
    user_ids = list(dict.fromkeys(e[0] for e in events))
    placement_ids = list(dict.fromkeys(e[1] for e in events))
    x = {u: h.x0 + rng.normal(0, h.init_noise_stddev, (K, L)) for u in user_ids}
    y = {p: h.y0 + rng.normal(0, h.init_noise_stddev, (K, L)) for p in placement_ids}
    beta = np.full(K, h.beta0)

    by_user: dict[str, list[int]] = {u: [] for u in user_ids}
    by_placement: dict[str, list[int]] = {p: [] for p in placement_ids}
    ev = []
    for i, (u, p, t, target) in enumerate(events):
        ev.append((u, p, float(t), np.asarray(target, dtype=np.float64)))
        by_user[u].append(i)
        by_placement[p].append(i)
    w = np.array([h.gamma_revenue ** ((t_ref - t) / MS_PER_SECOND) for _, _, t, _ in ev])

    losses = []
    for _ in range(iterations):
        for u in user_ids:
            idx = by_user[u]
            ys = np.stack([y[ev[i][1]] for i in idx])          # (n, K, L)
            ws = w[idx]
            targets = np.stack([ev[i][3] for i in idx])        # (n, K)
            a = np.einsum("n,nkl,nkm->klm", ws, ys, ys) + h.user_precision
            resid = targets - beta - ys @ h.x0
            rhs = np.einsum("n,nk,nkl->kl", ws, resid, ys)
            x[u] = h.x0 + np.linalg.solve(a, rhs[..., None])[..., 0]
        for p in placement_ids:
            idx = by_placement[p]
            xs = np.stack([x[ev[i][0]] for i in idx])
            ws = w[idx]
            targets = np.stack([ev[i][3] for i in idx])
            a = np.einsum("n,nkl,nkm->klm", ws, xs, xs) + h.placement_precision
            resid = targets - beta - xs @ h.y0
            rhs = np.einsum("n,nk,nkl->kl", ws, resid, xs)
            y[p] = h.y0 + np.linalg.solve(a, rhs[..., None])[..., 0]
        num = np.zeros(K)
        for i, (u, p, t, target) in enumerate(ev):
            num += w[i] * (target - np.sum(x[u] * y[p], axis=1))
        beta = h.beta0 + num / (w.sum() + h.bias_precision)
        if track_loss:
            losses.append(als_loss(ev, grid, h, beta, x, y, t_ref))

    store = ModelStore(grid, hyper, seed=seed)
    store.beta = beta
    store.beta_cov = np.full(K, w.sum())
    store.beta_last = np.full(K, t_ref)
    num = np.zeros(K)
    for i, (u, p, t, target) in enumerate(ev):
        num += w[i] * (target - np.sum(x[u] * y[p], axis=1))
    store.beta_obs = num
    for u in user_ids:
        idx = by_user[u]
        ys = np.stack([y[ev[i][1]] for i in idx])
        ws = w[idx]
        targets = np.stack([ev[i][3] for i in idx])
        cov = np.einsum("n,nkl,nkm->klm", ws, ys, ys)
        resid = targets - beta - ys @ h.x0
        obs = np.einsum("n,nk,nkl->kl", ws, resid, ys)
        store.users[u] = EntityState(
            factors=x[u], cov=cov, obs=obs, last_update=np.full(K, t_ref)
        )
    for p in placement_ids:
        idx = by_placement[p]
        xs = np.stack([x[ev[i][0]] for i in idx])
        ws = w[idx]
        targets = np.stack([ev[i][3] for i in idx])
        cov = np.einsum("n,nkl,nkm->klm", ws, xs, xs)
        resid = targets - beta - xs @ h.y0
        obs = np.einsum("n,nk,nkl->kl", ws, resid, xs)
        store.placements[p] = EntityState(
            factors=y[p], cov=cov, obs=obs, last_update=np.full(K, t_ref)
        )
    if track_loss:
        return store, losses
    return store
