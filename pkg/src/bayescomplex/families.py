"""Model + prior bundles with vectorized kernels.

The complexity estimators and the posterior machinery are generic over a
"family": something that can sample parameters from its prior, measure the
exact mean-squared distance between a parameter's function and a target,
evaluate prior log-densities, and provide an importance-sampling center for
a realizable target. Two families exist: the orthonormal-basis linear model
and the shallow ReLU network in the product parametrization.

All batch kernels work on plain (n, dim) parameter matrices; the distance
kernels are closed-form exact (no quadrature) so that ten-million-draw Monte
Carlo runs stay cheap and unbiased.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .models import (
    BasisSpec,
    LinearModelParams,
    ShallowNetParams,
    basis_matrix,
    min_norm_realization,
)
from .priors import LinearPriorSpec, NnPriorSpec
from .pwl import PwlFunction

_LOG_2PI = math.log(2.0 * math.pi)


# --------------------------------------------------------------------------
# Linear family
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class LinearTarget:
    """A target for the linear family: coefficients plus an optional
    unrealizable component, recorded through its contribution perp_sq to the
    expected squared distance."""

    w: tuple[float, ...]
    perp_sq: float = 0.0

    @property
    def kappa(self) -> float:
        return float(np.linalg.norm(self.w))


class LinearFamily:
    def __init__(self, basis: BasisSpec, prior: LinearPriorSpec):
        self.basis = basis
        self.prior = prior
        self.dim = basis.d

    def sample_matrix(self, n: int, gen: np.random.Generator) -> np.ndarray:
        return gen.normal(0.0, math.sqrt(self.prior.sigma_w_sq), size=(n, self.dim))

    def dist_sq(self, target: LinearTarget, thetas: np.ndarray) -> np.ndarray:
        diff = thetas - np.asarray(target.w)
        return 0.5 * np.einsum("ij,ij->i", diff, diff) + target.perp_sq

    def log_prior_density(self, thetas: np.ndarray) -> np.ndarray:
        s2 = self.prior.sigma_w_sq
        quad = np.einsum("ij,ij->i", thetas, thetas)
        return -0.5 * quad / s2 - 0.5 * self.dim * (_LOG_2PI + math.log(s2))

    # -- importance-sampling cloud (all-Gaussian) ---------------------------

    def is_center(self, target: LinearTarget) -> np.ndarray:
        return np.asarray(target.w, dtype=float)

    def cloud_sample(self, n, center, scale, gen) -> np.ndarray:
        return gen.normal(center, scale, size=(n, self.dim))

    def cloud_log_density(self, thetas, center, scale) -> np.ndarray:
        z = (thetas - center) / scale
        quad = np.einsum("ij,ij->i", z, z)
        return -0.5 * quad - self.dim * (0.5 * _LOG_2PI + math.log(scale))

    # -- data-space kernels --------------------------------------------------

    def design(self, xs: np.ndarray) -> np.ndarray:
        return basis_matrix(self.basis, xs)

    def predict_batch(self, thetas: np.ndarray, xs: np.ndarray) -> np.ndarray:
        return thetas @ self.design(xs).T

    def forward_and_jac(self, theta: np.ndarray, xs: np.ndarray):
        J = self.design(xs)
        return J @ theta, J

    def grad_log_prior(self, theta: np.ndarray) -> np.ndarray:
        return -theta / self.prior.sigma_w_sq

    def reflect(self, theta: np.ndarray) -> np.ndarray:
        return theta  # unbounded support

    def params_from_vector(self, theta: np.ndarray) -> LinearModelParams:
        return LinearModelParams(tuple(np.asarray(theta, dtype=float)))


# --------------------------------------------------------------------------
# Piecewise-linear target moments (closed-form building blocks)
# --------------------------------------------------------------------------


class PwlMoments:
    """Precomputed integrals of a target g on [0, 1] against ramp functions.

    Supports the exact batched evaluation of E_x[(f_theta - g)^2] under
    U([0, 1]) without constructing per-sample piecewise functions.
    """

    def __init__(self, g: PwlFunction):
        if abs(g.domain_lo) > 1e-12 or abs(g.domain_hi - 1.0) > 1e-12:
            raise ConfigError("target must live on [0, 1]")
        self.g = g
        pts = np.unique(g.breakpoints())
        vals = g(pts)
        seg = np.diff(pts)
        a, b = vals[:-1], vals[1:]
        # E[g], E[g^2] over U([0,1]) (density 1 on the unit interval).
        self.mean = float(np.sum(seg * (a + b) / 2.0))
        self.mean_sq = float(np.sum(seg * (a * a + a * b + b * b) / 3.0))
        self._pts = pts
        self._g_at = vals
        self._slope = (b - a) / seg
        # Suffix moments S0(j) = int_{s_j}^1 g dx and S1(j) = int_{s_j}^1 x g dx.
        s0_seg = seg * (a + b) / 2.0
        x0, x1 = pts[:-1], pts[1:]
        alpha = a - self._slope * x0
        s1_seg = alpha * (x1**2 - x0**2) / 2.0 + self._slope * (x1**3 - x0**3) / 3.0
        self._S0 = np.concatenate([np.cumsum(s0_seg[::-1])[::-1], [0.0]])
        self._S1 = np.concatenate([np.cumsum(s1_seg[::-1])[::-1], [0.0]])

    def ramp_inner(self, b: np.ndarray) -> np.ndarray:
        """I(b) = int_0^1 max(0, x - b) g(x) dx for an array of thresholds."""
        b = np.asarray(b, dtype=float)
        m = np.clip(b, 0.0, 1.0)
        j = np.clip(np.searchsorted(self._pts, m, side="right") - 1, 0, len(self._pts) - 2)
        x0 = self._pts[j]
        x1 = self._pts[j + 1]
        alpha = self._g_at[j] - self._slope[j] * x0
        beta = self._slope[j]

        def F(x):
            # antiderivative of (x - b)(alpha + beta x)
            return beta * x**3 / 3.0 + (alpha - b * beta) * x**2 / 2.0 - b * alpha * x

        partial = F(x1) - F(m)
        tail = self._S1[j + 1] - b * self._S0[j + 1]
        out = partial + tail
        return np.where(b >= 1.0, 0.0, out)


def ramp_mean(b: np.ndarray) -> np.ndarray:
    """int_0^1 max(0, x - b) dx."""
    b = np.asarray(b, dtype=float)
    bneg = np.maximum(-b, 0.0)
    return np.where(b < 1.0, ((1.0 - b) ** 2 - bneg**2) / 2.0, 0.0)


def ramp_cross(bi: np.ndarray, bj: np.ndarray) -> np.ndarray:
    """int_0^1 max(0, x - bi) max(0, x - bj) dx, broadcast over inputs."""
    m = np.clip(np.maximum(bi, bj), 0.0, 1.0)

    def F(x):
        return x**3 / 3.0 - (bi + bj) * x**2 / 2.0 + bi * bj * x

    return np.where(m >= 1.0, 0.0, F(1.0) - F(m))


# --------------------------------------------------------------------------
# Shallow ReLU family
# --------------------------------------------------------------------------


class ShallowNetFamily:
    """Single-hidden-layer ReLU networks on [0, 1] under the product prior.

    Flat layout: [w1 (k), w2 (k), b1 (k), b2]; dim = 3k + 1.
    """

    def __init__(self, k: int, prior: NnPriorSpec):
        if k < 1:
            raise ConfigError("node count must be >= 1")
        self.k = k
        self.prior = prior
        self.dim = 3 * k + 1
        # Distance computations allocate n*k*k scratch; cap chunk size.
        self._chunk = max(1024, int(4_000_000 / (k * k)))

    # -- layout helpers ------------------------------------------------------

    def split(self, thetas: np.ndarray):
        k = self.k
        return (
            thetas[:, :k],
            thetas[:, k : 2 * k],
            thetas[:, 2 * k : 3 * k],
            thetas[:, 3 * k],
        )

    def params_from_vector(self, theta: np.ndarray) -> ShallowNetParams:
        return ShallowNetParams.from_flat(theta, self.k)

    # -- prior ----------------------------------------------------------------

    def sample_matrix(self, n: int, gen: np.random.Generator) -> np.ndarray:
        k, p = self.k, self.prior
        out = np.empty((n, self.dim))
        sw = math.sqrt(p.sigma_w_sq)
        out[:, : 2 * k] = gen.normal(0.0, sw, size=(n, 2 * k))
        out[:, 2 * k : 3 * k] = gen.uniform(0.0, p.M, size=(n, k))
        out[:, 3 * k] = gen.normal(0.0, math.sqrt(p.sigma_b_sq), size=n)
        return out

    def log_prior_density(self, thetas: np.ndarray) -> np.ndarray:
        k, p = self.k, self.prior
        w1, w2, b1, b2 = self.split(thetas)
        quad = np.einsum("ij,ij->i", w1, w1) + np.einsum("ij,ij->i", w2, w2)
        logp = -0.5 * quad / p.sigma_w_sq
        logp = logp - k * (_LOG_2PI + math.log(p.sigma_w_sq))
        logp = logp - k * math.log(p.M)
        logp = logp - 0.5 * b2**2 / p.sigma_b_sq - 0.5 * (_LOG_2PI + math.log(p.sigma_b_sq))
        inside = np.all((b1 >= 0.0) & (b1 <= p.M), axis=1)
        return np.where(inside, logp, -np.inf)

    # -- exact distance to a piecewise-linear target --------------------------

    def dist_sq(self, target, thetas: np.ndarray) -> np.ndarray:
        moments = target if isinstance(target, PwlMoments) else PwlMoments(target)
        n = thetas.shape[0]
        out = np.empty(n)
        for lo in range(0, n, self._chunk):
            hi = min(n, lo + self._chunk)
            out[lo:hi] = self._dist_sq_chunk(moments, thetas[lo:hi])
        return out

    def _dist_sq_chunk(self, mo: PwlMoments, thetas: np.ndarray) -> np.ndarray:
        w1, w2, b1, b2 = self.split(thetas)
        u = w1 * w2
        m1 = ramp_mean(b1)
        cross = ramp_cross(b1[:, :, None], b1[:, None, :])
        e_f_sq = (
            b2**2
            + 2.0 * b2 * np.einsum("ij,ij->i", u, m1)
            + np.einsum("ij,ik,ijk->i", u, u, cross)
        )
        inner = mo.ramp_inner(b1.ravel()).reshape(b1.shape)
        e_fg = b2 * mo.mean + np.einsum("ij,ij->i", u, inner)
        return np.maximum(e_f_sq - 2.0 * e_fg + mo.mean_sq, 0.0)

    # -- importance-sampling cloud --------------------------------------------

    def is_center(self, g: PwlFunction) -> np.ndarray:
        theta = min_norm_realization(g, self.k)
        flat = theta.flat()
        k = self.k
        # Surplus nodes sit at 1.5 for norm accounting; recenter them inside
        # the prior's bias support while keeping them inactive on [0, 1].
        surplus = flat[2 * k : 3 * k] > 1.0
        flat[2 * k : 3 * k][surplus] = (1.0 + self.prior.M) / 2.0
        return flat

    def cloud_sample(self, n, center, scale, gen) -> np.ndarray:
        k = self.k
        out = np.empty((n, self.dim))
        out[:, : 2 * k] = gen.normal(center[: 2 * k], scale, size=(n, 2 * k))
        out[:, 2 * k : 3 * k] = gen.uniform(
            center[2 * k : 3 * k] - scale, center[2 * k : 3 * k] + scale, size=(n, k)
        )
        out[:, 3 * k] = gen.normal(center[3 * k], scale, size=n)
        return out

    def cloud_log_density(self, thetas, center, scale) -> np.ndarray:
        k = self.k
        gauss_cols = np.concatenate([np.arange(2 * k), [3 * k]])
        z = (thetas[:, gauss_cols] - center[gauss_cols]) / scale
        logp = -0.5 * np.einsum("ij,ij->i", z, z) - (2 * k + 1) * (
            0.5 * _LOG_2PI + math.log(scale)
        )
        b = thetas[:, 2 * k : 3 * k]
        cb = center[2 * k : 3 * k]
        inside = np.all(np.abs(b - cb) <= scale, axis=1)
        logp = logp - k * math.log(2.0 * scale)
        return np.where(inside, logp, -np.inf)

    # -- data-space kernels ----------------------------------------------------

    def predict_batch(self, thetas: np.ndarray, xs: np.ndarray) -> np.ndarray:
        n = thetas.shape[0]
        out = np.empty((n, xs.size))
        chunk = max(256, int(2_000_000 / max(1, self.k * xs.size)))
        for lo in range(0, n, chunk):
            hi = min(n, lo + chunk)
            w1, w2, b1, b2 = self.split(thetas[lo:hi])
            u = w1 * w2
            acts = np.maximum(0.0, xs[None, None, :] - b1[:, :, None])
            out[lo:hi] = np.einsum("ij,ijn->in", u, acts) + b2[:, None]
        return out

    def forward_and_jac(self, theta: np.ndarray, xs: np.ndarray):
        k = self.k
        w1, w2, b1, b2 = theta[:k], theta[k : 2 * k], theta[2 * k : 3 * k], theta[3 * k]
        ramps = np.maximum(0.0, xs[:, None] - b1[None, :])  # (N, k)
        active = (xs[:, None] > b1[None, :]).astype(float)
        preds = ramps @ (w1 * w2) + b2
        J = np.empty((xs.size, self.dim))
        J[:, :k] = ramps * w2[None, :]
        J[:, k : 2 * k] = ramps * w1[None, :]
        J[:, 2 * k : 3 * k] = -active * (w1 * w2)[None, :]
        J[:, 3 * k] = 1.0
        return preds, J

    def grad_log_prior(self, theta: np.ndarray) -> np.ndarray:
        k, p = self.k, self.prior
        g = np.zeros_like(theta)
        g[: 2 * k] = -theta[: 2 * k] / p.sigma_w_sq
        g[3 * k] = -theta[3 * k] / p.sigma_b_sq
        return g

    def reflect(self, theta: np.ndarray) -> np.ndarray:
        """Fold hidden biases back into [0, M] (reflecting boundaries)."""
        k, M = self.k, self.prior.M
        out = theta.copy()
        b = np.remainder(out[2 * k : 3 * k], 2.0 * M)
        out[2 * k : 3 * k] = np.where(b > M, 2.0 * M - b, b)
        return out

    def expected_prior_norm_sq(self) -> float:
        p = self.prior
        return 2 * self.k * p.sigma_w_sq + self.k * p.M**2 / 3.0 + p.sigma_b_sq
