"""Gibbs posteriors, SGLD sampling, clipped losses, and PAC-Bayes bounds.

The Gibbs posterior at temperature sigma_y_sq reweights the prior by
exp(-sum (y_n - f_theta(x_n))^2 / (2 sigma_y_sq)); for the linear family it
is Gaussian and computed in closed form, otherwise SGLD samples it. Losses
reported anywhere are the clipped quadratic min((h(x) - y)^2, C). The module
also provides the PAC-Bayes right-hand side, the Gaussian KL, the
divergence upper bound through the dataset-conditional complexity, the main
generalization bound, and the bisection search for the temperature at which
the expected empirical loss equals (1 + beta) sigma_e_sq.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable

import numpy as np
from scipy import linalg
from scipy.stats import norm as _norm

from .complexity import ComplexityEstimate
from .errors import CheckFailure, ConfigError, NumericalError
from .families import LinearFamily, LinearTarget
from .models import BasisSpec, basis_matrix
from .priors import LinearPriorSpec
from .pwl import L2Measure
from .rng import SeededRng


# --------------------------------------------------------------------------
# Data and loss types
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class Dataset:
    xs: np.ndarray
    ys: np.ndarray
    sigma_e_sq: float
    generator: object
    seed: SeededRng

    def __post_init__(self):
        object.__setattr__(self, "xs", np.asarray(self.xs, dtype=float))
        object.__setattr__(self, "ys", np.asarray(self.ys, dtype=float))
        if self.xs.shape != self.ys.shape:
            raise ConfigError("xs and ys must have matching shapes")

    @property
    def n(self) -> int:
        return int(self.xs.size)


@dataclass(frozen=True)
class LossSpec:
    clip_C: float = 4.0

    def __post_init__(self):
        if self.clip_C <= 0:
            raise ConfigError(f"clip_C must be > 0, got {self.clip_C}")


@dataclass(frozen=True)
class LossEstimate:
    value: float
    std_err: float


@dataclass(frozen=True)
class SgldConfig:
    eta: float
    steps: int
    burn_in: int
    thin: int
    sigma_y_sq: float

    def __post_init__(self):
        if self.eta <= 0:
            raise ConfigError(f"eta must be > 0, got {self.eta}")
        if self.steps <= self.burn_in:
            raise ConfigError("steps must exceed burn_in")
        if self.thin < 1:
            raise ConfigError("thin must be >= 1")
        if self.sigma_y_sq <= 0:
            raise ConfigError(f"sigma_y_sq must be > 0, got {self.sigma_y_sq}")


class GaussianPosterior:
    def __init__(self, mean: np.ndarray, covariance: np.ndarray):
        self.mean = np.asarray(mean, dtype=float)
        self.covariance = np.asarray(covariance, dtype=float)
        if self.covariance.shape != (self.mean.size, self.mean.size):
            raise ConfigError("covariance shape does not match mean")
        if not np.allclose(self.covariance, self.covariance.T, atol=1e-10):
            raise NumericalError("covariance is not symmetric")
        try:
            self._chol = np.linalg.cholesky(self.covariance)
        except np.linalg.LinAlgError as exc:
            raise NumericalError(f"covariance is not positive definite: {exc}") from exc

    @property
    def d(self) -> int:
        return self.mean.size

    def sample(self, n: int, gen: np.random.Generator) -> np.ndarray:
        return self.mean + gen.standard_normal((n, self.d)) @ self._chol.T


# --------------------------------------------------------------------------
# Data generation and losses
# --------------------------------------------------------------------------


def generate_dataset(
    g, N: int, sigma_e_sq: float, measure: L2Measure, rng: SeededRng
) -> Dataset:
    """ys = g(xs) + eta with eta iid N(0, sigma_e_sq), xs iid from measure."""
    if N < 1:
        raise ConfigError(f"N must be >= 1, got {N}")
    if sigma_e_sq < 0:
        raise ConfigError(f"sigma_e_sq must be >= 0, got {sigma_e_sq}")
    gen = rng.generator()
    xs = gen.uniform(measure.lo, measure.hi, size=N)
    ys = np.asarray(g(xs), dtype=float)
    if sigma_e_sq > 0:
        ys = ys + gen.normal(0.0, math.sqrt(sigma_e_sq), size=N)
    return Dataset(xs=xs, ys=ys, sigma_e_sq=sigma_e_sq, generator=g, seed=rng)


def clipped_loss(pred, y, spec: LossSpec):
    return np.minimum((np.asarray(pred) - np.asarray(y)) ** 2, spec.clip_C)


def empirical_loss_of_Q(
    draws: np.ndarray, S: Dataset, spec: LossSpec, family
) -> LossEstimate:
    """L_S(Q) = E_{h~Q}[(1/N) sum_i min((h(x_i) - y_i)^2, C)] over posterior
    draws; the standard error covers the h-sampling only (S is fixed)."""
    draws = np.atleast_2d(np.asarray(draws, dtype=float))
    if draws.shape[0] == 0:
        raise ConfigError("empirical_loss_of_Q needs at least one posterior draw")
    preds = family.predict_batch(draws, S.xs)
    per_draw = clipped_loss(preds, S.ys[None, :], spec).mean(axis=1)
    n = per_draw.size
    return LossEstimate(float(per_draw.mean()), float(per_draw.std() / math.sqrt(n)))


def true_loss_of_Q(
    draws: np.ndarray,
    g,
    sigma_e_sq: float,
    measure: L2Measure,
    spec: LossSpec,
    n_x: int,
    rng: SeededRng,
    family,
) -> LossEstimate:
    """L_D(Q) estimated on fresh (x, y) pairs; the standard error combines
    the h-draw and the fresh-data axes conservatively."""
    draws = np.atleast_2d(np.asarray(draws, dtype=float))
    if draws.shape[0] == 0:
        raise ConfigError("true_loss_of_Q needs at least one posterior draw")
    if n_x < 2:
        raise ConfigError(f"n_x must be >= 2, got {n_x}")
    gen = rng.generator()
    xs = gen.uniform(measure.lo, measure.hi, size=n_x)
    ys = np.asarray(g(xs), dtype=float)
    if sigma_e_sq > 0:
        ys = ys + gen.normal(0.0, math.sqrt(sigma_e_sq), size=n_x)
    # Chunk over draws so the (draws, n_x) loss matrix never exceeds a few
    # hundred megabytes; the per-draw and per-point means accumulate exactly.
    n_draws = draws.shape[0]
    rows = max(1, int(4_000_000 / n_x))
    per_draw = np.empty(n_draws)
    point_sums = np.zeros(n_x)
    for start in range(0, n_draws, rows):
        block = draws[start : start + rows]
        losses = clipped_loss(family.predict_batch(block, xs), ys[None, :], spec)
        per_draw[start : start + block.shape[0]] = losses.mean(axis=1)
        point_sums += losses.sum(axis=0)
    per_point = point_sums / n_draws
    se_h = per_draw.std() / math.sqrt(per_draw.size)
    se_x = per_point.std() / math.sqrt(per_point.size)
    return LossEstimate(float(per_draw.mean()), float(math.hypot(se_h, se_x)))


# --------------------------------------------------------------------------
# Conjugate linear posterior and exact clipped-loss formulas
# --------------------------------------------------------------------------


def conjugate_posterior_linear(
    S: Dataset, prior: LinearPriorSpec, basis: BasisSpec, sigma_y_sq: float
) -> GaussianPosterior:
    if sigma_y_sq <= 0:
        raise ConfigError(f"sigma_y_sq must be > 0, got {sigma_y_sq}")
    d = basis.d
    if S.n == 0:
        return GaussianPosterior(np.zeros(d), prior.sigma_w_sq * np.eye(d))
    phi = basis_matrix(basis, S.xs)
    if not np.all(np.isfinite(phi)):
        raise NumericalError("design matrix contains non-finite entries")
    precision = phi.T @ phi / sigma_y_sq + np.eye(d) / prior.sigma_w_sq
    try:
        cho = linalg.cho_factor(precision)
    except linalg.LinAlgError as exc:
        raise NumericalError(f"posterior precision not positive definite: {exc}") from exc
    cov = linalg.cho_solve(cho, np.eye(d))
    mean = linalg.cho_solve(cho, phi.T @ S.ys / sigma_y_sq)
    return GaussianPosterior(mean, (cov + cov.T) / 2.0)


def expected_clipped_loss_gaussian(mu, s_sq, C: float):
    """E[min(r^2, C)] for r ~ N(mu, s_sq), exactly, via truncated-normal
    second moments. Vectorized over mu and s_sq."""
    mu = np.asarray(mu, dtype=float)
    s = np.sqrt(np.asarray(s_sq, dtype=float))
    root = math.sqrt(C)
    with np.errstate(divide="ignore", invalid="ignore"):
        alpha = np.where(s > 0, (-root - mu) / s, 0.0)
        beta = np.where(s > 0, (root - mu) / s, 0.0)
    phi_a, phi_b = _norm.pdf(alpha), _norm.pdf(beta)
    cdf_a, cdf_b = _norm.cdf(alpha), _norm.cdf(beta)
    mass = cdf_b - cdf_a
    second = (mu * mu + s * s) * mass + 2.0 * mu * s * (phi_a - phi_b) + s * s * (
        alpha * phi_a - beta * phi_b
    )
    out = second + C * (1.0 - mass)
    degenerate = s == 0.0
    if np.any(degenerate):
        out = np.where(degenerate, np.minimum(mu * mu, C), out)
    return out


def conjugate_empirical_loss(
    S: Dataset, post: GaussianPosterior, basis: BasisSpec, spec: LossSpec
) -> float:
    """Exact E_{h~Q}[L_S(h)] for a Gaussian posterior over linear weights."""
    phi = basis_matrix(basis, S.xs)
    mu = phi @ post.mean - S.ys
    s_sq = np.einsum("ij,jk,ik->i", phi, post.covariance, phi)
    return float(expected_clipped_loss_gaussian(mu, s_sq, spec.clip_C).mean())


def conjugate_true_loss(
    post: GaussianPosterior,
    target: LinearTarget,
    basis: BasisSpec,
    sigma_e_sq: float,
    measure: L2Measure,
    spec: LossSpec,
    n_nodes: int = 200,
) -> float:
    """E_{h~Q} E_{x,y}[min((h(x) - y)^2, C)] for a realizable linear target,
    by Gauss-Legendre quadrature of the exact per-x formula."""
    if target.perp_sq != 0.0:
        raise ConfigError("conjugate_true_loss requires a fully realizable target")
    nodes, weights = np.polynomial.legendre.leggauss(n_nodes)
    xs = (measure.lo + measure.hi) / 2.0 + (measure.hi - measure.lo) / 2.0 * nodes
    phi = basis_matrix(basis, xs)
    mu = phi @ (post.mean - np.asarray(target.w))
    s_sq = np.einsum("ij,jk,ik->i", phi, post.covariance, phi) + sigma_e_sq
    vals = expected_clipped_loss_gaussian(mu, s_sq, spec.clip_C)
    return float(np.sum(weights * vals) / 2.0)


# --------------------------------------------------------------------------
# SGLD
# --------------------------------------------------------------------------


def run_sgld(
    S: Dataset,
    family,
    cfg: SgldConfig,
    rng: SeededRng,
    inject_noise: bool = True,
    init: np.ndarray | None = None,
) -> np.ndarray:
    """Stochastic gradient Langevin chain targeting the Gibbs posterior.

    Update: theta <- theta - eta * (grad Lhat_loglik - (1/N) grad ln P)
    + sqrt(2 eta / N) N(0, I), with Lhat_loglik the full-sample mean of
    (y - f_theta(x))^2 / (2 sigma_y_sq). Hidden biases reflect at their
    uniform-prior boundaries. With inject_noise=False the chain is plain
    gradient descent to the MAP (diagnostic mode). Returns the post-burn-in,
    thinned draws as an (n_draws, dim) array.
    """
    gen = rng.generator()
    n = S.n
    n_eff = max(n, 1)
    if init is not None:
        theta = np.asarray(init, dtype=float).copy()
    else:
        theta = family.sample_matrix(1, gen)[0]
    fixed_design = family.design(S.xs) if isinstance(family, LinearFamily) and n else None
    noise_scale = math.sqrt(2.0 * cfg.eta / n_eff)
    draws = []
    for step in range(cfg.steps):
        if n:
            if fixed_design is not None:
                preds = fixed_design @ theta
                jac = fixed_design
            else:
                preds, jac = family.forward_and_jac(theta, S.xs)
            grad = jac.T @ (preds - S.ys) / (n * cfg.sigma_y_sq)
        else:
            grad = np.zeros_like(theta)
        grad -= family.grad_log_prior(theta) / n_eff
        theta = theta - cfg.eta * grad
        if inject_noise:
            theta = theta + noise_scale * gen.standard_normal(theta.size)
        theta = family.reflect(theta)
        norm = float(np.linalg.norm(theta))
        if norm > 1e6 or not np.isfinite(norm):
            raise NumericalError(
                f"SGLD diverged at step {step}: ||theta|| = {norm:.3g} "
                f"(eta={cfg.eta}, sigma_y_sq={cfg.sigma_y_sq})"
            )
        if step >= cfg.burn_in and (step - cfg.burn_in) % cfg.thin == 0:
            draws.append(theta.copy())
    return np.array(draws)


def batch_means_se(chain: np.ndarray, n_batches: int = 30) -> float:
    """Standard error of a correlated chain's mean via batch means."""
    chain = np.asarray(chain, dtype=float)
    m = chain.shape[0] // n_batches
    if m < 1:
        raise ConfigError("chain too short for the requested batch count")
    trimmed = chain[: m * n_batches]
    means = trimmed.reshape(n_batches, m, *chain.shape[1:]).mean(axis=1)
    return float(np.max(means.std(axis=0) / math.sqrt(n_batches)))


# --------------------------------------------------------------------------
# PAC-Bayes pieces
# --------------------------------------------------------------------------


def pac_bayes_rhs(L_S_Q: float, kl: float, N: int, C: float) -> float:
    if kl < 0:
        raise ConfigError(f"kl must be >= 0, got {kl}")
    if N < 1:
        raise ConfigError(f"N must be >= 1, got {N}")
    return L_S_Q + C * math.sqrt(kl / (2.0 * N))


def kl_gaussians(q: GaussianPosterior, p: GaussianPosterior) -> float:
    if q.d != p.d:
        raise ConfigError("dimension mismatch between posteriors")
    d = q.d
    chol_p = np.linalg.cholesky(p.covariance)
    solved = linalg.cho_solve((chol_p, True), q.covariance)
    trace = float(np.trace(solved))
    diff = p.mean - q.mean
    quad = float(diff @ linalg.cho_solve((chol_p, True), diff))
    logdet_p = 2.0 * float(np.sum(np.log(np.diag(chol_p))))
    chol_q = np.linalg.cholesky(q.covariance)
    logdet_q = 2.0 * float(np.sum(np.log(np.diag(chol_q))))
    return 0.5 * (trace + quad - d + logdet_p - logdet_q)


def divergence_upper_bound(
    chiE: ComplexityEstimate, N: int, sigma_y_sq: float, L_S_Q: float
) -> float:
    """KL(Q || P) <= chi^E - N L_S(Q) / (2 sigma_y_sq), floored at zero."""
    if not math.isfinite(chiE.chi):
        raise ConfigError("divergence bound needs a finite complexity estimate")
    if sigma_y_sq <= 0:
        raise ConfigError(f"sigma_y_sq must be > 0, got {sigma_y_sq}")
    return max(0.0, chiE.chi - N * L_S_Q / (2.0 * sigma_y_sq))


def theorem_bound(
    sigma_e_sq: float, beta: float, chi_sharp_at_beta_sigma: float, N: int, C: float
) -> float:
    """Main generalization bound:
    sigma_e_sq + beta sigma_e_sq + (C/sqrt(2)) sqrt(chi / N)."""
    if not 0.0 < beta <= 1.0:
        raise ConfigError(f"beta must lie in (0, 1], got {beta}")
    if not math.isfinite(chi_sharp_at_beta_sigma) or chi_sharp_at_beta_sigma < 0:
        raise ConfigError("chi must be finite and nonnegative")
    if N < 1:
        raise ConfigError(f"N must be >= 1, got {N}")
    return (
        sigma_e_sq
        + beta * sigma_e_sq
        + (C / math.sqrt(2.0)) * math.sqrt(chi_sharp_at_beta_sigma / N)
    )


def find_sigma_alg(
    beta: float,
    sigma_e_sq: float,
    dataset_generator: Callable[[SeededRng], Dataset],
    family,
    cfg: SgldConfig,
    tol: float,
    rng: SeededRng,
    loss_spec: LossSpec | None = None,
    n_replicas: int = 32,
    bracket: tuple[float, float] = (1e-6, 1e6),
    max_iter: int = 60,
) -> float:
    """Bisection on ln sigma_y_sq for E_S E_{h~Q(sigma_y_sq)}[L_S(h)] =
    (1 + beta) sigma_e_sq, using a fixed set of dataset replicas so the
    objective is monotone and deterministic across iterations. The linear
    family uses the exact conjugate expected loss; other families fall back
    to SGLD draws.
    """
    if not 0.0 < beta <= 1.0:
        raise ConfigError(f"beta must lie in (0, 1], got {beta}")
    if tol <= 0:
        raise ConfigError(f"tol must be > 0, got {tol}")
    spec = loss_spec if loss_spec is not None else LossSpec()
    replicas = [dataset_generator(rng.stream(i)) for i in range(n_replicas)]
    conjugate = isinstance(family, LinearFamily)

    def mean_loss(sigma_y_sq: float) -> float:
        losses = []
        for i, S in enumerate(replicas):
            if conjugate:
                post = conjugate_posterior_linear(S, family.prior, family.basis, sigma_y_sq)
                losses.append(conjugate_empirical_loss(S, post, family.basis, spec))
            else:
                draws = run_sgld(
                    S, family, replace(cfg, sigma_y_sq=sigma_y_sq), rng.stream(1000 + i)
                )
                losses.append(empirical_loss_of_Q(draws, S, spec, family).value)
        return float(np.mean(losses))

    target = (1.0 + beta) * sigma_e_sq
    lo, hi = math.log(bracket[0]), math.log(bracket[1])
    loss_lo, loss_hi = mean_loss(bracket[0]), mean_loss(bracket[1])
    if not loss_lo <= target <= loss_hi:
        raise CheckFailure(
            "sigma_alg bracket failure: "
            f"L(sigma_y_sq={bracket[0]:g}) = {loss_lo:.6g}, "
            f"L(sigma_y_sq={bracket[1]:g}) = {loss_hi:.6g}, target = {target:.6g}"
        )
    mid_val = bracket[0]
    for _ in range(max_iter):
        mid = (lo + hi) / 2.0
        mid_val = math.exp(mid)
        loss_mid = mean_loss(mid_val)
        if abs(loss_mid - target) <= tol:
            return mid_val
        if loss_mid < target:
            lo = mid
        else:
            hi = mid
    raise CheckFailure(
        f"sigma_alg bisection did not reach |L - {target:.6g}| <= {tol:g} "
        f"within {max_iter} iterations (last sigma_y_sq = {mid_val:.6g})"
    )
