"""Complexity estimators and closed forms.

Implements the sharp complexity chi#(g, eps^2) = -ln P_theta[E_x[(g - f_theta)^2] <= eps^2]
via naive Monte Carlo and defensive importance sampling, the limiting
complexity (weighted log-log slope regression), the closed-form q function
for the linear model, the exponential/empirical/with-noise complexity chain,
Minkowski codimension estimation for shallow-net representation sets, the
one-slope-change bounds, and the claimed product-density formula with an MC
diagnostic.

Conventions: natural logarithms throughout; eps arguments are radii and
eps_sq arguments are squared radii; every randomized estimate carries a
delta-method standard error.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, replace
from typing import Callable, Sequence

import numpy as np
from scipy import integrate, special

from .errors import ConfigError, InsufficientSamplesError
from .families import LinearFamily, LinearTarget, PwlMoments, ShallowNetFamily
from .priors import NnPriorSpec
from .pwl import PwlFunction
from .rng import SeededRng, partition_counts

_LOG_2PI = math.log(2.0 * math.pi)

#: Default geometric grid of eps radii for slope fits.
DEFAULT_EPS_GRID = (0.3, 0.2, 0.14, 0.1, 0.07, 0.05)


# --------------------------------------------------------------------------
# Result records
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class ComplexityEstimate:
    """A single complexity number with its provenance.

    ``chi`` is -log_prob for probability-based methods and the negative log
    of the relevant expectation for the exponential family of definitions.
    ``zero_hits`` marks rule-of-three lower bounds (chi = ln(n/3)) that must
    not enter slope regressions. ``infinite`` marks structurally impossible
    events (probability zero).
    """

    chi: float
    log_prob: float
    std_err: float
    n_samples: int
    n_hits: int
    epsilon_sq: float | None
    method: str
    zero_hits: bool = False
    infinite: bool = False


@dataclass(frozen=True)
class SlopeEstimate:
    slope: float
    intercept: float
    ci_halfwidth: float
    eps_grid: tuple[float, ...]
    per_eps: tuple[ComplexityEstimate, ...]
    note: str = ""


@dataclass(frozen=True)
class CodimQuery:
    g: PwlFunction
    k: int
    eps_grid: tuple[float, ...] | None = None
    radius: float | None = None


@dataclass(frozen=True)
class OneChangeResult:
    chi_hat: ComplexityEstimate
    lower: float
    upper: float
    assumptions_ok: bool
    violated: tuple[str, ...]


# --------------------------------------------------------------------------
# Closed-form q for the linear model
# --------------------------------------------------------------------------


def q_closed_form(kappa: float, sigma_w: float, eps: float, d: int) -> float:
    """P[ (1/2)||w - kappa e_0||^2 <= eps^2 ] for w ~ N(0, sigma_w^2 I_d).

    One-dimensional adaptive quadrature over the first coordinate, with the
    remaining d-1 coordinates integrated exactly through the regularized
    lower incomplete gamma CDF.
    """
    if kappa < 0:
        raise ConfigError(f"kappa must be >= 0, got {kappa}")
    if sigma_w <= 0:
        raise ConfigError(f"sigma_w must be > 0, got {sigma_w}")
    if not 0.0 < eps <= 1.0:
        raise ConfigError(f"eps must lie in (0, 1], got {eps}")
    if d < 1:
        raise ConfigError(f"d must be >= 1, got {d}")
    s2 = sigma_w * sigma_w
    r = math.sqrt(2.0) * eps
    shape = (d - 1) / 2.0

    def integrand(x: float) -> float:
        tail = math.exp(-((kappa + x) ** 2) / (2.0 * s2)) + math.exp(
            -((kappa - x) ** 2) / (2.0 * s2)
        )
        if d == 1:
            gamma_factor = 1.0
        else:
            gamma_factor = special.gammainc(shape, (r * r - x * x) / (2.0 * s2))
        return gamma_factor * tail

    val, _ = integrate.quad(integrand, 0.0, r, epsabs=0.0, epsrel=1e-12, limit=500)
    return val / math.sqrt(2.0 * math.pi * s2)


def chi_from_q(
    kappa: float, sigma_w: float, eps_sq: float, d: int, perp_sq: float = 0.0
) -> ComplexityEstimate:
    """Closed-form sharp complexity for a linear target at distance kappa.

    A target component outside the model span shifts the event to
    (1/2)||w - w~||^2 <= eps^2 - perp_sq; a nonpositive shifted radius means
    the event is empty.
    """
    eff = eps_sq - perp_sq
    if eff <= 0.0:
        return ComplexityEstimate(
            chi=math.inf,
            log_prob=-math.inf,
            std_err=0.0,
            n_samples=0,
            n_hits=0,
            epsilon_sq=eps_sq,
            method="ClosedFormQ",
            infinite=True,
        )
    q = q_closed_form(kappa, sigma_w, math.sqrt(eff), d)
    return ComplexityEstimate(
        chi=-math.log(q),
        log_prob=math.log(q),
        std_err=0.0,
        n_samples=0,
        n_hits=0,
        epsilon_sq=eps_sq,
        method="ClosedFormQ",
    )


# --------------------------------------------------------------------------
# Monte Carlo sharp complexity
# --------------------------------------------------------------------------


def _prepare(family, target):
    if isinstance(family, ShallowNetFamily) and isinstance(target, PwlFunction):
        return PwlMoments(target)
    return target


def _batch_rows(family) -> int:
    if isinstance(family, ShallowNetFamily):
        return min(200_000, max(4096, int(4_000_000 / (family.k * family.k))))
    return 1_000_000


def _rule_of_three(n: int, eps_sq: float, method: str) -> ComplexityEstimate:
    return ComplexityEstimate(
        chi=math.log(n / 3.0),
        log_prob=math.log(3.0 / n),
        std_err=math.inf,
        n_samples=n,
        n_hits=0,
        epsilon_sq=eps_sq,
        method=method,
        zero_hits=True,
    )


def sharp_complexity_mc(
    family,
    target,
    eps_sq: float,
    n: int,
    rng: SeededRng,
    workers: int = 1,
) -> ComplexityEstimate:
    """Naive Monte Carlo estimate of chi#."""
    if eps_sq <= 0:
        raise ConfigError(f"eps_sq must be > 0, got {eps_sq}")
    target = _prepare(family, target)
    rows = _batch_rows(family)
    hits = 0
    for w, count in enumerate(partition_counts(n, workers)):
        gen = rng.stream(w).generator()
        done = 0
        while done < count:
            m = min(rows, count - done)
            thetas = family.sample_matrix(m, gen)
            hits += int(np.count_nonzero(family.dist_sq(target, thetas) <= eps_sq))
            done += m
    if hits == 0:
        return _rule_of_three(n, eps_sq, "NaiveMC")
    p = hits / n
    se_chi = math.sqrt((1.0 - p) / (p * n))
    return ComplexityEstimate(
        chi=-math.log(p),
        log_prob=math.log(p),
        std_err=se_chi,
        n_samples=n,
        n_hits=hits,
        epsilon_sq=eps_sq,
        method="NaiveMC",
    )


def sharp_complexity_is(
    family,
    target,
    eps_sq: float,
    n: int,
    rng: SeededRng,
    cloud_width: float = 3.0,
    workers: int = 1,
) -> ComplexityEstimate:
    """Importance-sampling estimate of chi#.

    The proposal is the defensive mixture 0.5 * prior + 0.5 * cloud, where
    the cloud is centered at a minimum-norm realization of the target with
    per-coordinate scale cloud_width * sqrt(eps_sq). Weights are bounded by
    2 on the prior's support, and samples outside the support get weight 0,
    so the estimate stays unbiased.
    """
    if eps_sq <= 0:
        raise ConfigError(f"eps_sq must be > 0, got {eps_sq}")
    center = family.is_center(target)
    scale = cloud_width * math.sqrt(eps_sq)
    prepared = _prepare(family, target)
    rows = _batch_rows(family)
    log_half = math.log(0.5)
    s1 = 0.0
    s2 = 0.0
    hits = 0
    for w, count in enumerate(partition_counts(n, workers)):
        gen = rng.stream(w).generator()
        done = 0
        while done < count:
            m = min(rows, count - done)
            from_prior = gen.random(m) < 0.5
            n_p = int(np.count_nonzero(from_prior))
            thetas = np.empty((m, family.dim))
            if n_p:
                thetas[from_prior] = family.sample_matrix(n_p, gen)
            if m - n_p:
                thetas[~from_prior] = family.cloud_sample(m - n_p, center, scale, gen)
            logp = family.log_prior_density(thetas)
            logc = family.cloud_log_density(thetas, center, scale)
            logmix = np.logaddexp(logp, logc) + log_half
            weight = np.exp(logp - logmix)
            hit = family.dist_sq(prepared, thetas) <= eps_sq
            x = np.where(hit, weight, 0.0)
            s1 += float(x.sum())
            s2 += float((x * x).sum())
            hits += int(np.count_nonzero(x > 0.0))
            done += m
    if hits == 0 or s1 <= 0.0:
        return _rule_of_three(n, eps_sq, "ImportanceSampling")
    p = s1 / n
    var = max(s2 / n - p * p, 0.0)
    se_chi = math.sqrt(var / n) / p
    return ComplexityEstimate(
        chi=-math.log(p),
        log_prob=math.log(p),
        std_err=se_chi,
        n_samples=n,
        n_hits=hits,
        epsilon_sq=eps_sq,
        method="ImportanceSampling",
    )


# --------------------------------------------------------------------------
# Slope fitting and limiting complexity
# --------------------------------------------------------------------------


def fit_limiting_slope(
    per_eps: Sequence[ComplexityEstimate],
    eps_grid: Sequence[float],
    note: str = "",
) -> SlopeEstimate:
    """Weighted least-squares slope of log_prob against ln(eps).

    Weights are 1/std_err^2 with a 1e-12 floor so exact (closed-form)
    points behave as near-hard constraints; the ci_halfwidth is 1.96 times
    the known-variance WLS standard error of the slope.
    """
    if len(per_eps) != len(eps_grid):
        raise ConfigError("per_eps and eps_grid length mismatch")
    if len(eps_grid) < 3:
        raise ConfigError("slope regression needs at least 3 grid points")
    for est, eps in zip(per_eps, eps_grid):
        if est.zero_hits or est.infinite:
            raise InsufficientSamplesError(eps, est.n_samples)
    x = np.log(np.asarray(eps_grid, dtype=float))
    y = np.array([e.log_prob for e in per_eps])
    se = np.array([max(e.std_err, 1e-12) for e in per_eps])
    w = 1.0 / (se * se)
    sw = w.sum()
    sx = (w * x).sum()
    sy = (w * y).sum()
    sxx = (w * x * x).sum()
    sxy = (w * x * y).sum()
    det = sw * sxx - sx * sx
    slope = (sw * sxy - sx * sy) / det
    intercept = (sxx * sy - sx * sxy) / det
    ci = 1.96 * math.sqrt(sw / det)
    return SlopeEstimate(
        slope=float(slope),
        intercept=float(intercept),
        ci_halfwidth=float(ci),
        eps_grid=tuple(float(e) for e in eps_grid),
        per_eps=tuple(per_eps),
        note=note,
    )


def _check_eps_grid(eps_grid: Sequence[float]) -> tuple[float, ...]:
    grid = tuple(float(e) for e in eps_grid)
    if len(grid) < 3:
        raise ConfigError("eps_grid needs at least 3 points")
    if any(e <= 0 for e in grid):
        raise ConfigError("eps_grid values must be positive")
    if any(b >= a for a, b in zip(grid, grid[1:])):
        raise ConfigError("eps_grid must be strictly decreasing")
    return grid


def limiting_complexity(
    family,
    target,
    eps_grid: Sequence[float],
    n_per_eps: int,
    rng: SeededRng,
    cloud_width: float = 3.0,
    workers: int = 1,
) -> SlopeEstimate:
    """Finite-eps slope estimate of the limiting complexity, one
    importance-sampling run per grid point."""
    grid = _check_eps_grid(eps_grid)
    per_eps = []
    for i, eps in enumerate(grid):
        est = sharp_complexity_is(
            family,
            target,
            eps * eps,
            n_per_eps,
            rng.stream(100 + i),
            cloud_width=cloud_width,
            workers=workers,
        )
        if est.zero_hits:
            raise InsufficientSamplesError(eps, n_per_eps)
        per_eps.append(est)
    return fit_limiting_slope(per_eps, grid)


def limiting_complexity_closed_form(
    kappa: float,
    sigma_w: float,
    d: int,
    eps_grid: Sequence[float],
    perp_sq: float = 0.0,
) -> SlopeEstimate:
    """Closed-form analogue of limiting_complexity for the linear model."""
    grid = _check_eps_grid(eps_grid)
    per_eps = [chi_from_q(kappa, sigma_w, eps * eps, d, perp_sq) for eps in grid]
    return fit_limiting_slope(per_eps, grid)


# --------------------------------------------------------------------------
# Exponential / empirical / with-noise complexities
# --------------------------------------------------------------------------


def _logmean_estimate(a: np.ndarray, n: int, eps_sq, method: str) -> ComplexityEstimate:
    m = float(a.max())
    y = np.exp(a - m)
    mean_y = float(y.mean())
    log_mean = m + math.log(mean_y)
    se = float(y.std()) / (mean_y * math.sqrt(n))
    return ComplexityEstimate(
        chi=-log_mean,
        log_prob=log_mean,
        std_err=se,
        n_samples=n,
        n_hits=n,
        epsilon_sq=eps_sq,
        method=method,
    )


def exponential_complexity_mc(
    family,
    target,
    sigma_y_sq: float,
    n: int,
    rng: SeededRng,
    sigma_e_sq: float = 0.0,
    workers: int = 1,
) -> ComplexityEstimate:
    """chi = -ln E_theta[ exp(-(E_x[(g - f_theta)^2] + sigma_e_sq)/(2 sigma_y_sq)) ].

    With sigma_e_sq = 0 this is the exponential complexity; a positive
    sigma_e_sq gives the true-with-noise variant, which exceeds the plain
    value by exactly sigma_e_sq/(2 sigma_y_sq) on identical draws.
    """
    if sigma_y_sq <= 0:
        raise ConfigError(f"sigma_y_sq must be > 0, got {sigma_y_sq}")
    target = _prepare(family, target)
    rows = _batch_rows(family)
    a = np.empty(n)
    pos = 0
    for w, count in enumerate(partition_counts(n, workers)):
        gen = rng.stream(w).generator()
        done = 0
        while done < count:
            m = min(rows, count - done)
            thetas = family.sample_matrix(m, gen)
            d2 = family.dist_sq(target, thetas)
            a[pos : pos + m] = -(d2 + sigma_e_sq) / (2.0 * sigma_y_sq)
            pos += m
            done += m
    return _logmean_estimate(a, n, None, "LogSumExpMC")


def empirical_complexity_mc(
    family,
    g,
    xs: np.ndarray,
    noise_draws: np.ndarray,
    sigma_y_sq_over_N: float,
    n: int,
    rng: SeededRng,
    workers: int = 1,
) -> ComplexityEstimate:
    """Dataset-conditional complexity:
    chi = -ln E_theta[ exp(-(1/(2 T N)) sum_n (g(x_n) + eta_n - f_theta(x_n))^2) ]
    with T = sigma_y_sq_over_N.
    """
    xs = np.asarray(xs, dtype=float)
    noise = np.asarray(noise_draws, dtype=float)
    if xs.size < 1:
        raise ConfigError("empirical complexity needs N >= 1 sample points")
    if xs.size != noise.size:
        raise ConfigError(f"xs has {xs.size} points but noise_draws has {noise.size}")
    if sigma_y_sq_over_N <= 0:
        raise ConfigError("sigma_y_sq_over_N must be > 0")
    big_n = xs.size
    ys = (g(xs) if callable(g) else np.asarray(g, dtype=float)) + noise
    denom = 2.0 * sigma_y_sq_over_N * big_n
    rows = max(256, min(_batch_rows(family), int(4_000_000 / big_n)))
    a = np.empty(n)
    pos = 0
    for w, count in enumerate(partition_counts(n, workers)):
        gen = rng.stream(w).generator()
        done = 0
        while done < count:
            m = min(rows, count - done)
            thetas = family.sample_matrix(m, gen)
            resid = family.predict_batch(thetas, xs) - ys[None, :]
            a[pos : pos + m] = -np.einsum("ij,ij->i", resid, resid) / denom
            pos += m
            done += m
    return _logmean_estimate(a, n, None, "LogSumExpMC")


def sharp_with_noise(
    chi_sharp_fn: Callable[[float], ComplexityEstimate],
    sigma_e_sq: float,
    eps_sq: float,
) -> ComplexityEstimate:
    """Sharp complexity under observation noise: evaluate the noiseless
    estimator at the shifted radius eps_sq - sigma_e_sq. A nonpositive shift
    makes the event impossible and returns a flagged infinite estimate."""
    if sigma_e_sq < 0:
        raise ConfigError(f"sigma_e_sq must be >= 0, got {sigma_e_sq}")
    if eps_sq <= sigma_e_sq:
        return ComplexityEstimate(
            chi=math.inf,
            log_prob=-math.inf,
            std_err=0.0,
            n_samples=0,
            n_hits=0,
            epsilon_sq=eps_sq,
            method="ShiftedSharp",
            infinite=True,
        )
    inner = chi_sharp_fn(eps_sq - sigma_e_sq)
    return replace(inner, epsilon_sq=eps_sq)


def megaineq_gap(px: np.ndarray, py: np.ndarray, f: np.ndarray) -> float:
    """E_X[ln E_Y e^{-f}] - ln E_Y[e^{-E_X f}] for finite discrete (X, Y, f).

    Nonnegative for f >= 0 (in fact for any bounded f, by convexity); the
    returned gap lets property tests assert it never dips below -1e-12.
    """
    px = np.asarray(px, dtype=float)
    py = np.asarray(py, dtype=float)
    f = np.asarray(f, dtype=float)
    if f.shape != (px.size, py.size):
        raise ConfigError("f must have shape (len(px), len(py))")
    lhs = float(px @ np.log(np.exp(-f) @ py))
    rhs = float(np.log(np.exp(-(px @ f)) @ py))
    return lhs - rhs


# --------------------------------------------------------------------------
# Hyperbola distance and distance to the exact-representation set
# --------------------------------------------------------------------------


def hyperbola_distance(p, q, v) -> np.ndarray | float:
    """Euclidean distance from points (p, q) to the curve {x y = v}.

    For v = 0 the curve degenerates to the coordinate axes. Otherwise the
    minimizer solves the stationarity quartic x^4 - p x^3 + q v x - v^2 = 0;
    we seed a safeguarded Newton iteration with a dense two-branch log grid.
    """
    p_arr = np.asarray(p, dtype=float)
    q_arr = np.asarray(q, dtype=float)
    v_arr = np.asarray(v, dtype=float)
    p_b, q_b, v_b = np.broadcast_arrays(p_arr, q_arr, v_arr)
    scalar = p_b.ndim == 0
    p_f = np.atleast_1d(p_b).ravel().astype(float)
    q_f = np.atleast_1d(q_b).ravel().astype(float)
    v_f = np.atleast_1d(v_b).ravel().astype(float)
    out = np.empty(p_f.size)
    chunk = 16384
    for lo in range(0, p_f.size, chunk):
        hi = min(p_f.size, lo + chunk)
        out[lo:hi] = _hyperbola_distance_chunk(p_f[lo:hi], q_f[lo:hi], v_f[lo:hi])
    if scalar:
        return float(out[0])
    return out.reshape(p_b.shape)


def _hyperbola_distance_chunk(p, q, v) -> np.ndarray:
    n = p.size
    dist_sq = np.full(n, np.inf)
    degenerate = v == 0.0
    if degenerate.any():
        dist_sq[degenerate] = np.minimum(np.abs(p[degenerate]), np.abs(q[degenerate])) ** 2
    live = ~degenerate
    if not live.any():
        return np.sqrt(dist_sq)
    pl, ql, vl = p[live], q[live], v[live]
    scale = np.maximum.reduce([np.abs(pl), np.sqrt(np.abs(vl)), np.full_like(pl, 1e-12)])
    grid = np.power(10.0, np.linspace(-4.0, 4.0, 97))
    cand = scale[:, None] * np.concatenate([-grid[::-1], grid])[None, :]
    vals = (cand - pl[:, None]) ** 2 + (vl[:, None] / cand - ql[:, None]) ** 2
    best_idx = np.argmin(vals, axis=1)
    rows = np.arange(pl.size)
    x = cand[rows, best_idx]
    best = vals[rows, best_idx]
    # Newton refinement on the stationarity quartic G(x) = x^4 - p x^3 + q v x - v^2.
    for _ in range(40):
        g = x**4 - pl * x**3 + ql * vl * x - vl * vl
        gp = 4.0 * x**3 - 3.0 * pl * x * x + ql * vl
        step = np.where(gp != 0.0, g / np.where(gp == 0.0, 1.0, gp), 0.0)
        x_new = x - step
        ok = np.isfinite(x_new) & (np.sign(x_new) == np.sign(x)) & (np.abs(x_new) > 1e-14 * scale)
        x = np.where(ok, x_new, x)
    refined = (x - pl) ** 2 + (vl / x - ql) ** 2
    dist_sq[live] = np.minimum(best, refined)
    return np.sqrt(dist_sq)


def _node_knot_cost_sq(w1, w2, b1, knots) -> np.ndarray:
    """(n, k, c) array of per-node, per-knot squared matching costs."""
    t = np.array([kn[0] for kn in knots])
    v = np.array([kn[1] for kn in knots])
    hyp = hyperbola_distance(w1[:, :, None], w2[:, :, None], v[None, None, :])
    return (b1[:, :, None] - t[None, None, :]) ** 2 + hyp**2


def _inactive_cost_sq(w1, w2, b1) -> np.ndarray:
    """(n, k) squared cost of making each node vanish on [0, 1]."""
    by_weight = np.minimum(np.abs(w1), np.abs(w2))
    by_bias = np.maximum(0.0, 1.0 - b1)
    return np.minimum(by_weight, by_bias) ** 2


def _dist_batch(g: PwlFunction, thetas: np.ndarray, k: int) -> np.ndarray:
    """Vectorized distance from parameter rows to the exact-representation
    set of g, for k = c or k = c + 1 (the latter is an upper bound)."""
    c = len(g.knots)
    n = thetas.shape[0]
    w1 = thetas[:, :k]
    w2 = thetas[:, k : 2 * k]
    b1 = thetas[:, 2 * k : 3 * k]
    b2 = thetas[:, 3 * k]
    base = (b2 - g.bias) ** 2
    if c == 0:
        inact = _inactive_cost_sq(w1, w2, b1)
        return np.sqrt(base + inact.sum(axis=1))
    cost = _node_knot_cost_sq(w1, w2, b1, g.knots)
    if k == c:
        best = np.full(n, np.inf)
        for perm in itertools.permutations(range(c)):
            total = cost[:, range(k), perm].sum(axis=1)
            best = np.minimum(best, total)
        return np.sqrt(base + best)
    # k = c + 1: choose one surplus node to deactivate, assign the rest.
    inact = _inactive_cost_sq(w1, w2, b1)
    best = np.full(n, np.inf)
    for surplus in range(k):
        active = [i for i in range(k) if i != surplus]
        for perm in itertools.permutations(range(c)):
            total = inact[:, surplus] + cost[:, active, perm].sum(axis=1)
            best = np.minimum(best, total)
    return np.sqrt(base + best)


def dist_to_representation_set(theta, g: PwlFunction) -> float:
    """Distance from a single parameter point to A_g = {theta : f_theta = g
    on [0, 1]}; exact for k = c, an upper bound for k = c + 1."""
    k = theta.k
    c = len(g.knots)
    if k < c:
        raise ConfigError(f"k={k} nodes cannot represent a target with c={c} knots")
    if k > c + 1:
        raise ConfigError(f"distance oracle supports k <= c + 1, got k={k}, c={c}")
    return float(_dist_batch(g, theta.flat()[None, :], k)[0])


# --------------------------------------------------------------------------
# Codimension estimation
# --------------------------------------------------------------------------


def codim_estimate(
    query: CodimQuery,
    prior: NnPriorSpec,
    n: int,
    rng: SeededRng,
    workers: int = 1,
) -> SlopeEstimate:
    """Minkowski codimension of A_g inside B_R intersected with the prior
    support: WLS slope of ln vol-fraction{dist <= eps} against ln eps."""
    g = query.g
    k = query.k
    c = len(g.knots)
    if k < c:
        raise ConfigError(f"k={k} nodes cannot represent a target with c={c} knots")
    if k > c + 1:
        raise ConfigError(f"distance oracle supports k <= c + 1, got k={k}, c={c}")
    note = "upper-bound-based" if k > c else ""
    family = ShallowNetFamily(k, prior)
    if query.radius is not None:
        radius = float(query.radius)
    else:
        radius = 3.0 * math.sqrt(family.expected_prior_norm_sq())
    if query.eps_grid is not None:
        grid = _check_eps_grid(query.eps_grid)
    elif c >= 2:
        grid = (0.5, 0.4, 0.3, 0.22, 0.15, 0.1)
    else:
        grid = DEFAULT_EPS_GRID
    b_hi = min(prior.M, radius)
    dim = family.dim
    rows = 65536
    hits = np.zeros(len(grid), dtype=np.int64)
    for w, count in enumerate(partition_counts(n, workers)):
        gen = rng.stream(w).generator()
        accepted = 0
        while accepted < count:
            m = rows
            box = np.empty((m, dim))
            box[:, : 2 * k] = gen.uniform(-radius, radius, size=(m, 2 * k))
            box[:, 2 * k : 3 * k] = gen.uniform(0.0, b_hi, size=(m, k))
            box[:, 3 * k] = gen.uniform(-radius, radius, size=m)
            inside = np.einsum("ij,ij->i", box, box) <= radius * radius
            take = box[inside]
            if take.shape[0] > count - accepted:
                take = take[: count - accepted]
            if take.shape[0] == 0:
                continue
            dist = _dist_batch(g, take, k)
            for j, eps in enumerate(grid):
                hits[j] += int(np.count_nonzero(dist <= eps))
            accepted += take.shape[0]
    per_eps = []
    for j, eps in enumerate(grid):
        h = int(hits[j])
        if h == 0:
            raise InsufficientSamplesError(eps, n)
        p = h / n
        se = math.sqrt((1.0 - p) / (p * n))
        per_eps.append(
            ComplexityEstimate(
                chi=-math.log(p),
                log_prob=math.log(p),
                std_err=se,
                n_samples=n,
                n_hits=h,
                epsilon_sq=eps * eps,
                method="NaiveMC",
            )
        )
    return fit_limiting_slope(per_eps, grid, note=note)


# --------------------------------------------------------------------------
# One-slope-change bounds
# --------------------------------------------------------------------------


def one_change_bounds(
    a: float,
    b: float,
    t: float,
    k: int,
    spec: NnPriorSpec,
    eps: float,
    n: int = 200_000,
    rng: SeededRng | None = None,
    cloud_width: float = 3.0,
    workers: int = 1,
) -> OneChangeResult:
    """Bounds and an IS estimate of chi# for the single-slope-change target
    g1(x) = b + a * max(0, x - t) at squared radius eps^2.

    Lower bound |a|/(3 sigma_w^2); upper bound
    2(|a|/sigma_w^2 + |b|/sigma_b^2) + 11 - 3 ln(eps). The bounds' validity
    assumptions (with all suppressed constants read as 1) are checked and
    reported, never enforced.
    """
    if rng is None:
        rng = SeededRng(0)
    if not 0.0 < t < 1.0:
        raise ConfigError(f"knot t must lie in (0, 1), got {t}")
    g1 = PwlFunction(bias=b, knots=((t, a),))
    family = ShallowNetFamily(k, spec)
    chi_hat = sharp_complexity_is(
        family, g1, eps * eps, n, rng, cloud_width=cloud_width, workers=workers
    )
    lower = abs(a) / (3.0 * spec.sigma_w_sq)
    upper = 2.0 * (abs(a) / spec.sigma_w_sq + abs(b) / spec.sigma_b_sq) + 11.0 - 3.0 * math.log(eps)
    sigma_w = math.sqrt(spec.sigma_w_sq)
    checks = {
        "k <= M": k <= spec.M,
        "M <= 1/sigma_w_sq": spec.M <= 1.0 / spec.sigma_w_sq,
        "sigma_b_sq <= 1/sigma_w_sq": spec.sigma_b_sq <= 1.0 / spec.sigma_w_sq,
        "eps^(1/4) <= |a|": eps**0.25 <= abs(a),
        "|a| < 2": abs(a) < 2.0,
        "sigma_w_sq ln(k/sigma_w) <= |a|": spec.sigma_w_sq * math.log(k / sigma_w) <= abs(a),
        "eps^(1/4) <= |b|": eps**0.25 <= abs(b),
        "eps^(1/2) <= min(t, 1-t)": math.sqrt(eps) <= min(t, 1.0 - t),
    }
    violated = tuple(name for name, ok in checks.items() if not ok)
    return OneChangeResult(
        chi_hat=chi_hat,
        lower=lower,
        upper=upper,
        assumptions_ok=not violated,
        violated=violated,
    )


# --------------------------------------------------------------------------
# Product density (claimed closed form + MC diagnostic)
# --------------------------------------------------------------------------


def product_density_claimed(a0: float, sigma_w_sq: float) -> float:
    """Claimed density of w1*w2 at a0 for iid N(0, sigma_w_sq) factors:
    (1/sqrt(2 pi sigma_w_sq)) * exp(-|a0|/sigma_w_sq), reproduced verbatim.

    The companion diagnostic product_density_mc estimates the actual density
    so reports can show the discrepancy; neither value is asserted correct.
    """
    if sigma_w_sq <= 0:
        raise ConfigError(f"sigma_w_sq must be > 0, got {sigma_w_sq}")
    return math.exp(-abs(a0) / sigma_w_sq) / math.sqrt(2.0 * math.pi * sigma_w_sq)


def product_density_mc(
    a0: float,
    sigma_w_sq: float,
    n: int,
    rng: SeededRng,
    bandwidth: float | None = None,
) -> tuple[float, float]:
    """Gaussian kernel-density estimate (value, std_err) of the density of
    w1*w2 at a0."""
    if sigma_w_sq <= 0:
        raise ConfigError(f"sigma_w_sq must be > 0, got {sigma_w_sq}")
    gen = rng.generator()
    sw = math.sqrt(sigma_w_sq)
    prod = gen.normal(0.0, sw, size=n) * gen.normal(0.0, sw, size=n)
    if bandwidth is None:
        bandwidth = 1.06 * float(prod.std()) * n ** (-0.2)
    kernel = np.exp(-0.5 * ((prod - a0) / bandwidth) ** 2) / (
        bandwidth * math.sqrt(2.0 * math.pi)
    )
    return float(kernel.mean()), float(kernel.std() / math.sqrt(n))
