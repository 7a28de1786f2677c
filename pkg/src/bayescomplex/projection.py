"""Constructive projections onto exact shallow-net representations.

Three algorithms with certified movement: project parameters onto the set
representing the zero function (two-phase bias collapse + prefix-sum
zeroing), the same with a free output bias (case split on |b2| with an
exact ramp construction near 0), and projection onto an arbitrary
piecewise-linear target (augmented difference network with pinned target
nodes). Movement is measured in the (u, b1, b2) coordinates, where
u_i = w1_i * w2_i is a node's effective weight; weight changes are realized
on the factor with the smaller magnitude.

The module also exposes the two scalar inequalities the movement proofs
rest on, as checked helpers returning both sides.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, NumericalError, SmallnessError
from .models import ShallowNetParams
from .pwl import PwlFunction

BiasMove = tuple[int, float, float]
WeightChange = tuple[int, float, float]


@dataclass(frozen=True)
class ProjectionPhases:
    bias_moves: tuple[BiasMove, ...]
    weight_changes: tuple[WeightChange, ...]
    notes: tuple[str, ...]


@dataclass(frozen=True)
class ProjectionResult:
    theta_star: ShallowNetParams
    movement_sq: float
    bound: float
    phases: ProjectionPhases


# --------------------------------------------------------------------------
# Node-array helpers
# --------------------------------------------------------------------------


def _eval_nodes(u: np.ndarray, b: np.ndarray, b2: float, x: np.ndarray) -> np.ndarray:
    return b2 + np.maximum(0.0, x[:, None] - b[None, :]) @ u


def _norm_sq_nodes(u: np.ndarray, b: np.ndarray, b2: float) -> float:
    """Exact integral of f^2 over [0, 1] for f(x) = b2 + sum u_i [x - b_i]_+
    with all biases >= 0."""
    interior = b[(b > 0.0) & (b < 1.0)]
    pts = np.unique(np.concatenate([[0.0, 1.0], interior]))
    vals = _eval_nodes(u, b, b2, pts)
    seg = np.diff(pts)
    a, c = vals[:-1], vals[1:]
    return float(np.sum(seg * (a * a + a * c + c * c) / 3.0))


def movement_between(theta: ShallowNetParams, theta_star: ShallowNetParams) -> float:
    """Squared distance in effective-weight coordinates (u, b1, b2)."""
    u0 = np.asarray(theta.w1) * np.asarray(theta.w2)
    u1 = np.asarray(theta_star.w1) * np.asarray(theta_star.w2)
    db = np.asarray(theta.b1) - np.asarray(theta_star.b1)
    du = u0 - u1
    return float(du @ du + db @ db + (theta.b2 - theta_star.b2) ** 2)


def _realize_factors(w1, w2, u_new):
    """Realize new effective weights on (w1, w2), changing the smaller
    factor; a node whose factors are both zero gets +/- sqrt(|u|) split with
    the sign carried by w2."""
    w1 = np.array(w1, dtype=float)
    w2 = np.array(w2, dtype=float)
    for i in range(w1.size):
        target = u_new[i]
        if w1[i] * w2[i] == target:
            continue
        if w1[i] == 0.0 and w2[i] == 0.0:
            root = math.sqrt(abs(target))
            w1[i] = root
            w2[i] = math.copysign(root, target) if target != 0.0 else 0.0
        elif abs(w2[i]) <= abs(w1[i]):
            w2[i] = target / w1[i]
        else:
            w1[i] = target / w2[i]
        if w1[i] * w2[i] != target:
            # Exact realization of the new effective weight beats preserving
            # the untouched factor by one rounding ulp.
            w1[i] = 1.0
            w2[i] = target
    return w1, w2


# --------------------------------------------------------------------------
# Core two-phase zero projection (b2 = 0, biases >= 0)
# --------------------------------------------------------------------------


def _zero_project_core(
    u: np.ndarray,
    b: np.ndarray,
    pin_zero: int | None,
    frozen: frozenset[int],
    context: str,
):
    """Return (u_new, b_new, bias_moves, weight_changes, norm_sq).

    Phase 1 collapses maximal runs of bias gaps shorter than the local
    prefix-sum slope; phase 2 zeroes the surviving prefix sums through one
    effective-weight change per bias group. Pinned locations (the designated
    bias-0 node and frozen nodes) act as collapse anchors and frozen nodes
    never change."""
    k = u.size
    if np.any(b < 0.0):
        raise ConfigError("zero projection requires nonnegative biases")
    norm_sq = _norm_sq_nodes(u, b, 0.0)
    threshold = 1.0 / (12.0 * (k + 1) ** 5)
    if not norm_sq < threshold:
        raise SmallnessError(norm_sq, threshold, context)

    u_new = u.copy()
    b_new = b.copy()
    bias_moves: list[BiasMove] = []
    weight_changes: list[WeightChange] = []

    pinned_biases = {b[i] for i in frozen}
    if pin_zero is not None:
        pinned_biases.add(b[pin_zero])

    active = np.flatnonzero(b < 1.0)
    if active.size:
        locs = np.unique(b[active])
        order = np.argsort(b[active], kind="stable")
        sorted_nodes = active[order]
        # Prefix sums W_j over distinct bias locations.
        w_pref = np.zeros(locs.size)
        acc = 0.0
        pos = 0
        for j, loc in enumerate(locs):
            while pos < sorted_nodes.size and b[sorted_nodes[pos]] <= loc:
                acc += u[sorted_nodes[pos]]
                pos += 1
            w_pref[j] = acc
        rights = np.append(locs[1:], 1.0)
        in_sb = (rights - locs) < np.abs(w_pref)

        j = 0
        while j < locs.size:
            if not in_sb[j]:
                j += 1
                continue
            r = j
            while r + 1 < locs.size and in_sb[r + 1]:
                r += 1
            span = [locs[i] for i in range(j, r + 1)] + [rights[r]]
            anchors = sorted(set(span) & pinned_biases)
            if len(anchors) > 1:
                raise NumericalError(
                    f"{context}: collapse run spans {len(anchors)} pinned bias locations"
                )
            dest = anchors[0] if anchors else span[-1]
            for i in active:
                if b[i] in span and b[i] != dest:
                    bias_moves.append((int(i), float(b[i]), float(dest)))
                    b_new[i] = dest
            j = r + 1

    # Phase 2 on post-collapse groups that still act on [0, 1): every group's
    # summed effective weight must vanish so the merged slope change is zero.
    active = np.flatnonzero(b_new < 1.0)
    if active.size:
        locs = np.unique(b_new[active])
        for loc in locs:
            members = [int(i) for i in active if b_new[i] == loc]
            group_sum = float(sum(u_new[i] for i in members))
            if group_sum == 0.0:
                continue
            if pin_zero is not None and pin_zero in members:
                chosen = pin_zero
            else:
                free = [i for i in members if i not in frozen]
                if not free:
                    raise NumericalError(
                        f"{context}: bias group at {loc} holds only pinned nodes"
                    )
                chosen = free[-1]
            old = float(u_new[chosen])
            if not any(i > chosen for i in members):
                # The chosen node closes the index-ordered fold, so negating
                # the fold of the earlier members cancels the group exactly.
                prefix = 0.0
                for i in members:
                    if i < chosen:
                        prefix += float(u_new[i])
                u_new[chosen] = -prefix
                group_sum = float(sum(u_new[i] for i in members))
            else:
                # Pinned members follow the chosen node: absorb the residual
                # iteratively, finishing with single-ulp steps when it drops
                # below the chosen value's own resolution.
                for _ in range(4):
                    u_new[chosen] -= group_sum
                    group_sum = float(sum(u_new[i] for i in members))
                    if group_sum == 0.0:
                        break
                for _ in range(64):
                    if group_sum == 0.0:
                        break
                    toward = -math.inf if group_sum > 0.0 else math.inf
                    u_new[chosen] = math.nextafter(u_new[chosen], toward)
                    group_sum = float(sum(u_new[i] for i in members))
            if group_sum != 0.0:
                raise NumericalError(
                    f"{context}: bias group at {loc} left residual {group_sum!r}"
                )
            weight_changes.append((chosen, old, float(u_new[chosen])))

    return u_new, b_new, bias_moves, weight_changes, norm_sq


def project_to_zero(theta: ShallowNetParams) -> ProjectionResult:
    """Project onto {theta : f_theta = 0 on [0, 1]} for a network with
    b2 = 0, with movement_sq <= 96 k^{13/5} ||f||^{4/5}."""
    if theta.b2 != 0.0:
        raise ConfigError(f"project_to_zero requires b2 = 0, got {theta.b2}")
    u = np.asarray(theta.w1) * np.asarray(theta.w2)
    b = np.asarray(theta.b1, dtype=float)
    u_new, b_new, moves, changes, norm_sq = _zero_project_core(
        u, b, pin_zero=None, frozen=frozenset(), context="project_to_zero"
    )
    w1, w2 = _realize_factors(theta.w1, theta.w2, u_new)
    theta_star = ShallowNetParams(
        w1=tuple(w1), w2=tuple(w2), b1=tuple(b_new), b2=0.0
    )
    bound = 96.0 * theta.k ** (13.0 / 5.0) * norm_sq ** (2.0 / 5.0)
    return ProjectionResult(
        theta_star=theta_star,
        movement_sq=movement_between(theta, theta_star),
        bound=bound,
        phases=ProjectionPhases(tuple(moves), tuple(changes), ()),
    )


# --------------------------------------------------------------------------
# Projection with free output bias
# --------------------------------------------------------------------------


def _with_bias_core(
    u: np.ndarray,
    b: np.ndarray,
    b2: float,
    norm_sq: float,
    frozen: frozenset[int],
    context: str,
):
    """Return (u_new, b_new, b2_new, notes). Biases must be >= 0."""
    eps = math.sqrt(norm_sq)
    if abs(b2) <= math.sqrt(eps):
        u_new, b_new, moves, changes, _ = _zero_project_core(
            u, b, pin_zero=None, frozen=frozen, context=context
        )
        note = f"case-1: zeroed b2={b2:.6g} then two-phase projection"
        return u_new, b_new, 0.0, moves, changes, (note,)
    if b2 < 0.0:
        u_m, b_m, b2_m, moves, changes, notes = _with_bias_core(
            -u, b, -b2, norm_sq, frozen, context
        )
        changes = [(i, -old, -new) for i, old, new in changes]
        return -u_m, b_m, -b2_m, moves, changes, notes + ("mirrored through f -> -f",)

    # Case 2: b2 > sqrt(||f||). Build the breakpoint profile of f.
    interior = np.unique(b[(b > 0.0) & (b < 1.0)])
    pts = np.unique(np.concatenate([[0.0, 1.0], interior]))
    vals = _eval_nodes(u, b, b2, pts)
    slopes = np.diff(vals) / np.diff(pts)

    # First crossing of b2/2.
    half = b2 / 2.0
    x0 = None
    for i in range(slopes.size):
        if vals[i] > half >= vals[i + 1]:
            x0 = pts[i] + (half - vals[i]) / slopes[i]
            break
    if x0 is None:
        raise SmallnessError(norm_sq, b2 * b2 / 4.0, f"{context}: f never descends to b2/2")

    # Last x < x0 with f(x) >= b2 (f(0) = b2 exactly).
    x_hi = 0.0
    for i in range(slopes.size):
        lo, hi = pts[i], min(pts[i + 1], x0)
        if lo >= x0:
            break
        v_lo = vals[i]
        v_hi = vals[i] + slopes[i] * (hi - lo)
        if v_hi >= b2:
            x_hi = max(x_hi, hi)
        elif v_lo >= b2 and slopes[i] < 0.0:
            x_hi = max(x_hi, lo + (b2 - v_lo) / slopes[i])

    # Steepest descending segment within [x_hi, x0].
    best = None
    for i in range(slopes.size):
        lo, hi = max(pts[i], x_hi), min(pts[i + 1], x0)
        if hi <= lo:
            continue
        if best is None or slopes[i] < best[0]:
            best = (slopes[i], lo, hi)
    if best is None or best[0] >= 0.0:
        raise SmallnessError(norm_sq, b2 * b2 / 4.0, f"{context}: no descending segment")
    x1 = (best[1] + best[2]) / 2.0

    shifted = np.flatnonzero(b < x1)
    if any(i in frozen for i in shifted):
        raise NumericalError(f"{context}: pinned node inside the shift region")
    w_one = float(u[shifted].sum())
    f_x1 = float(b2 + u @ np.maximum(0.0, x1 - b))
    shift = x1 - f_x1 / w_one  # > x1 since f(x1) > 0 > w_one

    tail = np.flatnonzero(b >= x1)
    if tail.size == 0:
        raise SmallnessError(norm_sq, b2 * b2 / 4.0, f"{context}: no node right of x1")
    i0 = int(tail[np.argmin(b[tail])])
    if i0 in frozen:
        raise NumericalError(f"{context}: pinned node would be retargeted to 0")
    if b[i0] > x1 + 4.0 * eps:
        raise SmallnessError(norm_sq, b2 * b2 / 4.0, f"{context}: nearest node beyond x1 + 4 eps")

    moves: list[BiasMove] = [(int(i), float(b[i]), float(b[i] - shift)) for i in shifted]
    moves.append((i0, float(b[i0]), 0.0))

    # Delegate on the virtual net: untouched tail nodes plus the retargeted
    # node at bias 0 carrying the shifted cluster's total slope.
    sel = [int(i) for i in tail]
    u_virt = u[sel].copy()
    b_virt = b[sel].copy()
    pos_i0 = sel.index(i0)
    u_virt[pos_i0] = w_one + u[i0]
    b_virt[pos_i0] = 0.0
    frozen_virt = frozenset(sel.index(i) for i in frozen if i in sel)
    u_star, b_star, v_moves, v_changes, _ = _zero_project_core(
        u_virt, b_virt, pin_zero=pos_i0, frozen=frozen_virt, context=f"{context}: delegate"
    )

    u_new = u.copy()
    b_new = b.copy()
    b_new[shifted] -= shift
    for pos, i in enumerate(sel):
        b_new[i] = b_star[pos]
        if i == i0:
            u_new[i] = u_star[pos] - w_one
        else:
            u_new[i] = u_star[pos]
    for pos, old, new in v_moves:
        moves.append((sel[pos], old, new))
    changes: list[WeightChange] = []
    for pos, old, new in v_changes:
        i = sel[pos]
        if i == i0:
            changes.append((i, old - w_one, new - w_one))
        else:
            changes.append((i, old, new))
    notes = (
        f"case-2: x0={x0:.6g} x1={x1:.6g} W1={w_one:.6g} shift={shift:.6g} retarget node {i0}",
    )
    return u_new, b_new, b2, moves, changes, notes


def project_to_zero_with_bias(
    theta: ShallowNetParams, R: float, guard_scale: float = 1e-3
) -> ProjectionResult:
    """Project onto the zero-representation set with b2 free; movement obeys
    the k^5 R^{4/5} ||f||^{2/5} scaling."""
    if R <= 0:
        raise ConfigError(f"R must be > 0, got {R}")
    k = theta.k
    u = np.asarray(theta.w1) * np.asarray(theta.w2)
    b = np.asarray(theta.b1, dtype=float)
    if np.any(b < 0.0):
        raise ConfigError("projection requires nonnegative biases")
    norm_sq = _norm_sq_nodes(u, b, theta.b2)
    threshold = guard_scale / (R**4 * k**5)
    if not norm_sq < threshold:
        raise SmallnessError(norm_sq, threshold, "project_to_zero_with_bias")
    u_new, b_new, b2_new, moves, changes, notes = _with_bias_core(
        u, b, theta.b2, norm_sq, frozenset(), "project_to_zero_with_bias"
    )
    w1, w2 = _realize_factors(theta.w1, theta.w2, u_new)
    theta_star = ShallowNetParams(
        w1=tuple(w1), w2=tuple(w2), b1=tuple(b_new), b2=float(b2_new)
    )
    bound = k**5 * R ** (4.0 / 5.0) * norm_sq ** (1.0 / 5.0)
    return ProjectionResult(
        theta_star=theta_star,
        movement_sq=movement_between(theta, theta_star),
        bound=bound,
        phases=ProjectionPhases(tuple(moves), tuple(changes), notes),
    )


# --------------------------------------------------------------------------
# Projection onto an arbitrary piecewise-linear target
# --------------------------------------------------------------------------


def project_to_target(
    theta: ShallowNetParams, g: PwlFunction, R: float, guard_scale: float = 1e-3
) -> ProjectionResult:
    """Project onto {theta : f_theta = g on [0, 1]} by zero-projecting the
    augmented difference network h = f_theta - g with the c target nodes
    pinned; movement obeys the k^7 R^{4/5} ||g - f||^{2/5} scaling."""
    if R <= 0:
        raise ConfigError(f"R must be > 0, got {R}")
    k = theta.k
    c = len(g.knots)
    if c > k:
        raise ConfigError(f"target has c={c} knots but the network has only k={k} nodes")
    u_real = np.asarray(theta.w1) * np.asarray(theta.w2)
    b_real = np.asarray(theta.b1, dtype=float)
    if np.any(b_real < 0.0):
        raise ConfigError("projection requires nonnegative biases")
    knot_t = np.array([t for t, _ in g.knots])
    knot_v = np.array([v for _, v in g.knots])
    u_aug = np.concatenate([u_real, -knot_v])
    b_aug = np.concatenate([b_real, knot_t])
    b2_aug = theta.b2 - g.bias
    frozen = frozenset(range(k, k + c))

    norm_sq = _norm_sq_nodes(u_aug, b_aug, b2_aug)
    total = k + c
    threshold = guard_scale / (R**4 * total**5)
    if not norm_sq < threshold:
        raise SmallnessError(norm_sq, threshold, "project_to_target")
    u_new, b_new, b2_new, moves, changes, notes = _with_bias_core(
        u_aug, b_aug, b2_aug, norm_sq, frozen, "project_to_target"
    )
    for j in range(c):
        i = k + j
        if u_new[i] != u_aug[i] or b_new[i] != b_aug[i]:
            raise NumericalError(
                f"project_to_target: pinned target node {j} was altered"
            )
    assignment = []
    for j, t in enumerate(knot_t):
        cluster = [int(i) for i in range(k) if b_new[i] == t]
        assignment.append(f"knot {j} at t={t:.6g} <- nodes {cluster}")
    w1, w2 = _realize_factors(theta.w1, theta.w2, u_new[:k])
    theta_star = ShallowNetParams(
        w1=tuple(w1),
        w2=tuple(w2),
        b1=tuple(b_new[:k]),
        b2=float(b2_new + g.bias),
    )
    bound = k**7 * R ** (4.0 / 5.0) * norm_sq ** (1.0 / 5.0)
    real_moves = tuple(m for m in moves if m[0] < k)
    real_changes = tuple(ch for ch in changes if ch[0] < k)
    return ProjectionResult(
        theta_star=theta_star,
        movement_sq=movement_between(theta, theta_star),
        bound=bound,
        phases=ProjectionPhases(real_moves, real_changes, notes + tuple(assignment)),
    )


# --------------------------------------------------------------------------
# Checked inequality helpers
# --------------------------------------------------------------------------


def prefix_sum_bound(x) -> tuple[float, float]:
    """(sum of squared prefix sums, (1/8) sum of squares); the first is
    never smaller than the second."""
    x = np.asarray(x, dtype=float)
    prefix = np.cumsum(x)
    return float(prefix @ prefix), float(x @ x) / 8.0


def l2_slope_lower_bound(u, b) -> tuple[float, float]:
    """For f(x) = sum u_i [x - b_i]_+ with biases in [0, 1):
    (||f||^2 over [0,1], (1/12) sum_j W_j^2 (d_{j+1} - d_j)^3) with W the
    prefix-sum slopes over distinct biases and d_{m+1} = 1."""
    u = np.asarray(u, dtype=float)
    b = np.asarray(b, dtype=float)
    if np.any(b < 0.0) or np.any(b >= 1.0):
        raise ConfigError("biases must lie in [0, 1)")
    norm_sq = _norm_sq_nodes(u, b, 0.0)
    locs = np.unique(b)
    w = np.array([u[b <= loc].sum() for loc in locs])
    gaps = np.diff(np.append(locs, 1.0))
    rhs = float(np.sum(w * w * gaps**3)) / 12.0
    return norm_sq, rhs
