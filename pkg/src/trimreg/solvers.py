"""L1-type solvers: a lasso-modification LARS path, a coordinate-descent
elastic net (shooting), and KKT optimality verification.

All solvers target the scaling

    (1/n) * ||y - X beta||^2 + lam1 * ||beta||_1 + lam2 * ||beta||^2

so that ``objectives.lambda_max`` is the exact entry threshold of the
path.  Columns are used as given: no centering or standardization happens
here (centering can spread contamination; callers decide).
"""

import warnings
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
import scipy.linalg

from .exceptions import PathTruncatedError
from .objectives import residuals

_TIE_TOL = 1e-12


@dataclass(frozen=True)
class Knot:
    """One breakpoint of a piecewise-affine solution path."""

    lam: float
    beta: np.ndarray
    active: frozenset


@dataclass(frozen=True)
class LarsPath:
    """Lasso path as ordered knots; coefficients are affine in lam between knots."""

    knots: tuple
    steps_taken: int
    truncated: bool

    @property
    def lambda0(self):
        return self.knots[0].lam

    @property
    def lambda_last(self):
        return self.knots[-1].lam


class KktReport(NamedTuple):
    ok: bool
    max_violation: float


def _check_solver_data(data):
    if data.intercept:
        raise ValueError(
            "path solvers penalize every column; fit with intercept=False "
            "(append a constant column only if it should be penalized)"
        )


def lars_path(data, max_steps=900, lambda_min=0.0):
    """Lasso-modification LARS path for (1/n)||y - X b||^2 + lam ||b||_1.

    Parameters
    ----------
    data : Dataset with intercept=False
    max_steps : cap on knot-to-knot moves; hitting it sets ``truncated``
    lambda_min : stop once a knot at or below this penalty is recorded
        (the path stays exact for all lam >= that knot)

    Returns
    -------
    LarsPath.  Every knot's beta satisfies the KKT conditions at its lam;
    at each knot the active coefficients are re-solved from the normal
    equations, so no drift accumulates along the path.

    A variable whose coefficient crosses zero is dropped and the direction
    recomputed.  Ties (several columns at the maximal absolute correlation
    within 1e-12) are broken toward the lowest column index.  A singular
    active-set Gram matrix drops the most recently added column and ends
    the path with ``truncated`` set.
    """
    _check_solver_data(data)
    X = data.X
    n = X.shape[0]
    G = 2.0 * (X.T @ X) / n
    b = 2.0 * (X.T @ data.y) / n
    return _lars_core(G, b, max_steps=max_steps, lambda_min=lambda_min)


def _lars_core(G, b, max_steps=900, lambda_min=0.0):
    """Gram-form LARS-lasso: G = 2 X'X / n and b = 2 X'y / n.

    The path depends on the data only through (G, b), which lets callers
    that sweep many penalties on one dataset (cross-validation) reuse the
    Gram products.
    """
    if max_steps < 0:
        raise ValueError("max_steps must be >= 0")
    p = b.shape[0]

    lam0 = float(np.max(np.abs(b)))
    beta = np.zeros(p)
    if lam0 <= _TIE_TOL:
        return LarsPath(
            knots=(Knot(0.0, beta, frozenset()),), steps_taken=0, truncated=False
        )

    j0 = int(np.flatnonzero(np.abs(b) >= lam0 - _TIE_TOL * max(1.0, lam0))[0])
    active = [j0]
    signs = {j0: 1.0 if b[j0] > 0 else -1.0}
    knots = [Knot(lam0, beta.copy(), frozenset(active))]
    lam = lam0
    steps = 0
    truncated = False
    banned = None  # variable dropped at the current lam; may not rejoin until lam moves

    while lam > lambda_min and active:
        if steps >= max_steps:
            truncated = True
            break
        idx = np.array(active)
        s = np.array([signs[j] for j in active])
        G_aa = G[np.ix_(idx, idx)]
        try:
            chol = scipy.linalg.cho_factor(G_aa, lower=True)
            u0 = scipy.linalg.cho_solve(chol, b[idx])
            u1 = scipy.linalg.cho_solve(chol, s)
        except scipy.linalg.LinAlgError:
            dropped = active.pop()
            signs.pop(dropped)
            truncated = True
            beta[dropped] = 0.0
            knots[-1] = Knot(knots[-1].lam, knots[-1].beta, frozenset(active))
            break
        # c_j(lam) = v0_j + lam * v1_j along this segment
        v0 = b - G[:, idx] @ u0
        v1 = G[:, idx] @ u1

        tie = _TIE_TOL * max(1.0, lam)
        events = []  # (lam_e, kind, j); kind 0 = drop, 1 = join
        in_active = np.zeros(p, dtype=bool)
        in_active[idx] = True
        # a just-dropped variable sits exactly on the boundary; it may
        # rejoin strictly below the current lam but not at it
        ceiling = np.full(p, lam + tie)
        if banned is not None:
            ceiling[banned] = lam - tie
        with np.errstate(divide="ignore", invalid="ignore"):
            # roots of c_j(lam) = +lam and c_j(lam) = -lam
            for den, num in ((1.0 - v1, v0), (1.0 + v1, -v0)):
                lam_e = np.where(np.abs(den) > _TIE_TOL, num / den, -np.inf)
                hit = ~in_active & (lam_e > tie) & (lam_e <= ceiling)
                events.extend(
                    (min(float(lam_e[j]), lam), 1, int(j)) for j in np.flatnonzero(hit)
                )
        for pos, j in enumerate(active):
            if abs(u1[pos]) <= _TIE_TOL:
                continue
            lam_d = u0[pos] / u1[pos]
            # a coefficient sign change strictly inside the segment
            if tie < lam_d < lam - tie:
                events.append((lam_d, 0, j))

        if events:
            top = max(e[0] for e in events)
            contenders = [e for e in events if e[0] >= top - tie]
            # drops take priority, then the lowest column index
            contenders.sort(key=lambda e: (e[1], e[2]))
            new_lam, kind, j_event = contenders[0]
            best_event = (kind, j_event)
        else:
            new_lam, best_event = 0.0, None
        beta = np.zeros(p)
        beta[idx] = u0 - new_lam * u1
        steps += 1
        if new_lam < lam - tie:
            banned = None
        if best_event is not None:
            kind, j = best_event
            if kind == 0:
                active.remove(j)
                signs.pop(j)
                beta[j] = 0.0
                banned = j
            else:
                cj = v0[j] + new_lam * v1[j]
                active.append(j)
                signs[j] = 1.0 if cj > 0 else -1.0
        if new_lam < knots[-1].lam - tie:
            knots.append(Knot(new_lam, beta.copy(), frozenset(active)))
        else:
            knots[-1] = Knot(knots[-1].lam, beta.copy(), frozenset(active))
        lam = new_lam
        if best_event is None:
            break

    return LarsPath(knots=tuple(knots), steps_taken=steps, truncated=truncated)


def lasso_at(path, lam):
    """Coefficients at penalty ``lam`` by exact interpolation between knots."""
    knots = path.knots
    lam0 = knots[0].lam
    if lam < 0 or lam > lam0 * (1 + 1e-12) + 1e-15:
        raise ValueError(f"lam={lam} outside the path range [0, {lam0}]")
    lam = min(lam, lam0)
    lam_last = knots[-1].lam
    if lam < lam_last - 1e-15:
        raise PathTruncatedError(
            f"path ends at lam={lam_last} before reaching lam={lam}"
        )
    lam = max(lam, lam_last)
    lams = np.array([k.lam for k in knots])
    # knots are strictly decreasing in lam; find first knot at or below lam
    pos = int(np.searchsorted(-lams, -lam, side="left"))
    if lams[pos] == lam:
        return knots[pos].beta.copy()
    lo_knot, hi_knot = knots[pos], knots[pos - 1]
    t = (hi_knot.lam - lam) / (hi_knot.lam - lo_knot.lam)
    return (1.0 - t) * hi_knot.beta + t * lo_knot.beta


def enet_gram(XtX, Xty, n, lam1, lam2, max_steps=900):
    """Elastic-net minimizer from precomputed X'X and X'y.

    Implements the ridge-augmentation route in Gram space: appending the
    pseudo-rows sqrt(n*lam2) * I (the n factor keeps the per-row loss
    normalization consistent) turns the augmented Gram into
    (X'X + n lam2 I) / (1 + n lam2), and the lasso path of that problem
    read off at lam1 * n / ((n+p) * scale) maps back to the elastic-net
    solution.  Pure ridge (lam1 = 0) short-circuits to its closed form.
    """
    if lam1 < 0 or lam2 < 0:
        raise ValueError("penalty weights must be nonnegative")
    p = Xty.shape[0]
    if lam2 == 0:
        if lam1 == 0:
            return np.linalg.lstsq(XtX, Xty, rcond=None)[0]
        path = _lars_core(
            2.0 * XtX / n, 2.0 * Xty / n, max_steps=max_steps, lambda_min=lam1
        )
        if lam1 >= path.lambda0:
            return np.zeros(p)
        return lasso_at(path, lam1)
    if lam1 == 0:
        return np.linalg.solve(XtX + n * lam2 * np.eye(p), Xty)
    c = n * lam2
    m = n + p
    scale = float(np.sqrt(1.0 + c))
    G_aug = 2.0 * (XtX + c * np.eye(p)) / ((1.0 + c) * m)
    b_aug = 2.0 * Xty / (scale * m)
    lam_aug = lam1 * n / (m * scale)
    path = _lars_core(G_aug, b_aug, max_steps=max_steps, lambda_min=lam_aug)
    if lam_aug >= path.lambda0:
        return np.zeros(p)
    return lasso_at(path, lam_aug) / scale


def enet_via_lars(data, lam1, lam2, max_steps=900):
    """Elastic-net minimizer through the ridge-augmentation + lasso-path route."""
    _check_solver_data(data)
    X, y = data.X, data.y
    if lam1 == 0 and lam2 == 0:
        beta, _, rank, _ = np.linalg.lstsq(X, y, rcond=None)
        if rank < X.shape[1]:
            raise ValueError("lam1 = lam2 = 0 requires a full-rank design")
        return beta
    return enet_gram(X.T @ X, X.T @ y, X.shape[0], lam1, lam2, max_steps=max_steps)


def _soft(z, t):
    return np.sign(z) * max(abs(z) - t, 0.0)


def shooting_enet(data, lam1, lam2, tol=1e-10, max_sweeps=10000, beta0=None):
    """Coordinate-descent minimizer of (1/n)||y-Xb||^2 + lam1||b||_1 + lam2||b||^2.

    Sweeps coordinates until the largest coordinate change falls below
    ``tol``.  Non-convergence within ``max_sweeps`` raises a warning, not
    an error.  Uses cached Gram products, so each sweep is O(p^2).
    """
    _check_solver_data(data)
    if lam1 < 0 or lam2 < 0:
        raise ValueError("penalty weights must be nonnegative")
    X = data.X
    n, p = X.shape
    G = 2.0 * (X.T @ X) / n
    b = 2.0 * (X.T @ data.y) / n
    a = np.diag(G) + 2.0 * lam2

    beta = np.zeros(p) if beta0 is None else np.asarray(beta0, dtype=float).copy()
    c = b - G @ beta
    for _ in range(max_sweeps):
        delta_max = 0.0
        for j in range(p):
            rho = c[j] + G[j, j] * beta[j]
            new = _soft(rho, lam1) / a[j] if a[j] > 0 else 0.0
            diff = new - beta[j]
            if diff != 0.0:
                c -= G[:, j] * diff
                beta[j] = new
                delta_max = max(delta_max, abs(diff))
        if delta_max < tol:
            break
    else:
        warnings.warn(
            f"shooting did not reach tol={tol} within {max_sweeps} sweeps",
            RuntimeWarning,
            stacklevel=2,
        )
    return beta


def kkt_check(data, lam1, lam2, beta, tol=1e-8):
    """Verify subgradient optimality of beta for the elastic-net objective.

    Active coordinates must satisfy
        |-2 x_j' r / n + 2 lam2 b_j + lam1 sign(b_j)| <= tol
    and inactive ones |2 x_j' r / n| <= lam1 + tol.  An implied intercept
    column is treated as active and unpenalized.

    Returns
    -------
    KktReport(ok, max_violation)
    """
    beta = np.asarray(beta, dtype=float).reshape(-1)
    r = residuals(data, beta)
    W = data.design
    c = 2.0 * (W.T @ r) / data.n
    worst = 0.0
    for j in range(W.shape[1]):
        penalized = not (data.intercept and j == 0)
        if penalized and beta[j] == 0.0:
            v = max(0.0, abs(c[j]) - lam1)
        elif penalized:
            v = abs(-c[j] + 2.0 * lam2 * beta[j] + lam1 * np.sign(beta[j]))
        else:
            v = abs(c[j])
        worst = max(worst, v)
    return KktReport(ok=bool(worst <= tol), max_violation=float(worst))
