"""Objective functions for trimmed and penalized regression.

Loss conventions (kept deliberately explicit because they differ):

* depth-trimmed loss and its penalized extension use (1/n) * sum of kept
  squared residuals;
* the rank-trimmed (smallest-h) loss is an unnormalized sum;
* penalties are never normalized by n.
"""

from dataclasses import dataclass, field

import numpy as np

from .depth import TrimState, trim_weights


def _freeze(arr):
    out = np.array(arr, dtype=float)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class Dataset:
    """Immutable regression data: X (n x p), y (n,), optional intercept flag.

    When ``intercept`` is True a leading all-ones column is implied in the
    design; its coefficient is never penalized.  Arrays are copied and made
    read-only, so datasets are safe to share across threads.
    """

    X: np.ndarray
    y: np.ndarray
    intercept: bool = False
    _design: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        X = np.atleast_2d(np.asarray(self.X, dtype=float))
        y = np.asarray(self.y, dtype=float).reshape(-1)
        if X.shape[0] != y.shape[0]:
            raise ValueError(f"X has {X.shape[0]} rows but y has {y.shape[0]}")
        if X.shape[0] < 1 or X.shape[1] < 1:
            raise ValueError("need at least one row and one column")
        if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
            raise ValueError("data must be finite (no NaN/Inf)")
        object.__setattr__(self, "X", _freeze(X))
        object.__setattr__(self, "y", _freeze(y))
        if self.intercept:
            design = _freeze(np.column_stack([np.ones(X.shape[0]), X]))
        else:
            design = self.X
        object.__setattr__(self, "_design", design)

    @property
    def n(self):
        return self.X.shape[0]

    @property
    def p(self):
        """Number of raw predictor columns (excludes the implied intercept)."""
        return self.X.shape[1]

    @property
    def p_eff(self):
        """Coefficient length expected by this dataset."""
        return self.p + (1 if self.intercept else 0)

    @property
    def design(self):
        """Effective design matrix, with the ones column prepended if intercept is on."""
        return self._design

    def subset(self, rows):
        """New Dataset restricted to the given row indices (order preserved)."""
        rows = np.asarray(rows)
        return Dataset(self.X[rows], self.y[rows], intercept=self.intercept)


@dataclass(frozen=True)
class PenaltySpec:
    """Penalty configuration: lam1 * sum|b_j|^gamma + lam2 * sum b_j^2.

    ``alpha`` is the trimming cutoff that accompanies the penalized loss.
    The mixing form (lam_star, alpha_star) with lam_star = lam1 + lam2 and
    alpha_star = lam2 / (lam1 + lam2) is available whenever lam1 + lam2 > 0.
    """

    lam1: float = 0.0
    lam2: float = 0.0
    gamma: float = 1.0
    alpha: float = 1.0

    def __post_init__(self):
        if self.lam1 < 0 or self.lam2 < 0:
            raise ValueError("penalty weights must be nonnegative")
        if self.gamma < 1:
            raise ValueError("gamma must be >= 1")
        if not self.alpha >= 1:
            raise ValueError("trimming alpha must be >= 1")

    @classmethod
    def from_mixing(cls, lam_star, alpha_star, gamma=1.0, alpha=1.0):
        """Build from the bounded (lam_star, alpha_star) parametrization."""
        if lam_star <= 0:
            raise ValueError("lam_star must be positive")
        if not 0 <= alpha_star < 1:
            raise ValueError("alpha_star must lie in [0, 1); pure ridge is excluded")
        return cls(
            lam1=lam_star * (1.0 - alpha_star),
            lam2=lam_star * alpha_star,
            gamma=gamma,
            alpha=alpha,
        )

    @property
    def mixing(self):
        """(lam_star, alpha_star); requires lam1 + lam2 > 0."""
        return reparam_mixing(self.lam1, self.lam2)

    @property
    def guarantees_uniqueness(self):
        """True when the objective is strictly convex on each trim region."""
        return (self.lam1 > 0 and self.gamma > 1) or self.lam2 > 0


@dataclass(frozen=True)
class ObjectiveValue:
    """Objective decomposition: total == loss_part + penalty_part."""

    total: float
    loss_part: float
    penalty_part: float
    trim: TrimState


def residuals(data, beta):
    """r_i = y_i - design_i . beta (ones column implied when intercept is on)."""
    beta = np.asarray(beta, dtype=float).reshape(-1)
    if beta.shape[0] != data.p_eff:
        raise ValueError(
            f"beta has length {beta.shape[0]}, expected {data.p_eff}"
        )
    return data.y - data.design @ beta


def _penalty_coefficients(data, beta):
    """Coefficients subject to penalties: drops the intercept slot if present."""
    return beta[1:] if data.intercept else beta


def lst_objective(data, beta, alpha=1.0):
    """Mean of depth-kept squared residuals: (1/n) * sum r_i^2 * w_i."""
    r = residuals(data, beta)
    trim = trim_weights(r, alpha)
    loss = float(np.dot(trim.weights, r * r) / data.n)
    return ObjectiveValue(total=loss, loss_part=loss, penalty_part=0.0, trim=trim)


def lts_objective(data, beta, h):
    """Sum of the h smallest squared residuals (unnormalized)."""
    n = data.n
    if not (int(np.ceil(n / 2)) <= h <= n):
        raise ValueError(f"h must lie in [ceil(n/2), n] = [{int(np.ceil(n/2))}, {n}], got {h}")
    r2 = residuals(data, beta) ** 2
    if h == n:
        return float(r2.sum())
    return float(np.partition(r2, h - 1)[:h].sum())


def lst_enet_objective(data, beta, spec):
    """Trimmed loss plus penalties: (1/n) sum r^2 w + lam1 sum|b|^gamma + lam2 sum b^2."""
    beta = np.asarray(beta, dtype=float).reshape(-1)
    r = residuals(data, beta)
    trim = trim_weights(r, spec.alpha)
    loss = float(np.dot(trim.weights, r * r) / data.n)
    b = _penalty_coefficients(data, beta)
    penalty = float(
        spec.lam1 * np.sum(np.abs(b) ** spec.gamma) + spec.lam2 * np.sum(b * b)
    )
    return ObjectiveValue(
        total=loss + penalty, loss_part=loss, penalty_part=penalty, trim=trim
    )


def mixing_penalty(beta, lam_star, alpha_star, gamma=1.0):
    """Penalty in mixing form: lam_star * ((1-alpha_star) sum|b|^g + alpha_star ||b||^2)."""
    b = np.asarray(beta, dtype=float).reshape(-1)
    return float(
        lam_star
        * ((1.0 - alpha_star) * np.sum(np.abs(b) ** gamma) + alpha_star * np.sum(b * b))
    )


def reparam_augment(data, lam2):
    """Stack ridge rows onto the design so an L2 penalty becomes extra data.

    Returns ``(augmented, scale)`` with

        X* = (1 + lam2)^(-1/2) * [X; sqrt(lam2) * I_p],   y* = [y; 0_p]

    and ``scale = (1 + lam2)^(1/2)`` mapping coefficients as beta* = scale * beta.
    The matching L1 weight on the augmented problem is lam1 / scale, which the
    caller computes.  Requires lam2 > 0 and no intercept.
    """
    if lam2 <= 0:
        raise ValueError("lam2 must be positive for the augmentation")
    if data.intercept:
        raise ValueError("augmentation requires intercept=False")
    p = data.p
    scale = float(np.sqrt(1.0 + lam2))
    X_aug = np.vstack([data.X, np.sqrt(lam2) * np.eye(p)]) / scale
    y_aug = np.concatenate([data.y, np.zeros(p)])
    return Dataset(X_aug, y_aug, intercept=False), scale


def reparam_mixing(lam1, lam2):
    """(lam_star, alpha_star) = (lam1 + lam2, lam2 / (lam1 + lam2))."""
    total = lam1 + lam2
    if total <= 0:
        raise ValueError("lam1 + lam2 must be positive")
    return float(total), float(lam2 / total)


def mixing_to_direct(lam_star, alpha_star):
    """Inverse of reparam_mixing: (lam1, lam2)."""
    if lam_star <= 0:
        raise ValueError("lam_star must be positive")
    if not 0 <= alpha_star < 1:
        raise ValueError("alpha_star must lie in [0, 1)")
    return float(lam_star * (1.0 - alpha_star)), float(lam_star * alpha_star)


def lambda_max(data):
    """Smallest L1 weight that zeroes the lasso: max_j |2 y' x^(j)| / n.

    Computed over the raw predictor columns (the implied intercept column,
    if any, is unpenalized and excluded).
    """
    return float(np.max(np.abs(2.0 * (data.y @ data.X))) / data.n)
