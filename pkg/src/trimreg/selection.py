"""Penalty selection: the (lam*, alpha*) grid and repeated k-fold CV.

The grid lives in the bounded mixing parametrization: lam* ranges over 10
equal steps up to the data's lambda ceiling and alpha* over ten equal
points of [0, 1) (pure ridge excluded).  Cell scores are mean squared
prediction errors averaged over folds and independent CV repeats.
"""

import logging
from dataclasses import dataclass, field

import numpy as np

from ._rng import TAG_FOLDS, derive_rng
from .exceptions import FitError
from .objectives import mixing_to_direct
from .solvers import enet_gram

logger = logging.getLogger(__name__)

DEFAULT_ALPHAS = tuple(np.round(np.arange(10) / 10, 1))


@dataclass(frozen=True)
class CvGrid:
    """Concrete (lam*, alpha*) grid plus fold/repeat counts."""

    lambdas: tuple
    alphas: tuple = DEFAULT_ALPHAS
    folds: int = 5
    repeats: int = 10

    def __post_init__(self):
        lams = tuple(float(v) for v in self.lambdas)
        alphas = tuple(float(v) for v in self.alphas)
        if len(lams) < 1 or any(v <= 0 for v in lams):
            raise ValueError("lambdas must be positive")
        if any(b <= a for a, b in zip(lams, lams[1:])):
            raise ValueError("lambdas must be strictly increasing")
        if len(alphas) < 1 or any(not 0 <= a < 1 for a in alphas):
            raise ValueError("alphas must lie in [0, 1); pure ridge is excluded")
        if self.folds < 2 or self.repeats < 1:
            raise ValueError("need folds >= 2 and repeats >= 1")
        object.__setattr__(self, "lambdas", lams)
        object.__setattr__(self, "alphas", alphas)


@dataclass(frozen=True)
class CvGridSpec:
    """Grid template; ``build(lam0)`` instantiates the lambdas for a dataset."""

    n_lambdas: int = 10
    alphas: tuple = DEFAULT_ALPHAS
    folds: int = 5
    repeats: int = 10

    def build(self, lam0):
        return build_grid(
            lam0,
            n_lambdas=self.n_lambdas,
            alphas=self.alphas,
            folds=self.folds,
            repeats=self.repeats,
        )


@dataclass(frozen=True)
class CvReport:
    """CV error surface (lambdas x alphas) and the chosen pair."""

    error_surface: np.ndarray
    per_repeat: np.ndarray
    chosen: tuple
    grid: CvGrid


def build_grid(lam0, n_lambdas=10, alphas=DEFAULT_ALPHAS, folds=5, repeats=10):
    """Equally spaced lambdas {lam0/m, 2 lam0/m, ..., lam0} with m = n_lambdas."""
    if lam0 <= 0:
        raise ValueError("lam0 must be positive")
    lams = tuple(lam0 * (i + 1) / n_lambdas for i in range(n_lambdas))
    return CvGrid(lambdas=lams, alphas=tuple(alphas), folds=folds, repeats=repeats)


def kfold_split(n, k, rng):
    """Random disjoint cover of range(n) by k folds with sizes differing by <= 1."""
    if k < 2:
        raise ValueError("need at least two folds")
    if n < k:
        raise ValueError(f"cannot split {n} rows into {k} folds")
    perm = rng.permutation(n)
    return [np.sort(fold) for fold in np.array_split(perm, k)]


def _fold_error(gram, lam_star, alpha_star, trimmed_scoring):
    XtX, Xty, ntr, X_test, y_test = gram
    lam1, lam2 = mixing_to_direct(lam_star, alpha_star)
    beta = enet_gram(XtX, Xty, ntr, lam1, lam2)
    err2 = (y_test - X_test @ beta) ** 2
    if trimmed_scoring:
        keep = max(1, int(np.ceil(0.8 * err2.size)))
        err2 = np.sort(err2)[:keep]
    return float(np.mean(err2))


def cv_select(data, grid, seed, trimmed_scoring=False):
    """Repeated k-fold CV over the grid; returns the error surface and argmin.

    Each repeat r derives its fold shuffle from (seed, r), so repeats are
    independent but reproducible, and cells accumulate by index, making
    the result order-free.  A failed fold fit poisons its cell with an
    infinite error (logged).  Ties within 1e-12 of the minimum break
    toward larger lam*, then larger alpha* (prefer more regularization).

    ``trimmed_scoring`` scores folds by the mean of the smallest 80% of
    squared errors; it is off by default.
    """
    if data.intercept:
        raise ValueError("CV fitting requires intercept=False")
    n = data.n
    if n < grid.folds:
        raise ValueError(f"need at least {grid.folds} rows, got {n}")
    L, A = len(grid.lambdas), len(grid.alphas)
    per_repeat = np.zeros((grid.repeats, L, A))
    all_rows = np.arange(n)
    for rep in range(grid.repeats):
        folds = kfold_split(n, grid.folds, derive_rng(seed, TAG_FOLDS, rep))
        for fold in folds:
            train = np.setdiff1d(all_rows, fold)
            X_tr, y_tr = data.X[train], data.y[train]
            gram = (X_tr.T @ X_tr, X_tr.T @ y_tr, train.size, data.X[fold], data.y[fold])
            for i, lam_star in enumerate(grid.lambdas):
                for j, alpha_star in enumerate(grid.alphas):
                    try:
                        err = _fold_error(gram, lam_star, alpha_star, trimmed_scoring)
                    except Exception as exc:  # noqa: BLE001 - cell containment
                        logger.warning(
                            "CV cell (lam*=%g, alpha*=%g) disqualified: %s",
                            lam_star,
                            alpha_star,
                            exc,
                        )
                        err = np.inf
                    per_repeat[rep, i, j] += err / grid.folds
    surface = per_repeat.mean(axis=0)

    vmin = float(np.min(surface))
    if not np.isfinite(vmin):
        raise FitError("every CV grid cell failed")
    best = None
    for i, lam_star in enumerate(grid.lambdas):
        for j, alpha_star in enumerate(grid.alphas):
            if surface[i, j] <= vmin + 1e-12:
                key = (lam_star, alpha_star)
                if best is None or key > best:
                    best = key
    return CvReport(
        error_surface=surface, per_repeat=per_repeat, chosen=best, grid=grid
    )
