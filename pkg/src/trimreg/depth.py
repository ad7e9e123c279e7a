"""Scalar robust statistics: median, MAD, outlyingness, and depth trimming.

The outlyingness of a point x in a univariate sample is |x - Med| / MAD,
with the convention that the scale is 1 when the MAD degenerates (a
majority of identical values).  Depth trimming keeps exactly the
observations whose outlyingness is at most a cutoff alpha >= 1.
"""

from dataclasses import dataclass

import numpy as np

# MAD below this is treated as the degenerate (majority identical) case.
DEGENERATE_MAD_TOL = 1e-12


def _as_vector(v, name="input"):
    """Validate and return a 1-D float array with finite entries."""
    arr = np.asarray(v, dtype=float)
    if arr.ndim != 1:
        arr = arr.reshape(-1)
    if arr.size < 1:
        raise ValueError(f"{name} must contain at least one value")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} must be finite (no NaN/Inf)")
    return arr


@dataclass(frozen=True)
class TrimState:
    """Result of depth trimming a residual vector.

    weights : binary 0/1 array, length n
    kept_indices : sorted indices where weights == 1
    k : number of kept observations
    center : median of the vector
    scale : MAD of the vector, or 1.0 under the degenerate rule
    degenerate : True when the degenerate-scale rule fired
    """

    weights: np.ndarray
    kept_indices: np.ndarray
    k: int
    center: float
    scale: float
    degenerate: bool

    def __post_init__(self):
        if self.k != self.kept_indices.size or self.k != int(self.weights.sum()):
            raise ValueError("inconsistent trim state: k mismatch")
        if not self.scale > 0:
            raise ValueError("trim scale must be positive")


def median(v):
    """Median of a non-empty vector; even length averages the two middle order statistics."""
    return float(np.median(_as_vector(v)))


def mad(v):
    """Median of absolute deviations from the median (no consistency factor)."""
    arr = _as_vector(v)
    return float(np.median(np.abs(arr - np.median(arr))))


def _robust_center_scale(sample):
    """(median, scale, degenerate) with the degenerate-MAD rule applied."""
    arr = _as_vector(sample, "sample")
    center = float(np.median(arr))
    scale = float(np.median(np.abs(arr - center)))
    if scale < DEGENERATE_MAD_TOL:
        return center, 1.0, True
    return center, scale, False


def outlyingness(x, sample):
    """|x - Med(sample)| / scale, where scale is MAD or 1 when degenerate."""
    if not np.isfinite(x):
        raise ValueError("point must be finite")
    center, scale, _ = _robust_center_scale(sample)
    return abs(float(x) - center) / scale


def trim_weights(residuals, alpha=1.0):
    """Depth-trim a residual vector at cutoff ``alpha``.

    Keeps residual i iff |r_i - Med| / scale <= alpha.  For alpha >= 1 and
    a non-degenerate scale, at least floor((n+1)/2) residuals are kept
    because at least half the absolute deviations sit at or below the MAD.

    Parameters
    ----------
    residuals : array-like, shape (n,)
    alpha : trimming cutoff, must be >= 1 (np.inf keeps everything)

    Returns
    -------
    TrimState
    """
    if not alpha >= 1.0:
        raise ValueError(f"alpha must be >= 1, got {alpha}")
    arr = _as_vector(residuals, "residuals")
    center, scale, degenerate = _robust_center_scale(arr)
    weights = (np.abs(arr - center) / scale <= alpha).astype(float)
    kept = np.flatnonzero(weights)
    return TrimState(
        weights=weights,
        kept_indices=kept,
        k=int(kept.size),
        center=center,
        scale=scale,
        degenerate=degenerate,
    )
