"""Fitting procedures.

The two trimmed estimators are computed by the same approximate scheme:
random small-subset candidates, refined by guarded concentration steps
(refit on the currently kept rows, accept only objective improvements),
with the best candidate over all repeats winning.  For the penalized
variant each candidate additionally gets a cross-validated penalty pair
selected on its trimmed sub-data and a LARS solve at that pair.

Baselines (LS, ridge, rank-trimmed LTS, lasso, elastic net) live here too.
"""

import logging
import warnings
from dataclasses import dataclass, replace

import numpy as np

from ._rng import TAG_CANDIDATES, TAG_CV, TAG_LTS, derive_rng, derive_seed
from .depth import TrimState, _robust_center_scale, trim_weights
from .exceptions import FitError, NoValidStartError, SingularDesignError
from .objectives import (
    Dataset,
    ObjectiveValue,
    PenaltySpec,
    lambda_max,
    lst_enet_objective,
    lst_objective,
    lts_objective,
    mixing_to_direct,
    residuals,
)
from .solvers import enet_via_lars, kkt_check

logger = logging.getLogger(__name__)

RIDGE_FALLBACK_FACTOR = 1e-8


@dataclass(frozen=True)
class AaConfig:
    """Knobs of the approximate candidate/concentration scheme.

    candidates_per_repeat defaults to the coefficient dimension p and is
    never resolved below p.  gamma must stay 1 for the penalized solver
    route (only the L1 form is solved by LARS).
    """

    outer_repeats: int = 50
    candidates_per_repeat: int | None = None
    concentration_iters: int = 10
    lars_step_cap: int = 900
    alpha: float = 1.0
    gamma: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.outer_repeats < 1 or self.concentration_iters < 1:
            raise ValueError("counts must be >= 1")
        if self.candidates_per_repeat is not None and self.candidates_per_repeat < 1:
            raise ValueError("candidates_per_repeat must be >= 1")
        if self.lars_step_cap < 0:
            raise ValueError("lars_step_cap must be >= 0")
        if not self.alpha >= 1:
            raise ValueError("alpha must be >= 1")
        if self.gamma < 1:
            raise ValueError("gamma must be >= 1")

    def resolved_candidates(self, p):
        base = p if self.candidates_per_repeat is None else self.candidates_per_repeat
        return max(int(base), int(p))


@dataclass(frozen=True)
class FitResult:
    """A fitted coefficient vector plus provenance.

    ``objective`` re-evaluates under the method's own objective at
    ``beta`` and ``trim`` is the kept/dropped state consistent with it
    (an all-ones state for untrimmed methods; the kept-h set for the
    rank-trimmed baseline).
    """

    beta: np.ndarray
    objective: ObjectiveValue
    trim: TrimState
    method: str
    seed: int | None = None
    candidates_evaluated: int = 0
    selected_penalty: PenaltySpec | None = None


def _full_trim(r):
    """All-ones TrimState for untrimmed methods (alpha = inf keeps everything)."""
    return trim_weights(r, np.inf)


def _lstsq(W, y):
    beta, _, rank, _ = np.linalg.lstsq(W, y, rcond=None)
    return beta, int(rank)


def _ridge_fallback(W, y):
    """LS through a tiny data-scaled ridge; used when a subset refit is singular."""
    p = W.shape[1]
    G = W.T @ W
    tr = float(np.trace(G))
    lam = RIDGE_FALLBACK_FACTOR * (tr / p if tr > 0 else 1.0)
    return np.linalg.solve(G + lam * np.eye(p), W.T @ y)


def fit_ls(data):
    """Least squares via a stable factorization; requires full column rank."""
    W = data.design
    beta, rank = _lstsq(W, data.y)
    if rank < W.shape[1]:
        raise SingularDesignError(
            f"design has rank {rank} < {W.shape[1]}; LS is not unique"
        )
    r = residuals(data, beta)
    loss = float(np.mean(r * r))
    trim = _full_trim(r)
    return FitResult(
        beta=beta,
        objective=ObjectiveValue(loss, loss, 0.0, trim),
        trim=trim,
        method="ls",
    )


def fit_ridge(data, lam):
    """Closed-form ridge: (W'W + lam I)^(-1) W'y.  lam = 0 needs full rank.

    The recorded objective uses the unnormalized form sum r^2 + lam ||b||^2
    that this closed form minimizes.
    """
    if lam < 0:
        raise ValueError("ridge penalty must be nonnegative")
    W = data.design
    p = W.shape[1]
    if lam == 0:
        beta, rank = _lstsq(W, data.y)
        if rank < p:
            raise SingularDesignError("lam=0 ridge requires a full-rank design")
    else:
        beta = np.linalg.solve(W.T @ W + lam * np.eye(p), W.T @ data.y)
    r = residuals(data, beta)
    loss = float(np.sum(r * r))
    penalty = float(lam * np.sum(beta * beta))
    trim = _full_trim(r)
    return FitResult(
        beta=beta,
        objective=ObjectiveValue(loss + penalty, loss, penalty, trim),
        trim=trim,
        method="ridge",
        selected_penalty=PenaltySpec(lam1=0.0, lam2=lam),
    )


def default_lts_h(n, p):
    """Customary high-breakdown kept count floor((n+p+1)/2), clipped into range."""
    return int(min(max(int(np.ceil(n / 2)), (n + p + 1) // 2), n))


def _lts_h_set(r2, h):
    n = r2.shape[0]
    if h >= n:
        return np.arange(n)
    return np.sort(np.argpartition(r2, h - 1)[:h])


def fit_lts(data, h, config=None):
    """Rank-trimmed least squares: best of many small-subset starts, each
    refined by refit-on-smallest-h steps until the kept set stabilizes.

    Every refinement step provably does not increase the objective (the
    refit minimizes the sum over the current kept set, which bounds the
    next kept-h sum); a numerical guard enforces this structurally.
    """
    config = config or AaConfig()
    n = data.n
    if not (int(np.ceil(n / 2)) <= h <= n):
        raise ValueError(f"h must lie in [ceil(n/2), n], got {h}")
    W = data.design
    p = W.shape[1]
    y = data.y
    n_starts = config.outer_repeats * config.resolved_candidates(p)

    best = None
    for start in range(n_starts):
        rng = derive_rng(config.seed, TAG_LTS, start)
        subset_size = min(n, p)
        beta = None
        for _ in range(20):
            rows = rng.choice(n, size=subset_size, replace=False)
            cand, rank = _lstsq(W[rows], y[rows])
            if rank == min(subset_size, p):
                beta = cand
                break
        if beta is None:
            continue  # degenerate start, skipped
        obj = lts_objective(data, beta, h)
        kept_prev = None
        for _ in range(config.concentration_iters):
            r2 = residuals(data, beta) ** 2
            kept = _lts_h_set(r2, h)
            if kept_prev is not None and np.array_equal(kept, kept_prev):
                break
            refit, _ = _lstsq(W[kept], y[kept])
            new_obj = lts_objective(data, refit, h)
            if new_obj > obj * (1 + 1e-12) + 1e-12:
                break  # cannot happen mathematically; guards roundoff
            beta, obj, kept_prev = refit, new_obj, kept
        key = (obj, start)
        if best is None or key < best[0]:
            best = (key, beta)
    if best is None:
        raise NoValidStartError("every random starting subset was degenerate")

    beta = best[1]
    obj = lts_objective(data, beta, h)
    r = residuals(data, beta)
    kept = _lts_h_set(r * r, h)
    weights = np.zeros(n)
    weights[kept] = 1.0
    center, scale, degenerate = _robust_center_scale(r)
    trim = TrimState(
        weights=weights,
        kept_indices=kept,
        k=int(kept.size),
        center=center,
        scale=scale,
        degenerate=degenerate,
    )
    return FitResult(
        beta=beta,
        objective=ObjectiveValue(obj, obj, 0.0, trim),
        trim=trim,
        method="lts",
        seed=config.seed,
        candidates_evaluated=n_starts,
    )


def _subset_candidate(data, rng):
    """One candidate from a random small row subset.

    Two anchor rows seed the draw; the subset is extended toward p rows
    (capped below n so the row choice stays informative when p >= n) and
    solved by least squares, with a tiny ridge when the subset is singular.
    """
    n, p = data.n, data.p_eff
    W, y = data.design, data.y
    size = min(n, max(2, min(p, n - 1)))
    rows = None
    for _ in range(20):
        anchors = rng.choice(n, size=2, replace=False)
        if size > 2:
            pool = np.setdiff1d(np.arange(n), anchors)
            extra = rng.choice(pool, size=size - 2, replace=False)
            rows = np.concatenate([anchors, extra])
        else:
            rows = anchors
        beta, rank = _lstsq(W[rows], y[rows])
        if rank == p:
            return beta
        if size < p:
            break  # subsets cannot reach rank p; go straight to the ridge solve
    return _ridge_fallback(W[rows], y[rows])


def concentration_step(data, beta, alpha, spec=None):
    """One guarded refinement: refit on the kept rows, keep only improvements.

    The refit is plain LS on the kept rows when the penalties are zero
    (tiny ridge if singular) and a coordinate-descent elastic net on the
    kept rows otherwise.  Because the trimmed set moves with beta, the
    refit is not guaranteed to descend; the guard returns the input
    unchanged unless the full objective strictly improves.
    """
    beta = np.asarray(beta, dtype=float).reshape(-1)
    spec_eff = spec if spec is not None else PenaltySpec(alpha=alpha)
    if spec_eff.alpha != alpha:
        spec_eff = replace(spec_eff, alpha=alpha)
    current = lst_enet_objective(data, beta, spec_eff)
    sub = data.subset(current.trim.kept_indices)
    if spec_eff.lam1 == 0 and spec_eff.lam2 == 0:
        refit, rank = _lstsq(sub.design, sub.y)
        if rank < data.p_eff:
            refit = _ridge_fallback(sub.design, sub.y)
    else:
        from .solvers import shooting_enet

        refit = shooting_enet(sub, spec_eff.lam1, spec_eff.lam2)
    new = lst_enet_objective(data, refit, spec_eff)
    return refit if new.total < current.total else beta


def _concentrate(data, beta, alpha, spec, max_iters):
    """Iterate guarded steps; stop on a repeated kept set or a fixpoint."""
    seen = set()
    for _ in range(max_iters):
        trim = trim_weights(residuals(data, beta), alpha)
        key = trim.kept_indices.tobytes()
        if key in seen:
            break
        seen.add(key)
        new = concentration_step(data, beta, alpha, spec)
        if np.array_equal(new, beta):
            break
        beta = new
    return beta


def candidate_betas(data, config=None):
    """Full candidate pool: outer_repeats x candidates_per_repeat vectors,
    each concentration-refined under the unpenalized trimmed objective.

    Deterministic: candidate (r, k) draws from the stream derived from
    (seed, r, k), so parallel generation cannot reorder results.
    """
    config = config or AaConfig()
    if data.n < 2:
        raise ValueError("candidate generation needs at least two rows")
    p = data.p_eff
    per = config.resolved_candidates(p)
    out = []
    for rep in range(config.outer_repeats):
        for k in range(per):
            rng = derive_rng(config.seed, TAG_CANDIDATES, rep, k)
            beta = _subset_candidate(data, rng)
            beta = _concentrate(
                data, beta, config.alpha, None, config.concentration_iters
            )
            out.append(beta)
    return out


def fit_lst(data, alpha=1.0, config=None):
    """Minimize the depth-trimmed loss over all concentrated candidates.

    The zero vector is always evaluated as a baseline candidate.  The
    winner is the lexicographic (objective, repeat, candidate) minimum, so
    serial and parallel evaluation agree exactly.
    """
    config = config or AaConfig()
    if config.alpha != alpha:
        config = replace(config, alpha=alpha)
    p = data.p_eff
    per = config.resolved_candidates(p)
    zero = np.zeros(p)
    best_key = (lst_objective(data, zero, alpha).total, -1, -1)
    best_beta = zero
    cands = candidate_betas(data, config)
    for i, beta in enumerate(cands):
        rep, k = divmod(i, per)
        key = (lst_objective(data, beta, alpha).total, rep, k)
        if key < best_key:
            best_key, best_beta = key, beta
    obj = lst_objective(data, best_beta, alpha)
    return FitResult(
        beta=best_beta,
        objective=obj,
        trim=obj.trim,
        method="lst",
        seed=config.seed,
        candidates_evaluated=len(cands) + 1,
    )


def _cv_pair_for_candidate(sub, grid, template, seed):
    """Penalty pair and its CV error for one candidate's trimmed sub-data.

    A concrete grid is used verbatim; otherwise the template (or the
    default) is rebuilt around the sub-data's own lambda ceiling.  A
    single-cell grid is chosen directly (cross-validation cannot alter a
    forced choice); its error is reported as +inf since none was measured.
    """
    from .selection import CvGridSpec, cv_select

    if grid is not None:
        grid_k = grid
    else:
        tmpl = template or CvGridSpec()
        lam0 = lambda_max(sub)
        if lam0 <= 0:
            raise FitError("sub-data lambda ceiling is zero; no penalty scale")
        grid_k = tmpl.build(lam0)
    if len(grid_k.lambdas) * len(grid_k.alphas) == 1:
        return (grid_k.lambdas[0], grid_k.alphas[0]), np.inf
    report = cv_select(sub, grid_k, seed)
    i = grid_k.lambdas.index(report.chosen[0])
    j = grid_k.alphas.index(report.chosen[1])
    return report.chosen, float(report.error_surface[i, j])


def fit_lst_enet(data, config=None, grid=None, grid_spec=None):
    """Penalized trimmed fit via the five-step approximate scheme.

    Per repeat: (1) draw and concentrate candidates; (2) for each
    candidate select a (lam*, alpha*) pair by repeated k-fold CV on its
    trimmed sub-data; (3) solve the elastic net on that sub-data by the
    augmented LARS route at the candidate's pair (step-capped); (4) the
    pair achieving the overall minimum averaged CV error becomes the final
    chosen pair, and the penalized trimmed objective on the full data is
    evaluated for every raw and solved candidate under that final pair;
    (5) the best objective over all repeats wins.

    Candidates sharing a trimmed sub-data set are processed once (the same
    sub-data gives the same selection and solve); their raw vectors still
    all compete in step (4).  The zero vector is only the fallback output
    when no candidate survives: as a competitor its penalty-free objective
    would dominate every regularized fit and the output would collapse to
    zero even on perfectly recoverable data.

    ``grid`` pins one concrete CV grid for every candidate; ``grid_spec``
    shapes per-candidate grids rebuilt from each sub-data's own lambda
    ceiling (the default).
    """
    config = config or AaConfig()
    if config.gamma != 1:
        raise ValueError("the penalized solver route requires gamma = 1")
    if data.intercept:
        raise ValueError("penalized trimmed fitting requires intercept=False")
    alpha = config.alpha
    p = data.p_eff
    per = config.resolved_candidates(p)

    cands = candidate_betas(data, config)
    groups = {}  # kept-set bytes -> [(rep, k, beta, kept)] in draw order
    for i, beta_k in enumerate(cands):
        rep, k = divmod(i, per)
        kept = trim_weights(residuals(data, beta_k), alpha).kept_indices
        groups.setdefault(kept.tobytes(), []).append((rep, k, beta_k, kept))

    solved = []  # (rep, tag, beta) entries from per-group LARS solves
    raw = []  # (rep, tag, beta) for every drawn candidate
    final_pair, final_err_key = None, None
    for members in groups.values():
        rep0, k0, _, kept = members[0]
        raw.extend((rep, 2 * k, beta_k) for rep, k, beta_k, _ in members)
        sub = data.subset(kept)
        try:
            cv_seed = derive_seed(config.seed, TAG_CV, rep0, k0)
            pair, err = _cv_pair_for_candidate(sub, grid, grid_spec, cv_seed)
        except Exception as exc:  # noqa: BLE001 - candidate-level containment
            logger.warning(
                "candidate group at (%d, %d) skipped: CV failed: %s", rep0, k0, exc
            )
            continue
        err_key = (err, rep0, k0)
        if final_err_key is None or err_key < final_err_key:
            final_pair, final_err_key = pair, err_key
        lam1, lam2 = mixing_to_direct(*pair)
        try:
            beta_hat = enet_via_lars(sub, lam1, lam2, max_steps=config.lars_step_cap)
            solved.append((rep0, 2 * k0 + 1, beta_hat))
        except Exception as exc:  # noqa: BLE001
            logger.warning(
                "candidate group at (%d, %d): LARS solve failed (%s); raw kept",
                rep0,
                k0,
                exc,
            )

    if final_pair is None:
        logger.warning("no candidate survived selection; returning the zero vector")
        spec = PenaltySpec(alpha=alpha)
        obj = lst_enet_objective(data, np.zeros(p), spec)
        return FitResult(
            beta=np.zeros(p),
            objective=obj,
            trim=obj.trim,
            method="lst-enet",
            seed=config.seed,
            candidates_evaluated=0,
            selected_penalty=spec,
        )

    lam1, lam2 = mixing_to_direct(*final_pair)
    spec = PenaltySpec(lam1=lam1, lam2=lam2, gamma=1.0, alpha=alpha)
    best_key, best_beta = None, None
    for rep, tag, beta in raw + solved:
        val = lst_enet_objective(data, beta, spec).total
        key = (val, rep, tag)
        if best_key is None or key < best_key:
            best_key, best_beta = key, beta
    obj = lst_enet_objective(data, best_beta, spec)
    return FitResult(
        beta=best_beta,
        objective=obj,
        trim=obj.trim,
        method="lst-enet",
        seed=config.seed,
        candidates_evaluated=len(raw) + len(solved),
        selected_penalty=spec,
    )


def fit_enet(data, lam1, lam2, max_steps=900, method="enet"):
    """Untrimmed elastic net via the ridge-augmentation + LARS route,
    certified by a KKT check on the original problem."""
    if lam1 < 0 or lam2 < 0:
        raise ValueError("penalty weights must be nonnegative")
    if lam1 == 0 and lam2 == 0:
        ls = fit_ls(data)
        beta = ls.beta
    else:
        beta = enet_via_lars(data, lam1, lam2, max_steps=max_steps)
    report = kkt_check(data, lam1, lam2, beta, tol=1e-6)
    if not report.ok:
        warnings.warn(
            f"elastic-net KKT violation {report.max_violation:.3e} exceeds 1e-6",
            RuntimeWarning,
            stacklevel=2,
        )
    r = residuals(data, beta)
    loss = float(np.mean(r * r))
    penalty = float(lam1 * np.sum(np.abs(beta)) + lam2 * np.sum(beta * beta))
    trim = _full_trim(r)
    return FitResult(
        beta=beta,
        objective=ObjectiveValue(loss + penalty, loss, penalty, trim),
        trim=trim,
        method=method,
        selected_penalty=PenaltySpec(lam1=lam1, lam2=lam2),
    )


def fit_lasso(data, lam1, max_steps=900):
    """Lasso = elastic net with lam2 = 0."""
    return fit_enet(data, lam1, 0.0, max_steps=max_steps, method="lasso")
