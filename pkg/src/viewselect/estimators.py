"""scikit-learn style wrappers around the planners.

Targets go in as rows of ``X``. The view selector's ``fit`` takes a mesh and
a trajectory rather than an array, so only its parameter handling follows
the estimator conventions.
"""

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted

from ._validation import check_alpha, check_positive
from .grid import build_grid, grid_uncertainty, optimal_pair
from .multires import coverage_report, select_views, visibility_matrix
from .uncertainty import DEFAULT_SWEEP_N, optimal_baseline, optimal_pair_config, sweep_worst


class PairPlanner(BaseEstimator):
    """Optimal two-camera placement for ground targets.

    ``predict`` returns the two camera positions per target, flattened to
    ``(n, 2 * dim)``; ``transform`` returns the worst-case uncertainty.
    """

    def __init__(self, h=1.0, alpha=0.1, sweep_n=DEFAULT_SWEEP_N):
        self.h = h
        self.alpha = alpha
        self.sweep_n = sweep_n

    def fit(self, X=None, y=None):
        check_positive(self.h, "h")
        check_alpha(self.alpha)
        self.baseline_ = optimal_baseline(self.h, self.alpha)
        cfg = optimal_pair_config(self.h, self.alpha)
        t = float(np.linalg.norm(cfg.s_q - cfg.s_p))
        self.eps_ = float(sweep_worst(t, t / 2, self.h, self.alpha, self.sweep_n)[0][0])
        return self

    def predict(self, X):
        check_is_fitted(self, "eps_")
        X = check_array(X)
        if X.shape[1] not in (2, 3):
            raise ValueError("targets must have 2 or 3 coordinates")
        rows = [optimal_pair(g, self.h, self.alpha) for g in X]
        return np.array([np.concatenate([p.s_p, p.s_q]) for p in rows])

    def transform(self, X):
        check_is_fitted(self, "eps_")
        X = check_array(X)
        # the optimal pair is translation invariant
        return np.full((len(X), 1), self.eps_)


class GridPairSelector(BaseEstimator):
    """Best camera pair on a square grid of spacing ``h``.

    ``extent_y=None`` gives a line of cameras over a planar scene.
    ``predict`` returns the pair indices, ``transform`` the uncertainty.
    """

    def __init__(self, h=1.0, alpha=0.1, extent_x=10.0, extent_y=None,
                 sweep_n=DEFAULT_SWEEP_N, exhaustive=False):
        self.h = h
        self.alpha = alpha
        self.extent_x = extent_x
        self.extent_y = extent_y
        self.sweep_n = sweep_n
        self.exhaustive = exhaustive

    def fit(self, X=None, y=None):
        check_alpha(self.alpha)
        self.grid_ = build_grid(self.extent_x, self.extent_y, self.h)
        return self

    def _solve(self, X):
        check_is_fitted(self, "grid_")
        X = check_array(X)
        return [
            grid_uncertainty(g, self.grid_, self.alpha, self.sweep_n, self.exhaustive) for g in X
        ]

    def predict(self, X):
        return np.array([pair for _, pair in self._solve(X)], dtype=np.int64)

    def transform(self, X):
        return np.array([[eps] for eps, _ in self._solve(X)])


class MultiResViewSelector(BaseEstimator):
    """Coarse-to-fine view selection; ``fit(mesh, traj)`` stores ``selection_``.

    ``transform`` maps an array of camera ids to a boolean "selected" mask.
    """

    def __init__(self, r0=1.0, coverage_target=0.95, k_min=3,
                 aperture="mean_deviation", coverage_mode="area"):
        self.r0 = r0
        self.coverage_target = coverage_target
        self.k_min = k_min
        self.aperture = aperture
        self.coverage_mode = coverage_mode

    def fit(self, mesh, traj):
        vis = visibility_matrix(mesh, traj)
        self.selection_ = select_views(
            mesh, traj, self.r0, self.coverage_target, self.k_min,
            aperture=self.aperture, coverage_mode=self.coverage_mode, vis=vis,
        )
        self.report_ = coverage_report(self.selection_, mesh)
        return self

    def transform(self, ids):
        check_is_fitted(self, "selection_")
        ids = np.asarray(ids, dtype=np.int64).reshape(-1)
        return np.isin(ids, sorted(self.selection_.chosen))
