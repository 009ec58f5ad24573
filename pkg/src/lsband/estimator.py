"""Scikit-learn style estimator over the HDR pipeline.

``HighestDensityRegion`` fits an HDR of prescribed probability content on
training data (selecting the bandwidth unless one is given) and then
classifies points as inliers (+1) or novelties (-1), so it drops into
pipelines and model-selection tooling alongside other outlier detectors.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, OutlierMixin
from sklearn.utils.validation import check_is_fitted

from . import kde
from .bandwidth import as_bandwidth
from .selector import SelectorConfig, hdr_estimate, lscv_bandwidth, select_bandwidth
from .validation import check_data, check_points


class HighestDensityRegion(BaseEstimator, OutlierMixin):
    """Novelty detection via the estimated highest-density region.

    Parameters
    ----------
    tau : float
        Probability outside the region; the asymptotic false positive rate.
    bandwidth : "plugin", "lscv", float, vector, or matrix
        "plugin" runs the HDR-tailored selector, "lscv" the cross-validation
        baseline; numeric values fix the bandwidth (scale, per-axis scales,
        or a full SPD matrix).
    bandwidth_class : {"scalar", "diagonal", "full"}
        Matrix class searched by the selectors.
    grid_counts : int
        Nodes per axis for the level and contour computations.

    Attributes
    ----------
    bandwidth_ : Bandwidth
        The bandwidth used by the fitted region.
    level_ : float
        Estimated tau-level of the KDE.
    contour_ : Contour
        Boundary polyline(s) of the fitted region.
    selection_ : SelectionResult or None
        Optimizer diagnostics when a selector ran.
    """

    def __init__(self, tau=0.1, bandwidth="plugin", bandwidth_class="diagonal", grid_counts=256):
        self.tau = tau
        self.bandwidth = bandwidth
        self.bandwidth_class = bandwidth_class
        self.grid_counts = grid_counts

    def fit(self, X, y=None):
        X = check_data(X, min_rows=10, d=2)
        self.selection_ = None
        if isinstance(self.bandwidth, str):
            if self.bandwidth == "plugin":
                self.selection_ = select_bandwidth(
                    X,
                    SelectorConfig(
                        target="hdr",
                        tau=self.tau,
                        klass=self.bandwidth_class,
                        grid_counts=self.grid_counts,
                    ),
                )
            elif self.bandwidth == "lscv":
                self.selection_ = lscv_bandwidth(X, self.bandwidth_class)
            else:
                raise ValueError(f"unknown bandwidth rule {self.bandwidth!r}")
            H = self.selection_.h_opt
        else:
            H = as_bandwidth(self.bandwidth, 2)
        est = hdr_estimate(X, H, self.tau, grid_counts=self.grid_counts)
        self.bandwidth_ = H
        self.level_ = est.f_tau_hat
        self.contour_ = est.contour
        self.train_data_ = X
        self.n_features_in_ = 2
        return self

    def score_samples(self, X) -> np.ndarray:
        """KDE density of the training data at the query points."""
        check_is_fitted(self, "bandwidth_")
        X = check_points(np.atleast_2d(np.asarray(X, float)), 2, name="X")
        return np.atleast_1d(kde.kde_density(self.train_data_, self.bandwidth_, X))

    def decision_function(self, X) -> np.ndarray:
        """Density margin over the region level; nonnegative inside the HDR."""
        return self.score_samples(X) - self.level_

    def predict(self, X) -> np.ndarray:
        """+1 for points inside the region, -1 for novelties."""
        return np.where(self.decision_function(X) >= 0.0, 1, -1)
