"""Scikit-learn style facade over the offline/online pipeline.

fit() runs the crowdsourced fingerprint construction (windowing, silence
profiling, guest filtering, store updates); predict() nearest-neighbor
matches test RSS vectors against the fitted store.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError
from sklearn.utils.validation import check_array

from .detection import DEFAULT_TAU, DEFAULT_ZONE_ORDER, DetectorParams
from .ingest import DeviceBasedFix, RssSample, Topology
from .locate import TestVector, localize
from .pipeline import build_fingerprint


class DeviceFreeLocalizer(BaseEstimator):
    """Device-free localizer trained from crowd-sourced RSS streams.

    Parameters
    ----------
    topology : Topology
        Floor plan, node placements, and the link set.
    tau : float, default 0.055
        Device-free activation threshold (relative RSS change).
    zone_order : int, default 5
        Fresnel zone order for device-based link coverage.
    cell_size : float, default 0.55
        Grid cell edge length in meters.
    epoch_len : float, default 1.0
        Window length in seconds.
    """

    def __init__(
        self,
        topology: Topology | None = None,
        tau: float = DEFAULT_TAU,
        zone_order: int = DEFAULT_ZONE_ORDER,
        cell_size: float = 0.55,
        epoch_len: float = 1.0,
    ):
        self.topology = topology
        self.tau = tau
        self.zone_order = zone_order
        self.cell_size = cell_size
        self.epoch_len = epoch_len

    def fit(
        self,
        samples: list[RssSample],
        fixes: list[DeviceBasedFix],
        silence_epochs: set[int] | None = None,
    ) -> "DeviceFreeLocalizer":
        """Build the fingerprint store from sorted sample and fix streams.

        silence_epochs mark the zero-person epochs used for baselines.
        """
        if self.topology is None:
            raise ValueError("a topology is required to fit")
        params = DetectorParams(tau=self.tau, zone_order=self.zone_order)
        self.fingerprint_, self.report_ = build_fingerprint(
            self.topology,
            samples,
            fixes,
            silence_epochs or set(),
            params,
            cell_size=self.cell_size,
            epoch_len=self.epoch_len,
        )
        self.n_features_in_ = self.fingerprint_.k
        return self

    def _check_fitted(self):
        if not hasattr(self, "fingerprint_"):
            raise NotFittedError(
                "this DeviceFreeLocalizer instance is not fitted yet; call fit first"
            )

    def _validate_vectors(self, X) -> np.ndarray:
        X = check_array(X, dtype=float, ensure_2d=True)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(
                f"X has {X.shape[1]} columns, fingerprint has "
                f"{self.n_features_in_} links"
            )
        return X

    def predict(self, X) -> np.ndarray:
        """Estimated positions, shape (n_vectors, 2), as cell centers."""
        self._check_fitted()
        X = self._validate_vectors(X)
        out = np.empty((X.shape[0], 2))
        for i, row in enumerate(X):
            est = localize(self.fingerprint_, TestVector(rss=row, epoch=i))
            out[i] = (est.center.x, est.center.y)
        return out

    def predict_cells(self, X) -> list[tuple[int, int]]:
        """Matched grid cells as (col, row) pairs."""
        self._check_fitted()
        X = self._validate_vectors(X)
        return [
            localize(self.fingerprint_, TestVector(rss=row, epoch=i)).cell
            for i, row in enumerate(X)
        ]
