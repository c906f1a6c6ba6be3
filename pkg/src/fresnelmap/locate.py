"""Online location estimation: nearest fingerprint record in signal space."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .fingerprint import Cell, Fingerprint
from .geometry import Point2D
from .ingest import Link, RssWindow, RSS_FLOOR_DBM


@dataclass
class TestVector:
    """RSS vector in the fingerprint's canonical link order; missing links
    are imputed to the floor value before construction."""

    __test__ = False  # not a pytest class despite the name

    rss: np.ndarray  # (k,) dBm
    epoch: int = 0


@dataclass
class LocationEstimate:
    cell: Cell
    center: Point2D
    distance: float  # Euclidean distance in dBm space


def vector_from_windows(
    windows: dict[Link, RssWindow],
    link_order: list[Link],
    epoch: int = 0,
    floor: float = RSS_FLOOR_DBM,
) -> TestVector:
    """Assemble a test vector from one epoch's windows, imputing absent
    links to the floor value."""
    rss = np.full(len(link_order), floor, dtype=float)
    for j, link in enumerate(link_order):
        w = windows.get(link)
        if w is not None:
            rss[j] = w.mean_rss
    return TestVector(rss=rss, epoch=epoch)


def localize(fp: Fingerprint, t: TestVector) -> LocationEstimate:
    """Nearest record by Euclidean distance over all k links; ties broken
    by lowest row-major cell index."""
    if not fp.records:
        raise ValueError("cannot localize against an empty fingerprint")
    rss = np.asarray(t.rss, dtype=float)
    if rss.shape != (fp.k,):
        raise ValueError(f"test vector has shape {rss.shape}, expected ({fp.k},)")
    best_cell: Cell | None = None
    best_dist = float("inf")
    for cell in sorted(fp.records, key=fp.grid.flat_index):
        rec = fp.records[cell]
        dist = float(np.sqrt(np.sum((rss - rec.mean_rss) ** 2)))
        if dist < best_dist:
            best_dist = dist
            best_cell = cell
    assert best_cell is not None
    return LocationEstimate(
        cell=best_cell,
        center=fp.grid.center(best_cell),
        distance=best_dist,
    )


def localization_error(estimate: LocationEstimate, truth: Point2D) -> float:
    """Planar distance in meters between the estimated cell center and the
    true position."""
    return estimate.center.distance_to(truth)
