"""Offline fingerprint construction pipeline.

Wires windowing, silence profiling, per-epoch detection, the guest
comparator, and the fingerprint store into one pass over a dataset.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .detection import DetectorParams, SilenceProfile, build_silence_profile, detect_epoch
from .fingerprint import (
    DISCARDED_GUEST,
    SKIPPED_NO_FIX,
    STORED,
    Fingerprint,
    make_grid,
    update,
)
from .ingest import DeviceBasedFix, EpochWindows, Link, RssSample, Topology, windowize


@dataclass
class BuildReport:
    """Per-epoch outcomes of one fingerprint build."""

    params: DetectorParams
    outcomes: list[tuple[int, str]] = field(default_factory=list)

    @property
    def stored(self) -> int:
        return sum(1 for _, o in self.outcomes if o == STORED)

    @property
    def discarded(self) -> int:
        return sum(1 for _, o in self.outcomes if o == DISCARDED_GUEST)

    @property
    def skipped(self) -> int:
        return sum(1 for _, o in self.outcomes if o == SKIPPED_NO_FIX)

    def stored_by_epoch(self) -> dict[int, bool]:
        return {epoch: outcome == STORED for epoch, outcome in self.outcomes}

    def summary_lines(self) -> list[str]:
        return [
            f"epochs {len(self.outcomes)}",
            f"stored {self.stored}",
            f"discarded_guest {self.discarded}",
            f"skipped_no_fix {self.skipped}",
        ]

    def to_text(self) -> str:
        lines = self.summary_lines()
        lines.append(f"params tau={self.params.tau!r} zone_order={self.params.zone_order}")
        for epoch, outcome in self.outcomes:
            lines.append(f"{epoch} {outcome}")
        return "\n".join(lines) + "\n"


def build_fingerprint(
    topology: Topology,
    samples: list[RssSample],
    fixes: list[DeviceBasedFix],
    silence_epochs: set[int],
    params: DetectorParams,
    cell_size: float = 0.55,
    epoch_len: float = 1.0,
) -> tuple[Fingerprint, BuildReport]:
    """Run the full offline pass and return the store plus its report.

    silence_epochs name the zero-person epochs the per-link baselines are
    pooled from; every topology link must appear in at least one of them.
    """
    epochs = windowize(samples, fixes, epoch_len)
    if not silence_epochs:
        raise ValueError("no silence epochs provided; cannot build a silence profile")
    silence_windows = [e.windows for e in epochs if e.epoch in silence_epochs]
    if not silence_windows:
        raise ValueError("silence epochs carry no samples; cannot build a silence profile")
    profile = build_silence_profile(silence_windows, topology)

    grid = make_grid(topology, cell_size)
    fp = Fingerprint(grid=grid, link_order=topology.links, params_used=params)
    report = BuildReport(params=params)
    for e in epochs:
        sets = detect_epoch(e.windows, e.fixes, topology, profile, params)
        outcome = update(fp, e.windows, e.fixes, sets)
        report.outcomes.append((e.epoch, outcome))
    return fp, report


def epoch_detections(
    topology: Topology,
    epochs: list[EpochWindows],
    profile: SilenceProfile,
    params: DetectorParams,
):
    """Detector outputs per epoch, for inspection and oracle checks."""
    return {
        e.epoch: detect_epoch(e.windows, e.fixes, topology, profile, params)
        for e in epochs
    }


def half_density_links(topology: Topology) -> list[Link]:
    """Every other link of the canonical ordering (reduced stream density)."""
    return topology.links[::2]
