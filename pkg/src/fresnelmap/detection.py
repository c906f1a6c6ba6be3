"""Active link detection and guest presence decision.

Two detectors run per epoch: the device-free detector thresholds the
relative change of each link's windowed RSS mean against its silence
baseline, and the device-based detector marks links whose Fresnel ellipse
contains at least one reported user position. A guest (a person unknown
to the device-based system) is declared present when some link is active
device-free but unexplained device-based.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .geometry import contains, ellipse_of
from .ingest import DeviceBasedFix, Link, RssWindow, Topology

DEFAULT_TAU = 0.055
DEFAULT_ZONE_ORDER = 5


@dataclass(frozen=True)
class DetectorParams:
    """Activation threshold (relative RSS change) and Fresnel zone order
    used for device-based link coverage."""

    tau: float = DEFAULT_TAU
    zone_order: int = DEFAULT_ZONE_ORDER

    def __post_init__(self):
        if self.tau < 0:
            raise ValueError(f"tau must be >= 0, got {self.tau}")
        if self.zone_order < 1:
            raise ValueError(f"zone_order must be >= 1, got {self.zone_order}")


@dataclass
class SilenceProfile:
    """Per-link baseline RSS mean over all zero-person epochs."""

    baselines: dict[Link, float]
    counts: dict[Link, int]

    def __post_init__(self):
        for link, baseline in self.baselines.items():
            if baseline == 0.0:
                raise ValueError(f"link {link}: silence baseline must be nonzero")


@dataclass
class ActiveLinkSets:
    """Detector outputs for one epoch."""

    device_free: set[Link]
    device_based: set[Link]
    deltas: dict[Link, float] = field(default_factory=dict)


def build_silence_profile(
    silence_epochs: list[dict[Link, RssWindow]],
    topology: Topology,
) -> SilenceProfile:
    """Pool silence windows into per-link baselines (count-weighted mean,
    i.e. the mean over all raw silence samples of the link).

    Every topology link must appear in at least one silence epoch.
    """
    # incremental count-weighted pooling: exact when all windows of a link
    # share one constant value, so zero-noise deltas are exactly zero
    baselines: dict[Link, float] = {}
    counts: dict[Link, int] = {}
    for windows in silence_epochs:
        for link, w in windows.items():
            mean = baselines.get(link, 0.0)
            count = counts.get(link, 0) + w.count
            baselines[link] = mean + (w.mean_rss - mean) * (w.count / count)
            counts[link] = count
    missing = [link for link in topology.links if link not in counts]
    if missing:
        raise ValueError(
            "no silence data for link(s): "
            + ", ".join(f"{ap}->{mp}" for ap, mp in missing)
        )
    return SilenceProfile(baselines=baselines, counts=counts)


def detect_device_free(
    windows: dict[Link, RssWindow],
    profile: SilenceProfile,
    params: DetectorParams,
) -> tuple[set[Link], dict[Link, float]]:
    """Threshold each link's relative absolute RSS change against tau.

    delta = |(mean - baseline) / baseline|; a link is active iff
    delta > tau (strictly). Links absent from the epoch are inactive.
    """
    active: set[Link] = set()
    deltas: dict[Link, float] = {}
    for link, w in windows.items():
        baseline = profile.baselines.get(link)
        if baseline is None:
            raise ValueError(f"link {link[0]}->{link[1]} has no silence baseline")
        delta = abs((w.mean_rss - baseline) / baseline)
        deltas[link] = delta
        if delta > params.tau:
            active.add(link)
    return active, deltas


def detect_device_based(
    fixes: list[DeviceBasedFix],
    topology: Topology,
    params: DetectorParams,
) -> set[Link]:
    """Links whose zone ellipse (at params.zone_order) contains at least
    one reported device-based position."""
    if not fixes:
        return set()
    active: set[Link] = set()
    for link_id, link in topology.radio_links().items():
        ellipse = ellipse_of(link, params.zone_order)
        for fix in fixes:
            if contains(ellipse, fix.pos):
                active.add(link_id)
                break
    return active


def detect_guests(sets: ActiveLinkSets) -> bool:
    """True iff some device-free active link is unexplained by the
    device-based positions; the epoch's fingerprint record is then
    discarded."""
    return bool(sets.device_free - sets.device_based)


def detect_epoch(
    windows: dict[Link, RssWindow],
    fixes: list[DeviceBasedFix],
    topology: Topology,
    profile: SilenceProfile,
    params: DetectorParams,
) -> ActiveLinkSets:
    """Run both detectors for one epoch."""
    device_free, deltas = detect_device_free(windows, profile, params)
    device_based = detect_device_based(fixes, topology, params)
    return ActiveLinkSets(device_free=device_free, device_based=device_based, deltas=deltas)
