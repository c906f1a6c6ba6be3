"""Synthetic RF testbed: RSS streams, device-based fixes, ground truth.

Propagation is log-distance path loss plus an additive per-zone
attenuation for every person near a link: each person subtracts the
attenuation of the lowest-order Fresnel zone containing them (nothing if
outside all modeled zones), using the same ellipse membership predicate
the detectors use. Host tracks additionally emit device-based fixes at
their waypoint timestamps; guest tracks perturb RSS but stay invisible
to the fix stream.
"""

from __future__ import annotations

import math
import zlib
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .fingerprint import Cell, Grid, cell_of
from .geometry import Point2D, contains, ellipse_of
from .ingest import (
    RSS_FLOOR_DBM,
    DeviceBasedFix,
    Link,
    Room,
    RssSample,
    Topology,
)

DEFAULT_ZONE_ATTENUATION = (6.0, 3.0, 1.5, 0.75, 0.4)  # dB for orders 1..5
DEFAULT_RATE = 3.0  # samples per second per link

# scenario counts for the standard data collection suite:
# one host only / host+guest same zone / host+guest different zones in the
# same room / host+guest different rooms / silence
SUITE_COUNTS = (131, 8, 10, 22, 1)


@dataclass(frozen=True)
class PropagationParams:
    """Log-distance path loss with per-zone body attenuation and white
    measurement noise; fully deterministic given the seed."""

    ref_loss_db: float = 40.0  # loss at 1 m
    path_loss_exponent: float = 2.2
    noise_sigma: float = 1.0  # dB
    zone_attenuation: tuple[float, ...] = DEFAULT_ZONE_ATTENUATION
    tx_power_dbm: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be >= 0")
        if not self.zone_attenuation:
            raise ValueError("zone_attenuation must be non-empty")
        for a, b in zip(self.zone_attenuation, self.zone_attenuation[1:]):
            if b > a:
                raise ValueError("zone_attenuation must be non-increasing in order")


Track = list[tuple[float, Point2D]]  # (scenario-relative seconds, position)


@dataclass
class Scenario:
    """One data collection episode.

    Host tracks produce fixes; guest tracks never do. A silence scenario
    has no people at all and is what silence baselines are built from.
    """

    id: str
    duration: float
    host_tracks: dict[str, Track] = field(default_factory=dict)
    guest_tracks: dict[str, Track] = field(default_factory=dict)
    silence: bool = False

    def __post_init__(self):
        if self.duration <= 0:
            raise ValueError(f"scenario {self.id}: duration must be positive")
        if self.silence and (self.host_tracks or self.guest_tracks):
            raise ValueError(f"scenario {self.id}: silence scenarios have no tracks")
        for user, track in {**self.host_tracks, **self.guest_tracks}.items():
            if not track:
                raise ValueError(f"scenario {self.id}: empty track for {user!r}")


@dataclass
class EpochLabel:
    """Ground truth for one epoch."""

    scenario_id: str
    host_cells: set[Cell]
    guest_present: bool
    silence: bool

    @property
    def expected_stored(self) -> bool:
        return not self.guest_present and bool(self.host_cells)


@dataclass
class ScenarioLabel:
    """Epoch-indexed ground truth labels."""

    entries: dict[int, EpochLabel] = field(default_factory=dict)

    def update(self, other: "ScenarioLabel") -> None:
        overlap = set(self.entries) & set(other.entries)
        if overlap:
            raise ValueError(f"duplicate label epochs: {sorted(overlap)[:5]}")
        self.entries.update(other.entries)


def _track_position(track: Track, t_rel: float) -> Point2D:
    """Piecewise-constant hold: latest waypoint at or before t_rel, or the
    first waypoint if the track starts later."""
    pos = track[0][1]
    for ts, p in track:
        if ts <= t_rel:
            pos = p
        else:
            break
    return pos


def _scenario_rng(prop: PropagationParams, scenario_id: str) -> np.random.Generator:
    return np.random.default_rng([prop.seed, zlib.crc32(scenario_id.encode())])


def simulate_rss(
    topology: Topology,
    scenario: Scenario,
    prop: PropagationParams,
    rate: float = DEFAULT_RATE,
    *,
    grid: Grid,
    epoch_len: float = 1.0,
    t_offset: float = 0.0,
) -> tuple[list[RssSample], list[DeviceBasedFix], ScenarioLabel]:
    """Render one scenario into sample, fix, and label streams.

    Timestamps are shifted by t_offset so scenarios can be concatenated
    into one dataset; t_offset must sit on an epoch boundary.
    """
    if rate <= 0:
        raise ValueError("rate must be positive")
    links = topology.radio_links()
    for user, track in {**scenario.host_tracks, **scenario.guest_tracks}.items():
        for _, p in track:
            if not topology.in_bounds(p):
                raise ValueError(
                    f"scenario {scenario.id}: track of {user!r} leaves the floor "
                    f"at ({p.x}, {p.y})"
                )

    n_orders = len(prop.zone_attenuation)
    ellipses = {
        link_id: [ellipse_of(link, z) for z in range(1, n_orders + 1)]
        for link_id, link in links.items()
    }
    free_space = {
        link_id: prop.tx_power_dbm
        - prop.ref_loss_db
        - 10.0 * prop.path_loss_exponent * math.log10(link.length)
        for link_id, link in links.items()
    }
    tracks = list(scenario.host_tracks.values()) + list(scenario.guest_tracks.values())

    rng = _scenario_rng(prop, scenario.id)
    samples: list[RssSample] = []
    n_samples = int(math.floor(scenario.duration * rate))
    link_ids = sorted(links)
    for i in range(n_samples):
        t_rel = i / rate
        positions = [_track_position(track, t_rel) for track in tracks]
        for link_id in link_ids:
            rss = free_space[link_id]
            for pos in positions:
                for z_idx, ellipse in enumerate(ellipses[link_id]):
                    if contains(ellipse, pos):
                        rss -= prop.zone_attenuation[z_idx]
                        break
            rss += rng.normal(0.0, prop.noise_sigma)
            rss = float(min(0.0, max(RSS_FLOOR_DBM, rss)))
            samples.append(RssSample(t_offset + t_rel, link_id[0], link_id[1], rss))

    fixes: list[DeviceBasedFix] = []
    for user in sorted(scenario.host_tracks):
        for ts, pos in scenario.host_tracks[user]:
            if not (0.0 <= ts < scenario.duration):
                raise ValueError(
                    f"scenario {scenario.id}: waypoint at {ts} outside [0, {scenario.duration})"
                )
            fixes.append(DeviceBasedFix(t_offset + ts, user, pos))
    fixes.sort(key=lambda f: (f.timestamp, f.user))

    label = ScenarioLabel()
    first_epoch = int(math.floor(t_offset / epoch_len))
    last_epoch = int(math.ceil((t_offset + scenario.duration) / epoch_len)) - 1
    guest_present = bool(scenario.guest_tracks)
    for epoch in range(first_epoch, last_epoch + 1):
        lo, hi = epoch * epoch_len, (epoch + 1) * epoch_len
        host_cells = {
            cell_of(grid, f.pos) for f in fixes if lo <= f.timestamp < hi
        }
        label.entries[epoch] = EpochLabel(
            scenario_id=scenario.id,
            host_cells=host_cells,
            guest_present=guest_present,
            silence=scenario.silence,
        )
    return samples, fixes, label


# ---------------------------------------------------------------------------
# Standard scenario suite
# ---------------------------------------------------------------------------


def _ellipse_frame(link):
    """Unit axes of the link's principal frame and its center."""
    dx = link.mp_pos.x - link.ap_pos.x
    dy = link.mp_pos.y - link.ap_pos.y
    d = math.hypot(dx, dy)
    ux, uy = dx / d, dy / d
    cx = (link.ap_pos.x + link.mp_pos.x) / 2.0
    cy = (link.ap_pos.y + link.mp_pos.y) / 2.0
    return cx, cy, ux, uy


def sample_point_in_zone(
    rng: np.random.Generator,
    link,
    order: int,
    topology: Topology,
    room: Room | None = None,
    max_tries: int = 500,
) -> Point2D | None:
    """Uniform rejection sample inside the link's zone ellipse, confined to
    the floor (and optionally one room). None when the region is too thin
    to hit within max_tries."""
    e = ellipse_of(link, order)
    cx, cy, ux, uy = _ellipse_frame(link)
    for _ in range(max_tries):
        u = rng.uniform(-e.semi_major, e.semi_major)
        v = rng.uniform(-e.semi_minor, e.semi_minor)
        if (u / e.semi_major) ** 2 + (v / e.semi_minor) ** 2 > 1.0:
            continue
        p = Point2D(float(cx + u * ux - v * uy), float(cy + u * uy + v * ux))
        if not topology.in_bounds(p):
            continue
        if room is not None and not room.contains(p):
            continue
        return p
    return None


def _hold_track(pos: Point2D, duration: float, epoch_len: float) -> Track:
    """One waypoint per epoch so every epoch carries a fix."""
    n = int(round(duration / epoch_len))
    return [(k * epoch_len, pos) for k in range(n)]


def standard_suite(
    topology: Topology,
    grid: Grid,
    seed: int = 0,
    counts: tuple[int, int, int, int, int] = SUITE_COUNTS,
    duration: float = 10.0,
    epoch_len: float = 1.0,
    band_order: int = 1,
    cover_order: int = 5,
) -> list[Scenario]:
    """Generate the standard data-collection scenario mix.

    Guests always stand inside the lowest-order zone of some link (every
    occupied spot in a real deployment perturbs at least one stream);
    "different zone" and "different room" guests are placed so the host
    does not cover their perturbed link at cover_order, while "same zone"
    guests share the host's own link band and may or may not be separable.
    """
    if len(topology.rooms) < 2:
        raise ValueError("standard suite needs a topology with at least two rooms")
    n_one_host, n_same_zone, n_diff_zone, n_diff_room, n_silence = counts
    rng = np.random.default_rng([seed, 0])
    links = topology.radio_links()
    link_ids = sorted(links)
    scenarios: list[Scenario] = []

    for i in range(n_silence):
        scenarios.append(Scenario(id=f"silence_{i:03d}", duration=duration, silence=True))

    cells = grid.all_cells()
    if n_one_host <= len(cells):
        chosen = rng.choice(len(cells), size=n_one_host, replace=False)
    else:
        chosen = rng.choice(len(cells), size=n_one_host, replace=True)
    for i, idx in enumerate(chosen):
        pos = grid.center(cells[int(idx)])
        scenarios.append(
            Scenario(
                id=f"one_host_{i:03d}",
                duration=duration,
                host_tracks={"host": _hold_track(pos, duration, epoch_len)},
            )
        )

    def covered(link_id: Link, p: Point2D) -> bool:
        return contains(ellipse_of(links[link_id], cover_order), p)

    def make_same_zone(i: int) -> Scenario:
        for _ in range(200):
            link_id = link_ids[int(rng.integers(len(link_ids)))]
            host = sample_point_in_zone(rng, links[link_id], band_order, topology)
            guest = sample_point_in_zone(rng, links[link_id], band_order, topology)
            if host is None or guest is None:
                continue
            if host.distance_to(guest) < 0.3:
                continue
            return Scenario(
                id=f"same_zone_{i:03d}",
                duration=duration,
                host_tracks={"host": _hold_track(host, duration, epoch_len)},
                guest_tracks={"guest": [(0.0, guest)]},
            )
        raise ValueError("could not place a same-zone host/guest pair")

    def make_diff_zone(i: int) -> Scenario:
        for _ in range(500):
            room = topology.rooms[int(rng.integers(len(topology.rooms)))]
            la = link_ids[int(rng.integers(len(link_ids)))]
            lb = link_ids[int(rng.integers(len(link_ids)))]
            if la == lb:
                continue
            host = sample_point_in_zone(rng, links[la], band_order, topology, room=room)
            guest = sample_point_in_zone(rng, links[lb], band_order, topology, room=room)
            if host is None or guest is None:
                continue
            # zones must actually differ and the guest's link must be
            # unexplained by the host position at the default cover order
            if covered(lb, host) or contains(ellipse_of(links[la], band_order), guest):
                continue
            return Scenario(
                id=f"diff_zone_{i:03d}",
                duration=duration,
                host_tracks={"host": _hold_track(host, duration, epoch_len)},
                guest_tracks={"guest": [(0.0, guest)]},
            )
        raise ValueError("could not place a different-zone host/guest pair")

    def make_diff_room(i: int) -> Scenario:
        for _ in range(500):
            ra = topology.rooms[int(rng.integers(len(topology.rooms)))]
            rb = topology.rooms[int(rng.integers(len(topology.rooms)))]
            if ra.name == rb.name:
                continue
            cell = cells[int(rng.integers(len(cells)))]
            host = grid.center(cell)
            if not ra.contains(host):
                continue
            lb = link_ids[int(rng.integers(len(link_ids)))]
            guest = sample_point_in_zone(rng, links[lb], band_order, topology, room=rb)
            if guest is None or covered(lb, host):
                continue
            return Scenario(
                id=f"diff_room_{i:03d}",
                duration=duration,
                host_tracks={"host": _hold_track(host, duration, epoch_len)},
                guest_tracks={"guest": [(0.0, guest)]},
            )
        raise ValueError("could not place a different-room host/guest pair")

    for i in range(n_same_zone):
        scenarios.append(make_same_zone(i))
    for i in range(n_diff_zone):
        scenarios.append(make_diff_zone(i))
    for i in range(n_diff_room):
        scenarios.append(make_diff_room(i))
    return scenarios


def render_dataset(
    topology: Topology,
    scenarios: list[Scenario],
    prop: PropagationParams,
    grid: Grid,
    rate: float = DEFAULT_RATE,
    epoch_len: float = 1.0,
) -> tuple[list[RssSample], list[DeviceBasedFix], ScenarioLabel]:
    """Concatenate scenarios on a shared timeline (each starting on an
    epoch boundary) into one dataset."""
    samples: list[RssSample] = []
    fixes: list[DeviceBasedFix] = []
    labels = ScenarioLabel()
    t_offset = 0.0
    for scenario in scenarios:
        s, f, lab = simulate_rss(
            topology, scenario, prop, rate,
            grid=grid, epoch_len=epoch_len, t_offset=t_offset,
        )
        samples.extend(s)
        fixes.extend(f)
        labels.update(lab)
        n_epochs = int(math.ceil(scenario.duration / epoch_len - 1e-9))
        t_offset += n_epochs * epoch_len
    return samples, fixes, labels


# ---------------------------------------------------------------------------
# Manifest io
# ---------------------------------------------------------------------------


def _cells_token(cells: set[Cell]) -> str:
    return ";".join(f"{c}:{r}" for c, r in sorted(cells))


def _parse_cells(token: str) -> set[Cell]:
    if not token:
        return set()
    out = set()
    for part in token.split(";"):
        c, r = part.split(":")
        out.add((int(c), int(r)))
    return out


def save_manifest(labels: ScenarioLabel, path) -> None:
    """CSV rows ``scenario_id,epoch,silence,host_cells,guest_present,
    expected_stored`` with host cells as ``col:row`` pairs joined by ';'."""
    lines = []
    for epoch in sorted(labels.entries):
        e = labels.entries[epoch]
        lines.append(
            f"{e.scenario_id},{epoch},{int(e.silence)},{_cells_token(e.host_cells)},"
            f"{int(e.guest_present)},{int(e.expected_stored)}"
        )
    Path(path).write_text("\n".join(lines) + ("\n" if lines else ""))


def load_manifest(path) -> ScenarioLabel:
    labels = ScenarioLabel()
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        parts = line.split(",")
        if len(parts) != 6:
            raise ValueError(f"{path}:{lineno}: expected 6 manifest fields")
        scenario_id, epoch, silence, cells_tok, guest, expected = parts
        entry = EpochLabel(
            scenario_id=scenario_id,
            host_cells=_parse_cells(cells_tok),
            guest_present=bool(int(guest)),
            silence=bool(int(silence)),
        )
        if entry.expected_stored != bool(int(expected)):
            raise ValueError(
                f"{path}:{lineno}: expected_stored flag inconsistent with labels"
            )
        labels.entries[int(epoch)] = entry
    return labels


# ---------------------------------------------------------------------------
# Default testbed
# ---------------------------------------------------------------------------


def default_topology() -> Topology:
    """Built-in 7x7 m two-room testbed with a 4x4 AP/MP mesh at 2.4 GHz."""
    nodes = [
        ("a1", "AP", Point2D(0.4, 0.9)),
        ("a2", "AP", Point2D(0.4, 6.1)),
        ("a3", "AP", Point2D(6.6, 0.9)),
        ("a4", "AP", Point2D(6.6, 6.1)),
        ("m1", "MP", Point2D(3.2, 0.4)),
        ("m2", "MP", Point2D(3.2, 6.6)),
        ("m3", "MP", Point2D(1.6, 3.5)),
        ("m4", "MP", Point2D(5.4, 3.5)),
    ]
    rooms = [
        Room("west", 0.0, 0.0, 3.5, 7.0),
        Room("east", 3.5, 0.0, 7.0, 7.0),
    ]
    return Topology(
        floor_width=7.0,
        floor_height=7.0,
        frequency=2.4e9,
        nodes=nodes,
        rooms=rooms,
    )
