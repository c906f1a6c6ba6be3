"""File ingestion and epoch windowing.

File formats (line-oriented text, chosen for diff-ability):

* topology: header line ``width height frequency_hz``, then one line per
  node ``id kind x y`` with kind AP or MP, optional ``link ap_id mp_id``
  lines restricting the link set, optional ``room name x0 y0 x1 y1``
  rectangle lines.
* RSS stream CSV: one sample per line ``timestamp,ap_id,mp_id,rss_dbm``.
* fixes stream CSV: one fix per line ``timestamp,user_id,x,y``.

Timestamps are decimal seconds, positions meters, RSS in dBm.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

from .geometry import Point2D, RadioLink

RSS_FLOOR_DBM = -100.0

Link = tuple[str, str]


@dataclass(frozen=True)
class Room:
    """Axis-aligned rectangular room."""

    name: str
    x0: float
    y0: float
    x1: float
    y1: float

    def contains(self, p: Point2D) -> bool:
        return self.x0 <= p.x <= self.x1 and self.y0 <= p.y <= self.y1


@dataclass
class Topology:
    """Floor plan with node placements and the derived AP->MP link set."""

    floor_width: float
    floor_height: float
    frequency: float
    nodes: list[tuple[str, str, Point2D]]  # (id, kind AP|MP, position)
    explicit_links: list[Link] | None = None
    rooms: list[Room] = field(default_factory=list)

    def __post_init__(self):
        if self.floor_width <= 0 or self.floor_height <= 0:
            raise ValueError("floor dimensions must be positive")
        if self.frequency <= 0:
            raise ValueError("frequency must be positive")
        seen: set[str] = set()
        kinds: dict[str, int] = {"AP": 0, "MP": 0}
        for node_id, kind, pos in self.nodes:
            if node_id in seen:
                raise ValueError(f"duplicate node id {node_id!r}")
            seen.add(node_id)
            if kind not in kinds:
                raise ValueError(f"node {node_id!r}: kind must be AP or MP, got {kind!r}")
            kinds[kind] += 1
            if not (0 <= pos.x <= self.floor_width and 0 <= pos.y <= self.floor_height):
                raise ValueError(
                    f"node {node_id!r} at ({pos.x}, {pos.y}) outside floor bounds"
                )
        if kinds["AP"] < 1 or kinds["MP"] < 1:
            raise ValueError("topology needs at least one AP and one MP")
        if self.explicit_links is not None:
            positions = self.positions()
            ap_ids = {n for n, k, _ in self.nodes if k == "AP"}
            mp_ids = {n for n, k, _ in self.nodes if k == "MP"}
            for ap, mp in self.explicit_links:
                if ap not in ap_ids:
                    raise ValueError(f"link references unknown AP {ap!r}")
                if mp not in mp_ids:
                    raise ValueError(f"link references unknown MP {mp!r}")
                if positions[ap] == positions[mp]:
                    raise ValueError(f"link {ap}->{mp} has zero length")

    def positions(self) -> dict[str, Point2D]:
        return {node_id: pos for node_id, _, pos in self.nodes}

    @property
    def links(self) -> list[Link]:
        """Canonical (sorted) list of AP->MP links.

        All AP x MP pairs unless an explicit link list was given.
        """
        if self.explicit_links is not None:
            return sorted(set(self.explicit_links))
        aps = sorted(n for n, k, _ in self.nodes if k == "AP")
        mps = sorted(n for n, k, _ in self.nodes if k == "MP")
        return [(a, m) for a in aps for m in mps]

    def radio_links(self) -> dict[Link, RadioLink]:
        pos = self.positions()
        return {
            (ap, mp): RadioLink(ap, mp, pos[ap], pos[mp], self.frequency)
            for ap, mp in self.links
        }

    def in_bounds(self, p: Point2D) -> bool:
        return 0 <= p.x <= self.floor_width and 0 <= p.y <= self.floor_height

    def restrict_links(self, links: list[Link]) -> "Topology":
        """Copy of this topology using only the given links (stream density)."""
        return Topology(
            floor_width=self.floor_width,
            floor_height=self.floor_height,
            frequency=self.frequency,
            nodes=list(self.nodes),
            explicit_links=list(links),
            rooms=list(self.rooms),
        )


@dataclass(frozen=True)
class RssSample:
    timestamp: float
    ap: str
    mp: str
    rss: float  # dBm


@dataclass(frozen=True)
class DeviceBasedFix:
    timestamp: float
    user: str
    pos: Point2D


@dataclass
class RssWindow:
    """Per-link statistics of one epoch: mean RSS over ``count`` samples,
    plus the device-based fixes that fell in the epoch."""

    epoch: int
    link: Link
    mean_rss: float
    count: int
    fixes: list[DeviceBasedFix] = field(default_factory=list)


@dataclass
class EpochWindows:
    """All per-link windows of one epoch."""

    epoch: int
    windows: dict[Link, RssWindow]
    fixes: list[DeviceBasedFix] = field(default_factory=list)


def _parse_error(path, lineno: int, msg: str) -> ValueError:
    return ValueError(f"{path}:{lineno}: {msg}")


def load_topology(path) -> Topology:
    path = Path(path)
    lines = path.read_text().splitlines()
    header = None
    nodes: list[tuple[str, str, Point2D]] = []
    links: list[Link] = []
    rooms: list[Room] = []
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        tokens = line.split()
        if header is None:
            if len(tokens) != 3:
                raise _parse_error(path, lineno, "header must be 'width height frequency_hz'")
            try:
                header = (float(tokens[0]), float(tokens[1]), float(tokens[2]))
            except ValueError:
                raise _parse_error(path, lineno, f"non-numeric header field in {line!r}")
            continue
        if tokens[0] == "link":
            if len(tokens) != 3:
                raise _parse_error(path, lineno, "link line must be 'link ap_id mp_id'")
            links.append((tokens[1], tokens[2]))
        elif tokens[0] == "room":
            if len(tokens) != 6:
                raise _parse_error(path, lineno, "room line must be 'room name x0 y0 x1 y1'")
            try:
                x0, y0, x1, y1 = (float(t) for t in tokens[2:])
            except ValueError:
                raise _parse_error(path, lineno, f"non-numeric room coordinate in {line!r}")
            if x1 <= x0 or y1 <= y0:
                raise _parse_error(path, lineno, "room rectangle must have positive extent")
            rooms.append(Room(tokens[1], x0, y0, x1, y1))
        else:
            if len(tokens) != 4:
                raise _parse_error(path, lineno, "node line must be 'id kind x y'")
            try:
                pos = Point2D(float(tokens[2]), float(tokens[3]))
            except ValueError:
                raise _parse_error(path, lineno, f"non-numeric node coordinate in {line!r}")
            nodes.append((tokens[0], tokens[1], pos))
    if header is None:
        raise ValueError(f"{path}: empty topology file")
    return Topology(
        floor_width=header[0],
        floor_height=header[1],
        frequency=header[2],
        nodes=nodes,
        explicit_links=links if links else None,
        rooms=rooms,
    )


def save_topology(topology: Topology, path) -> None:
    lines = [
        f"{topology.floor_width!r} {topology.floor_height!r} {topology.frequency!r}"
    ]
    for node_id, kind, pos in topology.nodes:
        lines.append(f"{node_id} {kind} {pos.x!r} {pos.y!r}")
    if topology.explicit_links is not None:
        for ap, mp in topology.explicit_links:
            lines.append(f"link {ap} {mp}")
    for room in topology.rooms:
        lines.append(f"room {room.name} {room.x0!r} {room.y0!r} {room.x1!r} {room.y1!r}")
    Path(path).write_text("\n".join(lines) + "\n")


def load_rss_csv(path, topology: Topology) -> list[RssSample]:
    path = Path(path)
    valid_links = set(topology.links)
    samples: list[RssSample] = []
    for lineno, raw in enumerate(path.read_text().splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        parts = line.split(",")
        if len(parts) != 4:
            raise _parse_error(path, lineno, "expected 'timestamp,ap_id,mp_id,rss_dbm'")
        try:
            ts, rss = float(parts[0]), float(parts[3])
        except ValueError:
            raise _parse_error(path, lineno, f"non-numeric field in {line!r}")
        ap, mp = parts[1], parts[2]
        if (ap, mp) not in valid_links:
            raise _parse_error(path, lineno, f"unknown link {ap}->{mp}")
        if not (RSS_FLOOR_DBM <= rss <= 0.0):
            raise _parse_error(path, lineno, f"rss {rss} outside [{RSS_FLOOR_DBM}, 0] dBm")
        samples.append(RssSample(ts, ap, mp, rss))
    return samples


def load_fixes_csv(path, topology: Topology) -> list[DeviceBasedFix]:
    path = Path(path)
    fixes: list[DeviceBasedFix] = []
    for lineno, raw in enumerate(path.read_text().splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        parts = line.split(",")
        if len(parts) != 4:
            raise _parse_error(path, lineno, "expected 'timestamp,user_id,x,y'")
        try:
            ts, x, y = float(parts[0]), float(parts[2]), float(parts[3])
        except ValueError:
            raise _parse_error(path, lineno, f"non-numeric field in {line!r}")
        pos = Point2D(x, y)
        if not topology.in_bounds(pos):
            raise _parse_error(path, lineno, f"fix at ({x}, {y}) outside floor bounds")
        fixes.append(DeviceBasedFix(ts, parts[1], pos))
    return fixes


def save_rss_csv(samples: list[RssSample], path) -> None:
    lines = [f"{s.timestamp!r},{s.ap},{s.mp},{s.rss!r}" for s in samples]
    Path(path).write_text("\n".join(lines) + ("\n" if lines else ""))


def save_fixes_csv(fixes: list[DeviceBasedFix], path) -> None:
    lines = [f"{f.timestamp!r},{f.user},{f.pos.x!r},{f.pos.y!r}" for f in fixes]
    Path(path).write_text("\n".join(lines) + ("\n" if lines else ""))


def _check_sorted(timestamps, what: str) -> None:
    for i in range(1, len(timestamps)):
        if timestamps[i] < timestamps[i - 1]:
            raise ValueError(
                f"{what} not sorted: timestamp {timestamps[i]} at index {i} "
                f"follows {timestamps[i - 1]}"
            )


def windowize(
    samples: list[RssSample],
    fixes: list[DeviceBasedFix],
    epoch_len: float = 1.0,
) -> list[EpochWindows]:
    """Partition sorted sample and fix streams into per-epoch link windows.

    Epoch index is floor(timestamp / epoch_len). Links without samples in
    an epoch are absent from that epoch's map; epochs without any sample
    are not emitted. Fixes attach to the epoch containing their timestamp.
    """
    if epoch_len <= 0:
        raise ValueError("epoch_len must be positive")
    _check_sorted([s.timestamp for s in samples], "sample stream")
    _check_sorted([f.timestamp for f in fixes], "fix stream")

    # incremental means: exact when a link's stream is constant, which the
    # zero-noise detector contract relies on (delta must be exactly zero)
    means: dict[int, dict[Link, tuple[float, int]]] = {}
    for s in samples:
        epoch = int(math.floor(s.timestamp / epoch_len))
        per_link = means.setdefault(epoch, {})
        mean, count = per_link.get((s.ap, s.mp), (0.0, 0))
        count += 1
        per_link[(s.ap, s.mp)] = (mean + (s.rss - mean) / count, count)

    fixes_by_epoch: dict[int, list[DeviceBasedFix]] = {}
    for f in fixes:
        epoch = int(math.floor(f.timestamp / epoch_len))
        fixes_by_epoch.setdefault(epoch, []).append(f)

    out: list[EpochWindows] = []
    for epoch in sorted(means):
        epoch_fixes = fixes_by_epoch.get(epoch, [])
        windows = {
            link: RssWindow(epoch, link, mean, count, epoch_fixes)
            for link, (mean, count) in sorted(means[epoch].items())
        }
        out.append(EpochWindows(epoch, windows, epoch_fixes))
    return out
