"""Grid discretization and the crowdsourced fingerprint store.

The floor is tiled with square cells; each comparator-approved epoch folds
its per-link mean RSS vector into the running mean of every cell that
contained a host fix. Per-entry counts keep the running means unbiased
when some links are missing from an epoch.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .detection import ActiveLinkSets, DetectorParams, detect_guests
from .geometry import Point2D
from .ingest import DeviceBasedFix, Link, RssWindow, Topology, RSS_FLOOR_DBM

Cell = tuple[int, int]  # (col, row)

# update() outcomes
STORED = "stored"
DISCARDED_GUEST = "discarded_guest"
SKIPPED_NO_FIX = "skipped_no_fix"


@dataclass(frozen=True)
class Grid:
    """Square-cell tiling of the floor, origin at the floor corner."""

    cell_size: float
    n_cols: int
    n_rows: int
    origin: Point2D
    floor_width: float
    floor_height: float

    def __post_init__(self):
        if self.cell_size <= 0:
            raise ValueError("cell_size must be positive")
        if self.n_cols * self.cell_size < self.floor_width - 1e-9:
            raise ValueError("columns do not tile the floor width")
        if self.n_rows * self.cell_size < self.floor_height - 1e-9:
            raise ValueError("rows do not tile the floor height")

    @property
    def n_cells(self) -> int:
        return self.n_cols * self.n_rows

    def center(self, cell: Cell) -> Point2D:
        col, row = cell
        return Point2D(
            self.origin.x + (col + 0.5) * self.cell_size,
            self.origin.y + (row + 0.5) * self.cell_size,
        )

    def flat_index(self, cell: Cell) -> int:
        """Row-major index used for deterministic tie-breaking."""
        col, row = cell
        return row * self.n_cols + col

    def all_cells(self) -> list[Cell]:
        """All cells in row-major order."""
        return [(c, r) for r in range(self.n_rows) for c in range(self.n_cols)]


def _tile_count(extent: float, cell_size: float) -> int:
    # round before ceil so that an exact multiple is not bumped up by
    # floating error (e.g. 5.5 / 0.55 -> 10.000000000000002)
    return int(math.ceil(round(extent / cell_size, 9)))


def make_grid(topology: Topology, cell_size: float) -> Grid:
    if cell_size <= 0:
        raise ValueError("cell_size must be positive")
    return Grid(
        cell_size=cell_size,
        n_cols=_tile_count(topology.floor_width, cell_size),
        n_rows=_tile_count(topology.floor_height, cell_size),
        origin=Point2D(0.0, 0.0),
        floor_width=topology.floor_width,
        floor_height=topology.floor_height,
    )


def cell_of(grid: Grid, p: Point2D) -> Cell:
    """Cell whose half-open square [x0, x0+s) x [y0, y0+s) contains p.

    Points on the floor's max edge clamp to the last cell; points outside
    the floor raise.
    """
    if not (0 <= p.x - grid.origin.x <= grid.floor_width
            and 0 <= p.y - grid.origin.y <= grid.floor_height):
        raise ValueError(f"point ({p.x}, {p.y}) outside floor bounds")
    col = min(int(math.floor((p.x - grid.origin.x) / grid.cell_size)), grid.n_cols - 1)
    row = min(int(math.floor((p.y - grid.origin.y) / grid.cell_size)), grid.n_rows - 1)
    return (col, row)


@dataclass
class FingerprintRecord:
    """Running per-link RSS means of one cell.

    ``count`` is the number of accepted epochs folded into the cell;
    ``entry_counts[j]`` is how many of those epochs actually carried
    link j. Entries never observed hold the RSS floor with count zero.
    """

    cell: Cell
    mean_rss: np.ndarray  # (k,) dBm
    count: int
    entry_counts: np.ndarray  # (k,) int


@dataclass
class Fingerprint:
    """Grid-keyed store of averaged RSS vectors with a fixed link order."""

    grid: Grid
    link_order: list[Link]
    params_used: DetectorParams
    records: dict[Cell, FingerprintRecord] = field(default_factory=dict)
    stored_epochs: int = 0
    discarded_epochs: int = 0
    skipped_epochs: int = 0

    @property
    def k(self) -> int:
        return len(self.link_order)

    def epoch_vector(self, windows: dict[Link, RssWindow]) -> tuple[np.ndarray, np.ndarray]:
        """Per-link mean vector of an epoch plus a presence mask, in the
        store's canonical link order. Missing links hold the RSS floor."""
        vec = np.full(self.k, RSS_FLOOR_DBM, dtype=float)
        present = np.zeros(self.k, dtype=bool)
        for j, link in enumerate(self.link_order):
            w = windows.get(link)
            if w is not None:
                vec[j] = w.mean_rss
                present[j] = True
        return vec, present


def update(
    fp: Fingerprint,
    windows: dict[Link, RssWindow],
    fixes: list[DeviceBasedFix],
    sets: ActiveLinkSets,
) -> str:
    """Apply one epoch to the store.

    Guest epochs leave the store unchanged and count as discarded; epochs
    without host fixes are skipped. Otherwise the epoch's mean RSS vector
    is folded (count-weighted, per entry) into every cell holding a fix.
    """
    if detect_guests(sets):
        fp.discarded_epochs += 1
        return DISCARDED_GUEST
    if not fixes:
        fp.skipped_epochs += 1
        return SKIPPED_NO_FIX

    vec, present = fp.epoch_vector(windows)
    cells = sorted({cell_of(fp.grid, f.pos) for f in fixes}, key=fp.grid.flat_index)
    for cell in cells:
        rec = fp.records.get(cell)
        if rec is None:
            rec = FingerprintRecord(
                cell=cell,
                mean_rss=np.full(fp.k, RSS_FLOOR_DBM, dtype=float),
                count=0,
                entry_counts=np.zeros(fp.k, dtype=int),
            )
            fp.records[cell] = rec
        new_counts = rec.entry_counts + present.astype(int)
        for j in np.nonzero(present)[0]:
            if rec.entry_counts[j] == 0:
                rec.mean_rss[j] = vec[j]
            else:
                rec.mean_rss[j] += (vec[j] - rec.mean_rss[j]) / new_counts[j]
        rec.entry_counts = new_counts
        rec.count += 1
    fp.stored_epochs += 1
    return STORED


def save_fingerprint(fp: Fingerprint, path) -> None:
    """Text format: header (floor, grid, params, link order), then one
    line per record:
    ``cell_col cell_row center_x center_y count rss_1..rss_k cnt_1..cnt_k``.
    """
    g = fp.grid
    lines = [
        f"floor {g.floor_width!r} {g.floor_height!r}",
        f"grid {g.cell_size!r} {g.n_cols} {g.n_rows} {g.origin.x!r} {g.origin.y!r}",
        f"params {fp.params_used.tau!r} {fp.params_used.zone_order}",
        f"links {fp.k}",
    ]
    for ap, mp in fp.link_order:
        lines.append(f"link {ap} {mp}")
    lines.append(f"records {len(fp.records)}")
    for cell in sorted(fp.records, key=g.flat_index):
        rec = fp.records[cell]
        center = g.center(cell)
        fields = [str(cell[0]), str(cell[1]), repr(center.x), repr(center.y), str(rec.count)]
        fields += [repr(float(v)) for v in rec.mean_rss]
        fields += [str(int(c)) for c in rec.entry_counts]
        lines.append(" ".join(fields))
    Path(path).write_text("\n".join(lines) + "\n")


def load_fingerprint(path) -> Fingerprint:
    path = Path(path)
    lines = [ln for ln in path.read_text().splitlines() if ln.strip()]
    try:
        _, fw, fh = lines[0].split()
        _, size, ncols, nrows, ox, oy = lines[1].split()
        _, tau, zone = lines[2].split()
        _, k = lines[3].split()
        k = int(k)
        link_order: list[Link] = []
        for ln in lines[4:4 + k]:
            _, ap, mp = ln.split()
            link_order.append((ap, mp))
        _, n_rec = lines[4 + k].split()
        n_rec = int(n_rec)
    except (ValueError, IndexError) as exc:
        raise ValueError(f"{path}: malformed fingerprint header: {exc}") from exc
    grid = Grid(
        cell_size=float(size),
        n_cols=int(ncols),
        n_rows=int(nrows),
        origin=Point2D(float(ox), float(oy)),
        floor_width=float(fw),
        floor_height=float(fh),
    )
    fp = Fingerprint(
        grid=grid,
        link_order=link_order,
        params_used=DetectorParams(tau=float(tau), zone_order=int(zone)),
    )
    rec_lines = lines[5 + k:]
    if len(rec_lines) != n_rec:
        raise ValueError(f"{path}: expected {n_rec} records, found {len(rec_lines)}")
    for ln in rec_lines:
        tokens = ln.split()
        if len(tokens) != 5 + 2 * k:
            raise ValueError(f"{path}: record line has {len(tokens)} fields, expected {5 + 2 * k}")
        col, row = int(tokens[0]), int(tokens[1])
        count = int(tokens[4])
        rss = np.array([float(t) for t in tokens[5:5 + k]], dtype=float)
        cnts = np.array([int(t) for t in tokens[5 + k:]], dtype=int)
        if not (0 <= col < grid.n_cols and 0 <= row < grid.n_rows):
            raise ValueError(f"{path}: record cell ({col}, {row}) outside grid")
        fp.records[(col, row)] = FingerprintRecord((col, row), rss, count, cnts)
    return fp
