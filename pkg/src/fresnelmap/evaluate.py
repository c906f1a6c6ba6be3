"""Evaluation harness: precision/recall, parameter sweeps, and
crowdsourced-versus-manual fingerprint comparison."""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.stats import spearmanr

from .detection import DetectorParams
from .fingerprint import Fingerprint, FingerprintRecord, Grid
from .geometry import Point2D, contains, ellipse_of
from .ingest import DeviceBasedFix, RssSample, Topology, windowize
from .locate import TestVector, localization_error, localize, vector_from_windows
from .pipeline import build_fingerprint, half_density_links
from .simulate import (
    DEFAULT_RATE,
    PropagationParams,
    Scenario,
    ScenarioLabel,
    simulate_rss,
)

TAU_RANGE = (0.0, 0.25)
ZONE_ORDER_RANGE = (1, 9)
DENSITIES = ("half", "full")


@dataclass
class ConfusionCounts:
    stored_correct: int = 0
    stored_wrong: int = 0
    discarded_correct: int = 0
    discarded_wrong: int = 0

    @property
    def total(self) -> int:
        return (self.stored_correct + self.stored_wrong
                + self.discarded_correct + self.discarded_wrong)


def precision_recall(
    decisions: dict[int, bool],
    labels: ScenarioLabel,
) -> tuple[float | None, float | None, ConfusionCounts]:
    """Compare per-epoch stored decisions against ground truth.

    precision = correctly stored / all stored; recall = correctly stored /
    all epochs expected to be stored. Zero-denominator cases come back as
    None (undefined), never 0.
    """
    counts = ConfusionCounts()
    for epoch, stored in decisions.items():
        label = labels.entries.get(epoch)
        if label is None:
            raise ValueError(f"epoch {epoch} has a decision but no label")
        if stored and label.expected_stored:
            counts.stored_correct += 1
        elif stored:
            counts.stored_wrong += 1
        elif label.expected_stored:
            counts.discarded_wrong += 1
        else:
            counts.discarded_correct += 1
    n_stored = counts.stored_correct + counts.stored_wrong
    n_expected = sum(1 for e in labels.entries.values() if e.expected_stored)
    precision = counts.stored_correct / n_stored if n_stored else None
    recall = counts.stored_correct / n_expected if n_expected else None
    return precision, recall, counts


# ---------------------------------------------------------------------------
# Parameter sweeps
# ---------------------------------------------------------------------------


@dataclass
class SweepSpec:
    """One-parameter sweep over a fixed dataset, everything else at the
    default operating point."""

    parameter: str  # tau | zone_order | stream_density
    values: list
    fixed: DetectorParams
    topology: Topology
    samples: list[RssSample]
    fixes: list[DeviceBasedFix]
    labels: ScenarioLabel
    cell_size: float = 0.55
    epoch_len: float = 1.0

    def __post_init__(self):
        if self.parameter not in ("tau", "zone_order", "stream_density"):
            raise ValueError(f"unknown sweep parameter {self.parameter!r}")
        if not self.values:
            raise ValueError("sweep needs at least one value")
        if self.parameter == "tau":
            bad = [v for v in self.values if not TAU_RANGE[0] <= v <= TAU_RANGE[1]]
        elif self.parameter == "zone_order":
            bad = [v for v in self.values
                   if not ZONE_ORDER_RANGE[0] <= v <= ZONE_ORDER_RANGE[1]]
        else:
            bad = [v for v in self.values if v not in DENSITIES]
        if bad:
            raise ValueError(f"sweep values outside allowed range: {bad}")


@dataclass
class SweepRow:
    value: object
    precision: float | None
    recall: float | None


@dataclass
class SweepResult:
    parameter: str
    rows: list[SweepRow]
    precision_trend: str
    recall_trend: str

    def to_csv(self) -> str:
        def fmt(x):
            return "" if x is None else repr(x)

        lines = ["value,precision,recall"]
        for row in self.rows:
            lines.append(f"{row.value},{fmt(row.precision)},{fmt(row.recall)}")
        return "\n".join(lines) + "\n"

    def verdict(self) -> str:
        return (f"{self.parameter}: precision {self.precision_trend}, "
                f"recall {self.recall_trend}")


def _trend(values: list[float], metric: list[float | None]) -> str:
    """Direction of the metric over the sweep, as the sign of the Spearman
    rank correlation over points where the metric is defined."""
    pairs = [(v, m) for v, m in zip(values, metric) if m is not None]
    if len(pairs) < 2:
        return "insufficient points"
    xs, ys = zip(*pairs)
    if len(set(ys)) == 1:
        return "flat"
    rho = spearmanr(xs, ys).statistic
    if math.isnan(rho) or rho == 0:
        return "flat"
    return "increasing" if rho > 0 else "decreasing"


def _density_rank(value: str) -> int:
    # nominal streams per room: half=2, full=4
    return {"half": 2, "full": 4}[value]


def run_sweep(spec: SweepSpec) -> SweepResult:
    """One full pipeline run per value; all other parameters fixed."""
    silence = {e for e, lab in spec.labels.entries.items() if lab.silence}
    rows: list[SweepRow] = []
    for value in spec.values:
        params = spec.fixed
        topology = spec.topology
        samples = spec.samples
        if spec.parameter == "tau":
            params = DetectorParams(tau=float(value), zone_order=spec.fixed.zone_order)
        elif spec.parameter == "zone_order":
            params = DetectorParams(tau=spec.fixed.tau, zone_order=int(value))
        else:
            if value == "half":
                topology = spec.topology.restrict_links(half_density_links(spec.topology))
                kept = set(topology.links)
                samples = [s for s in spec.samples if (s.ap, s.mp) in kept]
        try:
            _, report = build_fingerprint(
                topology, samples, spec.fixes, silence, params,
                cell_size=spec.cell_size, epoch_len=spec.epoch_len,
            )
        except ValueError as exc:
            raise ValueError(f"sweep failed at {spec.parameter}={value}: {exc}") from exc
        precision, recall, _ = precision_recall(report.stored_by_epoch(), spec.labels)
        rows.append(SweepRow(value=value, precision=precision, recall=recall))

    if spec.parameter == "stream_density":
        ranks = [_density_rank(v) for v in spec.values]
    else:
        ranks = [float(v) for v in spec.values]
    return SweepResult(
        parameter=spec.parameter,
        rows=rows,
        precision_trend=_trend(ranks, [r.precision for r in rows]),
        recall_trend=_trend(ranks, [r.recall for r in rows]),
    )


# ---------------------------------------------------------------------------
# Crowdsourced vs manual fingerprint comparison
# ---------------------------------------------------------------------------


def build_manual_fingerprint(
    topology: Topology,
    grid: Grid,
    prop: PropagationParams,
    params: DetectorParams,
) -> Fingerprint:
    """Survey-style oracle store: a person stands at every cell center and
    the noise-free per-link RSS is recorded directly (no comparator)."""
    links = topology.radio_links()
    link_order = topology.links
    n_orders = len(prop.zone_attenuation)
    ellipses = {
        link_id: [ellipse_of(link, z) for z in range(1, n_orders + 1)]
        for link_id, link in links.items()
    }
    fp = Fingerprint(grid=grid, link_order=link_order, params_used=params)
    for cell in grid.all_cells():
        center = grid.center(cell)
        vec = np.zeros(len(link_order))
        for j, link_id in enumerate(link_order):
            link = links[link_id]
            rss = (prop.tx_power_dbm - prop.ref_loss_db
                   - 10.0 * prop.path_loss_exponent * math.log10(link.length))
            for z_idx, ellipse in enumerate(ellipses[link_id]):
                if contains(ellipse, center):
                    rss -= prop.zone_attenuation[z_idx]
                    break
            vec[j] = min(0.0, max(-100.0, rss))
        fp.records[cell] = FingerprintRecord(
            cell=cell,
            mean_rss=vec,
            count=1,
            entry_counts=np.ones(len(link_order), dtype=int),
        )
        fp.stored_epochs += 1
    return fp


def make_test_set(
    topology: Topology,
    grid: Grid,
    prop: PropagationParams,
    n_points: int = 27,
    duration: float = 3.0,
    rate: float = DEFAULT_RATE,
    epoch_len: float = 1.0,
    seed: int = 0,
) -> list[tuple[TestVector, Point2D]]:
    """Independent test readings: a person at uniformly random locations,
    observed through the noisy simulator and averaged over one episode."""
    rng = np.random.default_rng([seed, 99])
    out: list[tuple[TestVector, Point2D]] = []
    link_order = topology.links
    for i in range(n_points):
        pos = Point2D(
            float(rng.uniform(0.0, topology.floor_width)),
            float(rng.uniform(0.0, topology.floor_height)),
        )
        scenario = Scenario(
            id=f"test_point_{i:03d}_{seed}",
            duration=duration,
            host_tracks={"probe": [(0.0, pos)]},
        )
        samples, _, _ = simulate_rss(
            topology, scenario, prop, rate, grid=grid, epoch_len=duration,
        )
        epochs = windowize(samples, [], epoch_len=duration)
        vec = vector_from_windows(epochs[0].windows, link_order, epoch=i)
        out.append((vec, pos))
    return out


@dataclass
class FingerprintComparison:
    crowd_errors: list[float]  # sorted ascending
    manual_errors: list[float]
    crowd_median: float
    manual_median: float

    @property
    def median_gap(self) -> float:
        return self.crowd_median - self.manual_median


def error_cdf(errors: list[float]) -> list[tuple[float, float]]:
    """Sorted (error, cumulative fraction) pairs ending at 1.0."""
    ordered = sorted(errors)
    n = len(ordered)
    return [(e, (i + 1) / n) for i, e in enumerate(ordered)]


def save_cdf_csv(errors: list[float], path) -> None:
    lines = ["error_m,cdf"]
    for e, frac in error_cdf(errors):
        lines.append(f"{e!r},{frac!r}")
    Path(path).write_text("\n".join(lines) + "\n")


def compare_fingerprints(
    crowdsourced: Fingerprint,
    manual_oracle: Fingerprint,
    test_set: list[tuple[TestVector, Point2D]],
) -> FingerprintComparison:
    """Localization error distributions of both stores on the same test
    readings."""
    if crowdsourced.grid != manual_oracle.grid:
        raise ValueError("fingerprints use different grids")
    if crowdsourced.link_order != manual_oracle.link_order:
        raise ValueError("fingerprints use different link orderings")
    crowd_errors = []
    manual_errors = []
    for vec, truth in test_set:
        crowd_errors.append(localization_error(localize(crowdsourced, vec), truth))
        manual_errors.append(localization_error(localize(manual_oracle, vec), truth))
    crowd_errors.sort()
    manual_errors.sort()
    return FingerprintComparison(
        crowd_errors=crowd_errors,
        manual_errors=manual_errors,
        crowd_median=float(np.median(crowd_errors)),
        manual_median=float(np.median(manual_errors)),
    )
