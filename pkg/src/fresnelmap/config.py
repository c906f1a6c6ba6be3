"""Run configuration: flat key = value text file plus CLI overrides."""

from __future__ import annotations

from dataclasses import dataclass, fields
from pathlib import Path

from .detection import DEFAULT_TAU, DEFAULT_ZONE_ORDER
from .simulate import DEFAULT_RATE, DEFAULT_ZONE_ATTENUATION, SUITE_COUNTS, PropagationParams


class ConfigError(Exception):
    """Bad configuration or missing input file (CLI exit code 2)."""


@dataclass
class RunConfig:
    topology: str | None = None
    out: str = "out"
    rss: str | None = None          # default <out>/rss.csv
    fixes: str | None = None        # default <out>/fixes.csv
    manifest: str | None = None     # default <out>/manifest.csv
    fingerprint: str | None = None  # default <out>/fingerprint.txt
    tau: float = DEFAULT_TAU
    zone_order: int = DEFAULT_ZONE_ORDER
    cell_size: float = 0.55
    epoch_len: float = 1.0
    rate: float = DEFAULT_RATE
    seed: int = 0
    duration: float = 10.0
    suite_counts: tuple[int, ...] = SUITE_COUNTS
    ref_loss_db: float = 40.0
    path_loss_exponent: float = 2.2
    noise_sigma: float = 1.0
    tx_power_dbm: float = 0.0
    zone_attenuation: tuple[float, ...] = DEFAULT_ZONE_ATTENUATION
    test_points: int = 27
    test_duration: float = 3.0

    def out_dir(self) -> Path:
        return Path(self.out)

    def path(self, key: str, default_name: str) -> Path:
        value = getattr(self, key)
        return Path(value) if value else self.out_dir() / default_name

    def propagation(self) -> PropagationParams:
        return PropagationParams(
            ref_loss_db=self.ref_loss_db,
            path_loss_exponent=self.path_loss_exponent,
            noise_sigma=self.noise_sigma,
            zone_attenuation=self.zone_attenuation,
            tx_power_dbm=self.tx_power_dbm,
            seed=self.seed,
        )


_FLOAT_KEYS = {
    "tau", "cell_size", "epoch_len", "rate", "duration", "ref_loss_db",
    "path_loss_exponent", "noise_sigma", "tx_power_dbm", "test_duration",
}
_INT_KEYS = {"zone_order", "seed", "test_points"}
_STR_KEYS = {"topology", "out", "rss", "fixes", "manifest", "fingerprint"}


def _parse_value(key: str, raw: str):
    try:
        if key in _FLOAT_KEYS:
            return float(raw)
        if key in _INT_KEYS:
            return int(raw)
        if key == "zone_attenuation":
            return tuple(float(t) for t in raw.split(",") if t.strip())
        if key == "suite_counts":
            values = tuple(int(t) for t in raw.split(",") if t.strip())
            if len(values) != 5:
                raise ValueError("suite_counts needs 5 integers")
            return values
        if key in _STR_KEYS:
            return raw
    except ValueError as exc:
        raise ConfigError(f"bad value for {key!r}: {raw!r} ({exc})") from exc
    raise ConfigError(f"unknown configuration key {key!r}")


def load_config(path=None) -> RunConfig:
    """Read ``key = value`` lines; blank lines and '#' comments ignored."""
    config = RunConfig()
    if path is None:
        return config
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"configuration file not found: {path}")
    known = {f.name for f in fields(RunConfig)}
    for lineno, raw in enumerate(path.read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in known:
            raise ConfigError(f"{path}:{lineno}: unknown configuration key {key!r}")
        setattr(config, key, _parse_value(key, value))
    return config
