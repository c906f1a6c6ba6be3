"""Crowdsourced device-free RSS fingerprinting with Fresnel-zone guest
filtering, plus a synthetic RF testbed and an evaluation harness."""

from .detection import (
    ActiveLinkSets,
    DetectorParams,
    SilenceProfile,
    build_silence_profile,
    detect_device_based,
    detect_device_free,
    detect_epoch,
    detect_guests,
)
from .estimator import DeviceFreeLocalizer
from .evaluate import (
    ConfusionCounts,
    SweepSpec,
    build_manual_fingerprint,
    compare_fingerprints,
    make_test_set,
    precision_recall,
    run_sweep,
)
from .fingerprint import (
    Fingerprint,
    FingerprintRecord,
    Grid,
    cell_of,
    load_fingerprint,
    make_grid,
    save_fingerprint,
    update,
)
from .geometry import (
    SPEED_OF_LIGHT,
    FresnelEllipse,
    Point2D,
    RadioLink,
    contains,
    ellipse_of,
    fresnel_radius_at,
    max_fresnel_radius,
)
from .ingest import (
    DeviceBasedFix,
    RssSample,
    RssWindow,
    Topology,
    load_fixes_csv,
    load_rss_csv,
    load_topology,
    save_topology,
    windowize,
)
from .locate import (
    LocationEstimate,
    TestVector,
    localization_error,
    localize,
    vector_from_windows,
)
from .pipeline import BuildReport, build_fingerprint
from .simulate import (
    PropagationParams,
    Scenario,
    ScenarioLabel,
    default_topology,
    load_manifest,
    render_dataset,
    save_manifest,
    simulate_rss,
    standard_suite,
)

__version__ = "0.1.0"
