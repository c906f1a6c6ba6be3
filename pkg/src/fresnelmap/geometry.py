"""Fresnel zone geometry for 2D radio links.

A radio link between a transmitter (AP) and a receiver (MP) is surrounded
by concentric Fresnel zones. In the floor plane each zone boundary is an
ellipse whose foci are the two node positions. A person standing inside a
low-order zone measurably perturbs the received signal strength, which is
what the link activity detectors key on.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

SPEED_OF_LIGHT = 2.99792458e8  # m/s, exact; do not round to 3e8


@dataclass(frozen=True)
class Point2D:
    """Position in the floor plane, meters."""

    x: float
    y: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError(f"coordinates must be finite, got ({self.x}, {self.y})")

    def distance_to(self, other: "Point2D") -> float:
        return math.hypot(self.x - other.x, self.y - other.y)


@dataclass(frozen=True)
class RadioLink:
    """Directed AP -> MP link with node positions and carrier frequency."""

    ap: str
    mp: str
    ap_pos: Point2D
    mp_pos: Point2D
    frequency: float  # Hz

    def __post_init__(self):
        if self.frequency <= 0:
            raise ValueError(f"link {self.ap}->{self.mp}: frequency must be > 0")
        if self.ap_pos == self.mp_pos:
            raise ValueError(
                f"link {self.ap}->{self.mp}: AP and MP positions coincide"
            )

    @property
    def length(self) -> float:
        """Inter-node distance in meters."""
        return self.ap_pos.distance_to(self.mp_pos)

    @property
    def wavelength(self) -> float:
        return SPEED_OF_LIGHT / self.frequency


@dataclass(frozen=True)
class FresnelEllipse:
    """Boundary of a Fresnel zone in the floor plane.

    Foci are the link's node positions; semi_minor is the zone's maximum
    radius (at the link midpoint) and semi_major follows from the focal
    distance.
    """

    link: RadioLink
    order: int
    semi_major: float
    semi_minor: float

    def __post_init__(self):
        if self.order < 1:
            raise ValueError(f"zone order must be >= 1, got {self.order}")
        if self.semi_minor <= 0:
            raise ValueError("semi_minor must be > 0")
        half = self.link.length / 2.0
        if self.semi_major < half:
            raise ValueError("semi_major must be >= half the link length")
        expected = math.hypot(self.semi_minor, half)
        if not math.isclose(self.semi_major, expected, rel_tol=1e-12):
            raise ValueError("semi_major inconsistent with semi_minor and link length")


def fresnel_radius_at(link: RadioLink, order: int, d1: float) -> float:
    """Zone radius at a point on the line of sight, d1 meters from the AP.

    radius = sqrt(order * wavelength * d1 * d2 / (d1 + d2)) with
    d2 = length - d1. Only defined strictly between the two nodes.
    """
    if order < 1:
        raise ValueError(f"zone order must be >= 1, got {order}")
    d = link.length
    if d1 <= 0 or d1 >= d:
        raise ValueError(
            f"d1 must lie strictly between the nodes (0 < d1 < {d}), got {d1}"
        )
    d2 = d - d1
    return math.sqrt(order * link.wavelength * d1 * d2 / (d1 + d2))


def max_fresnel_radius(link: RadioLink, order: int) -> float:
    """Largest zone radius, reached at the link midpoint.

    radius = sqrt(order * c * length / (4 * frequency)).
    """
    if order < 1:
        raise ValueError(f"zone order must be >= 1, got {order}")
    return math.sqrt(order * SPEED_OF_LIGHT * link.length / (4.0 * link.frequency))


def ellipse_of(link: RadioLink, order: int) -> FresnelEllipse:
    """Ellipse bounding the given zone: semi-minor axis is the maximum zone
    radius, semi-major follows from the focal half-distance."""
    r = max_fresnel_radius(link, order)
    half = link.length / 2.0
    return FresnelEllipse(
        link=link,
        order=order,
        semi_major=math.hypot(r, half),
        semi_minor=r,
    )


def contains(ellipse: FresnelEllipse, p: Point2D) -> bool:
    """Focal-sum membership test; boundary points count as inside."""
    link = ellipse.link
    s = p.distance_to(link.ap_pos) + p.distance_to(link.mp_pos)
    return s <= 2.0 * ellipse.semi_major
