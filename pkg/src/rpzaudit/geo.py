"""Geometric primitives: centroids, point-in-polygon, great-circle distance, zone lookup.

All functions are pure and treat coordinates as WGS84 degrees. Polygon
operations work in planar lat/lon space, which is accurate enough for the
sub-kilometre rings this pipeline sees (planning-application plots); the
error of skipping a projection at that scale is far below the 150 m
anonymisation radius that dominates everything downstream.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .errors import InvalidCoordinateError, InvalidPolygonError

EARTH_RADIUS_M = 6_371_000.0  # mean Earth radius; fixed so distances are bit-reproducible

# metres spanned by one degree of latitude on the sphere above
METERS_PER_DEG_LAT = EARTH_RADIUS_M * math.pi / 180.0

# shoelace areas below this (in square degrees) are treated as degenerate rings
_DEGENERATE_AREA_SQDEG = 1e-12


@dataclass(frozen=True)
class GeoPoint:
    """A WGS84 coordinate. lat in [-90, 90], lon in [-180, 180], both finite."""

    lat: float
    lon: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.lat) and math.isfinite(self.lon)):
            raise InvalidCoordinateError(f"non-finite coordinate ({self.lat}, {self.lon})")
        if not -90.0 <= self.lat <= 90.0:
            raise InvalidCoordinateError(f"latitude {self.lat} outside [-90, 90]")
        if not -180.0 <= self.lon <= 180.0:
            raise InvalidCoordinateError(f"longitude {self.lon} outside [-180, 180]")


@dataclass(frozen=True)
class GeoPolygon:
    """A simple ring of >= 3 vertices. The ring is open: last vertex != first."""

    exterior: tuple[GeoPoint, ...]

    def __post_init__(self) -> None:
        if len(self.exterior) < 3:
            raise InvalidPolygonError(f"polygon needs >= 3 vertices, got {len(self.exterior)}")
        object.__setattr__(self, "exterior", tuple(self.exterior))

    @classmethod
    def from_latlon(cls, vertices) -> "GeoPolygon":
        """Build from an iterable of (lat, lon) pairs, dropping an explicit closing vertex."""
        pts = [GeoPoint(lat, lon) for lat, lon in vertices]
        if len(pts) >= 2 and pts[0] == pts[-1]:
            pts = pts[:-1]
        return cls(tuple(pts))


@dataclass(frozen=True)
class RentPressureZone:
    """A named zone made of one or more polygon parts."""

    name: str
    boundary: tuple[GeoPolygon, ...] = field(default_factory=tuple)

    def __post_init__(self) -> None:
        if not self.name:
            raise InvalidPolygonError("zone name must be non-empty")
        if len(self.boundary) < 1:
            raise InvalidPolygonError(f"zone {self.name!r} has no polygon parts")
        object.__setattr__(self, "boundary", tuple(self.boundary))


def polygon_centroid(polygon: GeoPolygon) -> GeoPoint:
    """Area-weighted (shoelace) centroid of a ring, in planar lat/lon space.

    Degenerate rings (signed area magnitude below 1e-12 sq-degrees, i.e.
    collinear or sliver polygons) fall back to the arithmetic mean of the
    vertices so the pipeline never aborts on bad planning polygons.
    """
    pts = polygon.exterior
    n = len(pts)
    mean_lat = sum(p.lat for p in pts) / n
    mean_lon = sum(p.lon for p in pts) / n
    # shoelace accumulation over x = lon, y = lat, relative to the vertex
    # mean: small rings far from the origin would otherwise lose ~10 digits
    # to cancellation
    area2 = 0.0
    cx = 0.0
    cy = 0.0
    for i in range(n):
        x0, y0 = pts[i].lon - mean_lon, pts[i].lat - mean_lat
        x1 = pts[(i + 1) % n].lon - mean_lon
        y1 = pts[(i + 1) % n].lat - mean_lat
        cross = x0 * y1 - x1 * y0
        area2 += cross
        cx += (x0 + x1) * cross
        cy += (y0 + y1) * cross
    if abs(area2 / 2.0) < _DEGENERATE_AREA_SQDEG:
        return GeoPoint(mean_lat, mean_lon)
    return GeoPoint(mean_lat + cy / (3.0 * area2), mean_lon + cx / (3.0 * area2))


def point_in_polygon(point: GeoPoint, polygon: GeoPolygon) -> bool:
    """Even-odd ray-crossing (PNPOLY) membership test.

    Strictly interior points return True, strictly exterior False. Points on
    the boundary follow the algorithm's native convention and must not be
    relied upon by callers.
    """
    pts = polygon.exterior
    n = len(pts)
    x, y = point.lon, point.lat
    inside = False
    j = n - 1
    for i in range(n):
        xi, yi = pts[i].lon, pts[i].lat
        xj, yj = pts[j].lon, pts[j].lat
        if (yi > y) != (yj > y) and x < (xj - xi) * (y - yi) / (yj - yi) + xi:
            inside = not inside
        j = i
    return inside


def haversine_distance(a: GeoPoint, b: GeoPoint) -> float:
    """Great-circle distance in metres between two points (R = 6371 km sphere)."""
    phi1 = math.radians(a.lat)
    phi2 = math.radians(b.lat)
    dphi = math.radians(b.lat - a.lat)
    dlam = math.radians(b.lon - a.lon)
    s = math.sin(dphi / 2.0) ** 2 + math.cos(phi1) * math.cos(phi2) * math.sin(dlam / 2.0) ** 2
    return EARTH_RADIUS_M * 2.0 * math.atan2(math.sqrt(s), math.sqrt(1.0 - s))


def find_zone(point: GeoPoint, zones: list[RentPressureZone]) -> str | None:
    """Name of the first zone (input order) whose boundary contains the point.

    Returns None when the point lies in no zone. First-match order makes the
    result deterministic when zones overlap.
    """
    for zone in zones:
        for part in zone.boundary:
            if point_in_polygon(point, part):
                return zone.name
    return None


def meters_per_degree_lon(lat_deg: float) -> float:
    """Metres spanned by one degree of longitude at the given latitude."""
    return METERS_PER_DEG_LAT * math.cos(math.radians(lat_deg))
