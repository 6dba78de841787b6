"""Select short-term-rental permits and match listings to them.

A listing's public coordinate is anonymised within a 150 m disk, so a
conventional coordinate comparison is useless. Instead a listing matches
every granted permit whose centroid lies within the anonymisation radius;
the inevitable many-to-one matches are reported, not hidden.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .entities import Listing, PermitApplication
from .errors import ConfigError
from .geo import GeoPoint, haversine_distance, polygon_centroid

# Description keywords marking a planning application as short-term-rental
# related. The source dataset mixes free text; the authority's own filter
# criteria are unpublished, so this list is configuration, not truth.
DEFAULT_PERMIT_KEYWORDS = (
    "short-term let",
    "short term let",
    "short-term letting",
    "change of use",
    "tourism",
)

ANONYMIZATION_RADIUS_M = 150.0


@dataclass(frozen=True)
class Permit:
    permit_id: str
    location: GeoPoint
    description: str
    granted: bool


@dataclass
class PermitMatch:
    post_id: str
    permit_ids: list[str] = field(default_factory=list)
    nearest_distance_m: float | None = None


def filter_short_term_permits(
    applications: list[PermitApplication],
    keywords: tuple[str, ...] = DEFAULT_PERMIT_KEYWORDS,
) -> list[Permit]:
    """Keep applications whose description mentions any keyword (case-insensitive).

    Refused and pending applications are kept for reporting; only a granted
    decision can exempt a listing downstream.
    """
    if not keywords:
        raise ConfigError("permit keyword list must be non-empty")
    lowered = [k.lower() for k in keywords]
    permits = []
    for app in applications:
        description = app.description.lower()
        if any(k in description for k in lowered):
            permits.append(
                Permit(
                    permit_id=app.app_id,
                    location=polygon_centroid(app.boundary),
                    description=app.description,
                    granted=app.decision == "granted",
                )
            )
    return permits


def match_permits(
    listing: Listing,
    permits: list[Permit],
    radius_m: float = ANONYMIZATION_RADIUS_M,
) -> PermitMatch:
    """All granted permits within radius_m of the listing's public location.

    The boundary is inclusive (<= radius): the anonymisation circle is a
    closed disk, and excluding the rim would drop listings jittered to
    exactly the radius. nearest_distance_m is the distance to the closest
    granted permit whether or not it matched; None when no granted permit
    exists at all.
    """
    if radius_m <= 0:
        raise ConfigError(f"radius_m must be positive, got {radius_m}")
    matched: list[tuple[float, str]] = []
    nearest: float | None = None
    for permit in permits:
        if not permit.granted:
            continue
        distance = haversine_distance(listing.public_location, permit.location)
        if nearest is None or distance < nearest:
            nearest = distance
        if distance <= radius_m:
            matched.append((distance, permit.permit_id))
    matched.sort()
    return PermitMatch(
        post_id=listing.post_id,
        permit_ids=[pid for _, pid in matched],
        nearest_distance_m=nearest,
    )


def permit_multiplicity(matches: list[PermitMatch]) -> dict[str, int]:
    """How many listings matched each permit (the acknowledged over-count:
    anonymisation can place several listings inside one permit's circle)."""
    counts: dict[str, int] = {}
    for match in matches:
        for pid in match.permit_ids:
            counts[pid] = counts.get(pid, 0) + 1
    return dict(sorted(counts.items()))
