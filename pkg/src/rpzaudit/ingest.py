"""Parse, validate, and cross-link the five input datasets.

All record files are UTF-8 JSON Lines (one object per line). Malformed
records never abort a parse: they are collected into a rejects list with
their line number. Only contract-level problems (duplicate ids, embedding
dimension drift, unreadable streams) raise.

Wire coordinate order is (lon, lat) for polygon rings, following the
geographic-feature convention; points travel as {"lat": .., "lon": ..}
objects. Conversion to the internal (lat, lon) order happens here and only
here.
"""

from __future__ import annotations

import datetime as dt
import json
from dataclasses import dataclass, field
from typing import Any, Iterable

import numpy as np

from .entities import (
    PERMIT_DECISIONS,
    SCENE_LABELS,
    Listing,
    Owner,
    PermitApplication,
    PhotoRecord,
    Review,
    normalize_room_type,
)
from .errors import InvalidCoordinateError, InvalidPolygonError, ValidationError
from .geo import GeoPoint, GeoPolygon, RentPressureZone


@dataclass
class Reject:
    """A record that failed to parse, with enough context to fix the input."""

    line: int
    reason: str

    def as_dict(self) -> dict:
        return {"line": self.line, "reason": self.reason}


@dataclass
class ParseResult:
    entities: list
    rejects: list[Reject] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)


class _RecordError(Exception):
    """Per-record parse failure; always converted to a Reject."""


def _require(obj: dict, name: str) -> Any:
    if name not in obj:
        raise _RecordError(f"missing field {name!r}")
    return obj[name]


def _require_str(obj: dict, name: str) -> str:
    value = _require(obj, name)
    if not isinstance(value, str) or not value:
        raise _RecordError(f"field {name!r} must be a non-empty string")
    return value


def _require_int(obj: dict, name: str) -> int:
    value = _require(obj, name)
    if isinstance(value, bool) or not isinstance(value, int):
        raise _RecordError(f"field {name!r} must be an integer")
    return value


def _require_date(obj: dict, name: str) -> dt.date:
    value = _require_str(obj, name)
    try:
        return dt.date.fromisoformat(value)
    except ValueError as exc:
        raise _RecordError(f"field {name!r}: {exc}") from None


def _require_point(obj: dict, name: str) -> GeoPoint:
    value = _require(obj, name)
    if not isinstance(value, dict) or "lat" not in value or "lon" not in value:
        raise _RecordError(f"field {name!r} must be an object with lat and lon")
    try:
        return GeoPoint(float(value["lat"]), float(value["lon"]))
    except (TypeError, ValueError, InvalidCoordinateError) as exc:
        raise _RecordError(f"field {name!r}: {exc}") from None


def ring_from_lonlat(coords: Iterable) -> GeoPolygon:
    """Build a polygon from wire-order [lon, lat] vertex pairs.

    An explicit closing vertex (first == last) is dropped; rings with
    fewer than 3 distinct vertices raise InvalidPolygonError.
    """
    pts: list[tuple[float, float]] = []
    for pair in coords:
        if not isinstance(pair, (list, tuple)) or len(pair) < 2:
            raise InvalidPolygonError(f"ring vertex {pair!r} is not a [lon, lat] pair")
        lon, lat = float(pair[0]), float(pair[1])
        pts.append((lat, lon))
    return GeoPolygon.from_latlon(pts)


def ring_to_lonlat(polygon: GeoPolygon) -> list[list[float]]:
    """Serialize a polygon back to wire order, re-closing the ring."""
    ring = [[p.lon, p.lat] for p in polygon.exterior]
    ring.append(list(ring[0]))
    return ring


def _iter_records(stream: Iterable[str]):
    """Yield (line_number, parsed_object_or_None, error_or_None) per input line."""
    for line_no, raw in enumerate(stream, start=1):
        text = raw.strip()
        if not text:
            continue
        try:
            obj = json.loads(text)
        except (json.JSONDecodeError, UnicodeDecodeError) as exc:
            yield line_no, None, f"invalid JSON: {exc}"
            continue
        if not isinstance(obj, dict):
            yield line_no, None, "record is not a JSON object"
            continue
        yield line_no, obj, None


def parse_listings(stream: Iterable[str]) -> ParseResult:
    """Parse listing records; malformed records land in rejects.

    Raises ValidationError on a duplicate post_id: silent duplicate
    collapse would corrupt every downstream per-listing count.
    """
    listings: list[Listing] = []
    rejects: list[Reject] = []
    seen: set[str] = set()
    for line_no, obj, err in _iter_records(stream):
        if err is not None:
            rejects.append(Reject(line_no, err))
            continue
        try:
            post_id = _require_str(obj, "post_id")
            owner_id = _require_str(obj, "owner_id")
            room_type = normalize_room_type(_require_str(obj, "room_type"))
            if room_type is None:
                raise _RecordError(f"unknown room_type {obj['room_type']!r}")
            min_nights = _require_int(obj, "min_nights")
            if min_nights < 1:
                raise _RecordError("min_nights must be >= 1")
            location = _require_point(obj, "public_location")
            photo_ids = _require(obj, "photo_ids")
            if not isinstance(photo_ids, list) or not all(isinstance(p, str) for p in photo_ids):
                raise _RecordError("photo_ids must be a list of strings")
            created = _require_date(obj, "created_date")
            title = _require(obj, "title")
            if not isinstance(title, str):
                raise _RecordError("title must be a string")
        except _RecordError as exc:
            rejects.append(Reject(line_no, str(exc)))
            continue
        if post_id in seen:
            raise ValidationError(f"duplicate post_id {post_id!r} at line {line_no}")
        seen.add(post_id)
        listings.append(
            Listing(
                post_id=post_id,
                owner_id=owner_id,
                room_type=room_type,
                min_nights=min_nights,
                public_location=location,
                photo_ids=tuple(photo_ids),
                created_date=created,
                title=title,
            )
        )
    return ParseResult(listings, rejects)


_OWNER_KNOWN_FIELDS = {"owner_id", "listing_count"}


def parse_owners(stream: Iterable[str]) -> ParseResult:
    """Parse owner records. Fields beyond owner_id/listing_count are kept opaque."""
    owners: list[Owner] = []
    rejects: list[Reject] = []
    seen: set[str] = set()
    for line_no, obj, err in _iter_records(stream):
        if err is not None:
            rejects.append(Reject(line_no, err))
            continue
        try:
            owner_id = _require_str(obj, "owner_id")
            count = _require_int(obj, "listing_count")
            if count < 0:
                raise _RecordError("listing_count must be >= 0")
        except _RecordError as exc:
            rejects.append(Reject(line_no, str(exc)))
            continue
        if owner_id in seen:
            raise ValidationError(f"duplicate owner_id {owner_id!r} at line {line_no}")
        seen.add(owner_id)
        extra = {k: v for k, v in obj.items() if k not in _OWNER_KNOWN_FIELDS}
        owners.append(Owner(owner_id=owner_id, listing_count=count, extra=extra))
    return ParseResult(owners, rejects)


def parse_reviews(stream: Iterable[str]) -> ParseResult:
    reviews: list[Review] = []
    rejects: list[Reject] = []
    seen: set[str] = set()
    for line_no, obj, err in _iter_records(stream):
        if err is not None:
            rejects.append(Reject(line_no, err))
            continue
        try:
            review_id = _require_str(obj, "review_id")
            post_id = _require_str(obj, "post_id")
            date = _require_date(obj, "date")
            text = _require(obj, "text")
            if not isinstance(text, str):
                raise _RecordError("text must be a string")
            language = obj.get("language")
            if language is not None and not isinstance(language, str):
                raise _RecordError("language must be a string when present")
        except _RecordError as exc:
            rejects.append(Reject(line_no, str(exc)))
            continue
        if review_id in seen:
            raise ValidationError(f"duplicate review_id {review_id!r} at line {line_no}")
        seen.add(review_id)
        reviews.append(Review(review_id, post_id, date, text, language))
    return ParseResult(reviews, rejects)


def _segments_properly_cross(p1, p2, p3, p4) -> bool:
    """True if open segments p1-p2 and p3-p4 cross at an interior point."""

    def orient(a, b, c):
        v = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
        if v > 0:
            return 1
        if v < 0:
            return -1
        return 0

    o1 = orient(p1, p2, p3)
    o2 = orient(p1, p2, p4)
    o3 = orient(p3, p4, p1)
    o4 = orient(p3, p4, p2)
    return o1 != o2 and o3 != o4 and 0 not in (o1, o2, o3, o4)


def polygon_self_intersects(polygon: GeoPolygon) -> bool:
    """Detect proper self-intersections (bow-ties) between non-adjacent edges."""
    pts = [(p.lon, p.lat) for p in polygon.exterior]
    n = len(pts)
    edges = [(pts[i], pts[(i + 1) % n]) for i in range(n)]
    for i in range(n):
        for j in range(i + 1, n):
            if j == i or (j == i + 1) or (i == 0 and j == n - 1):
                continue  # adjacent edges share a vertex
            if _segments_properly_cross(*edges[i], *edges[j]):
                return True
    return False


def parse_permits(stream: Iterable[str]) -> ParseResult:
    """Parse permit applications. Self-intersecting boundaries are accepted
    but flagged with a warning (polygon repair is out of scope)."""
    permits: list[PermitApplication] = []
    rejects: list[Reject] = []
    warnings: list[str] = []
    seen: set[str] = set()
    for line_no, obj, err in _iter_records(stream):
        if err is not None:
            rejects.append(Reject(line_no, err))
            continue
        try:
            app_id = _require_str(obj, "app_id")
            description = _require_str(obj, "description")
            decision = _require_str(obj, "decision")
            if decision not in PERMIT_DECISIONS:
                raise _RecordError(
                    f"decision {decision!r} not one of {sorted(PERMIT_DECISIONS)}"
                )
            boundary_wire = _require(obj, "boundary")
            if not isinstance(boundary_wire, list):
                raise _RecordError("boundary must be a list of [lon, lat] pairs")
            try:
                boundary = ring_from_lonlat(boundary_wire)
            except (InvalidPolygonError, InvalidCoordinateError, TypeError, ValueError) as exc:
                raise _RecordError(f"boundary: {exc}") from None
        except _RecordError as exc:
            rejects.append(Reject(line_no, str(exc)))
            continue
        if app_id in seen:
            raise ValidationError(f"duplicate app_id {app_id!r} at line {line_no}")
        seen.add(app_id)
        if polygon_self_intersects(boundary):
            warnings.append(f"permit {app_id}: boundary self-intersects; centroid may be off")
        permits.append(PermitApplication(app_id, boundary, description, decision))
    return ParseResult(permits, rejects, warnings)


def parse_embeddings(stream: Iterable[str]) -> ParseResult:
    """Parse photo embedding records. The first record fixes the corpus
    dimension D; any later record with a different dimension raises."""
    photos: list[PhotoRecord] = []
    rejects: list[Reject] = []
    seen: set[str] = set()
    corpus_dim: int | None = None
    for line_no, obj, err in _iter_records(stream):
        if err is not None:
            rejects.append(Reject(line_no, err))
            continue
        try:
            photo_id = _require_str(obj, "photo_id")
            post_id = _require_str(obj, "post_id")
            scene_label = _require_str(obj, "scene_label")
            if scene_label not in SCENE_LABELS:
                raise _RecordError(
                    f"scene_label {scene_label!r} not one of {sorted(SCENE_LABELS)}"
                )
            dim = _require_int(obj, "dim")
            vector = _require(obj, "vector")
            if not isinstance(vector, list) or not all(
                isinstance(v, (int, float)) and not isinstance(v, bool) for v in vector
            ):
                raise _RecordError("vector must be a list of numbers")
            if len(vector) != dim:
                raise _RecordError(f"dim={dim} but vector has {len(vector)} entries")
            embedding = np.asarray(vector, dtype=np.float64)
            if not np.all(np.isfinite(embedding)):
                raise _RecordError("vector contains non-finite values")
            if scene_label != "unknown" and float(np.linalg.norm(embedding)) == 0.0:
                raise _RecordError("zero-norm vector for a labelled photo")
        except _RecordError as exc:
            rejects.append(Reject(line_no, str(exc)))
            continue
        if photo_id in seen:
            raise ValidationError(f"duplicate photo_id {photo_id!r} at line {line_no}")
        if corpus_dim is None:
            corpus_dim = dim
        elif dim != corpus_dim:
            raise ValidationError(
                f"dimension mismatch for photo_id {photo_id!r}: got {dim}, corpus uses {corpus_dim}"
            )
        seen.add(photo_id)
        photos.append(PhotoRecord(photo_id, post_id, scene_label, embedding))
    return ParseResult(photos, rejects)


def parse_zones(document: str | dict) -> list[RentPressureZone]:
    """Parse a geographic feature collection into named zones.

    Feature names come from the string property "ENGLISH" or "name" (the
    electoral-area files use ENGLISH). Geometry may be Polygon or
    MultiPolygon; only exterior rings are used (holes are not modelled).
    """
    if isinstance(document, str):
        try:
            document = json.loads(document)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"zones document is not valid JSON: {exc}") from None
    if not isinstance(document, dict) or document.get("type") != "FeatureCollection":
        raise ValidationError("zones document is not a FeatureCollection")
    zones: list[RentPressureZone] = []
    for idx, feature in enumerate(document.get("features", [])):
        props = feature.get("properties") or {}
        name = props.get("ENGLISH") or props.get("name")
        if not name or not isinstance(name, str):
            raise ValidationError(f"zone feature #{idx} has no ENGLISH/name property")
        geometry = feature.get("geometry") or {}
        gtype = geometry.get("type")
        coords = geometry.get("coordinates")
        if gtype == "Polygon":
            ring_sets = [coords]
        elif gtype == "MultiPolygon":
            ring_sets = coords
        else:
            raise ValidationError(f"zone {name!r}: unsupported geometry type {gtype!r}")
        parts = []
        for rings in ring_sets:
            if not rings:
                raise InvalidPolygonError(f"zone {name!r}: polygon with no rings")
            parts.append(ring_from_lonlat(rings[0]))
        zones.append(RentPressureZone(name=name, boundary=tuple(parts)))
    return zones


# --- serialization (inverse of the parsers; used for round-trips and synth output)


def listing_record(listing: Listing) -> dict:
    return {
        "post_id": listing.post_id,
        "owner_id": listing.owner_id,
        "room_type": listing.room_type,
        "min_nights": listing.min_nights,
        "public_location": {"lat": listing.public_location.lat, "lon": listing.public_location.lon},
        "photo_ids": list(listing.photo_ids),
        "created_date": listing.created_date.isoformat(),
        "title": listing.title,
    }


def owner_record(owner: Owner) -> dict:
    record = {"owner_id": owner.owner_id, "listing_count": owner.listing_count}
    record.update(owner.extra)
    return record


def review_record(review: Review) -> dict:
    record = {
        "review_id": review.review_id,
        "post_id": review.post_id,
        "date": review.date.isoformat(),
        "text": review.text,
    }
    if review.language is not None:
        record["language"] = review.language
    return record


def photo_record(photo: PhotoRecord) -> dict:
    return {
        "photo_id": photo.photo_id,
        "post_id": photo.post_id,
        "scene_label": photo.scene_label,
        "dim": photo.dim,
        "vector": [float(v) for v in photo.embedding],
    }


def permit_record(permit: PermitApplication) -> dict:
    return {
        "app_id": permit.app_id,
        "boundary": ring_to_lonlat(permit.boundary),
        "description": permit.description,
        "decision": permit.decision,
    }


def zones_document(zones: list[RentPressureZone]) -> dict:
    features = []
    for zone in zones:
        if len(zone.boundary) == 1:
            geometry = {"type": "Polygon", "coordinates": [ring_to_lonlat(zone.boundary[0])]}
        else:
            geometry = {
                "type": "MultiPolygon",
                "coordinates": [[ring_to_lonlat(part)] for part in zone.boundary],
            }
        features.append(
            {"type": "Feature", "properties": {"ENGLISH": zone.name}, "geometry": geometry}
        )
    return {"type": "FeatureCollection", "features": features}


# --- corpus assembly and referential validation


@dataclass
class Violation:
    code: str
    entity_id: str
    message: str

    def as_dict(self) -> dict:
        return {"code": self.code, "entity_id": self.entity_id, "message": self.message}


@dataclass
class ValidationReport:
    violations: list[Violation] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations


@dataclass
class Corpus:
    """The immutable cross-linked input world; safe to share once validated."""

    listings: list[Listing]
    owners: list[Owner]
    reviews: list[Review]
    photos: list[PhotoRecord]
    permits: list[PermitApplication]
    zones: list[RentPressureZone]

    def listings_by_id(self) -> dict[str, Listing]:
        return {l.post_id: l for l in self.listings}

    def reviews_by_post(self) -> dict[str, list[Review]]:
        grouped: dict[str, list[Review]] = {}
        for review in self.reviews:
            grouped.setdefault(review.post_id, []).append(review)
        return grouped

    def photos_by_post(self) -> dict[str, list[PhotoRecord]]:
        grouped: dict[str, list[PhotoRecord]] = {}
        for photo in self.photos:
            grouped.setdefault(photo.post_id, []).append(photo)
        return grouped

    def listings_by_owner(self) -> dict[str, list[Listing]]:
        grouped: dict[str, list[Listing]] = {}
        for listing in self.listings:
            grouped.setdefault(listing.owner_id, []).append(listing)
        return grouped


def validate_corpus(
    listings: list[Listing],
    owners: list[Owner],
    reviews: list[Review],
    photos: list[PhotoRecord],
    permits: list[PermitApplication],
    as_of: dt.date | None = None,
) -> ValidationReport:
    """Check referential integrity across the parsed datasets.

    Violations are data, not exceptions: the report lists every one with
    the offending entity id. A corpus is acceptable only when the report
    is empty.
    """
    report = ValidationReport()
    owner_ids = {o.owner_id for o in owners}
    post_ids = {l.post_id for l in listings}

    for listing in listings:
        if listing.owner_id not in owner_ids:
            report.violations.append(
                Violation(
                    "unknown_owner",
                    listing.post_id,
                    f"listing {listing.post_id} references unknown owner {listing.owner_id}",
                )
            )

    counts: dict[str, int] = {}
    for listing in listings:
        counts[listing.owner_id] = counts.get(listing.owner_id, 0) + 1
    for owner in owners:
        actual = counts.get(owner.owner_id, 0)
        if owner.listing_count != actual:
            report.violations.append(
                Violation(
                    "count_mismatch",
                    owner.owner_id,
                    f"owner {owner.owner_id} declares {owner.listing_count} listings, corpus has {actual}",
                )
            )

    for review in reviews:
        if review.post_id not in post_ids:
            report.violations.append(
                Violation(
                    "orphan_review",
                    review.review_id,
                    f"review {review.review_id} references unknown post {review.post_id}",
                )
            )
        if as_of is not None and review.date > as_of:
            report.violations.append(
                Violation(
                    "future_review",
                    review.review_id,
                    f"review {review.review_id} dated {review.date} is after as-of {as_of}",
                )
            )

    for photo in photos:
        if photo.post_id not in post_ids:
            report.violations.append(
                Violation(
                    "orphan_photo",
                    photo.photo_id,
                    f"photo {photo.photo_id} references unknown post {photo.post_id}",
                )
            )

    return report
