"""Input-side domain entities: listings, owners, reviews, photos, permit applications."""

from __future__ import annotations

import datetime as dt
from dataclasses import dataclass, field

import numpy as np

from .geo import GeoPoint, GeoPolygon

ROOM_TYPES = frozenset({"entire_home", "private_room", "shared_room"})

# Airbnb display strings seen in scraped data, normalised to internal tokens.
ROOM_TYPE_ALIASES = {
    "entire home/apt": "entire_home",
    "entire home": "entire_home",
    "private room": "private_room",
    "shared room": "shared_room",
}

SCENE_LABELS = frozenset({"indoor", "outdoor", "unknown"})

PERMIT_DECISIONS = frozenset({"granted", "refused", "pending", "unknown"})


def normalize_room_type(value: str) -> str | None:
    """Map a wire room-type string to its internal token, or None if unknown."""
    token = value.strip()
    if token in ROOM_TYPES:
        return token
    return ROOM_TYPE_ALIASES.get(token.lower())


@dataclass(frozen=True)
class Listing:
    post_id: str
    owner_id: str
    room_type: str
    min_nights: int
    public_location: GeoPoint
    photo_ids: tuple[str, ...]
    created_date: dt.date
    title: str


@dataclass(frozen=True)
class Owner:
    owner_id: str
    listing_count: int
    # extra wire fields preserved verbatim, never interpreted
    extra: dict = field(default_factory=dict)


@dataclass(frozen=True)
class Review:
    review_id: str
    post_id: str
    date: dt.date
    text: str
    language: str | None = None


@dataclass
class PhotoRecord:
    """A listing photo's scene label plus its embedding vector.

    Embeddings within one corpus share a dimension; vectors for photos
    labelled indoor/outdoor must have positive norm (unknown-labelled
    placeholders may be zero).
    """

    photo_id: str
    post_id: str
    scene_label: str
    embedding: np.ndarray

    @property
    def dim(self) -> int:
        return int(self.embedding.shape[0])


@dataclass(frozen=True)
class PermitApplication:
    app_id: str
    boundary: GeoPolygon
    description: str
    decision: str
