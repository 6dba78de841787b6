"""Synthetic rental-market worlds with ground truth, plus detector scoring.

The real scraped corpus cannot be published, so evaluation runs on
generated worlds instead: residences are laid out on a spaced grid inside
(and optionally outside) square zones, every listing coordinate is
anonymised with the same 150 m disk jitter the platform applies, photo
embeddings are built around per-residence orthonormal centres with bounded
angular noise so similarity targets hold by construction, and review
counts are derived by inverting the occupancy formula from sampled target
nights. Ground-truth verdicts come from the same rules module applied to
the true (un-jittered, un-estimated) facts, which isolates pipeline error
from rule error.

Determinism: every entity draws from its own RNG stream keyed by
(seed, entity label), so output files are byte-identical for a seed no
matter the generation order or thread count.
"""

from __future__ import annotations

import datetime as dt
import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .entities import Listing, Owner, PermitApplication, PhotoRecord, Review
from .errors import ConfigError, ValidationError
from .geo import (
    METERS_PER_DEG_LAT,
    GeoPoint,
    GeoPolygon,
    RentPressureZone,
    meters_per_degree_lon,
)
from .ingest import (
    listing_record,
    owner_record,
    permit_record,
    photo_record,
    review_record,
    zones_document,
)
from .occupancy import OccupancyConfig, OccupancyEstimate, load_lexicon, builtin_lexicon_path, score_text
from .permits import PermitMatch
from .residence import select_principal
from .rules import VERDICTS, ListingEvidence, RuleThresholds, decide_listing

# Review phrase pools. Every phrase in a class scores the same under the
# shipped lexicon, so a post's mean sentiment does not drift with review
# count; the generator still measures scores with score_text rather than
# trusting these comments.
POSITIVE_PHRASES = (
    "great stay, the host was around the corner",
    "lovely spot right by the river",
    "beautiful flat with room for four",
    "amazing view and a comfortable bed",
)
NEGATIVE_PHRASES = (
    "dirty on arrival, had to ask twice",
    "smelly hallway and a broken kettle",
    "noisy street and a filthy bathroom",
    "unclean kitchen, would think twice",
)
NEUTRAL_PHRASES = (
    "stayed two weekends in a row",
    "checked in late on a friday",
    "about ten minutes from the station",
    "the key was in a lockbox by the door",
)

PERMIT_DESCRIPTIONS = (
    "change of use from dwelling to short-term letting accommodation",
    "retention of use of apartment for short-term let",
    "permission for use of property for tourism lettings",
)
NOISE_DESCRIPTIONS = (
    "rear extension to existing dwelling",
    "conversion of attic space with dormer window",
    "new vehicular entrance and driveway widening",
)


@dataclass(frozen=True)
class WorldSpec:
    """Layout and distribution parameters for one generated world."""

    seed: int = 0
    as_of: str = "2023-06-01"
    zone_count: int = 2
    zone_size_deg: float = 0.08
    zone_spacing_deg: float = 0.2
    origin_lat: float = 53.20
    origin_lon: float = -6.40
    owner_count: int = 50
    residences_per_owner: dict[str, float] = field(
        default_factory=lambda: {"1": 0.55, "2": 0.30, "3": 0.15}
    )
    posts_per_residence: dict[str, float] = field(
        default_factory=lambda: {"1": 0.70, "2": 0.20, "3": 0.10}
    )
    photos_per_post: int = 3
    embedding_dim: int = 192
    intra_similarity: float = 0.97
    inter_ceiling: float = 0.50
    permit_coverage: float = 0.20
    refused_permit_fraction: float = 0.10
    noise_permit_count: int = 5
    out_of_zone_fraction: float = 0.10
    room_type_mix: dict[str, float] = field(
        default_factory=lambda: {"entire_home": 0.70, "private_room": 0.25, "shared_room": 0.05}
    )
    min_nights_mix: dict[str, float] = field(
        default_factory=lambda: {"1": 0.35, "2": 0.35, "3": 0.20, "15": 0.10}
    )
    occupancy_band_mix: dict[str, float] = field(
        default_factory=lambda: {"low": 0.50, "near": 0.15, "over": 0.35}
    )
    sentiment_mix: dict[str, float] = field(
        default_factory=lambda: {"positive": 0.40, "neutral": 0.40, "negative": 0.20}
    )
    outdoor_photo_fraction: float = 0.25
    unknown_photo_fraction: float = 0.10
    min_residence_spacing_m: float = 400.0
    zone_margin_m: float = 200.0
    jitter_radius_m: float = 150.0

    def __post_init__(self) -> None:
        if not 0.0 < self.inter_ceiling < self.intra_similarity < 1.0:
            raise ConfigError(
                "need 0 < inter_ceiling < intra_similarity < 1, got "
                f"{self.inter_ceiling} and {self.intra_similarity}"
            )
        # photos sit within alpha of their residence centre; worst-case
        # cross-centre similarity with orthonormal centres is bounded by
        # 2*sin(alpha) + sin(alpha)^2, which must stay under the ceiling
        alpha = self._max_photo_angle()
        worst_inter = 2.0 * math.sin(alpha) + math.sin(alpha) ** 2
        if worst_inter > self.inter_ceiling:
            raise ConfigError(
                f"similarity targets unsatisfiable: worst-case inter {worst_inter:.3f} "
                f"exceeds ceiling {self.inter_ceiling}"
            )
        for name, mix in (
            ("residences_per_owner", self.residences_per_owner),
            ("posts_per_residence", self.posts_per_residence),
            ("room_type_mix", self.room_type_mix),
            ("min_nights_mix", self.min_nights_mix),
            ("occupancy_band_mix", self.occupancy_band_mix),
            ("sentiment_mix", self.sentiment_mix),
        ):
            if not mix or abs(sum(mix.values()) - 1.0) > 1e-9 or any(v < 0 for v in mix.values()):
                raise ConfigError(f"{name} must be a probability distribution summing to 1")
        if self.photos_per_post < 1 or self.owner_count < 1 or self.zone_count < 1:
            raise ConfigError("photos_per_post, owner_count, zone_count must be >= 1")
        if self.min_residence_spacing_m < 2 * self.jitter_radius_m:
            raise ConfigError(
                "min_residence_spacing_m must be at least twice the jitter radius, "
                "otherwise permits leak across residences and ground truth is unreliable"
            )

    def _max_photo_angle(self) -> float:
        # keep photos strictly inside the angular budget for the intra target
        return 0.45 * math.acos(self.intra_similarity)

    @classmethod
    def from_dict(cls, raw: dict) -> "WorldSpec":
        known = {f.name for f in cls.__dataclass_fields__.values()}  # type: ignore[attr-defined]
        unknown = set(raw) - known
        if unknown:
            raise ConfigError(f"unknown world spec fields: {sorted(unknown)}")
        return cls(**raw)


def stream(seed: int, *labels) -> np.random.Generator:
    """Independent RNG stream for one entity, stable across runs and platforms."""
    key = f"{seed}|" + "|".join(str(x) for x in labels)
    digest = hashlib.sha256(key.encode("utf-8")).digest()
    return np.random.default_rng(int.from_bytes(digest[:16], "big"))


def jitter_coordinate(
    true_point: GeoPoint, radius_m: float = 150.0, rng: np.random.Generator | None = None
) -> GeoPoint:
    """Uniform random point in the closed disk around a true coordinate.

    r = radius * sqrt(u) gives area-uniform sampling; the offset is
    converted to degrees with the local metres-per-degree at the point's
    latitude, matching the platform's anonymisation model.
    """
    if radius_m <= 0:
        raise ConfigError(f"radius_m must be positive, got {radius_m}")
    rng = rng if rng is not None else np.random.default_rng()
    u = float(rng.random())
    v = float(rng.random())
    r = radius_m * math.sqrt(u)
    theta = 2.0 * math.pi * v
    dlat = (r * math.cos(theta)) / METERS_PER_DEG_LAT
    dlon = (r * math.sin(theta)) / meters_per_degree_lon(true_point.lat)
    return GeoPoint(true_point.lat + dlat, true_point.lon + dlon)


def _categorical(rng: np.random.Generator, mix: dict[str, float]) -> str:
    keys = sorted(mix)
    probs = np.array([mix[k] for k in keys], dtype=np.float64)
    probs = probs / probs.sum()
    return keys[int(rng.choice(len(keys), p=probs))]


def _unit(vector: np.ndarray) -> np.ndarray:
    return vector / np.linalg.norm(vector)


def _photo_vector(center: np.ndarray, alpha_max: float, rng: np.random.Generator) -> np.ndarray:
    """Unit vector within angle alpha_max of the centre direction."""
    noise = rng.standard_normal(center.shape[0])
    noise -= noise.dot(center) * center
    norm = np.linalg.norm(noise)
    if norm == 0.0:
        return center.copy()
    noise /= norm
    alpha = float(rng.random()) * alpha_max
    return _unit(center * math.cos(alpha) + noise * math.sin(alpha))


# occupancy-target bands (nights); kept clear of the 70/90 rule thresholds
# so count rounding cannot flip a verdict across a boundary
_BANDS = {"low": (0.0, 65.0), "near": (73.0, 87.0), "over": (93.0, 180.0)}

_PHRASES = {
    "positive": POSITIVE_PHRASES,
    "negative": NEGATIVE_PHRASES,
    "neutral": NEUTRAL_PHRASES,
}


def _review_plan(
    target_nights: float,
    sentiment_class: str,
    min_nights: int,
    cfg: OccupancyConfig,
    lexicon,
) -> tuple[int, float, float]:
    """Invert the occupancy formula: review count for a target, then the
    exact nights that count reproduces.

    The sentiment bias depends on which phrases end up in the window, and
    the phrase sequence depends on the count, so iterate to a fixed point
    (phrase pools are constant-score per class, so this settles in one or
    two rounds).
    """
    pool = _PHRASES[sentiment_class]
    factor = max(cfg.avg_nights, float(min_nights))

    def mean_score(count: int) -> float:
        if count == 0:
            return 0.0
        scores = [score_text(pool[i % len(pool)], lexicon) for i in range(count)]
        return max(-1.0, min(1.0, sum(scores) / count))

    count = int(round(target_nights * cfg.review_rate / factor))
    for _ in range(8):
        bias = mean_score(count) * cfg.bias_factor
        new_count = int(round(target_nights * (cfg.review_rate + bias) / factor))
        if new_count == count:
            break
        count = new_count
    bias = mean_score(count) * cfg.bias_factor
    true_nights = count / (cfg.review_rate + bias) * factor
    return count, mean_score(count), true_nights


@dataclass
class _Residence:
    residence_id: str
    owner_id: str
    true_location: GeoPoint
    zone: str | None
    center_index: int
    permit_id: str | None = None


def _zone_layout(spec: WorldSpec) -> list[RentPressureZone]:
    zones = []
    for k in range(spec.zone_count):
        lat0 = spec.origin_lat
        lon0 = spec.origin_lon + k * spec.zone_spacing_deg
        s = spec.zone_size_deg
        ring = GeoPolygon.from_latlon(
            [(lat0, lon0), (lat0, lon0 + s), (lat0 + s, lon0 + s), (lat0 + s, lon0)]
        )
        zones.append(RentPressureZone(name=f"Zone {k + 1:02d}", boundary=(ring,)))
    return zones


def _slot_grid(spec: WorldSpec) -> tuple[list[tuple[GeoPoint, str]], list[GeoPoint]]:
    """Candidate residence locations: spaced grids inside each zone (inset by
    the margin) plus an out-of-zone band well south of everything."""
    margin_lat = spec.zone_margin_m / METERS_PER_DEG_LAT
    mid_lat = spec.origin_lat + spec.zone_size_deg / 2.0
    margin_lon = spec.zone_margin_m / meters_per_degree_lon(mid_lat)
    step_lat = spec.min_residence_spacing_m / METERS_PER_DEG_LAT
    step_lon = spec.min_residence_spacing_m / meters_per_degree_lon(mid_lat)

    in_zone: list[tuple[GeoPoint, str]] = []
    for k in range(spec.zone_count):
        lat0 = spec.origin_lat + margin_lat
        lat1 = spec.origin_lat + spec.zone_size_deg - margin_lat
        lon0 = spec.origin_lon + k * spec.zone_spacing_deg + margin_lon
        lon1 = spec.origin_lon + k * spec.zone_spacing_deg + spec.zone_size_deg - margin_lon
        lat = lat0
        while lat <= lat1:
            lon = lon0
            while lon <= lon1:
                in_zone.append((GeoPoint(lat, lon), f"Zone {k + 1:02d}"))
                lon += step_lon
            lat += step_lat

    out_zone: list[GeoPoint] = []
    band_top = spec.origin_lat - 0.05
    band_bottom = band_top - 0.04
    lon = spec.origin_lon
    lon_end = spec.origin_lon + (spec.zone_count - 1) * spec.zone_spacing_deg + spec.zone_size_deg
    lat = band_bottom
    while lat <= band_top:
        l = lon
        while l <= lon_end:
            out_zone.append(GeoPoint(lat, l))
            l += step_lon
        lat += step_lat
    return in_zone, out_zone


@dataclass
class GeneratedWorld:
    """In-memory result of generation, before serialization."""

    listings: list[Listing]
    owners: list[Owner]
    reviews: list[Review]
    photos: list[PhotoRecord]
    permits: list[PermitApplication]
    zones: list[RentPressureZone]
    ground_truth: list[dict]
    as_of: dt.date


def generate_world(spec: WorldSpec) -> GeneratedWorld:
    """Build one deterministic world per the world spec. See module docstring."""
    seed = spec.seed
    as_of = dt.date.fromisoformat(spec.as_of)
    cfg = OccupancyConfig()
    rule_thresholds = RuleThresholds()
    lexicon = load_lexicon(builtin_lexicon_path())
    zones = _zone_layout(spec)
    in_slots, out_slots = _slot_grid(spec)

    slot_rng = stream(seed, "slots")
    in_order = list(slot_rng.permutation(len(in_slots)))
    out_order = list(slot_rng.permutation(len(out_slots)))

    # assign residences to owners and slots
    residences: list[_Residence] = []
    center_counter = 0
    for o in range(spec.owner_count):
        owner_id = f"owner-{o:04d}"
        owner_rng = stream(seed, "owner", owner_id)
        n_res = int(_categorical(owner_rng, spec.residences_per_owner))
        for r in range(n_res):
            residence_id = f"{owner_id}-res{r + 1}"
            res_rng = stream(seed, "residence", residence_id)
            out_of_zone = float(res_rng.random()) < spec.out_of_zone_fraction
            if out_of_zone and out_order:
                location = out_slots[out_order.pop()]
                zone_name = None
            else:
                if not in_order:
                    raise ConfigError(
                        "world spec asks for more residences than the zone grid can place; "
                        "grow zone_size_deg or zone_count"
                    )
                location, zone_name = in_slots[in_order.pop()]
            residences.append(
                _Residence(
                    residence_id=residence_id,
                    owner_id=owner_id,
                    true_location=location,
                    zone=zone_name,
                    center_index=center_counter,
                )
            )
            center_counter += 1

    dim = spec.embedding_dim
    if center_counter + 1 > dim:
        raise ConfigError(
            f"embedding_dim {dim} too small for {center_counter} residences "
            "(orthonormal centres need one axis each, plus one for scenery)"
        )
    scenery_index = center_counter  # shared outdoor vector axis
    alpha_max = spec._max_photo_angle()

    def center_vec(index: int) -> np.ndarray:
        v = np.zeros(dim)
        v[index] = 1.0
        return v

    listings: list[Listing] = []
    reviews: list[Review] = []
    photos: list[PhotoRecord] = []
    permits: list[PermitApplication] = []
    truth_rows: list[dict] = []
    posts_by_owner: dict[str, list[Listing]] = {}
    residence_of_post: dict[str, _Residence] = {}
    review_count_of_post: dict[str, int] = {}
    plan_of_post: dict[str, tuple[int, float, float]] = {}

    for residence in residences:
        res_rng = stream(seed, "posts", residence.residence_id)
        n_posts = int(_categorical(res_rng, spec.posts_per_residence))
        granted = float(res_rng.random()) < spec.permit_coverage
        refused = not granted and float(res_rng.random()) < spec.refused_permit_fraction
        if granted or refused:
            app_id = f"permit-{residence.residence_id}"
            permits.append(
                _permit_application(
                    app_id,
                    residence.true_location,
                    PERMIT_DESCRIPTIONS[residence.center_index % len(PERMIT_DESCRIPTIONS)],
                    "granted" if granted else "refused",
                )
            )
            if granted:
                residence.permit_id = app_id

        for p in range(n_posts):
            post_id = f"post-{residence.residence_id.removeprefix('owner-')}-{p + 1}"
            post_rng = stream(seed, "post", post_id)
            room_type = _categorical(post_rng, spec.room_type_mix)
            min_nights = int(_categorical(post_rng, spec.min_nights_mix))
            band = _categorical(post_rng, spec.occupancy_band_mix)
            lo, hi = _BANDS[band]
            target = lo + float(post_rng.random()) * (hi - lo)
            sentiment_class = _categorical(post_rng, spec.sentiment_mix)
            count, house_score, true_nights = _review_plan(
                target, sentiment_class, min_nights, cfg, lexicon
            )
            created = as_of - dt.timedelta(days=int(365 + post_rng.integers(0, 730)))
            public = jitter_coordinate(
                residence.true_location, spec.jitter_radius_m, stream(seed, "jitter", post_id)
            )

            # reviews, all inside the estimation window
            day_offsets = sorted(int(d) for d in post_rng.integers(0, 365, size=count))
            pool = _PHRASES[sentiment_class]
            for i, offset in enumerate(day_offsets):
                reviews.append(
                    Review(
                        review_id=f"{post_id}-rev{i:03d}",
                        post_id=post_id,
                        date=as_of - dt.timedelta(days=offset),
                        text=pool[i % len(pool)],
                    )
                )

            # photos: indoor around the residence centre, occasional shared
            # outdoor scenery, occasional unknown-labelled indoor shot
            photo_ids = []
            center = center_vec(residence.center_index)
            for ph in range(spec.photos_per_post):
                photo_id = f"{post_id}-ph{ph}"
                photo_ids.append(photo_id)
                photos.append(
                    PhotoRecord(
                        photo_id=photo_id,
                        post_id=post_id,
                        scene_label="indoor",
                        embedding=_photo_vector(center, alpha_max, stream(seed, "photo", photo_id)),
                    )
                )
            if float(post_rng.random()) < spec.outdoor_photo_fraction:
                photo_id = f"{post_id}-out"
                photo_ids.append(photo_id)
                photos.append(
                    PhotoRecord(
                        photo_id=photo_id,
                        post_id=post_id,
                        scene_label="outdoor",
                        embedding=_photo_vector(
                            center_vec(scenery_index), alpha_max, stream(seed, "photo", photo_id)
                        ),
                    )
                )
            if float(post_rng.random()) < spec.unknown_photo_fraction:
                photo_id = f"{post_id}-unk"
                photo_ids.append(photo_id)
                photos.append(
                    PhotoRecord(
                        photo_id=photo_id,
                        post_id=post_id,
                        scene_label="unknown",
                        embedding=_photo_vector(center, alpha_max, stream(seed, "photo", photo_id)),
                    )
                )

            listing = Listing(
                post_id=post_id,
                owner_id=residence.owner_id,
                room_type=room_type,
                min_nights=min_nights,
                public_location=public,
                photo_ids=tuple(photo_ids),
                created_date=created,
                title=f"Listing {post_id}",
            )
            listings.append(listing)
            posts_by_owner.setdefault(residence.owner_id, []).append(listing)
            residence_of_post[post_id] = residence
            review_count_of_post[post_id] = count
            plan_of_post[post_id] = (count, house_score, true_nights)

    # noise permits: short-term keyword absent, so the filter must drop them
    noise_rng = stream(seed, "noise-permits")
    for i in range(spec.noise_permit_count):
        lat = spec.origin_lat - 0.15 - float(noise_rng.random()) * 0.02
        lon = spec.origin_lon + float(noise_rng.random()) * 0.1
        permits.append(
            _permit_application(
                f"permit-noise-{i:03d}",
                GeoPoint(lat, lon),
                NOISE_DESCRIPTIONS[i % len(NOISE_DESCRIPTIONS)],
                "granted",
            )
        )

    owners = [
        Owner(owner_id=oid, listing_count=len(posts))
        for oid, posts in sorted(posts_by_owner.items())
    ]

    # ground truth: the same decision procedure on true facts
    for owner_id, posts in sorted(posts_by_owner.items()):
        partition: dict[str, set[str]] = {}
        for listing in posts:
            partition.setdefault(residence_of_post[listing.post_id].residence_id, set()).add(
                listing.post_id
            )
        created = {l.post_id: l.created_date for l in posts}
        principal_posts = select_principal(
            list(partition.values()), review_count_of_post, created, "most_reviews"
        )
        for listing in sorted(posts, key=lambda l: l.post_id):
            residence = residence_of_post[listing.post_id]
            count, house_score, true_nights = plan_of_post[listing.post_id]
            bias = house_score * cfg.bias_factor
            cluster_posts = partition[residence.residence_id]
            permit_ids = [residence.permit_id] if residence.permit_id else []
            evidence = ListingEvidence(
                listing=listing,
                zone=residence.zone,
                cluster_id=min(cluster_posts),
                in_principal_cluster=cluster_posts == principal_posts,
                permit_match=PermitMatch(
                    post_id=listing.post_id,
                    permit_ids=permit_ids,
                    nearest_distance_m=0.0 if permit_ids else None,
                ),
                occupancy=OccupancyEstimate(
                    post_id=listing.post_id,
                    review_count_window=count,
                    sentiment_score=house_score,
                    sentiment_bias=bias,
                    raw_nights=true_nights,
                    capped_nights=min(true_nights, float(cfg.cap_nights)),
                ),
                cluster_post_ids=tuple(sorted(cluster_posts)),
            )
            finding = decide_listing(evidence, rule_thresholds)
            truth_rows.append(
                {
                    "post_id": listing.post_id,
                    "owner_id": owner_id,
                    "residence_id": residence.residence_id,
                    "true_location": {
                        "lat": residence.true_location.lat,
                        "lon": residence.true_location.lon,
                    },
                    "zone": residence.zone,
                    "permit_id": residence.permit_id,
                    "room_type": listing.room_type,
                    "min_nights": listing.min_nights,
                    "in_principal_residence": cluster_posts == principal_posts,
                    "true_nights": true_nights,
                    "review_count": count,
                    "verdict": finding.verdict,
                    "rule_code": finding.rule_code,
                }
            )

    listings.sort(key=lambda l: l.post_id)
    reviews.sort(key=lambda r: r.review_id)
    photos.sort(key=lambda p: p.photo_id)
    permits.sort(key=lambda p: p.app_id)
    truth_rows.sort(key=lambda row: row["post_id"])
    return GeneratedWorld(
        listings=listings,
        owners=owners,
        reviews=reviews,
        photos=photos,
        permits=permits,
        zones=zones,
        ground_truth=truth_rows,
        as_of=as_of,
    )


def _permit_application(
    app_id: str, center: GeoPoint, description: str, decision: str
) -> PermitApplication:
    half_lat = 15.0 / METERS_PER_DEG_LAT
    half_lon = 15.0 / meters_per_degree_lon(center.lat)
    ring = GeoPolygon.from_latlon(
        [
            (center.lat - half_lat, center.lon - half_lon),
            (center.lat - half_lat, center.lon + half_lon),
            (center.lat + half_lat, center.lon + half_lon),
            (center.lat + half_lat, center.lon - half_lon),
        ]
    )
    return PermitApplication(app_id=app_id, boundary=ring, description=description, decision=decision)


def write_world(world: GeneratedWorld, out_dir: str | Path) -> dict[str, Path]:
    """Serialize a world into the ingest file formats plus ground truth and
    a ready-to-run pipeline config (relative paths, so the directory is
    portable)."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {
        "listings": out / "listings.jsonl",
        "owners": out / "owners.jsonl",
        "reviews": out / "reviews.jsonl",
        "permits": out / "permits.jsonl",
        "embeddings": out / "embeddings.jsonl",
        "zones": out / "zones.geojson",
        "ground_truth": out / "ground_truth.jsonl",
        "run_config": out / "run_config.json",
    }

    def dump_lines(path: Path, records: list[dict]) -> None:
        with path.open("w", encoding="utf-8") as fh:
            for record in records:
                fh.write(json.dumps(record, ensure_ascii=False) + "\n")

    dump_lines(paths["listings"], [listing_record(l) for l in world.listings])
    dump_lines(paths["owners"], [owner_record(o) for o in world.owners])
    dump_lines(paths["reviews"], [review_record(r) for r in world.reviews])
    dump_lines(paths["permits"], [permit_record(p) for p in world.permits])
    dump_lines(paths["embeddings"], [photo_record(p) for p in world.photos])
    paths["zones"].write_text(
        json.dumps(zones_document(world.zones), ensure_ascii=False), encoding="utf-8"
    )
    dump_lines(paths["ground_truth"], world.ground_truth)
    run_config = {
        "listings": "listings.jsonl",
        "owners": "owners.jsonl",
        "reviews": "reviews.jsonl",
        "permits": "permits.jsonl",
        "embeddings": "embeddings.jsonl",
        "zones": "zones.geojson",
        "as_of": world.as_of.isoformat(),
    }
    paths["run_config"].write_text(
        json.dumps(run_config, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    return paths


# --- detector scoring against ground truth


def _load_jsonl(path: Path) -> list[dict]:
    rows = []
    for line in path.read_text(encoding="utf-8").splitlines():
        if line.strip():
            rows.append(json.loads(line))
    return rows


def evaluate_detector(findings_path: str | Path, truth_path: str | Path) -> dict:
    """Score a findings file against a world's ground truth.

    Reports one-vs-rest precision/recall/F1 per verdict (potential_breach
    is the positive class that matters), the fraction of owners whose
    recovered residence partition matches the generating partition, and
    how many permit matches the coordinate jitter manufactured (matches to
    a permit that does not belong to the listing's true residence).
    """
    findings = {row["post_id"]: row for row in _load_jsonl(Path(findings_path))}
    truth = {row["post_id"]: row for row in _load_jsonl(Path(truth_path))}
    if set(findings) != set(truth):
        only_findings = sorted(set(findings) - set(truth))
        only_truth = sorted(set(truth) - set(findings))
        raise ValidationError(
            f"post_id sets differ; only in findings: {only_findings[:10]}, "
            f"only in truth: {only_truth[:10]}"
        )

    per_verdict = {}
    for verdict in VERDICTS:
        tp = sum(
            1 for pid in truth if findings[pid]["verdict"] == verdict and truth[pid]["verdict"] == verdict
        )
        fp = sum(
            1 for pid in truth if findings[pid]["verdict"] == verdict and truth[pid]["verdict"] != verdict
        )
        fn = sum(
            1 for pid in truth if findings[pid]["verdict"] != verdict and truth[pid]["verdict"] == verdict
        )
        precision = tp / (tp + fp) if (tp + fp) else None
        recall = tp / (tp + fn) if (tp + fn) else None
        f1 = (
            2 * precision * recall / (precision + recall)
            if precision is not None and recall is not None and (precision + recall) > 0
            else None
        )
        per_verdict[verdict] = {
            "tp": tp,
            "fp": fp,
            "fn": fn,
            "precision": precision,
            "recall": recall,
            "f1": f1,
        }

    # partition recovery per owner
    recovered: dict[str, set[frozenset[str]]] = {}
    generated: dict[str, set[frozenset[str]]] = {}
    for pid, row in findings.items():
        cluster = frozenset(row["evidence"]["cluster_post_ids"])
        recovered.setdefault(row["owner_id"], set()).add(cluster)
    by_owner_res: dict[str, dict[str, set[str]]] = {}
    for pid, row in truth.items():
        by_owner_res.setdefault(row["owner_id"], {}).setdefault(row["residence_id"], set()).add(pid)
    for owner_id, res in by_owner_res.items():
        generated[owner_id] = {frozenset(posts) for posts in res.values()}
    owners = sorted(generated)
    exact = sum(1 for o in owners if recovered.get(o) == generated[o])
    cluster_recovery = exact / len(owners) if owners else None

    # permit matches the jitter manufactured
    jitter_extra = 0
    for pid, row in findings.items():
        own_permit = truth[pid]["permit_id"]
        for matched in row["evidence"]["permit_ids"]:
            if matched != own_permit:
                jitter_extra += 1

    verdict_agreement = sum(
        1 for pid in truth if findings[pid]["verdict"] == truth[pid]["verdict"]
    )
    code_agreement = sum(
        1 for pid in truth if findings[pid]["rule_code"] == truth[pid]["rule_code"]
    )
    return {
        "posts": len(truth),
        "verdict_agreement": verdict_agreement,
        "rule_code_agreement": code_agreement,
        "per_verdict": per_verdict,
        "cluster_recovery_rate": cluster_recovery,
        "owners_scored": len(owners),
        "jitter_extra_permit_matches": jitter_extra,
    }


def format_metrics(metrics: dict) -> str:
    """Human-readable rendering of evaluate_detector output."""
    lines = [
        f"posts scored: {metrics['posts']}",
        f"verdict agreement: {metrics['verdict_agreement']}/{metrics['posts']}",
        f"rule-code agreement: {metrics['rule_code_agreement']}/{metrics['posts']}",
        f"cluster recovery: {metrics['cluster_recovery_rate']} over {metrics['owners_scored']} owners",
        f"jitter-induced extra permit matches: {metrics['jitter_extra_permit_matches']}",
    ]
    for verdict, stats in metrics["per_verdict"].items():
        prec = "n/a" if stats["precision"] is None else f"{stats['precision']:.4f}"
        rec = "n/a" if stats["recall"] is None else f"{stats['recall']:.4f}"
        f1 = "n/a" if stats["f1"] is None else f"{stats['f1']:.4f}"
        lines.append(
            f"  {verdict:17s} tp={stats['tp']:4d} fp={stats['fp']:4d} fn={stats['fn']:4d} "
            f"precision={prec} recall={rec} f1={f1}"
        )
    return "\n".join(lines)
