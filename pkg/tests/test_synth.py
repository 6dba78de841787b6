"""World generation determinism, jitter geometry, and detector scoring."""

from __future__ import annotations

import datetime as dt
import filecmp
import json

import numpy as np
import pytest

from rpzaudit.errors import ConfigError, ValidationError
from rpzaudit.geo import GeoPoint, haversine_distance
from rpzaudit.ingest import parse_embeddings, photo_record
from rpzaudit.synth import (
    WorldSpec,
    evaluate_detector,
    generate_world,
    jitter_coordinate,
    stream,
    write_world,
)

SMALL_SPEC = WorldSpec(
    seed=7,
    owner_count=12,
    embedding_dim=48,
    zone_count=1,
    noise_permit_count=2,
)


class _FixedRng:
    """Stands in for a Generator when the draws must be exact."""

    def __init__(self, values):
        self.values = list(values)

    def random(self):
        return self.values.pop(0)


class TestJitter:
    def test_zero_radius_draw_returns_true_point(self):
        p = GeoPoint(53.3, -6.2)
        assert jitter_coordinate(p, 150.0, _FixedRng([0.0, 0.37])) == p

    def test_containment_10k(self):
        center = GeoPoint(53.3, -6.2)
        rng = stream(99, "containment")
        for _ in range(10_000):
            sample = jitter_coordinate(center, 150.0, rng)
            assert haversine_distance(center, sample) <= 150.01

    def test_disk_uniformity_quarter_mass_within_half_radius(self):
        center = GeoPoint(53.3, -6.2)
        rng = stream(99, "uniformity")
        inside = sum(
            1
            for _ in range(10_000)
            if haversine_distance(center, jitter_coordinate(center, 150.0, rng)) <= 75.0
        )
        assert inside / 10_000 == pytest.approx(0.25, abs=0.02)

    def test_invalid_radius(self):
        with pytest.raises(ConfigError):
            jitter_coordinate(GeoPoint(0, 0), 0.0)

    def test_angle_covers_all_quadrants(self):
        center = GeoPoint(53.3, -6.2)
        rng = stream(99, "quadrants")
        quadrants = set()
        for _ in range(200):
            s = jitter_coordinate(center, 150.0, rng)
            quadrants.add((s.lat >= center.lat, s.lon >= center.lon))
        assert len(quadrants) == 4


class TestWorldSpec:
    def test_defaults_are_valid(self):
        spec = WorldSpec()
        assert spec.intra_similarity == 0.97 and spec.inter_ceiling == 0.5

    def test_unsatisfiable_similarity_targets(self):
        with pytest.raises(ConfigError, match="inter"):
            WorldSpec(intra_similarity=0.4, inter_ceiling=0.5)

    def test_mixes_must_sum_to_one(self):
        with pytest.raises(ConfigError, match="room_type_mix"):
            WorldSpec(room_type_mix={"entire_home": 0.5})

    def test_unknown_fields_rejected(self):
        with pytest.raises(ConfigError, match="obviously_wrong"):
            WorldSpec.from_dict({"obviously_wrong": 1})

    def test_spacing_must_cover_two_jitter_radii(self):
        with pytest.raises(ConfigError, match="spacing"):
            WorldSpec(min_residence_spacing_m=200.0)

    def test_dim_must_cover_residences(self):
        spec = WorldSpec(owner_count=40, embedding_dim=16, zone_count=1)
        with pytest.raises(ConfigError, match="embedding_dim"):
            generate_world(spec)


class TestGenerateWorld:
    def test_same_seed_byte_identical(self, tmp_path):
        for sub in ("a", "b"):
            write_world(generate_world(SMALL_SPEC), tmp_path / sub)
        for name in ("listings.jsonl", "owners.jsonl", "reviews.jsonl", "permits.jsonl",
                     "embeddings.jsonl", "zones.geojson", "ground_truth.jsonl", "run_config.json"):
            assert filecmp.cmp(tmp_path / "a" / name, tmp_path / "b" / name, shallow=False), name

    def test_different_seeds_differ(self):
        w7 = generate_world(SMALL_SPEC)
        w8 = generate_world(WorldSpec(seed=8, owner_count=12, embedding_dim=48, zone_count=1))
        assert [l.public_location for l in w7.listings] != [l.public_location for l in w8.listings]

    def test_embeddings_parse_through_ingest(self):
        world = generate_world(SMALL_SPEC)
        lines = [json.dumps(photo_record(p)) for p in world.photos]
        result = parse_embeddings(lines)
        assert len(result.entities) == len(world.photos) and not result.rejects

    def test_similarity_targets_hold(self):
        world = generate_world(SMALL_SPEC)
        residence_of = {row["post_id"]: row["residence_id"] for row in world.ground_truth}
        indoor = [p for p in world.photos if p.scene_label != "outdoor"]
        by_residence: dict[str, list] = {}
        for p in indoor:
            by_residence.setdefault(residence_of[p.post_id], []).append(p.embedding)
        residences = sorted(by_residence)
        for rid in residences:
            vectors = by_residence[rid]
            for i in range(len(vectors)):
                for j in range(i + 1, len(vectors)):
                    assert float(vectors[i] @ vectors[j]) >= SMALL_SPEC.intra_similarity
        rng = np.random.default_rng(5)
        for _ in range(300):
            ra, rb = rng.choice(len(residences), size=2, replace=False)
            va = by_residence[residences[ra]][0]
            vb = by_residence[residences[rb]][0]
            assert float(va @ vb) <= SMALL_SPEC.inter_ceiling

    def test_review_dates_inside_window(self):
        world = generate_world(SMALL_SPEC)
        floor = world.as_of - dt.timedelta(days=365)
        for review in world.reviews:
            assert floor < review.date <= world.as_of

    def test_owner_counts_match_listings(self):
        world = generate_world(SMALL_SPEC)
        per_owner: dict[str, int] = {}
        for listing in world.listings:
            per_owner[listing.owner_id] = per_owner.get(listing.owner_id, 0) + 1
        for owner in world.owners:
            assert owner.listing_count == per_owner[owner.owner_id]

    def test_jittered_locations_within_radius_of_truth(self):
        world = generate_world(SMALL_SPEC)
        truth = {row["post_id"]: row for row in world.ground_truth}
        for listing in world.listings:
            t = truth[listing.post_id]["true_location"]
            d = haversine_distance(listing.public_location, GeoPoint(t["lat"], t["lon"]))
            assert d <= SMALL_SPEC.jitter_radius_m + 0.01

    def test_single_owner_single_post_world(self):
        spec = WorldSpec(
            seed=11, owner_count=1, embedding_dim=8, zone_count=1,
            residences_per_owner={"1": 1.0}, posts_per_residence={"1": 1.0},
            out_of_zone_fraction=0.0, noise_permit_count=0,
        )
        world = generate_world(spec)
        assert len(world.listings) == 1
        assert len(world.ground_truth) == 1
        row = world.ground_truth[0]
        assert row["in_principal_residence"] is True
        assert row["verdict"] in ("exempt", "compliant", "near_breach", "potential_breach")

    def test_full_permit_coverage_single_residences_no_breaches(self):
        spec = WorldSpec(
            seed=3, owner_count=10, embedding_dim=24, zone_count=1,
            residences_per_owner={"1": 1.0}, permit_coverage=1.0, out_of_zone_fraction=0.0,
        )
        world = generate_world(spec)
        verdicts = {row["verdict"] for row in world.ground_truth}
        assert "potential_breach" not in verdicts
        assert "near_breach" not in verdicts

    def test_ground_truth_verdicts_match_independent_decision_oracle(self):
        world = generate_world(SMALL_SPEC)
        for row in world.ground_truth:
            # re-derive the verdict from raw truth fields, bypassing the
            # rules module entirely
            capped = min(row["true_nights"], 365.0)
            if row["zone"] is None:
                expected = ("exempt", "NOT_IN_RPZ")
            elif row["min_nights"] >= 15:
                expected = ("exempt", "LONG_TERM_ONLY")
            elif row["room_type"] in ("private_room", "shared_room") and row["in_principal_residence"]:
                expected = ("exempt", "HOME_SHARING")
            elif row["permit_id"]:
                expected = ("exempt", "PERMIT_HELD")
            elif not row["in_principal_residence"]:
                expected = ("potential_breach", "NON_PRINCIPAL_NO_PERMIT")
            elif row["room_type"] == "entire_home" and capped > 90:
                expected = ("potential_breach", "OVER_90_DAYS")
            elif row["room_type"] == "entire_home" and 70 < capped <= 90:
                expected = ("near_breach", "NEAR_90_DAYS")
            else:
                expected = ("compliant", "WITHIN_90_DAYS")
            assert (row["verdict"], row["rule_code"]) == expected, row["post_id"]

    def test_reconstructed_nights_stay_off_the_thresholds(self):
        # truth nights are rebuilt from the rounded review count, exactly
        # as the estimator will rebuild them, so a verdict can only flip if
        # a value sat on the 70/90 knife edge; targets are sampled clear of
        # the thresholds so even the quantized values keep their distance
        world = generate_world(SMALL_SPEC)
        for row in world.ground_truth:
            if row["rule_code"] not in ("WITHIN_90_DAYS", "NEAR_90_DAYS", "OVER_90_DAYS"):
                continue
            nights = row["true_nights"]
            assert abs(nights - 70.0) > 1e-6, row
            assert abs(nights - 90.0) > 1e-6, row


def fake_finding(post_id, owner_id, verdict, rule_code, cluster, permit_ids=(), zone="Zone 01"):
    return {
        "post_id": post_id,
        "owner_id": owner_id,
        "verdict": verdict,
        "rule_code": rule_code,
        "evidence": {
            "zone": zone,
            "cluster_post_ids": sorted(cluster),
            "permit_ids": list(permit_ids),
        },
    }


def fake_truth(post_id, owner_id, residence_id, verdict, rule_code, permit_id=None):
    return {
        "post_id": post_id,
        "owner_id": owner_id,
        "residence_id": residence_id,
        "zone": "Zone 01",
        "permit_id": permit_id,
        "verdict": verdict,
        "rule_code": rule_code,
    }


def write_jsonl(path, rows):
    path.write_text("".join(json.dumps(r) + "\n" for r in rows), encoding="utf-8")


class TestEvaluateDetector:
    def test_perfect_findings_score_one(self, tmp_path):
        truth = [
            fake_truth("p1", "o1", "r1", "potential_breach", "NON_PRINCIPAL_NO_PERMIT"),
            fake_truth("p2", "o1", "r2", "compliant", "WITHIN_90_DAYS"),
        ]
        findings = [
            fake_finding("p1", "o1", "potential_breach", "NON_PRINCIPAL_NO_PERMIT", ["p1"]),
            fake_finding("p2", "o1", "compliant", "WITHIN_90_DAYS", ["p2"]),
        ]
        write_jsonl(tmp_path / "f.jsonl", findings)
        write_jsonl(tmp_path / "t.jsonl", truth)
        metrics = evaluate_detector(tmp_path / "f.jsonl", tmp_path / "t.jsonl")
        breach = metrics["per_verdict"]["potential_breach"]
        assert breach["precision"] == 1.0 and breach["recall"] == 1.0
        assert metrics["cluster_recovery_rate"] == 1.0
        assert metrics["jitter_extra_permit_matches"] == 0

    def test_all_compliant_findings_miss_breaches(self, tmp_path):
        truth = [
            fake_truth("p1", "o1", "r1", "potential_breach", "NON_PRINCIPAL_NO_PERMIT"),
            fake_truth("p2", "o1", "r2", "compliant", "WITHIN_90_DAYS"),
        ]
        findings = [
            fake_finding("p1", "o1", "compliant", "WITHIN_90_DAYS", ["p1"]),
            fake_finding("p2", "o1", "compliant", "WITHIN_90_DAYS", ["p2"]),
        ]
        write_jsonl(tmp_path / "f.jsonl", findings)
        write_jsonl(tmp_path / "t.jsonl", truth)
        metrics = evaluate_detector(tmp_path / "f.jsonl", tmp_path / "t.jsonl")
        assert metrics["per_verdict"]["potential_breach"]["recall"] == 0.0

    def test_post_id_mismatch_lists_difference(self, tmp_path):
        write_jsonl(tmp_path / "f.jsonl", [fake_finding("p1", "o1", "compliant", "WITHIN_90_DAYS", ["p1"])])
        write_jsonl(tmp_path / "t.jsonl", [fake_truth("p2", "o1", "r1", "compliant", "WITHIN_90_DAYS")])
        with pytest.raises(ValidationError, match="p2"):
            evaluate_detector(tmp_path / "f.jsonl", tmp_path / "t.jsonl")

    def test_jitter_extra_permit_match_reported(self, tmp_path):
        # two dwellings 40 m apart, one permit: the anonymisation makes both
        # listings match it; only one truly holds it
        truth = [
            fake_truth("p1", "o1", "r1", "exempt", "PERMIT_HELD", permit_id="permit-1"),
            fake_truth("p2", "o2", "r2", "exempt", "PERMIT_HELD", permit_id=None),
        ]
        findings = [
            fake_finding("p1", "o1", "exempt", "PERMIT_HELD", ["p1"], permit_ids=["permit-1"]),
            fake_finding("p2", "o2", "exempt", "PERMIT_HELD", ["p2"], permit_ids=["permit-1"]),
        ]
        write_jsonl(tmp_path / "f.jsonl", findings)
        write_jsonl(tmp_path / "t.jsonl", truth)
        metrics = evaluate_detector(tmp_path / "f.jsonl", tmp_path / "t.jsonl")
        assert metrics["jitter_extra_permit_matches"] == 1

    def test_split_cluster_counts_against_recovery(self, tmp_path):
        truth = [
            fake_truth("p1", "o1", "r1", "compliant", "WITHIN_90_DAYS"),
            fake_truth("p2", "o1", "r1", "compliant", "WITHIN_90_DAYS"),
        ]
        findings = [
            fake_finding("p1", "o1", "compliant", "WITHIN_90_DAYS", ["p1"]),
            fake_finding("p2", "o1", "compliant", "WITHIN_90_DAYS", ["p2"]),
        ]
        write_jsonl(tmp_path / "f.jsonl", findings)
        write_jsonl(tmp_path / "t.jsonl", truth)
        metrics = evaluate_detector(tmp_path / "f.jsonl", tmp_path / "t.jsonl")
        assert metrics["cluster_recovery_rate"] == 0.0
