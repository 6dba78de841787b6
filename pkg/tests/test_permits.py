"""Permit keyword filtering and radius matching."""

from __future__ import annotations

import datetime as dt

import numpy as np
import pytest

from rpzaudit.entities import Listing, PermitApplication
from rpzaudit.errors import ConfigError
from rpzaudit.geo import GeoPoint, GeoPolygon, METERS_PER_DEG_LAT, haversine_distance
from rpzaudit.permits import (
    Permit,
    filter_short_term_permits,
    match_permits,
    permit_multiplicity,
)
from rpzaudit.synth import jitter_coordinate, stream


def square_around(center: GeoPoint, half_deg=0.0001) -> GeoPolygon:
    lat, lon = center.lat, center.lon
    return GeoPolygon.from_latlon(
        [(lat - half_deg, lon - half_deg), (lat - half_deg, lon + half_deg),
         (lat + half_deg, lon + half_deg), (lat + half_deg, lon - half_deg)]
    )


def application(app_id, description, decision="granted", center=GeoPoint(53.0, -6.0)):
    return PermitApplication(app_id=app_id, boundary=square_around(center),
                             description=description, decision=decision)


def granted_permit(permit_id, location):
    return Permit(permit_id=permit_id, location=location, description="short-term let", granted=True)


def make_listing(post_id, location):
    return Listing(post_id=post_id, owner_id="owner-1", room_type="entire_home", min_nights=2,
                   public_location=location, photo_ids=(), created_date=dt.date(2021, 1, 1),
                   title=post_id)


class TestFilterShortTermPermits:
    def test_keyword_match_granted(self):
        apps = [application("a1", "Change of use to short-term letting of dwelling")]
        permits = filter_short_term_permits(apps)
        assert len(permits) == 1 and permits[0].granted

    def test_non_matching_description_dropped(self):
        apps = [application("a1", "rear extension to dwelling")]
        assert filter_short_term_permits(apps) == []

    def test_refused_kept_but_not_granted(self):
        apps = [application("a1", "use of house for tourism lettings", decision="refused")]
        permits = filter_short_term_permits(apps)
        assert len(permits) == 1 and not permits[0].granted

    def test_location_is_polygon_centroid(self):
        center = GeoPoint(53.25, -6.15)
        apps = [application("a1", "short term let", center=center)]
        location = filter_short_term_permits(apps)[0].location
        assert location.lat == pytest.approx(center.lat, abs=1e-9)
        assert location.lon == pytest.approx(center.lon, abs=1e-9)

    def test_custom_keywords(self):
        apps = [application("a1", "holiday home usage")]
        assert filter_short_term_permits(apps) == []
        assert len(filter_short_term_permits(apps, ("holiday home",))) == 1

    def test_empty_keywords_rejected(self):
        with pytest.raises(ConfigError):
            filter_short_term_permits([], ())


PERMIT_AT_ORIGIN = granted_permit("p1", GeoPoint(53.0, -6.0))


class TestMatchPermits:
    def test_listing_exactly_at_permit(self):
        match = match_permits(make_listing("x", GeoPoint(53.0, -6.0)), [PERMIT_AT_ORIGIN])
        assert match.permit_ids == ["p1"]
        assert match.nearest_distance_m == 0.0

    def test_boundary_inclusive_at_150m(self):
        # exactly 150 m north of the permit, per the haversine oracle
        lat_offset = 150.0 / METERS_PER_DEG_LAT
        listing = make_listing("x", GeoPoint(53.0 + lat_offset, -6.0))
        d = haversine_distance(listing.public_location, PERMIT_AT_ORIGIN.location)
        assert d == pytest.approx(150.0, abs=0.01)
        assert d <= 150.0
        match = match_permits(listing, [PERMIT_AT_ORIGIN])
        assert match.permit_ids == ["p1"]
        assert match.nearest_distance_m == pytest.approx(150.0, abs=0.01)

    def test_just_outside_not_matched(self):
        listing = make_listing("x", GeoPoint(53.001360, -6.0))
        d = haversine_distance(listing.public_location, PERMIT_AT_ORIGIN.location)
        assert d == pytest.approx(151.2, abs=0.05)
        match = match_permits(listing, [PERMIT_AT_ORIGIN])
        assert match.permit_ids == []
        # nearest granted permit still reported for the evidence trail
        assert match.nearest_distance_m == pytest.approx(d, abs=1e-9)

    def test_refused_permit_never_matches(self):
        refused = Permit("p2", GeoPoint(53.0, -6.0), "short-term let", granted=False)
        match = match_permits(make_listing("x", GeoPoint(53.0, -6.0)), [refused])
        assert match.permit_ids == []
        assert match.nearest_distance_m is None

    def test_monotone_in_radius(self):
        rng = np.random.default_rng(41)
        permits = [granted_permit(f"p{i}", GeoPoint(53.0 + float(rng.uniform(-0.003, 0.003)),
                                                    -6.0 + float(rng.uniform(-0.003, 0.003))))
                   for i in range(30)]
        listing = make_listing("x", GeoPoint(53.0, -6.0))
        for r1, r2 in [(50, 150), (150, 300), (10, 400)]:
            smaller = set(match_permits(listing, permits, r1).permit_ids)
            larger = set(match_permits(listing, permits, r2).permit_ids)
            assert smaller <= larger

    def test_jittered_listing_always_matches_permit_at_true_location(self):
        true_location = GeoPoint(53.123, -6.456)
        permit = granted_permit("p1", true_location)
        for i in range(500):
            public = jitter_coordinate(true_location, 150.0, stream(9, "jit", i))
            match = match_permits(make_listing(f"x{i}", public), [permit])
            assert match.permit_ids == ["p1"]

    def test_invalid_radius(self):
        with pytest.raises(ConfigError):
            match_permits(make_listing("x", GeoPoint(53.0, -6.0)), [], radius_m=0.0)

    def test_matches_sorted_by_distance(self):
        near = granted_permit("near", GeoPoint(53.0001, -6.0))
        far = granted_permit("far", GeoPoint(53.0009, -6.0))
        match = match_permits(make_listing("x", GeoPoint(53.0, -6.0)), [far, near])
        assert match.permit_ids == ["near", "far"]


class TestPermitMultiplicity:
    def test_many_to_one_counted(self):
        permit = PERMIT_AT_ORIGIN
        listings = [make_listing(f"x{i}", GeoPoint(53.0 + i * 1e-5, -6.0)) for i in range(3)]
        matches = [match_permits(l, [permit]) for l in listings]
        assert permit_multiplicity(matches) == {"p1": 3}

    def test_empty(self):
        assert permit_multiplicity([]) == {}
