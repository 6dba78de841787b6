"""Permit matching under coordinate anonymisation.

Listing coordinates are public only as a random point within 150 m of the
true location, so a listing is credited with any granted short-term-rental
permit within that radius. The inevitable side effect: one permit can
cover several listings, which the pipeline reports rather than hides.
"""

import datetime as dt

from rpzaudit.entities import Listing, PermitApplication
from rpzaudit.geo import GeoPoint, GeoPolygon, haversine_distance
from rpzaudit.permits import filter_short_term_permits, match_permits, permit_multiplicity
from rpzaudit.synth import jitter_coordinate, stream


def tiny_plot(lat, lon, half=0.0001):
    return GeoPolygon.from_latlon(
        [(lat - half, lon - half), (lat - half, lon + half),
         (lat + half, lon + half), (lat + half, lon - half)]
    )


applications = [
    PermitApplication("app-001", tiny_plot(53.3342, -6.2601),
                      "change of use from dwelling to short-term letting", "granted"),
    PermitApplication("app-002", tiny_plot(53.3500, -6.2400),
                      "permission for tourism letting of apartment", "refused"),
    PermitApplication("app-003", tiny_plot(53.3400, -6.2700),
                      "rear extension to existing dwelling", "granted"),
]

permits = filter_short_term_permits(applications)
print("short-term-rental applications kept by the keyword filter:")
for p in permits:
    print(f"  {p.permit_id}: granted={p.granted}  ({p.description[:50]}...)")
print("(app-003 dropped: no short-term-letting language in the description)")

# A listing whose true location IS the permit plot, anonymised five times:
true_location = GeoPoint(53.3342, -6.2601)
for i in range(5):
    public = jitter_coordinate(true_location, 150.0, stream(7, "demo", i))
    listing = Listing(
        post_id=f"post-{i}", owner_id="owner-1", room_type="entire_home", min_nights=2,
        public_location=public, photo_ids=(), created_date=dt.date(2021, 5, 1), title="demo",
    )
    match = match_permits(listing, permits)
    offset = haversine_distance(true_location, public)
    print(f"  jittered {offset:6.1f} m away -> matches {match.permit_ids}"
          f" (nearest granted permit {match.nearest_distance_m:.1f} m)")

# Two distinct dwellings 60 m apart share the airspace of one permit:
neighbour = GeoPoint(53.33474, -6.2601)
print(f"neighbour distance: {haversine_distance(true_location, neighbour):.1f} m")
matches = []
for i, centre in enumerate([true_location, neighbour]):
    listing = Listing(
        post_id=f"close-{i}", owner_id=f"owner-{i}", room_type="entire_home", min_nights=2,
        public_location=jitter_coordinate(centre, 150.0, stream(7, "close", i)),
        photo_ids=(), created_date=dt.date(2021, 5, 1), title="demo",
    )
    matches.append(match_permits(listing, permits))
print(f"listings matched per permit: {permit_multiplicity(matches)}")
print("one permit, several listings: the anonymisation over-credits, by design it is reported")
