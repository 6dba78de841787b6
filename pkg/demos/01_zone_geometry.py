"""Zone geometry: centroids, membership tests, and great-circle distances.

Walks through the geometric layer the pipeline is built on. Everything
here is pure: plug in coordinates, get numbers back.
"""

from rpzaudit.geo import (
    GeoPoint,
    GeoPolygon,
    RentPressureZone,
    find_zone,
    haversine_distance,
    point_in_polygon,
    polygon_centroid,
)

# A planning-application plot arrives as a polygon; the pipeline reduces it
# to a single representative point with the area-weighted centroid.
plot = GeoPolygon.from_latlon([
    (53.3340, -6.2610),
    (53.3340, -6.2596),
    (53.3351, -6.2596),
    (53.3351, -6.2610),
])
centre = polygon_centroid(plot)
print(f"plot centroid: ({centre.lat:.6f}, {centre.lon:.6f})")

# An L-shaped plot shows the centroid is genuinely area-weighted, not just
# the vertex mean: decomposing into a 2x1 rectangle and a 1x1 square gives
# (0.8333, 0.8333), and so does the shoelace formula.
l_shape = GeoPolygon.from_latlon([(0, 0), (2, 0), (2, 1), (1, 1), (1, 2), (0, 2)])
c = polygon_centroid(l_shape)
print(f"L-shape centroid: ({c.lat:.4f}, {c.lon:.4f})  (vertex mean would be (1.0, 1.0))")

# Zone membership is an even-odd ray-crossing test.
city = RentPressureZone(
    name="Dublin City",
    boundary=(GeoPolygon.from_latlon([
        (53.30, -6.35), (53.30, -6.15), (53.42, -6.15), (53.42, -6.35),
    ]),),
)
spire = GeoPoint(53.3498, -6.2603)
howth = GeoPoint(53.3873, -6.0659)
print(f"spire in city zone:  {point_in_polygon(spire, city.boundary[0])}")
print(f"howth in city zone:  {point_in_polygon(howth, city.boundary[0])}")

# find_zone scans a zone list in order and reports the first hit.
suburbs = RentPressureZone(
    name="Fingal",
    boundary=(GeoPolygon.from_latlon([
        (53.42, -6.35), (53.42, -6.05), (53.63, -6.05), (53.63, -6.35),
    ]),),
)
for point, label in [(spire, "the spire"), (GeoPoint(53.45, -6.22), "swords road"), (howth, "howth head")]:
    print(f"zone of {label:12s}: {find_zone(point, [city, suburbs])}")

# Distances come from the haversine formula on a 6371 km sphere. One
# degree along the equator is about 111.19 km.
print(f"1 degree at the equator: {haversine_distance(GeoPoint(0, 0), GeoPoint(0, 1)):.2f} m")
print(f"spire to howth head:     {haversine_distance(spire, howth):.1f} m")
