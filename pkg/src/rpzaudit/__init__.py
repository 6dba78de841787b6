"""rpzaudit: flag potential short-term-letting breaches in Rent Pressure Zones.

The package is a batch pipeline over file-based inputs: zone geometry
filtering, photo-embedding residence deduplication, permit geofencing,
sentiment-adjusted occupancy estimation, and a deterministic rules engine.
A synthetic-world generator with ground truth provides the evaluation the
unpublishable real data cannot.
"""

__version__ = "0.1.0"

from .geo import (  # noqa: F401
    GeoPoint,
    GeoPolygon,
    RentPressureZone,
    find_zone,
    haversine_distance,
    point_in_polygon,
    polygon_centroid,
)
from .entities import Listing, Owner, PermitApplication, PhotoRecord, Review  # noqa: F401
from .residence import (  # noqa: F401
    ResidenceCluster,
    SimilarityThresholds,
    cluster_residences,
    cosine_similarity,
    filter_indoor,
    posts_same_residence,
)
from .permits import Permit, PermitMatch, filter_short_term_permits, match_permits  # noqa: F401
from .occupancy import (  # noqa: F401
    OccupancyConfig,
    OccupancyEstimate,
    SentimentLexicon,
    estimate_occupancy,
    reviews_in_window,
    sentiment_bias,
    sentiment_score,
)
from .rules import (  # noqa: F401
    BreachFinding,
    ListingEvidence,
    RuleThresholds,
    classify_exemptions,
    evaluate_corpus,
    evaluate_listing,
)
from .synth import WorldSpec, evaluate_detector, generate_world, jitter_coordinate  # noqa: F401
