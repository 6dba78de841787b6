"""The short-term-letting decision procedure.

Exemptions are checked first, in a fixed order (cheapest and most certain
first): outside any zone, long-term-only lets, home sharing in the
principal residence, and a granted permit. Anything left is judged on
principal-residence status and estimated occupancy against the 90-day
threshold. Occupancy is an estimate, so breach verdicts are always
"potential", never assertions.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .entities import Listing
from .errors import ConfigError
from .occupancy import OccupancyEstimate
from .permits import PermitMatch

VERDICTS = ("exempt", "compliant", "near_breach", "potential_breach")

RULE_CODES = (
    "NOT_IN_RPZ",
    "LONG_TERM_ONLY",
    "HOME_SHARING",
    "PERMIT_HELD",
    "NON_PRINCIPAL_NO_PERMIT",
    "OVER_90_DAYS",
    "NEAR_90_DAYS",
    "WITHIN_90_DAYS",
)

# Exemptions with no signal in the data model; surfaced in every report's
# limitations block rather than silently ignored.
UNDETECTABLE_EXEMPTIONS = (
    "student_accommodation",
    "corporate_rental",
    "rent_a_room_scheme",
)


@dataclass(frozen=True)
class RuleThresholds:
    """Day/night thresholds for the decision table.

    near_days opens the warning band: estimated occupancy in
    (near_days, over_days] is a near-breach, above over_days a potential
    breach. long_term_nights is the minimum-stay length at which a listing
    stops being a short-term let altogether.
    """

    near_days: float = 70.0
    over_days: float = 90.0
    long_term_nights: int = 15

    def __post_init__(self) -> None:
        if not 0 < self.near_days < self.over_days:
            raise ConfigError(
                f"need 0 < near_days < over_days, got {self.near_days}, {self.over_days}"
            )
        if self.long_term_nights < 1:
            raise ConfigError("long_term_nights must be >= 1")


@dataclass
class ListingEvidence:
    """Everything the decision procedure needs about one listing."""

    listing: Listing
    zone: str | None
    cluster_id: str
    in_principal_cluster: bool
    permit_match: PermitMatch
    occupancy: OccupancyEstimate
    cluster_post_ids: tuple[str, ...] = ()
    similarity_pairs: list[tuple[str, str, float]] = field(default_factory=list)


@dataclass
class BreachFinding:
    post_id: str
    owner_id: str
    verdict: str
    rule_code: str
    evidence: dict


def _evidence_dict(ev: ListingEvidence) -> dict:
    """Self-contained explanation: re-checking a verdict needs only this."""
    return {
        "zone": ev.zone,
        "room_type": ev.listing.room_type,
        "min_nights": ev.listing.min_nights,
        "cluster_id": ev.cluster_id,
        "in_principal_cluster": ev.in_principal_cluster,
        "cluster_post_ids": sorted(ev.cluster_post_ids),
        "similarity_pairs": [list(p) for p in sorted(ev.similarity_pairs)],
        "permit_ids": list(ev.permit_match.permit_ids),
        "nearest_permit_distance_m": ev.permit_match.nearest_distance_m,
        "review_count_window": ev.occupancy.review_count_window,
        "sentiment_score": ev.occupancy.sentiment_score,
        "sentiment_bias": ev.occupancy.sentiment_bias,
        "raw_nights": ev.occupancy.raw_nights,
        "capped_nights": ev.occupancy.capped_nights,
    }


def classify_exemptions(
    ev: ListingEvidence, thresholds: RuleThresholds = RuleThresholds()
) -> tuple[str, str] | None:
    """First matching exemption, or None.

    Order is fixed so rule_code attribution is deterministic: not in a
    zone, then long-term-only lets (minimum stay at or above 15 nights),
    then room-letting within the presumed principal residence, then a
    granted permit.
    """
    if ev.zone is None:
        return ("exempt", "NOT_IN_RPZ")
    if ev.listing.min_nights >= thresholds.long_term_nights:
        return ("exempt", "LONG_TERM_ONLY")
    if ev.listing.room_type in ("private_room", "shared_room") and ev.in_principal_cluster:
        return ("exempt", "HOME_SHARING")
    if ev.permit_match.permit_ids:
        return ("exempt", "PERMIT_HELD")
    return None


def evaluate_listing(
    ev: ListingEvidence, thresholds: RuleThresholds = RuleThresholds()
) -> BreachFinding:
    """Decision table for non-exempt listings.

    A second (non-principal) dwelling let without a permit is a potential
    breach outright. A whole principal home is judged on estimated nights:
    over the 90-day threshold is a potential breach, inside the warning
    band a near-breach, otherwise compliant.
    """
    nights = ev.occupancy.capped_nights
    if not ev.in_principal_cluster:
        verdict, code = "potential_breach", "NON_PRINCIPAL_NO_PERMIT"
    elif ev.listing.room_type == "entire_home" and nights > thresholds.over_days:
        verdict, code = "potential_breach", "OVER_90_DAYS"
    elif ev.listing.room_type == "entire_home" and thresholds.near_days < nights <= thresholds.over_days:
        verdict, code = "near_breach", "NEAR_90_DAYS"
    else:
        verdict, code = "compliant", "WITHIN_90_DAYS"
    return BreachFinding(
        post_id=ev.listing.post_id,
        owner_id=ev.listing.owner_id,
        verdict=verdict,
        rule_code=code,
        evidence=_evidence_dict(ev),
    )


def decide_listing(
    ev: ListingEvidence, thresholds: RuleThresholds = RuleThresholds()
) -> BreachFinding:
    """Exemptions first, decision table second: exactly one verdict per listing."""
    exemption = classify_exemptions(ev, thresholds)
    if exemption is not None:
        verdict, code = exemption
        return BreachFinding(
            post_id=ev.listing.post_id,
            owner_id=ev.listing.owner_id,
            verdict=verdict,
            rule_code=code,
            evidence=_evidence_dict(ev),
        )
    return evaluate_listing(ev, thresholds)


@dataclass
class CorpusSummary:
    """Findings-derivable run statistics (no diagnostics, no config)."""

    in_scope_count: int
    in_rpz_count: int
    verdict_counts: dict[str, int]
    rule_code_counts: dict[str, int]
    breach_rate: float | None
    near_breach_count: int
    permit_multiplicity: dict[str, int]


def summarize_findings(findings: list[BreachFinding]) -> CorpusSummary:
    """Corpus statistics recomputable from findings alone.

    breach_rate is potential breaches over in-zone listings; with no
    in-zone listings it is None, not zero (an empty denominator is not
    evidence of compliance).
    """
    verdict_counts = {v: 0 for v in VERDICTS}
    rule_code_counts = {c: 0 for c in RULE_CODES}
    multiplicity: dict[str, int] = {}
    in_rpz = 0
    for finding in findings:
        verdict_counts[finding.verdict] += 1
        rule_code_counts[finding.rule_code] += 1
        if finding.evidence.get("zone") is not None:
            in_rpz += 1
        for pid in finding.evidence.get("permit_ids", []):
            multiplicity[pid] = multiplicity.get(pid, 0) + 1
    potential = verdict_counts["potential_breach"]
    return CorpusSummary(
        in_scope_count=len(findings),
        in_rpz_count=in_rpz,
        verdict_counts=verdict_counts,
        rule_code_counts=rule_code_counts,
        breach_rate=(potential / in_rpz) if in_rpz else None,
        near_breach_count=verdict_counts["near_breach"],
        permit_multiplicity=dict(sorted(multiplicity.items())),
    )


def evaluate_corpus(
    evidence: list[ListingEvidence], thresholds: RuleThresholds = RuleThresholds()
) -> tuple[list[BreachFinding], CorpusSummary]:
    """Per-listing findings (sorted by post_id) plus corpus statistics."""
    findings = sorted(
        (decide_listing(ev, thresholds) for ev in evidence), key=lambda f: f.post_id
    )
    return findings, summarize_findings(findings)
