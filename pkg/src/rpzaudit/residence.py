"""Decide which of an owner's posts are the same dwelling.

Outdoor photos are noise (two different houses can share a landscape shot),
so they are dropped first. Posts are then linked when their indoor photo
embeddings match under the similarity rule: either two distinct photo pairs
above the high threshold, or a single near-exact pair. Connected components
of linked posts become residence clusters.
"""

from __future__ import annotations

import datetime as dt
from dataclasses import dataclass, field

import numpy as np

from .entities import Listing, PhotoRecord
from .errors import ConfigError, ContractViolationError, DegenerateVectorError


@dataclass(frozen=True)
class SimilarityThresholds:
    """Pairing thresholds for the same-residence rule.

    pair_high is the "95% similarity" bound; pair_exact stands in for the
    "100% similarity" clause (exact 1.0 is unattainable in floating point
    for independently encoded images, so it defaults to 0.999).
    """

    pair_high: float = 0.95
    pair_exact: float = 0.999
    min_high_pairs: int = 2

    def __post_init__(self) -> None:
        if not (0.0 < self.pair_high < self.pair_exact <= 1.0):
            raise ConfigError(
                f"need 0 < pair_high < pair_exact <= 1, got {self.pair_high}, {self.pair_exact}"
            )
        if self.min_high_pairs < 1:
            raise ConfigError("min_high_pairs must be >= 1")


@dataclass
class IndoorFilter:
    kept: list[PhotoRecord]
    unknown_kept: int


def filter_indoor(photos: list[PhotoRecord]) -> IndoorFilter:
    """Drop outdoor photos; keep indoor ones and, conservatively, unknowns.

    Losing true indoor evidence is worse than keeping an ambiguous photo
    (over-merging is prevented by the similarity thresholds, not by the
    filter), so unknown-labelled photos stay in and are tallied.
    """
    kept = [p for p in photos if p.scene_label != "outdoor"]
    unknown = sum(1 for p in kept if p.scene_label == "unknown")
    return IndoorFilter(kept=kept, unknown_kept=unknown)


def cosine_similarity(u: np.ndarray, v: np.ndarray) -> float:
    """Cosine of the angle between two vectors, clamped to [-1, 1]."""
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape:
        raise ContractViolationError(f"dimension mismatch: {u.shape} vs {v.shape}")
    nu = float(np.linalg.norm(u))
    nv = float(np.linalg.norm(v))
    if nu == 0.0 or nv == 0.0:
        raise DegenerateVectorError("cosine similarity undefined for zero-norm vector")
    return float(np.clip(np.dot(u, v) / (nu * nv), -1.0, 1.0))


@dataclass
class MatchEvidence:
    """Outcome of a same-residence comparison between two posts."""

    same: bool
    reason: str
    pairs: list[tuple[str, str, float]] = field(default_factory=list)


def _similarity_matrix(photos_a: list[PhotoRecord], photos_b: list[PhotoRecord]) -> np.ndarray:
    a = np.stack([p.embedding for p in photos_a])
    b = np.stack([p.embedding for p in photos_b])
    an = a / np.linalg.norm(a, axis=1, keepdims=True)
    bn = b / np.linalg.norm(b, axis=1, keepdims=True)
    return np.clip(an @ bn.T, -1.0, 1.0)


def _max_bipartite_matching(adjacency: list[list[int]], n_right: int) -> list[tuple[int, int]]:
    """Kuhn's augmenting-path matching; photo counts per post are tiny."""
    match_right: list[int | None] = [None] * n_right

    def try_augment(left: int, visited: set[int]) -> bool:
        for right in adjacency[left]:
            if right in visited:
                continue
            visited.add(right)
            if match_right[right] is None or try_augment(match_right[right], visited):
                match_right[right] = left
                return True
        return False

    for left in range(len(adjacency)):
        try_augment(left, set())
    return [(left, right) for right, left in enumerate(match_right) if left is not None]


def posts_same_residence(
    photos_a: list[PhotoRecord],
    photos_b: list[PhotoRecord],
    thresholds: SimilarityThresholds = SimilarityThresholds(),
) -> MatchEvidence:
    """Apply the same-residence rule to two indoor-filtered photo sets.

    True when (a) a matching of at least min_high_pairs photo pairs exists
    with every pair above pair_high and distinct photos on both sides, or
    (b) any single pair reaches pair_exact. Empty photo lists are not an
    error: they simply cannot establish a link.
    """
    photos_a = [p for p in photos_a if float(np.linalg.norm(p.embedding)) > 0.0]
    photos_b = [p for p in photos_b if float(np.linalg.norm(p.embedding)) > 0.0]
    if not photos_a or not photos_b:
        return MatchEvidence(same=False, reason="insufficient photos")

    sims = _similarity_matrix(photos_a, photos_b)

    exact = np.argwhere(sims >= thresholds.pair_exact)
    if exact.size:
        i, j = min((int(i), int(j)) for i, j in exact)
        score = float(sims[i, j])
        return MatchEvidence(
            same=True,
            reason="exact pair",
            pairs=[(photos_a[i].photo_id, photos_b[j].photo_id, score)],
        )

    adjacency = [
        [j for j in range(len(photos_b)) if sims[i, j] > thresholds.pair_high]
        for i in range(len(photos_a))
    ]
    matching = _max_bipartite_matching(adjacency, len(photos_b))
    if len(matching) >= thresholds.min_high_pairs:
        pairs = sorted(
            (photos_a[i].photo_id, photos_b[j].photo_id, float(sims[i, j]))
            for i, j in matching
        )
        return MatchEvidence(same=True, reason="high-similarity pairs", pairs=pairs)
    return MatchEvidence(same=False, reason="no qualifying pairs")


@dataclass(frozen=True)
class ResidenceCluster:
    """A group of posts judged to be one dwelling."""

    cluster_id: str
    owner_id: str
    post_ids: frozenset[str]
    presumed_principal: bool


@dataclass
class ClusterEdge:
    post_a: str
    post_b: str
    evidence: MatchEvidence


def link_posts(
    post_ids: list[str],
    photos_by_post: dict[str, list[PhotoRecord]],
    thresholds: SimilarityThresholds = SimilarityThresholds(),
) -> tuple[list[set[str]], list[ClusterEdge]]:
    """Partition posts into same-residence components.

    Returns the partition (components keyed by nothing, sorted for
    determinism) plus the qualifying pairwise edges with their evidence.
    Input order never matters: posts are processed sorted by id.
    """
    ordered = sorted(set(post_ids))
    parent = {p: p for p in ordered}

    def find(x: str) -> str:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    edges: list[ClusterEdge] = []
    for i, a in enumerate(ordered):
        for b in ordered[i + 1 :]:
            evidence = posts_same_residence(
                photos_by_post.get(a, []), photos_by_post.get(b, []), thresholds
            )
            if evidence.same:
                edges.append(ClusterEdge(a, b, evidence))
                ra, rb = find(a), find(b)
                if ra != rb:
                    parent[max(ra, rb)] = min(ra, rb)

    components: dict[str, set[str]] = {}
    for p in ordered:
        components.setdefault(find(p), set()).add(p)
    partition = [components[root] for root in sorted(components)]
    return partition, edges


def _recent_reviews(cluster_posts: set[str], counts: dict[str, int]) -> int:
    return sum(counts.get(p, 0) for p in cluster_posts)


def _earliest_created(cluster_posts: set[str], created: dict[str, dt.date]) -> dt.date:
    return min(created[p] for p in cluster_posts)


PRINCIPAL_STRATEGIES = ("most_reviews", "earliest_created", "smallest_id")


def select_principal(
    partition: list[set[str]],
    recent_review_counts: dict[str, int],
    created_dates: dict[str, dt.date],
    strategy: str = "most_reviews",
) -> set[str]:
    """Pick the presumed-principal cluster from a partition of one owner's posts.

    Ties always resolve the same way (earliest created date, then smallest
    cluster id) so runs are reproducible.
    """
    if strategy not in PRINCIPAL_STRATEGIES:
        raise ConfigError(f"unknown principal strategy {strategy!r}")
    if not partition:
        raise ConfigError("cannot select a principal from an empty partition")

    def sort_key(cluster_posts: set[str]):
        cid = min(cluster_posts)
        if strategy == "most_reviews":
            return (
                -_recent_reviews(cluster_posts, recent_review_counts),
                _earliest_created(cluster_posts, created_dates),
                cid,
            )
        if strategy == "earliest_created":
            return (_earliest_created(cluster_posts, created_dates), cid)
        return (cid,)

    return min(partition, key=sort_key)


def cluster_residences(
    owner_id: str,
    posts: list[Listing],
    photos_by_post: dict[str, list[PhotoRecord]],
    thresholds: SimilarityThresholds = SimilarityThresholds(),
    recent_review_counts: dict[str, int] | None = None,
    strategy: str = "most_reviews",
) -> tuple[list[ResidenceCluster], list[ClusterEdge]]:
    """Cluster one owner's posts into residences and pick the presumed principal.

    The regulation never says which dwelling is the principal residence,
    so the choice is a configurable strategy; the default presumes the
    cluster with the most reviews in the window is where the owner lives
    or pays most attention. Ties fall back to earliest created date, then
    smallest cluster id. Exactly one cluster per owner is marked principal.
    """
    if strategy not in PRINCIPAL_STRATEGIES:
        raise ConfigError(f"unknown principal strategy {strategy!r}")
    if not posts:
        return [], []
    counts = recent_review_counts or {}
    created = {p.post_id: p.created_date for p in posts}

    partition, edges = link_posts([p.post_id for p in posts], photos_by_post, thresholds)
    principal_posts = select_principal(partition, counts, created, strategy)
    clusters = [
        ResidenceCluster(
            cluster_id=min(cluster_posts),
            owner_id=owner_id,
            post_ids=frozenset(cluster_posts),
            presumed_principal=cluster_posts is principal_posts,
        )
        for cluster_posts in partition
    ]
    return clusters, edges
