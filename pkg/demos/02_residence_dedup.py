"""Residence deduplication: photo embeddings decide which posts share a dwelling.

Two posts are the same residence when two distinct photo pairs clear the
95% similarity bar (distinct on both sides), or any single pair is a
near-exact 99.9% match. Outdoor photos are dropped first: different houses
happily share the same landscape shot.
"""

import numpy as np

from rpzaudit.entities import PhotoRecord
from rpzaudit.residence import (
    SimilarityThresholds,
    cosine_similarity,
    filter_indoor,
    link_posts,
    posts_same_residence,
)


def photo(photo_id, post_id, vector, label="indoor"):
    return PhotoRecord(photo_id, post_id, label, np.asarray(vector, dtype=float))


# Build a tiny embedding space by hand. Post A and post B photograph the
# same kitchen and hallway; post C is a different dwelling.
kitchen = np.array([1.0, 0.0, 0.0, 0.0])
hallway = np.array([0.0, 1.0, 0.0, 0.0])
other_flat = np.array([0.0, 0.0, 1.0, 0.0])

def tilt(v, axis, cos_target):
    # unit vector at a chosen cosine from v, leaning toward another axis
    return v * cos_target + axis * np.sqrt(1 - cos_target**2)

post_a = [photo("a-kitchen", "A", kitchen), photo("a-hall", "A", hallway)]
post_b = [
    photo("b-kitchen", "B", tilt(kitchen, np.array([0, 0, 0, 1.0]), 0.97)),
    photo("b-hall", "B", tilt(hallway, np.array([0, 0, 0, 1.0]), 0.96)),
]
post_c = [photo("c-room", "C", other_flat), photo("c-room2", "C", tilt(other_flat, kitchen, 0.98))]

print("pairwise photo similarities, A vs B:")
for pa in post_a:
    for pb in post_b:
        print(f"  {pa.photo_id:10s} ~ {pb.photo_id:10s}: {cosine_similarity(pa.embedding, pb.embedding):.4f}")

verdict = posts_same_residence(post_a, post_b)
print(f"A same residence as B? {verdict.same} ({verdict.reason})")
for pair in verdict.pairs:
    print(f"  matched {pair[0]} ~ {pair[1]} at {pair[2]:.4f}")

print(f"A same residence as C? {posts_same_residence(post_a, post_c).same}")

# A shared outdoor photo must NOT link two different dwellings; the indoor
# filter removes it before comparison.
scenery = np.array([0.0, 0.0, 0.0, 1.0])
noisy_a = post_a + [photo("a-view", "A", scenery, label="outdoor")]
noisy_c = post_c + [photo("c-view", "C", scenery, label="outdoor")]
kept_a = filter_indoor(noisy_a).kept
kept_c = filter_indoor(noisy_c).kept
print(f"with outdoor photos removed: A~C {posts_same_residence(kept_a, kept_c).same}")
print(f"without the filter:          A~C {posts_same_residence(noisy_a, noisy_c).same}  <- the trap")

# Clustering is just connected components over the pairwise links.
photos_by_post = {"A": post_a, "B": post_b, "C": post_c}
partition, edges = link_posts(["A", "B", "C"], photos_by_post, SimilarityThresholds())
print(f"recovered residences: {[sorted(group) for group in partition]}")
