"""Occupancy estimation from review counts, with the sentiment-adjusted rate.

The base model assumes half of all stays leave a review:

    nights = reviews / 0.5 * max(4.6, min_nights)

The adjusted model nudges the review rate by a tenth of the mean review
sentiment. As the formula is written, better reviews RAISE the assumed
review rate and therefore LOWER the nights estimate; an invert switch
exists for the opposite reading, but nothing flips silently.
"""

import datetime as dt

from rpzaudit.entities import Review
from rpzaudit.occupancy import (
    builtin_lexicon_path,
    estimate_listing_occupancy,
    estimate_occupancy,
    load_lexicon,
    reviews_in_window,
    score_text,
    sentiment_bias,
)

lexicon = load_lexicon(builtin_lexicon_path())
print(f"starter lexicon: {len(lexicon.entries)} tokens, negators {sorted(lexicon.negators)}")

for text in ("great place, spotless and cosy", "dirty and noisy, never again",
             "not great", "stayed two nights"):
    print(f"  score({text!r}) = {score_text(text, lexicon):+.3f}")

# The bias is a tenth of the sentiment score.
for score in (1.0, 0.0, -1.0):
    print(f"  bias at sentiment {score:+.0f}: {sentiment_bias(score):+.2f}")

# Ten reviews in a year, minimum stay two nights:
raw, capped = estimate_occupancy(10, 0.0, 2)
print(f"neutral reviews:   10 / 0.50 * 4.6 = {raw:.2f} nights")
raw, _ = estimate_occupancy(10, 0.1, 2)
print(f"glowing reviews:   10 / 0.60 * 4.6 = {raw:.2f} nights (as written: fewer)")
raw, _ = estimate_occupancy(10, -0.1, 2)
print(f"terrible reviews:  10 / 0.40 * 4.6 = {raw:.2f} nights (as written: more)")

# The full per-listing path: window the reviews, score them, estimate.
as_of = dt.date(2023, 6, 1)
reviews = [
    Review("r1", "post-1", as_of - dt.timedelta(days=30), "great place, spotless and cosy"),
    Review("r2", "post-1", as_of - dt.timedelta(days=90), "lovely host, very comfortable"),
    Review("r3", "post-1", as_of - dt.timedelta(days=200), "great location"),
    Review("r4", "post-1", as_of - dt.timedelta(days=500), "ancient review, outside the window"),
]
windowed = reviews_in_window(reviews, as_of, 365)
print(f"reviews in the 365-day window: {len(windowed)} of {len(reviews)}")

estimate, _ = estimate_listing_occupancy("post-1", reviews, min_nights=2, as_of=as_of, lexicon=lexicon)
print(f"sentiment {estimate.sentiment_score:+.3f}, bias {estimate.sentiment_bias:+.4f} "
      f"-> {estimate.raw_nights:.1f} nights (capped {estimate.capped_nights:.1f})")

flipped, _ = estimate_listing_occupancy("post-1", reviews, min_nights=2, as_of=as_of,
                                        lexicon=lexicon, invert_bias=True)
print(f"same listing with invert_bias: {flipped.raw_nights:.1f} nights")
