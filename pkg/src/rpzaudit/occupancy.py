"""Estimate yearly occupied nights per listing from review counts.

The base model assumes a fixed fraction of stays leave a review:

    nights = reviews / review_rate * max(avg_nights, min_nights)

The sentiment-adjusted variant adds a bias (review sentiment score times a
bias factor) to the review rate before dividing. As written, a positive
bias therefore lowers the estimate; an invert flag is provided for callers
who want the opposite reading, but it is never applied silently.

Sentiment scoring is a deterministic lexicon lookup rather than a
pretrained third-party analyzer: token polarities come from a TSV file, a
preceding negator flips the next matched token, and a review's score is
the mean polarity of its matched tokens.
"""

from __future__ import annotations

import datetime as dt
import json
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

from .entities import Review
from .errors import ConfigError, ContractViolationError

_TOKEN_RE = re.compile(r"[^\W_]+", re.UNICODE)

DEFAULT_NEGATORS = frozenset({"not", "no", "never"})


@dataclass(frozen=True)
class OccupancyConfig:
    review_rate: float = 0.5
    avg_nights: float = 4.6
    bias_factor: float = 0.1
    window_days: int = 365
    cap_nights: int = 365

    def __post_init__(self) -> None:
        if not 0.0 < self.review_rate <= 1.0:
            raise ConfigError(f"review_rate must be in (0, 1], got {self.review_rate}")
        if self.avg_nights <= 0:
            raise ConfigError("avg_nights must be positive")
        if self.bias_factor < 0:
            raise ConfigError("bias_factor must be non-negative")
        if self.review_rate - self.bias_factor <= 0.0:
            raise ConfigError(
                "review_rate minus worst-case negative bias must stay positive "
                f"({self.review_rate} - {self.bias_factor} <= 0)"
            )
        if self.window_days <= 0 or self.cap_nights <= 0:
            raise ConfigError("window_days and cap_nights must be positive")


@dataclass
class SentimentLexicon:
    entries: dict[str, float] = field(default_factory=dict)
    negators: frozenset[str] = DEFAULT_NEGATORS

    def __post_init__(self) -> None:
        for token, polarity in self.entries.items():
            if token != token.lower():
                raise ConfigError(f"lexicon token {token!r} must be lower-case")
            if not -1.0 <= polarity <= 1.0:
                raise ConfigError(f"polarity for {token!r} outside [-1, 1]: {polarity}")


def load_lexicon(path: str | Path, negators: frozenset[str] = DEFAULT_NEGATORS) -> SentimentLexicon:
    """Load a lexicon file of `token<TAB>polarity` lines. '#' lines are comments."""
    entries: dict[str, float] = {}
    for line_no, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 2:
            raise ConfigError(f"lexicon line {line_no}: expected token<TAB>polarity")
        token, polarity_text = parts
        try:
            polarity = float(polarity_text)
        except ValueError:
            raise ConfigError(f"lexicon line {line_no}: bad polarity {polarity_text!r}") from None
        entries[token.strip().lower()] = polarity
    return SentimentLexicon(entries=entries, negators=negators)


def builtin_lexicon_path() -> Path:
    """Path of the starter lexicon shipped with the package."""
    return Path(__file__).parent / "data" / "lexicon.tsv"


# A translator maps (review_id, text) to text. Identity is the default;
# anything network-backed lives behind this same signature.
Translator = Callable[[str, str], str]


def identity_translator(review_id: str, text: str) -> str:
    return text


class CachingHttpTranslator:
    """Stub client for an external translation service with an on-disk cache.

    The cache file is JSON keyed by review_id, so re-runs never re-translate.
    A transport callable may be injected for tests; the default posts the
    text to the configured endpoint. Network use is never required by the
    pipeline itself.
    """

    def __init__(self, endpoint: str, cache_path: str | Path, transport: Callable[[str], str] | None = None):
        self.endpoint = endpoint
        self.cache_path = Path(cache_path)
        self._transport = transport or self._http_transport
        self._cache: dict[str, str] = {}
        if self.cache_path.exists():
            self._cache = json.loads(self.cache_path.read_text(encoding="utf-8"))

    def _http_transport(self, text: str) -> str:
        import urllib.request

        payload = json.dumps({"text": text}).encode("utf-8")
        request = urllib.request.Request(
            self.endpoint, data=payload, headers={"Content-Type": "application/json"}
        )
        with urllib.request.urlopen(request, timeout=30) as response:
            return json.loads(response.read().decode("utf-8"))["text"]

    def __call__(self, review_id: str, text: str) -> str:
        if review_id in self._cache:
            return self._cache[review_id]
        translated = self._transport(text)
        self._cache[review_id] = translated
        self.cache_path.write_text(
            json.dumps(self._cache, ensure_ascii=False, sort_keys=True), encoding="utf-8"
        )
        return translated


def reviews_in_window(reviews: list[Review], as_of: dt.date, window_days: int = 365) -> list[Review]:
    """Reviews dated within (as_of - window_days, as_of]. Half-open on the
    old side: a review exactly window_days old has aged out."""
    floor = as_of - dt.timedelta(days=window_days)
    return [r for r in reviews if floor < r.date <= as_of]


def score_text(text: str, lexicon: SentimentLexicon) -> float:
    """Score one review text: mean polarity of lexicon-matched tokens,
    with a preceding negator flipping the next matched token's sign.
    No matched tokens means a neutral 0."""
    matched: list[float] = []
    negate = False
    for token in _TOKEN_RE.findall(text.lower()):
        if token in lexicon.negators:
            negate = True
            continue
        polarity = lexicon.entries.get(token)
        if polarity is None:
            continue
        matched.append(-polarity if negate else polarity)
        negate = False
    if not matched:
        return 0.0
    return max(-1.0, min(1.0, sum(matched) / len(matched)))


@dataclass
class SentimentResult:
    score: float
    translator_failures: int = 0


def sentiment_score(
    reviews: list[Review],
    lexicon: SentimentLexicon,
    translator: Translator = identity_translator,
) -> SentimentResult:
    """Average sentiment over already-windowed reviews, in [-1, 1].

    A translator failure neutralises that one review (score 0) and is
    tallied; it never aborts the run. No reviews means 0.
    """
    if not reviews:
        return SentimentResult(score=0.0)
    failures = 0
    total = 0.0
    for review in reviews:
        try:
            text = translator(review.review_id, review.text)
        except Exception:
            failures += 1
            continue
        total += score_text(text, lexicon)
    score = max(-1.0, min(1.0, total / len(reviews)))
    return SentimentResult(score=score, translator_failures=failures)


def sentiment_bias(score: float, bias_factor: float = 0.1) -> float:
    """Bias applied to the review rate: score times the bias factor."""
    if not -1.0 <= score <= 1.0:
        raise ContractViolationError(f"sentiment score {score} outside [-1, 1]")
    return score * bias_factor


def estimate_occupancy(
    review_count: int,
    bias: float,
    min_nights: int,
    cfg: OccupancyConfig = OccupancyConfig(),
) -> tuple[float, float]:
    """Estimated (raw_nights, capped_nights) for one listing.

    raw = review_count / (review_rate + bias) * max(avg_nights, min_nights).
    Passing bias=0 gives the base fixed-rate model exactly. The capped
    value never exceeds cap_nights; a year has only so many nights, and
    the 90-day rule downstream needs a physically meaningful number.
    """
    if review_count < 0:
        raise ContractViolationError(f"review_count must be >= 0, got {review_count}")
    denominator = cfg.review_rate + bias
    if denominator <= 0.0:
        raise ConfigError(f"review rate plus bias must be positive, got {denominator}")
    raw = review_count / denominator * max(cfg.avg_nights, float(min_nights))
    return raw, min(raw, float(cfg.cap_nights))


@dataclass
class OccupancyEstimate:
    post_id: str
    review_count_window: int
    sentiment_score: float
    sentiment_bias: float
    raw_nights: float
    capped_nights: float


def estimate_listing_occupancy(
    post_id: str,
    reviews: list[Review],
    min_nights: int,
    as_of: dt.date,
    cfg: OccupancyConfig = OccupancyConfig(),
    lexicon: SentimentLexicon | None = None,
    translator: Translator = identity_translator,
    invert_bias: bool = False,
) -> tuple[OccupancyEstimate, int]:
    """Full per-listing estimate: window reviews, score sentiment, apply
    the biased model. Returns the estimate plus the translator failure
    count for diagnostics. invert_bias negates the bias for callers who
    read "better reviews, more occupancy"; the recorded bias is the one
    actually applied."""
    lexicon = lexicon if lexicon is not None else SentimentLexicon()
    windowed = reviews_in_window(reviews, as_of, cfg.window_days)
    sentiment = sentiment_score(windowed, lexicon, translator)
    bias = sentiment_bias(sentiment.score, cfg.bias_factor)
    if invert_bias:
        bias = -bias
    raw, capped = estimate_occupancy(len(windowed), bias, min_nights, cfg)
    estimate = OccupancyEstimate(
        post_id=post_id,
        review_count_window=len(windowed),
        sentiment_score=sentiment.score,
        sentiment_bias=bias,
        raw_nights=raw,
        capped_nights=capped,
    )
    return estimate, sentiment.translator_failures
