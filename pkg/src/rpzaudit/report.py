"""End-to-end pipeline orchestration and output serialization.

A run reads the five input files, validates referential integrity, assigns
zones, filters photos, clusters each owner's posts into residences,
matches permits, estimates occupancy, applies the rules, and writes three
files: findings.jsonl (one verdict per listing, sorted by post_id),
summary.json, and diagnostics.json. Outputs are byte-identical for
identical inputs and config: findings are sorted, mapping keys are sorted,
and every float is serialized with exactly six decimal places.
"""

from __future__ import annotations

import datetime as dt
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from . import __version__
from .errors import ConfigError, ValidationError
from .geo import find_zone
from .ingest import (
    Corpus,
    ParseResult,
    parse_embeddings,
    parse_listings,
    parse_owners,
    parse_permits,
    parse_reviews,
    parse_zones,
    validate_corpus,
)
from .occupancy import (
    OccupancyConfig,
    builtin_lexicon_path,
    estimate_listing_occupancy,
    identity_translator,
    load_lexicon,
    reviews_in_window,
)
from .permits import DEFAULT_PERMIT_KEYWORDS, filter_short_term_permits, match_permits
from .residence import (
    PRINCIPAL_STRATEGIES,
    ClusterEdge,
    SimilarityThresholds,
    filter_indoor,
    link_posts,
    select_principal,
)
from .rules import (
    UNDETECTABLE_EXEMPTIONS,
    BreachFinding,
    CorpusSummary,
    ListingEvidence,
    RuleThresholds,
    evaluate_corpus,
    summarize_findings,
)

EXIT_OK = 0
EXIT_MISSING_INPUT = 2
EXIT_VALIDATION = 3
EXIT_CONFIG = 4


@dataclass
class RunConfig:
    """Everything a pipeline run needs; mirrors the CLI flags."""

    listings: Path
    owners: Path
    reviews: Path
    zones: Path
    permits: Path
    embeddings: Path
    out_dir: Path
    as_of: dt.date
    lexicon: Path | None = None
    occupancy: OccupancyConfig = field(default_factory=OccupancyConfig)
    similarity: SimilarityThresholds = field(default_factory=SimilarityThresholds)
    rules: RuleThresholds = field(default_factory=RuleThresholds)
    permit_keywords: tuple[str, ...] = DEFAULT_PERMIT_KEYWORDS
    radius_m: float = 150.0
    principal_strategy: str = "most_reviews"
    global_dedup: bool = False
    invert_bias: bool = False
    workers: int = 1
    seed: int | None = None

    def __post_init__(self) -> None:
        if self.principal_strategy not in PRINCIPAL_STRATEGIES:
            raise ConfigError(f"unknown principal strategy {self.principal_strategy!r}")
        if self.radius_m <= 0:
            raise ConfigError("radius_m must be positive")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")

    def input_paths(self) -> dict[str, Path]:
        paths = {
            "listings": self.listings,
            "owners": self.owners,
            "reviews": self.reviews,
            "zones": self.zones,
            "permits": self.permits,
            "embeddings": self.embeddings,
        }
        if self.lexicon is not None:
            paths["lexicon"] = self.lexicon
        return paths

    def config_echo(self) -> dict:
        """Analytic parameters only: no filesystem paths, so two runs of the
        same data into different directories stay byte-identical."""
        return {
            "as_of": self.as_of.isoformat(),
            "radius_m": self.radius_m,
            "review_rate": self.occupancy.review_rate,
            "avg_nights": self.occupancy.avg_nights,
            "bias_factor": self.occupancy.bias_factor,
            "window_days": self.occupancy.window_days,
            "cap_nights": self.occupancy.cap_nights,
            "pair_high": self.similarity.pair_high,
            "pair_exact": self.similarity.pair_exact,
            "min_high_pairs": self.similarity.min_high_pairs,
            "near_days": self.rules.near_days,
            "over_days": self.rules.over_days,
            "long_term_nights": self.rules.long_term_nights,
            "permit_keywords": list(self.permit_keywords),
            "principal_strategy": self.principal_strategy,
            "global_dedup": self.global_dedup,
            "invert_bias": self.invert_bias,
        }


def load_run_config(config_path: str | Path | None = None, overrides: dict | None = None) -> RunConfig:
    """Build a RunConfig from an optional JSON config file plus overrides.

    Relative paths in the file resolve against the file's directory, so a
    generated world directory is self-contained and portable.
    """
    raw: dict = {}
    base = Path(".")
    if config_path is not None:
        config_path = Path(config_path)
        if not config_path.exists():
            raise FileNotFoundError(f"config file {config_path} does not exist")
        try:
            raw = json.loads(config_path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file {config_path}: {exc}") from None
        base = config_path.parent
    overrides = {k: v for k, v in (overrides or {}).items() if v is not None}

    def path_of(name: str, default: str | None = None) -> Path | None:
        if name in overrides:
            return Path(overrides[name])
        if name in raw:
            return base / raw[name]
        return Path(default) if default is not None else None

    required = {}
    for name in ("listings", "owners", "reviews", "zones", "permits", "embeddings"):
        value = path_of(name)
        if value is None:
            raise ConfigError(f"input path {name!r} missing from config and flags")
        required[name] = value

    as_of_raw = overrides.get("as_of", raw.get("as_of"))
    if as_of_raw is None:
        raise ConfigError("as_of date missing from config and flags")
    try:
        as_of = dt.date.fromisoformat(str(as_of_raw))
    except ValueError as exc:
        raise ConfigError(f"bad as_of date: {exc}") from None

    def scalar(name, default):
        return overrides.get(name, raw.get(name, default))

    try:
        occupancy = OccupancyConfig(**raw.get("occupancy", {}))
        similarity = SimilarityThresholds(**raw.get("similarity", {}))
        rule_thresholds = RuleThresholds(**raw.get("rules", {}))
    except TypeError as exc:
        raise ConfigError(f"bad config section: {exc}") from None

    out_dir = path_of("out", "out")
    lexicon = path_of("lexicon")
    return RunConfig(
        **required,
        out_dir=out_dir,
        as_of=as_of,
        lexicon=lexicon,
        occupancy=occupancy,
        similarity=similarity,
        rules=rule_thresholds,
        permit_keywords=tuple(raw.get("permit_keywords", DEFAULT_PERMIT_KEYWORDS)),
        radius_m=float(scalar("radius_m", 150.0)),
        principal_strategy=str(scalar("principal_strategy", "most_reviews")),
        global_dedup=bool(scalar("global_dedup", False)),
        invert_bias=bool(scalar("invert_bias", False)),
        workers=int(scalar("workers", 1)),
        seed=scalar("seed", None),
    )


# --- canonical JSON with fixed-precision floats


def _canonical(value) -> str:
    if value is None:
        return "null"
    if value is True:
        return "true"
    if value is False:
        return "false"
    if isinstance(value, float):
        return f"{value:.6f}"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, str):
        return json.dumps(value, ensure_ascii=False)
    if isinstance(value, (list, tuple)):
        return "[" + ", ".join(_canonical(v) for v in value) + "]"
    if isinstance(value, dict):
        items = sorted(value.items())
        return "{" + ", ".join(f"{json.dumps(str(k))}: {_canonical(v)}" for k, v in items) + "}"
    raise TypeError(f"cannot serialize {type(value)!r}")


def canonical_json(value) -> str:
    """JSON with sorted keys and floats at exactly six decimal places,
    guaranteeing byte-stable output files."""
    return _canonical(value)


# --- pipeline


@dataclass
class Diagnostics:
    rejects: dict[str, list[dict]] = field(default_factory=dict)
    warnings: list[str] = field(default_factory=list)
    unknown_label_photos: int = 0
    translator_failures: int = 0

    def counts(self) -> dict:
        return {
            "rejects": {k: len(v) for k, v in sorted(self.rejects.items())},
            "warnings": len(self.warnings),
            "unknown_label_photos": self.unknown_label_photos,
            "translator_failures": self.translator_failures,
        }

    def as_dict(self) -> dict:
        return {
            "rejects": {k: v for k, v in sorted(self.rejects.items())},
            "warnings": list(self.warnings),
            "unknown_label_photos": self.unknown_label_photos,
            "translator_failures": self.translator_failures,
        }


class MissingInputError(FileNotFoundError):
    pass


def _check_inputs(config: RunConfig) -> None:
    for name, path in config.input_paths().items():
        if not Path(path).exists():
            raise MissingInputError(f"{name} file {path} does not exist")


def load_corpus(config: RunConfig) -> tuple[Corpus, Diagnostics]:
    """Parse all inputs. Per-record failures become diagnostics; contract
    failures (duplicate ids, dimension drift, bad zones) raise."""
    _check_inputs(config)
    diagnostics = Diagnostics()

    def run_parser(parser, path: Path, label: str) -> ParseResult:
        with Path(path).open("r", encoding="utf-8") as fh:
            result = parser(fh)
        if result.rejects:
            diagnostics.rejects[label] = [r.as_dict() for r in result.rejects]
        diagnostics.warnings.extend(result.warnings)
        return result

    listings = run_parser(parse_listings, config.listings, "listings")
    owners = run_parser(parse_owners, config.owners, "owners")
    reviews = run_parser(parse_reviews, config.reviews, "reviews")
    permits = run_parser(parse_permits, config.permits, "permits")
    photos = run_parser(parse_embeddings, config.embeddings, "embeddings")
    zones = parse_zones(Path(config.zones).read_text(encoding="utf-8"))

    corpus = Corpus(
        listings=listings.entities,
        owners=owners.entities,
        reviews=reviews.entities,
        photos=photos.entities,
        permits=permits.entities,
        zones=zones,
    )
    return corpus, diagnostics


def _cluster_membership(
    corpus: Corpus, config: RunConfig, recent_counts: dict[str, int]
) -> tuple[dict[str, tuple[str, bool, tuple[str, ...]]], list[ClusterEdge]]:
    """Map post_id to (cluster_id, in_principal_cluster, cluster_post_ids).

    Per-owner by default; with global dedup one linking pass runs across
    all owners (to catch multi-account operators) and principal selection
    still happens per owner, over that owner's own posts.
    """
    photos_by_post = {
        pid: filter_indoor(photos).kept for pid, photos in corpus.photos_by_post().items()
    }
    created = {l.post_id: l.created_date for l in corpus.listings}
    by_owner = corpus.listings_by_owner()
    membership: dict[str, tuple[str, bool, tuple[str, ...]]] = {}
    all_edges: list[ClusterEdge] = []

    if config.global_dedup:
        partition, edges = link_posts(
            [l.post_id for l in corpus.listings], photos_by_post, config.similarity
        )
        all_edges.extend(edges)
        component_of = {}
        for component in partition:
            cid = min(component)
            for pid in component:
                component_of[pid] = (cid, component)
        for owner_id in sorted(by_owner):
            own_posts = {l.post_id for l in by_owner[owner_id]}
            own_views: dict[str, set[str]] = {}
            for pid in own_posts:
                cid, _ = component_of[pid]
                own_views.setdefault(cid, set()).add(pid)
            principal_view = select_principal(
                list(own_views.values()), recent_counts, created, config.principal_strategy
            )
            principal_cid = component_of[min(principal_view)][0]
            for pid in own_posts:
                cid, component = component_of[pid]
                membership[pid] = (cid, cid == principal_cid, tuple(sorted(component)))
        return membership, all_edges

    def cluster_one_owner(owner_id: str):
        posts = by_owner[owner_id]
        partition, edges = link_posts(
            [l.post_id for l in posts], photos_by_post, config.similarity
        )
        principal = select_principal(partition, recent_counts, created, config.principal_strategy)
        return owner_id, partition, principal, edges

    owner_ids = sorted(by_owner)
    if config.workers > 1:
        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            results = list(pool.map(cluster_one_owner, owner_ids))
    else:
        results = [cluster_one_owner(o) for o in owner_ids]
    results.sort(key=lambda item: item[0])

    for owner_id, partition, principal, edges in results:
        all_edges.extend(edges)
        for component in partition:
            cid = min(component)
            is_principal = component == principal
            for pid in component:
                membership[pid] = (cid, is_principal, tuple(sorted(component)))
    return membership, all_edges


def build_evidence(
    corpus: Corpus, config: RunConfig, diagnostics: Diagnostics
) -> list[ListingEvidence]:
    """Run the analysis stages and join their outputs per listing."""
    lexicon_path = config.lexicon if config.lexicon is not None else builtin_lexicon_path()
    lexicon = load_lexicon(lexicon_path)

    reviews_by_post = corpus.reviews_by_post()
    recent_counts = {
        pid: len(reviews_in_window(revs, config.as_of, config.occupancy.window_days))
        for pid, revs in reviews_by_post.items()
    }

    for photos in corpus.photos_by_post().values():
        diagnostics.unknown_label_photos += filter_indoor(photos).unknown_kept

    membership, edges = _cluster_membership(corpus, config, recent_counts)
    pairs_by_post: dict[str, list[tuple[str, str, float]]] = {}
    for edge in edges:
        pairs_by_post.setdefault(edge.post_a, []).extend(edge.evidence.pairs)
        pairs_by_post.setdefault(edge.post_b, []).extend(edge.evidence.pairs)

    permits = filter_short_term_permits(corpus.permits, config.permit_keywords)

    evidence: list[ListingEvidence] = []
    for listing in sorted(corpus.listings, key=lambda l: l.post_id):
        zone = find_zone(listing.public_location, corpus.zones)
        cluster_id, in_principal, cluster_posts = membership[listing.post_id]
        permit_match = match_permits(listing, permits, config.radius_m)
        estimate, failures = estimate_listing_occupancy(
            post_id=listing.post_id,
            reviews=reviews_by_post.get(listing.post_id, []),
            min_nights=listing.min_nights,
            as_of=config.as_of,
            cfg=config.occupancy,
            lexicon=lexicon,
            translator=identity_translator,
            invert_bias=config.invert_bias,
        )
        diagnostics.translator_failures += failures
        evidence.append(
            ListingEvidence(
                listing=listing,
                zone=zone,
                cluster_id=cluster_id,
                in_principal_cluster=in_principal,
                permit_match=permit_match,
                occupancy=estimate,
                cluster_post_ids=cluster_posts,
                similarity_pairs=sorted(set(pairs_by_post.get(listing.post_id, []))),
            )
        )
    return evidence


def finding_record(finding: BreachFinding) -> dict:
    return {
        "post_id": finding.post_id,
        "owner_id": finding.owner_id,
        "verdict": finding.verdict,
        "rule_code": finding.rule_code,
        "evidence": finding.evidence,
    }


def summary_document(summary: CorpusSummary, config: RunConfig, diagnostics: Diagnostics) -> dict:
    return {
        "artifact": "rpzaudit",
        "version": __version__,
        "config": config.config_echo(),
        "in_scope_count": summary.in_scope_count,
        "in_rpz_count": summary.in_rpz_count,
        "verdict_counts": summary.verdict_counts,
        "rule_code_counts": summary.rule_code_counts,
        "breach_rate": summary.breach_rate,
        "near_breach_count": summary.near_breach_count,
        "permit_multiplicity": summary.permit_multiplicity,
        "diagnostics": diagnostics.counts(),
        "limitations": [
            f"exemption not detectable from the data model: {name}"
            for name in UNDETECTABLE_EXEMPTIONS
        ],
    }


@dataclass
class RunResult:
    exit_code: int
    findings: list[BreachFinding] = field(default_factory=list)
    summary: CorpusSummary | None = None
    error: dict | None = None


def run_pipeline(config: RunConfig) -> RunResult:
    """Execute the full pipeline; write findings, summary, diagnostics.

    Exit codes: 0 success, 2 missing input, 3 validation failure (with
    violations.json), 4 configuration error. All output files land in
    config.out_dir.
    """
    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    try:
        corpus, diagnostics = load_corpus(config)
    except MissingInputError as exc:
        return RunResult(EXIT_MISSING_INPUT, error={"error": "missing_input", "detail": str(exc)})
    except OSError as exc:
        return RunResult(EXIT_MISSING_INPUT, error={"error": "io", "detail": str(exc)})
    except ValidationError as exc:
        _write(out / "violations.json", canonical_json(
            {"violations": [{"code": "parse_contract", "entity_id": "", "message": str(exc)}]}
        ))
        return RunResult(EXIT_VALIDATION, error={"error": "validation", "detail": str(exc)})

    report = validate_corpus(
        corpus.listings, corpus.owners, corpus.reviews, corpus.photos, corpus.permits,
        as_of=config.as_of,
    )
    if not report.ok:
        _write(out / "violations.json", canonical_json(
            {"violations": [v.as_dict() for v in report.violations]}
        ))
        return RunResult(
            EXIT_VALIDATION,
            error={"error": "validation", "detail": f"{len(report.violations)} violations"},
        )

    evidence = build_evidence(corpus, config, diagnostics)
    findings, summary = evaluate_corpus(evidence, config.rules)

    lines = [canonical_json(finding_record(f)) for f in findings]
    _write(out / "findings.jsonl", "".join(line + "\n" for line in lines))
    _write(out / "summary.json", canonical_json(summary_document(summary, config, diagnostics)) + "\n")
    _write(out / "diagnostics.json", canonical_json(diagnostics.as_dict()) + "\n")
    return RunResult(EXIT_OK, findings=findings, summary=summary)


def _write(path: Path, text: str) -> None:
    path.write_text(text, encoding="utf-8")


def load_findings(path: str | Path) -> list[BreachFinding]:
    """Parse a findings.jsonl file back into findings."""
    findings = []
    for line_no, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        try:
            row = json.loads(line)
            findings.append(
                BreachFinding(
                    post_id=row["post_id"],
                    owner_id=row["owner_id"],
                    verdict=row["verdict"],
                    rule_code=row["rule_code"],
                    evidence=row["evidence"],
                )
            )
        except (json.JSONDecodeError, KeyError, TypeError) as exc:
            raise ValidationError(f"findings line {line_no}: {exc}") from None
    return findings


def summarize(findings_path: str | Path) -> CorpusSummary:
    """Recompute the findings-derivable summary from a findings file alone.

    Must agree with the corresponding fields of the summary.json the run
    wrote; diagnostics and the config echo are not derivable from findings
    and live only in the original document.
    """
    return summarize_findings(load_findings(findings_path))


def summary_core_fields(document: dict) -> dict:
    """The slice of a summary.json document that summarize() reproduces."""
    return {
        "in_scope_count": document["in_scope_count"],
        "in_rpz_count": document["in_rpz_count"],
        "verdict_counts": document["verdict_counts"],
        "rule_code_counts": document["rule_code_counts"],
        "breach_rate": document["breach_rate"],
        "near_breach_count": document["near_breach_count"],
        "permit_multiplicity": document["permit_multiplicity"],
    }


def summary_as_core_fields(summary: CorpusSummary) -> dict:
    return {
        "in_scope_count": summary.in_scope_count,
        "in_rpz_count": summary.in_rpz_count,
        "verdict_counts": summary.verdict_counts,
        "rule_code_counts": summary.rule_code_counts,
        "breach_rate": summary.breach_rate,
        "near_breach_count": summary.near_breach_count,
        "permit_multiplicity": summary.permit_multiplicity,
    }


def format_summary(summary: CorpusSummary) -> str:
    lines = [
        f"listings in scope: {summary.in_scope_count}",
        f"listings in a rent pressure zone: {summary.in_rpz_count}",
        "breach rate: "
        + ("undefined (no in-zone listings)" if summary.breach_rate is None else f"{summary.breach_rate:.4f}"),
        f"near-breach listings: {summary.near_breach_count}",
        "verdicts:",
    ]
    for verdict, count in summary.verdict_counts.items():
        lines.append(f"  {verdict:17s} {count}")
    lines.append("rule codes:")
    for code, count in summary.rule_code_counts.items():
        lines.append(f"  {code:24s} {count}")
    if summary.permit_multiplicity:
        lines.append("listings matched per permit:")
        for pid, count in summary.permit_multiplicity.items():
            lines.append(f"  {pid}: {count}")
    return "\n".join(lines)
