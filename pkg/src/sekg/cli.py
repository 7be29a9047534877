"""Command-line pipeline: stages as subcommands over one config file.

Each stage reads the previous stage's artifact and writes its own before
the next begins, so every intermediate is inspectable as JSON lines or
CSV without this tool. With populated replay caches the whole bundle is
a pure function of (config, cache): rerunning reproduces it byte for
byte when ``deterministic`` is set (which drops wall-clock timestamps
from the run manifest).

Exit codes: 0 success, 2 configuration error, 3 provider error,
4 parse/data error.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import hashlib
import http.server
import json
import logging
import sys
import time
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

from . import extract, graph, ingest, normalize, stats
from .errors import ConfigurationError, DataError, PipelineError, ProviderError
from .extract import Brand
from .providers import (
    HttpEmbeddingProvider,
    HttpLLMProvider,
    ReplayCache,
    RetryPolicy,
    UnavailableProvider,
)

logger = logging.getLogger(__name__)

STAGES = ("ingest", "extract", "normalize", "graph", "stats")

ARTIFACTS = {
    "ingest": ("items.jsonl",),
    "extract": ("rows.jsonl", "relations.jsonl", "rejects.jsonl"),
    "normalize": (
        "canonical_map.csv",
        "rows_normalized.jsonl",
        "relations_normalized.jsonl",
    ),
    "graph": ("graph.json",),
    "stats": ("comparison.csv", "comparison_unmatched.csv"),
}

MANIFEST_NAME = "manifest.json"


def _brand_slug(brand: Brand) -> str:
    return brand.value.lower().replace(" ", "_")


@dataclass(frozen=True)
class PipelineConfig:
    """Validated, path-resolved view of one config file."""

    base_dir: Path
    output_dir: Path
    cache_dir: Path
    deterministic: bool
    # ingest
    threads: Path | None
    mode: str
    window: tuple[int, int] | None
    bot_authors: frozenset[str]
    keep_deleted_authors: bool
    # extract
    endpoint: str
    model_id: str
    prompt_template: Path | None
    max_in_flight: int
    retry_attempts: int
    retry_base_delay: float
    # normalize
    embed_endpoint: str
    embed_model_id: str
    threshold: float
    overrides: Path | None
    cluster_prompt_template: Path | None
    cluster_model_id: str
    # graph
    base_size: float
    base_thickness: float
    example_cap: int
    # stats
    faers: Path | None
    faers_totals: Path | None
    matchmap: Path | None
    brands: tuple[Brand, ...]
    fraction: float
    seed: int
    annotations: Path | None
    # raw key/value view used for hashing
    flattened: tuple[tuple[str, str], ...]

    def config_hash(self) -> str:
        text = "".join(f"{key}={value}\n" for key, value in self.flattened)
        return hashlib.sha256(text.encode("utf-8")).hexdigest()

    def artifact(self, name: str) -> Path:
        return self.output_dir / name


def _parse_bool(raw: str, what: str) -> bool:
    lowered = raw.strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ConfigurationError(f"{what} must be a boolean, got {raw!r}")


def _parse_brands(raw: str) -> tuple[Brand, ...]:
    names = [chunk.strip() for chunk in raw.split(",") if chunk.strip()]
    brands: list[Brand] = []
    lookup = {b.name.lower(): b for b in Brand}
    lookup.update({b.value.lower(): b for b in Brand})
    lookup.update({b.value.replace(" ", "").lower(): b for b in Brand})
    for name in names:
        brand = lookup.get(name.lower())
        if brand is None:
            raise ConfigurationError(f"unknown brand {name!r} in stats.brands")
        if brand not in brands:
            brands.append(brand)
    return tuple(brands)


def load_config(
    path: str | Path, overrides: list[str] | None = None
) -> PipelineConfig:
    """Parse and validate the INI config; ``--set section.key=value`` wins."""
    path = Path(path)
    if not path.exists():
        raise ConfigurationError(f"config file not found: {path}")
    parser = configparser.ConfigParser(interpolation=None)
    try:
        parser.read(path, encoding="utf-8")
    except configparser.Error as exc:
        raise ConfigurationError(f"config file not parseable: {exc}") from exc

    for item in overrides or []:
        if "=" not in item or "." not in item.split("=", 1)[0]:
            raise ConfigurationError(
                f"--set expects section.key=value, got {item!r}"
            )
        target, value = item.split("=", 1)
        section, key = target.split(".", 1)
        if not parser.has_section(section):
            parser.add_section(section)
        parser.set(section.strip(), key.strip(), value)

    base_dir = path.parent.resolve()

    def get(section: str, key: str, default: str = "") -> str:
        return parser.get(section, key, fallback=default).strip()

    def get_path(section: str, key: str, required: bool = False) -> Path | None:
        raw = get(section, key)
        if not raw:
            if required:
                raise ConfigurationError(f"config key {section}.{key} is required")
            return None
        resolved = (base_dir / raw).resolve() if not Path(raw).is_absolute() else Path(raw)
        if not resolved.exists():
            raise ConfigurationError(
                f"config key {section}.{key} points at a missing path: {resolved}"
            )
        return resolved

    def get_float(section: str, key: str, default: float) -> float:
        raw = get(section, key)
        if not raw:
            return default
        try:
            return float(raw)
        except ValueError:
            raise ConfigurationError(
                f"config key {section}.{key} must be a number, got {raw!r}"
            ) from None

    def get_int(section: str, key: str, default: int) -> int:
        raw = get(section, key)
        if not raw:
            return default
        try:
            return int(raw)
        except ValueError:
            raise ConfigurationError(
                f"config key {section}.{key} must be an integer, got {raw!r}"
            ) from None

    out_raw = get("pipeline", "output_dir", "out")
    cache_raw = get("pipeline", "cache_dir", "cache")
    output_dir = (base_dir / out_raw).resolve() if not Path(out_raw).is_absolute() else Path(out_raw)
    cache_dir = (base_dir / cache_raw).resolve() if not Path(cache_raw).is_absolute() else Path(cache_raw)

    window = None
    start_raw = get("ingest", "window_start")
    end_raw = get("ingest", "window_end")
    if bool(start_raw) != bool(end_raw):
        raise ConfigurationError(
            "window_start and window_end must be set together"
        )
    if start_raw:
        start = ingest.parse_window_date(start_raw)
        end = ingest.parse_window_date(end_raw, end_of_day=True)
        if start > end:
            raise ConfigurationError(
                f"collection window is reversed: {start_raw} > {end_raw}"
            )
        window = (start, end)

    threshold = get_float("normalize", "threshold", 0.9)
    if not 0.0 < threshold <= 1.0:
        raise ConfigurationError(
            f"normalize.threshold must be in (0, 1], got {threshold}"
        )
    fraction = get_float("stats", "fraction", 0.05)
    if not 0.0 < fraction <= 1.0:
        raise ConfigurationError(
            f"stats.fraction must be in (0, 1], got {fraction}"
        )

    mode = get("ingest", "mode", "threads")
    if mode not in ("threads", "flat"):
        raise ConfigurationError(f"ingest.mode must be threads or flat, got {mode!r}")

    bot_authors = frozenset(
        name.strip().lower()
        for name in get("ingest", "bot_authors", "AutoModerator").split(",")
        if name.strip()
    )

    model_id = get("extract", "model_id", "gpt-4o-mini")
    flattened = tuple(
        sorted(
            (f"{section}.{key}", value)
            for section in parser.sections()
            for key, value in parser.items(section)
        )
    )

    return PipelineConfig(
        base_dir=base_dir,
        output_dir=output_dir,
        cache_dir=cache_dir,
        deterministic=_parse_bool(
            get("pipeline", "deterministic", "false"), "pipeline.deterministic"
        ),
        threads=get_path("ingest", "threads"),
        mode=mode,
        window=window,
        bot_authors=bot_authors,
        keep_deleted_authors=_parse_bool(
            get("ingest", "keep_deleted_authors", "true"),
            "ingest.keep_deleted_authors",
        ),
        endpoint=get("extract", "endpoint"),
        model_id=model_id,
        prompt_template=get_path("extract", "prompt_template"),
        max_in_flight=get_int("extract", "max_in_flight", 4),
        retry_attempts=get_int("extract", "retry_attempts", 3),
        retry_base_delay=get_float("extract", "retry_base_delay", 1.0),
        embed_endpoint=get("normalize", "embed_endpoint"),
        embed_model_id=get("normalize", "embed_model_id", "all-MiniLM-L6-v2"),
        threshold=threshold,
        overrides=get_path("normalize", "overrides"),
        cluster_prompt_template=get_path("normalize", "cluster_prompt_template"),
        cluster_model_id=get("normalize", "cluster_model_id", model_id),
        base_size=get_float("graph", "base_size", 6.0),
        base_thickness=get_float("graph", "base_thickness", 1.5),
        example_cap=get_int("graph", "example_cap", 5),
        faers=get_path("stats", "faers"),
        faers_totals=get_path("stats", "faers_totals"),
        matchmap=get_path("stats", "matchmap"),
        brands=_parse_brands(get("stats", "brands")),
        fraction=fraction,
        seed=get_int("stats", "seed", 0),
        annotations=get_path("stats", "annotations"),
        flattened=flattened,
    )


def _llm_provider(config: PipelineConfig):
    if config.endpoint:
        return HttpLLMProvider(
            config.endpoint,
            retry=RetryPolicy(config.retry_attempts, config.retry_base_delay),
        )
    return UnavailableProvider("completion")


def _embed_provider(config: PipelineConfig):
    if config.embed_endpoint:
        return HttpEmbeddingProvider(
            config.embed_endpoint,
            retry=RetryPolicy(config.retry_attempts, config.retry_base_delay),
        )
    return UnavailableProvider("embedding")


def _template_text(path: Path | None, loader) -> str | None:
    return loader(path) if path is not None else None


def stage_ingest(config: PipelineConfig) -> dict[str, int]:
    if config.threads is None:
        raise ConfigurationError("ingest.threads is required for this stage")
    items = ingest.read_thread_dump(config.threads, config.mode)
    filter_config = ingest.FilterConfig(
        bot_authors=config.bot_authors,
        keep_deleted_authors=config.keep_deleted_authors,
        window_start=config.window[0] if config.window else None,
        window_end=config.window[1] if config.window else None,
    )
    kept = ingest.filter_items(items, filter_config)
    config.output_dir.mkdir(parents=True, exist_ok=True)
    ingest.write_items(kept, config.artifact("items.jsonl"))
    logger.info("ingest done total=%d kept=%d", len(items), len(kept))
    return {"items_total": len(items), "items_kept": len(kept)}


def stage_extract(config: PipelineConfig) -> dict[str, int]:
    items = ingest.read_items(config.artifact("items.jsonl"))
    provider = _llm_provider(config)
    cache = ReplayCache(config.cache_dir)
    template = _template_text(config.prompt_template, extract.load_prompt_template)
    raw_rows, rejects = extract.extract_corpus(
        items,
        provider,
        cache,
        config.model_id,
        template=template,
        max_in_flight=config.max_in_flight,
    )
    rows = extract.dedupe_records(raw_rows)
    relations = [r for _, rs in rows for r in rs]
    extract.write_rows(rows, config.artifact("rows.jsonl"))
    extract.write_relations(relations, config.artifact("relations.jsonl"))
    extract.write_rejects(rejects, config.artifact("rejects.jsonl"))
    logger.info(
        "extract done rows=%d relations=%d rejects=%d",
        len(rows),
        len(relations),
        len(rejects),
    )
    return {
        "rows": len(rows),
        "relations": len(relations),
        "rejects": len(rejects),
    }


def stage_normalize(config: PipelineConfig) -> dict[str, int]:
    rows = extract.read_rows(config.artifact("rows.jsonl"))
    relations = [r for _, rs in rows for r in rs]
    frequencies = normalize.term_frequencies(relations)
    terms = sorted(frequencies)
    cache = ReplayCache(config.cache_dir)
    embeddings = normalize.embed_terms(
        terms, _embed_provider(config), cache, config.embed_model_id
    )
    groups, residual = normalize.group_by_threshold(
        embeddings, config.threshold, frequencies
    )
    cluster_template = _template_text(
        config.cluster_prompt_template, normalize.load_cluster_template
    )
    assignment = (
        normalize.llm_cluster(
            residual,
            _llm_provider(config),
            cache,
            config.cluster_model_id,
            template=cluster_template,
        )
        if residual
        else {}
    )
    machine_map = normalize.compose_canonical_map(groups, assignment)
    overrides = (
        normalize.load_overrides(config.overrides) if config.overrides else {}
    )
    final_map = normalize.effective_map(machine_map, overrides)
    map_rows = normalize.write_canonical_map(
        final_map, config.artifact("canonical_map.csv")
    )
    normalized_rows = [
        (item, normalize.apply_canonical_map(rs, machine_map, overrides))
        for item, rs in rows
    ]
    extract.write_rows(normalized_rows, config.artifact("rows_normalized.jsonl"))
    normalized_relations = [r for _, rs in normalized_rows for r in rs]
    extract.write_relations(
        normalized_relations, config.artifact("relations_normalized.jsonl")
    )
    logger.info(
        "normalize done unique=%d residual=%d canonical=%d",
        len(terms),
        len(residual),
        len(final_map.groups),
    )
    return {
        "unique_terms": len(terms),
        "residual_terms": len(residual),
        "canonical_terms": len(final_map.groups),
        "map_rows": map_rows,
        "rows_normalized": len(normalized_rows),
        "relations_normalized": len(normalized_relations),
    }


def stage_graph(config: PipelineConfig) -> dict[str, int]:
    relations = extract.read_relations(config.artifact("relations_normalized.jsonl"))
    params = graph.RenderParams(
        base_size=config.base_size, base_thickness=config.base_thickness
    )
    kg = graph.build_graph(relations, example_cap=config.example_cap)
    document = graph.write_viewer_document(
        kg, params, config.artifact("graph.json"), corpus_window=config.window
    )
    logger.info(
        "graph done nodes=%d links=%d", len(document["nodes"]), len(document["links"])
    )
    return {
        "graph_nodes": len(document["nodes"]),
        "graph_links": len(document["links"]),
    }


def _zero_filled(
    counts: stats.SourceCounts, match_map: stats.MatchMap
) -> stats.SourceCounts:
    filled = dict(counts.counts)
    for reddit_term, _ in match_map.pairs:
        filled.setdefault(reddit_term, 0)
    return stats.SourceCounts(counts=filled, total=counts.total)


def _zero_filled_faers(
    summary: ingest.FaersSummary, match_map: stats.MatchMap
) -> ingest.FaersSummary:
    present = {term for term, _ in summary.rows}
    extra = [
        (pt, 0) for _, pt in match_map.pairs if pt not in present
    ]
    if not extra:
        return summary
    return ingest.FaersSummary(
        product=summary.product,
        rows=summary.rows + tuple(extra),
        total_reports=summary.total_reports,
        as_of_quarter=summary.as_of_quarter,
    )


def stage_stats(config: PipelineConfig) -> dict[str, int]:
    if config.faers is None or config.matchmap is None:
        raise ConfigurationError(
            "stats.faers and stats.matchmap are required for this stage"
        )
    rows = extract.read_rows(config.artifact("rows_normalized.jsonl"))
    match_map = stats.load_matchmap(config.matchmap)
    totals_path = config.faers_totals
    products = ingest.faers_products(
        totals_path
        if totals_path is not None
        else config.faers.with_name(
            config.faers.stem + "_totals" + config.faers.suffix
        )
    )
    summaries = {
        product: ingest.load_faers(config.faers, product, totals_path)
        for product in products
    }

    counts: dict[str, int] = {}
    overall = stats.compare(
        stats.reddit_term_counts(rows),
        stats.combine_faers(list(summaries.values())),
        match_map,
    )
    counts["comparison_rows"] = stats.write_comparison_csv(
        overall, config.artifact("comparison.csv")
    )
    counts["comparison_unmatched"] = stats.write_unmatched_csv(
        overall, config.artifact("comparison_unmatched.csv")
    )

    for brand in config.brands:
        product = stats.BRAND_PRODUCT[brand]
        if product not in summaries:
            raise ConfigurationError(
                f"registry product {product!r} for brand {brand.value!r} "
                "is absent from the registry summary"
            )
        result = stats.compare(
            _zero_filled(stats.reddit_term_counts(rows, brand), match_map),
            _zero_filled_faers(summaries[product], match_map),
            match_map,
            brand,
        )
        slug = _brand_slug(brand)
        counts[f"comparison_rows_{slug}"] = stats.write_comparison_csv(
            result, config.artifact(f"comparison_{slug}.csv")
        )
    logger.info("stats done rows=%d", counts["comparison_rows"])
    return counts


STAGE_FUNCTIONS = {
    "ingest": stage_ingest,
    "extract": stage_extract,
    "normalize": stage_normalize,
    "graph": stage_graph,
    "stats": stage_stats,
}


@dataclass(frozen=True)
class ArtifactBundle:
    output_dir: Path
    manifest: dict

    def artifact(self, name: str) -> Path:
        return self.output_dir / name


def _write_manifest(config: PipelineConfig, counts: dict[str, int]) -> dict:
    manifest: dict = {
        "config_hash": config.config_hash(),
        "counts": dict(sorted(counts.items())),
    }
    if not config.deterministic:
        manifest["generated_at"] = datetime.now(timezone.utc).isoformat()
    path = config.artifact(MANIFEST_NAME)
    config.output_dir.mkdir(parents=True, exist_ok=True)
    path.write_text(
        json.dumps(manifest, sort_keys=True, indent=2) + "\n", encoding="utf-8"
    )
    return manifest


def _stage_artifacts_exist(config: PipelineConfig, stage: str) -> bool:
    return all(config.artifact(name).exists() for name in ARTIFACTS[stage])


def run_pipeline(config: PipelineConfig, resume: bool = False) -> ArtifactBundle:
    """Run ingest → extract → normalize → graph → stats.

    With ``resume``, stages before the first missing artifact are
    skipped and their manifest counts are carried over from the previous
    run's manifest.
    """
    start_index = 0
    previous_counts: dict[str, int] = {}
    if resume:
        for i, stage in enumerate(STAGES):
            if not _stage_artifacts_exist(config, stage):
                start_index = i
                break
        else:
            start_index = len(STAGES)
        if start_index > 0:
            manifest_path = config.artifact(MANIFEST_NAME)
            if not manifest_path.exists():
                raise ConfigurationError(
                    "cannot resume: manifest.json from the previous run is missing"
                )
            previous_counts = json.loads(manifest_path.read_text())["counts"]

    counts: dict[str, int] = dict(previous_counts)
    for i, stage in enumerate(STAGES):
        if i < start_index:
            logger.info("pipeline skip stage=%s (resume)", stage)
            continue
        logger.info("pipeline start stage=%s", stage)
        started = time.monotonic()
        try:
            counts.update(STAGE_FUNCTIONS[stage](config))
        except PipelineError:
            logger.error("pipeline failed stage=%s", stage)
            raise
        _write_manifest(config, counts)
        logger.info(
            "pipeline done stage=%s elapsed=%.2fs", stage, time.monotonic() - started
        )
    manifest = _write_manifest(config, counts)
    return ArtifactBundle(output_dir=config.output_dir, manifest=manifest)


def cmd_sample_eval(config: PipelineConfig, out_path: Path | None) -> Path:
    rows = extract.read_rows(config.artifact("rows.jsonl"))
    sample = stats.sample_for_eval(rows, config.fraction, config.seed)
    path = out_path or config.artifact("eval_sample.csv")
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            [
                "relation_id",
                "text",
                "medication",
                "side_effect",
                "severity",
                "duration",
                "dosage",
                "description",
            ]
        )
        for item, relations in sample:
            for i, relation in enumerate(relations):
                writer.writerow(
                    [
                        f"{item.id}:{i}",
                        item.text,
                        relation.medication.value,
                        relation.side_effect,
                        relation.severity or "",
                        relation.duration or "",
                        relation.dosage or "",
                        relation.description,
                    ]
                )
    logger.info("sample-eval wrote rows=%d path=%s", len(sample), path)
    return path


def cmd_score_eval(config: PipelineConfig) -> tuple[float, float]:
    if config.annotations is None:
        raise ConfigurationError("stats.annotations is required for score-eval")
    side_effect, severity = stats.load_annotations(config.annotations)
    se_accuracy, _ = stats.score_annotations(side_effect)
    sev_accuracy, _ = stats.score_annotations(severity)
    print(f"side_effect_accuracy={se_accuracy:.4f}")
    print(f"severity_accuracy={sev_accuracy:.4f}")
    return se_accuracy, sev_accuracy


class _ViewerHandler(http.server.SimpleHTTPRequestHandler):
    doc_path: Path | None = None

    def translate_path(self, path: str) -> str:
        clean = path.split("?", 1)[0].split("#", 1)[0]
        if clean == "/graph.json" and self.doc_path is not None:
            return str(self.doc_path)
        return super().translate_path(path)

    def log_message(self, format: str, *args) -> None:
        logger.info("serve-viewer %s", format % args)


def make_viewer_server(
    root: Path, doc: Path | None, host: str = "127.0.0.1", port: int = 8000
) -> http.server.ThreadingHTTPServer:
    """Static server for the viewer bundle; the graph document is mapped
    to /graph.json regardless of where it lives."""
    handler = type(
        "BoundViewerHandler",
        (_ViewerHandler,),
        {"doc_path": doc.resolve() if doc else None},
    )

    def factory(*args, **kwargs):
        return handler(*args, directory=str(root), **kwargs)

    return http.server.ThreadingHTTPServer((host, port), factory)


def configure_logging(level: str) -> None:
    logging.basicConfig(
        level=getattr(logging, level.upper(), logging.INFO),
        format="%(levelname)s %(name)s %(message)s",
    )


def build_arg_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sekg",
        description="Side-effect knowledge-graph pipeline over discussion dumps",
    )
    parser.add_argument("--log-level", default="info", help="logging level")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_config_args(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", required=True, help="pipeline config file")
        p.add_argument(
            "--set",
            dest="overrides",
            action="append",
            default=[],
            metavar="SECTION.KEY=VALUE",
            help="override one config value (repeatable)",
        )

    for name, help_text in [
        ("ingest", "flatten and filter the thread dump"),
        ("extract", "extract relations from ingested items"),
        ("normalize", "consolidate side-effect terms"),
        ("build-graph", "build and export the knowledge graph"),
        ("compare", "compare crowdsourced terms against the registry"),
        ("sample-eval", "draw the annotation sample"),
        ("score-eval", "score annotator files by majority vote"),
        ("run", "run every stage in order"),
    ]:
        p = sub.add_parser(name, help=help_text)
        add_config_args(p)
        if name == "run":
            p.add_argument(
                "--resume",
                action="store_true",
                help="restart from the first missing artifact",
            )
        if name == "sample-eval":
            p.add_argument("--out", default=None, help="sample CSV destination")

    serve = sub.add_parser("serve-viewer", help="serve the viewer bundle")
    serve.add_argument("--root", required=True, help="viewer bundle directory")
    serve.add_argument("--doc", default=None, help="graph document to expose")
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=8000)
    return parser


_SINGLE_STAGE = {
    "ingest": ("ingest",),
    "extract": ("extract",),
    "normalize": ("normalize",),
    "build-graph": ("graph",),
    "compare": ("stats",),
}


def main(argv: list[str] | None = None) -> int:
    args = build_arg_parser().parse_args(argv)
    configure_logging(args.log_level)
    try:
        if args.command == "serve-viewer":
            server = make_viewer_server(
                Path(args.root),
                Path(args.doc) if args.doc else None,
                args.host,
                args.port,
            )
            logger.info(
                "serve-viewer listening on http://%s:%d/", args.host, args.port
            )
            try:
                server.serve_forever()
            except KeyboardInterrupt:
                pass
            finally:
                server.server_close()
            return 0

        config = load_config(args.config, args.overrides)
        if args.command == "run":
            run_pipeline(config, resume=args.resume)
        elif args.command in _SINGLE_STAGE:
            counts: dict[str, int] = {}
            manifest_path = config.artifact(MANIFEST_NAME)
            if manifest_path.exists():
                counts = json.loads(manifest_path.read_text())["counts"]
            for stage in _SINGLE_STAGE[args.command]:
                counts.update(STAGE_FUNCTIONS[stage](config))
            _write_manifest(config, counts)
        elif args.command == "sample-eval":
            cmd_sample_eval(config, Path(args.out) if args.out else None)
        elif args.command == "score-eval":
            cmd_score_eval(config)
        else:  # pragma: no cover - argparse enforces the choices
            raise ConfigurationError(f"unknown command {args.command!r}")
        return 0
    except ConfigurationError as exc:
        logger.error("configuration error: %s", exc)
        return 2
    except ProviderError as exc:
        logger.error("provider error: %s", exc)
        return 3
    except DataError as exc:
        logger.error("data error: %s", exc)
        return 4


if __name__ == "__main__":
    sys.exit(main())
