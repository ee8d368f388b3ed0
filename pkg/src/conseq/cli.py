"""Command-line entry points.

Subcommands map one-to-one onto service operations:

    conseq serve          run the HTTP service (plus the update scheduler)
    conseq pipeline run   distill a file of articles into cards
    conseq bulk-import    fetch a CSV of URLs and pipeline them
    conseq eval           metrics / agreement / baseline training on a CSV
    conseq export         write the canonical catalog interchange files
    conseq import         load catalog interchange files

Flags mirror config keys; precedence is flags > CONSEQ_* env > config file.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
import threading
from pathlib import Path

import httpx

from .api import create_app, run_bulk_tasks
from .config import Config, build_classifier, build_gateway, load_config, load_sources
from .errors import CatalogError
from .evalkit import (
    cohen_kappa,
    compute_metrics,
    raw_agreement,
    read_eval_csv,
    render_funnel_table,
    split_train_test,
)
from .gateway.baseline import predict_title, save_model, train_title_baseline
from .model import Article, PipelineReport, TechDomain
from .pipeline import run_pipeline, write_golden_cards
from .scheduler import UpdateScheduler, build_weekly_task
from .store import CatalogStore


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON config file")
    p.add_argument("--db", dest="db_path", help="catalog database path")


def _build_config(args: argparse.Namespace, **extra) -> Config:
    overrides = {"db_path": getattr(args, "db_path", None), **extra}
    return load_config(args.config, **overrides)


def _open_store(config: Config, *, with_embedder: bool = True) -> CatalogStore:
    embedder = None
    if with_embedder:
        gateway = build_gateway(config)
        embedder = gateway.embed
    return CatalogStore(config.db_path, embedder=embedder)


def cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    config = _build_config(args, host=args.host, port=args.port)
    gateway = build_gateway(config)
    classifier = build_classifier(config)
    store = CatalogStore(config.db_path, embedder=gateway.embed)

    if args.demo_dir and store.count_cards() == 0:
        demo = Path(args.demo_dir)
        count = store.import_catalog(demo / "cards.ndjson", demo / "sidecar.json")
        print(f"seeded demo catalog: {count} cards", file=sys.stderr)

    scheduler = None
    stop = threading.Event()
    if not args.no_scheduler:
        task = build_weekly_task(
            store,
            gateway,
            classifier,
            load_sources(config),
            parallelism=config.parallelism,
            char_budget=config.truncation_chars,
            reports_dir=config.reports_dir,
        )
        scheduler = UpdateScheduler(task, cadence_days=config.cadence_days)
        thread = threading.Thread(
            target=scheduler.run_forever, args=(stop,), daemon=True
        )
        thread.start()

    app = create_app(store, gateway, classifier, config, scheduler=scheduler)
    try:
        uvicorn.run(app, host=config.host, port=config.port, log_level="warning")
    finally:
        stop.set()
    return 0


def _read_articles(path: str) -> list[Article]:
    articles = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if line.strip():
            articles.append(Article.from_dict(json.loads(line)))
    return articles


def cmd_pipeline_run(args: argparse.Namespace) -> int:
    config = _build_config(args)
    gateway = build_gateway(config)
    classifier = build_classifier(config)
    articles = _read_articles(args.articles)

    domain = TechDomain(name=args.domain, keywords=(args.domain,))
    cards, report = run_pipeline(
        articles,
        domain,
        classifier,
        gateway,
        parallelism=args.parallelism or config.parallelism,
        char_budget=config.truncation_chars,
    )
    if args.out:
        Path(args.out).write_bytes(write_golden_cards(cards))
    if args.report:
        Path(args.report).write_text(
            json.dumps(report.to_dict(), indent=1, sort_keys=True), encoding="utf-8"
        )
    if args.publish:
        store = _open_store(config)
        for article in articles:
            store.add_article(article)
        for card in cards:
            store.upsert_card(card)
    print(render_funnel_table(report), end="")
    return 0


def cmd_bulk_import(args: argparse.Namespace) -> int:
    config = _build_config(args)
    gateway = build_gateway(config)
    classifier = build_classifier(config)
    store = _open_store(config)

    rows = Path(args.csv).read_text(encoding="utf-8")
    parsed = list(csv.reader(io.StringIO(rows)))
    if not parsed or "url" not in [h.strip().lower() for h in parsed[0]]:
        print("error: CSV needs a header row with a 'url' column", file=sys.stderr)
        return 1
    header = [h.strip().lower() for h in parsed[0]]
    url_col = header.index("url")
    domain_col = header.index("domain") if "domain" in header else None
    tasks = []
    for row in parsed[1:]:
        if not row or not row[url_col].strip():
            continue
        domain = (
            row[domain_col].strip()
            if domain_col is not None and len(row) > domain_col and row[domain_col].strip()
            else args.domain
        )
        if not domain:
            print("error: row lacks a domain and no --domain given", file=sys.stderr)
            return 1
        tasks.append((row[url_col].strip(), domain))

    result = run_bulk_tasks(
        store, gateway, classifier, config, tasks, client=httpx.Client(timeout=30.0)
    )
    for report_dict in result["domains"]:
        report = PipelineReport(
            domain=report_dict["domain"],
            retrieved=report_dict["retrieved"],
            after_title_filter=report_dict["after_title_filter"],
            after_content_filter=report_dict["after_content_filter"],
            cards_emitted=report_dict["cards_emitted"],
        )
        print(f"# domain: {report.domain}")
        print(render_funnel_table(report), end="")
    if result["fetch_errors"]:
        print(f"{len(result['fetch_errors'])} fetch errors:", file=sys.stderr)
        for err in result["fetch_errors"]:
            print(f"  {err['url']}: {err['message']}", file=sys.stderr)
    return 0


_TRUTHY = {"relevant", "1", "yes", "true", "y"}
_FALSY = {"irrelevant", "0", "no", "false", "n"}


def _to_bool_label(raw: str) -> bool:
    label = raw.strip().casefold()
    if label in _TRUTHY:
        return True
    if label in _FALSY:
        return False
    raise ValueError(f"unrecognized label {raw!r}")


def cmd_eval(args: argparse.Namespace) -> int:
    rows = read_eval_csv(Path(args.csv).read_text(encoding="utf-8"))
    width = len(rows[0])
    if width == 3:
        ann_a = [r[1] for r in rows]
        ann_b = [r[2] for r in rows]
        out = {
            "items": len(rows),
            "raw_agreement": raw_agreement(ann_a, ann_b),
            "cohen_kappa": cohen_kappa(ann_a, ann_b),
        }
    else:
        labeled = [(r[0], _to_bool_label(r[1])) for r in rows]
        train, test = split_train_test(labeled, ratio=args.ratio, seed=args.seed)
        model = train_title_baseline(train, seed=args.seed)
        preds = [
            "relevant" if predict_title(model, t) >= 0.5 else "irrelevant"
            for t, _ in test
        ]
        labels = ["relevant" if y else "irrelevant" for _, y in test]
        report = compute_metrics(preds, labels)
        out = {
            "items": len(rows),
            "train": len(train),
            "test": len(test),
            "accuracy": report.accuracy,
            "precision": report.precision,
            "recall": report.recall,
            "f1": report.f1,
        }
        if args.save_model:
            save_model(model, args.save_model)
            out["model_path"] = args.save_model
    print(json.dumps(out, indent=1, sort_keys=True))
    return 0


def cmd_export(args: argparse.Namespace) -> int:
    config = _build_config(args)
    store = _open_store(config, with_embedder=False)
    store.export_catalog(args.cards, args.sidecar)
    print(f"exported {store.count_cards()} cards to {args.cards}")
    return 0


def cmd_import(args: argparse.Namespace) -> int:
    config = _build_config(args)
    store = _open_store(config)
    count = store.import_catalog(args.cards, args.sidecar)
    print(f"imported {count} cards from {args.cards}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="conseq")
    sub = parser.add_subparsers(dest="command", required=True)

    p_serve = sub.add_parser("serve", help="run the HTTP service")
    _add_config_flags(p_serve)
    p_serve.add_argument("--host", default=None)
    p_serve.add_argument("--port", type=int, default=None)
    p_serve.add_argument("--demo-dir", help="seed an empty catalog from this directory")
    p_serve.add_argument("--no-scheduler", action="store_true")
    p_serve.set_defaults(func=cmd_serve)

    p_pipe = sub.add_parser("pipeline", help="pipeline operations")
    pipe_sub = p_pipe.add_subparsers(dest="pipeline_command", required=True)
    p_run = pipe_sub.add_parser("run", help="distill articles into cards")
    _add_config_flags(p_run)
    p_run.add_argument("--domain", required=True)
    p_run.add_argument("--articles", required=True, help="NDJSON file of articles")
    p_run.add_argument("--out", help="write the card file here")
    p_run.add_argument("--report", help="write the JSON funnel report here")
    p_run.add_argument("--publish", action="store_true", help="store emitted cards")
    p_run.add_argument("--parallelism", type=int)
    p_run.set_defaults(func=cmd_pipeline_run)

    p_bulk = sub.add_parser("bulk-import", help="fetch and pipeline a CSV of URLs")
    _add_config_flags(p_bulk)
    p_bulk.add_argument("--csv", required=True)
    p_bulk.add_argument("--domain", help="default domain for rows without one")
    p_bulk.set_defaults(func=cmd_bulk_import)

    p_eval = sub.add_parser("eval", help="evaluate on a CSV dataset")
    p_eval.add_argument("--csv", required=True)
    p_eval.add_argument("--ratio", type=float, default=0.8)
    p_eval.add_argument("--seed", type=int, default=42)
    p_eval.add_argument("--save-model", help="save the trained baseline here")
    p_eval.set_defaults(func=cmd_eval)

    p_exp = sub.add_parser("export", help="export the catalog")
    _add_config_flags(p_exp)
    p_exp.add_argument("--cards", required=True)
    p_exp.add_argument("--sidecar", required=True)
    p_exp.set_defaults(func=cmd_export)

    p_imp = sub.add_parser("import", help="import a catalog export")
    _add_config_flags(p_imp)
    p_imp.add_argument("--cards", required=True)
    p_imp.add_argument("--sidecar", required=True)
    p_imp.set_defaults(func=cmd_import)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CatalogError as exc:
        print(f"error [{exc.code}]: {exc}", file=sys.stderr)
        return 1
    except (OSError, ValueError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
