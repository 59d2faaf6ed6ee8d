"""Command-line interface: batch counterpart of the interactive workflow.

Commands operate directly on a project file; serve starts the HTTP service.
Exit codes: 0 success, 1 partial failure (some records or phrases rejected,
details printed), 2 fatal error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from ..corpus import (
    ImageCache,
    ProjectError,
    coco_json,
    export_coco,
    import_boxes,
    import_image_tags,
    load_project,
    load_record_file,
    project_stats,
    save_project,
)
from ..corpus.model import AutomaskConfig
from ..fixtures import load_sidecar
from ..pipeline import generate_automask, ground_annotations, persist_proposals
from ..provider.base import ProviderError
from ..provider.mock import MockProvider
from ..provider.remote import RemoteProvider
from .config import ServiceConfig, load_config


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except (ProjectError, ProviderError, ValueError, OSError,
            json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="marginalia",
        description="instance annotation for manuscript folios")
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--project", required=True,
                        help="path to the project JSON file")

    provider_flags = argparse.ArgumentParser(add_help=False)
    provider_flags.add_argument("--provider-url", default=None,
                                help="segmentation backend URL "
                                     "(default: built-in mock)")
    provider_flags.add_argument("--config", default=None,
                                help="service config file (JSON)")

    p = sub.add_parser("import-tags", parents=[common],
                       help="import legacy image-level tags (CSV or JSON)")
    p.add_argument("records", help="record file: folio_key,label")
    p.add_argument("--match-only", action="store_true",
                   help="fail rows whose label is not already in the vocabulary")
    p.set_defaults(handler=cmd_import_tags)

    p = sub.add_parser("import-boxes", parents=[common],
                       help="import legacy bounding boxes (CSV or JSON)")
    p.add_argument("records",
                   help="record file: folio_key,label,x_min,y_min,x_max,y_max")
    p.add_argument("--match-only", action="store_true")
    p.set_defaults(handler=cmd_import_boxes)

    p = sub.add_parser("automask", parents=[common, provider_flags],
                       help="generate and persist draft annotations for folios")
    p.add_argument("--folio", action="append", default=None,
                   help="folio id (repeatable; default: all folios)")
    p.add_argument("--min-quality", type=float, default=None)
    p.add_argument("--min-area", type=int, default=None)
    p.add_argument("--nms-iou", type=float, default=None)
    p.add_argument("--max-proposals", type=int, default=None)
    p.set_defaults(handler=cmd_automask)

    p = sub.add_parser("ground", parents=[common, provider_flags],
                       help="draft annotations from text phrases")
    p.add_argument("--folio", required=True)
    p.add_argument("phrases", nargs="+")
    p.set_defaults(handler=cmd_ground)

    p = sub.add_parser("export", parents=[common],
                       help="write a COCO instance-segmentation file")
    p.add_argument("--out", default="-", help="output path (default stdout)")
    p.add_argument("--include", default="validated_only",
                   choices=["validated_only", "all_instances"])
    p.set_defaults(handler=cmd_export)

    p = sub.add_parser("stats", parents=[common],
                       help="print annotation counts by status, provenance, "
                            "label, and folio")
    p.set_defaults(handler=cmd_stats)

    p = sub.add_parser("serve", parents=[provider_flags],
                       help="run the HTTP service")
    p.add_argument("--host", default=None)
    p.add_argument("--port", type=int, default=None)
    p.add_argument("--project-root", default=None)
    p.add_argument("--cache-dir", default=None)
    p.add_argument("--demo", action="store_true",
                   help="create a demo project with synthetic folios and "
                        "serve it with the mock provider")
    p.set_defaults(handler=cmd_serve)

    return parser


def _open_project(args):
    return load_project(args.project)


def _make_provider(args):
    url = getattr(args, "provider_url", None)
    if url is None and getattr(args, "config", None):
        url = load_config(args.config).provider_url
    if url:
        return RemoteProvider(url)
    return MockProvider()


def _resolve_mode(args) -> str:
    return "match_only" if args.match_only else "create_or_match"


def _print_report(report) -> int:
    for warning in report.warnings:
        print(f"warning: {warning['reason']}")
    print(f"created {len(report.created)} annotations, "
          f"{len(report.failures)} records failed")
    for failure in report.failures:
        print(f"  row {failure['index']}: {failure['reason']}")
    return 0 if report.ok else 1


def cmd_import_tags(args) -> int:
    store = _open_project(args)
    tags, boxes = load_record_file(args.records)
    if boxes:
        raise ValueError(f"{args.records} holds box records; "
                         "use import-boxes for those")
    report = import_image_tags(store, tags, mode=_resolve_mode(args))
    save_project(store, args.project)
    return _print_report(report)


def cmd_import_boxes(args) -> int:
    store = _open_project(args)
    tags, boxes = load_record_file(args.records)
    if tags:
        raise ValueError(f"{args.records} holds tag records; "
                         "use import-tags for those")
    report = import_boxes(store, boxes, mode=_resolve_mode(args))
    save_project(store, args.project)
    return _print_report(report)


def _folio_image(store, cache: ImageCache, folio_id: str):
    folio = store.project.folio(folio_id)
    return cache.load_array(cache.fetch(folio.image_uri).key)


def _register_sidecar_truth(provider, store, cache, folio_id) -> None:
    """Mock provider only: if the folio image has a ground-truth sidecar
    (image.json next to image.png), load it so text detection works."""
    if not isinstance(provider, MockProvider):
        return
    folio = store.project.folio(folio_id)
    sidecar = Path(folio.image_uri).with_suffix(".json")
    if sidecar.exists():
        image = _folio_image(store, cache, folio_id)
        provider.register(image, load_sidecar(sidecar))


def _automask_config(store, args) -> AutomaskConfig:
    base = store.project.automask_config.to_dict()
    overrides = {"min_quality": args.min_quality, "min_area": args.min_area,
                 "nms_iou": args.nms_iou, "max_proposals": args.max_proposals}
    base.update({k: v for k, v in overrides.items() if v is not None})
    return AutomaskConfig.from_dict(base)


def cmd_automask(args) -> int:
    store = _open_project(args)
    provider = _make_provider(args)
    cache = ImageCache(Path(args.project).parent / ".image_cache")
    config = _automask_config(store, args)
    folio_ids = args.folio or sorted(store.project.folios)
    total = 0
    for folio_id in folio_ids:
        image = _folio_image(store, cache, folio_id)
        proposals = generate_automask(image, provider, config)
        created = persist_proposals(store, folio_id, proposals)
        total += len(created)
        print(f"{folio_id}: {len(created)} draft annotations")
    save_project(store, args.project)
    print(f"total: {total} drafts across {len(folio_ids)} folios")
    return 0


def cmd_ground(args) -> int:
    store = _open_project(args)
    provider = _make_provider(args)
    cache = ImageCache(Path(args.project).parent / ".image_cache")
    _register_sidecar_truth(provider, store, cache, args.folio)
    image = _folio_image(store, cache, args.folio)
    result = ground_annotations(store, args.folio, image, args.phrases, provider)
    save_project(store, args.project)
    for ann in result.created:
        print(f"{ann.id}: {ann.label_id}")
    for failure in result.failures:
        print(f"failed {failure['phrase']!r}: {failure['reason']}")
    return 0 if not result.failures else 1


def cmd_export(args) -> int:
    store = _open_project(args)
    document, report = export_coco(store.project, mode=args.include)
    text = coco_json(document)
    if args.out == "-":
        sys.stdout.write(text)
    else:
        Path(args.out).write_text(text, encoding="utf-8")
        print(f"wrote {args.out}: {report['exported']} annotations")
    skipped = {k: v for k, v in report.items() if k != "exported" and v}
    if skipped:
        print(f"skipped: {skipped}", file=sys.stderr)
    return 0


def cmd_stats(args) -> int:
    store = _open_project(args)
    print(json.dumps(project_stats(store.project), indent=2, sort_keys=True,
                     ensure_ascii=False))
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    if args.config:
        config = load_config(args.config)
    else:
        config = ServiceConfig()
    if args.host is not None:
        config.host = args.host
    if args.port is not None:
        config.port = args.port
    if args.project_root is not None:
        config.project_root = Path(args.project_root)
    if args.cache_dir is not None:
        config.cache_dir = Path(args.cache_dir)
    if args.provider_url is not None:
        config.provider_url = args.provider_url

    provider = None
    if args.demo:
        if config.provider_url:
            raise ValueError("--demo uses the built-in mock; "
                             "drop --provider-url")
        from .demo import bootstrap_demo
        provider = bootstrap_demo(config.project_root)

    app = create_app(config, provider=provider)
    uvicorn.run(app, host=config.host, port=config.port, log_level="info")
    return 0


if __name__ == "__main__":
    sys.exit(main())
