"""Command-line entry point: extract / profile / serve / eval.

The pipeline decomposes into four resumable stages:

  extract  chat export -> per-channel extraction records (provider calls)
  profile  extraction records -> per-user skill profiles
  serve    store root -> HTTP API + annotation UI
  eval     profiles + self-annotations -> accuracy reports

Exit codes: 0 full success, 1 configuration errors (bad paths, bad model,
missing credentials, failed connection check — always before any provider
spend), 2 partial failures (the run completed but some channels failed).
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from ._fsio import atomic_write_json, read_json
from .errors import IngestError, MetricError, ReportError, SkillmapError, StoreError
from .evaluator import (
    model_report,
    pairs_from_profile,
    per_user_report,
    write_reports,
)
from .extractor import ExtractionRecord, extract_user
from .ingest import build_membership, filter_members, message_counts, parse_export
from .profiler import aggregate, save_profile
from .providers import create_provider, make_config
from .store import SkillStore

logger = logging.getLogger(__name__)

__all__ = ["main", "build_parser"]

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_PARTIAL = 2

OPERATOR_TOKEN_ENV = "SKILLMAP_OPERATOR_TOKEN"
UI_DIR_ENV = "SKILLMAP_UI_DIR"


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="skillmap",
        description="Estimate member skill profiles from chat archives.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    fmt = argparse.ArgumentDefaultsHelpFormatter

    p_extract = sub.add_parser(
        "extract",
        help="run LLM extraction over a chat export",
        formatter_class=fmt,
    )
    p_extract.add_argument("--root", default="./export", help="chat export directory")
    p_extract.add_argument("--out", default="./out", help="output directory")
    p_extract.add_argument(
        "--users",
        default="",
        help="comma-separated target user ids (default: all filtered members)",
    )
    p_extract.add_argument(
        "--filter-billing",
        action="store_true",
        help="restrict targets to billing-active members",
    )
    p_extract.add_argument(
        "--filter-active",
        action="store_true",
        help="drop deleted/bot members from the target list",
    )
    p_extract.add_argument("--model", default="mock", help="target model name")
    p_extract.add_argument(
        "--context-window",
        type=int,
        default=None,
        help="override the model's context window (tokens)",
    )
    p_extract.add_argument(
        "--safety-factor",
        type=float,
        default=None,
        help="override the provider safety factor (0 < s <= 1)",
    )
    p_extract.add_argument(
        "--temperature", type=float, default=0.0, help="sampling temperature"
    )
    p_extract.add_argument(
        "--max-chunks",
        type=int,
        default=None,
        help="cap on chunks per channel (excess input is dropped with a warning)",
    )
    p_extract.add_argument(
        "--parallelism", type=int, default=4, help="concurrent provider calls"
    )

    p_profile = sub.add_parser(
        "profile",
        help="aggregate extraction records into skill profiles",
        formatter_class=fmt,
    )
    p_profile.add_argument("--out", default="./out", help="output directory")
    p_profile.add_argument("--model", default="mock", help="model whose records to read")
    p_profile.add_argument(
        "--users",
        default="",
        help="comma-separated user ids (default: every user with records)",
    )

    p_serve = sub.add_parser(
        "serve",
        help="serve the profile API and annotation UI",
        formatter_class=fmt,
    )
    p_serve.add_argument("--store", default="./out", help="store root directory")
    p_serve.add_argument("--model", default="mock", help="model whose profiles to serve")
    p_serve.add_argument(
        "--listen", default="127.0.0.1:8000", help="host:port to bind"
    )

    p_eval = sub.add_parser(
        "eval",
        help="score estimated profiles against self-annotations",
        formatter_class=fmt,
    )
    p_eval.add_argument("--out", default="./out", help="output directory")
    p_eval.add_argument(
        "--model",
        default="",
        help="comma-separated models to evaluate (default: every model with profiles)",
    )
    p_eval.add_argument(
        "--store", default="", help="store root for annotations (default: --out)"
    )
    p_eval.add_argument(
        "--counts",
        default="",
        help="JSON file of per-user message counts for the per-user report",
    )
    p_eval.add_argument(
        "--root",
        default="",
        help="chat export to compute message counts from (alternative to --counts)",
    )
    return parser


def _split_csv(value: str) -> list[str]:
    return [item.strip() for item in value.split(",") if item.strip()]


def _fail(message: str) -> int:
    logger.error(message)
    print(f"skillmap: error: {message}", file=sys.stderr)
    return EXIT_CONFIG


# ---------------------------------------------------------------------------
# extract
# ---------------------------------------------------------------------------

def cmd_extract(args: argparse.Namespace) -> int:
    root = Path(args.root)
    if not root.is_dir():
        return _fail(f"export root does not exist: {root}")

    # Configuration and connectivity are settled before any heavy
    # computation: a bad model name or missing credential must not cost a
    # single parsed file, chunk, or provider call.
    try:
        config = make_config(
            args.model,
            context_window=args.context_window,
            safety_factor=args.safety_factor,
            temperature=args.temperature,
        )
        provider = create_provider(config)
    except SkillmapError as exc:
        return _fail(str(exc))

    with provider:
        try:
            provider.check_connection()
        except SkillmapError as exc:
            return _fail(f"connection check failed: {exc}")

        try:
            export = parse_export(root)
        except IngestError as exc:
            return _fail(str(exc))

        member_ids = {m.user_id for m in export.members}
        requested = _split_csv(args.users)
        if requested:
            unknown = sorted(set(requested) - member_ids)
            if unknown:
                return _fail(f"unknown user(s): {', '.join(unknown)}")
            targets = requested
        else:
            filtered = filter_members(
                export.members,
                billing=args.filter_billing,
                active=args.filter_active,
            )
            targets = sorted(m.user_id for m in filtered)
        if not targets:
            return _fail("no target users after filtering")

        index = build_membership(export.channels)
        manifest: dict = {
            "model": config.model_name,
            "context_window": config.context_window,
            "safety_factor": config.safety_factor,
            "targets": targets,
            "users": {},
        }
        any_failed = False
        for user in targets:
            result = extract_user(
                user,
                export,
                index,
                provider,
                args.out,
                n_max=args.max_chunks,
                parallelism=max(1, args.parallelism),
            )
            manifest["users"][user] = {
                "written": result.written,
                "skipped_existing": result.skipped_existing,
                "skipped_no_input": result.skipped_no_input,
                "failed": [list(item) for item in result.failed],
                "provider_calls": result.provider_calls,
            }
            if result.capped:
                manifest["users"][user]["warnings"] = [
                    f"channel {channel!r}: chunk cap reached, excess input dropped"
                    for channel in result.capped
                ]
            any_failed = any_failed or bool(result.failed)

    atomic_write_json(Path(args.out) / config.model_name / "manifest.json", manifest)
    return EXIT_PARTIAL if any_failed else EXIT_OK


# ---------------------------------------------------------------------------
# profile
# ---------------------------------------------------------------------------

def cmd_profile(args: argparse.Namespace) -> int:
    records_root = Path(args.out) / args.model
    if not records_root.is_dir():
        return _fail(f"no extraction outputs at: {records_root}")

    users = _split_csv(args.users)
    if not users:
        users = sorted(p.name for p in records_root.iterdir() if p.is_dir())
    if not users:
        return _fail(f"no user records under: {records_root}")

    for user in users:
        user_dir = records_root / user
        record_files = sorted(user_dir.glob("*.json"))
        if not record_files:
            return _fail(f"no extraction records at: {user_dir}")
        records = [ExtractionRecord.from_json(read_json(path)) for path in record_files]
        profile = aggregate(records)
        path = save_profile(args.out, profile)
        logger.info("wrote %s", path)
    return EXIT_OK


# ---------------------------------------------------------------------------
# serve
# ---------------------------------------------------------------------------

def _parse_listen(value: str) -> tuple[str, int]:
    host, sep, port = value.rpartition(":")
    if not sep or not host or not port.isdigit():
        raise ValueError(f"--listen expects host:port, got {value!r}")
    return host, int(port)


def cmd_serve(args: argparse.Namespace) -> int:
    try:
        host, port = _parse_listen(args.listen)
    except ValueError as exc:
        return _fail(str(exc))
    store_root = Path(args.store)
    if not store_root.is_dir():
        return _fail(f"store root does not exist: {store_root}")

    from .api import create_app

    app = create_app(
        SkillStore(store_root, args.model),
        operator_token=os.environ.get(OPERATOR_TOKEN_ENV),
        ui_dir=os.environ.get(UI_DIR_ENV) or None,
    )
    import uvicorn

    uvicorn.run(app, host=host, port=port, log_level="info")
    return EXIT_OK


# ---------------------------------------------------------------------------
# eval
# ---------------------------------------------------------------------------

def cmd_eval(args: argparse.Namespace) -> int:
    out_root = Path(args.out)
    profiles_root = out_root / "profiles"
    if not profiles_root.is_dir():
        return _fail(f"no profiles at: {profiles_root}")

    models = _split_csv(args.model)
    if not models:
        models = sorted(p.name for p in profiles_root.iterdir() if p.is_dir())
    if not models:
        return _fail(f"no model profiles under: {profiles_root}")

    store_root = Path(args.store) if args.store else out_root
    pairs_by_model = {}
    for model in models:
        store = SkillStore(store_root, model)
        pairs = []
        for user in store.known_user_ids():
            try:
                merged = store.get_profile(user)
            except StoreError:
                continue
            pairs.extend(pairs_from_profile(merged))
        if pairs:
            pairs_by_model[model] = pairs
        else:
            logger.warning("model %s: no evaluable pairs, dropped from report", model)
    if not pairs_by_model:
        return _fail("no evaluable pairs")

    counts = None
    if args.counts:
        counts_path = Path(args.counts)
        if not counts_path.is_file():
            return _fail(f"counts file does not exist: {counts_path}")
        try:
            loaded = json.loads(counts_path.read_text(encoding="utf-8"))
            counts = {str(k): int(v) for k, v in loaded.items()}
        except (json.JSONDecodeError, AttributeError, TypeError, ValueError) as exc:
            return _fail(f"invalid counts file {counts_path}: {exc}")
    elif args.root:
        counts_root = Path(args.root)
        if not counts_root.is_dir():
            return _fail(f"export root does not exist: {counts_root}")
        try:
            counts = message_counts(parse_export(counts_root).channels)
        except IngestError as exc:
            return _fail(str(exc))

    try:
        rows = model_report(pairs_by_model)
        per_user = None
        if counts is not None:
            best_model = next(row.model for row in rows if row.best)
            per_user = per_user_report(pairs_by_model[best_model], counts)
        write_reports(out_root / "reports", rows, per_user)
    except (MetricError, ReportError) as exc:
        return _fail(str(exc))
    return EXIT_OK


# ---------------------------------------------------------------------------

_COMMANDS = {
    "extract": cmd_extract,
    "profile": cmd_profile,
    "serve": cmd_serve,
    "eval": cmd_eval,
}


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(
        level=logging.INFO, format="%(levelname)s %(name)s: %(message)s"
    )
    args = build_parser().parse_args(argv)
    return _COMMANDS[args.command](args)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
