"""Per-user, per-channel extraction orchestration.

Builds the fixed extraction prompt, splits each channel's INPUTDATA under the
model's token budget, dispatches chunks to the configured provider (bounded
parallelism, deterministic merge order), parses/repairs the structured
responses, and materializes one JSON record per (model, user, channel) with
skip/resume semantics: existing output files are never recomputed.
"""

from __future__ import annotations

import json
import logging
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from ._fsio import atomic_write_json
from .chunker import DEFAULT_RESERVED_TOKENS, ChunkParams, plan_chunks
from .errors import BudgetError, ProviderError, ResponseParseError
from .ingest import ExportData, InputDocument, MembershipIndex, collect_input
from .profiler import normalize_term
from .providers import CompletionRequest, Provider
from .tokenizer import count_tokens

__all__ = [
    "SYSTEM_PROMPT",
    "USER_TEMPLATE",
    "KnowledgeItem",
    "ExtractionRecord",
    "UserExtractionResult",
    "build_prompt",
    "prompt_overhead",
    "parse_response",
    "extract_user",
    "record_path",
]

logger = logging.getLogger(__name__)

SYSTEM_PROMPT = '''You are an expert in analyzing and estimating a user's domain knowledge based on log data. Focus specifically on the "TARGETUSER" to analyze their knowledge level based on "INPUTDATA". The "TARGETUSER" corresponds to "user" in the "INPUTDATA".

Instructions:
- Extract domain knowledge by analyzing the "text" fields for the target user.
- In the output, list proper nouns related to skills, domains, or key terms (e.g., technology, methods, or concepts).
- For each extracted item, classify the knowledge level:
  - 2 (Known): Strong evidence the user knows this.
  - 1 (Maybe known): Some evidence, moderate confidence.
  - 0 (Unknown): Insufficient evidence of knowledge.
- For each item, give a brief reason for your classification based on INPUTDATA.

Example Output JSON:
"{target_user_id}": {{
    "text": "Extracted proper noun or verb from the text in INPUTDATA",
    "level": 2 (Known), 1 (Maybe known), or 0 (Unknown),
    "reason": "Brief explanation for why this knowledge level was assigned based on the INPUTDATA"
}}'''

USER_TEMPLATE = "TARGETUSER: {target_user}\n\nINPUTDATA:\n{chunk}"


def build_prompt(target_user: str, chunk: str) -> tuple[str, str]:
    """(system text, user text) for one chunk request.

    The system text is the fixed template verbatim; the user text substitutes
    the TARGETUSER and INPUTDATA placeholders.
    """
    return SYSTEM_PROMPT, USER_TEMPLATE.format(target_user=target_user, chunk=chunk)


def prompt_overhead(target_user: str) -> tuple[int, int]:
    """(T_sys, T_tmpl): measured token counts of the actual prompt strings."""
    system, user_empty = build_prompt(target_user, "")
    return count_tokens(system), count_tokens(user_empty)


@dataclass(frozen=True)
class Provenance:
    user: str
    channel: str
    chunk_index: int
    model: str


@dataclass(frozen=True)
class KnowledgeItem:
    """One extracted skill: surface term, 3-valued level, justification."""

    text: str
    level: int  # 2 Known, 1 Maybe known, 0 Unknown
    reason: str
    provenance: Provenance


@dataclass
class ExtractionRecord:
    """Materialized extraction output for one (model, user, channel).

    ``parse_failures`` counts chunks that yielded no usable entries, whether
    the response was unparseable or the provider failed after retries.
    """

    user: str
    channel: str
    model: str
    items: list[KnowledgeItem]
    chunk_count: int
    parse_failures: int
    run_ts: str  # latest source-event timestamp: data-derived, reproducible

    def to_json(self) -> dict:
        return {
            "user": self.user,
            "channel": self.channel,
            "model": self.model,
            "run_ts": self.run_ts,
            "chunk_count": self.chunk_count,
            "parse_failures": self.parse_failures,
            "items": [
                {
                    "text": i.text,
                    "level": i.level,
                    "reason": i.reason,
                    "provenance": {
                        "user": i.provenance.user,
                        "channel": i.provenance.channel,
                        "chunk_index": i.provenance.chunk_index,
                        "model": i.provenance.model,
                    },
                }
                for i in self.items
            ],
        }

    @classmethod
    def from_json(cls, doc: dict) -> "ExtractionRecord":
        items = [
            KnowledgeItem(
                text=i["text"],
                level=i["level"],
                reason=i["reason"],
                provenance=Provenance(
                    user=i["provenance"]["user"],
                    channel=i["provenance"]["channel"],
                    chunk_index=i["provenance"]["chunk_index"],
                    model=i["provenance"]["model"],
                ),
            )
            for i in doc.get("items", [])
        ]
        return cls(
            user=doc["user"],
            channel=doc["channel"],
            model=doc["model"],
            items=items,
            chunk_count=doc["chunk_count"],
            parse_failures=doc["parse_failures"],
            run_ts=doc["run_ts"],
        )


# ---------------------------------------------------------------------------
# Response parsing
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RawEntry:
    text: str
    level: int
    reason: str


_FENCE_RE = re.compile(r"```[a-zA-Z0-9_-]*\s*\n?(.*?)```", re.DOTALL)


def _balanced_json_scan(text: str) -> str | None:
    """Extract the first balanced top-level JSON object/array, string-aware."""
    for start, ch in enumerate(text):
        if ch in "{[":
            break
    else:
        return None
    open_ch, close_ch = ch, {"{": "}", "[": "]"}[ch]
    depth = 0
    in_string = False
    escaped = False
    for i in range(start, len(text)):
        c = text[i]
        if in_string:
            if escaped:
                escaped = False
            elif c == "\\":
                escaped = True
            elif c == '"':
                in_string = False
            continue
        if c == '"':
            in_string = True
        elif c == open_ch:
            depth += 1
        elif c == close_ch:
            depth -= 1
            if depth == 0:
                return text[start : i + 1]
    return None


def _coerce_entries(value, target_user: str) -> list:
    """Normalize the accepted response shapes to a list of raw entry dicts."""
    if isinstance(value, dict):
        if target_user in value:
            value = value[target_user]
        elif {"text", "level"} <= value.keys():
            return [value]
        elif len(value) == 1:
            value = next(iter(value.values()))
        else:
            raise ResponseParseError(
                f"response object is not keyed by {target_user!r}"
            )
    if isinstance(value, dict):
        return [value]
    if isinstance(value, list):
        return value
    raise ResponseParseError("response JSON is neither an object nor an array")


def parse_response(raw: str, target_user: str) -> list[RawEntry]:
    """Parse a model response into raw entries, repairing common wrapping.

    Repair ladder: strip Markdown code fences, then try the text as JSON,
    then fall back to scanning for the first balanced JSON value.  Entries
    missing the contract fields, or with a level outside {0, 1, 2}, are
    dropped with a counted warning; an unparseable response raises
    :class:`ResponseParseError`.
    """
    candidates = []
    fenced = _FENCE_RE.search(raw)
    if fenced:
        candidates.append(fenced.group(1))
    candidates.append(raw)

    parsed = None
    for candidate in candidates:
        try:
            parsed = json.loads(candidate)
            break
        except ValueError:
            scanned = _balanced_json_scan(candidate)
            if scanned is not None:
                try:
                    parsed = json.loads(scanned)
                    break
                except ValueError:
                    continue
    if parsed is None:
        raise ResponseParseError("no JSON value found in response")

    entries = _coerce_entries(parsed, target_user)
    items: list[RawEntry] = []
    dropped = 0
    for entry in entries:
        if not isinstance(entry, dict):
            dropped += 1
            continue
        text = entry.get("text")
        level = entry.get("level")
        reason = entry.get("reason")
        if (
            not isinstance(text, str)
            or not text.strip()
            or isinstance(level, bool)
            or level not in (0, 1, 2)
            or not isinstance(reason, str)
        ):
            dropped += 1
            continue
        items.append(RawEntry(text=text.strip(), level=level, reason=reason))
    if dropped:
        logger.warning(
            "dropped %d malformed entries from %s response", dropped, target_user
        )
    return items


# ---------------------------------------------------------------------------
# Orchestration
# ---------------------------------------------------------------------------

def record_path(out_root: str | Path, model: str, user: str, channel: str) -> Path:
    return Path(out_root) / model / user / f"{channel}.json"


@dataclass
class UserExtractionResult:
    user: str
    records: list[ExtractionRecord] = field(default_factory=list)
    written: list[str] = field(default_factory=list)
    skipped_existing: list[str] = field(default_factory=list)
    skipped_no_input: list[str] = field(default_factory=list)
    failed: list[tuple[str, str]] = field(default_factory=list)  # (channel, reason)
    capped: list[str] = field(default_factory=list)  # channels truncated by n_max
    provider_calls: int = 0


def _merge_items(
    per_chunk: list[list[RawEntry]], user: str, channel: str, model: str
) -> list[KnowledgeItem]:
    """Merge chunk results in chunk-index order.

    Duplicate terms (same normalized text) keep the maximum level — strong
    evidence dominates — and concatenate distinct reasons.
    """
    merged: dict[str, KnowledgeItem] = {}
    for chunk_index, entries in enumerate(per_chunk):
        for entry in entries:
            key = normalize_term(entry.text)
            existing = merged.get(key)
            if existing is None:
                merged[key] = KnowledgeItem(
                    text=entry.text,
                    level=entry.level,
                    reason=entry.reason,
                    provenance=Provenance(user, channel, chunk_index, model),
                )
            else:
                reasons = existing.reason
                if entry.reason and entry.reason not in reasons:
                    reasons = f"{reasons}; {entry.reason}" if reasons else entry.reason
                merged[key] = KnowledgeItem(
                    text=existing.text,
                    level=max(existing.level, entry.level),
                    reason=reasons,
                    provenance=existing.provenance,
                )
    return list(merged.values())


def extract_user(
    user: str,
    export: ExportData,
    index: MembershipIndex,
    provider: Provider,
    out_root: str | Path,
    *,
    t_res: int = DEFAULT_RESERVED_TOKENS,
    n_max: int | None = None,
    parallelism: int = 4,
) -> UserExtractionResult:
    """Run extraction for one user over every channel they are a member of.

    Channels are processed in sorted order.  A channel is skipped when the
    user is not a member, when it has no authored messages, or when the
    output file already exists (resume semantics — no provider calls are
    spent on materialized records).
    """
    model = provider.config.model_name
    result = UserExtractionResult(user=user)
    t_sys, t_tmpl = prompt_overhead(user)

    for channel in sorted(export.channels):
        out_file = record_path(out_root, model, user, channel)
        if out_file.exists():
            logger.info("[%s/%s] output exists, skipping", user, channel)
            result.skipped_existing.append(channel)
            continue

        doc = collect_input(user, channel, export.channels[channel], index)
        if doc is None:
            logger.info("[%s/%s] no contributions, skipping", user, channel)
            result.skipped_no_input.append(channel)
            continue

        params = ChunkParams(
            t_max=provider.config.context_window,
            safety_factor=provider.config.safety_factor,
            t_sys=t_sys,
            t_tmpl=t_tmpl,
            t_res=t_res,
            n_max=n_max,
        )
        try:
            plan = plan_chunks(doc.text, params)
        except BudgetError as exc:
            logger.error("[%s/%s] budget misconfiguration: %s", user, channel, exc)
            result.failed.append((channel, str(exc)))
            continue
        if plan.capped:
            result.capped.append(channel)

        record = _extract_channel(
            doc, plan.segments, provider, t_res, parallelism, result
        )
        atomic_write_json(out_file, record.to_json())
        result.records.append(record)
        result.written.append(channel)
        logger.info(
            "[%s/%s] wrote %d items from %d chunk(s), %d failure(s)",
            user, channel, len(record.items), record.chunk_count,
            record.parse_failures,
        )
    return result


def _extract_channel(
    doc: InputDocument,
    segments: tuple[str, ...],
    provider: Provider,
    t_res: int,
    parallelism: int,
    result: UserExtractionResult,
) -> ExtractionRecord:
    """Dispatch one channel's chunks and merge responses by chunk index."""
    model = provider.config.model_name

    def run_chunk(indexed: tuple[int, str]) -> tuple[int, list[RawEntry], bool]:
        chunk_index, chunk = indexed
        system, user_text = build_prompt(doc.target_user, chunk)
        request = CompletionRequest(
            config=provider.config,
            system=system,
            user=user_text,
            target_user=doc.target_user,
            chunk=chunk,
            reserved_output=t_res,
        )
        result.provider_calls += 1
        try:
            response = provider.complete(request)
        except ProviderError as exc:
            logger.warning(
                "[%s/%s] chunk %d provider failure: %s",
                doc.target_user, doc.channel, chunk_index, exc,
            )
            return chunk_index, [], True
        try:
            entries = parse_response(response.text, doc.target_user)
        except ResponseParseError as exc:
            logger.warning(
                "[%s/%s] chunk %d parse failure: %s",
                doc.target_user, doc.channel, chunk_index, exc,
            )
            return chunk_index, [], True
        return chunk_index, entries, False

    indexed_chunks = list(enumerate(segments))
    if parallelism > 1 and len(indexed_chunks) > 1:
        with ThreadPoolExecutor(max_workers=parallelism) as pool:
            outcomes = list(pool.map(run_chunk, indexed_chunks))
    else:
        outcomes = [run_chunk(ic) for ic in indexed_chunks]

    outcomes.sort(key=lambda o: o[0])  # merge order fixed by chunk index
    per_chunk = [entries for _, entries, _ in outcomes]
    failures = sum(1 for _, _, failed in outcomes if failed)
    items = _merge_items(per_chunk, doc.target_user, doc.channel, model)
    return ExtractionRecord(
        user=doc.target_user,
        channel=doc.channel,
        model=model,
        items=items,
        chunk_count=len(segments),
        parse_failures=failures,
        run_ts=doc.max_ts_raw,
    )
