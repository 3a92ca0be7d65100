"""Chat-export parsing, member directory, membership, and input collection.

An export is a directory tree with one subdirectory per channel, each holding
JSON files whose top level is an array of event records (the layout produced
by workspace export tools), plus an optional ``users.json`` member directory
at the root::

    <root>/
      users.json            # optional: array of member records
      <channel-name>/*.json # each file: array of event records

Timestamps are fixed-point ``"seconds.microseconds"`` strings.  They are kept
as :class:`decimal.Decimal` plus the original raw string so parsing is
lossless — binary floats would corrupt equality and ordering of values like
``1683702597.263009``.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from decimal import Decimal, InvalidOperation
from pathlib import Path

from .errors import IngestError

__all__ = [
    "ChatEvent",
    "Reaction",
    "MemberRecord",
    "MembershipIndex",
    "ExportData",
    "InputDocument",
    "parse_export",
    "build_membership",
    "filter_members",
    "message_counts",
    "collect_input",
]

logger = logging.getLogger(__name__)

KIND_MESSAGE = "authored-message"
KIND_JOIN = "channel-join"
KIND_OTHER = "other-system"


@dataclass(frozen=True)
class Reaction:
    name: str
    users: tuple[str, ...]
    count: int


@dataclass(frozen=True)
class ChatEvent:
    """One parsed export record: authored message or system event."""

    channel: str
    author: str
    kind: str  # KIND_MESSAGE | KIND_JOIN | KIND_OTHER
    ts: Decimal
    ts_raw: str
    text: str
    thread_ts: str | None = None
    reply_count: int | None = None
    replies: tuple[tuple[str, str], ...] = ()
    reactions: tuple[Reaction, ...] = ()
    subtype: str | None = None

    def to_record(self) -> dict:
        """Re-serialize to the raw export shape (round-trips through parsing)."""
        rec: dict = {"user": self.author, "type": "message", "ts": self.ts_raw}
        if self.subtype is not None:
            rec["subtype"] = self.subtype
        rec["text"] = self.text
        if self.thread_ts is not None:
            rec["thread_ts"] = self.thread_ts
        if self.reply_count is not None:
            rec["reply_count"] = self.reply_count
        if self.replies:
            rec["replies"] = [{"user": u, "ts": t} for u, t in self.replies]
        if self.reactions:
            rec["reactions"] = [
                {"name": r.name, "users": list(r.users), "count": r.count}
                for r in self.reactions
            ]
        return rec


@dataclass(frozen=True)
class MemberRecord:
    user_id: str
    email: str | None = None
    billing_active: bool = True
    activity_flags: frozenset[str] = frozenset()


class MembershipIndex:
    """Channel -> user -> first-membership timestamp.

    A user belongs to a channel from their first join event or first authored
    message there (implicit membership), permanently thereafter.
    """

    def __init__(self, channels: dict[str, dict[str, Decimal]]):
        self.channels = channels

    def is_member(self, channel: str, user: str) -> bool:
        return user in self.channels.get(channel, {})

    def first_ts(self, channel: str, user: str) -> Decimal | None:
        return self.channels.get(channel, {}).get(user)

    def channels_of(self, user: str) -> list[str]:
        return sorted(c for c, users in self.channels.items() if user in users)


@dataclass
class ExportData:
    """Everything parsed from one export root."""

    channels: dict[str, list[ChatEvent]]
    members: list[MemberRecord]
    skipped_records: int = 0


@dataclass(frozen=True)
class InputDocument:
    """Serialized INPUTDATA for one (target user, channel) extraction."""

    target_user: str
    channel: str
    text: str  # JSON array of {"user", "ts", "text"} in timestamp order
    message_count: int
    max_ts_raw: str  # latest source timestamp, used as the record's run stamp


def _parse_event(channel: str, rec: dict) -> ChatEvent | None:
    """Parse one raw record; return None when it should be skip-counted."""
    if rec.get("type") != "message":
        return None
    user = rec.get("user")
    text = rec.get("text")
    if user is None and text is None:
        return None
    ts_raw = rec.get("ts")
    if not isinstance(ts_raw, str):
        return None
    try:
        ts = Decimal(ts_raw)
    except InvalidOperation:
        return None

    subtype = rec.get("subtype")
    if subtype == "channel_join":
        kind = KIND_JOIN
    elif subtype is None:
        kind = KIND_MESSAGE
    else:
        kind = KIND_OTHER

    replies = tuple(
        (r.get("user", ""), r.get("ts", ""))
        for r in rec.get("replies", [])
        if isinstance(r, dict)
    )
    reactions = tuple(
        Reaction(
            name=r.get("name", ""),
            users=tuple(r.get("users", [])),
            count=int(r.get("count", len(r.get("users", [])))),
        )
        for r in rec.get("reactions", [])
        if isinstance(r, dict)
    )
    reply_count = rec.get("reply_count")
    return ChatEvent(
        channel=channel,
        author=user or "",
        kind=kind,
        ts=ts,
        ts_raw=ts_raw,
        text=text or "",
        thread_ts=rec.get("thread_ts"),
        reply_count=int(reply_count) if reply_count is not None else None,
        replies=replies,
        reactions=reactions,
        subtype=subtype,
    )


def _parse_members(path: Path) -> list[MemberRecord]:
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise IngestError(f"unreadable members file {path}: {exc}") from exc
    if not isinstance(raw, list):
        raise IngestError(f"members file {path} is not a JSON array")
    members = []
    for rec in raw:
        if not isinstance(rec, dict) or "id" not in rec:
            continue
        flags = set()
        if rec.get("deleted"):
            flags.add("deleted")
        if rec.get("is_bot"):
            flags.add("bot")
        email = rec.get("email") or rec.get("profile", {}).get("email")
        members.append(
            MemberRecord(
                user_id=rec["id"],
                email=email,
                billing_active=bool(rec.get("billing_active", True)),
                activity_flags=frozenset(flags),
            )
        )
    return members


def parse_export(root: str | Path) -> ExportData:
    """Parse an export tree into per-channel events plus the member directory.

    Channels are enumerated from subdirectory names; events within a channel
    are sorted by timestamp.  Records that are not messages, or that carry
    neither ``user`` nor ``text``, or whose timestamp is unusable, are skipped
    and counted (real exports contain irregular system records).  When
    ``users.json`` is absent, a minimal directory is synthesized from the
    user ids observed in events.
    """
    root = Path(root)
    if not root.is_dir():
        raise IngestError(f"export root {root} is not a directory")

    channels: dict[str, list[ChatEvent]] = {}
    skipped = 0
    for chan_dir in sorted(p for p in root.iterdir() if p.is_dir()):
        channel = chan_dir.name
        events: list[ChatEvent] = []
        for file in sorted(chan_dir.glob("*.json")):
            try:
                raw = json.loads(file.read_text(encoding="utf-8"))
            except (OSError, json.JSONDecodeError, UnicodeDecodeError) as exc:
                raise IngestError(f"unreadable export file {file}: {exc}") from exc
            if not isinstance(raw, list):
                raise IngestError(f"export file {file} is not a JSON array")
            for rec in raw:
                event = _parse_event(channel, rec) if isinstance(rec, dict) else None
                if event is None:
                    skipped += 1
                    continue
                events.append(event)
        events.sort(key=lambda e: e.ts)
        channels[channel] = events
    if skipped:
        logger.warning("skipped %d unparseable export records", skipped)

    members_file = root / "users.json"
    if members_file.exists():
        members = _parse_members(members_file)
    else:
        seen: set[str] = set()
        ordered: list[str] = []
        for events in channels.values():
            for e in events:
                if e.author and e.author not in seen:
                    seen.add(e.author)
                    ordered.append(e.author)
        members = [MemberRecord(user_id=u) for u in sorted(ordered)]

    return ExportData(channels=channels, members=members, skipped_records=skipped)


def build_membership(channels: dict[str, list[ChatEvent]]) -> MembershipIndex:
    """Compute first-membership timestamps from joins and authored messages."""
    index: dict[str, dict[str, Decimal]] = {}
    for channel, events in channels.items():
        chan_members: dict[str, Decimal] = {}
        for e in events:
            if e.kind not in (KIND_JOIN, KIND_MESSAGE) or not e.author:
                continue
            prev = chan_members.get(e.author)
            if prev is None or e.ts < prev:
                chan_members[e.author] = e.ts
        index[channel] = chan_members
    return MembershipIndex(index)


def filter_members(
    members: list[MemberRecord],
    *,
    billing: bool = False,
    active: bool = False,
) -> list[MemberRecord]:
    """Subset matching all requested flags, order preserved.

    ``billing`` keeps members with ``billing_active``; ``active`` drops members
    flagged ``deleted`` or ``bot``.
    """
    out = []
    for m in members:
        if billing and not m.billing_active:
            continue
        if active and ("deleted" in m.activity_flags or "bot" in m.activity_flags):
            continue
        out.append(m)
    return out


def message_counts(channels: dict[str, list[ChatEvent]]) -> dict[str, int]:
    """Authored-message count per user across all channels."""
    counts: dict[str, int] = {}
    for events in channels.values():
        for e in events:
            if e.kind == KIND_MESSAGE and e.author:
                counts[e.author] = counts.get(e.author, 0) + 1
    return counts


def collect_input(
    user: str,
    channel: str,
    events: list[ChatEvent],
    index: MembershipIndex,
) -> InputDocument | None:
    """Serialize a channel's authored messages as INPUTDATA for one target.

    Includes every author's messages (observed context counts, not only the
    target's own utterances), in timestamp order.  Returns ``None`` as the
    skip signal when the user is not a member or the channel has no authored
    messages.
    """
    if not index.is_member(channel, user):
        return None
    messages = [e for e in events if e.kind == KIND_MESSAGE]
    if not messages:
        return None
    messages.sort(key=lambda e: e.ts)
    payload = [{"user": e.author, "ts": e.ts_raw, "text": e.text} for e in messages]
    text = json.dumps(payload, ensure_ascii=False, separators=(", ", ": "))
    return InputDocument(
        target_user=user,
        channel=channel,
        text=text,
        message_count=len(messages),
        max_ts_raw=max(messages, key=lambda e: e.ts).ts_raw,
    )
