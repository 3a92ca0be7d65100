"""Aggregate extraction records into per-user 0–100 skill profiles.

Levels map linearly onto the rating scale (0 -> 0, 1 -> 50, 2 -> 100) and a
term's estimated score is the arithmetic mean over the channels where it was
extracted — averaging available inferences only, so a term mentioned in one
channel is not diluted by channels that never surfaced it.  Every evaluation
number downstream depends on this mapping, hence its prominence here.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import TYPE_CHECKING, Iterable

from ._fsio import atomic_write_json, read_json
from .errors import NotFoundError

if TYPE_CHECKING:  # imported for annotations only; store imports us at runtime
    from .extractor import ExtractionRecord
    from .store import SelfAnnotation

__all__ = [
    "LEVEL_SCORES",
    "ProfileEntry",
    "SkillProfile",
    "MergedEntry",
    "MergedProfile",
    "normalize_term",
    "level_to_score",
    "aggregate",
    "top_five",
    "merge_self",
    "profile_path",
    "save_profile",
    "load_profile",
]

LEVEL_SCORES = {0: 0, 1: 50, 2: 100}


def normalize_term(term: str) -> str:
    """Case-folded, whitespace-collapsed, trimmed merge key for a term."""
    return " ".join(term.split()).casefold()


def level_to_score(level: int) -> int:
    """Linear map of the 3-valued extraction level onto the 0–100 scale."""
    try:
        return LEVEL_SCORES[level]
    except KeyError:
        raise ValueError(f"knowledge level must be 0, 1 or 2, got {level!r}") from None


@dataclass(frozen=True)
class ProfileEntry:
    display_term: str
    estimated_score: float  # mean of {0, 50, 100} channel scores
    channels: tuple[str, ...]
    item_count: int


@dataclass(frozen=True)
class SkillProfile:
    user: str
    model: str
    entries: dict[str, ProfileEntry]  # keyed by normalized term, sorted

    def to_json(self) -> dict:
        return {
            "user": self.user,
            "model": self.model,
            "entries": {
                term: {
                    "display_term": e.display_term,
                    "estimated_score": e.estimated_score,
                    "channels": list(e.channels),
                    "item_count": e.item_count,
                }
                for term, e in self.entries.items()
            },
        }

    @classmethod
    def from_json(cls, doc: dict) -> "SkillProfile":
        entries = {
            term: ProfileEntry(
                display_term=e["display_term"],
                estimated_score=e["estimated_score"],
                channels=tuple(e["channels"]),
                item_count=e["item_count"],
            )
            for term, e in sorted(doc.get("entries", {}).items())
        }
        return cls(user=doc["user"], model=doc["model"], entries=entries)


def aggregate(records: Iterable["ExtractionRecord"]) -> SkillProfile:
    """Build one user's profile from their per-channel extraction records.

    Per normalized term, each contributing channel supplies one score (its
    record's items are already duplicate-merged; stray duplicates are folded
    by maximum level defensively) and the entry's estimated score is the mean
    over those channels.  The result is permutation-invariant in the record
    list and sorted by term for deterministic serialization.
    """
    records = sorted(records, key=lambda r: r.channel)
    if not records:
        return SkillProfile(user="", model="", entries={})
    users = {r.user for r in records}
    if len(users) != 1:
        raise ValueError(f"records span multiple users: {sorted(users)}")
    models = {r.model for r in records}
    if len(models) != 1:
        raise ValueError(f"records span multiple models: {sorted(models)}")

    # term -> channel -> level (max within a channel)
    term_levels: dict[str, dict[str, int]] = {}
    display: dict[str, str] = {}
    for record in records:
        for item in record.items:
            key = normalize_term(item.text)
            per_channel = term_levels.setdefault(key, {})
            prev = per_channel.get(record.channel)
            if prev is None or item.level > prev:
                per_channel[record.channel] = item.level
            display.setdefault(key, item.text)

    entries = {}
    for term in sorted(term_levels):
        per_channel = term_levels[term]
        channels = tuple(sorted(per_channel))
        scores = [level_to_score(per_channel[c]) for c in channels]
        entries[term] = ProfileEntry(
            display_term=display[term],
            estimated_score=sum(scores) / len(scores),
            channels=channels,
            item_count=len(channels),
        )
    return SkillProfile(user=records[0].user, model=records[0].model, entries=entries)


def top_five(profile: SkillProfile) -> list[tuple[str, ProfileEntry]]:
    """Up to five entries by estimated score descending, ties by term."""
    ranked = sorted(
        profile.entries.items(), key=lambda kv: (-kv[1].estimated_score, kv[0])
    )
    return ranked[:5]


@dataclass(frozen=True)
class MergedEntry:
    display_term: str
    estimated_score: float | None  # None for self-only entries
    channels: tuple[str, ...]
    item_count: int
    self_score: int | None


@dataclass(frozen=True)
class MergedProfile:
    user: str
    model: str
    entries: dict[str, MergedEntry]


def merge_self(
    profile: SkillProfile, annotations: Iterable["SelfAnnotation"]
) -> MergedProfile:
    """Outer-join self-annotations onto a profile via normalized terms.

    Entries without an annotation keep ``self_score=None``; annotations for
    terms absent from the profile become self-only entries (store contents
    may evolve after the profile was computed).
    """
    ann_by_term: dict[str, "SelfAnnotation"] = {}
    for a in annotations:
        if a.user_id != profile.user:
            raise ValueError(
                f"annotation for {a.user_id!r} merged into {profile.user!r} profile"
            )
        ann_by_term[normalize_term(a.term)] = a

    merged: dict[str, MergedEntry] = {}
    for term, entry in profile.entries.items():
        annotation = ann_by_term.pop(term, None)
        merged[term] = MergedEntry(
            display_term=entry.display_term,
            estimated_score=entry.estimated_score,
            channels=entry.channels,
            item_count=entry.item_count,
            self_score=annotation.self_score if annotation else None,
        )
    for term, annotation in ann_by_term.items():
        merged[term] = MergedEntry(
            display_term=annotation.term,
            estimated_score=None,
            channels=(),
            item_count=0,
            self_score=annotation.self_score,
        )
    return MergedProfile(
        user=profile.user,
        model=profile.model,
        entries=dict(sorted(merged.items())),
    )


def profile_path(out_root: str | Path, model: str, user: str) -> Path:
    return Path(out_root) / "profiles" / model / f"{user}.json"


def save_profile(out_root: str | Path, profile: SkillProfile) -> Path:
    path = profile_path(out_root, profile.model, profile.user)
    atomic_write_json(path, profile.to_json())
    return path


def load_profile(out_root: str | Path, model: str, user: str) -> SkillProfile:
    doc = read_json(profile_path(out_root, model, user))
    if doc is None:
        raise NotFoundError(f"no profile for user {user!r} under model {model!r}")
    return SkillProfile.from_json(doc)
