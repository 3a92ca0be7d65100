"""Local document persistence: profiles, self-annotations, accounts.

A directory of JSON documents stands in for the cloud database of the
original deployment, keeping all data inside the operator's own security
boundary.  Lazy initialization (nothing is created until the first write),
atomic write-then-rename, per-document write serialization, and
last-writer-wins conflict resolution by ``updated_at``.

Layout under the store root::

    profiles/<model>/<user>.json   # written by the profiling stage
    annotations/<user>.json        # self-annotations, upserted via the API
    accounts.json                  # operator-provisioned login accounts
"""

from __future__ import annotations

import base64
import hashlib
import hmac
import secrets
import threading
from collections import defaultdict
from dataclasses import dataclass
from pathlib import Path

from ._fsio import atomic_write_json, read_json
from .errors import NotFoundError, StoreError
from .profiler import (
    MergedProfile,
    SkillProfile,
    load_profile,
    merge_self,
    normalize_term,
)

__all__ = ["SelfAnnotation", "Account", "SkillStore", "validate_self_score"]

_PBKDF2_ITERATIONS = 120_000


def validate_self_score(score) -> int:
    """Self-ratings are integers 0–100 in increments of 5."""
    if isinstance(score, bool) or not isinstance(score, int):
        raise ValueError(f"self score must be an integer, got {score!r}")
    if not 0 <= score <= 100 or score % 5 != 0:
        raise ValueError(
            f"self score must be a multiple of 5 in [0, 100], got {score}"
        )
    return score


@dataclass(frozen=True)
class SelfAnnotation:
    user_id: str
    term: str  # normalized
    self_score: int
    updated_at: str  # ISO-8601 UTC; lexicographic order == time order

    def __post_init__(self) -> None:
        validate_self_score(self.self_score)


@dataclass(frozen=True)
class Account:
    user_id: str
    email: str
    digest: str
    salt: str
    created_by: str


def _hash_password(password: str, salt: bytes) -> str:
    digest = hashlib.pbkdf2_hmac(
        "sha256", password.encode("utf-8"), salt, _PBKDF2_ITERATIONS
    )
    return base64.b64encode(digest).decode("ascii")


class SkillStore:
    """Document store bound to one store root and one model's profiles."""

    def __init__(self, root: str | Path, model: str):
        self.root = Path(root)
        self.model = model
        self._master_lock = threading.Lock()
        self._key_locks: dict[str, threading.Lock] = defaultdict(threading.Lock)

    def _lock(self, key: str) -> threading.Lock:
        with self._master_lock:
            return self._key_locks[key]

    # -- annotations ------------------------------------------------------

    def _annotation_path(self, user_id: str) -> Path:
        return self.root / "annotations" / f"{user_id}.json"

    def put_annotation(self, annotation: SelfAnnotation) -> None:
        """Upsert keyed by (user, term); last writer by ``updated_at`` wins.

        Durable (written and renamed into place) before returning.
        """
        term = normalize_term(annotation.term)
        path = self._annotation_path(annotation.user_id)
        with self._lock(f"annotations/{annotation.user_id}"):
            doc = read_json(path) or {"user": annotation.user_id, "terms": {}}
            existing = doc["terms"].get(term)
            if existing is None or annotation.updated_at >= existing["updated_at"]:
                doc["terms"][term] = {
                    "self_score": annotation.self_score,
                    "updated_at": annotation.updated_at,
                }
                try:
                    atomic_write_json(path, doc)
                except OSError as exc:
                    raise StoreError(f"cannot persist annotation: {exc}") from exc

    def get_annotations(self, user_id: str) -> list[SelfAnnotation]:
        doc = read_json(self._annotation_path(user_id))
        if not doc:
            return []
        return [
            SelfAnnotation(
                user_id=user_id,
                term=term,
                self_score=meta["self_score"],
                updated_at=meta["updated_at"],
            )
            for term, meta in sorted(doc.get("terms", {}).items())
        ]

    # -- accounts ---------------------------------------------------------

    @property
    def _accounts_path(self) -> Path:
        return self.root / "accounts.json"

    def _load_accounts(self) -> dict:
        return read_json(self._accounts_path) or {}

    def provision_account(
        self, user_id: str, email: str, password: str, *, created_by: str = "operator"
    ) -> Account:
        """Create or replace the account for ``email`` (operator action).

        Emails are unique; re-provisioning an email for a different user id
        is rejected rather than silently re-linking annotations.
        """
        email = email.strip().lower()
        with self._lock("accounts"):
            accounts = self._load_accounts()
            existing = accounts.get(email)
            if existing is not None and existing["user_id"] != user_id:
                raise StoreError(
                    f"email {email!r} is already linked to {existing['user_id']!r}"
                )
            salt = secrets.token_bytes(16)
            record = {
                "user_id": user_id,
                "digest": _hash_password(password, salt),
                "salt": base64.b64encode(salt).decode("ascii"),
                "created_by": created_by,
            }
            accounts[email] = record
            try:
                atomic_write_json(self._accounts_path, accounts)
            except OSError as exc:
                raise StoreError(f"cannot persist account: {exc}") from exc
        return Account(
            user_id=user_id,
            email=email,
            digest=record["digest"],
            salt=record["salt"],
            created_by=record["created_by"],
        )

    def accounts(self) -> list[Account]:
        return [
            Account(
                user_id=rec["user_id"],
                email=email,
                digest=rec["digest"],
                salt=rec["salt"],
                created_by=rec.get("created_by", "operator"),
            )
            for email, rec in sorted(self._load_accounts().items())
        ]

    def verify_login(self, email: str, password: str) -> str | None:
        """User id for valid credentials, else None (constant-time compare)."""
        record = self._load_accounts().get(email.strip().lower())
        if record is None:
            # Burn a hash anyway so unknown emails take as long as bad
            # passwords: no enumeration via timing.
            _hash_password(password, b"\x00" * 16)
            return None
        salt = base64.b64decode(record["salt"])
        candidate = _hash_password(password, salt)
        if hmac.compare_digest(candidate, record["digest"]):
            return record["user_id"]
        return None

    def account_for_user(self, user_id: str) -> Account | None:
        for account in self.accounts():
            if account.user_id == user_id:
                return account
        return None

    # -- profiles ---------------------------------------------------------

    def has_profile(self, user_id: str) -> bool:
        return (self.root / "profiles" / self.model / f"{user_id}.json").exists()

    def get_profile(self, user_id: str) -> MergedProfile:
        """Stored profile merged with stored annotations.

        A user is known when they have a profile, annotations, or an
        account; anything else is not-found.
        """
        annotations = self.get_annotations(user_id)
        try:
            profile = load_profile(self.root, self.model, user_id)
        except NotFoundError:
            if not annotations and self.account_for_user(user_id) is None:
                raise
            profile = SkillProfile(user=user_id, model=self.model, entries={})
        return merge_self(profile, annotations)

    # -- members ----------------------------------------------------------

    def known_user_ids(self) -> list[str]:
        """Users with an account, profile, or annotations, sorted."""
        ids = {a.user_id for a in self.accounts()}
        profile_dir = self.root / "profiles" / self.model
        if profile_dir.is_dir():
            ids.update(p.stem for p in profile_dir.glob("*.json"))
        ann_dir = self.root / "annotations"
        if ann_dir.is_dir():
            ids.update(p.stem for p in ann_dir.glob("*.json"))
        return sorted(ids)
