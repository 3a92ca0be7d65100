"""HTTP service for member profiles and self-annotation.

The surface is deliberately minimal: three GET endpoints (member summaries,
one member's merged skills, one member's top five), one POST that upserts
self-ratings, and a session login endpoint for the annotation UI.  Members
see their own terms and self-scores but never the model's estimates
(estimated scores would bias self-annotation); the operator role sees
everything.

All failures are HTTP exceptions whose body carries a machine-readable
``code`` alongside the human-readable message.
"""

from __future__ import annotations

import secrets
import time
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

from fastapi import Depends, FastAPI, HTTPException, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from .profiler import MergedProfile
from .store import SelfAnnotation, SkillStore

__all__ = ["create_app"]

SESSION_TTL_S = 12 * 3600


class LoginRequest(BaseModel):
    email: str
    password: str


class SkillRating(BaseModel):
    term: str
    self_score: int


@dataclass
class Identity:
    user_id: str | None  # None for the operator token
    operator: bool


def _error(status: int, code: str, message: str) -> HTTPException:
    return HTTPException(status_code=status, detail={"code": code, "message": message})


def create_app(
    store: SkillStore,
    *,
    operator_token: str | None = None,
    session_ttl_s: float = SESSION_TTL_S,
    ui_dir: str | Path | None = None,
) -> FastAPI:
    """Build the service bound to one store (and one model's profiles).

    ``operator_token`` enables the researcher role via ``Authorization:
    Bearer <token>``; without it only member sessions exist.  ``ui_dir``
    optionally serves the built annotation UI as static assets.
    """
    app = FastAPI(docs_url=None, redoc_url=None, openapi_url=None)
    sessions: dict[str, tuple[str, float]] = {}  # token -> (user_id, expiry)

    @app.exception_handler(RequestValidationError)
    async def validation_error(request: Request, exc: RequestValidationError):
        return JSONResponse(
            status_code=422,
            content={
                "detail": {"code": "validation_error", "message": str(exc)}
            },
        )

    def authenticate(request: Request) -> Identity:
        header = request.headers.get("authorization", "")
        scheme, _, token = header.partition(" ")
        if scheme.lower() != "bearer" or not token:
            raise _error(401, "unauthenticated", "missing bearer token")
        if operator_token is not None and secrets.compare_digest(token, operator_token):
            return Identity(user_id=None, operator=True)
        session = sessions.get(token)
        if session is None:
            raise _error(401, "unauthenticated", "unknown session token")
        user_id, expiry = session
        if time.time() >= expiry:
            sessions.pop(token, None)
            raise _error(401, "session_expired", "session token expired")
        return Identity(user_id=user_id, operator=False)

    def load_profile_or_404(uid: str) -> MergedProfile:
        try:
            return store.get_profile(uid)
        except Exception as exc:  # NotFoundError and storage faults
            from .errors import NotFoundError, StoreError

            if isinstance(exc, NotFoundError):
                raise _error(404, "unknown_member", f"no such member: {uid}")
            if isinstance(exc, StoreError):
                raise _error(500, "storage_failure", str(exc))
            raise

    @app.post("/auth/login")
    def login(body: LoginRequest) -> dict:
        user_id = store.verify_login(body.email, body.password)
        if user_id is None:
            # Wrong password and unknown email are indistinguishable.
            raise _error(401, "invalid_credentials", "invalid email or password")
        token = secrets.token_urlsafe(32)
        expiry = time.time() + session_ttl_s
        sessions[token] = (user_id, expiry)
        return {
            "token": token,
            "user_id": user_id,
            "expires_at": datetime.fromtimestamp(expiry, tz=timezone.utc).isoformat(
                timespec="seconds"
            ),
        }

    @app.get("/members")
    def members(identity: Identity = Depends(authenticate)) -> list[dict]:
        return [
            {
                "user_id": account.user_id,
                "email": account.email,
                "has_profile": store.has_profile(account.user_id),
            }
            for account in store.accounts()
        ]

    @app.get("/members/{uid}/skills")
    def member_skills(uid: str, identity: Identity = Depends(authenticate)) -> list[dict]:
        if not identity.operator and identity.user_id != uid:
            raise _error(403, "forbidden", "members may only read their own skills")
        merged = load_profile_or_404(uid)
        rows = []
        for term, entry in merged.entries.items():
            row: dict = {
                "term": term,
                "display_term": entry.display_term,
                "self_score": entry.self_score,
            }
            if identity.operator:
                # Estimates are operator-only: member responses never carry
                # an estimated_score field at all.
                row["estimated_score"] = entry.estimated_score
                row["channels"] = list(entry.channels)
            rows.append(row)
        return rows

    @app.get("/members/{uid}/top-skills")
    def member_top_skills(
        uid: str, identity: Identity = Depends(authenticate)
    ) -> list[dict]:
        if not identity.operator:
            raise _error(403, "forbidden", "estimated scores are operator-only")
        merged = load_profile_or_404(uid)
        scored = {
            term: entry
            for term, entry in merged.entries.items()
            if entry.estimated_score is not None
        }
        ranked = sorted(
            scored.items(), key=lambda kv: (-kv[1].estimated_score, kv[0])
        )[:5]
        return [
            {
                "term": term,
                "display_term": entry.display_term,
                "estimated_score": entry.estimated_score,
                "self_score": entry.self_score,
            }
            for term, entry in ranked
        ]

    @app.post("/members/{uid}/skills")
    def submit_skills(
        uid: str, body: list[SkillRating], identity: Identity = Depends(authenticate)
    ) -> dict:
        if identity.operator or identity.user_id != uid:
            raise _error(403, "forbidden", "members may only rate their own skills")
        # Atomic validation: any invalid rating rejects the whole batch, so
        # the UI's saved/dirty state never desynchronizes from the store.
        for rating in body:
            if not rating.term.strip():
                raise _error(422, "invalid_term", "term must be non-empty")
            score = rating.self_score
            if not 0 <= score <= 100 or score % 5 != 0:
                raise _error(
                    422,
                    "invalid_score",
                    f"self score must be a multiple of 5 in [0, 100], "
                    f"got {score} for {rating.term!r}",
                )
        updated_at = datetime.now(timezone.utc).isoformat(timespec="microseconds")
        for rating in body:
            store.put_annotation(
                SelfAnnotation(
                    user_id=uid,
                    term=rating.term,
                    self_score=rating.self_score,
                    updated_at=updated_at,
                )
            )
        return {"accepted": len(body)}

    if ui_dir is not None:
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=ui_dir, html=True), name="ui")

    return app
