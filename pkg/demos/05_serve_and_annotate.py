"""Step 5: the annotation service.

Boots the HTTP API on a local port against a freshly built store, provisions
a member account plus an operator token, then walks the whole annotation
round trip with a plain HTTP client: member logs in, reads their extracted
terms (note: no estimated scores in member responses), submits self-ratings,
and the operator reads the merged profile with estimates.

Run from the repository root:

    python demos/05_serve_and_annotate.py
"""

import tempfile
import threading
import time
from pathlib import Path

import httpx
import uvicorn

from skillmap.api import create_app
from skillmap.cli import main as skillmap
from skillmap.store import SkillStore

CORPUS = Path(__file__).resolve().parent.parent / "tests" / "data" / "corpus"
OPERATOR_TOKEN = "demo-operator-token"


def main() -> None:
    with tempfile.TemporaryDirectory() as out:
        assert skillmap(["extract", "--root", str(CORPUS), "--out", out]) == 0
        assert skillmap(["profile", "--out", out]) == 0

        store = SkillStore(out, "mock")
        store.provision_account("UID0", "ana@acme.test", "ana-password")

        app = create_app(store, operator_token=OPERATOR_TOKEN)
        config = uvicorn.Config(app, host="127.0.0.1", port=0, log_level="warning")
        server = uvicorn.Server(config)
        thread = threading.Thread(target=server.run, daemon=True)
        thread.start()
        while not server.started:
            time.sleep(0.05)
        port = server.servers[0].sockets[0].getsockname()[1]
        base = f"http://127.0.0.1:{port}"
        print(f"serving on {base}\n")

        with httpx.Client(base_url=base) as client:
            login = client.post(
                "/auth/login",
                json={"email": "ana@acme.test", "password": "ana-password"},
            ).json()
            member = {"Authorization": f"Bearer {login['token']}"}
            print(f"member login: user_id={login['user_id']}")

            skills = client.get("/members/UID0/skills", headers=member).json()
            print(f"member view of their skills ({len(skills)} terms):")
            for row in skills:
                print(f"  {row['display_term']:<12} self_score={row['self_score']}")
            assert all("estimated_score" not in row for row in skills)
            print("  (no estimated_score anywhere in a member response)\n")

            ratings = [
                {"term": "python", "self_score": 80},
                {"term": "fastapi", "self_score": 90},
                {"term": "rust", "self_score": 10},
            ]
            accepted = client.post(
                "/members/UID0/skills", headers=member, json=ratings
            ).json()
            print(f"submitted {accepted['accepted']} self-ratings")

            rejected = client.post(
                "/members/UID0/skills",
                headers=member,
                json=[{"term": "python", "self_score": 47}],
            )
            print(
                f"score of 47 -> HTTP {rejected.status_code} "
                f"({rejected.json()['detail']['code']})\n"
            )

            operator = {"Authorization": f"Bearer {OPERATOR_TOKEN}"}
            top = client.get("/members/UID0/top-skills", headers=operator).json()
            print("operator view, top skills with estimates:")
            for row in top:
                print(
                    f"  {row['display_term']:<12} "
                    f"estimated={row['estimated_score']:>5.1f} "
                    f"self={row['self_score']}"
                )

        server.should_exit = True
        thread.join(timeout=5)
        print("\nserver stopped")


if __name__ == "__main__":
    main()
