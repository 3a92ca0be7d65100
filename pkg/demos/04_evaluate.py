"""Step 4: scoring estimates against self-ratings.

Runs the pipeline end to end (extract -> profile), seeds the store with the
members' own 0-100 self-ratings, and emits the accuracy reports: MAE,
MAE_STD, RMSE and Median AE pooled per model, plus a per-user MAE table
ordered by message volume.

Run from the repository root:

    python demos/04_evaluate.py
"""

import tempfile
from pathlib import Path

from skillmap.cli import main as skillmap

CORPUS = Path(__file__).resolve().parent.parent / "tests" / "data" / "corpus"

# In the real flow these arrive through the annotation UI; the values here
# are the demo members' self-assessments of the terms the mock provider
# surfaces from the corpus.
SELF_RATINGS = {
    "UID0": {"python": 80, "fastapi": 90, "rust": 10, "bpe": 40},
    "UID1": {"kubernetes": 95, "docker": 70, "chi": 20},
    "UID2": {"figma": 85, "postgres": 60, "excel": 0},
}


def main() -> None:
    with tempfile.TemporaryDirectory() as out:
        assert skillmap(["extract", "--root", str(CORPUS), "--out", out]) == 0
        assert skillmap(["profile", "--out", out]) == 0

        from skillmap.store import SelfAnnotation, SkillStore

        store = SkillStore(out, "mock")
        stamp = "2023-05-20T12:00:00+00:00"
        for user, ratings in SELF_RATINGS.items():
            for term, score in ratings.items():
                store.put_annotation(SelfAnnotation(user, term, score, stamp))

        assert skillmap(["eval", "--out", out, "--root", str(CORPUS)]) == 0

        reports = Path(out) / "reports"
        print("\n--- report.txt " + "-" * 40)
        print((reports / "report.txt").read_text(), end="")
        print("--- per_user.csv " + "-" * 38)
        print((reports / "per_user.csv").read_text(), end="")
        print("-" * 55)
        print(
            "note: per-user MAE shrinks as message volume grows — more "
            "evidence, better estimates."
        )


if __name__ == "__main__":
    main()
