"""Step 3: extraction and profile aggregation.

Runs the full extraction loop over the bundled corpus with the offline mock
provider (deterministic, no credentials needed), then aggregates the
per-channel records into 0-100 skill profiles.  Swap the model name for
"gpt-4o" or "claude-sonnet-4-5" with credentials exported to run against a
real provider — everything else stays identical.

Run from the repository root:

    python demos/03_extract_and_profile.py
"""

import tempfile
from pathlib import Path

from skillmap.extractor import extract_user
from skillmap.ingest import build_membership, parse_export
from skillmap.profiler import aggregate, top_five
from skillmap.providers import create_provider, make_config

CORPUS = Path(__file__).resolve().parent.parent / "tests" / "data" / "corpus"


def main() -> None:
    export = parse_export(CORPUS)
    index = build_membership(export.channels)
    users = sorted(m.user_id for m in export.members)

    provider = create_provider(make_config("mock"))
    with tempfile.TemporaryDirectory() as out:
        with provider:
            provider.check_connection()
            for user in users:
                result = extract_user(user, export, index, provider, out)
                print(
                    f"{user}: wrote {len(result.written)} channel record(s), "
                    f"{result.provider_calls} provider call(s)"
                )
                profile = aggregate(result.records)
                for term, entry in top_five(profile):
                    channels = "+".join(entry.channels)
                    print(
                        f"    {entry.display_term:<12} "
                        f"score={entry.estimated_score:>5.1f}  ({channels})"
                    )

        # Rerunning over the same output directory is free: every record
        # already exists, so the provider is never called again.
        rerun = extract_user(users[0], export, index, provider, out)
        print(
            f"\nrerun for {users[0]}: {rerun.provider_calls} provider calls, "
            f"skipped {len(rerun.skipped_existing)} existing record(s)"
        )


if __name__ == "__main__":
    main()
