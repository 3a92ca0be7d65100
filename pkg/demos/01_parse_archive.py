"""Step 1: parse a chat export archive.

Reads the bundled synthetic corpus (a Slack-style export: one directory per
channel, one JSON array per day, plus users.json) and shows what the ingest
layer recovers: channels, members, per-user message volume, and how many
malformed records were skipped.

Run from the repository root:

    python demos/01_parse_archive.py
"""

from pathlib import Path

from skillmap.ingest import build_membership, message_counts, parse_export

CORPUS = Path(__file__).resolve().parent.parent / "tests" / "data" / "corpus"


def main() -> None:
    export = parse_export(CORPUS)

    print(f"export root: {CORPUS}")
    print(f"channels:    {', '.join(sorted(export.channels))}")
    print(f"members:     {len(export.members)}")
    for member in export.members:
        flags = ",".join(sorted(member.activity_flags)) or "-"
        print(f"  {member.user_id}  {member.email:<18} flags={flags}")
    print(f"skipped records: {export.skipped_records}")

    print("\nper-channel events:")
    for channel, events in sorted(export.channels.items()):
        kinds: dict[str, int] = {}
        for event in events:
            kinds[event.kind] = kinds.get(event.kind, 0) + 1
        summary = ", ".join(f"{k}={v}" for k, v in sorted(kinds.items()))
        print(f"  #{channel}: {len(events)} events ({summary})")

    print("\nauthored messages per user:")
    for user, count in sorted(message_counts(export.channels).items()):
        print(f"  {user}: {count}")

    index = build_membership(export.channels)
    print("\nchannel membership (joins or first authored message):")
    for channel in sorted(export.channels):
        members = sorted(
            u for u in (m.user_id for m in export.members)
            if index.is_member(channel, u)
        )
        print(f"  #{channel}: {', '.join(members)}")


if __name__ == "__main__":
    main()
