"""Acceptance suite: one test per stated criterion, at the stated tolerances.

Run with ``pytest -v tests/test_acceptance.py`` to get one pass/fail line per
criterion.  Everything here is self-contained: randomized cases use fixed
seeds, goldens live under tests/golden/e2e, and no network access occurs.
"""

import hashlib
import json
import logging
import math
import random
import statistics
import time
from fractions import Fraction

import pytest
from fastapi.testclient import TestClient

from skillmap.api import create_app
from skillmap.chunker import DEFAULT_RESERVED_TOKENS, ChunkParams, plan_chunks
from skillmap.cli import main as cli_main
from skillmap.evaluator import (
    EvalPair,
    mae,
    mae_std,
    median_ae,
    model_report,
    rmse,
)
from skillmap.ingest import parse_export
from skillmap.profiler import ProfileEntry, SkillProfile, save_profile
from skillmap.providers import (
    ANTHROPIC_OUTPUT_CAP,
    DEFAULT_CONTEXT_WINDOW,
    FAMILY_ANTHROPIC,
    FAMILY_GEMINI,
    FAMILY_MOCK,
    FAMILY_OPENAI,
    SAFETY_FACTORS,
    classify_token_param,
    lookup_context_window,
)
from skillmap.store import SelfAnnotation, SkillStore
from skillmap.tokenizer import count_tokens, get_tokenizer


# ---------------------------------------------------------------------------
# Criterion 1: chunking invariants on 500 randomized inputs, all provider
# configs, < 60 s
# ---------------------------------------------------------------------------

PIECE_POOL = [
    " the", " we", " shipped", " kubernetes", " deployment", " python",
    " grafana", " dashboards", " postgres", " migration", " 2024", " ☃",
    " foo()", " CI/CD", " retry-loop", " oncall!", " ok", " 17",
    " transformers", " übergröße", " naïve", " a",
]


def _build_text(rng, pieces_with_counts, one_token_piece, target_tokens):
    """Concatenate pool pieces totalling exactly ``target_tokens`` tokens.

    Every piece starts with a space, so piece token counts are
    context-independent and counts add up exactly.
    """
    parts = []
    remaining = target_tokens
    max_count = max(c for _, c in pieces_with_counts)
    while remaining > max_count:
        piece, count = pieces_with_counts[rng.randrange(len(pieces_with_counts))]
        parts.append(piece)
        remaining -= count
    parts.extend(one_token_piece for _ in range(remaining))
    return "".join(parts)


def test_chunking_invariants_on_500_randomized_inputs(caplog):
    started = time.monotonic()
    rng = random.Random(0x5EED)
    tokenizer = get_tokenizer()

    pieces_with_counts = [(p, count_tokens(p)) for p in PIECE_POOL]
    one_token_piece = next(p for p, c in pieces_with_counts if c == 1)

    family_configs = [
        (FAMILY_OPENAI, 128000),
        (FAMILY_ANTHROPIC, 200000),
        (FAMILY_GEMINI, 32768),
        (FAMILY_MOCK, 4096),
    ]

    sizes = [0, 1, 500_000]
    sizes += [rng.randint(100_000, 400_000) for _ in range(5)]
    sizes += [
        int(math.exp(rng.uniform(math.log(2), math.log(20_000))))
        for _ in range(492)
    ]
    assert len(sizes) == 500

    caplog.set_level(logging.WARNING, logger="skillmap.chunker")
    budget_error_checked = False
    capped_cases = 0
    multi_chunk_cases = 0

    for case_index, target_tokens in enumerate(sizes):
        family, default_window = family_configs[case_index % 4]
        safety = SAFETY_FACTORS[family]
        # Half the cases exercise operator-overridden small windows, which
        # is where multi-chunk splitting actually happens.
        t_max = default_window if rng.random() < 0.5 else rng.randint(600, 5000)

        t_eff_expected = int(Fraction(str(safety)) * t_max)
        t_sys = rng.randint(0, min(400, max(0, t_eff_expected // 4)))
        t_tmpl = rng.randint(0, 20)
        room = t_eff_expected - t_sys - t_tmpl
        if room <= 1:
            t_sys, t_tmpl, room = 0, 0, t_eff_expected
        t_res = rng.randint(0, room - 1)
        n_max = rng.randint(1, 3) if case_index % 7 == 3 else None

        text = _build_text(rng, pieces_with_counts, one_token_piece, target_tokens)
        params = ChunkParams(
            t_max=t_max, safety_factor=safety, t_sys=t_sys, t_tmpl=t_tmpl,
            t_res=t_res, n_max=n_max,
        )
        warnings_before = sum(
            "chunk cap reached" in r.message for r in caplog.records
        )
        plan = plan_chunks(text, params)

        # Floor/ceil budget formulas hold exactly (Fraction-based oracle).
        assert plan.t_eff == t_eff_expected
        assert plan.t_chunk == t_eff_expected - t_sys - t_tmpl - t_res
        assert plan.t_input == target_tokens
        expected_chunks = (
            math.ceil(Fraction(plan.t_input, plan.t_chunk)) if plan.t_input else 0
        )
        assert plan.n_chunks == expected_chunks
        if plan.n_chunks > 1:
            multi_chunk_cases += 1

        # N_max capping and its warning.
        warnings_after = sum(
            "chunk cap reached" in r.message for r in caplog.records
        )
        if n_max is not None and expected_chunks > n_max:
            assert plan.capped is True
            assert len(plan.segments) == n_max
            assert warnings_after == warnings_before + 1
            capped_cases += 1
        else:
            assert plan.capped is False
            assert len(plan.segments) == plan.n_chunks
            assert warnings_after == warnings_before

        # Every segment holds its exact token budget.
        segment_counts = [count_tokens(s) for s in plan.segments]
        assert all(c <= plan.t_chunk for c in segment_counts)
        if plan.capped:
            assert segment_counts == [plan.t_chunk] * len(plan.segments)
        elif plan.n_chunks:
            tail = plan.t_input - (plan.n_chunks - 1) * plan.t_chunk
            assert segment_counts == [plan.t_chunk] * (plan.n_chunks - 1) + [tail]
        else:
            assert segment_counts == []

        # Concatenated encodings equal the input encoding.
        joined = "".join(plan.segments)
        if plan.capped:
            assert text.startswith(joined)
        else:
            assert joined == text
            assert tokenizer.encode(joined) == tokenizer.encode(text)

    # The distribution exercised what the criterion cares about.
    assert multi_chunk_cases >= 50
    assert capped_cases >= 10

    # A degenerate budget must refuse loudly rather than emit garbage chunks.
    from skillmap.errors import BudgetError

    with pytest.raises(BudgetError, match="prompt overhead exceeds"):
        plan_chunks("hello", ChunkParams(
            t_max=1000, safety_factor=0.65, t_sys=600, t_tmpl=20, t_res=500,
        ))
    budget_error_checked = True

    elapsed = time.monotonic() - started
    assert budget_error_checked and elapsed < 60.0, f"took {elapsed:.1f}s"


# ---------------------------------------------------------------------------
# Criterion 2: frozen provider constant tables, exact equality
# ---------------------------------------------------------------------------

def test_provider_constant_tables_exact():
    assert SAFETY_FACTORS[FAMILY_OPENAI] == 0.75
    assert SAFETY_FACTORS[FAMILY_ANTHROPIC] == 0.65
    assert SAFETY_FACTORS[FAMILY_GEMINI] == 0.75

    assert lookup_context_window("gpt-4o") == 128000
    assert lookup_context_window("gpt-5") == 128000
    assert lookup_context_window("o3") == 128000
    assert lookup_context_window("claude-sonnet-4-5") == 200000
    assert lookup_context_window("claude-haiku-4-5") == 200000
    assert lookup_context_window("gemini-2.5-pro") == 32768
    assert lookup_context_window("gemini-2.5-flash") == 32768
    assert lookup_context_window("some-unknown-model") == 4096
    assert DEFAULT_CONTEXT_WINDOW == 4096

    assert DEFAULT_RESERVED_TOKENS == 500
    assert ANTHROPIC_OUTPUT_CAP == 4096

    assert classify_token_param("gpt-4o") == "max_tokens"
    assert classify_token_param("o3") == "max_completion_tokens"
    assert classify_token_param("o4-mini") == "max_completion_tokens"
    assert classify_token_param("gpt-5") == "max_completion_tokens"


# ---------------------------------------------------------------------------
# Criterion 3: metric oracle equivalence, 1e-9, 1000 random pair sets
# ---------------------------------------------------------------------------

def _pairs(values):
    return [
        EvalPair(y=y, y_hat=y_hat, user="U", term=f"t{i}", model="m")
        for i, (y, y_hat) in enumerate(values)
    ]


def test_metric_oracle_equivalence_on_1000_random_sets():
    rng = random.Random(0xACE5)
    for _ in range(1000):
        n = rng.randint(1, 500)
        values = [(rng.uniform(0, 100), rng.uniform(0, 100)) for _ in range(n)]
        pairs = _pairs(values)
        abs_errors = [abs(y - y_hat) for y, y_hat in values]

        got_mae = mae(pairs)
        got_rmse = rmse(pairs)
        got_median = median_ae(pairs)
        got_std = mae_std(pairs)

        assert abs(got_mae - statistics.fmean(abs_errors)) < 1e-9
        assert abs(
            got_rmse - math.sqrt(statistics.fmean([e * e for e in abs_errors]))
        ) < 1e-9
        assert abs(got_median - statistics.median(abs_errors)) < 1e-9
        if n == 1:
            assert got_std is None  # MAE_STD absent iff n = 1
        else:
            assert abs(got_std - statistics.stdev(abs_errors)) < 1e-9
        assert got_mae <= got_rmse + 1e-9  # MAE <= RMSE on every set

    # Hand-checked fixtures, exact.
    two = _pairs([(10.0, 0.0), (30.0, 0.0)])
    assert mae(two) == 20.0
    assert mae_std(two) == math.sqrt(200)
    swap = _pairs([(0.0, 100.0), (100.0, 0.0)])
    assert rmse(swap) == 100.0


# ---------------------------------------------------------------------------
# Criterion 4: end-to-end determinism on the bundled corpus, golden files,
# zero-call resume, < 10 s
# ---------------------------------------------------------------------------

ANNOTATION_TS = "2023-05-20T12:00:00+00:00"
SELF_RATINGS = {
    "UID0": {"python": 80, "fastapi": 90, "rust": 10, "bpe": 40},
    "UID1": {"kubernetes": 95, "docker": 70, "chi": 20},
    "UID2": {"figma": 85, "postgres": 60, "excel": 0},
}


def _run_pipeline(corpus_root, out):
    assert cli_main(
        ["extract", "--root", str(corpus_root), "--out", str(out)]
    ) == 0
    assert cli_main(["profile", "--out", str(out)]) == 0
    store = SkillStore(out, "mock")
    for user, ratings in SELF_RATINGS.items():
        for term, score in ratings.items():
            store.put_annotation(SelfAnnotation(user, term, score, ANNOTATION_TS))
    assert cli_main(
        ["eval", "--out", str(out), "--root", str(corpus_root)]
    ) == 0


def _tree_digest(root, subdirs):
    digests = {}
    for sub in subdirs:
        base = root / sub
        for path in sorted(base.rglob("*")):
            if path.is_file():
                digest = hashlib.sha256(path.read_bytes()).hexdigest()
                digests[str(path.relative_to(root))] = digest
    return digests


def test_end_to_end_determinism_against_goldens(corpus_root, golden_e2e, tmp_path):
    started = time.monotonic()
    subdirs = ("mock", "profiles", "reports")

    run_a = tmp_path / "a"
    run_b = tmp_path / "b"
    _run_pipeline(corpus_root, run_a)
    _run_pipeline(corpus_root, run_b)

    # Two fresh runs are byte-identical (manifest included).
    digests_a = _tree_digest(run_a, subdirs)
    assert digests_a == _tree_digest(run_b, subdirs)

    # And identical to the pinned goldens, file set and bytes both.
    assert digests_a == _tree_digest(golden_e2e, subdirs)

    # Resume: a second extract over existing outputs spends zero provider
    # calls and rewrites nothing but the manifest bookkeeping.
    assert cli_main(
        ["extract", "--root", str(corpus_root), "--out", str(run_a)]
    ) == 0
    manifest = json.loads((run_a / "mock" / "manifest.json").read_text())
    for user in ("UID0", "UID1", "UID2"):
        assert manifest["users"][user]["provider_calls"] == 0
        assert manifest["users"][user]["skipped_existing"] == [
            "general", "research",
        ]
    after_resume = {
        path: digest
        for path, digest in _tree_digest(run_a, subdirs).items()
        if not path.endswith("manifest.json")
    }
    expected = {
        path: digest
        for path, digest in digests_a.items()
        if not path.endswith("manifest.json")
    }
    assert after_resume == expected

    elapsed = time.monotonic() - started
    assert elapsed < 10.0, f"took {elapsed:.1f}s"


# ---------------------------------------------------------------------------
# Criterion 5: listing fidelity
# ---------------------------------------------------------------------------

def test_listing_fixture_fields_exact(listings_root):
    export = parse_export(listings_root)
    events = export.channels["conference-hall"]
    message = next(e for e in events if e.kind == "authored-message")
    join = next(e for e in events if e.kind == "channel-join")

    assert message.author == "UID0"
    assert message.ts_raw == "1683702597.263009"
    assert str(message.ts) == "1683702597.263009"
    assert message.reply_count == 2
    assert len(message.replies) == 2
    assert message.replies[0] == ("UID1", "1683704080.511989")
    assert message.thread_ts == "1683702597.263009"
    assert len(message.reactions) == 1
    reaction = message.reactions[0]
    assert reaction.name == "+1"
    assert reaction.count == 2
    assert reaction.users == ("UID2", "UID3")
    assert 'please search  "keywords + conference name"' in message.text
    assert "CHI, ETRA, UbiComp, ISWC, UIST, CVPR, AHs, SIGGRAPH" in message.text

    assert join.author == "UID4"
    assert join.subtype == "channel_join"
    assert join.ts_raw == "1493555632.223680"
    assert join.text == "<@UID4> has joined the channel"


# ---------------------------------------------------------------------------
# Criterion 6: report-shape reproduction (33.38 vs 21.13)
# ---------------------------------------------------------------------------

def test_report_shape_orders_and_flags_best():
    pairs_by_model = {
        "model-x": _pairs([(30.0, 0.0), (36.76, 0.0)]),  # MAE 33.38
        "model-y": _pairs([(20.0, 0.0), (22.26, 0.0)]),  # MAE 21.13
    }
    rows = model_report(pairs_by_model)
    assert [r.model for r in rows] == ["model-x", "model-y"]  # MAE descending
    assert rows[0].mae == pytest.approx(33.38, abs=1e-9)
    assert rows[1].mae == pytest.approx(21.13, abs=1e-9)
    assert [r.best for r in rows] == [False, True]  # lower-MAE model is best


# ---------------------------------------------------------------------------
# Criterion 7: API contract, runnable with no UI built
# ---------------------------------------------------------------------------

def test_api_contract(tmp_path):
    store = SkillStore(tmp_path, "mock")
    save_profile(
        tmp_path,
        SkillProfile(
            user="UID0",
            model="mock",
            entries={
                "python": ProfileEntry("python", 50.0, ("general",), 1),
                "rust": ProfileEntry("rust", 50.0, ("general",), 1),
            },
        ),
    )
    store.provision_account("UID0", "ana@acme.test", "ana-password")
    store.provision_account("UID1", "ben@acme.test", "ben-password")

    app = create_app(store, operator_token="op-token")
    client = TestClient(app)

    # Route table: exactly 3 GETs + 1 skills POST (+ login).
    from fastapi.routing import APIRoute

    routes = {
        (route.path, method)
        for route in app.routes
        if isinstance(route, APIRoute)
        for method in route.methods
    }
    assert routes == {
        ("/auth/login", "POST"),
        ("/members", "GET"),
        ("/members/{uid}/skills", "GET"),
        ("/members/{uid}/top-skills", "GET"),
        ("/members/{uid}/skills", "POST"),
    }

    token = client.post(
        "/auth/login",
        json={"email": "ana@acme.test", "password": "ana-password"},
    ).json()["token"]
    headers = {"Authorization": f"Bearer {token}"}

    # Member skill responses never contain estimated_score.
    rows = client.get("/members/UID0/skills", headers=headers).json()
    assert rows and all("estimated_score" not in row for row in rows)

    # Scores off the 5-grid are rejected with 422.
    response = client.post(
        "/members/UID0/skills",
        headers=headers,
        json=[{"term": "python", "self_score": 47}],
    )
    assert response.status_code == 422

    # Cross-member access is forbidden.
    assert client.get(
        "/members/UID1/skills", headers=headers
    ).status_code == 403
    assert client.post(
        "/members/UID1/skills",
        headers=headers,
        json=[{"term": "python", "self_score": 50}],
    ).status_code == 403
