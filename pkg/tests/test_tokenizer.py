"""Tokenizer tests: vocabulary loading, BPE merge order, pretokenizer
boundary rules, round-trips, and the slice-stability property the chunker
depends on."""

import base64
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from skillmap.tokenizer import (
    FALLBACK_ID_OFFSET,
    BpeTokenizer,
    _pretokenize_reference,
    count_tokens,
    get_tokenizer,
    pretokenize,
    train_vocabulary,
)

# Mixed scripts, symbols, digit runs, and whitespace shapes that historically
# break pretokenizers.
AWKWARD_TEXTS = [
    "",
    " ",
    "   ",
    "a",
    "hello world",
    "hello  world",
    "abc123def",
    " leading and trailing ",
    "tabs\tand\nnewlines\r\n",
    "json: {\"user\": \"UID0\", \"ts\": \"1683702597.263009\"}",
    "emoji \U0001f680 and accents éèê",
    "東京都 is Tokyo",
    "math ½ + ² = ?",
    "C++ and C# and k8s and a-b-c",
    "....!!!!????",
    "1683702597.263009",
]


def test_bundled_vocabulary_loads():
    tok = get_tokenizer()
    assert isinstance(tok, BpeTokenizer)
    assert len(tok.ranks) > 1000
    # Ranks are the contiguous range 0..N-1 (mergeable-ranks format).
    assert sorted(tok.ranks.values()) == list(range(len(tok.ranks)))


def test_vocabulary_file_format():
    # Each line: base64(token bytes) <space> rank.
    from importlib import resources

    text = (
        resources.files("skillmap").joinpath("data/bpe_vocab.txt").read_text("utf-8")
    )
    lines = [ln for ln in text.splitlines() if ln.strip()]
    for ln in lines[:50] + lines[-50:]:
        b64, rank = ln.split()
        base64.b64decode(b64, validate=True).decode("utf-8")
        int(rank)


def test_get_tokenizer_is_cached():
    assert get_tokenizer() is get_tokenizer()


# ---------------------------------------------------------------------------
# Pretokenizer
# ---------------------------------------------------------------------------

def test_pretokenize_explicit_boundaries():
    assert pretokenize("hello world") == ["hello", " world"]
    assert pretokenize("abc123") == ["abc", "123"]
    assert pretokenize("a,b") == ["a", ",", "b"]
    # Space attaches to a following letter or digit run...
    assert pretokenize(" x") == [" x"]
    assert pretokenize("  42") == ["  42"]
    # ...but not to punctuation.
    assert pretokenize(" !") == [" ", "!"]
    assert pretokenize("--v2") == ["--", "v", "2"]
    assert pretokenize("") == []


def test_pretokenize_concatenation_identity():
    for text in AWKWARD_TEXTS:
        assert "".join(pretokenize(text)) == text


@settings(max_examples=300, deadline=None)
@given(st.text(max_size=200))
def test_pretokenize_matches_reference(text):
    assert pretokenize(text) == _pretokenize_reference(text)


def test_pretokenize_matches_reference_awkward():
    for text in AWKWARD_TEXTS:
        assert pretokenize(text) == _pretokenize_reference(text)


# ---------------------------------------------------------------------------
# BPE merge order against a brute-force oracle
# ---------------------------------------------------------------------------

def _merge_oracle(word: str, ranks: dict[str, int]) -> list[str]:
    """Independent reference: repeatedly merge the leftmost lowest-rank
    adjacent pair until none is mergeable."""
    parts = list(word)
    while True:
        best_rank = None
        best_i = None
        for i in range(len(parts) - 1):
            rank = ranks.get(parts[i] + parts[i + 1])
            if rank is not None and (best_rank is None or rank < best_rank):
                best_rank, best_i = rank, i
        if best_i is None:
            return parts
        parts[best_i : best_i + 2] = [parts[best_i] + parts[best_i + 1]]


def test_encode_matches_bruteforce_oracle_on_random_words():
    tok = get_tokenizer()
    rng = random.Random(1234)
    letters = "abcdefghijklmnopqrstuvwxyz"
    for _ in range(200):
        word = "".join(rng.choice(letters) for _ in range(rng.randint(1, 24)))
        expected = [tok.ranks[p] for p in _merge_oracle(word, tok.ranks)]
        assert tok.encode(word) == expected, word


def test_encode_matches_oracle_on_common_words():
    tok = get_tokenizer()
    for word in ["the", "deployment", "kubernetes", "tokenizer", "xylophonequartz"]:
        expected = [tok.ranks[p] for p in _merge_oracle(word, tok.ranks)]
        assert tok.encode(word) == expected, word


# ---------------------------------------------------------------------------
# Round-trips and counting
# ---------------------------------------------------------------------------

def test_roundtrip_awkward_texts():
    tok = get_tokenizer()
    for text in AWKWARD_TEXTS:
        assert tok.decode(tok.encode(text)) == text


@settings(max_examples=300, deadline=None)
@given(st.text(max_size=300))
def test_roundtrip_property(text):
    tok = get_tokenizer()
    assert tok.decode(tok.encode(text)) == text


def test_count_tokens_equals_encode_length():
    tok = get_tokenizer()
    for text in AWKWARD_TEXTS:
        assert count_tokens(text) == len(tok.encode(text))


def test_fixture_is_exactly_1000_tokens(fixture_1000_tokens):
    assert count_tokens(fixture_1000_tokens) == 1000


def test_unknown_characters_fall_back_to_codepoint_ids():
    tok = get_tokenizer()
    text = "snow ☃ day"
    ids = tok.encode(text)
    fallback = [i for i in ids if i >= FALLBACK_ID_OFFSET]
    assert fallback == [FALLBACK_ID_OFFSET + 0x2603]
    assert tok.decode(ids) == text


def test_decode_rejects_unknown_ids():
    tok = get_tokenizer()
    bogus = len(tok.ranks) + 17
    with pytest.raises(ValueError):
        tok.decode([bogus])


# ---------------------------------------------------------------------------
# Slice stability (the chunking-critical property)
# ---------------------------------------------------------------------------

def _random_text(rng: random.Random, size: int) -> str:
    pieces = [
        "the", " deploy", " went", " fine", " postgres", "123", " ok!",
        " été", " {", "\"x\": 1}", "\n", "  spaces", " CHI",
        " tokenizer", ".", ",", " a+b-c",
    ]
    return "".join(rng.choice(pieces) for _ in range(size))


def test_any_slice_reencodes_to_itself():
    tok = get_tokenizer()
    rng = random.Random(99)
    for _ in range(60):
        text = _random_text(rng, rng.randint(0, 80))
        ids = tok.encode(text)
        for _ in range(10):
            if not ids:
                break
            a = rng.randint(0, len(ids))
            b = rng.randint(a, len(ids))
            piece = ids[a:b]
            assert tok.encode(tok.decode(piece)) == piece


def test_multicut_concatenation_reproduces_encoding():
    tok = get_tokenizer()
    rng = random.Random(7)
    for _ in range(40):
        text = _random_text(rng, rng.randint(1, 120))
        ids = tok.encode(text)
        if not ids:
            continue
        cuts = sorted(rng.sample(range(len(ids) + 1), min(4, len(ids) + 1)))
        cuts = [0] + cuts + [len(ids)]
        rejoined = []
        for a, b in zip(cuts, cuts[1:]):
            rejoined.extend(tok.encode(tok.decode(ids[a:b])))
        assert rejoined == ids


# ---------------------------------------------------------------------------
# Training
# ---------------------------------------------------------------------------

def test_train_vocabulary_merges_frequent_pairs():
    corpus = "ababab ababab cdcd " * 10
    ranks = train_vocabulary(corpus, merges=50)
    tok = BpeTokenizer(ranks)
    assert tok.decode(tok.encode(corpus)) == corpus
    assert "ab" in ranks  # the most frequent pair merged first
    # Encoding of a frequent word is compressed below character count.
    assert len(tok.encode("ababab")) < len("ababab")


def test_train_vocabulary_stops_at_saturation():
    # Every pair occurs once: no pair reaches the count-2 merge threshold.
    corpus = "abcdefg"
    ranks = train_vocabulary(corpus, merges=100)
    assert len(ranks) == len(set(corpus))
