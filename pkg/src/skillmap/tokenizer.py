"""Byte-pair tokenizer used for all token accounting.

One tokenizer serves every provider, mirroring the common practice of
approximating token counts with a single BPE vocabulary and absorbing the
per-provider error in a safety factor.  The vocabulary ships with the
package as a data file (one ``base64(token) rank`` pair per line, the same
layout tiktoken uses for its encodings), so counting works fully offline.

Two properties matter for the chunking stage and are guaranteed here by
construction:

* Pretokenization is *pairwise local*: whether a boundary falls between two
  adjacent characters depends only on that character pair.  Any substring of
  a text therefore pretokenizes exactly like the corresponding region of the
  full text.
* Merging is rank-greedy (always merge the lowest-ranked adjacent pair,
  leftmost first), and merged tokens never split.  Together with locality
  this means a slice of an encoding, cut at token boundaries, re-encodes to
  exactly that slice -- so contiguous token-range chunking is lossless.
"""

from __future__ import annotations

import base64
import heapq
import re
from types import MappingProxyType
from typing import Mapping
from collections import Counter
from functools import lru_cache
from importlib import resources
from pathlib import Path

__all__ = ["BpeTokenizer", "get_tokenizer", "count_tokens", "train_vocabulary"]

# Ids at or above this offset encode a raw codepoint for characters absent
# from the vocabulary; they never participate in merges.
FALLBACK_ID_OFFSET = 1_000_000

_DEFAULT_VOCAB = "data/bpe_vocab.txt"

# Character classes for the local pretokenizer.
_SPACE, _LETTER, _DIGIT, _OTHER = 0, 1, 2, 3


def _char_class(ch: str) -> int:
    if ch.isspace():
        return _SPACE
    if ch.isalpha():
        return _LETTER
    if ch.isdigit():
        return _DIGIT
    return _OTHER


def _is_boundary(prev: str, cur: str) -> bool:
    """Pairwise-local boundary rule: split on class changes, except that
    whitespace attaches to a following letter/digit (GPT-style ``" word"``)."""
    a, b = _char_class(prev), _char_class(cur)
    if a == b:
        return False
    if a == _SPACE and b in (_LETTER, _DIGIT):
        return False
    return True


class _ClassMap(dict):
    """Codepoint -> class letter, filled lazily so str.translate stays fast."""

    def __missing__(self, cp: int) -> str:
        letter = "sldo"[_char_class(chr(cp))]
        self[cp] = letter
        return letter


_CLASS_MAP = _ClassMap()
# One pretoken = spaces optionally capturing a following letter- or digit-run,
# or a maximal single-class run.  Equivalent to splitting at _is_boundary.
_PRETOKEN_RE = re.compile(r"s+(?:l+|d+)?|l+|d+|o+")


def pretokenize(text: str) -> list[str]:
    """Split text into pretokens; merges never cross these boundaries.

    Implemented as a character-class translation plus one regex pass; the
    pairwise rule itself is `_is_boundary`, against which this is property-
    tested for equivalence.
    """
    if not text:
        return []
    classes = text.translate(_CLASS_MAP)
    return [text[m.start() : m.end()] for m in _PRETOKEN_RE.finditer(classes)]


def _pretokenize_reference(text: str) -> list[str]:
    """Naive per-character implementation of the same boundary rule (tests)."""
    if not text:
        return []
    pieces: list[str] = []
    start = 0
    for i in range(1, len(text)):
        if _is_boundary(text[i - 1], text[i]):
            pieces.append(text[start:i])
            start = i
    pieces.append(text[start:])
    return pieces


def _merge_word(word: str, ranks: dict[str, int]) -> list[str]:
    """Rank-greedy BPE over one pretoken.

    Maintains the parts as a doubly linked list of spans and a heap of
    candidate merges keyed by (rank, start offset), so ties resolve leftmost
    and long runs stay O(n log n).
    """
    n = len(word)
    if n < 2:
        return [word] if word else []

    # Span i covers word[start[i]:end[i]]; nxt/prv link live spans.
    start = list(range(n))
    end = list(range(1, n + 1))
    nxt = list(range(1, n)) + [-1]
    prv = [-1] + list(range(n - 1))
    alive = [True] * n
    version = [0] * n

    heap: list[tuple[int, int, int, int, int, int]] = []

    def push(i: int) -> None:
        j = nxt[i]
        if j == -1:
            return
        merged = word[start[i] : end[j]]
        rank = ranks.get(merged)
        if rank is not None:
            heapq.heappush(heap, (rank, start[i], i, j, version[i], version[j]))

    for i in range(n - 1):
        push(i)

    while heap:
        _, _, i, j, vi, vj = heapq.heappop(heap)
        if not (alive[i] and alive[j]) or version[i] != vi or version[j] != vj or nxt[i] != j:
            continue
        # Left span absorbs the right one.
        end[i] = end[j]
        alive[j] = False
        version[i] += 1
        nxt[i] = nxt[j]
        if nxt[i] != -1:
            prv[nxt[i]] = i
        if prv[i] != -1:
            push(prv[i])
        push(i)

    # Node 0 is never absorbed (only right-hand nodes die), so walking the
    # nxt chain from 0 visits exactly the surviving spans in order.
    parts = []
    i = 0
    while i != -1:
        parts.append(word[start[i] : end[i]])
        i = nxt[i]
    return parts


class BpeTokenizer:
    """Encoder/decoder over a rank table loaded from a vocabulary file."""

    def __init__(self, ranks: dict[str, int], name: str = "custom"):
        if not ranks:
            raise ValueError("empty vocabulary")
        self.name = name
        self._ranks = dict(ranks)
        self._id_to_token = {rank: tok for tok, rank in self._ranks.items()}
        if len(self._id_to_token) != len(self._ranks):
            raise ValueError("vocabulary contains duplicate ranks")
        # Per-instance memo: pretokens repeat heavily in chat logs.
        self._word_cache: dict[str, tuple[int, ...]] = {}

    @classmethod
    def from_file(cls, path: str | Path) -> "BpeTokenizer":
        ranks: dict[str, int] = {}
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, 1):
                line = line.strip()
                if not line or line.startswith("#"):
                    continue
                try:
                    b64, rank_s = line.split()
                    token = base64.b64decode(b64).decode("utf-8")
                    ranks[token] = int(rank_s)
                except (ValueError, UnicodeDecodeError) as exc:
                    raise ValueError(f"bad vocabulary line {lineno} in {path}: {exc}") from exc
        return cls(ranks, name=Path(path).stem)

    @property
    def vocab_size(self) -> int:
        return len(self._ranks)

    @property
    def ranks(self) -> Mapping[str, int]:
        """Read-only token -> rank view (tiktoken's mergeable-ranks shape)."""
        return MappingProxyType(self._ranks)

    def _encode_word(self, word: str) -> tuple[int, ...]:
        cached = self._word_cache.get(word)
        if cached is not None:
            return cached
        ids = []
        for part in _merge_word(word, self._ranks):
            rank = self._ranks.get(part)
            if rank is not None:
                ids.append(rank)
            else:
                # Characters outside the vocabulary map to reserved ids and
                # never merge, keeping encode total over all of unicode.
                ids.extend(FALLBACK_ID_OFFSET + ord(c) for c in part)
        result = tuple(ids)
        if len(self._word_cache) >= 200_000:
            self._word_cache.clear()
        if len(word) <= 64:
            self._word_cache[word] = result
        return result

    def encode(self, text: str) -> list[int]:
        ids: list[int] = []
        for word in pretokenize(text):
            ids.extend(self._encode_word(word))
        return ids

    def decode(self, ids: list[int]) -> str:
        out = []
        for i in ids:
            if i >= FALLBACK_ID_OFFSET:
                out.append(chr(i - FALLBACK_ID_OFFSET))
            else:
                token = self._id_to_token.get(i)
                if token is None:
                    raise ValueError(f"unknown token id {i}")
                out.append(token)
        return "".join(out)

    def count(self, text: str) -> int:
        return len(self.encode(text))


@lru_cache(maxsize=4)
def get_tokenizer(vocab_path: str | None = None) -> BpeTokenizer:
    """Load the bundled default vocabulary (or an explicit file) once."""
    if vocab_path is not None:
        return BpeTokenizer.from_file(vocab_path)
    ref = resources.files("skillmap").joinpath(_DEFAULT_VOCAB)
    with resources.as_file(ref) as path:
        return BpeTokenizer.from_file(path)


def count_tokens(text: str) -> int:
    """Token count of ``text`` under the default vocabulary."""
    return get_tokenizer().count(text)


def train_vocabulary(corpus: str, merges: int) -> dict[str, int]:
    """Train a BPE rank table on ``corpus``.

    Base tokens are the distinct characters of the corpus (rank-ordered by
    codepoint); each training round merges the most frequent adjacent pair
    within pretokens, ties broken lexicographically so training is
    deterministic.  Used offline to produce the bundled vocabulary file.
    """
    words = Counter(pretokenize(corpus))
    chars = sorted({c for w in words for c in w})
    ranks: dict[str, int] = {c: i for i, c in enumerate(chars)}

    # Each distinct pretoken as a mutable symbol sequence with a weight.
    seqs: list[tuple[list[str], int]] = [([c for c in w], f) for w, f in words.items()]

    for _ in range(merges):
        pair_counts: Counter[tuple[str, str]] = Counter()
        for seq, freq in seqs:
            for a, b in zip(seq, seq[1:]):
                pair_counts[(a, b)] += freq
        if not pair_counts:
            break
        best_count = max(pair_counts.values())
        if best_count < 2:
            break
        best = min(p for p, c in pair_counts.items() if c == best_count)
        merged = best[0] + best[1]
        if merged in ranks:  # already formed via a different path
            pair_counts.pop(best)
            continue
        ranks[merged] = len(ranks)
        for seq, _ in seqs:
            i = 0
            while i < len(seq) - 1:
                if seq[i] == best[0] and seq[i + 1] == best[1]:
                    seq[i : i + 2] = [merged]
                else:
                    i += 1
    return ranks


def dump_vocabulary(ranks: dict[str, int], path: str | Path) -> None:
    """Write a rank table in the ``base64(token) rank`` file layout."""
    lines = [
        f"{base64.b64encode(tok.encode('utf-8')).decode('ascii')} {rank}"
        for tok, rank in sorted(ranks.items(), key=lambda kv: kv[1])
    ]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
