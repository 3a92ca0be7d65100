"""Token counting and context-budget chunking.

The budget arithmetic is exact integer math:

    T_eff    = floor(s * T_max)
    T_chunk  = T_eff - T_sys - T_tmpl - T_res
    N_chunks = ceil(T_input / T_chunk)

``s`` is applied through :class:`fractions.Fraction` built from its decimal
string, so ``floor(0.29 * 100)`` is 29 and never 28 via binary-float error.

Splitting is purely token-positional: the input's encoding is cut into
contiguous ranges of at most ``T_chunk`` tokens and each range decoded back
to text.  The tokenizer guarantees any contiguous slice of an encoding
re-encodes to exactly that slice, so segment token counts are exact and the
concatenated segment encodings reproduce the input encoding.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from fractions import Fraction

from .errors import BudgetError, ConfigurationError
from .tokenizer import count_tokens, get_tokenizer

__all__ = ["ChunkParams", "ChunkPlan", "count_tokens", "effective_limit", "plan_chunks"]

logger = logging.getLogger(__name__)

DEFAULT_RESERVED_TOKENS = 500


@dataclass(frozen=True)
class ChunkParams:
    """Budget inputs for one (model, prompt) configuration.

    ``safety_factor`` is normally in (0, 1); exactly 1.0 is allowed for the
    boundary-exempt offline mock, which has no real context window.
    """

    t_max: int
    safety_factor: float
    t_sys: int
    t_tmpl: int
    t_res: int = DEFAULT_RESERVED_TOKENS
    n_max: int | None = None

    def __post_init__(self) -> None:
        if self.t_max <= 0:
            raise ConfigurationError(f"t_max must be positive, got {self.t_max}")
        if not 0 < self.safety_factor <= 1:
            raise ConfigurationError(
                f"safety factor must be in (0, 1], got {self.safety_factor}"
            )
        if self.t_res < 0:
            raise ConfigurationError(f"t_res must be >= 0, got {self.t_res}")
        if min(self.t_sys, self.t_tmpl) < 0:
            raise ConfigurationError("prompt token counts cannot be negative")
        if self.n_max is not None and self.n_max < 1:
            raise ConfigurationError(f"n_max must be >= 1, got {self.n_max}")


@dataclass(frozen=True)
class ChunkPlan:
    params: ChunkParams
    t_eff: int
    t_chunk: int
    t_input: int
    n_chunks: int
    segments: tuple[str, ...]
    capped: bool


def effective_limit(t_max: int, safety_factor: float) -> int:
    """floor(s * T_max) computed exactly from s's decimal representation."""
    return int(Fraction(str(safety_factor)) * t_max)


def plan_chunks(text: str, params: ChunkParams) -> ChunkPlan:
    """Split ``text`` into token-budget segments under ``params``.

    Raises :class:`BudgetError` when the prompt overhead leaves no room for
    input — a silent clamp would produce degenerate chunks and garbage
    extractions downstream.
    """
    t_eff = effective_limit(params.t_max, params.safety_factor)
    t_chunk = t_eff - params.t_sys - params.t_tmpl - params.t_res
    if t_chunk <= 0:
        raise BudgetError(
            "prompt overhead exceeds effective context: "
            f"T_eff={t_eff}, T_sys={params.t_sys}, T_tmpl={params.t_tmpl}, "
            f"T_res={params.t_res}"
        )

    tokenizer = get_tokenizer()
    ids = tokenizer.encode(text)
    t_input = len(ids)
    n_chunks = -(-t_input // t_chunk)  # ceil for non-negative ints

    n_emit = n_chunks
    capped = False
    if params.n_max is not None and n_chunks > params.n_max:
        n_emit = params.n_max
        capped = True
        logger.warning(
            "chunk cap reached: %d chunks needed, emitting %d", n_chunks, n_emit
        )

    segments = tuple(
        tokenizer.decode(ids[i * t_chunk : (i + 1) * t_chunk]) for i in range(n_emit)
    )
    return ChunkPlan(
        params=params,
        t_eff=t_eff,
        t_chunk=t_chunk,
        t_input=t_input,
        n_chunks=n_chunks,
        segments=segments,
        capped=capped,
    )
