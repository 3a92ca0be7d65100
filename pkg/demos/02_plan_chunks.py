"""Step 2: token budgets and chunk planning.

Every provider request must fit the model's context window with room to
spare.  This demo serializes one channel's log as INPUTDATA and shows the
exact budget arithmetic for several model configurations:

    T_eff    = floor(safety_factor * T_max)
    T_chunk  = T_eff - T_sys - T_tmpl - T_res
    N_chunks = ceil(T_input / T_chunk)

Run from the repository root:

    python demos/02_plan_chunks.py
"""

from pathlib import Path

from skillmap.chunker import ChunkParams, plan_chunks
from skillmap.extractor import prompt_overhead
from skillmap.ingest import build_membership, collect_input, parse_export
from skillmap.providers import make_config
from skillmap.tokenizer import count_tokens

CORPUS = Path(__file__).resolve().parent.parent / "tests" / "data" / "corpus"

MODELS = ["gpt-4o", "claude-sonnet-4-5", "gemini-2.5-pro", "mock"]


def main() -> None:
    export = parse_export(CORPUS)
    index = build_membership(export.channels)
    doc = collect_input("UID0", "general", export.channels["general"], index)
    assert doc is not None

    t_sys, t_tmpl = prompt_overhead("UID0")
    print(f"INPUTDATA for UID0 in #general: {count_tokens(doc.text)} tokens "
          f"({doc.message_count} messages)")
    print(f"prompt overhead: system={t_sys} template={t_tmpl} tokens\n")

    header = f"{'model':<18} {'T_max':>7} {'s':>5} {'T_eff':>7} {'T_chunk':>8} {'chunks':>7}"
    print(header)
    print("-" * len(header))
    for model in MODELS:
        config = make_config(model)
        params = ChunkParams(
            t_max=config.context_window,
            safety_factor=config.safety_factor,
            t_sys=t_sys,
            t_tmpl=t_tmpl,
        )
        plan = plan_chunks(doc.text, params)
        print(
            f"{model:<18} {config.context_window:>7} {config.safety_factor:>5}"
            f" {plan.t_eff:>7} {plan.t_chunk:>8} {plan.n_chunks:>7}"
        )

    # Shrink the window until the log no longer fits in one request.
    print("\nsame input under a tiny 1200-token window (mock family):")
    config = make_config("mock", context_window=1200)
    plan = plan_chunks(
        doc.text,
        ChunkParams(
            t_max=config.context_window,
            safety_factor=config.safety_factor,
            t_sys=t_sys,
            t_tmpl=t_tmpl,
            t_res=0,
        ),
    )
    print(f"  T_chunk={plan.t_chunk}  ->  {plan.n_chunks} chunks")
    for i, segment in enumerate(plan.segments):
        preview = segment[:60].replace("\n", " ")
        print(f"  chunk {i}: {count_tokens(segment):>4} tokens  {preview!r}...")


if __name__ == "__main__":
    main()
