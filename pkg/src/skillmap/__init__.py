"""skillmap: estimate member skill profiles from team chat archives.

Pipeline stages (also exposed as CLI subcommands, see ``skillmap --help``):
parse a chat export, chunk each member's channel context under the model's
token budget, query an LLM provider for skill mentions, aggregate mention
levels into 0-100 profiles, collect self-ratings over HTTP, and score the
estimates against them.
"""

from .chunker import ChunkParams, ChunkPlan, effective_limit, plan_chunks
from .errors import (
    BudgetError,
    ConfigurationError,
    CredentialError,
    IngestError,
    MetricError,
    NotFoundError,
    ProviderError,
    ReportError,
    ResponseParseError,
    SkillmapError,
    StoreError,
)
from .evaluator import mae, mae_std, median_ae, model_report, per_user_report, rmse
from .extractor import (
    ExtractionRecord,
    KnowledgeItem,
    extract_user,
    parse_response,
)
from .ingest import (
    ChatEvent,
    ExportData,
    MemberRecord,
    build_membership,
    collect_input,
    filter_members,
    message_counts,
    parse_export,
)
from .profiler import (
    MergedProfile,
    SkillProfile,
    aggregate,
    level_to_score,
    merge_self,
    top_five,
)
from .providers import (
    CompletionRequest,
    CompletionResponse,
    ProviderConfig,
    classify_token_param,
    create_provider,
    lookup_context_window,
    make_config,
)
from .store import Account, SelfAnnotation, SkillStore, validate_self_score
from .tokenizer import BpeTokenizer, count_tokens, get_tokenizer

__version__ = "0.1.0"

__all__ = [
    "__version__",
    # errors
    "SkillmapError",
    "IngestError",
    "BudgetError",
    "ConfigurationError",
    "CredentialError",
    "ProviderError",
    "ResponseParseError",
    "StoreError",
    "NotFoundError",
    "MetricError",
    "ReportError",
    # tokenizer
    "BpeTokenizer",
    "get_tokenizer",
    "count_tokens",
    # chunker
    "ChunkParams",
    "ChunkPlan",
    "effective_limit",
    "plan_chunks",
    # ingest
    "ChatEvent",
    "ExportData",
    "MemberRecord",
    "parse_export",
    "build_membership",
    "filter_members",
    "collect_input",
    "message_counts",
    # providers
    "ProviderConfig",
    "CompletionRequest",
    "CompletionResponse",
    "make_config",
    "create_provider",
    "classify_token_param",
    "lookup_context_window",
    # extractor
    "ExtractionRecord",
    "KnowledgeItem",
    "extract_user",
    "parse_response",
    # profiler
    "SkillProfile",
    "MergedProfile",
    "aggregate",
    "merge_self",
    "top_five",
    "level_to_score",
    # store
    "SkillStore",
    "SelfAnnotation",
    "Account",
    "validate_self_score",
    # evaluator
    "mae",
    "mae_std",
    "rmse",
    "median_ae",
    "model_report",
    "per_user_report",
]
