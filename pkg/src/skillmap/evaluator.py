"""Estimation-error metrics and report emission.

Computes MAE, MAE_STD (sample standard deviation of absolute errors, n-1
denominator), RMSE, and Median AE over (self score, estimated score) pairs,
pooled per model (micro-averaging over all skills and all users), plus a
per-user MAE report paired with message counts for volume-vs-accuracy
analysis.  Outputs: an aligned text table, a CSV of the same rows, and a
per-user CSV suitable for plotting.
"""

from __future__ import annotations

import io
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np

from .errors import MetricError, ReportError
from .profiler import MergedProfile

__all__ = [
    "EvalPair",
    "MetricRow",
    "PerUserReport",
    "mae",
    "mae_std",
    "rmse",
    "median_ae",
    "model_report",
    "per_user_report",
    "pairs_from_profile",
    "render_report_text",
    "render_report_csv",
    "render_per_user_csv",
    "write_reports",
]

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class EvalPair:
    """Ground truth (self-annotated) vs. estimated score for one skill."""

    y: float  # self-annotated, 0-100
    y_hat: float  # estimated, 0-100
    user: str
    term: str
    model: str


@dataclass(frozen=True)
class MetricRow:
    model: str
    mae: float
    mae_std: float | None  # absent when n < 2
    rmse: float
    median_ae: float
    n: int
    best: bool


def _abs_errors(pairs: Iterable[EvalPair]) -> np.ndarray:
    errors = np.array([p.y - p.y_hat for p in pairs], dtype=np.float64)
    if errors.size == 0:
        raise MetricError("metric undefined on an empty pair set")
    return np.abs(errors)


def mae(pairs: Iterable[EvalPair]) -> float:
    """Mean absolute error: (1/n) * sum(|y_i - y_hat_i|)."""
    return float(np.mean(_abs_errors(pairs)))


def mae_std(pairs: Iterable[EvalPair]) -> float | None:
    """Sample standard deviation of absolute errors; None when n = 1."""
    errors = _abs_errors(pairs)
    if errors.size < 2:
        return None
    return float(np.std(errors, ddof=1))


def rmse(pairs: Iterable[EvalPair]) -> float:
    """Root mean square error: sqrt((1/n) * sum((y_i - y_hat_i)^2))."""
    errors = _abs_errors(pairs)
    return float(np.sqrt(np.mean(np.square(errors))))


def median_ae(pairs: Iterable[EvalPair]) -> float:
    """Median absolute error; even n takes the midpoint of the central pair."""
    return float(np.median(_abs_errors(pairs)))


def pairs_from_profile(merged: MergedProfile) -> list[EvalPair]:
    """Pairs exist only where both an estimate and a self-rating exist."""
    pairs = []
    for term, entry in merged.entries.items():
        if entry.estimated_score is None or entry.self_score is None:
            continue
        pairs.append(
            EvalPair(
                y=float(entry.self_score),
                y_hat=float(entry.estimated_score),
                user=merged.user,
                term=term,
                model=merged.model,
            )
        )
    return pairs


def model_report(pairs_by_model: Mapping[str, list[EvalPair]]) -> list[MetricRow]:
    """One metric row per model, ordered by MAE descending (worst first),
    ties by model name ascending; the minimum-MAE row is flagged best."""
    if not pairs_by_model:
        raise MetricError("model report requires at least one model group")
    raw = []
    for model in sorted(pairs_by_model):
        pairs = pairs_by_model[model]
        raw.append(
            {
                "model": model,
                "mae": mae(pairs),
                "mae_std": mae_std(pairs),
                "rmse": rmse(pairs),
                "median_ae": median_ae(pairs),
                "n": len(pairs),
            }
        )
    best_model = min(raw, key=lambda r: (r["mae"], r["model"]))["model"]
    raw.sort(key=lambda r: (-r["mae"], r["model"]))
    return [MetricRow(best=(r["model"] == best_model), **r) for r in raw]


@dataclass(frozen=True)
class PerUserReport:
    rows: list[tuple[str, int, float]]  # (user, n_messages, mae), by n_messages
    max_messages: int
    mean_messages: float
    median_messages: float


def per_user_report(
    pairs: Iterable[EvalPair], message_counts: Mapping[str, int]
) -> PerUserReport:
    """Per-user MAE ordered by message volume, plus count summary stats."""
    by_user: dict[str, list[EvalPair]] = {}
    for p in pairs:
        by_user.setdefault(p.user, []).append(p)
    if not by_user:
        raise MetricError("per-user report requires at least one pair")

    rows = []
    for user in sorted(by_user):
        if user not in message_counts:
            raise ReportError(f"no message count available for user {user!r}")
        rows.append((user, int(message_counts[user]), mae(by_user[user])))
    rows.sort(key=lambda r: (r[1], r[0]))

    counts = np.array([r[1] for r in rows], dtype=np.float64)
    return PerUserReport(
        rows=rows,
        max_messages=int(counts.max()),
        mean_messages=float(counts.mean()),
        median_messages=float(np.median(counts)),
    )


# ---------------------------------------------------------------------------
# Rendering
# ---------------------------------------------------------------------------

def _fmt(value: float | None) -> str:
    return "-" if value is None else f"{value:.2f}"


def render_report_text(
    rows: list[MetricRow], per_user: PerUserReport | None = None
) -> str:
    """Aligned text table, worst model first, best row starred."""
    header = ("model", "mae", "mae_std", "rmse", "median_ae", "n", "")
    table = [
        (
            r.model,
            _fmt(r.mae),
            _fmt(r.mae_std),
            _fmt(r.rmse),
            _fmt(r.median_ae),
            str(r.n),
            "*best*" if r.best else "",
        )
        for r in rows
    ]
    widths = [
        max(len(header[i]), *(len(row[i]) for row in table)) for i in range(len(header))
    ]
    out = io.StringIO()
    for row in (header, *table):
        line = "  ".join(cell.ljust(widths[i]) for i, cell in enumerate(row))
        out.write(line.rstrip() + "\n")
    if per_user is not None:
        out.write(
            "\nmessage counts: "
            f"max={per_user.max_messages} "
            f"mean={per_user.mean_messages:.2f} "
            f"median={per_user.median_messages:.2f}\n"
        )
    return out.getvalue()


def render_report_csv(rows: list[MetricRow]) -> str:
    lines = ["model,mae,mae_std,rmse,median_ae,n,best"]
    for r in rows:
        std = "" if r.mae_std is None else f"{r.mae_std:.6f}"
        lines.append(
            f"{r.model},{r.mae:.6f},{std},{r.rmse:.6f},{r.median_ae:.6f},"
            f"{r.n},{str(r.best).lower()}"
        )
    return "\n".join(lines) + "\n"


def render_per_user_csv(report: PerUserReport) -> str:
    lines = ["user,n_messages,mae"]
    for user, n_messages, user_mae in report.rows:
        lines.append(f"{user},{n_messages},{user_mae:.6f}")
    return "\n".join(lines) + "\n"


def write_reports(
    out_dir: str | Path,
    rows: list[MetricRow],
    per_user: PerUserReport | None = None,
) -> list[Path]:
    """Write report.txt, report.csv and (when available) per_user.csv."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    text_path = out_dir / "report.txt"
    text_path.write_text(render_report_text(rows, per_user), encoding="utf-8")
    written.append(text_path)
    csv_path = out_dir / "report.csv"
    csv_path.write_text(render_report_csv(rows), encoding="utf-8")
    written.append(csv_path)
    if per_user is not None:
        per_user_path = out_dir / "per_user.csv"
        per_user_path.write_text(render_per_user_csv(per_user), encoding="utf-8")
        written.append(per_user_path)
    for path in written:
        logger.info("wrote %s", path)
    return written
