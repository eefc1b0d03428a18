"""Report rendering: aligned text tables, key-value lines, and figures.

Every evaluation/statistics report comes in three synchronized shapes:
a human-readable aligned table, machine-readable ``metric=value`` lines
(full float precision, one per line, stable order), and a bar-chart PNG
rendered with the Agg backend.  Figure bytes are deterministic: fixed
size, fixed dpi, and pinned PNG metadata.
"""

from __future__ import annotations

from .corpus import CorpusStats
from .metrics import MacroSpanReport, MetricReport, round_half_away

_PNG_METADATA = {"Software": "cfspan"}

_BAR_COLOR = "#4878a8"


def _pyplot():
    # Deferred so that text-only report paths never pay the matplotlib
    # import, and the backend is always the non-interactive one.
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def render_table(headers: list[str], rows: list[list[str]]) -> str:
    """Left-aligned columns padded to the widest cell, newline-terminated."""
    widths = [len(h) for h in headers]
    for row in rows:
        for i, cell in enumerate(row):
            widths[i] = max(widths[i], len(cell))
    lines = []
    for row in [headers] + rows:
        lines.append("  ".join(cell.ljust(widths[i]) for i, cell in enumerate(row)).rstrip())
    return "\n".join(lines) + "\n"


def binary_report_table(report: MetricReport) -> str:
    """One row of published-style rounded detection metrics."""
    return render_table(
        ["F1", "Recall", "Precision", "Support"],
        [
            [
                f"{round_half_away(report.f1, 3):.3f}",
                f"{round_half_away(report.recall, 3):.3f}",
                f"{round_half_away(report.precision, 3):.3f}",
                str(report.support),
            ]
        ],
    )


def span_report_table(report: MacroSpanReport) -> str:
    """One row of published-style rounded span metrics (exact match at 6 decimals)."""
    return render_table(
        ["F1", "Recall", "Precision", "Exact Match", "Sentences"],
        [
            [
                f"{round_half_away(report.f1, 3):.3f}",
                f"{round_half_away(report.recall, 3):.3f}",
                f"{round_half_away(report.precision, 3):.3f}",
                f"{round_half_away(report.exact_match_rate, 6):.6f}",
                str(report.count),
            ]
        ],
    )


def stats_table(stats: CorpusStats) -> str:
    """Corpus profile with both imbalance views side by side.

    "Pos/total" is positives over all records; "Pos/negative" is positives
    over negatives.  Both are shown because they round to different headline
    percentages on imbalanced data.
    """
    fraction = (
        f"{round_half_away(100 * stats.positive_fraction, 1):.1f}%"
        if stats.positive_fraction is not None
        else "n/a"
    )
    ratio = (
        f"{round_half_away(100 * stats.positive_to_negative_ratio, 1):.1f}%"
        if stats.positive_to_negative_ratio is not None
        else "n/a"
    )
    return render_table(
        ["Total", "Positive", "Negative", "Pos/total", "Pos/negative", "Max length", f"Over {stats.length_threshold}"],
        [
            [
                str(stats.total),
                str(stats.positives),
                str(stats.negatives),
                fraction,
                ratio,
                str(stats.max_code_point_length),
                str(stats.over_length_count),
            ]
        ],
    )


def kv_lines(values: dict[str, object]) -> str:
    """``key=value`` lines in the given order; floats keep full precision."""
    lines = []
    for key, value in values.items():
        if isinstance(value, float):
            lines.append(f"{key}={value!r}")
        else:
            lines.append(f"{key}={value}")
    return "\n".join(lines) + "\n"


def binary_report_kv(report: MetricReport) -> dict[str, object]:
    return {
        "precision": report.precision,
        "recall": report.recall,
        "f1": report.f1,
        "support": report.support,
    }


def span_report_kv(report: MacroSpanReport) -> dict[str, object]:
    return {
        "precision": report.precision,
        "recall": report.recall,
        "f1": report.f1,
        "exact_match_rate": report.exact_match_rate,
        "sentences": report.count,
    }


def stats_kv(stats: CorpusStats) -> dict[str, object]:
    return {
        "total": stats.total,
        "positives": stats.positives,
        "negatives": stats.negatives,
        "positive_fraction": (
            stats.positive_fraction if stats.positive_fraction is not None else "n/a"
        ),
        "positive_to_negative_ratio": (
            stats.positive_to_negative_ratio
            if stats.positive_to_negative_ratio is not None
            else "n/a"
        ),
        "max_code_point_length": stats.max_code_point_length,
        "length_threshold": stats.length_threshold,
        "over_length_count": stats.over_length_count,
    }


def save_bar_figure(title: str, labels: list[str], values: list[float], path) -> None:
    """Render one bar chart to ``path`` with byte-stable output settings."""
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(6.0, 3.5), dpi=100)
    positions = range(len(labels))
    ax.bar(positions, values, color=_BAR_COLOR)
    ax.set_xticks(list(positions))
    ax.set_xticklabels(labels)
    ax.set_title(title)
    ax.set_ylim(0.0, max(1.0, max(values, default=1.0) * 1.1))
    for x, v in zip(positions, values):
        ax.text(x, v, f"{v:g}", ha="center", va="bottom", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, format="png", metadata=dict(_PNG_METADATA))
    plt.close(fig)


def save_metric_figure(report: MetricReport | MacroSpanReport, path, title: str) -> None:
    labels = ["precision", "recall", "f1"]
    values = [report.precision, report.recall, report.f1]
    if isinstance(report, MacroSpanReport):
        labels.append("exact")
        values.append(report.exact_match_rate)
    save_bar_figure(title, labels, values, path)


def save_balance_figure(stats: CorpusStats, path) -> None:
    save_bar_figure(
        "Class balance",
        ["positive", "negative"],
        [float(stats.positives), float(stats.negatives)],
        path,
    )


__all__ = [
    "binary_report_kv",
    "binary_report_table",
    "kv_lines",
    "render_table",
    "save_balance_figure",
    "save_bar_figure",
    "save_metric_figure",
    "span_report_kv",
    "span_report_table",
    "stats_kv",
    "stats_table",
]
