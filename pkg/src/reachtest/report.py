"""Campaign reports: JSON, CSV summaries, console tables, and figures.

Report files are byte-reproducible for a fixed config and seed, so wall
times stay out of them; timing is only shown on the console.  Figures are
rendered with the Agg backend next to the delimited output.
"""

from __future__ import annotations

import csv
import io
import json

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

from .testers import CampaignReport  # noqa: E402


def campaign_to_dict(report: CampaignReport) -> dict:
    return {
        "config": report.config,
        "summary": report.summary,
        "attempts": [a.to_json_dict() for a in report.attempts],
    }


def campaign_json(report: CampaignReport) -> str:
    return json.dumps(campaign_to_dict(report), indent=2, sort_keys=True) + "\n"


def write_report(report: CampaignReport, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(campaign_json(report))


def algorithm_label(report: CampaignReport) -> str:
    algo = report.config["algorithm"]
    if algo == "greedy-mcts":
        parts = []
        if report.config.get("greedy_tree"):
            parts.append("tree")
        if report.config.get("greedy_rollout"):
            parts.append("rollout")
        return f"mcts+greedy {'&'.join(parts) or 'off'}"
    return algo


def summary_rows(reports: list[CampaignReport]) -> list[dict]:
    rows = []
    for r in reports:
        s = r.summary
        rows.append(
            {
                "algorithm": algorithm_label(r),
                "attempts": s["attempts"],
                "successes": s["successes"],
                "success_rate": round(s["success_rate"], 1),
                "average_runs": (
                    round(s["average_runs"], 1) if s["average_runs"] is not None else ""
                ),
                "K": r.config["K"],
                "runs": r.config["runs"],
                "seed": r.config["seed"],
            }
        )
    return rows


def summary_csv(reports: list[CampaignReport]) -> str:
    rows = summary_rows(reports)
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=list(rows[0].keys()))
    writer.writeheader()
    writer.writerows(rows)
    return buf.getvalue()


def write_summary_csv(reports: list[CampaignReport], path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(summary_csv(reports))


def format_summary_table(reports: list[CampaignReport]) -> str:
    rows = summary_rows(reports)
    headers = ["Algorithm", "Success Rate", "Average runs"]
    table = [
        [
            row["algorithm"],
            f"{row['success_rate']}%",
            str(row["average_runs"]) if row["average_runs"] != "" else "-",
        ]
        for row in rows
    ]
    widths = [
        max(len(headers[i]), *(len(t[i]) for t in table)) if table else len(headers[i])
        for i in range(3)
    ]
    lines = [
        "  ".join(h.ljust(widths[i]) for i, h in enumerate(headers)),
        "  ".join("-" * w for w in widths),
    ]
    for t in table:
        lines.append("  ".join(t[i].ljust(widths[i]) for i in range(3)))
    return "\n".join(lines)


def render_campaign_figure(report: CampaignReport, path: str) -> None:
    """Per-attempt runs-to-verdict bars for a single campaign."""
    runs = [a.runs_used for a in report.attempts]
    colors = ["tab:green" if a.success else "tab:red" for a in report.attempts]
    fig, ax = plt.subplots(figsize=(7, 3.2))
    ax.bar(range(1, len(runs) + 1), runs, color=colors)
    ax.set_xlabel("attempt")
    ax.set_ylabel("runs used")
    s = report.summary
    ax.set_title(
        f"{algorithm_label(report)}: {s['success_rate']:.0f}% success "
        f"({s['successes']}/{s['attempts']} attempts)"
    )
    ax.axhline(report.config["runs"], color="gray", linestyle=":", linewidth=1)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_matrix_figure(reports: list[CampaignReport], path: str) -> None:
    """Success-rate and average-runs panels across algorithms."""
    labels = [algorithm_label(r) for r in reports]
    rates = [r.summary["success_rate"] for r in reports]
    avgs = [
        r.summary["average_runs"] if r.summary["average_runs"] is not None else 0.0
        for r in reports
    ]
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(10, 3.6))
    y = range(len(labels))
    ax1.barh(y, rates, color="tab:blue")
    ax1.set_yticks(list(y), labels)
    ax1.set_xlabel("success rate (%)")
    ax1.set_xlim(0, 100)
    ax1.invert_yaxis()
    ax2.barh(y, avgs, color="tab:orange")
    ax2.set_yticks(list(y), ["" for _ in labels])
    ax2.set_xlabel("average runs per successful attempt")
    ax2.invert_yaxis()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
