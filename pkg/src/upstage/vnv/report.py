"""Requirement verification report: coverage matrix and status rollup.

A requirement passes only if all of its verify_by monitors pass across
the campaign and all of its children pass; one with nothing to verify it
(and no children) is unverified and lands in the gap section.  Output is
a markdown document plus a machine-readable delimited coverage table.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

from .requirements import RequirementTree, check_monitor_links

PASS = "pass"
FAIL = "fail"
UNVERIFIED = "unverified"


@dataclass
class ReportResult:
    status: dict                # requirement id -> pass/fail/unverified
    coverage_rows: list         # (requirement, monitor, campaign, verdict)
    gaps: list
    document: str
    table: str


def monitor_campaign_verdicts(campaigns: dict) -> dict:
    """(campaign name -> CampaignResult) to {monitor id: {campaign: bool}}.

    A monitor passes a campaign when every sample that evaluated it passed.
    """
    verdicts: dict = {}
    for cname, result in campaigns.items():
        for sample in result.samples:
            for mid, ok in sample.monitor_verdicts.items():
                verdicts.setdefault(mid, {})
                verdicts[mid][cname] = verdicts[mid].get(cname, True) and bool(ok)
    return verdicts


def rollup_status(tree: RequirementTree, monitor_pass: dict) -> dict:
    """Parent rule: fail dominates, then unverified, else pass."""
    status: dict = {}

    def rec(rid: str) -> str:
        node = tree.nodes[rid]
        child_status = [rec(c) for c in node.children]
        own = [monitor_pass.get(mid) for mid in node.verify_by]
        if any(s == FAIL for s in child_status) or any(v is False for v in own):
            result = FAIL
        elif not node.verify_by and not node.children:
            result = UNVERIFIED
        elif any(s == UNVERIFIED for s in child_status) or \
                any(v is None for v in own):
            result = UNVERIFIED
        else:
            result = PASS
        status[rid] = result
        return result

    for root in tree.roots:
        rec(root)
    return status


def generate_report(tree: RequirementTree, campaigns: dict, monitors: list,
                    title: str = "Requirement verification report") -> ReportResult:
    """Render the tree, the coverage matrix, and per-requirement status.

    campaigns maps a campaign name to its CampaignResult; monitors is the
    monitor list the campaigns ran with (used for two-way link checking).
    """
    link_notes = check_monitor_links(tree, monitors)
    per_campaign = monitor_campaign_verdicts(campaigns)

    # a monitor passes overall if it passed every campaign that exercised it
    monitor_pass: dict = {}
    for mon in monitors:
        seen = per_campaign.get(mon.id)
        if seen:
            monitor_pass[mon.id] = all(seen.values())
    status = rollup_status(tree, monitor_pass)

    coverage_rows = []
    for req, _depth in tree.walk_depth_first():
        for mid in req.verify_by:
            for cname in sorted(campaigns):
                verdict = per_campaign.get(mid, {}).get(cname)
                coverage_rows.append((req.id, mid, cname,
                                      "-" if verdict is None else
                                      (PASS if verdict else FAIL)))

    gaps = [req.id for req, _ in tree.walk_depth_first() if not req.verify_by]

    lines = [f"# {title}", ""]
    lines.append("## Requirement tree")
    lines.append("")
    for req, depth in tree.walk_depth_first():
        mark = {PASS: "PASS", FAIL: "FAIL", UNVERIFIED: "UNVERIFIED"}[status[req.id]]
        indent = "  " * depth
        vb = f" (verify_by: {', '.join(req.verify_by)})" if req.verify_by else ""
        lines.append(f"{indent}- **{req.id}** [{mark}] {req.text}{vb}")
    lines.append("")
    lines.append("## Coverage matrix")
    lines.append("")
    lines.append("| requirement | monitor | campaign | verdict |")
    lines.append("|---|---|---|---|")
    for row in coverage_rows:
        lines.append("| " + " | ".join(row) + " |")
    lines.append("")
    if gaps:
        lines.append("## Gaps (unverified requirements)")
        lines.append("")
        for g in gaps:
            lines.append(f"- {g}: no monitors attached")
        lines.append("")
    if link_notes:
        lines.append("## Link mismatches")
        lines.append("")
        for note in link_notes:
            lines.append(f"- {note}")
        lines.append("")
    document = "\n".join(lines)

    table_lines = ["requirement,monitor,campaign,verdict"]
    table_lines += [",".join(r) for r in coverage_rows]
    table_lines.append("")
    table = "\n".join(table_lines)
    return ReportResult(status=status, coverage_rows=coverage_rows, gaps=gaps,
                        document=document, table=table)


def write_report(report: ReportResult, out_dir: str | Path) -> tuple:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    doc = out / "report.md"
    tab = out / "coverage.csv"
    doc.write_text(report.document + "\n")
    tab.write_text(report.table)
    return doc, tab
