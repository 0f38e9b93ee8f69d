"""Benchmark report: ``[run]`` sections of key=value lines plus a text table.

Table lines start with ``#`` so the whole report stays machine-parseable.
"""
from __future__ import annotations

from typing import Dict, Mapping

from .orchestrator import RunReport


def run_fields(r: RunReport) -> Dict[str, object]:
    out = {
        "mode": r.mode,
        "partitions": r.partitions,
        "n_train": r.n_train,
        "n_jobs": r.n_jobs,
        "accuracy": "" if r.accuracy is None else f"{r.accuracy:.6f}",
        "wall_clock_total": f"{r.wall_clock_total:.6f}",
    }
    for stage, secs in r.stage_seconds.items():
        out[f"stage.{stage}"] = f"{secs:.6f}"
    out["rules_before"] = r.rules_before
    out["rules_after"] = r.rules_after
    out["chunk_rules"] = ",".join(str(n) for n in r.chunk_rules)
    if r.fusion is not None:
        out["merge_events"] = len(r.fusion.merge_events)
        out["fusion_passes"] = r.fusion.passes
        out["fusion_converged"] = str(r.fusion.converged).lower()
    if r.metrics is not None:
        out["n_test"] = r.metrics.n
    return out


def format_table(runs: Mapping[str, RunReport]) -> str:
    head = ("run", "P", "accuracy %", "wall-clock s", "rules before", "rules after")
    rows = [head]
    for name, r in runs.items():
        acc = "-" if r.accuracy is None else f"{100 * r.accuracy:.2f}"
        rows.append((name, str(r.partitions), acc, f"{r.wall_clock_total:.2f}",
                     str(r.rules_before), str(r.rules_after)))
    widths = [max(len(row[i]) for row in rows) for i in range(len(head))]
    lines = []
    for k, row in enumerate(rows):
        cells = [row[0].ljust(widths[0])] + [c.rjust(w) for c, w in zip(row[1:], widths[1:])]
        lines.append("# " + "  ".join(cells))
        if k == 0:
            lines.append("# " + "  ".join("-" * w for w in widths))
    return "\n".join(lines)


def format_report(runs: Mapping[str, RunReport], extra: Mapping[str, object] | None = None) -> str:
    parts = []
    for name, r in runs.items():
        parts.append(f"[{name}]")
        parts.extend(f"{k}={v}" for k, v in run_fields(r).items())
        parts.append("")
    if extra:
        parts.append("[comparison]")
        parts.extend(f"{k}={v}" for k, v in extra.items())
        parts.append("")
    parts.append(format_table(runs))
    return "\n".join(parts) + "\n"


def comparison(single: RunReport, scalable: RunReport) -> Dict[str, object]:
    out = {
        "speedup": f"{single.wall_clock_total / scalable.wall_clock_total:.4f}",
        "rule_reduction": f"{1 - scalable.rules_after / max(scalable.rules_before, 1):.4f}",
    }
    if single.accuracy is not None and scalable.accuracy is not None:
        out["accuracy_gap_points"] = f"{100 * (single.accuracy - scalable.accuracy):.4f}"
    return out


def parse_report(text: str) -> Dict[str, Dict[str, str]]:
    """Inverse of the key=value part of :func:`format_report`."""
    sections: Dict[str, Dict[str, str]] = {}
    current = None
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("[") and line.endswith("]"):
            current = sections.setdefault(line[1:-1], {})
        elif "=" in line and current is not None:
            k, v = line.split("=", 1)
            current[k] = v
    return sections
