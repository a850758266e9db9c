"""Report rendering for scenario runs and fingerprint verification."""

from __future__ import annotations

import json
from datetime import datetime, timezone
from typing import Any, Dict, List, Optional, Sequence

from tabulate import tabulate

from .pneh import FingerprintConfig, FingerprintVerification
from .scenarios import SCHEMA_VERSION, Report, Scenario

SIGNIFICANT_DIGITS = 12
RECORD_HEADERS = ["instance", "digest", "E[cost]", "opt", "ratio", "branches"]


def _rounded(value: Any) -> Any:
    if isinstance(value, bool) or value is None:
        return value
    if isinstance(value, float):
        return float(f"{value:.{SIGNIFICANT_DIGITS}g}")
    if isinstance(value, dict):
        return {str(key): _rounded(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [_rounded(item) for item in value]
    return value


def _table(rows: Sequence[Sequence[Any]], headers: Sequence[str]) -> str:
    return tabulate(rows, headers=headers, floatfmt=".6g")


def report_payload(report: Report, generated_at: Optional[str] = None) -> Dict[str, Any]:
    if generated_at is None:
        generated_at = datetime.now(timezone.utc).isoformat(timespec="seconds")
    payload: Dict[str, Any] = {
        "schema_version": SCHEMA_VERSION,
        "tool_version": report.version,
        "generated_at": generated_at,
        "scenario": report.scenario,
        "annotation": report.annotation,
        "mode": report.mode,
        "seed": report.seed,
        "params": report.params,
        "ratio": report.ratio,
        "expected_ratio": report.expected_ratio,
        "passed": report.passed,
        "checks": [
            {"name": check.name, "passed": check.passed, "detail": check.detail}
            for check in report.checks
        ],
        "records": [
            {
                "label": record.label,
                "digest": record.digest,
                "expected_cost": record.expected_cost,
                "opt_cost": record.opt_cost,
                "ratio": record.ratio,
                "branch_count": record.branch_count,
            }
            for record in report.records
        ],
        "transcript": report.transcript,
        "extras": report.extras,
    }
    return _rounded(payload)


def render_json(report: Report, generated_at: Optional[str] = None) -> str:
    return json.dumps(report_payload(report, generated_at), indent=2, sort_keys=True)


def render_text(report: Report) -> str:
    lines = [f"Scenario: {report.scenario} ({report.mode} mode, seed {report.seed})"]
    lines.append(f"  {report.annotation}")
    if report.params:
        params = ", ".join(f"{key}={value}" for key, value in sorted(report.params.items()))
        lines.append(f"  params: {params}")

    if report.records:
        lines.append("")
        rows = [
            [r.label, r.digest, r.expected_cost, r.opt_cost, r.ratio, r.branch_count]
            for r in report.records
        ]
        lines.append(_table(rows, RECORD_HEADERS))
        lines.append("")
        expected = "" if report.expected_ratio is None else f" (expected {report.expected_ratio:.12g})"
        lines.append(f"Strict ratio: {report.ratio:.12g}{expected}")

    lines.append("")
    lines.append("Checks:")
    if not report.checks:
        lines.append("  (none)")
    for check in report.checks:
        status = "PASS" if check.passed else "FAIL"
        lines.append(f"  - {check.name}: {status} [{check.detail}]")
    lines.append("")
    lines.append("PASS" if report.passed else "FAIL")
    return "\n".join(lines)


def format_report(report: Report, fmt: str) -> str:
    if fmt == "text":
        return render_text(report)
    if fmt == "json":
        return render_json(report)
    raise ValueError(f"unsupported report format: {fmt}")


def render_scenarios(scenarios: Sequence[Scenario]) -> str:
    width = max((len(s.name) for s in scenarios), default=0)
    lines: List[str] = []
    for scenario in scenarios:
        modes = "exact, mc" if scenario.supports_mc else "exact"
        lines.append(f"{scenario.name.ljust(width)}  {scenario.annotation} [{modes}]")
    return "\n".join(lines)


def format_verification(
    config: FingerprintConfig, verification: FingerprintVerification, fmt: str
) -> str:
    payload = {
        "schema_version": SCHEMA_VERSION,
        "L": config.L,
        "t": config.t,
        "epsilon": config.epsilon,
        "distances": config.q - 1,
        "max_accept": verification.max_accept,
        "worst_distance": verification.worst_distance,
        "passed": verification.passed,
    }
    if fmt == "json":
        return json.dumps(_rounded(payload), indent=2, sort_keys=True)
    if fmt == "text":
        status = "PASS" if verification.passed else "FAIL"
        return (
            f"Fingerprint L={config.L} t={config.t} epsilon={config.epsilon:g}: {status}\n"
            f"  max accept {verification.max_accept:.12g} at D={verification.worst_distance} "
            f"over {config.q - 1} nonzero distances"
        )
    raise ValueError(f"unsupported report format: {fmt}")


__all__ = [
    "format_report",
    "format_verification",
    "render_json",
    "render_scenarios",
    "render_text",
    "report_payload",
]
