"""Run reports and benchmark comparisons.

Turns a run manifest into per-step aggregates, the domain-physical
alignment rating over all generated artifacts, improvement percentages
against a baseline manifest, and an SVG score curve. The SVG is emitted
directly (fixed text template) so report bytes stay deterministic.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from .errors import ManifestError
from .objective import DparResult, dpar, format_improvement, improvement_percent


def load_manifest(path) -> list[dict]:
    path = Path(path)
    if not path.exists():
        raise ManifestError(f"manifest not found: {path}")
    records = []
    for lineno, line in enumerate(path.read_text().splitlines(), start=1):
        if not line.strip():
            continue
        try:
            records.append(json.loads(line))
        except json.JSONDecodeError as exc:
            raise ManifestError(f"{path}:{lineno}: bad record: {exc}") from exc
    if not records:
        raise ManifestError(f"manifest is empty: {path}")
    return records


def manifest_dpar(records: list[dict]) -> DparResult:
    """Rating over every artifact with usable scores; unscored candidates
    (infeasible sentinels) are excluded and counted."""
    pairs = []
    skipped = 0
    for record in records:
        domain = record.get("f_domain")
        physical = record.get("f_physical")
        if domain is None or physical is None or not record.get("feasible", False):
            skipped += 1
            continue
        pairs.append((float(domain), float(physical)))
    if not pairs:
        raise ManifestError("manifest has no scored candidates")
    result = dpar(pairs)
    return DparResult(
        value=result.value, count=result.count, excluded=result.excluded + skipped
    )


@dataclass(frozen=True)
class RunReport:
    steps: list[dict]  # per-step aggregates, non-increasing best
    dpar: float
    dpar_count: int
    dpar_excluded: int
    infeasible_total: int
    retries_total: int

    def to_dict(self) -> dict:
        return {
            "steps": self.steps,
            "dpar": self.dpar,
            "dpar_count": self.dpar_count,
            "dpar_excluded": self.dpar_excluded,
            "infeasible_total": self.infeasible_total,
            "retries_total": self.retries_total,
        }


def build_report(stats: list[dict], records: list[dict]) -> RunReport:
    rating = manifest_dpar(records)
    return RunReport(
        steps=stats,
        dpar=rating.value,
        dpar_count=rating.count,
        dpar_excluded=rating.excluded,
        infeasible_total=sum(1 for r in records if not r.get("feasible", False)),
        retries_total=sum(int(r.get("retries", 0)) for r in records),
    )


def recompute_step_aggregates(records: list[dict], stats: list[dict]) -> list[dict]:
    """Re-derive best/mean/worst from manifest records joined against the
    per-step exemplar id lists; used to cross-check stored report curves."""
    by_id = {r["id"]: r for r in records}
    out = []
    for entry in stats:
        objectives = []
        for cid in entry["exemplar_ids"]:
            record = by_id.get(cid)
            if record is None:
                raise ManifestError(f"exemplar {cid} missing from manifest")
            value = record.get("objective")
            if value is not None:
                objectives.append(float(value))
        out.append(
            {
                "step": entry["step"],
                "best": min(objectives) if objectives else None,
                "mean": sum(objectives) / len(objectives) if objectives else None,
                "worst": max(objectives) if objectives else None,
            }
        )
    return out


def compare_manifests(baseline: list[dict], ours: list[dict]) -> dict:
    base = manifest_dpar(baseline)
    new = manifest_dpar(ours)
    percent = improvement_percent(base.value, new.value)
    return {
        "baseline_dpar": base.value,
        "ours_dpar": new.value,
        "improvement_percent": percent,
        "improvement": format_improvement(percent),
    }


# ---------------------------------------------------------------------------
# SVG score curve
# ---------------------------------------------------------------------------

_SVG_W, _SVG_H = 640, 400
_MARGIN = 50


def _scale(points, lo, hi, out_lo, out_hi):
    span = hi - lo if hi > lo else 1.0
    return [out_lo + (p - lo) / span * (out_hi - out_lo) for p in points]


def score_curve_svg(steps: list[dict]) -> str:
    """Objective-vs-step line chart (best/mean/worst series)."""
    series = {
        "best": "#1f77b4",
        "mean": "#7f7f7f",
        "worst": "#d62728",
    }
    xs = [s["step"] for s in steps]
    all_vals = [
        s[name]
        for s in steps
        for name in series
        if s.get(name) is not None
    ]
    if not xs or not all_vals:
        xs, all_vals = [0], [0.0]
    lo, hi = min(all_vals), max(all_vals)
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_SVG_W}" height="{_SVG_H}" '
        f'viewBox="0 0 {_SVG_W} {_SVG_H}">',
        f'<rect width="{_SVG_W}" height="{_SVG_H}" fill="white"/>',
        f'<line x1="{_MARGIN}" y1="{_SVG_H - _MARGIN}" x2="{_SVG_W - _MARGIN}" '
        f'y2="{_SVG_H - _MARGIN}" stroke="black"/>',
        f'<line x1="{_MARGIN}" y1="{_MARGIN}" x2="{_MARGIN}" '
        f'y2="{_SVG_H - _MARGIN}" stroke="black"/>',
        f'<text x="{_SVG_W // 2}" y="{_SVG_H - 12}" text-anchor="middle" '
        f'font-size="13">search step</text>',
        f'<text x="14" y="{_SVG_H // 2}" text-anchor="middle" font-size="13" '
        f'transform="rotate(-90 14 {_SVG_H // 2})">objective</text>',
        f'<text x="{_MARGIN}" y="{_SVG_H - _MARGIN + 16}" font-size="11" '
        f'text-anchor="middle">{min(xs)}</text>',
        f'<text x="{_SVG_W - _MARGIN}" y="{_SVG_H - _MARGIN + 16}" font-size="11" '
        f'text-anchor="middle">{max(xs)}</text>',
        f'<text x="{_MARGIN - 6}" y="{_SVG_H - _MARGIN + 4}" font-size="11" '
        f'text-anchor="end">{lo:.3f}</text>',
        f'<text x="{_MARGIN - 6}" y="{_MARGIN + 4}" font-size="11" '
        f'text-anchor="end">{hi:.3f}</text>',
    ]
    px = _scale(xs, min(xs), max(xs) if max(xs) > min(xs) else min(xs) + 1,
                _MARGIN, _SVG_W - _MARGIN)
    for rank, (name, color) in enumerate(series.items()):
        pts = []
        for i, s in enumerate(steps):
            value = s.get(name)
            if value is None:
                continue
            py = _scale([value], lo, hi, _SVG_H - _MARGIN, _MARGIN)[0]
            pts.append(f"{px[i]:.1f},{py:.1f}")
        if pts:
            parts.append(
                f'<polyline fill="none" stroke="{color}" stroke-width="1.5" '
                f'points="{" ".join(pts)}"/>'
            )
        parts.append(
            f'<text x="{_SVG_W - _MARGIN + 4}" y="{_MARGIN + 14 * rank + 4}" '
            f'font-size="11" fill="{color}">{name}</text>'
        )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def write_run_outputs(out_dir, stats: list[dict], records: list[dict]) -> RunReport:
    """Write report.json and curve.svg next to the manifest."""
    out_dir = Path(out_dir)
    report = build_report(stats, records)
    (out_dir / "report.json").write_text(
        json.dumps(report.to_dict(), indent=2) + "\n"
    )
    (out_dir / "curve.svg").write_text(score_curve_svg(stats))
    return report
