"""Report rendering: per-condition summaries, rank-test matrices and reference fixtures.

Reference fixtures hold published p-values as strings. They are only ever
rendered; nothing here converts them into :class:`SampleGroup` data.
"""
from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Mapping, Optional, Sequence

from .errors import FixtureMissing, InsufficientData
from .experiment import REPORT_METRICS, MetricAnalysis, MetricsRow, _conditions_in
from .harness import summarize

ALPHA = 0.05
FIXTURE_NAMES = (
    "path_length_vs_magic_carpet",
    "collision_events_vs_magic_carpet",
    "completion_time_vs_magic_carpet",
)
FIXTURE_CAPTION = (
    "Reference matrices below are published values from the Magic Carpet comparison, "
    "shown for side-by-side reading. They are not recomputations."
)
FORMATS = ("text", "csv", "json")


@dataclass(frozen=True)
class ReferenceFixture:
    name: str
    metric: str
    labels: tuple
    cells: tuple  # verbatim strings, e.g. "0.0300"
    highlighted: tuple
    provenance: str

    def p_value(self, row: str, col: str) -> float:
        return float(self.cells[self.labels.index(row)][self.labels.index(col)])


def load_fixture(name: str, directory: Optional[Path] = None) -> ReferenceFixture:
    if directory is None:
        src = resources.files("gazesteer") / "fixtures" / f"{name}.json"
    else:
        src = Path(directory) / f"{name}.json"
    try:
        doc = json.loads(src.read_text())
    except (FileNotFoundError, OSError) as e:
        raise FixtureMissing(f"fixture {name!r} not found at {src}") from e
    return ReferenceFixture(
        doc["name"], doc["metric"], tuple(doc["labels"]),
        tuple(tuple(r) for r in doc["cells"]), tuple(tuple(r) for r in doc["highlighted"]),
        doc["provenance"],
    )


def load_fixtures(directory: Optional[Path] = None) -> list[ReferenceFixture]:
    return [load_fixture(n, directory) for n in FIXTURE_NAMES]


def format_p(p: float) -> str:
    return "<0.0001" if p < 0.00005 else f"{p:.4f}"


def fixture_cell(fx: ReferenceFixture, i: int, j: int) -> tuple[str, bool]:
    """Rendered text of one published cell and whether it is significant."""
    s = fx.cells[i][j]
    text = "<0.0001" if s == "0.0000" else s
    return text, fx.highlighted[i][j]


def _grid(labels: Sequence[str], cell) -> list[str]:
    """Right-aligned text matrix; ``cell(i, j)`` returns (text, significant)."""
    rendered = [[cell(i, j) for j in range(len(labels))] for i in range(len(labels))]
    texts = [[t + ("*" if sig else " ") for t, sig in row] for row in rendered]
    w0 = max(len(lb) for lb in labels)
    w = max(max(len(lb) for lb in labels), max(len(t) for row in texts for t in row)) + 1
    out = [" " * w0 + "".join(lb.rjust(w) + " " for lb in labels)]
    for lb, row in zip(labels, texts):
        out.append(lb.ljust(w0) + "".join(t.rjust(w + 1) for t in row))
    return out


def render_fixture_text(fx: ReferenceFixture) -> list[str]:
    lines = [f"[reference] {fx.name}: pairwise p-values, {fx.metric}", f"  source: {fx.provenance}"]
    lines += ["  " + ln for ln in _grid(fx.labels, lambda i, j: fixture_cell(fx, i, j))]
    return lines


def parse_text_grid(lines: Sequence[str], labels: Sequence[str]) -> list[list[str]]:
    """Inverse of the grid layout: recover cell strings (significance marks stripped)."""
    out = []
    for lb, ln in zip(labels, lines[1:]):
        body = ln.strip()[len(lb):].split()
        out.append([t.rstrip("*") for t in body])
    return out


def _summary_rows(rows: Sequence[MetricsRow], metrics: Sequence[str]):
    for c in _conditions_in(rows):
        vals_by_metric = {m: [float(getattr(r.metrics, m)) for r in rows if r.condition.key == c.key] for m in metrics}
        for m, vals in vals_by_metric.items():
            try:
                s = summarize(vals)
                yield c.label, m, s.n, s.mean, s.sd, s.ci_low, s.ci_high
            except InsufficientData:
                yield c.label, m, len(vals), vals[0] if vals else float("nan"), float("nan"), float("nan"), float("nan")


def render_report(
    rows: Sequence[MetricsRow],
    analysis: Optional[Mapping[str, MetricAnalysis]] = None,
    fixtures: Sequence[ReferenceFixture] = (),
    fmt: str = "text",
    metrics: Sequence[str] = REPORT_METRICS,
) -> str:
    if fmt not in FORMATS:
        raise ValueError(f"unknown format {fmt!r}")
    analysis = analysis or {}
    summaries = list(_summary_rows(rows, metrics))
    if fmt == "json":
        return _render_json(summaries, analysis, fixtures)
    if fmt == "csv":
        return _render_csv(summaries, analysis, fixtures)
    return _render_text(summaries, analysis, fixtures)


def _render_text(summaries, analysis, fixtures) -> str:
    out = ["Per-condition summary (mean, sd, 95% CI)"]
    for label, m, n, mean, sd, lo, hi in summaries:
        out.append(f"  {label:<12} {m:<17} n={n:<3} mean={mean:.4f} sd={sd:.4f} CI=[{lo:.4f}, {hi:.4f}]")
    for m, a in analysis.items():
        if a.kw is None and a.dunn is None and not a.wilcoxon and not a.notes:
            continue
        out.append("")
        out.append(f"== {m}")
        if a.kw is not None:
            out.append(f"  Kruskal-Wallis H={a.kw.h:.4f} df={a.kw.df} p={format_p(a.kw.p)}"
                       + (" (tie-corrected)" if a.kw.tie_corrected else ""))
        if a.dunn is not None:
            out.append(f"  Dunn-Bonferroni adjusted p (* marks p < {ALPHA})")
            d = a.dunn
            out += ["  " + ln for ln in _grid(d.labels, lambda i, j: (format_p(d.p_adj[i][j]), i != j and d.p_adj[i][j] < ALPHA))]
        for name, w in a.wilcoxon.items():
            out.append(f"  Wilcoxon {name}: W={w.w:g} n={w.n_effective} p={format_p(w.p)} ({w.method.value})"
                       + (" *" if w.p < ALPHA else ""))
        for note in a.notes:
            out.append(f"  note: {note}")
    if fixtures:
        out.append("")
        out.append(FIXTURE_CAPTION)
        for fx in fixtures:
            out.append("")
            out += render_fixture_text(fx)
    return "\n".join(out) + "\n"


def _render_csv(summaries, analysis, fixtures) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["section", "metric", "row", "col", "value", "significant"])
    for label, m, n, mean, sd, lo, hi in summaries:
        for k, v in (("n", n), ("mean", mean), ("sd", sd), ("ci_low", lo), ("ci_high", hi)):
            w.writerow(["summary", m, label, k, format(v, ".17g") if isinstance(v, float) else v, ""])
    for m, a in analysis.items():
        if a.kw is not None:
            w.writerow(["kruskal_wallis", m, "", "H", format(a.kw.h, ".17g"), ""])
            w.writerow(["kruskal_wallis", m, "", "p", format(a.kw.p, ".17g"), int(a.kw.p < ALPHA)])
        if a.dunn is not None:
            d = a.dunn
            for i, ri in enumerate(d.labels):
                for j, cj in enumerate(d.labels):
                    w.writerow(["dunn", m, ri, cj, format(d.p_adj[i][j], ".17g"), int(i != j and d.p_adj[i][j] < ALPHA)])
        for name, r in a.wilcoxon.items():
            w.writerow(["wilcoxon", m, name, "W", format(r.w, ".17g"), ""])
            w.writerow(["wilcoxon", m, name, "p", format(r.p, ".17g"), int(r.p < ALPHA)])
    for fx in fixtures:
        for i, ri in enumerate(fx.labels):
            for j, cj in enumerate(fx.labels):
                text, sig = fixture_cell(fx, i, j)
                w.writerow([f"reference:{fx.name}", fx.metric, ri, cj, text, int(sig)])
    if fixtures:
        w.writerow(["caption", "", "", "", FIXTURE_CAPTION, ""])
    return buf.getvalue()


def _render_json(summaries, analysis, fixtures) -> str:
    doc: dict = {
        "alpha": ALPHA,
        "summary": [dict(zip(("condition", "metric", "n", "mean", "sd", "ci_low", "ci_high"), s)) for s in summaries],
        "analysis": {},
    }
    for m, a in analysis.items():
        entry: dict = {"notes": list(a.notes)}
        if a.kw is not None:
            entry["kruskal_wallis"] = {"h": a.kw.h, "df": a.kw.df, "p": a.kw.p, "tie_corrected": a.kw.tie_corrected}
        if a.dunn is not None:
            entry["dunn_bonferroni"] = {"labels": list(a.dunn.labels), "p_adj": [list(r) for r in a.dunn.p_adj]}
        entry["wilcoxon"] = {k: {"w": r.w, "n_effective": r.n_effective, "p": r.p, "method": r.method.value}
                             for k, r in a.wilcoxon.items()}
        doc["analysis"][m] = entry
    if fixtures:
        doc["reference_caption"] = FIXTURE_CAPTION
        doc["reference"] = [
            {"name": fx.name, "metric": fx.metric, "provenance": fx.provenance, "labels": list(fx.labels),
             "cells": [[fixture_cell(fx, i, j)[0] for j in range(len(fx.labels))] for i in range(len(fx.labels))],
             "significant": [list(r) for r in fx.highlighted]}
            for fx in fixtures
        ]
    return json.dumps(doc, indent=1, allow_nan=True) + "\n"
