import csv
import io
import json

import pytest

from gazesteer.acceptance import REFERENCE_LABELS, reference_matrix
from gazesteer.errors import FixtureMissing
from gazesteer.experiment import Condition, MetricAnalysis, MetricsRow, analyze
from gazesteer.harness import SpeedTechnique, Task, TrialMetrics
from gazesteer.report import (
    FIXTURE_CAPTION,
    FIXTURE_NAMES,
    fixture_cell,
    format_p,
    load_fixture,
    load_fixtures,
    parse_text_grid,
    render_fixture_text,
    render_report,
)
from gazesteer.stats import DunnMatrix


def metrics(t, path=350.0, coll=0):
    return TrialMetrics(t, path, 99.0, 0.0, coll, 20, 20, 20, 0, 0, path / t)


def rows():
    out = []
    for ci, c in enumerate([Condition(SpeedTechnique.JOYSTICK, Task.RINGS), Condition(SpeedTechnique.SPEED_CIRCLE, Task.RINGS)]):
        for p in range(5):
            out.append(MetricsRow(c, f"P{p}", p, metrics(70 + ci * 3 + p * 0.1, 350 + p + ci)))
    return out


class TestFixtures:
    def test_all_load(self):
        fx = load_fixtures()
        assert [f.name for f in fx] == list(FIXTURE_NAMES)
        for f in fx:
            assert f.labels == REFERENCE_LABELS
            for row in f.cells:
                for c in row:
                    assert 0.0 <= float(c) <= 1.0

    @pytest.mark.parametrize("name", FIXTURE_NAMES)
    def test_cells_verbatim(self, name):
        assert [list(r) for r in load_fixture(name).cells] == reference_matrix(name)

    def test_named_cell(self):
        fx = load_fixture("path_length_vs_magic_carpet")
        assert fx.cells[1][4] == "0.0300"
        assert fixture_cell(fx, 1, 5) == ("<0.0001", True)

    def test_highlight_matches_alpha(self):
        for fx in load_fixtures():
            for r, h in zip(fx.cells, fx.highlighted):
                for c, flag in zip(r, h):
                    assert flag == (float(c) < 0.05)

    def test_missing(self, tmp_path):
        with pytest.raises(FixtureMissing):
            load_fixture("path_length_vs_magic_carpet", tmp_path)

    def test_text_grid_roundtrip(self):
        fx = load_fixture("completion_time_vs_magic_carpet")
        lines = [ln[2:] for ln in render_fixture_text(fx)[2:]]
        grid = parse_text_grid(lines, fx.labels)
        assert grid[0][5] == "<0.0001" and grid[3][6] == "0.0256"


class TestFormatting:
    def test_format_p(self):
        assert format_p(0.0) == "<0.0001"
        assert format_p(0.003) == "0.0030"
        assert format_p(1.0) == "1.0000"

    def test_significant_cell_marked(self):
        d = DunnMatrix(("A", "B"), ((1.0, 0.003), (0.003, 1.0)), ((0.0, 3.0), (-3.0, 0.0)))
        a = {"completion_time": MetricAnalysis("completion_time", dunn=d)}
        text = render_report(rows(), a, fmt="text")
        assert "0.0030*" in text
        assert "1.0000*" not in text

    def test_summaries_only(self):
        text = render_report(rows(), None, fmt="text")
        assert "Per-condition summary" in text and "Kruskal" not in text

    def test_empty_everything(self):
        assert "Per-condition summary" in render_report([], None)


class TestFormats:
    def test_text_includes_caption_and_marker(self):
        r = rows()
        text = render_report(r, analyze(r), load_fixtures())
        assert FIXTURE_CAPTION in text
        assert "<0.0001*" in text
        assert "Kruskal-Wallis" in text

    def test_csv(self):
        r = rows()
        out = render_report(r, analyze(r), load_fixtures(), fmt="csv")
        recs = list(csv.DictReader(io.StringIO(out)))
        ref = [x for x in recs if x["section"] == "reference:path_length_vs_magic_carpet"]
        assert len(ref) == 49
        cell = next(x for x in ref if x["row"] == "Targets Joy" and x["col"] == "VC MC")
        assert cell["value"] == "<0.0001" and cell["significant"] == "1"
        assert any(x["section"] == "caption" for x in recs)

    def test_json(self):
        r = rows()
        doc = json.loads(render_report(r, analyze(r), load_fixtures(), fmt="json"))
        assert doc["alpha"] == 0.05
        assert doc["reference"][0]["cells"][1][4] == "0.0300"
        assert "kruskal_wallis" in doc["analysis"]["completion_time"]

    def test_bad_format(self):
        with pytest.raises(ValueError):
            render_report([], None, fmt="xml")
