"""
Output Helper Tests - deterministic CSV/JSON/SVG output and digests
"""

import json
import math

import allure
import numpy as np
import pytest

from bohmflow.utils.output_helper import OutputWriter, canonical_json, sha256_file, sha256_text
from bohmflow.utils.svg_helper import SvgPlot, decimate


@allure.feature("Output")
@allure.story("Writers")
class TestOutputWriter:

    @pytest.mark.smoke
    @allure.title("Canonical JSON sorts keys and writes NaN as null")
    def test_canonical_json(self):
        text = canonical_json({"b": np.float64(math.nan), "a": np.arange(2), "c": (1.5, math.inf)})
        assert json.loads(text) == {"a": [0, 1], "b": None, "c": [1.5, None]}
        assert text.index('"a"') < text.index('"b"') < text.index('"c"')

    @allure.title("CSV carries the header and full precision")
    def test_csv(self, tmp_output):
        writer = OutputWriter(tmp_output)
        path = writer.write_csv("data.csv", "t,x", np.array([[0.1, 1.0 / 3.0], [0.2, math.nan]]))
        lines = path.read_text().splitlines()
        assert lines[0] == "t,x"
        assert float(lines[1].split(",")[1]) == 1.0 / 3.0
        assert lines[2].split(",")[1] == "nan"

        empty = writer.write_csv("empty.csv", "a,b", np.zeros((0, 2)))
        assert empty.read_text().splitlines() == ["a,b"]

    @allure.title("Digests list files in write order")
    def test_digests(self, tmp_output):
        writer = OutputWriter(tmp_output)
        writer.write_text("notes/readme.txt", "hello\n")
        writer.write_json("summary.json", {"x": 1})
        digests = writer.digests()
        assert [entry["path"] for entry in digests] == ["notes/readme.txt", "summary.json"]
        assert digests[0]["sha256"] == sha256_text("hello\n")
        assert digests[1]["sha256"] == sha256_file(tmp_output / "summary.json")


@allure.feature("Output")
@allure.story("SVG Previews")
class TestSvg:

    @allure.title("Rendering is deterministic and skips non-finite points")
    def test_render(self):
        def build():
            plot = SvgPlot("chi", log_x=True, log_y=True)
            plot.line([0.0, 1.0, 10.0, 100.0], [1.0, 0.5, 0.05, 0.005])
            plot.marker(10.0, 0.05)
            return plot.render()

        first = build()
        assert first == build()
        assert first.startswith("<svg")
        assert "nan" not in first
        assert first.count("<polyline") == 1
        assert first.count("<circle") == 1

    @allure.title("Decimation keeps the first and last index")
    def test_decimate(self):
        np.testing.assert_array_equal(decimate(5, limit=10), np.arange(5))
        indices = decimate(100_000, limit=1000)
        assert indices.size <= 1000
        assert indices[0] == 0
        assert indices[-1] == 99_999
