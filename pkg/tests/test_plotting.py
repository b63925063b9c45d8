from __future__ import annotations

import xml.etree.ElementTree as ET

import pytest

from kgstab.plotting import Series, emit_plot, render_svg


def test_two_point_series_is_valid_svg(tmp_path):
    path = emit_plot(Series([0, 1], [1, 2], xlabel="t", ylabel="E"), tmp_path / "p.svg")
    root = ET.parse(path).getroot()
    assert root.tag.endswith("svg")
    text = path.read_text()
    assert ">t<" in text and ">E<" in text


def test_log_scale_rejects_nonpositive_with_index():
    with pytest.raises(ValueError, match="index 1"):
        render_svg(Series([0, 1, 2], [1.0, 0.0, 2.0], logy=True))


def test_bytes_are_deterministic():
    s = Series([0, 1, 2, 3], [1.0, 0.5, 0.25, 0.125], label="decay", logy=True, title="x")
    assert render_svg(s) == render_svg(s)


def test_bad_series_shapes():
    with pytest.raises(ValueError):
        render_svg(Series([], []))
    with pytest.raises(ValueError):
        render_svg(Series([0, 1], [1]))


def test_unwritable_path(tmp_path):
    with pytest.raises(OSError):
        emit_plot(Series([0, 1], [1, 2]), tmp_path / "missing" / "p.svg")
