import xml.etree.ElementTree as ET

import numpy as np
import pytest

from teamspectra.svg import bar_chart, kde_outline, violin_plot

NS = "{http://www.w3.org/2000/svg}"


def parse(text):
    root = ET.fromstring(text)
    assert root.tag == f"{NS}svg"
    return root


def test_bar_chart_is_valid_svg():
    root = parse(bar_chart(["a", "b<&>"], {"blr": [0.2, 0.5], "cart": [0.1, float("nan")]}, "t", "y"))
    # background + three finite bars + two legend swatches
    assert len(root.findall(f"{NS}rect")) == 1 + 3 + 2
    assert any(t.text == "b<&>" for t in root.iter(f"{NS}text"))


def test_bar_heights_proportional():
    root = parse(bar_chart(["x", "y"], {"s": [1.0, 2.0]}))
    bars = [r for r in root.findall(f"{NS}rect")[1:3]]
    h = [float(r.get("height")) for r in bars]
    assert h[1] == pytest.approx(2 * h[0], rel=1e-3)


def test_violin_plot_is_valid_svg(rng):
    groups = {"low": rng.standard_normal(50), "high": rng.standard_normal(30) + 2, "empty": [], "one": [0.5]}
    root = parse(violin_plot(groups, "egr", "egr"))
    assert len(root.findall(f"{NS}polygon")) == 2
    assert len(parse(violin_plot({})).findall(f"{NS}polygon")) == 0


def test_kde_outline():
    grid, dens = kde_outline([3.0, 3.0, 3.0])
    assert grid.tolist() == [3.0] and dens.tolist() == [1.0]
    grid, dens = kde_outline(np.linspace(0, 1, 101), n_points=33)
    assert grid.size == 33 and grid[0] == 0.0 and grid[-1] == 1.0
    assert dens.max() == 1.0 and np.all(dens > 0)
    # uniform data peaks near the middle, not at the edges
    assert dens[16] > dens[0]
