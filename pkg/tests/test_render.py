import xml.etree.ElementTree as ET

import numpy as np
import pytest

import isoperc.isoradial as ir
import isoperc.tiling as tl
from isoperc.errors import ValidationError
from isoperc.percsim import Configuration, sample_configuration
from isoperc.render import RenderStyle, render_configuration, render_graph, render_tiling


def small_graph():
    t = tl.periodic_tiling("square", 6)
    return ir.build_isoradial(t, 0, validate=False)


def parse(svg):
    root = ET.fromstring(svg)
    assert root.tag.endswith("svg")
    assert root.attrib["version"] == "1.1"
    return root


def test_tiling_render_is_valid_and_deterministic():
    t = tl.periodic_tiling("square", 5)
    one = render_tiling(t)
    two = render_tiling(tl.periodic_tiling("square", 5))
    assert one == two
    root = parse(one)
    polygons = [el for el in root.iter() if el.tag.endswith("polygon")]
    assert len(polygons) == t.n_rhombi


def test_tracks_one_polyline_each():
    t = tl.periodic_tiling("rhombic", 5, theta=1.1)
    svg = render_tiling(t, tracks=True)
    root = parse(svg)
    polylines = [el for el in root.iter() if el.tag.endswith("polyline")]
    assert len(polylines) == len(tl.extract_tracks(t))


def test_graph_render_counts():
    g = small_graph()
    svg = render_graph(g)
    root = parse(svg)
    lines = [el for el in root.iter() if el.tag.endswith("line")]
    circles = [el for el in root.iter() if el.tag.endswith("circle")]
    assert len(lines) == g.n_edges
    assert len(circles) == g.n_vertices
    no_dots = render_graph(g, RenderStyle(show_vertices=False))
    assert "<circle" not in no_dots


def test_configuration_open_edge_count():
    g = small_graph()
    w = ir.percolation_weights(g)
    config = sample_configuration(w, 3, graph=g)
    svg = render_configuration(g, config, clusters=True)
    assert svg.count('class="open"') == int(np.sum(config.open))
    assert svg.count('class="closed"') == g.n_edges - int(np.sum(config.open))
    parse(svg)


def test_configuration_validation_and_style():
    g = small_graph()
    with pytest.raises(ValidationError):
        render_configuration(g, Configuration(open=np.ones(3, dtype=bool)))
    with pytest.raises(ValidationError):
        RenderStyle(scale=0.0)
    with pytest.raises(ValidationError):
        RenderStyle(palette=())
