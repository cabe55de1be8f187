import pytest

from vorinv.errors import VorinvError
from vorinv.render import render_svg


def test_render_deterministic(rand10_diagram):
    t = rand10_diagram.tessellation
    gens = rand10_diagram.generators.points
    a = render_svg(t, generators=gens, show_circles=True)
    b = render_svg(t, generators=gens, show_circles=True)
    assert a == b
    assert a.startswith("<svg ")
    assert a.rstrip().endswith("</svg>")


def test_render_circle_count(rand10_diagram):
    t = rand10_diagram.tessellation
    gens = rand10_diagram.generators.points
    svg = render_svg(t, generators=gens, show_circles=True)
    assert svg.count('class="empty-circle"') == t.n_ordinary


def test_render_edges_only(rand10_diagram):
    svg = render_svg(rand10_diagram.tessellation)
    assert svg.count('class="edge"') == len(rand10_diagram.tessellation.edges())
    assert 'class="generator"' not in svg
    assert 'class="estimate"' not in svg


def test_render_estimate_crosses(rand10_diagram):
    gens = rand10_diagram.generators.points
    svg = render_svg(rand10_diagram.tessellation, estimates=gens)
    assert svg.count('class="estimate"') == 2 * len(gens)


def test_render_circles_need_generators(rand10_diagram):
    with pytest.raises(VorinvError):
        render_svg(rand10_diagram.tessellation, show_circles=True)
