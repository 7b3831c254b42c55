import plotly.graph_objects as go
import pytest

from core_algebra import group_params
from interval_dynamics import interval_spec
from measure_entropy import scan
from natext_domain import build_domain
from planar_map import block_images, partition_blocks
from visualisation import creer_figure_domaine, creer_figure_scan


@pytest.fixture(scope='module')
def omega_014():
    return build_domain(group_params(3), 0.14)


def test_figure_domaine(omega_014):
    fig = creer_figure_domaine(omega_014)
    assert isinstance(fig, go.Figure)
    assert len(fig.data) >= len(omega_014.rects)
    assert 'α' in fig.layout.title.text


def test_figure_domaine_avec_images(omega_014):
    spec = interval_spec(group_params(3), 0.14)
    images = block_images(spec, partition_blocks(omega_014))
    fig = creer_figure_domaine(omega_014, images, annotations=False)
    assert len(fig.data) > len(creer_figure_domaine(omega_014, annotations=False).data)


def test_figure_scan():
    fig = creer_figure_scan(scan(3, [0.14, 0.75]))
    assert isinstance(fig, go.Figure)
    assert len(fig.data) == 3


def test_figure_scan_vide():
    import pandas as pd

    assert creer_figure_scan(pd.DataFrame({'alpha': [], 'mass': []})) is None
