import numpy as np
import pytest

from mlnfkit.fano import BathGrid, build_model, diagonalize, polariton_vectors
from mlnfkit.fano.checks import bosonicity_check, overlap_sweep, polariton_overlap, standard_slab
from mlnfkit.fano.polariton import snap_frequency
from mlnfkit.layered import Structure1D


@pytest.fixture(scope="module")
def slab_model():
    return build_model(standard_slab(), 10.0, 64, BathGrid(0.05, 6.0, 32))


def test_frequency_snaps_to_bath_node(slab_model):
    pv = polariton_vectors(slab_model, 1.4)
    assert pv.omega == pytest.approx(slab_model.bath.nodes[pv.node])
    w, j, _ = snap_frequency(slab_model, 1.4)
    assert j == pv.node and w == pv.omega


def test_row_families(slab_model):
    pv = polariton_vectors(slab_model, 1.4)
    assert pv.scattering().shape[0] == 2
    assert pv.material().shape[0] == pv.fe_sites.size + pv.fm_sites.size
    assert pv.all_rows().shape[1] == 2 * slab_model.n_pairs


def test_vacuum_has_no_medium_rows():
    m = build_model(Structure1D(), 10.0, 64, BathGrid(0.5, 3.0, 8))
    pv = polariton_vectors(m, 1.0)
    assert pv.material().size == 0 and pv.scattering().shape[0] == 2


def test_bosonic_brackets_within_budget():
    reports, res = bosonicity_check(64)
    by = {r.name: r for r in reports}
    assert by["bosonic_cross"].passed and by["bosonic_annihilation"].passed
    assert res.diagonal_error < 0.1
    assert set(res.labels) >= {"g+", "g-"}


def test_overlap_improves_with_bath():
    rows, rep = overlap_sweep((32, 64))
    assert rows[1]["max_angle"] < rows[0]["max_angle"]
    assert rep.passed


def test_overlap_single(slab_model):
    modes = diagonalize(slab_model)
    angle, per_row = polariton_overlap(slab_model, modes, 1.4, 0.3)
    assert 0 <= angle < np.pi / 2
    assert angle == pytest.approx(per_row.max())
