import numpy as np
import pytest

from mlnfkit.errors import DomainError
from mlnfkit.fano import BathGrid, build_model, diagonalize, lnf_defect, spanning_fraction
from mlnfkit.fano.checks import defect_vs_filling, filled_box_defect, finite_slab_defect
from mlnfkit.fano.defect import frequency_grid
from mlnfkit.layered import Structure1D


@pytest.fixture(scope="module")
def vacuum():
    model = build_model(Structure1D(), 10.0, 64, BathGrid(0.5, 3.0, 8))
    return model, diagonalize(model)


def test_vacuum_has_no_material_span(vacuum):
    model, modes = vacuum
    d, rep, res = lnf_defect(model, modes, (1.0, 2.0), expect="incomplete", tol=0.0)
    assert d == 1.0 and rep.passed


def test_vacuum_scattering_spans_band(vacuum):
    model, modes = vacuum
    d, rep, res = lnf_defect(model, modes, (1.0, 2.0), include_scattering=True)
    assert d < 1e-10 and res.rank == res.n_vectors
    assert np.all((res.spanned >= 0) & (res.spanned <= 1 + 1e-12))


def test_band_validation(vacuum):
    model, modes = vacuum
    with pytest.raises(DomainError):
        lnf_defect(model, modes, (1.0, 2.0), expect="maybe")
    with pytest.raises(DomainError):
        spanning_fraction(model, modes, (2.0, 1.0))


def test_frequency_grid_resolves_box(vacuum):
    model, _ = vacuum
    omegas, step = frequency_grid(model)
    assert step > 0 and np.all(np.diff(omegas) > 0)


def test_thin_slab_needs_scattering_modes():
    reports, res = finite_slab_defect(filling=0.1, n_bath=64)
    assert all(r.passed for r in reports)
    assert res["material"].defect > 0.5
    assert res["all"].defect < 0.02


def test_filled_box_complete():
    rep, res = filled_box_defect(n_bath=128)
    assert rep.passed and res.defect < 0.02


@pytest.mark.slow
def test_defect_decreases_with_filling():
    rows, rep = defect_vs_filling()
    defects = [r["defect"] for r in rows]
    assert rep.passed
    # near resonance even a thin slab spans most modes; the curve must still fall to ~0
    assert defects[0] > 10 * defects[-1] and defects[-1] < 0.02


@pytest.mark.slow
def test_thin_slab_fine_resolution():
    reports, res = finite_slab_defect(filling=0.1, n_sites=256, n_bath=256)
    assert res["all"].defect < 0.02
    assert res["material"].defect > 0.5
