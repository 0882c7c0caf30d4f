import numpy as np
import pytest

from mlnfkit.errors import DomainError
from mlnfkit.layered import (Structure1D, green, make_grid, reflection_transmission,
                             scattering_matrix, scattering_mode, slab, structure_from_flat,
                             structure_to_flat, transfer_matrix)
from mlnfkit.response import ConstantResponse, standard_magnetodielectric_model


@pytest.fixture
def md_slab():
    return slab(standard_magnetodielectric_model(), 1.0, -0.5)


def test_vacuum_is_transparent():
    r, t = reflection_transmission(Structure1D(), 1.3, 1)
    assert abs(r) < 1e-15 and abs(t - 1) < 1e-15


def test_transfer_matrix_unimodular(md_slab):
    for w in (0.4, 1.3, 3.1):
        assert abs(np.linalg.det(transfer_matrix(md_slab, w)) - 1) < 1e-12


def test_scattering_matrix_reciprocal(md_slab):
    S = scattering_matrix(md_slab, 1.3)
    assert abs(S[0, 1] - S[1, 0]) < 1e-13


def test_lossy_slab_absorbs(md_slab):
    for s in (1, -1):
        r, t = reflection_transmission(md_slab, 1.3, s)
        assert abs(r) ** 2 + abs(t) ** 2 < 1.0


def test_lossless_flux_conserved():
    st = slab(4.0, 1.0, -0.5)
    for w in np.linspace(0.2, 5.0, 9):
        r, t = reflection_transmission(st, w, -1)
        assert abs(abs(r) ** 2 + abs(t) ** 2 - 1) < 1e-12


def test_mode_continuous_at_interface(md_slab):
    mode = scattering_mode(md_slab, 1.3, 1)
    left, right = mode.field(np.array([-0.5 - 1e-10, -0.5 + 1e-10]))
    assert abs(left - right) < 1e-8


def test_green_reciprocity(md_slab):
    g = green(md_slab, 1.3)
    for x, xp in ((0.2, -0.7), (1.5, 0.1), (-2.0, 3.0)):
        assert abs(g(x, xp) - g(xp, x)) < 1e-13


def test_green_outgoing_far_field(md_slab):
    # beyond the slab the x-dependence is a pure outgoing wave
    w = 1.3
    a, b = green(md_slab, w, 4.0, 0.0), green(md_slab, w, 5.0, 0.0)
    assert abs(b / a - np.exp(1j * w)) < 1e-12


def test_invalid_inputs(md_slab):
    with pytest.raises(DomainError):
        green(md_slab, -1.0, 0.0, 0.0)
    with pytest.raises(DomainError):
        slab(2.0, thickness=-1.0)


def test_grid_contains_interfaces(md_slab):
    x = make_grid(md_slab, 1.0, 0.1)
    assert np.any(np.isclose(x, -0.5)) and np.any(np.isclose(x, 0.5))
    assert np.all(np.diff(x) > 0)


def test_flat_roundtrip(md_slab):
    flat = structure_to_flat(md_slab, {0: "md"})
    assert structure_from_flat(flat, {"md": standard_magnetodielectric_model()}) == md_slab


def test_constant_response_layer():
    st = slab(ConstantResponse(2 + 0.5j), 1.0)
    eps, mu = st.material(1.0, np.array([0.5, 2.0]))
    assert eps[0] == 2 + 0.5j and eps[1] == 1
