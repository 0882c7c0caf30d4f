import pytest

from mlnfkit.errors import DomainError
from mlnfkit.fano.maxwell import ampere_residual, maxwell_ampere_check, maxwell_ampere_refinement
from mlnfkit.layered import Structure1D, slab
from mlnfkit.response import standard_magnetodielectric_model


@pytest.fixture
def md_slab():
    return slab(standard_magnetodielectric_model(), 1.0, -0.5)


@pytest.mark.parametrize("column", ["g+", "g-", "fe", "fm"])
def test_second_order_refinement(md_slab, column):
    rep = maxwell_ampere_refinement(md_slab, 1.2, column=column)
    assert rep.passed, rep.summary_line()


def test_residual_shrinks_with_resolution(md_slab):
    coarse, _, _ = ampere_residual(md_slab, 1.2, 32)
    fine, _, _ = ampere_residual(md_slab, 1.2, 128)
    assert fine < coarse / 10


@pytest.mark.parametrize("column", ["g+", "g-"])
def test_vacuum_lattice_column(column):
    rep = maxwell_ampere_check(Structure1D(), 1.0, 64, column=column)
    assert rep.params["mode"] == "lattice" and rep.abs_err < 1e-8


def test_lattice_mode_in_medium(md_slab):
    rep = maxwell_ampere_check(md_slab, 1.5, 64, column="fe", mode="lattice")
    assert rep.passed, rep.summary_line()


def test_input_validation(md_slab):
    with pytest.raises(DomainError):
        ampere_residual(md_slab, 1.0, 8)
    with pytest.raises(DomainError):
        ampere_residual(md_slab, 1.0, 64, column="h")
    with pytest.raises(DomainError):
        ampere_residual(md_slab, -1.0, 64)
    with pytest.raises(DomainError):
        maxwell_ampere_check(Structure1D(), 1.0, 64, column="fe")
