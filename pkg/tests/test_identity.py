import numpy as np
import pytest

from mlnfkit.errors import DomainError
from mlnfkit.identity import (asymptotic_amplitude_check, commutator_spectrum, completeness_1d,
                              completeness_refinement, completeness_terms, homogeneous_green,
                              psd_report, unbounded_lnf_identity)
from mlnfkit.layered import Structure1D, green, slab
from mlnfkit.response import ConstantResponse, standard_magnetodielectric_model


@pytest.fixture
def md_slab():
    return slab(standard_magnetodielectric_model(), 1.0, -0.5)


@pytest.mark.parametrize("x, xp", [(-0.8, 0.2), (0.0, 0.0), (0.3, 1.7), (-2.0, -1.1)])
def test_completeness_points(md_slab, x, xp):
    rep = completeness_1d(md_slab, 1.3, x, xp)
    assert rep.passed, rep.summary_line()


def test_completeness_terms_partition(md_slab):
    terms = completeness_terms(md_slab, 1.3, -0.8, 0.2)
    assert isinstance(terms, dict) and len(terms) >= 2


def test_vacuum_completeness_has_no_medium_term():
    rep = completeness_1d(Structure1D(), 1.0, 0.1, 0.4)
    assert rep.passed


def test_refinement_order(md_slab):
    rep = completeness_refinement(md_slab, 1.3, -0.8, 0.2)
    assert rep.passed and rep.metadata["observed_order"] >= 2.0


def test_commutator_is_psd(md_slab):
    assert psd_report(md_slab, 1.3, np.linspace(-1.5, 1.5, 12)).passed
    out = commutator_spectrum(md_slab, 1.3, -0.3, 0.6)
    assert out is not None


def test_unbounded_absorber():
    resp = ConstantResponse(2 + 0.5j, 1.0)
    rep = unbounded_lnf_identity(resp, 1.0, 0.1, 0.3, truncation=60.0)
    assert rep.passed, rep.summary_line()


def test_unbounded_lossless_rejected():
    with pytest.raises(DomainError):
        unbounded_lnf_identity(ConstantResponse(2.0, 1.0), 1.0, 0.1, 0.3, truncation=20.0)


def test_homogeneous_green_matches_vacuum():
    w = 1.1
    g, dg = homogeneous_green(w, 1.0, 1.0, 0.3, -0.4)
    assert abs(g - green(Structure1D(), w, 0.3, -0.4)) < 1e-14
    h = 1e-6
    fd = (homogeneous_green(w, 1.0, 1.0, 0.3, -0.4 + h)[0]
          - homogeneous_green(w, 1.0, 1.0, 0.3, -0.4 - h)[0]) / (2 * h)
    assert abs(dg - fd) < 1e-8


def test_asymptotic_amplitude(md_slab):
    assert asymptotic_amplitude_check(md_slab, 1.3, 0.1, 40.0).passed
