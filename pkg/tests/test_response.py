import math

import numpy as np
import pytest

from mlnfkit.errors import DegenerateInputError, DomainError
from mlnfkit.response import (ConstantResponse, Constants, PoleTerm, ResponseModel, cauchy_loop,
                              coupling_coefficients, dispersion_suite, dumps_flat, eval_response,
                              kk_check, loads_flat, model_from_flat, model_to_flat, reality_defect,
                              standard_electric_model, standard_magnetodielectric_model)


def test_single_pole_values():
    pole = PoleTerm(1.0, 2.0, 0.1)
    model = ResponseModel(electric_poles=(pole,))
    eps, mu = eval_response(model, 1.0)
    assert eps == pytest.approx(1 + 1.0 / (4.0 - 1.0 - 0.1j))
    assert mu == 1.0


def test_reality_and_static_limit():
    model = standard_magnetodielectric_model()
    assert reality_defect(model, np.linspace(0.1, 6.0, 25)) < 1e-14
    eps, _ = eval_response(model, 1e-9)
    assert eps.imag == pytest.approx(0.0, abs=1e-9)
    assert eps.real > 1.0


def test_absorption_is_positive():
    model = standard_magnetodielectric_model()
    for w in np.linspace(0.1, 5.0, 30):
        eps, mu = eval_response(model, w)
        assert eps.imag > 0 and mu.imag > 0
        a, b = coupling_coefficients(model, Constants(), w)
        assert a > 0 and b > 0


def test_kk_for_each_channel():
    model = standard_magnetodielectric_model()
    for channel in ("electric", "inverse_mu"):
        rep = kk_check(model, channel, 1.7)
        assert rep.passed, rep.summary_line()


def test_dispersion_suite_passes_off_grid():
    reports = dispersion_suite(standard_magnetodielectric_model(), Constants(), 1, 1, -1, 0.9, 2.4)
    assert reports and all(r.passed for r in reports)


def test_coincident_frequencies_rejected():
    with pytest.raises(DegenerateInputError):
        dispersion_suite(standard_electric_model(), Constants(), 0, 1, 1, 1.0, 1.0)


def test_nonpositive_frequency_rejected():
    with pytest.raises(DomainError):
        kk_check(standard_electric_model(), "electric", -0.5)
    with pytest.raises(DomainError):
        kk_check(standard_electric_model(), "bogus", 1.0)


def test_cauchy_loop_vanishes():
    val = cauchy_loop(standard_electric_model(), "electric", (0.05 + 0.05j, 6 + 4j))
    assert abs(val) < 1e-8


def test_constant_response():
    resp = ConstantResponse(2 + 0.5j, 1.0)
    eps, mu = eval_response(resp, 3.0)
    assert eps == 2 + 0.5j and mu == 1.0


def test_flat_roundtrip():
    model = standard_magnetodielectric_model()
    flat = model_to_flat(model)
    assert model_from_flat(flat) == model
    assert loads_flat(dumps_flat(flat)) == flat


def test_constants_default_units():
    c = Constants()
    assert c.mu0 == pytest.approx(1.0 / (c.eps0 * c.c ** 2))
    assert math.isclose(c.c, 1.0)
