import math

import numpy as np
import pytest

from mlnfkit.errors import DomainError, SingularityError
from mlnfkit.vacuum3d import (angular_completeness, angular_sum, delta_dyadics, free_green,
                              im_free_green, jones_check, jones_rhs, plemelj_limit_check,
                              sphere_quadrature)


def test_sphere_quadrature_weights():
    q = sphere_quadrature(20)
    assert q.weights.sum() == pytest.approx(4 * math.pi, rel=1e-13)
    assert np.allclose(np.linalg.norm(q.nodes, axis=1), 1.0)


def test_delta_dyadics_partition_identity():
    T, L = delta_dyadics([0.3, 0.4, 1.2])
    assert np.allclose(T + L, np.eye(3), atol=1e-15)
    assert np.allclose(L @ L, L) and np.allclose(T @ L, 0)


def test_free_green_symmetric_and_imag_part():
    R = [0.3, -0.2, 0.5]
    G = free_green(1.0, R)
    assert np.allclose(G, G.T)
    assert np.allclose(G.imag, im_free_green(1.0, R), atol=1e-14)


def test_free_green_singular_at_origin():
    with pytest.raises(SingularityError):
        free_green(1.0, [0.0, 0.0, 0.0])


def test_im_green_origin():
    for w in (0.5, 2.0):
        assert np.allclose(im_free_green(w, [0, 0, 0]), w / (6 * math.pi) * np.eye(3), atol=1e-15)


def test_im_green_small_r_continuous():
    a = im_free_green(1.0, [1e-7, 0, 0])
    b = im_free_green(1.0, [0, 0, 0])
    assert np.allclose(a, b, atol=1e-12)


def test_angular_completeness_point():
    rep = angular_completeness(1.3, [0.4, -0.9, 1.1], [0.0, 0.2, -0.3])
    assert rep.passed, rep.summary_line()
    assert angular_sum(1.0, [0.1, 0, 0], [0, 0.2, 0], sphere_quadrature(16)).shape == (3, 3)


def test_jones_constant_exact():
    u = np.ones
    radii = [2 * math.pi * m for m in (8, 16, 32)]
    rep = jones_check(1.0, [0, 0, 1], lambda m: u(len(m)), radii)
    assert rep.passed and rep.metadata.get("exact")
    assert np.isfinite(jones_rhs(60.0, [0, 0, 1], lambda m: u(len(m))))


def test_jones_rejects_small_kr():
    with pytest.raises(DomainError):
        jones_check(1.0, [0, 0, 1], lambda m: np.ones(len(m)), [10.0, 20.0, 40.0])


def test_plemelj_sigma_validation():
    with pytest.raises(DomainError):
        plemelj_limit_check([50.0, 100.0], 0, lambda K: math.exp(-K * K))


def test_plemelj_lorentzian_tail():
    rep = plemelj_limit_check([50.0, 100.0, 200.0], 1, lambda K: 1.0 / (1.0 + K * K), tol=1e-5)
    assert rep.status == "ok"
    assert rep.metadata["pole_errors"][-1] < rep.metadata["pole_errors"][0] + 1e-5
