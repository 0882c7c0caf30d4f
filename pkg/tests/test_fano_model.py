import numpy as np
import pytest

from mlnfkit.errors import DegenerateInputError, DomainError
from mlnfkit.fano import BathGrid, build_model, diagonalize, model_from_matrix, williamson
from mlnfkit.fano.checks import certification_check, standard_slab
from mlnfkit.fano.model import kernel_weights
from mlnfkit.layered import Structure1D


def _J(n):
    return np.block([[np.zeros((n, n)), np.eye(n)], [-np.eye(n), np.zeros((n, n))]])


def test_bath_grid_trapezoid():
    b = BathGrid(0.5, 3.0, 9)
    assert b.weights.sum() == pytest.approx(2.5)
    assert b.nearest(1.27) == 2  # nodes 1.125 and 1.4375
    with pytest.raises(DomainError):
        BathGrid(0.0, 1.0, 4)
    with pytest.raises(DomainError):
        BathGrid(1.0, 2.0, 0)


def test_kernel_weights_delta_and_conjugation():
    b = BathGrid(0.5, 3.0, 33)
    j = 16
    w = b.nodes[j]
    plus, minus = kernel_weights(b, j, 1), kernel_weights(b, j, -1)
    assert plus[j].imag == pytest.approx(np.pi / (2 * w))
    assert np.allclose(plus, np.conj(minus))
    # the odd-offset rule leaves even offsets with only the smooth part
    assert abs(plus[j + 2]) < abs(plus[j + 1])
    with pytest.raises(DomainError):
        kernel_weights(b, 0, 1)
    with pytest.raises(DomainError):
        kernel_weights(b, j, 1, rule="simpson")


def test_model_hamiltonian_psd():
    m = build_model(standard_slab(), 10.0, 64, BathGrid(0.05, 6.0, 32))
    lo, hi = m.psd_defect()
    assert lo > -1e-12 * hi
    assert not m.uniform


def test_vacuum_model_is_uniform_with_zero_mode():
    m = build_model(Structure1D(), 10.0, 64, BathGrid(0.5, 3.0, 8))
    modes = diagonalize(m)
    freqs = np.sort(modes.frequencies)
    assert m.uniform and freqs[0] == 0.0
    # lattice photons come in +-k pairs
    assert freqs[1] == pytest.approx(freqs[2])


def test_sector_and_dense_paths_agree():
    m = build_model(standard_slab(), 10.0, 64, BathGrid(0.05, 6.0, 32))
    a = np.sort(diagonalize(m).frequencies)
    b = np.sort(diagonalize(m, use_sectors=False).frequencies)
    assert np.allclose(a, b, rtol=1e-10, atol=1e-12)


def test_harmonic_pair():
    freqs = np.sort(diagonalize(model_from_matrix(np.diag([1.0, 4.0]), np.eye(2))).frequencies)
    assert np.allclose(freqs, [1.0, 2.0])


def test_williamson_normal_form():
    rng = np.random.default_rng(3)
    A = rng.normal(size=(6, 6))
    M = A @ A.T + 6 * np.eye(6)
    w, T = williamson(M)
    assert np.abs(T @ _J(3) @ T.T - _J(3)).max() < 1e-12
    Ti = np.linalg.inv(T)
    assert np.allclose(Ti.T @ M @ Ti, np.diag(np.concatenate([w, w])), atol=1e-10)
    with pytest.raises(DegenerateInputError):
        williamson(np.diag([1.0, 0.0, 1.0, 1.0]))


def test_certification_small():
    reports, modes = certification_check(n_sites=64, n_bath=32)
    assert all(r.passed for r in reports), [r.summary_line() for r in reports]
    assert np.all(modes.frequencies >= 0)
