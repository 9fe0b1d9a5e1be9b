import math

import numpy as np
import pytest
from scipy.optimize import brentq

from dirac_delay.contour import LocalizationError
from dirac_delay.core import GeneralPotentialMatrix, KernelPair, PotentialPair, Spectrum
from dirac_delay.forward import (DomainError, cospi, eval_char, eval_char_derivative, find_eigenvalues,
                                 general_char_functions, kernels_to_char, potentials_to_kernels,
                                 sinpi, spectra_of)
from dirac_delay.inverse import SubspectrumSpec, reconstruct_from_m_subspectra

HALF_PI = math.pi / 2


def constant_q(c, a=HALF_PI, M=512):
    return PotentialPair.from_functions(a, M, lambda x: c + 0 * x, lambda x: 0 * x)


def delta1_closed(lam, c, a=HALF_PI):
    # w1 = -c/2 on [-b, b] integrates to -c sin(lam b)/lam
    b = math.pi - a
    return -np.sin(np.pi * lam) - c * np.sin(lam * b) / lam


def test_sinpi_is_exact_at_integers():
    n = np.arange(-1000, 1001)
    assert np.all(sinpi(n) == 0)
    assert np.all(np.abs(cospi(n + 0.5)) < 1e-15)


def test_zero_potential_gives_heads():
    rep = kernels_to_char(potentials_to_kernels(PotentialPair.zeros(HALF_PI, 16)), 1)
    lam = np.linspace(-5, 5, 11) + 0.3j
    np.testing.assert_allclose(eval_char(rep, lam), -np.sin(np.pi * lam), atol=1e-14)


@pytest.mark.parametrize("a", [HALF_PI, 2.0, 2.8])
def test_constant_q_closed_form(a):
    rep = kernels_to_char(potentials_to_kernels(constant_q(0.3, a)), 1)
    lam = np.array([-7.3, -0.2, 0.9, 4.4, 12.0 + 0.5j])
    np.testing.assert_allclose(eval_char(rep, lam), delta1_closed(lam, 0.3, a), atol=1e-12)
    # p = 0, so the second kernel vanishes and Delta_2 is the bare cosine
    rep2 = kernels_to_char(potentials_to_kernels(constant_q(0.3, a)), 2)
    np.testing.assert_allclose(eval_char(rep2, lam), np.cos(np.pi * lam), atol=1e-12)


def test_constant_q_eigenvalues_match_bisection():
    rep = kernels_to_char(potentials_to_kernels(constant_q(0.1)), 1)
    s = find_eigenvalues(rep, 20)
    f = lambda x: delta1_closed(x, 0.1)
    oracle = [brentq(f, n - 0.45, n + 0.45, xtol=1e-15) if n else brentq(f, -0.45, 0.45)
              for n in range(-20, 21)]
    np.testing.assert_allclose(s.values.real, oracle, atol=1e-9)
    assert np.all(np.abs(s.values.imag) < 1e-9)


def test_derivatives_match_finite_differences(smooth):
    rep = kernels_to_char(potentials_to_kernels(smooth(3)), 2)
    lam, h = 1.7 - 0.4j, 1e-4
    f = lambda z: eval_char(rep, z)
    d1 = (f(lam + h) - f(lam - h)) / (2 * h)
    d2 = (f(lam + h) - 2 * f(lam) + f(lam - h)) / h ** 2
    assert abs(eval_char_derivative(rep, lam, 1) - d1) < 1e-6
    assert abs(eval_char_derivative(rep, lam, 2) - d2) < 1e-4
    with pytest.raises(ValueError):
        eval_char_derivative(rep, lam, 5)


def test_strip_bound():
    rep = kernels_to_char(potentials_to_kernels(PotentialPair.zeros(HALF_PI, 8)), 1)
    with pytest.raises(DomainError):
        eval_char(rep, 1 + 60j)


def test_kernels_vanish_for_zero_potential():
    kp = potentials_to_kernels(PotentialPair.zeros(2.0, 32))
    assert isinstance(kp, KernelPair) and kp.M == 32
    assert not np.any(kp.w1) and not np.any(kp.w2)


def test_general_matrix_reduces_to_canonical_pair(smooth):
    pp = smooth(5, a=2.2)
    gm = GeneralPotentialMatrix.from_pair(pp)
    kp = potentials_to_kernels(pp)
    rng = np.random.default_rng(1)
    lam = rng.uniform(-30, 30, 100) + 1j * rng.uniform(-3, 3, 100)
    for j in (1, 2):
        gen = general_char_functions(gm, pp.cfg, 1, j)
        np.testing.assert_allclose(eval_char(gen, lam), eval_char(kernels_to_char(kp, j), lam),
                                   atol=1e-10)


def test_general_matrix_mean_terms():
    # q11 = q22 = c: omega1 = c (pi - a), and Delta_{1,1} = -sin + omega1 cos(lam b)
    a, c, M = 2.0, 0.4, 64
    one = np.ones(M + 1)
    gm = GeneralPotentialMatrix(a, c * one, 0 * one, 0 * one, c * one)
    b = math.pi - a
    lam = np.array([0.3, 2.5, -4.1])
    rep = general_char_functions(gm, None, 1, 1)
    np.testing.assert_allclose(eval_char(rep, lam),
                               -np.sin(np.pi * lam) + c * b * np.cos(lam * b), atol=1e-12)
    free = GeneralPotentialMatrix(a, 0 * one, 0 * one, 0 * one, 0 * one)
    np.testing.assert_allclose(eval_char(general_char_functions(free, None, 2, 1), lam),
                               np.cos(np.pi * lam), atol=1e-15)
    np.testing.assert_allclose(eval_char(general_char_functions(free, None, 2, 2), lam),
                               np.sin(np.pi * lam), atol=1e-15)


def test_free_eigenvalues_on_lattice():
    s1, s2 = spectra_of(PotentialPair.zeros(HALF_PI, 64), 32)
    np.testing.assert_array_equal(s1.values, np.arange(-32, 33))
    np.testing.assert_array_equal(s2.values, np.arange(-32, 33) - 0.5)


def test_second_family_lattice():
    free = GeneralPotentialMatrix(2.0, *(np.zeros(17),) * 4)
    s = find_eigenvalues(general_char_functions(free, None, 2, 2), 4)
    np.testing.assert_allclose(s.values, np.arange(-4, 5) + 1.0, atol=1e-12)


def test_complex_potential_roots_have_small_residual(smooth):
    s1, s2 = spectra_of(smooth(11), 64)
    for s in (s1, s2):
        assert s.meta["residual"].max() < 1e-10
        assert np.all(np.abs(s.remainders) < 0.5)


def test_double_root_is_found_and_flagged():
    # potentials whose first characteristic function has a double zero at 0.9
    m, K = 2, 32
    v = m * np.arange(-K, K + 1).astype(complex)
    v[K] = v[K + 1] = 0.9
    mult = np.ones(2 * K + 1, int)
    mult[K] = mult[K + 1] = 2
    rec = reconstruct_from_m_subspectra(SubspectrumSpec(1, m, v, mult),
                                        SubspectrumSpec(2, m, m * np.arange(-K, K + 1) - 0.5), 512)
    rep = kernels_to_char(potentials_to_kernels(rec.potential), 1)
    s = find_eigenvalues(rep, 8)
    (root, k), = s.meta["multiple"]
    assert k == 2 and abs(root - 0.9) < 1e-6
    assert s.values[s.N] == s.values[s.N + 1]


def test_unreachable_residual_raises_localization_error():
    rep = kernels_to_char(potentials_to_kernels(constant_q(0.1)), 1)
    with pytest.raises(LocalizationError) as info:
        find_eigenvalues(rep, 4, residual_tol=1e-300)
    assert info.value.index is not None


def test_spectrum_type_returned():
    s1, _ = spectra_of(PotentialPair.zeros(HALF_PI, 8), 2)
    assert isinstance(s1, Spectrum) and s1.problem_j == 1
