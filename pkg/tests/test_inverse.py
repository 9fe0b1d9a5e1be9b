import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dirac_delay.core import DelayConfig, InvalidInputError, PotentialPair, Spectrum, potential_distance
from dirac_delay.forward import potentials_to_kernels, spectra_of
from dirac_delay.inverse import (IllConditionedBasisError, SubspectrumSpec, beta_coefficients,
                                 boundary_jump, gram_matrix, kernels_to_potentials,
                                 reconstruct_from_m_subspectra, reconstruct_from_spectra,
                                 synthesize_kernel)
from dirac_delay.quadrature import interval_power_exp

HALF_PI = math.pi / 2


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.floats(HALF_PI, 3.0), st.integers(1, 40))
def test_kernel_map_round_trip(seed, a, half):
    rng = np.random.default_rng(seed)
    M = 2 * half
    z = lambda: rng.standard_normal(M + 1) + 1j * rng.standard_normal(M + 1)
    pp = PotentialPair(a, z(), z())
    back = kernels_to_potentials(potentials_to_kernels(pp))
    np.testing.assert_allclose(back.q, pp.q, atol=1e-12)
    np.testing.assert_allclose(back.p, pp.p, atol=1e-12)


def test_synthesis_of_single_mode():
    # g_n = 2 pi delta_{n,1} synthesizes exp(-ix) away from the endpoints
    N, M, a = 8, 16, HALF_PI
    g = np.zeros(2 * N + 1, complex)
    g[N + 1] = 2 * np.pi
    w = synthesize_kernel(g, a, M)
    x = np.linspace(-(np.pi - a), np.pi - a, M + 1)
    np.testing.assert_allclose(w[1:-1], np.exp(-1j * x[1:-1]), atol=1e-14)
    # endpoint samples are doubled to undo the half-jump of the series
    np.testing.assert_allclose(w[[0, -1]], 2 * np.exp(-1j * x[[0, -1]]), atol=1e-14)


def test_free_spectra_give_zero_potential():
    rec = reconstruct_from_spectra(Spectrum.free(1, 64), Spectrum.free(2, 64), DelayConfig(HALF_PI), 64)
    assert not np.any(rec.potential.q) and not np.any(rec.potential.p)
    assert rec.warning is None


def test_round_trip_converges(smooth):
    pp = smooth(7)
    errs = []
    for N in (256, 512):
        s1, s2 = spectra_of(pp, N)
        rec = reconstruct_from_spectra(s1, s2, pp.cfg, pp.M)
        errs.append(potential_distance(rec.potential, pp))
    assert errs[1] < errs[0] < 0.05


def test_reconstruct_rejects_mismatched_input():
    cfg = DelayConfig(HALF_PI)
    with pytest.raises(InvalidInputError):
        reconstruct_from_spectra(Spectrum.free(1, 8), Spectrum.free(2, 9), cfg)
    with pytest.raises(InvalidInputError):
        reconstruct_from_spectra(Spectrum.free(2, 8), Spectrum.free(1, 8), cfg)


def test_reconstruct_warns_on_non_genuine_data():
    s1 = Spectrum(1, Spectrum.free(1, 64).values + 0.25)
    rec = reconstruct_from_spectra(s1, Spectrum.free(2, 64), DelayConfig(HALF_PI), 64)
    assert rec.warning and "outside" in rec.warning
    assert not rec.diagnostics()["type_reports"]["j1"]["pass"]


def lattice_spec(j, m, K, **kw):
    return SubspectrumSpec(j, m, m * np.arange(-K, K + 1) + (1 - j) / 2, **kw)


def test_subspectrum_validation():
    with pytest.raises(InvalidInputError):
        lattice_spec(1, 2, 8, cfg=DelayConfig(2.0))
    v = 2 * np.arange(-4, 5).astype(complex)
    v[4] = v[5] = 0.5
    with pytest.raises(InvalidInputError):
        SubspectrumSpec(1, 2, v)
    ok = SubspectrumSpec(1, 2, v, [1, 1, 1, 1, 2, 2, 1, 1, 1])
    assert ok.groups()[4] == (0.5, 2)
    assert SubspectrumSpec.from_json(ok.to_json()).groups() == ok.groups()


def test_subspectrum_from_spectrum_picks_every_mth():
    sp = SubspectrumSpec.from_spectrum(Spectrum.free(2, 30), 3, 10)
    np.testing.assert_array_equal(sp.values, 3 * np.arange(-10, 11) - 0.5)
    with pytest.raises(InvalidInputError):
        SubspectrumSpec.from_spectrum(Spectrum.free(2, 20), 3, 10)


def test_free_subspectra_give_zero_potential():
    rec = reconstruct_from_m_subspectra(lattice_spec(1, 3, 16), lattice_spec(2, 3, 16), 64)
    assert not np.any(rec.potential.q) and rec.potential.a == pytest.approx(2 * math.pi / 3)


def test_gram_rows_are_orthogonal_on_the_lattice():
    for j in (1, 2):
        G = gram_matrix(lattice_spec(j, 2, 12))
        np.testing.assert_allclose(G @ G.conj().T, np.pi * np.eye(25), atol=1e-12)
        assert np.all(np.abs(beta_coefficients(lattice_spec(j, 2, 12))) < 1e-14)


def test_boundary_jump_of_linear_function():
    m, K = 2, 200
    b = np.pi / m
    l = np.arange(-K, K + 1)
    c = interval_power_exp(-m * l, 1, -b, b) / math.sqrt(2 * b)
    assert boundary_jump(c, m, b) == pytest.approx(2 * b, rel=1e-3)


def test_subspectra_agree_with_full_reconstruction(smooth):
    pp = smooth(4)
    s1, s2 = spectra_of(pp, 512)
    full = reconstruct_from_spectra(s1, s2, pp.cfg, pp.M).potential
    sub = reconstruct_from_m_subspectra(SubspectrumSpec.from_spectrum(s1, 2, 128),
                                        SubspectrumSpec.from_spectrum(s2, 2, 128), pp.M)
    assert potential_distance(sub.potential, full) < 0.05
    assert all(c < 10 for c in sub.condition)


def test_ill_conditioned_gram_raises():
    v = 2 * np.arange(-8, 9).astype(complex)
    v[9] = 1e-9
    with pytest.raises(IllConditionedBasisError) as info:
        reconstruct_from_m_subspectra(SubspectrumSpec(1, 2, v), lattice_spec(2, 2, 8), 64)
    assert info.value.condition > 1e8


def test_mismatched_m_rejected():
    with pytest.raises(InvalidInputError):
        reconstruct_from_m_subspectra(lattice_spec(1, 2, 8), lattice_spec(2, 3, 8), 64)
