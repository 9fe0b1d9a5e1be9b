import numpy as np
import pytest

from dirac_delay.contour import roots_in_disk, winding_number


def poly(roots):
    c = np.poly(roots)
    d = np.polyder(c)
    return (lambda z: np.polyval(c, z)), (lambda z: np.polyval(d, z))


def test_winding_counts_roots_with_multiplicity():
    f, _ = poly([0.1, 0.1, 2.0, -0.3j])
    assert winding_number(f, 0, 1.0) == 3
    assert winding_number(f, 2, 0.5) == 1
    assert winding_number(np.sin, 0, 3.5) == 3


def test_roots_in_disk_recovers_double_root():
    f, df = poly([0.25 + 0.1j, 0.25 + 0.1j, 1.7])
    got = np.sort_complex(roots_in_disk(f, df, 0, 1.0))
    np.testing.assert_allclose(got, [0.25 + 0.1j] * 2, atol=1e-6)


def test_known_roots_are_divided_out():
    f, df = poly([0.0, 0.4, -0.4])
    got = roots_in_disk(f, df, 0, 0.6, known=[0.4])
    np.testing.assert_allclose(np.sort_complex(got), [-0.4, 0.0], atol=1e-10)


def test_sine_roots():
    got = np.sort(roots_in_disk(np.sin, np.cos, 2.0, 1.5).real)
    np.testing.assert_allclose(got, [np.pi], atol=1e-12)
