"""Frequency mixing against a naive double-loop DFT oracle."""

import numpy as np
import pytest

from hypersyn import autodiff as ad
from hypersyn.spectral import dft2_complex, dft2_real

from util import check_gradients


def naive_dft2(x: np.ndarray) -> np.ndarray:
    """O(n^2) double-loop 2-D DFT, the independent oracle."""
    s, d = x.shape
    out = np.zeros((s, d), dtype=np.complex128)
    for k in range(s):
        for l in range(d):
            acc = 0.0 + 0.0j
            for a in range(s):
                for b in range(d):
                    acc += x[a, b] * np.exp(-2j * np.pi * (k * a / s + l * b / d))
            out[k, l] = acc
    return out


class TestDft2Real:
    def test_constant_input_has_only_dc_component(self):
        c = 0.7
        x = np.full((5, 3), c)
        out = dft2_real(x)
        expected = np.zeros((5, 3))
        expected[0, 0] = 5 * 3 * c
        np.testing.assert_allclose(out, expected, atol=1e-9)

    def test_single_element_is_identity(self):
        x = np.array([[2.5]])
        np.testing.assert_allclose(dft2_real(x), x, atol=1e-12)

    def test_matches_naive_oracle(self):
        rng = np.random.default_rng(31)
        for _ in range(50):
            s = int(rng.integers(1, 17))
            d = int(rng.integers(1, 17))
            x = rng.normal(size=(s, d))
            got = dft2_real(x)
            re, im = dft2_complex(x)
            oracle = naive_dft2(x)
            np.testing.assert_allclose(got, oracle.real, atol=1e-9)
            np.testing.assert_allclose(im, oracle.imag, atol=1e-9)

    def test_linearity(self):
        rng = np.random.default_rng(32)
        x = rng.normal(size=(6, 4))
        y = rng.normal(size=(6, 4))
        a, b = 1.7, -0.4
        np.testing.assert_allclose(
            dft2_real(a * x + b * y), a * dft2_real(x) + b * dft2_real(y), atol=1e-9
        )

    def test_parseval(self):
        rng = np.random.default_rng(33)
        for _ in range(10):
            x = rng.normal(size=(7, 5))
            re, im = dft2_complex(x)
            energy_in = np.sum(x**2)
            energy_out = np.sum(re**2 + im**2) / (7 * 5)
            assert abs(energy_in - energy_out) < 1e-9

    def test_batched_matches_per_item(self):
        rng = np.random.default_rng(34)
        batch = rng.normal(size=(3, 4, 5))
        out = dft2_real(batch)
        for i in range(3):
            np.testing.assert_allclose(out[i], dft2_real(batch[i]), atol=1e-12)

    def test_gradient(self):
        rng = np.random.default_rng(35)
        x = rng.normal(size=(4, 3))
        w = rng.normal(size=(4, 3))
        check_gradients(lambda t: ad.sum(dft2_real(t) * w), [x])

    def test_empty_input_rejected(self):
        with pytest.raises(ValueError):
            dft2_real(np.zeros((0, 4)))
        with pytest.raises(ValueError):
            dft2_real(np.zeros((3,)))
