"""Two-dimensional discrete Fourier transform for frequency mixing.

The transform runs along the embedding axis, then the temporal axis, and
the real part of the complex result is retained. Both passes are expressed
as fixed cosine/sine matrix products, so the operation is a plain linear
map that differentiates through the tensor engine. Desk-scale sequences
make an FFT unnecessary.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

from . import autodiff as ad
from .autodiff import value_of


@lru_cache(maxsize=None)
def dft_matrices(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Cosine and sine kernels C[j,k] = cos(2 pi j k / n), S likewise."""
    jk = np.outer(np.arange(n), np.arange(n))
    angle = 2.0 * np.pi * jk / n
    return np.cos(angle), np.sin(angle)


def _check_nonempty(x) -> tuple[int, int]:
    shape = value_of(x).shape
    if len(shape) < 2 or shape[-2] == 0 or shape[-1] == 0:
        raise ValueError(f"expected a nonempty (..., S, d) sequence, got shape {shape}")
    return shape[-2], shape[-1]


def dft2_complex(x):
    """Full complex 2-D DFT of a real (..., S, d) array as (real, imag)."""
    s, d = _check_nonempty(x)
    cs, ss = dft_matrices(s)
    cd, sd = dft_matrices(d)
    real = ad.matmul(ad.matmul(cs, x), cd.T) - ad.matmul(ad.matmul(ss, x), sd.T)
    imag = -(ad.matmul(ad.matmul(ss, x), cd.T) + ad.matmul(ad.matmul(cs, x), sd.T))
    return real, imag


def dft2_real(x):
    """Real part of the 2-D DFT; shape-preserving and linear in the input."""
    return dft2_complex(x)[0]
