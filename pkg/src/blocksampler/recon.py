"""Compressed-sensing reconstruction from sampled Fourier coefficients.

The image is modelled as ``x = W* z`` with ``W`` the orthonormal Haar
transform, and measured through the centred unitary DFT at the sampled
frequencies, ``y = A_S z`` with ``A = F W*``. Recovery solves basis pursuit

    min ||z||_1  subject to  A_S z = y

by Douglas-Rachford splitting. ``A`` is unitary, so the rows of ``A_S`` are
orthonormal and projecting onto the constraint set is ``z + A_S* (y - A_S z)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from blocksampler.errors import InputError
from blocksampler.sampler import SamplingScheme
from blocksampler.transforms import fft2c, haar_dwt2, haar_idwt2, ifft2c, is_power_of_two

__all__ = [
    "PSNR_CAP",
    "ReconProblem",
    "douglas_rachford_l1",
    "haar_dwt2",
    "haar_idwt2",
    "psnr",
    "sense",
]

PSNR_CAP = 300.0


def _check_dims(shape: tuple[int, ...], scheme: SamplingScheme) -> None:
    if len(shape) != 2:
        raise InputError("images must be 2-D")
    if shape != (scheme.n1, scheme.n2):
        raise InputError(f"image is {shape[0]}x{shape[1]}, scheme is {scheme.n1}x{scheme.n2}")
    if not (is_power_of_two(shape[0]) and is_power_of_two(shape[1])):
        raise InputError(f"image sides must be powers of two, got {shape[0]}x{shape[1]}")


def sense(image, scheme: SamplingScheme, wavelet_depth: int | None = None) -> np.ndarray:
    """Centred unitary DFT of ``image`` at the sampled pixels, in index order.

    ``wavelet_depth`` is accepted for symmetry with the coefficient-space
    operator; the result does not depend on it because ``A W = F``.
    """
    image = np.asarray(image, dtype=float)
    _check_dims(image.shape, scheme)
    return fft2c(image).ravel()[scheme.sampled_pixels]


@dataclass(frozen=True, eq=False)
class ReconProblem:
    """Reference image, scheme and splitting parameters for one reconstruction."""

    reference: np.ndarray
    scheme: SamplingScheme
    wavelet_depth: int
    dr_gamma: float = 1.0
    dr_iters: int = 500

    def __post_init__(self):
        ref = np.asarray(self.reference, dtype=float)
        _check_dims(ref.shape, self.scheme)
        if (1 << self.wavelet_depth) > min(ref.shape) or self.wavelet_depth < 0:
            raise InputError(f"wavelet depth {self.wavelet_depth} does not fit a {ref.shape[0]}x{ref.shape[1]} image")
        if self.dr_iters < 1:
            raise InputError(f"dr_iters must be >= 1, got {self.dr_iters}")
        if not self.dr_gamma > 0:
            raise InputError(f"dr_gamma must be > 0, got {self.dr_gamma}")
        object.__setattr__(self, "reference", ref)

    @property
    def measurements(self) -> np.ndarray:
        return sense(self.reference, self.scheme, self.wavelet_depth)

    def forward(self, z: np.ndarray) -> np.ndarray:
        """``A_S z`` for coefficient array ``z``."""
        return fft2c(haar_idwt2(z, self.wavelet_depth)).ravel()[self.scheme.sampled_pixels]

    def adjoint(self, y: np.ndarray) -> np.ndarray:
        """``A_S* y``: zero-filled inverse DFT, then Haar analysis."""
        full = np.zeros(self.scheme.n, dtype=complex)
        full[self.scheme.sampled_pixels] = y
        return haar_dwt2(ifft2c(full.reshape(self.scheme.n1, self.scheme.n2)), self.wavelet_depth)


def _soft(z: np.ndarray, gamma: float) -> np.ndarray:
    mag = np.abs(z)
    scale = np.maximum(1.0 - gamma / np.maximum(mag, np.finfo(float).tiny), 0.0)
    return z * scale


def douglas_rachford_l1(problem: ReconProblem, callback=None, return_coefficients: bool = False):
    """Basis pursuit by Douglas-Rachford splitting, started from ``A_S* y``.

    Each iteration projects the auxiliary point onto the constraint set and
    reflects through complex soft-thresholding. The output is the real part of
    the synthesised final projected (hence feasible) point. ``callback(k, x)``
    receives every projected point.
    """
    y = problem.measurements
    gamma = problem.dr_gamma

    def project(z):
        return z + problem.adjoint(y - problem.forward(z))

    u = problem.adjoint(y)
    x = u
    for k in range(problem.dr_iters):
        x = project(u)
        if callback is not None:
            callback(k, x)
        u = u + _soft(2.0 * x - u, gamma) - x
    x = project(u)
    image = haar_idwt2(x, problem.wavelet_depth).real
    if return_coefficients:
        return image, x
    return image


def psnr(reference, reconstruction) -> float:
    """``10 log10(peak^2 / mse)`` with ``peak = max(reference)``, capped at 300 dB."""
    reference = np.asarray(reference, dtype=float)
    reconstruction = np.asarray(reconstruction, dtype=float)
    if reference.shape != reconstruction.shape:
        raise InputError(f"shape mismatch {reference.shape} vs {reconstruction.shape}")
    mse = float(np.mean((reference - reconstruction) ** 2))
    peak = float(reference.max())
    if mse == 0.0:
        return PSNR_CAP
    if peak <= 0.0:
        return -PSNR_CAP
    return min(10.0 * math.log10(peak * peak / mse), PSNR_CAP)
