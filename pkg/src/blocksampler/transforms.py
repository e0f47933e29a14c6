"""Orthonormal Haar wavelets and the centred unitary 2-D DFT."""

from __future__ import annotations

import math

import numpy as np

from blocksampler.errors import InputError

_S = 1.0 / math.sqrt(2.0)


def _check_depth(shape: tuple[int, ...], depth: int) -> None:
    if depth < 0:
        raise InputError(f"wavelet depth must be >= 0, got {depth}")
    block = 1 << depth
    for size in shape:
        if size % block:
            raise InputError(f"dimension {size} is not divisible by 2**{depth}")


def haar_dwt2(image, depth: int) -> np.ndarray:
    """Orthonormal 2-D Haar analysis in Mallat layout.

    After each level the approximation occupies the top-left quarter of the
    current block, followed by the detail bands; the next level transforms
    that quarter again.
    """
    coeffs = np.array(image, dtype=np.result_type(image, float), copy=True)
    if coeffs.ndim != 2:
        raise InputError("haar_dwt2 expects a 2-D array")
    _check_depth(coeffs.shape, depth)
    r, c = coeffs.shape
    for _ in range(depth):
        block = coeffs[:r, :c]
        lo = (block[0::2] + block[1::2]) * _S
        hi = (block[0::2] - block[1::2]) * _S
        block = np.vstack([lo, hi])
        lo = (block[:, 0::2] + block[:, 1::2]) * _S
        hi = (block[:, 0::2] - block[:, 1::2]) * _S
        coeffs[:r, :c] = np.hstack([lo, hi])
        r //= 2
        c //= 2
    return coeffs


def haar_idwt2(coeffs, depth: int) -> np.ndarray:
    """Inverse of :func:`haar_dwt2`."""
    image = np.array(coeffs, dtype=np.result_type(coeffs, float), copy=True)
    if image.ndim != 2:
        raise InputError("haar_idwt2 expects a 2-D array")
    _check_depth(image.shape, depth)
    n1, n2 = image.shape
    for level in range(depth - 1, -1, -1):
        r, c = n1 >> level, n2 >> level
        block = image[:r, :c]
        half = c // 2
        lo, hi = block[:, :half], block[:, half:]
        cols = np.empty_like(block)
        cols[:, 0::2] = (lo + hi) * _S
        cols[:, 1::2] = (lo - hi) * _S
        half = r // 2
        lo, hi = cols[:half], cols[half:]
        rows = np.empty_like(block)
        rows[0::2] = (lo + hi) * _S
        rows[1::2] = (lo - hi) * _S
        image[:r, :c] = rows
    return image


def haar_dwt1(x, depth: int, axis: int = -1) -> np.ndarray:
    """Orthonormal 1-D Haar analysis along ``axis`` (approximation first, then details coarse to fine)."""
    out = np.moveaxis(np.array(x, dtype=np.result_type(x, float), copy=True), axis, -1)
    _check_depth(out.shape[-1:], depth)
    size = out.shape[-1]
    for _ in range(depth):
        seg = out[..., :size]
        lo = (seg[..., 0::2] + seg[..., 1::2]) * _S
        hi = (seg[..., 0::2] - seg[..., 1::2]) * _S
        out[..., :size] = np.concatenate([lo, hi], axis=-1)
        size //= 2
    return np.moveaxis(out, -1, axis)


def fft2c(image) -> np.ndarray:
    """Unitary 2-D DFT with the zero frequency moved to pixel ``(n1 // 2, n2 // 2)``."""
    return np.fft.fftshift(np.fft.fft2(image, norm="ortho"))


def ifft2c(kspace) -> np.ndarray:
    """Inverse of :func:`fft2c`."""
    return np.fft.ifft2(np.fft.ifftshift(kspace), norm="ortho")


def is_power_of_two(v: int) -> bool:
    return v >= 1 and (v & (v - 1)) == 0


def frequency_offsets(n: int) -> np.ndarray:
    """Integer frequencies ``[-n/2, n/2)`` in centred index order."""
    return np.arange(n) - n // 2
