"""Synthetic reference images, generated deterministically."""

from __future__ import annotations

import numpy as np

from blocksampler.errors import InputError
from blocksampler.transforms import is_power_of_two

# (intensity, semi-axis x, semi-axis y, centre x, centre y, rotation in degrees)
_SHEPP_LOGAN = (
    (1.0, 0.69, 0.92, 0.0, 0.0, 0.0),
    (-0.8, 0.6624, 0.874, 0.0, -0.0184, 0.0),
    (-0.2, 0.11, 0.31, 0.22, 0.0, -18.0),
    (-0.2, 0.16, 0.41, -0.22, 0.0, 18.0),
    (0.1, 0.21, 0.25, 0.0, 0.35, 0.0),
    (0.1, 0.046, 0.046, 0.0, 0.1, 0.0),
    (0.1, 0.046, 0.046, 0.0, -0.1, 0.0),
    (0.1, 0.046, 0.023, -0.08, -0.605, 0.0),
    (0.1, 0.023, 0.023, 0.0, -0.606, 0.0),
    (0.1, 0.023, 0.046, 0.06, -0.605, 0.0),
)


def _check(size: int) -> None:
    if not is_power_of_two(size) or size < 8:
        raise InputError(f"phantom size must be a power of two >= 8, got {size}")


def shepp_logan(size: int = 128, peak: float = 255.0) -> np.ndarray:
    """Modified Shepp-Logan head phantom scaled to ``[0, peak]``."""
    _check(size)
    coords = (np.arange(size) + 0.5) / size * 2.0 - 1.0
    x = coords[None, :]
    y = -coords[:, None]
    image = np.zeros((size, size))
    for value, ax, ay, x0, y0, deg in _SHEPP_LOGAN:
        t = np.deg2rad(deg)
        dx, dy = x - x0, y - y0
        u = dx * np.cos(t) + dy * np.sin(t)
        v = -dx * np.sin(t) + dy * np.cos(t)
        image[(u / ax) ** 2 + (v / ay) ** 2 <= 1.0] += value
    image = np.clip(image, 0.0, None)
    return image / image.max() * peak


def wavelet_composite(size: int = 128, peak: float = 255.0) -> np.ndarray:
    """Dyadically aligned rectangles over a smooth ramp: few large Haar coefficients plus a dense tail."""
    _check(size)
    s = size // 8
    image = np.zeros((size, size))
    image[s:7 * s, s:7 * s] = 0.3
    image[2 * s:4 * s, 2 * s:3 * s] = 0.9
    image[4 * s:6 * s, 4 * s:6 * s] = 0.6
    image[5 * s:5 * s + s // 2, 2 * s:2 * s + s // 2] = 1.0
    ramp = np.linspace(0.0, 0.1, size)
    image += ramp[None, :] * (image > 0)
    return image / image.max() * peak


PHANTOMS = {"shepp_logan": shepp_logan, "composite": wavelet_composite}


def get_phantom(name: str, size: int = 128) -> np.ndarray:
    try:
        return PHANTOMS[name](size)
    except KeyError:
        raise InputError(f"unknown phantom {name!r}; expected one of {sorted(PHANTOMS)}") from None
