"""Target pixel densities on the centred k-space grid and the centre mask.

Frequencies are integer offsets ``k in [-n/2, n/2)`` from the zero
frequency, which sits at pixel ``(n1 // 2, n2 // 2)``.
"""

from __future__ import annotations

import math
import os
import warnings
from dataclasses import dataclass

import numpy as np

from blocksampler.errors import InputError
from blocksampler.transforms import frequency_offsets, haar_dwt1, is_power_of_two

RENORMALIZE_TOL = 1e-6
REJECT_TOL = 1e-2


@dataclass(frozen=True, eq=False)
class CenterMask:
    """Centred square of fully acquired low frequencies."""

    n1: int
    n2: int
    side: int

    @property
    def n(self) -> int:
        return self.n1 * self.n2

    @property
    def rows(self) -> range:
        lo = self.n1 // 2 - self.side // 2
        return range(lo, lo + self.side)

    @property
    def cols(self) -> range:
        lo = self.n2 // 2 - self.side // 2
        return range(lo, lo + self.side)

    @property
    def members(self) -> np.ndarray:
        if self.side == 0:
            return np.zeros(0, dtype=np.int64)
        r = np.asarray(self.rows)[:, None]
        c = np.asarray(self.cols)[None, :]
        return (r * self.n2 + c).ravel().astype(np.int64)

    @property
    def fraction(self) -> float:
        return self.side * self.side / self.n

    def as_bool(self) -> np.ndarray:
        out = np.zeros(self.n, dtype=bool)
        out[self.members] = True
        return out


def build_center_mask(n1: int, n2: int, fraction: float) -> CenterMask:
    """Centred square of side ``round(sqrt(fraction * n))`` around the zero frequency."""
    if not 0 <= fraction < 1:
        raise InputError(f"mask fraction must be in [0, 1), got {fraction}")
    if n1 < 1 or n2 < 1:
        raise InputError(f"invalid grid {n1}x{n2}")
    side = math.floor(math.sqrt(fraction * n1 * n2) + 0.5)
    side = min(side, n1, n2)
    return CenterMask(n1, n2, side)


@dataclass(frozen=True, eq=False)
class TargetDensity:
    """Pixel density, zero on ``mask``; ``kind`` is one of ``opt``, ``radial``, ``custom``."""

    values: np.ndarray
    n1: int
    n2: int
    kind: str
    mask: CenterMask | None = None

    def image(self) -> np.ndarray:
        return self.values.reshape(self.n1, self.n2)

    def save(self, path: str | os.PathLike) -> None:
        save_density(path, self.values, self.n1, self.n2)


def _finish(weights: np.ndarray, n1: int, n2: int, mask: CenterMask, kind: str) -> TargetDensity:
    weights = weights.ravel().astype(float)
    weights[mask.members] = 0.0
    total = weights.sum()
    if not total > 0:
        raise InputError("mask covers the whole grid; no density left to normalise")
    values = weights / total
    values[mask.members] = 0.0
    values.setflags(write=False)
    return TargetDensity(values, n1, n2, kind, mask)


def _check_mask(n1: int, n2: int, mask: CenterMask | None) -> CenterMask:
    if mask is None:
        return CenterMask(n1, n2, 0)
    if (mask.n1, mask.n2) != (n1, n2):
        raise InputError(f"mask is {mask.n1}x{mask.n2}, grid is {n1}x{n2}")
    return mask


def radial_weights(n1: int, n2: int, exponent: float = 2.0) -> np.ndarray:
    """Unnormalised ``1 / (kx^2 + ky^2) ** (exponent / 2)``; the centre takes its largest neighbour weight."""
    ky = frequency_offsets(n1).astype(float)[:, None]
    kx = frequency_offsets(n2).astype(float)[None, :]
    r2 = ky**2 + kx**2
    with np.errstate(divide="ignore"):
        w = r2 ** (-exponent / 2.0)
    c1, c2 = n1 // 2, n2 // 2
    neighbours = [w[c1 + dr, c2 + dc] for dr, dc in ((-1, 0), (1, 0), (0, -1), (0, 1))
                  if 0 <= c1 + dr < n1 and 0 <= c2 + dc < n2]
    w[c1, c2] = max(neighbours) if neighbours else 1.0
    return w


def target_radial(n1: int, n2: int, mask: CenterMask | None = None, exponent: float = 2.0) -> TargetDensity:
    """Polynomially decaying radial density, zero on the mask."""
    mask = _check_mask(n1, n2, mask)
    return _finish(radial_weights(n1, n2, exponent), n1, n2, mask, "radial")


def default_wavelet_depth(n1: int) -> int:
    return max(int(math.log2(n1)) - 3, 0)


def _band_moduli(size: int, depth: int) -> tuple[list[np.ndarray], list[np.ndarray]]:
    # Haar coefficients of every 1-D unitary Fourier atom, summarised per band.
    # Within a band all coefficients of a plane wave share one modulus.
    k = frequency_offsets(size)[:, None]
    t = np.arange(size)[None, :]
    atoms = np.exp(-2j * np.pi * k * t / size) / math.sqrt(size)
    approx = [np.abs(atoms).max(axis=1)]
    detail = [np.zeros(size)]
    for level in range(1, depth + 1):
        coeffs = np.abs(haar_dwt1(atoms, level, axis=1))
        width = size >> level
        approx.append(coeffs[:, :width].max(axis=1))
        detail.append(coeffs[:, width:2 * width].max(axis=1))
    return approx, detail


def sensing_row_sup_norms(n1: int, n2: int, wavelet_depth: int) -> np.ndarray:
    """``||a_i||_inf`` for every row of Fourier-after-inverse-Haar, as an ``n1 x n2`` array.

    The 2-D Haar transform is separable level by level, so the coefficients of
    a 2-D Fourier atom in each sub-band are products of 1-D band coefficients.
    """
    approx1, detail1 = _band_moduli(n1, wavelet_depth)
    approx2, detail2 = _band_moduli(n2, wavelet_depth)
    depth = wavelet_depth
    best = np.outer(approx1[depth], approx2[depth])
    for level in range(1, depth + 1):
        a1, d1 = approx1[level], detail1[level]
        a2, d2 = approx2[level], detail2[level]
        best = np.maximum(best, np.outer(a1, d2))
        best = np.maximum(best, np.outer(d1, a2))
        best = np.maximum(best, np.outer(d1, d2))
    return best


def target_opt(n1: int, n2: int, wavelet_depth: int | None = None, mask: CenterMask | None = None) -> TargetDensity:
    """Density proportional to the squared sup-norm of each sensing row."""
    if not (is_power_of_two(n1) and is_power_of_two(n2)):
        raise InputError(f"grid {n1}x{n2} must have power-of-two sides")
    if wavelet_depth is None:
        wavelet_depth = default_wavelet_depth(min(n1, n2))
    if wavelet_depth < 0 or (1 << wavelet_depth) > min(n1, n2):
        raise InputError(f"wavelet depth {wavelet_depth} too large for {n1}x{n2}")
    mask = _check_mask(n1, n2, mask)
    return _finish(sensing_row_sup_norms(n1, n2, wavelet_depth) ** 2, n1, n2, mask, "opt")


def save_density(path: str | os.PathLike, values, n1: int, n2: int) -> None:
    """Header ``n1 n2`` then one ``index value`` row per entry."""
    values = np.asarray(values, dtype=float).ravel()
    if values.size != n1 * n2:
        raise InputError(f"{values.size} values for a {n1}x{n2} grid")
    with open(path, "w", encoding="ascii") as fh:
        fh.write(f"{n1} {n2}\n")
        for i, v in enumerate(values.tolist()):
            fh.write(f"{i} {v!r}\n")


def read_density_file(path: str | os.PathLike) -> tuple[np.ndarray, int, int]:
    """Parse a density file without validating the simplex constraints."""
    with open(path, encoding="ascii") as fh:
        header = fh.readline().split()
        if len(header) != 2:
            raise InputError(f"{path}: header must be 'n1 n2'")
        try:
            n1, n2 = int(header[0]), int(header[1])
        except ValueError as exc:
            raise InputError(f"{path}: non-integer header") from exc
        if n1 < 1 or n2 < 1:
            raise InputError(f"{path}: invalid dimensions {n1}x{n2}")
        values = np.full(n1 * n2, np.nan)
        count = 0
        for lineno, line in enumerate(fh, start=2):
            parts = line.split()
            if not parts:
                continue
            if len(parts) != 2:
                raise InputError(f"{path}:{lineno}: expected 'index value'")
            try:
                idx, val = int(parts[0]), float(parts[1])
            except ValueError as exc:
                raise InputError(f"{path}:{lineno}: cannot parse {line.strip()!r}") from exc
            if not 0 <= idx < values.size or not np.isnan(values[idx]):
                raise InputError(f"{path}:{lineno}: index {idx} out of range or repeated")
            values[idx] = val
            count += 1
    if count != values.size:
        raise InputError(f"{path}: expected {values.size} entries, found {count}")
    return values, n1, n2


def validate_distribution(values: np.ndarray, source: str = "density") -> np.ndarray:
    """Apply the file tolerance rules: reject negatives or sums off by more
    than 1e-2, renormalise (with a warning) sums off by more than 1e-6."""
    if not np.all(np.isfinite(values)):
        raise InputError(f"{source}: non-finite entry")
    if np.any(values < 0):
        raise InputError(f"{source}: negative entry at index {int(np.argmax(values < 0))}")
    total = float(values.sum())
    deviation = abs(total - 1.0)
    if deviation > REJECT_TOL:
        raise InputError(f"{source}: entries sum to {total!r}")
    # the slack keeps a sum written as 1 +/- 1e-6 on the renormalising side
    if deviation > RENORMALIZE_TOL * (1 - 1e-9):
        warnings.warn(f"{source}: entries sum to {total!r}; renormalising", RuntimeWarning, stacklevel=3)
        values = values / total
    return values


def load_custom_density(path: str | os.PathLike, mask: CenterMask | None = None, kind: str = "custom") -> TargetDensity:
    """Read and validate a density file.

    If ``mask`` is given, every mask pixel must carry exactly zero weight.
    """
    values, n1, n2 = read_density_file(path)
    values = validate_distribution(values, str(path))
    if mask is not None:
        mask = _check_mask(n1, n2, mask)
        if np.any(values[mask.members] != 0):
            raise InputError(f"{path}: nonzero weight inside the centre mask")
    values.setflags(write=False)
    return TargetDensity(values, n1, n2, kind, mask)
