"""Sampling schemes: i.i.d. block draws, radial baselines and coverage counts."""

from __future__ import annotations

import math
import os
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from blocksampler.blocks_dictionary import BlockDictionary
from blocksampler.densities import CenterMask
from blocksampler.errors import InputError
from blocksampler.imageio import write_pgm
from blocksampler.linop import check_probability
from blocksampler.rng import PortableRNG

MAX_DRAWS = 10**7
GOLDEN_ANGLE_DEG = 111.246
RADIAL_KINDS = ("equiangular", "golden", "uniform_random")
NO_SEED = -1
_BATCH = 4096


@dataclass(frozen=True, eq=False)
class SamplingScheme:
    """Sampled k-space locations.

    ``draws`` lists the drawn block indices in draw order (empty for radial
    schemes); ``sampled_pixels`` is the sorted set of distinct pixels,
    including the mask. ``nblocks`` counts draws or radial lines.
    """

    n1: int
    n2: int
    sampled_pixels: np.ndarray
    seed: int
    nblocks: int
    mask: CenterMask | None = None
    draws: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    kind: str = "blocks"

    @property
    def n(self) -> int:
        return self.n1 * self.n2

    @property
    def ratio(self) -> float:
        return self.sampled_pixels.size / self.n

    @property
    def drawn_blocks(self) -> Counter:
        """Multiset of drawn block indices."""
        return Counter(self.draws.tolist())

    def save(self, path: str | os.PathLike) -> None:
        """Header ``n1 n2 seed nblocks ratio``, then ``row col`` per sampled pixel."""
        with open(path, "w", encoding="ascii") as fh:
            fh.write(f"{self.n1} {self.n2} {self.seed} {self.nblocks} {self.ratio!r}\n")
            for idx in self.sampled_pixels.tolist():
                r, c = divmod(idx, self.n2)
                fh.write(f"{r} {c}\n")

    @classmethod
    def load(cls, path: str | os.PathLike, mask: CenterMask | None = None) -> SamplingScheme:
        with open(path, encoding="ascii") as fh:
            header = fh.readline().split()
            if len(header) != 5:
                raise InputError(f"{path}: header must be 'n1 n2 seed nblocks ratio'")
            try:
                n1, n2, seed, nblocks = (int(v) for v in header[:4])
                ratio = float(header[4])
            except ValueError as exc:
                raise InputError(f"{path}: malformed header") from exc
            rc = np.loadtxt(fh, dtype=np.int64, ndmin=2).reshape(-1, 2)
        if np.any((rc[:, 0] < 0) | (rc[:, 0] >= n1) | (rc[:, 1] < 0) | (rc[:, 1] >= n2)):
            raise InputError(f"{path}: pixel outside the {n1}x{n2} grid")
        pixels = np.unique(rc[:, 0] * n2 + rc[:, 1])
        if pixels.size != rc.shape[0]:
            raise InputError(f"{path}: repeated pixel")
        if abs(pixels.size / (n1 * n2) - ratio) > 1e-12:
            raise InputError(f"{path}: ratio {ratio} disagrees with {pixels.size} listed pixels")
        return cls(n1, n2, pixels, seed, nblocks, mask, kind="loaded")


def _mask_members(mask: CenterMask | None, n1: int, n2: int) -> np.ndarray:
    if mask is None:
        return np.zeros(0, dtype=np.int64)
    if (mask.n1, mask.n2) != (n1, n2):
        raise InputError(f"mask is {mask.n1}x{mask.n2}, grid is {n1}x{n2}")
    return mask.members


class _BlockSampler:
    """Inverse-CDF draws over a cumulative table of block weights."""

    def __init__(self, pi: np.ndarray, seed: int):
        self.cdf = np.cumsum(pi)
        self.total = self.cdf[-1]
        self.rng = PortableRNG(seed)

    def draw(self, size: int) -> np.ndarray:
        u = self.rng.uniform(size) * self.total
        idx = np.searchsorted(self.cdf, u, side="right")
        return np.minimum(idx, self.cdf.size - 1)


def draw_scheme(
    pi,
    dictionary: BlockDictionary,
    mask: CenterMask | None,
    target_ratio: float | None,
    seed: int,
    nblocks: int | None = None,
    max_draws: int = MAX_DRAWS,
) -> SamplingScheme:
    """Draw blocks i.i.d. from ``pi`` and take the union with the mask.

    By default draws stop as soon as the number of distinct pixels reaches
    ``ceil(target_ratio * n)``. With ``nblocks`` set exactly that many blocks
    are drawn and ``target_ratio`` is ignored.
    """
    pi = check_probability(pi, dictionary.m, "pi", atol=1e-9)
    n1, n2, n = dictionary.n1, dictionary.n2, dictionary.n
    members = _mask_members(mask, n1, n2)
    covered = np.zeros(n, dtype=bool)
    covered[members] = True
    count = int(members.size)
    sampler = _BlockSampler(pi, seed)

    if nblocks is not None:
        if nblocks < 0:
            raise InputError(f"nblocks must be >= 0, got {nblocks}")
        draws = sampler.draw(nblocks) if nblocks else np.zeros(0, dtype=np.int64)
        covered[dictionary.blocks[draws].ravel()] = True
        return SamplingScheme(n1, n2, np.flatnonzero(covered), seed, int(nblocks), mask, draws.astype(np.int64))

    if target_ratio is None or not members.size / n < target_ratio <= 1:
        raise InputError(
            f"target_ratio must lie in ({members.size / n:.6g}, 1] (above the mask fraction), got {target_ratio}"
        )
    target = math.ceil(target_ratio * n - 1e-9)
    reachable = covered.copy()
    reachable[dictionary.blocks[pi > 0].ravel()] = True
    if reachable.sum() < target:
        raise InputError(
            f"support of pi covers {int(reachable.sum())} pixels, fewer than the {target} needed; draws would never stop"
        )

    drawn: list[np.ndarray] = []
    total = 0
    while count < target:
        if total >= max_draws:
            raise InputError(f"target ratio not reached after {max_draws} draws")
        batch = sampler.draw(min(_BATCH, max_draws - total))
        used = 0
        for k in batch:
            used += 1
            pix = dictionary.blocks[k]
            fresh = pix[~covered[pix]]
            if fresh.size:
                covered[fresh] = True
                count += int(fresh.size)
                if count >= target:
                    break
        drawn.append(batch[:used])
        total += used
    draws = np.concatenate(drawn) if drawn else np.zeros(0, dtype=np.int64)
    return SamplingScheme(n1, n2, np.flatnonzero(covered), seed, int(draws.size), mask, draws.astype(np.int64))


def coverage_histogram(pi, dictionary: BlockDictionary, ndraws: int, seed: int) -> np.ndarray:
    """Number of times each pixel is hit over ``ndraws`` i.i.d. block draws."""
    if ndraws < 1:
        raise InputError(f"ndraws must be >= 1, got {ndraws}")
    pi = check_probability(pi, dictionary.m, "pi", atol=1e-9)
    sampler = _BlockSampler(pi, seed)
    block_counts = np.zeros(dictionary.m, dtype=np.int64)
    remaining = ndraws
    while remaining:
        size = min(remaining, 1 << 20)
        block_counts += np.bincount(sampler.draw(size), minlength=dictionary.m)
        remaining -= size
    return dictionary.incidence @ block_counts


def radial_angles(kind: str, nlines: int, seed: int = NO_SEED) -> np.ndarray:
    """Line angles in radians, in ``[0, pi)``.

    Random angles are drawn as a prefix of one seeded stream, so adding lines
    keeps the earlier ones.
    """
    if nlines < 1:
        raise InputError(f"nlines must be >= 1, got {nlines}")
    t = np.arange(nlines)
    if kind == "equiangular":
        return t * math.pi / nlines
    if kind == "golden":
        return np.deg2rad(np.mod(t * GOLDEN_ANGLE_DEG, 180.0))
    if kind == "uniform_random":
        if seed < 0:
            raise InputError("uniform_random radial schemes need a non-negative seed")
        return PortableRNG(seed).uniform(nlines) * math.pi
    raise InputError(f"unknown radial kind {kind!r}; expected one of {RADIAL_KINDS}")


def rasterize_radial(theta: float, n1: int, n2: int) -> np.ndarray:
    """Pixels ``(round(cy + r sin t), round(cx + r cos t))`` for integer ``r``, kept when in bounds.

    The centre is ``(n1 // 2, n2 // 2)`` and rounding is half up.
    """
    cy, cx = n1 // 2, n2 // 2
    reach = math.ceil(math.hypot(n1, n2))
    r = np.arange(-reach, reach + 1, dtype=float)
    rows = np.floor(cy + r * math.sin(theta) + 0.5).astype(np.int64)
    cols = np.floor(cx + r * math.cos(theta) + 0.5).astype(np.int64)
    keep = (rows >= 0) & (rows < n1) & (cols >= 0) & (cols < n2)
    return np.unique(rows[keep] * n2 + cols[keep])


def radial_scheme(
    kind: str,
    nlines: int,
    dims: tuple[int, int],
    mask: CenterMask | None = None,
    seed: int = NO_SEED,
) -> SamplingScheme:
    """Lines through the k-space centre, unioned with the mask."""
    n1, n2 = dims
    angles = radial_angles(kind, nlines, seed)
    covered = np.zeros(n1 * n2, dtype=bool)
    covered[_mask_members(mask, n1, n2)] = True
    for theta in angles:
        covered[rasterize_radial(float(theta), n1, n2)] = True
    used_seed = seed if kind == "uniform_random" else NO_SEED
    return SamplingScheme(n1, n2, np.flatnonzero(covered), used_seed, nlines, mask, kind=kind)


def radial_scheme_for_ratio(
    kind: str,
    target_ratio: float,
    dims: tuple[int, int],
    mask: CenterMask | None = None,
    seed: int = NO_SEED,
) -> SamplingScheme:
    """Fewest lines whose scheme reaches ``target_ratio``."""
    n1, n2 = dims
    if not 0 < target_ratio <= 1:
        raise InputError(f"target_ratio must lie in (0, 1], got {target_ratio}")
    target = math.ceil(target_ratio * n1 * n2 - 1e-9)
    for nlines in range(1, 8 * (n1 + n2) + 1):
        scheme = radial_scheme(kind, nlines, dims, mask, seed)
        if scheme.sampled_pixels.size >= target:
            return scheme
    raise InputError(f"{kind} lines cannot reach ratio {target_ratio} on a {n1}x{n2} grid")


def scheme_to_mask_image(scheme: SamplingScheme) -> np.ndarray:
    """``n1 x n2`` uint8 image with 1 at sampled pixels."""
    image = np.zeros(scheme.n, dtype=np.uint8)
    image[scheme.sampled_pixels] = 1
    return image.reshape(scheme.n1, scheme.n2)


def save_mask_pgm(path: str | os.PathLike, scheme: SamplingScheme) -> None:
    write_pgm(path, scheme_to_mask_image(scheme) * 255, maxval=255)
