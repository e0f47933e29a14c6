"""Dictionaries of measurement blocks over an ``n1 x n2`` pixel grid.

Pixels are linearised row-major and 0-based: pixel ``(r, c)`` has index
``r * n2 + c``. A block is a fixed-size set of pixel indices that is acquired
jointly; every block in a dictionary has the same cardinality ``ell``.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from functools import cached_property
from typing import Literal

import numpy as np
import scipy.sparse as sp

from blocksampler.errors import InputError, UnsupportedError

Family = Literal["horizontal", "vertical"]


@dataclass(frozen=True, eq=False)
class BlockDictionary:
    """Constant-cardinality block dictionary.

    Parameters
    ----------
    n1, n2 : int
        Grid shape (rows, columns).
    blocks : ndarray of shape (m, ell)
        Row ``k`` holds the ordered pixel indices of block ``k``.
    name : str
        Free-form label recorded in provenance files.
    """

    n1: int
    n2: int
    blocks: np.ndarray
    name: str = field(default="custom")

    def __post_init__(self):
        blocks = np.asarray(self.blocks)
        if blocks.ndim != 2:
            raise InputError("blocks must be a 2-D array of shape (m, ell)")
        blocks = np.ascontiguousarray(blocks, dtype=np.int64)
        blocks.setflags(write=False)
        object.__setattr__(self, "blocks", blocks)

    @property
    def n(self) -> int:
        return self.n1 * self.n2

    @property
    def m(self) -> int:
        return self.blocks.shape[0]

    @property
    def ell(self) -> int:
        return self.blocks.shape[1]

    @cached_property
    def incidence(self) -> sp.csr_matrix:
        """0/1 incidence matrix of shape (n, m); row ``i`` lists the blocks containing pixel ``i``."""
        m, ell = self.blocks.shape
        cols = np.repeat(np.arange(m, dtype=np.int64), ell)
        data = np.ones(m * ell)
        mat = sp.csr_matrix((data, (self.blocks.ravel(), cols)), shape=(self.n, m))
        mat.sum_duplicates()
        mat.sort_indices()
        return mat

    @cached_property
    def incidence_t(self) -> sp.csr_matrix:
        """Transpose of :attr:`incidence` in CSR form (block-major)."""
        return self.incidence.T.tocsr()

    @cached_property
    def pixel_to_blocks(self) -> list[np.ndarray]:
        """For each pixel, the sorted indices of the blocks that contain it."""
        inc = self.incidence
        return [inc.indices[inc.indptr[i]:inc.indptr[i + 1]] for i in range(self.n)]

    def block_pixels(self, k: int) -> list[tuple[int, int]]:
        """Block ``k`` as a list of ``(row, col)`` pairs."""
        return [divmod(int(i), self.n2) for i in self.blocks[k]]

    def save(self, path: str | os.PathLike) -> None:
        """Write the text format: header ``n1 n2 ell m`` then one line of indices per block."""
        with open(path, "w", encoding="ascii") as fh:
            fh.write(f"{self.n1} {self.n2} {self.ell} {self.m}\n")
            for row in self.blocks:
                fh.write(" ".join(map(str, row.tolist())))
                fh.write("\n")

    @classmethod
    def load(cls, path: str | os.PathLike, name: str | None = None) -> BlockDictionary:
        with open(path, encoding="ascii") as fh:
            header = fh.readline().split()
            if len(header) != 4:
                raise InputError(f"{path}: header must be 'n1 n2 ell m'")
            try:
                n1, n2, ell, m = (int(v) for v in header)
            except ValueError as exc:
                raise InputError(f"{path}: non-integer header") from exc
            try:
                data = np.loadtxt(fh, dtype=np.int64, ndmin=2)
            except ValueError as exc:
                raise InputError(f"{path}: malformed block line") from exc
        if data.shape != (m, ell):
            raise InputError(f"{path}: expected {m} blocks of {ell} indices, got shape {data.shape}")
        dictionary = cls(n1, n2, data, name=name or os.path.basename(str(path)))
        report = validate_dictionary(dictionary)
        if not report.ok:
            raise InputError(f"{path}: {report.message}")
        return dictionary


@dataclass(frozen=True)
class ValidationReport:
    ok: bool
    message: str = "ok"
    block: int | None = None


def _round_half_up_ratio(num: int, den: int) -> int:
    # floor(num/den + 1/2) in exact integer arithmetic, den > 0
    return (2 * num + den) // (2 * den)


def rasterize_line(family: Family, start_offset: int, end_offset: int, n1: int, n2: int) -> list[int]:
    """Discrete line joining two opposite edges, one pixel per major-axis step.

    A horizontal line goes from pixel ``(start, 0)`` to ``(end, n2 - 1)`` and
    takes the row ``round(start + j * (end - start) / (n2 - 1))`` in column
    ``j`` (rounding half up). Vertical lines are the transposed construction.
    """
    if family == "horizontal":
        minor_size, major_size = n1, n2
    elif family == "vertical":
        minor_size, major_size = n2, n1
    else:
        raise InputError(f"unknown line family {family!r}")
    for label, value in (("start_offset", start_offset), ("end_offset", end_offset)):
        if not 0 <= value < minor_size:
            raise InputError(f"{label}={value} outside [0, {minor_size})")

    steps = major_size - 1
    pixels = []
    for j in range(major_size):
        if steps == 0:
            minor = start_offset
        else:
            minor = _round_half_up_ratio(start_offset * steps + j * (end_offset - start_offset), steps)
        if family == "horizontal":
            pixels.append(minor * n2 + j)
        else:
            pixels.append(j * n2 + minor)
    return pixels


def _check_square(n1: int, n2: int) -> None:
    if n1 < 2 or n2 < 2:
        raise InputError(f"grid must be at least 2x2, got {n1}x{n2}")
    if n1 != n2:
        raise UnsupportedError(
            f"{n1}x{n2}: rectangular grids give blocks of unequal length, which makes the mapping nonlinear"
        )


def build_line_dictionary(n1: int, n2: int) -> BlockDictionary:
    """All lines joining a pixel of one edge to a pixel of the opposite edge.

    Blocks are ordered horizontal family first (start-major, then end), then
    the vertical family. Lines that happen to rasterise identically are kept as
    separate entries, so ``m = n1**2 + n2**2`` always.
    """
    _check_square(n1, n2)
    # vectorised form of rasterize_line over every (start, end) pair
    steps = n2 - 1
    start, end = np.meshgrid(np.arange(n1), np.arange(n1), indexing="ij")
    start = start.reshape(-1, 1)
    end = end.reshape(-1, 1)
    j = np.arange(n2).reshape(1, -1)
    minor = (2 * (start * steps + j * (end - start)) + steps) // (2 * steps)
    horizontal = minor * n2 + j
    vertical = j * n2 + minor
    blocks = np.vstack([horizontal, vertical])
    return BlockDictionary(n1, n2, blocks, name=f"lines{n1}x{n2}")


def build_row_column_dictionary(n1: int, n2: int) -> BlockDictionary:
    """Flat rows then flat columns; ``m = n1 + n2``."""
    _check_square(n1, n2)
    rows = np.arange(n1 * n2).reshape(n1, n2)
    blocks = np.vstack([rows, rows.T])
    return BlockDictionary(n1, n2, blocks, name=f"rowcol{n1}x{n2}")


def validate_dictionary(dictionary: BlockDictionary) -> ValidationReport:
    """Check the dictionary invariants and report the first violation found."""
    blocks = dictionary.blocks
    n = dictionary.n
    if dictionary.n1 < 1 or dictionary.n2 < 1:
        return ValidationReport(False, "grid dimensions must be positive")
    if blocks.shape[0] == 0 or blocks.shape[1] == 0:
        return ValidationReport(False, "dictionary is empty")
    bad = np.nonzero((blocks < 0) | (blocks >= n))
    if bad[0].size:
        k = int(bad[0][0])
        return ValidationReport(
            False, f"range violation: block {k} holds pixel {int(blocks[bad][0])} outside [0, {n})", k
        )
    ordered = np.sort(blocks, axis=1)
    dup = np.nonzero((ordered[:, 1:] == ordered[:, :-1]).any(axis=1))[0]
    if dup.size:
        k = int(dup[0])
        distinct = np.unique(blocks[k]).size
        return ValidationReport(
            False,
            f"constant-cardinality violation: block {k} has {distinct} distinct pixels, expected {dictionary.ell}",
            k,
        )
    inc = dictionary.incidence
    if inc.nnz != blocks.size or not np.all(inc.data == 1):
        return ValidationReport(False, "incidence lists are not the transpose of the block lists")
    return ValidationReport(True)


def dictionary_from_lists(n1: int, n2: int, blocks: list[list[int]], name: str = "custom") -> BlockDictionary:
    """Build a dictionary from Python lists, rejecting ragged input with a cardinality message."""
    lengths = {len(b) for b in blocks}
    if len(lengths) != 1:
        raise InputError(f"constant-cardinality violation: block lengths {sorted(lengths)}")
    return BlockDictionary(n1, n2, np.array(blocks, dtype=np.int64), name=name)
