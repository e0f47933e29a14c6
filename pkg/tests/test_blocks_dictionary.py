from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from blocksampler import (
    BlockDictionary,
    InputError,
    UnsupportedError,
    build_line_dictionary,
    build_row_column_dictionary,
    rasterize_line,
    validate_dictionary,
)
from blocksampler.blocks_dictionary import dictionary_from_lists


def oracle_line(family, start, end, n):
    # exact rational interpolation, rounding half up
    pts = []
    for j in range(n):
        x = Fraction(start) + Fraction(j * (end - start), n - 1)
        minor = int((x + Fraction(1, 2)).__floor__())
        pts.append((minor, j) if family == "horizontal" else (j, minor))
    return [r * n + c for r, c in pts]


def test_rasterize_examples():
    assert rasterize_line("horizontal", 0, 2, 3, 3) == [0, 4, 8]
    assert rasterize_line("vertical", 1, 1, 3, 3) == [1, 4, 7]


def test_rasterize_half_up():
    # rows 0 -> 1 over 3 columns: column 1 lands exactly on 0.5
    assert rasterize_line("horizontal", 0, 1, 3, 3) == [0, 4, 5]


@pytest.mark.parametrize("bad", [(-1, 0), (0, 3)])
def test_rasterize_rejects_out_of_range(bad):
    with pytest.raises(InputError):
        rasterize_line("horizontal", bad[0], bad[1], 3, 3)


def test_rasterize_rejects_family():
    with pytest.raises(InputError):
        rasterize_line("diagonal", 0, 0, 3, 3)


@pytest.mark.parametrize("n", [2, 3, 5, 8, 13])
def test_line_dictionary_matches_oracle(n):
    d = build_line_dictionary(n, n)
    expected = [oracle_line("horizontal", s, e, n) for s in range(n) for e in range(n)]
    expected += [oracle_line("vertical", s, e, n) for s in range(n) for e in range(n)]
    assert d.blocks.tolist() == expected


def test_line_dictionary_sizes():
    d = build_line_dictionary(3, 3)
    assert (d.m, d.ell, d.n) == (18, 3, 9)
    big = build_line_dictionary(256, 256)
    assert (big.m, big.ell) == (131072, 256)


def test_line_dictionary_2x2_enumeration():
    d = build_line_dictionary(2, 2)
    assert d.blocks.tolist() == [
        [0, 1], [0, 3], [2, 1], [2, 3],   # rows: flat 0, crossed, crossed, flat 1
        [0, 2], [0, 3], [1, 2], [1, 3],   # columns
    ]


def test_line_dictionary_rejects_bad_grids():
    with pytest.raises(UnsupportedError):
        build_line_dictionary(4, 8)
    with pytest.raises(InputError):
        build_line_dictionary(1, 1)
    with pytest.raises(UnsupportedError):
        build_row_column_dictionary(3, 4)


def test_row_column_toy(toy):
    assert (toy.m, toy.ell) == (6, 3)
    # second row in 1-based numbering is {4, 5, 6}
    assert sorted(i + 1 for i in toy.blocks[1]) == [4, 5, 6]
    assert toy.blocks[4].tolist() == [1, 4, 7]
    assert build_row_column_dictionary(2, 2).m == 4


@pytest.mark.parametrize("n", [2, 3, 7, 16])
def test_incidence_consistency(n):
    d = build_line_dictionary(n, n)
    assert d.blocks.size == d.m * d.ell
    assert sum(len(b) for b in d.pixel_to_blocks) == d.m * d.ell
    for k in (0, d.m // 3, d.m - 1):
        for i in d.blocks[k]:
            assert k in d.pixel_to_blocks[i]


@settings(max_examples=60, deadline=None)
@given(n=st.integers(2, 20), data=st.data())
def test_transpose_symmetry(n, data):
    s = data.draw(st.integers(0, n - 1))
    e = data.draw(st.integers(0, n - 1))
    h = rasterize_line("horizontal", s, e, n, n)
    v = rasterize_line("vertical", s, e, n, n)
    transposed = sorted((i % n) * n + i // n for i in h)
    assert transposed == sorted(v)
    assert len(set(h)) == n


def test_validate_reports():
    assert validate_dictionary(build_line_dictionary(3, 3)).ok
    short = build_line_dictionary(3, 3).blocks.copy()
    short[5, 2] = short[5, 1]
    report = validate_dictionary(BlockDictionary(3, 3, short))
    assert not report.ok and "cardinality" in report.message and report.block == 5
    far = build_line_dictionary(3, 3).blocks.copy()
    far[2, 0] = 9
    report = validate_dictionary(BlockDictionary(3, 3, far))
    assert not report.ok and "range" in report.message
    with pytest.raises(InputError, match="cardinality"):
        dictionary_from_lists(3, 3, [[0, 1, 2], [3, 4]])


def test_save_load_round_trip(tmp_path, lines8):
    path = tmp_path / "d.txt"
    lines8.save(path)
    header = path.read_text().splitlines()[0]
    assert header == "8 8 8 128"
    loaded = BlockDictionary.load(path)
    assert np.array_equal(loaded.blocks, lines8.blocks)


def test_load_rejects_invalid(tmp_path):
    path = tmp_path / "bad.txt"
    path.write_text("2 2 2 2\n0 1\n0 4\n")
    with pytest.raises(InputError, match="range"):
        BlockDictionary.load(path)
    path.write_text("2 2 2 3\n0 1\n0 2\n")
    with pytest.raises(InputError):
        BlockDictionary.load(path)


def test_blocks_are_read_only(toy):
    with pytest.raises(ValueError):
        toy.blocks[0, 0] = 1
