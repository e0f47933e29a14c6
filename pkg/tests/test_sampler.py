import math

import numpy as np
import pytest
from scipy import stats

from blocksampler import InputError, build_line_dictionary
from blocksampler.densities import build_center_mask
from blocksampler.linop import apply
from blocksampler.rng import PortableRNG
from blocksampler.sampler import (
    SamplingScheme,
    coverage_histogram,
    draw_scheme,
    radial_angles,
    radial_scheme,
    radial_scheme_for_ratio,
    rasterize_radial,
    scheme_to_mask_image,
)

from conftest import random_simplex


def dirac(m, j):
    pi = np.zeros(m)
    pi[j] = 1.0
    return pi


def test_rng_is_reproducible_and_documented():
    a, b = PortableRNG(7), PortableRNG(7)
    assert np.array_equal(a.uniform(100), b.uniform(100))
    raw = PortableRNG(7).raw(3)
    # top 53 bits of numpy's PCG64 outputs for seed 7
    expected = np.random.PCG64(7).random_raw(3).astype(np.uint64)
    assert np.array_equal(raw, expected)
    u = PortableRNG(7).uniform(3)
    assert np.array_equal(u, (expected >> np.uint64(11)).astype(float) / 2.0**53)
    assert np.all((u >= 0) & (u < 1))
    with pytest.raises(InputError):
        PortableRNG(-1)


def test_dirac_single_draw(lines8):
    s = draw_scheme(dirac(lines8.m, 17), lines8, None, 8 / 64, seed=0)
    assert s.nblocks == 1 and s.drawn_blocks == {17: 1}
    assert s.sampled_pixels.tolist() == sorted(lines8.blocks[17].tolist())


def test_dirac_cannot_reach_target(lines8):
    with pytest.raises(InputError):
        draw_scheme(dirac(lines8.m, 17), lines8, None, 9 / 64, seed=0)


def test_max_draw_guard(lines8):
    pi = np.full(lines8.m, 1 / lines8.m)
    with pytest.raises(InputError, match="draws"):
        draw_scheme(pi, lines8, None, 1.0, seed=0, max_draws=3)


def test_determinism_and_seed_dependence(lines8, rng):
    pi = random_simplex(rng, lines8.m)
    mask = build_center_mask(8, 8, 0.1)
    a = draw_scheme(pi, lines8, mask, 0.5, seed=11)
    b = draw_scheme(pi, lines8, mask, 0.5, seed=11)
    c = draw_scheme(pi, lines8, mask, 0.5, seed=12)
    assert np.array_equal(a.draws, b.draws) and np.array_equal(a.sampled_pixels, b.sampled_pixels)
    assert not np.array_equal(a.draws, c.draws)


def test_first_hitting_rule(lines8, rng):
    pi = random_simplex(rng, lines8.m)
    mask = build_center_mask(8, 8, 0.1)
    s = draw_scheme(pi, lines8, mask, 0.4, seed=3)
    target = math.ceil(0.4 * 64)
    assert set(mask.members.tolist()) <= set(s.sampled_pixels.tolist())
    covered = set(mask.members.tolist())
    sizes = [len(covered)]
    for k in s.draws:
        before = len(covered)
        covered |= set(lines8.blocks[k].tolist())
        sizes.append(len(covered))
        assert len(covered) >= before
    assert covered == set(s.sampled_pixels.tolist())
    assert sizes[-1] >= target > sizes[-2]
    assert s.ratio == len(covered) / 64


def test_target_must_exceed_mask(lines8):
    pi = np.full(lines8.m, 1 / lines8.m)
    mask = build_center_mask(8, 8, 0.1)
    with pytest.raises(InputError):
        draw_scheme(pi, lines8, mask, mask.fraction, seed=0)
    with pytest.raises(InputError):
        draw_scheme(pi * 2, lines8, mask, 0.5, seed=0)
    with pytest.raises(InputError):
        draw_scheme(pi, lines8, mask, 1.5, seed=0)


def test_nblocks_mode(lines8):
    pi = np.full(lines8.m, 1 / lines8.m)
    s = draw_scheme(pi, lines8, None, None, seed=5, nblocks=37)
    assert s.nblocks == 37 == sum(s.drawn_blocks.values())
    empty = draw_scheme(pi, lines8, build_center_mask(8, 8, 0.1), None, seed=5, nblocks=0)
    assert np.array_equal(empty.sampled_pixels, np.sort(build_center_mask(8, 8, 0.1).members))


def test_block_frequencies_converge():
    d = build_line_dictionary(4, 4)  # m = 32
    pi = np.random.default_rng(1).dirichlet(np.ones(d.m))
    s = draw_scheme(pi, d, None, None, seed=9, nblocks=10**5)
    freq = np.bincount(s.draws, minlength=d.m) / 10**5
    assert np.max(np.abs(freq - pi)) <= 5 * math.sqrt(pi.max() / 10**5)
    chi = stats.chisquare(np.bincount(s.draws, minlength=d.m), pi * 10**5)
    assert chi.pvalue > 1e-3


def test_zero_weight_blocks_never_drawn():
    d = build_line_dictionary(4, 4)
    pi = np.zeros(d.m)
    pi[[0, 5, 31]] = [0.2, 0.5, 0.3]
    s = draw_scheme(pi, d, None, None, seed=2, nblocks=5000)
    assert set(s.drawn_blocks) <= {0, 5, 31}


def test_coverage_counts(toy):
    counts = coverage_histogram(np.full(6, 1 / 6), toy, 10**5, seed=4)
    assert counts.sum() == 10**5 * 3
    expected = 10**5 * 3 * apply(toy, np.full(6, 1 / 6))
    assert stats.chisquare(counts, expected).pvalue > 1e-3
    with pytest.raises(InputError):
        coverage_histogram(np.full(6, 1 / 6), toy, 0, seed=4)


def test_coverage_matches_expectation_statistically(lines8, rng):
    pi = random_simplex(rng, lines8.m)
    n = 10**5
    counts = coverage_histogram(pi, lines8, n, seed=8)
    expected = n * lines8.ell * apply(lines8, pi)
    # binomial per pixel: |z| stays small across 64 pixels
    z = (counts - expected) / np.sqrt(expected * (1 - expected / n))
    assert np.max(np.abs(z)) < 5


def test_radial_angles():
    assert np.allclose(np.rad2deg(radial_angles("golden", 2)), [0.0, 111.246])
    assert np.allclose(np.rad2deg(radial_angles("equiangular", 4)), [0, 45, 90, 135])
    r = radial_angles("uniform_random", 50, seed=3)
    assert np.all((r >= 0) & (r < math.pi))
    assert np.array_equal(r[:10], radial_angles("uniform_random", 10, seed=3))
    with pytest.raises(InputError):
        radial_angles("golden", 0)
    with pytest.raises(InputError):
        radial_angles("spiral", 3)


def oracle_radial(theta, n):
    c = n // 2
    out = set()
    for r in range(-3 * n, 3 * n + 1):
        row = math.floor(c + r * math.sin(theta) + 0.5)
        col = math.floor(c + r * math.cos(theta) + 0.5)
        if 0 <= row < n and 0 <= col < n:
            out.add(row * n + col)
    return sorted(out)


@pytest.mark.parametrize("theta", [0.0, 0.3, math.pi / 4, 1.9, math.pi / 2, 2.9])
def test_rasterize_radial_oracle(theta):
    assert rasterize_radial(theta, 16, 16).tolist() == oracle_radial(theta, 16)


def test_radial_axes():
    assert rasterize_radial(0.0, 8, 8).tolist() == list(range(32, 40))
    assert rasterize_radial(math.pi / 2, 8, 8).tolist() == list(range(4, 64, 8))


@pytest.mark.parametrize("kind", ["equiangular", "golden", "uniform_random"])
def test_radial_scheme_contains_centre_and_mask(kind):
    mask = build_center_mask(32, 32, 0.03)
    s = radial_scheme(kind, 5, (32, 32), mask, seed=1)
    assert 16 * 32 + 16 in set(s.sampled_pixels.tolist())
    assert set(mask.members.tolist()) <= set(s.sampled_pixels.tolist())
    assert s.nblocks == 5 and (s.seed == 1) == (kind == "uniform_random")


def test_radial_for_ratio_is_minimal():
    mask = build_center_mask(32, 32, 0.03)
    s = radial_scheme_for_ratio("golden", 0.2, (32, 32), mask)
    assert s.ratio >= 0.2
    fewer = radial_scheme("golden", s.nblocks - 1, (32, 32), mask)
    assert fewer.ratio < 0.2


def test_mask_image_and_file_round_trip(tmp_path, lines8):
    mask = build_center_mask(64, 64, 0.03)
    d64 = build_line_dictionary(64, 64)
    empty = draw_scheme(np.full(d64.m, 1 / d64.m), d64, mask, None, seed=0, nblocks=0)
    img = scheme_to_mask_image(empty)
    assert img.sum() == mask.members.size and np.all(img.ravel()[mask.members] == 1)
    s = draw_scheme(np.full(lines8.m, 1 / lines8.m), lines8, build_center_mask(8, 8, 0.1), 0.5, seed=4)
    assert scheme_to_mask_image(s).mean() == s.ratio
    path = tmp_path / "s.txt"
    s.save(path)
    back = SamplingScheme.load(path)
    assert np.array_equal(back.sampled_pixels, s.sampled_pixels)
    assert (back.n1, back.n2, back.seed, back.nblocks, back.ratio) == (8, 8, 4, s.nblocks, s.ratio)
    header = path.read_text().splitlines()[0].split()
    assert header[:4] == ["8", "8", "4", str(s.nblocks)]
