import csv
import json

import numpy as np
import pytest

from blocksampler import InputError
from blocksampler.cli import load_pi, main
from blocksampler.config import config_from_dict, load_config
from blocksampler.densities import save_density
from blocksampler.dual_solver import ConvergenceTrace
from blocksampler.sampler import SamplingScheme

from conftest import center_dirac


def run(*argv):
    return main([str(a) for a in argv])


@pytest.fixture
def toy_files(tmp_path):
    save_density(tmp_path / "p.txt", center_dirac(3, 3), 3, 3)
    return tmp_path


def test_solve_toy_gap(toy_files, capsys):
    out = toy_files / "out"
    rc = run("solve", "--dict-kind", "rowcol", "--n", 3, "--density", toy_files / "p.txt", "--alpha", 1e-2,
             "--max-iters", 3000, "--output-dir", out)
    assert rc == 0
    trace = ConvergenceTrace.from_csv(out / "trace.csv")
    assert trace.gap[-1] <= 1e-6
    pi = load_pi(out / "pi.txt", 6)
    assert abs(pi[1] - pi[4]) < 1e-6
    assert (out / "pi.txt").read_text().splitlines()[0] == "6 1"
    prov = json.loads((out / "pi.txt.prov.json").read_text())
    assert set(prov) == {"command", "config_sha256", "seed", "format", "format_version", "package_version"}


def test_full_pipeline_is_deterministic(tmp_path):
    def pipeline(out):
        assert run("build-dict", "--n", 16, "--output-dir", out) == 0
        assert run("make-density", "--n", 16, "--kind", "radial", "--output-dir", out) == 0
        assert run("solve", "--dict", out / "dictionary.txt", "--density", out / "density.txt", "--max-iters", 300,
                   "--log-every", 50, "--output-dir", out) == 0
        assert run("sample", "--dict", out / "dictionary.txt", "--pi", out / "pi.txt", "--ratio", 0.3, "--seed", 4,
                   "--output-dir", out) == 0
        assert run("sample", "--n", 16, "--radial", "golden", "--ratio", 0.3, "--out", out / "golden.txt") == 0
        assert run("coverage", "--n", 16, "--pi", out / "pi.txt", "--ndraws", 500, "--output-dir", out) == 0
        assert run("reconstruct", "--scheme", out / "scheme.txt", "--size", 16, "--dr-iters", 30,
                   "--output-dir", out) == 0
        assert run("benchmark", "--n", 16, "--size", 16, "--pi", out / "pi.txt", "--ratios", "0.10,0.15",
                   "--seeds", 5, "--dr-iters", 10, "--output-dir", out) == 0

    a = tmp_path / "a"
    pipeline(a)
    first = {p.relative_to(a): p.read_bytes() for p in a.rglob("*") if p.is_file()}
    first_trace = [row[:-1] for row in csv.reader((a / "trace.csv").open())]
    pipeline(a)
    assert len(first) >= 20
    for rel, data in first.items():
        if rel.name == "trace.csv":
            assert [row[:-1] for row in csv.reader((a / rel).open())] == first_trace
        else:
            assert (a / rel).read_bytes() == data, rel

    rows = list(csv.DictReader((a / "benchmark.csv").open()))
    assert len(rows) == 2 * 4 * 5
    assert list(rows[0]) == ["scheme", "ratio", "seed", "psnr"]
    scheme = SamplingScheme.load(a / "scheme.txt")
    assert scheme.ratio >= 0.3
    assert (a / "scheme.pgm").read_bytes().startswith(b"P5\n16 16\n255\n")
    assert (a / "coverage.pgm").exists() and (a / "reconstruction.f32.json").exists()


def test_config_file(tmp_path):
    cfg = {
        "seed": 3,
        "output_dir": "runs",
        "dictionary": {"kind": "rowcol", "n": 4},
        "density": {"kind": "radial", "mask_fraction": 0.0},
        "solver": {"alpha": 0.05, "f_norm": "inf", "max_iters": 50},
        "sampling": {"pi_path": "pi.txt"},
    }
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg))
    loaded = load_config(path)
    assert loaded.output_dir == str(tmp_path / "runs")
    assert loaded.sampling.pi_path == str(tmp_path / "pi.txt")
    assert loaded.solver.alpha == 0.05 and loaded.seed == 3
    assert run("solve", "--config", path) == 0
    assert (tmp_path / "runs" / "pi.txt").exists()
    assert run("solve", "--config", path, "--max-iters", 10, "--out", tmp_path / "pi2.txt") == 0
    assert ConvergenceTrace.from_csv(tmp_path / "runs" / "trace.csv").iters[-1] == 9


@pytest.mark.parametrize("bad,field", [
    ({"solver": {"bogus": 1}}, "solver.bogus"),
    ({"extra": 1}, "extra"),
    ({"density": {"kind": "radial", "oops": 2}}, "density.oops"),
    ({"seed": -1}, "seed"),
    ({"solver": {"alpha": -1}}, "alpha"),
])
def test_config_rejections(bad, field):
    with pytest.raises(InputError, match=field):
        config_from_dict(bad)


def test_exit_codes(tmp_path, capsys):
    assert run("solve", "--n", 4, "--alpha", -1) == 1
    assert "alpha" in capsys.readouterr().err
    (tmp_path / "c.json").write_text('{"solver": {"bogus": 1}}')
    assert run("solve", "--config", tmp_path / "c.json") == 1
    assert "solver.bogus" in capsys.readouterr().err
    assert run("build-dict", "--n", 4, "--dict-kind", "lines", "--out", tmp_path / "d.txt") == 0
    assert run("solve", "--n", 4, "--f-norm", 1, "--output-dir", tmp_path) == 1
    assert run("sample", "--n", 4, "--pi", tmp_path / "missing.txt") == 1


def test_numerical_failure_exit_code(tmp_path, monkeypatch):
    from blocksampler import cli
    from blocksampler.errors import NumericalError

    def boom(*args, **kwargs):
        raise NumericalError("non-finite objective")

    monkeypatch.setattr(cli, "solve", boom)
    assert run("solve", "--n", 4, "--output-dir", tmp_path) == 2


def test_thread_cap(monkeypatch):
    from blocksampler.cli import _pool_size

    monkeypatch.setenv("BLOCKSAMPLER_THREADS", "2")
    assert _pool_size(8) == 2
    monkeypatch.delenv("BLOCKSAMPLER_THREADS")
    assert _pool_size(3) == 3


def test_benchmark_pool(tmp_path, monkeypatch):
    monkeypatch.setenv("BLOCKSAMPLER_THREADS", "2")
    rc = run("benchmark", "--size", 16, "--kinds", "golden,uniform_random", "--ratios", 0.2, "--seeds", 2,
             "--workers", 4, "--dr-iters", 5, "--output-dir", tmp_path)
    assert rc == 0
    rows = list(csv.DictReader((tmp_path / "benchmark.csv").open()))
    assert [r["scheme"] for r in rows] == ["golden", "golden", "uniform_random", "uniform_random"]


def test_pi_file_checks(tmp_path):
    save_density(tmp_path / "pi.txt", np.full(5, 0.2), 5, 1)
    with pytest.raises(InputError):
        load_pi(tmp_path / "pi.txt", 6)
