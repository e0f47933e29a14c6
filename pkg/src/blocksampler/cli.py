"""Command-line pipeline: dictionary, density, solve, sample, coverage, reconstruction, benchmark.

Parameters come from an optional ``--config`` JSON file and are overridden by
per-command flags. Every output file gets a ``<file>.prov.json`` sidecar with
the config hash, the seed and the file-format versions. Exit codes: 0 on
success, 1 on invalid input, 2 on numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from blocksampler import __version__
from blocksampler.blocks_dictionary import BlockDictionary, build_line_dictionary, build_row_column_dictionary
from blocksampler.config import RunConfig, config_from_dict, load_config
from blocksampler.densities import (
    build_center_mask,
    default_wavelet_depth,
    load_custom_density,
    read_density_file,
    save_density,
    target_opt,
    target_radial,
    validate_distribution,
)
from blocksampler.dual_solver import solve
from blocksampler.errors import InputError, NumericalError
from blocksampler.imageio import read_image, scale_to_pgm, write_f32, write_pgm
from blocksampler.linop import check_probability
from blocksampler.phantoms import PHANTOMS, get_phantom
from blocksampler.recon import ReconProblem, douglas_rachford_l1, psnr
from blocksampler.sampler import (
    RADIAL_KINDS,
    SamplingScheme,
    coverage_histogram,
    draw_scheme,
    radial_scheme,
    radial_scheme_for_ratio,
    save_mask_pgm,
)

logger = logging.getLogger("blocksampler")

FORMAT_VERSIONS = {
    "dictionary": 1,
    "density": 1,
    "pi": 1,
    "trace": 1,
    "scheme": 1,
    "pgm": 1,
    "f32": 1,
    "csv": 1,
}
SCHEME_KINDS = ("pi",) + RADIAL_KINDS
THREADS_ENV = "BLOCKSAMPLER_THREADS"


# -- helpers -----------------------------------------------------------------

def _write_provenance(path: Path, command: str, config: RunConfig, fmt: str) -> None:
    record = {
        "command": command,
        "config_sha256": config.digest(),
        "seed": config.seed,
        "format": fmt,
        "format_version": FORMAT_VERSIONS[fmt],
        "package_version": __version__,
    }
    Path(f"{path}.prov.json").write_text(json.dumps(record, sort_keys=True, indent=2) + "\n", encoding="utf-8")


def _output(config: RunConfig, explicit: str | None, default_name: str) -> Path:
    path = Path(explicit) if explicit else Path(config.output_dir) / default_name
    path.parent.mkdir(parents=True, exist_ok=True)
    return path


def _replace(section, **overrides):
    changes = {k: v for k, v in overrides.items() if v is not None}
    if not changes:
        return section
    try:
        return dataclasses.replace(section, **changes)
    except (TypeError, ValueError) as exc:
        raise InputError(str(exc)) from exc


def _dictionary(config: RunConfig) -> BlockDictionary:
    sec = config.dictionary
    if sec.path:
        return BlockDictionary.load(sec.path)
    if sec.kind == "lines":
        return build_line_dictionary(sec.n, sec.n)
    if sec.kind == "rowcol":
        return build_row_column_dictionary(sec.n, sec.n)
    raise InputError(f"dictionary.kind must be 'lines' or 'rowcol', got {sec.kind!r}")


def _mask(config: RunConfig, n1: int, n2: int):
    return build_center_mask(n1, n2, config.density.mask_fraction)


def _density(config: RunConfig, n1: int, n2: int):
    sec = config.density
    if sec.path:
        density = load_custom_density(sec.path)
        if (density.n1, density.n2) != (n1, n2):
            raise InputError(f"density.path is {density.n1}x{density.n2}, dictionary is {n1}x{n2}")
        return density
    mask = _mask(config, n1, n2)
    if sec.kind == "radial":
        return target_radial(n1, n2, mask, sec.exponent)
    if sec.kind == "opt":
        return target_opt(n1, n2, sec.wavelet_depth, mask)
    raise InputError(f"density.kind must be 'radial' or 'opt', got {sec.kind!r}")


def save_pi(path: Path, pi: np.ndarray) -> None:
    """Block weights in the density file layout with header ``m 1``."""
    save_density(path, pi, pi.size, 1)


def load_pi(path: str | os.PathLike, m: int) -> np.ndarray:
    values, rows, cols = read_density_file(path)
    if rows * cols != m:
        raise InputError(f"{path}: {rows * cols} block weights for a dictionary of {m} blocks")
    return check_probability(validate_distribution(values, str(path)), m, "pi", atol=1e-9)


def _reference_image(config: RunConfig) -> np.ndarray:
    sec = config.reconstruction
    if sec.image in PHANTOMS:
        return get_phantom(sec.image, sec.size)
    return read_image(sec.image)


def _wavelet_depth(config: RunConfig, n1: int) -> int:
    depth = config.reconstruction.wavelet_depth
    return default_wavelet_depth(n1) if depth is None else depth


# -- commands ----------------------------------------------------------------

def cmd_build_dict(args, config: RunConfig) -> int:
    dictionary = _dictionary(config)
    out = _output(config, args.out, "dictionary.txt")
    dictionary.save(out)
    _write_provenance(out, "build-dict", config, "dictionary")
    print(f"wrote {out}: {dictionary.m} blocks of {dictionary.ell} pixels on {dictionary.n1}x{dictionary.n2}")
    return 0


def cmd_make_density(args, config: RunConfig) -> int:
    n = config.dictionary.n
    density = _density(config, n, n)
    out = _output(config, args.out, "density.txt")
    density.save(out)
    _write_provenance(out, "make-density", config, "density")
    print(f"wrote {out}: {density.kind} density on {n}x{n}")
    return 0


def cmd_solve(args, config: RunConfig) -> int:
    dictionary = _dictionary(config)
    density = _density(config, dictionary.n1, dictionary.n2)
    result = solve(dictionary, density.values, config.solver)
    pi_out = _output(config, args.out, "pi.txt")
    trace_out = _output(config, args.trace, "trace.csv")
    save_pi(pi_out, result.pi)
    result.trace.to_csv(trace_out)
    _write_provenance(pi_out, "solve", config, "pi")
    _write_provenance(trace_out, "solve", config, "trace")
    print(f"status={result.trace.status} final_gap={result.trace.final_gap!r} iterations={result.trace.iters[-1] + 1}")
    return 0


def _scheme(config: RunConfig, kind: str, ratio: float | None, seed: int, n: int, dictionary=None, pi=None) -> SamplingScheme:
    sec = config.sampling
    if kind == "pi":
        return draw_scheme(pi, dictionary, _mask(config, dictionary.n1, dictionary.n2), ratio, seed, sec.nblocks)
    mask = _mask(config, n, n)
    if sec.nlines is not None:
        return radial_scheme(kind, sec.nlines, (n, n), mask, seed)
    return radial_scheme_for_ratio(kind, ratio, (n, n), mask, seed)


def _pi_inputs(config: RunConfig):
    dictionary = _dictionary(config)
    if not config.sampling.pi_path:
        raise InputError("sampling.pi_path is required (use --pi)")
    return dictionary, load_pi(config.sampling.pi_path, dictionary.m)


def cmd_sample(args, config: RunConfig) -> int:
    kind = config.sampling.radial_kind or "pi"
    if kind == "pi":
        dictionary, pi = _pi_inputs(config)
        scheme = _scheme(config, "pi", config.sampling.target_ratio, config.seed, dictionary.n1, dictionary, pi)
    else:
        scheme = _scheme(config, kind, config.sampling.target_ratio, config.seed, config.dictionary.n)
    out = _output(config, args.out, "scheme.txt")
    scheme.save(out)
    pgm = out.with_suffix(".pgm")
    save_mask_pgm(pgm, scheme)
    _write_provenance(out, "sample", config, "scheme")
    _write_provenance(pgm, "sample", config, "pgm")
    print(f"wrote {out}: {scheme.sampled_pixels.size} pixels, ratio={scheme.ratio!r}, nblocks={scheme.nblocks}")
    return 0


def cmd_coverage(args, config: RunConfig) -> int:
    dictionary, pi = _pi_inputs(config)
    counts = coverage_histogram(pi, dictionary, config.sampling.ndraws, config.seed)
    image = counts.reshape(dictionary.n1, dictionary.n2)
    out = _output(config, args.out, "coverage.csv")
    with open(out, "w", newline="", encoding="ascii") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["row", "col", "count"])
        for (r, c), v in np.ndenumerate(image):
            writer.writerow([r, c, int(v)])
    pgm = out.with_suffix(".pgm")
    peak = int(counts.max())
    write_pgm(pgm, image if peak <= 65535 else image * (65535 / peak), maxval=max(1, min(peak, 65535)))
    _write_provenance(out, "coverage", config, "csv")
    _write_provenance(pgm, "coverage", config, "pgm")
    print(f"wrote {out}: {config.sampling.ndraws} draws, max count {peak}")
    return 0


def cmd_reconstruct(args, config: RunConfig) -> int:
    sec = config.reconstruction
    if not sec.scheme_path:
        raise InputError("reconstruction.scheme_path is required (use --scheme)")
    scheme = SamplingScheme.load(sec.scheme_path)
    reference = _reference_image(config)
    problem = ReconProblem(reference, scheme, _wavelet_depth(config, scheme.n1), sec.dr_gamma, sec.dr_iters)
    image = douglas_rachford_l1(problem)
    if not np.all(np.isfinite(image)):
        raise NumericalError("reconstruction produced non-finite values")
    value = psnr(reference, image)
    out = _output(config, args.out, "reconstruction.f32")
    write_f32(out, image)
    pgm = out.with_suffix(".pgm")
    scale_to_pgm(pgm, image)
    score = out.with_suffix(".psnr.json")
    score.write_text(json.dumps({"psnr_db": value, "ratio": scheme.ratio}, sort_keys=True) + "\n", encoding="utf-8")
    for path, fmt in ((out, "f32"), (pgm, "pgm"), (score, "csv")):
        _write_provenance(path, "reconstruct", config, fmt)
    print(f"PSNR {value:.4f} dB at ratio {scheme.ratio:.4f}")
    return 0


def _benchmark_job(job):
    config, kind, ratio, seed, dictionary, pi, reference = job
    scheme = _scheme(config, kind, ratio, seed, reference.shape[0], dictionary, pi)
    sec = config.reconstruction
    problem = ReconProblem(reference, scheme, _wavelet_depth(config, scheme.n1), sec.dr_gamma, sec.dr_iters)
    return kind, ratio, seed, psnr(reference, douglas_rachford_l1(problem))


def _pool_size(requested: int) -> int:
    cap = os.environ.get(THREADS_ENV)
    size = max(1, requested)
    if cap:
        try:
            size = min(size, max(1, int(cap)))
        except ValueError as exc:
            raise InputError(f"{THREADS_ENV} must be an integer, got {cap!r}") from exc
    return size


def cmd_benchmark(args, config: RunConfig) -> int:
    sec = config.reconstruction
    unknown = [k for k in sec.kinds if k not in SCHEME_KINDS]
    if unknown:
        raise InputError(f"reconstruction.kinds: unknown scheme kind {unknown[0]!r}")
    reference = _reference_image(config)
    dictionary = pi = None
    if "pi" in sec.kinds:
        dictionary, pi = _pi_inputs(config)
        if (dictionary.n1, dictionary.n2) != reference.shape:
            raise InputError(f"dictionary is {dictionary.n1}x{dictionary.n2}, image is {reference.shape}")
    seeds = [config.seed + i for i in range(sec.seeds)]
    jobs = [
        (config, kind, ratio, seed, dictionary, pi, reference)
        for ratio in sec.ratios
        for kind in sec.kinds
        for seed in seeds
    ]
    workers = _pool_size(sec.workers)
    if workers == 1:
        rows = [_benchmark_job(job) for job in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_benchmark_job, jobs))
    out = _output(config, args.out, "benchmark.csv")
    with open(out, "w", newline="", encoding="ascii") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["scheme", "ratio", "seed", "psnr"])
        for kind, ratio, seed, value in rows:
            writer.writerow([kind, repr(float(ratio)), seed, repr(value)])
    _write_provenance(out, "benchmark", config, "csv")
    print(f"wrote {out}: {len(rows)} rows")
    return 0


# -- argument parsing ----------------------------------------------------------

def _float_list(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc


def _str_list(text: str) -> list[str]:
    return [v.strip() for v in text.split(",") if v.strip()]


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON run configuration")
    p.add_argument("--output-dir", help="directory for default output names")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help="primary output path")
    p.add_argument("-v", "--verbose", action="store_true")


def _add_dictionary(p):
    p.add_argument("--dict-kind", choices=("lines", "rowcol"))
    p.add_argument("--n", type=int, help="grid side length")
    p.add_argument("--dict", dest="dict_path", help="dictionary file")


def _add_density(p):
    p.add_argument("--kind", dest="density_kind", choices=("radial", "opt"))
    p.add_argument("--mask-fraction", type=float)
    p.add_argument("--exponent", type=float)
    p.add_argument("--wavelet-depth", type=int)
    p.add_argument("--density", dest="density_path", help="density file")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="blocksampler", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build-dict", help="write a block dictionary")
    _add_common(p)
    _add_dictionary(p)
    p.set_defaults(func=cmd_build_dict)

    p = sub.add_parser("make-density", help="write a target pixel density")
    _add_common(p)
    _add_dictionary(p)
    _add_density(p)
    p.set_defaults(func=cmd_make_density)

    p = sub.add_parser("solve", help="compute block weights and a convergence trace")
    _add_common(p)
    _add_dictionary(p)
    _add_density(p)
    p.add_argument("--alpha", type=float)
    p.add_argument("--e-norm", type=int, choices=(1, 2))
    p.add_argument("--f-norm")
    p.add_argument("--prox")
    p.add_argument("--pprime", type=float)
    p.add_argument("--eps", type=float)
    p.add_argument("--lipschitz-divisor", type=float)
    p.add_argument("--max-iters", type=int)
    p.add_argument("--gap-tol", type=float)
    p.add_argument("--log-every", type=int)
    p.add_argument("--trace", help="trace CSV path")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("sample", help="draw a sampling scheme")
    _add_common(p)
    _add_dictionary(p)
    p.add_argument("--mask-fraction", type=float)
    p.add_argument("--pi", dest="pi_path")
    p.add_argument("--ratio", dest="target_ratio", type=float)
    p.add_argument("--nblocks", type=int)
    p.add_argument("--radial", dest="radial_kind", choices=RADIAL_KINDS)
    p.add_argument("--nlines", type=int)
    p.add_argument("--size", type=int, help="grid side for radial schemes")
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("coverage", help="count pixel hits over repeated block draws")
    _add_common(p)
    _add_dictionary(p)
    p.add_argument("--pi", dest="pi_path")
    p.add_argument("--ndraws", type=int)
    p.set_defaults(func=cmd_coverage)

    p = sub.add_parser("reconstruct", help="reconstruct an image from a scheme and report PSNR")
    _add_common(p)
    p.add_argument("--scheme", dest="scheme_path")
    p.add_argument("--image")
    p.add_argument("--size", type=int)
    p.add_argument("--wavelet-depth", type=int)
    p.add_argument("--dr-iters", type=int)
    p.add_argument("--dr-gamma", type=float)
    p.set_defaults(func=cmd_reconstruct)

    p = sub.add_parser("benchmark", help="PSNR table over scheme kinds, ratios and seeds")
    _add_common(p)
    _add_dictionary(p)
    p.add_argument("--mask-fraction", type=float)
    p.add_argument("--pi", dest="pi_path")
    p.add_argument("--image")
    p.add_argument("--size", type=int)
    p.add_argument("--wavelet-depth", type=int)
    p.add_argument("--dr-iters", type=int)
    p.add_argument("--ratios", type=_float_list)
    p.add_argument("--seeds", type=int)
    p.add_argument("--kinds", type=_str_list)
    p.add_argument("--workers", type=int)
    p.set_defaults(func=cmd_benchmark)
    return parser


def resolve_config(args) -> RunConfig:
    config = load_config(args.config) if args.config else config_from_dict({})
    get = lambda name: getattr(args, name, None)  # noqa: E731
    size = get("size")
    config = dataclasses.replace(
        config,
        output_dir=get("output_dir") or config.output_dir,
        seed=config.seed if get("seed") is None else get("seed"),
        dictionary=_replace(config.dictionary, kind=get("dict_kind"), n=get("n") or size, path=get("dict_path")),
        density=_replace(
            config.density,
            kind=get("density_kind"),
            mask_fraction=get("mask_fraction"),
            exponent=get("exponent"),
            wavelet_depth=get("wavelet_depth") if args.command == "make-density" or args.command == "solve" else None,
            path=get("density_path"),
        ),
        solver=_replace(
            config.solver,
            alpha=get("alpha"),
            e_norm=get("e_norm"),
            f_norm=get("f_norm"),
            prox=get("prox"),
            pprime=get("pprime"),
            eps=get("eps"),
            lipschitz_divisor=get("lipschitz_divisor"),
            max_iters=get("max_iters"),
            gap_tol=get("gap_tol"),
            log_every=get("log_every"),
        ),
        sampling=_replace(
            config.sampling,
            pi_path=get("pi_path"),
            target_ratio=get("target_ratio"),
            nblocks=get("nblocks"),
            ndraws=get("ndraws"),
            radial_kind=get("radial_kind"),
            nlines=get("nlines"),
        ),
        reconstruction=_replace(
            config.reconstruction,
            image=get("image"),
            size=size,
            wavelet_depth=get("wavelet_depth") if args.command in ("reconstruct", "benchmark") else None,
            dr_iters=get("dr_iters"),
            dr_gamma=get("dr_gamma"),
            scheme_path=get("scheme_path"),
            ratios=get("ratios"),
            seeds=get("seeds"),
            kinds=get("kinds"),
            workers=get("workers"),
        ),
    )
    if config.seed < 0:
        raise InputError(f"seed must be a non-negative integer, got {config.seed}")
    return config


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        config = resolve_config(args)
        return args.func(args, config)
    except NumericalError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return 2
    except (InputError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
