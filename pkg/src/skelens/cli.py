"""Command-line interface: ``skelens <command> ...``.

Exit codes: 0 success, 1 I/O failure, 2 invalid configuration or input.
Logs go to stderr; summaries and reports go to stdout or files.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import time
import zlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from ._validation import sub_seed
from .config import ConfigError, PipelineConfig, load_config
from .degrade import DSYN_SIGMA_RANGE, DegradeRecipe, degrade, synthesize_dsyn
from .ensemble import senet
from .metrics import PairEntry, PairError, PairManifest, evaluate_pairs
from .prepool import generate_phi_set
from .raster import IMAGE_SUFFIXES, binarize, load_gray, save_image
from .thinning import load_kernel_set, skeletonize

log = logging.getLogger("skelens")

EXIT_OK, EXIT_IO, EXIT_CONFIG = 0, 1, 2


def _list_images(directory: Path) -> list[Path]:
    files = sorted(p for p in directory.iterdir()
                   if p.is_file() and p.suffix.lower() in IMAGE_SUFFIXES)
    if not files:
        raise FileNotFoundError(f"no .png/.pgm images in {directory}")
    return files


def _file_seed(seed: int, name: str) -> int:
    """Per-file seed that depends only on the run seed and the file name."""
    ss = sub_seed(seed, zlib.crc32(name.encode()))
    return int(ss.generate_state(1, np.uint64)[0] >> np.uint64(1))


def _kernels(ref):
    try:
        return load_kernel_set(ref)
    except (OSError, ValueError) as exc:
        raise ConfigError(f"bad kernel set {ref!r}: {exc}") from exc


def cmd_skeletonize(args) -> int:
    kernels = _kernels(args.kernels)
    img = load_gray(args.input)
    if args.binarize == "none":
        binary = (img < 128).astype(np.uint8)
    else:
        binary = binarize(img, args.binarize, threshold=args.threshold)
    save_image(skeletonize(binary, kernels), args.output, binary=True)
    log.info("wrote %s", args.output)
    return EXIT_OK


def _senet_one(src: Path, dst: Path, cfg: PipelineConfig, kernels, seed: int,
               threads: int, dump_dir: Path | None):
    ens = replace(cfg.ensemble, seed=seed)
    phi = generate_phi_set(seed, ens.phi_count, cfg.pool)
    noisy = load_gray(src)
    on_generation = None
    if dump_dir is not None:
        dump_dir.mkdir(parents=True, exist_ok=True)

        def on_generation(sset):
            for i, sk in enumerate(sset):
                save_image(sk, dump_dir / f"{src.stem}_g{sset.generation:02d}_{i:03d}.png",
                           binary=True, text={"skelens-seed": seed})

    result = senet(noisy, ens, kernels, phi=phi, n_jobs=threads, on_generation=on_generation)
    save_image(result, dst, binary=True, text={"skelens-seed": seed})
    return {"input": src.name, "output": dst.name, "seed": seed}


def cmd_senet(args) -> int:
    cfg = load_config(args.config) if args.config else PipelineConfig()
    kernels = cfg.kernel_set()
    seed = cfg.ensemble.seed if args.seed is None else args.seed
    threads = args.threads if args.threads is not None else cfg.io.threads
    if threads < 1:
        raise ConfigError("--threads must be >= 1")
    dump = args.dump_intermediate or cfg.io.dump_intermediate
    src = Path(args.input)
    out = Path(args.output)
    t0 = time.perf_counter()
    if src.is_dir():
        files = _list_images(src)
        out.mkdir(parents=True, exist_ok=True)
        dump_dir = out / "intermediate" if dump else None
        jobs = [(f, out / f"{f.stem}.{cfg.io.format}", _file_seed(seed, f.name)) for f in files]
        # files are processed one at a time; threads go to branches inside each file
        records = [_senet_one(f, d, cfg, kernels, s, threads, dump_dir) for f, d, s in jobs]
        with open(out / "senet_run.json", "w") as fh:
            json.dump({"seed": seed, "version": __version__, "config": cfg.to_dict(),
                       "files": records}, fh, indent=2)
            fh.write("\n")
    else:
        if not src.is_file():
            raise FileNotFoundError(f"file not found: {src}")
        dump_dir = out.parent / f"{out.stem}_intermediate" if dump else None
        records = [_senet_one(src, out, cfg, kernels, seed, threads, dump_dir)]
    wall = time.perf_counter() - t0
    print(f"senet: files={len(records)} branches={cfg.ensemble.phi_count} seed={seed} "
          f"wall={wall:.2f}s")
    return EXIT_OK


def _load_recipe(path) -> DegradeRecipe:
    try:
        return DegradeRecipe.from_dict(json.loads(Path(path).read_text()))
    except OSError as exc:
        raise ConfigError(f"cannot read recipe {path}: {exc}") from exc
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"invalid recipe {path}: {exc}") from exc


def cmd_degrade(args) -> int:
    recipe = _load_recipe(args.recipe) if args.recipe else None
    seed = args.seed if args.seed is not None else (recipe.seed if recipe else 0)
    clean_dir = Path(args.clean_dir)
    if not clean_dir.is_dir():
        raise FileNotFoundError(f"not a directory: {clean_dir}")
    files = _list_images(clean_dir)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)

    def work(f: Path):
        rng = np.random.default_rng(_file_seed(seed, f.name))
        clean = load_gray(f)
        noisy = synthesize_dsyn(clean, rng) if recipe is None else degrade(clean, recipe, rng)
        dst = out / f"{f.stem}.png"
        save_image(noisy, dst, binary=False, text={"skelens-seed": seed})
        return dst

    if args.threads > 1:
        with ThreadPoolExecutor(max_workers=args.threads) as pool:
            outputs = list(pool.map(work, files))
    else:
        outputs = [work(f) for f in files]

    manifest_path = Path(args.emit_manifest) if args.emit_manifest else out / "manifest.json"
    root = manifest_path.parent.resolve()
    entries = [PairEntry(f.stem, _rel(dst, root), _rel(f, root)) for f, dst in zip(files, outputs)]
    PairManifest(entries, root).dump(manifest_path)
    info = {"seed": seed, "version": __version__,
            "recipe": recipe.to_dict() if recipe else
            {"dsyn": {"sigma_range": list(DSYN_SIGMA_RANGE)}}}
    with open(out / "degrade_run.json", "w") as fh:
        json.dump(info, fh, indent=2)
        fh.write("\n")
    print(f"degrade: files={len(files)} seed={seed} manifest={manifest_path}")
    return EXIT_OK


def _rel(path: Path, root: Path) -> str:
    return os.path.relpath(path.resolve(), root)


def cmd_evaluate(args) -> int:
    try:
        manifest = PairManifest.load(args.manifest)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    kernels = _kernels(args.kernels)
    try:
        report = evaluate_pairs(manifest, skip_bad=args.skip_bad, theta=args.theta,
                                kernels=kernels, n_jobs=args.threads)
    except PairError as exc:
        log.error("%s", exc)
        return EXIT_IO if isinstance(exc.cause, OSError) else EXIT_CONFIG
    report.write_json(args.out_report)
    if args.csv:
        report.write_csv(args.csv)
    agg = report.aggregates
    skipped = f" skipped={','.join(s['id'] for s in report.skipped)}" if report.skipped else ""
    print(f"evaluate: pairs={agg['n_pairs']} psnr={agg['psnr']:.4f} ssim={agg['ssim']:.4f} "
          f"sk_loss={agg['sk_loss']:.6f}{skipped}")
    return EXIT_OK


def cmd_kernels_dump(args) -> int:
    text = _kernels(args.kernels).dumps()
    if args.output:
        Path(args.output).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="skelens", description="Ensemble skeleton extraction for degraded character images.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging on stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("skeletonize", help="binarize and thin one image")
    p.add_argument("input", help="input image (.png or .pgm)")
    p.add_argument("output", help="output skeleton image (.png or .pgm)")
    p.add_argument("--kernels", default="default", help="'default' or a kernel text file")
    p.add_argument("--binarize", default="otsu", choices=["otsu", "fixed", "adaptive", "none"],
                   help="binarization method; 'none' expects an already binary image")
    p.add_argument("--threshold", type=int, default=128, help="threshold for --binarize fixed")
    p.set_defaults(func=cmd_skeletonize)

    p = sub.add_parser("senet", help="ensemble skeleton of one image or a directory")
    p.add_argument("input", help="noisy image or directory of images")
    p.add_argument("output", help="output image, or output directory for directory input")
    p.add_argument("--config", help="JSON pipeline config")
    p.add_argument("--seed", type=int, help="overrides ensemble.seed from the config")
    p.add_argument("--threads", type=int, help="worker threads (default: config io.threads)")
    p.add_argument("--dump-intermediate", action="store_true",
                   help="also write every generation's skeletons as numbered images")
    p.set_defaults(func=cmd_senet)

    p = sub.add_parser("degrade", help="build a synthetic noisy corpus and its manifest")
    p.add_argument("clean_dir", help="directory of clean images")
    p.add_argument("out_dir", help="directory for degraded images")
    p.add_argument("--recipe", help="JSON degradation recipe (default: Gaussian noise, "
                                    "sigma ~ U[5, 15] per image)")
    p.add_argument("--seed", type=int, help="run seed (default: recipe seed or 0)")
    p.add_argument("--emit-manifest", help="manifest path (default: OUT_DIR/manifest.json)")
    p.add_argument("--threads", type=int, default=1, help="worker threads")
    p.set_defaults(func=cmd_degrade)

    p = sub.add_parser("evaluate", help="PSNR / SSIM / skeleton loss over a pair manifest")
    p.add_argument("--manifest", required=True, help="JSON array of {id, noisy, clean}")
    p.add_argument("--out-report", required=True, help="where to write the JSON report")
    p.add_argument("--csv", help="also write per-pair metrics as CSV")
    p.add_argument("--skip-bad", action="store_true",
                   help="skip unreadable pairs instead of aborting")
    p.add_argument("--theta", type=float, default=1.0, help="skeleton loss weight")
    p.add_argument("--kernels", default="default", help="'default' or a kernel text file")
    p.add_argument("--threads", type=int, default=1, help="worker threads")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("kernels-dump", help="print a kernel set in the text format")
    p.add_argument("--kernels", default="default", help="'default' or a kernel text file")
    p.add_argument("-o", "--output", help="write to a file instead of stdout")
    p.set_defaults(func=cmd_kernels_dump)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        return args.func(args)
    except ConfigError as exc:
        log.error("%s", exc)
        return EXIT_CONFIG
    except OSError as exc:
        log.error("%s", exc)
        return EXIT_IO
    except ValueError as exc:
        log.error("%s", exc)
        return EXIT_CONFIG


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
