"""Command-line entry point.

Subcommands: ``learn-background`` (fit the empty-sky histogram), ``synth``
(generate a ground-truth synthetic sequence), ``track`` (run the particle
filter over a frame sequence), and ``bench`` (relative per-particle
likelihood throughput across worker counts).

Exit codes: 0 success, 1 internal/runtime error, 2 usage or config error.
All randomness flows from the seed, so identical inputs and seed reproduce
identical output files byte for byte.
"""

from __future__ import annotations

import argparse
import os
import sys
import time

import numpy as np

from . import io as sio
from .appearance import frame_model, learn_background, uniform_foreground
from .filtering import (
    FilterConfig,
    evaluate_states,
    expected_state,
    filter_update,
    init_particles,
    map_particle,
)
from .geometry import MeshError, apply_pose, load_mesh, rasterize_silhouette
from .synth import render_background_frames, render_frame, ground_truth_mask


class _FrameError(RuntimeError):
    """Processing failure attributable to one frame."""


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="siltrack",
        description="Silhouette-based pose tracking with a particle filter.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("learn-background",
                       help="learn the background histogram from PGM frames")
    p.add_argument("frames_dir", help="directory of empty-sky PGM frames")
    p.add_argument("--out", required=True, help="output histogram path")
    p.set_defaults(func=cmd_learn_background)

    p = sub.add_parser("synth", help="render a synthetic sequence")
    p.add_argument("scene_spec", help="scene spec file")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("track", help="track a sequence with the filter")
    p.add_argument("--config", required=True, help="run config file")
    p.add_argument("--seed", type=int, default=None,
                   help="override the config seed")
    p.add_argument("--threads", type=int, default=None,
                   help="override the config worker count")
    p.add_argument("--out", default=None, help="override the out_dir")
    p.add_argument("--dump-overlays", action="store_true",
                   help="write per-frame MAP silhouette overlays")
    p.set_defaults(func=cmd_track)

    p = sub.add_parser("bench",
                       help="per-particle likelihood throughput by workers")
    p.add_argument("--config", required=True, help="run config file")
    p.add_argument("--threads", default="1",
                   help="comma-separated worker counts, e.g. 1,2,4")
    p.add_argument("--out", default=None, help="optional CSV output path")
    p.set_defaults(func=cmd_bench)
    return parser


def _load_background(config: sio.RunConfig) -> np.ndarray:
    if config.background_histogram is not None:
        return sio.read_histogram(config.background_histogram)
    paths = sio.list_frames(config.background_frames)
    if not paths:
        raise sio.ConfigError(
            f"no PGM frames found in {config.background_frames}")
    return learn_background(sio.read_pgm(p) for p in paths)


def _filter_config(config: sio.RunConfig, mesh, width, height) -> FilterConfig:
    return FilterConfig.for_scene(
        mesh, width, height,
        particle_count=config.particle_count,
        angle_std=config.angle_std,
        translation_std=config.translation_std,
        log_scale_std=config.log_scale_std,
        articulation_std=config.articulation_std,
        rng_seed=config.seed,
    )


def cmd_learn_background(args) -> int:
    paths = sio.list_frames(args.frames_dir)
    if not paths:
        raise sio.ConfigError(f"no PGM frames found in {args.frames_dir}")
    hist = learn_background(sio.read_pgm(p) for p in paths)
    sio.write_histogram(hist, args.out)
    print(f"learned background from {len(paths)} frames -> {args.out}")
    return 0


def cmd_synth(args) -> int:
    spec = sio.read_scene_spec(args.scene_spec)
    frames_dir = os.path.join(args.out, "frames")
    masks_dir = os.path.join(args.out, "masks")
    bg_dir = os.path.join(args.out, "background")
    for d in (frames_dir, masks_dir, bg_dir):
        os.makedirs(d, exist_ok=True)

    for k in range(len(spec.trajectory)):
        sio.write_pgm(render_frame(spec, k),
                      os.path.join(frames_dir, f"frame_{k:04d}.pgm"))
        mask = ground_truth_mask(spec, k)
        sio.write_pgm(mask.astype(np.uint8) * 255,
                      os.path.join(masks_dir, f"mask_{k:04d}.pgm"))
    for k, frame in enumerate(render_background_frames(
            spec, spec.background_count)):
        sio.write_pgm(frame, os.path.join(bg_dir, f"bg_{k:04d}.pgm"))
    sio.write_ground_truth(spec.trajectory,
                           os.path.join(args.out, "ground_truth.txt"))
    print(f"wrote {len(spec.trajectory)} frames, "
          f"{spec.background_count} background frames -> {args.out}")
    return 0


def cmd_track(args) -> int:
    config = sio.read_config(args.config)
    if args.seed is not None:
        config.seed = args.seed
    if args.threads is not None:
        config.threads = args.threads
    if args.out is not None:
        config.out_dir = args.out
    config.validate()

    mesh = load_mesh(config.mesh_path)
    frame_paths = sio.list_frames(config.frames)
    if not frame_paths:
        raise sio.ConfigError(f"no PGM frames found in {config.frames}")
    background = _load_background(config)
    foreground = uniform_foreground()

    first = sio.read_pgm(frame_paths[0])
    height, width = first.shape
    fconfig = _filter_config(config, mesh, width, height)
    pset = init_particles(fconfig, width, height, mesh)

    os.makedirs(config.out_dir, exist_ok=True)
    overlay_dir = os.path.join(config.out_dir, "overlays")
    if args.dump_overlays:
        os.makedirs(overlay_dir, exist_ok=True)

    estimates = []
    for k, path in enumerate(frame_paths):
        try:
            img = sio.read_pgm(path)
            if img.shape != (height, width):
                raise ValueError(
                    f"frame size {img.shape[::-1]} does not match "
                    f"({width}, {height})")
            model = frame_model(background, img, foreground)
            rng = np.random.default_rng(
                np.random.SeedSequence((config.seed, k)))
            pset = filter_update(pset, img, mesh, model, fconfig, rng,
                                 workers=config.threads)
            best = map_particle(pset)
            best_ll = float(pset.log_liks[int(np.argmax(pset.weights))])
            estimates.append((k, expected_state(pset), best.state, best_ll))
            if args.dump_overlays:
                mask = rasterize_silhouette(
                    apply_pose(mesh, best.state), width, height)
                overlay = np.where(
                    mask,
                    np.minimum(img.astype(np.int16) + 64, 255).astype(np.uint8),
                    img)
                sio.write_pgm(overlay,
                              os.path.join(overlay_dir,
                                           f"overlay_{k:04d}.pgm"))
        except Exception as exc:
            raise _FrameError(f"frame {k} ({path}): {exc}") from exc

    csv_path = os.path.join(config.out_dir, config.track_csv)
    sio.write_track(estimates, csv_path)
    print(f"tracked {len(frame_paths)} frames -> {csv_path}")
    return 0


def cmd_bench(args) -> int:
    config = sio.read_config(args.config)
    try:
        worker_counts = [int(t) for t in args.threads.split(",") if t.strip()]
    except ValueError:
        raise sio.ConfigError(f"bad --threads list: {args.threads!r}") from None
    if not worker_counts or min(worker_counts) < 1:
        raise sio.ConfigError(f"bad --threads list: {args.threads!r}")

    mesh = load_mesh(config.mesh_path)
    frame_paths = sio.list_frames(config.frames)
    if not frame_paths:
        raise sio.ConfigError(f"no PGM frames found in {config.frames}")
    img = sio.read_pgm(frame_paths[0])
    height, width = img.shape
    background = _load_background(config)
    model = frame_model(background, img)

    fconfig = _filter_config(config, mesh, width, height)
    batch = init_particles(fconfig, width, height, mesh).states

    from .appearance import build_cache
    cache = build_cache(model, img)

    rows = []
    reference = None
    print(f"{'workers':>8} {'particles/s':>14} {'speedup':>9}")
    for workers in worker_counts:
        t0 = time.perf_counter()
        lls = evaluate_states(batch, mesh, cache, workers=workers)
        dt = time.perf_counter() - t0
        if reference is None:
            reference = lls
            base_rate = len(batch) / dt
        elif not np.array_equal(lls, reference):
            raise RuntimeError(
                f"likelihoods at {workers} workers differ from baseline")
        rate = len(batch) / dt
        rows.append((workers, rate, rate / base_rate))
        print(f"{workers:>8} {rate:>14.1f} {rate / base_rate:>8.2f}x")

    if args.out:
        with open(args.out, "w", encoding="ascii") as fh:
            fh.write("workers,particles_per_sec,speedup\n")
            for workers, rate, speedup in rows:
                fh.write(f"{workers},{rate:.9g},{speedup:.9g}\n")
        print(f"wrote {args.out}")
    return 0


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code else 0
    try:
        return args.func(args)
    except (sio.ConfigError, sio.PgmError, MeshError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except _FrameError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # pragma: no cover - unexpected failure guard
        print(f"internal error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
