from __future__ import annotations

import os

import numpy as np
import pytest

from siltrack.cli import main
from siltrack.io import read_pgm, read_track, write_pgm

from conftest import asset_path


def write_scene(tmp_path, mesh="cube.mesh", frames=5, size=48,
                pose="0.3 -0.2 0.1 24 24 10", extra=()):
    p = tmp_path / "scene.cfg"
    lines = [f"mesh = {asset_path(mesh)}",
             f"width = {size}", f"height = {size}",
             f"pose = {pose}", f"frames = {frames}",
             "background_count = 4", "noise_seed = 9"]
    lines += list(extra)
    p.write_text("\n".join(lines) + "\n")
    return str(p)


def write_run_config(tmp_path, seq_dir, particles=40, extra=()):
    p = tmp_path / "run.cfg"
    lines = [f"mesh = {asset_path('cube.mesh')}",
             f"frames = {seq_dir}/frames",
             f"background_frames = {seq_dir}/background",
             f"out_dir = {tmp_path}/out",
             f"particle_count = {particles}",
             "seed = 7"]
    lines += list(extra)
    p.write_text("\n".join(lines) + "\n")
    return str(p)


@pytest.fixture()
def synth_sequence(tmp_path):
    spec = write_scene(tmp_path)
    out = str(tmp_path / "seq")
    assert main(["synth", spec, "--out", out]) == 0
    return out


class TestLearnBackground:
    def test_constant_frames(self, tmp_path, capsys):
        frames = tmp_path / "bg"
        frames.mkdir()
        for k in range(3):
            write_pgm(np.full((8, 8), 40, dtype=np.uint8),
                      frames / f"bg_{k}.pgm")
        out = tmp_path / "bg.hist"
        assert main(["learn-background", str(frames), "--out",
                     str(out)]) == 0
        assert out.read_text().startswith("BGHIST v1\n")

    def test_empty_dir_exits_2_naming_dir(self, tmp_path, capsys):
        empty = tmp_path / "empty"
        empty.mkdir()
        code = main(["learn-background", str(empty), "--out",
                     str(tmp_path / "h")])
        assert code == 2
        assert str(empty) in capsys.readouterr().err

    def test_histogram_matches_noise_model(self, synth_sequence, tmp_path):
        # synthetic N(30, 10) background: learned mass concentrates near 30
        out = tmp_path / "bg.hist"
        assert main(["learn-background", f"{synth_sequence}/background",
                     "--out", str(out)]) == 0
        from siltrack.io import read_histogram
        hist = read_histogram(out)
        assert 25 <= hist.argmax() <= 35
        assert hist[10:51].sum() > 0.95


class TestSynth:
    def test_file_inventory(self, tmp_path):
        spec = write_scene(tmp_path, frames=10)
        out = tmp_path / "seq"
        assert main(["synth", spec, "--out", str(out)]) == 0
        assert len(list((out / "frames").glob("*.pgm"))) == 10
        assert len(list((out / "masks").glob("*.pgm"))) == 10
        assert len(list((out / "background").glob("*.pgm"))) == 4
        gt = (out / "ground_truth.txt").read_text().splitlines()
        assert len(gt) == 10

    def test_rerun_bit_identical(self, tmp_path):
        spec = write_scene(tmp_path, frames=3)
        a, b = tmp_path / "a", tmp_path / "b"
        assert main(["synth", spec, "--out", str(a)]) == 0
        assert main(["synth", spec, "--out", str(b)]) == 0
        for sub in ("frames", "masks", "background"):
            for pa in sorted((a / sub).glob("*.pgm")):
                pb = b / sub / pa.name
                assert pa.read_bytes() == pb.read_bytes()
        assert ((a / "ground_truth.txt").read_bytes()
                == (b / "ground_truth.txt").read_bytes())

    def test_equal_means_exit_2(self, tmp_path, capsys):
        spec = write_scene(tmp_path, extra=("bg_mean = 99", "fg_mean = 99"))
        assert main(["synth", spec, "--out", str(tmp_path / "x")]) == 2

    def test_missing_spec_exit_2(self, tmp_path):
        code = main(["synth", str(tmp_path / "nope.cfg"), "--out",
                     str(tmp_path / "x")])
        assert code != 0


class TestTrack:
    def test_row_count_and_exit(self, synth_sequence, tmp_path):
        config = write_run_config(tmp_path, synth_sequence)
        assert main(["track", "--config", config]) == 0
        rows = read_track(tmp_path / "out" / "track.csv")
        assert len(rows) == 5
        assert [r[0] for r in rows] == list(range(5))

    def test_mismatched_frame_size_names_frame(self, synth_sequence,
                                               tmp_path, capsys):
        bad = os.path.join(synth_sequence, "frames", "frame_0002.pgm")
        write_pgm(np.zeros((4, 4), dtype=np.uint8), bad)
        config = write_run_config(tmp_path, synth_sequence)
        code = main(["track", "--config", config])
        assert code == 1
        assert "frame 2" in capsys.readouterr().err

    def test_seed_changes_output(self, synth_sequence, tmp_path):
        config = write_run_config(tmp_path, synth_sequence, particles=20)
        assert main(["track", "--config", config, "--out",
                     str(tmp_path / "o1")]) == 0
        assert main(["track", "--config", config, "--out",
                     str(tmp_path / "o2"), "--seed", "123"]) == 0
        a = (tmp_path / "o1" / "track.csv").read_bytes()
        b = (tmp_path / "o2" / "track.csv").read_bytes()
        assert a != b

    def test_determinism_with_overlays(self, synth_sequence, tmp_path):
        config = write_run_config(tmp_path, synth_sequence, particles=20)
        outs = []
        for name in ("r1", "r2"):
            out = tmp_path / name
            assert main(["track", "--config", config, "--out", str(out),
                         "--dump-overlays"]) == 0
            outs.append(out)
        a, b = outs
        assert (a / "track.csv").read_bytes() == (b / "track.csv").read_bytes()
        overlays_a = sorted((a / "overlays").glob("*.pgm"))
        assert len(overlays_a) == 5
        for pa in overlays_a:
            pb = b / "overlays" / pa.name
            assert pa.read_bytes() == pb.read_bytes()

    def test_overlay_brightens_silhouette(self, synth_sequence, tmp_path):
        config = write_run_config(tmp_path, synth_sequence, particles=30)
        out = tmp_path / "ov"
        assert main(["track", "--config", config, "--out", str(out),
                     "--dump-overlays"]) == 0
        frame = read_pgm(os.path.join(synth_sequence, "frames",
                                      "frame_0004.pgm"))
        overlay = read_pgm(out / "overlays" / "overlay_0004.pgm")
        assert (overlay.astype(int) >= frame.astype(int)).all()
        assert (overlay != frame).any()


class TestBench:
    def test_single_worker_row(self, synth_sequence, tmp_path, capsys):
        config = write_run_config(tmp_path, synth_sequence, particles=16)
        csv = tmp_path / "bench.csv"
        assert main(["bench", "--config", config, "--threads", "1",
                     "--out", str(csv)]) == 0
        lines = csv.read_text().splitlines()
        assert lines[0] == "workers,particles_per_sec,speedup"
        assert len(lines) == 2
        assert lines[1].startswith("1,")

    def test_multi_worker_consistency(self, synth_sequence, tmp_path):
        config = write_run_config(tmp_path, synth_sequence, particles=16)
        csv = tmp_path / "bench.csv"
        assert main(["bench", "--config", config, "--threads", "1,2",
                     "--out", str(csv)]) == 0
        lines = csv.read_text().splitlines()
        assert len(lines) == 3  # header + one row per worker count

    def test_bad_threads_list(self, synth_sequence, tmp_path):
        config = write_run_config(tmp_path, synth_sequence)
        assert main(["bench", "--config", config, "--threads", "1,zero"]) == 2


class TestUsage:
    def test_unknown_subcommand_exits_2(self):
        assert main(["frobnicate"]) == 2

    def test_missing_required_flag_exits_2(self):
        assert main(["track"]) == 2

    def test_no_args_exits_2(self):
        assert main([]) == 2
