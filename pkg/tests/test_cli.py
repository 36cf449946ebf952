import numpy as np
import pytest
from conftest import ramp_pair

from msraft import flowio
from msraft.cli import main
from msraft.metrics import compute_metrics


def write_frames_16bit(tmp_path, arrays, stem="frame"):
    """Store (3, H, W) float arrays holding 16-bit-range values as PPMs."""
    paths = []
    for i, arr in enumerate(arrays):
        data = np.moveaxis(arr, 0, 2).astype(">u2")
        h, w = arr.shape[1:]
        path = tmp_path / f"{stem}{i}.ppm"
        path.write_bytes(f"P6\n{w} {h}\n65535\n".encode() + data.tobytes())
        paths.append(str(path))
    return paths


class TestEstimateCommand:
    def test_identical_constant_pair_gives_zero_flow(self, tmp_path, capsys):
        img = np.full((3, 32, 32), 9000.0)
        paths = write_frames_16bit(tmp_path, [img, img])
        assert main(["estimate", *paths, "--out-dir", str(tmp_path)]) == 0
        flow = flowio.read_flo(tmp_path / "flow_0001.flo")
        m = compute_metrics(flow, np.zeros_like(flow))
        assert m.epe_all == 0.0

    def test_horizontal_shift_recovered_approximately(self, tmp_path):
        f1, f2 = ramp_pair(64, 3)
        paths = write_frames_16bit(tmp_path, [f1, f2])
        assert main(["estimate", *paths, "--out-dir", str(tmp_path)]) == 0
        flow = flowio.read_flo(tmp_path / "flow_0001.flo")
        in_frame = np.ones((64, 64), dtype=bool)
        in_frame[:, -3:] = False
        err = np.hypot(flow[0] - 3.0, flow[1])
        assert err[in_frame].max() <= 2.0

    def test_even_shift_with_training_schedule(self, tmp_path):
        f1, f2 = ramp_pair(64, -4)
        paths = write_frames_16bit(tmp_path, [f1, f2])
        assert main(["estimate", *paths, "--out-dir", str(tmp_path),
                     "--schedule", "train"]) == 0
        flow = flowio.read_flo(tmp_path / "flow_0001.flo")
        err = np.hypot(flow[0] + 4.0, flow[1])
        assert err[:, 4:].max() <= 2.0

    def test_custom_schedule_and_viz_output(self, tmp_path):
        img = np.full((3, 32, 32), 500.0)
        paths = write_frames_16bit(tmp_path, [img, img])
        assert main(["estimate", *paths, "--out-dir", str(tmp_path), "--schedule",
                     "custom", "--iters", "1,1,1,1", "--viz"]) == 0
        assert (tmp_path / "flow_0001.ppm").exists()
        colors = flowio.read_image(tmp_path / "flow_0001.ppm")
        np.testing.assert_array_equal(colors, 255.0)  # zero flow renders white

    def test_warm_start_only_changes_later_pairs(self, tmp_path):
        f1, f2 = ramp_pair(32, 2)
        _, f3 = ramp_pair(32, 4)
        paths = write_frames_16bit(tmp_path, [f1, f2, f3])
        cold_dir = tmp_path / "cold"
        warm_dir = tmp_path / "warm"
        assert main(["estimate", *paths, "--out-dir", str(cold_dir)]) == 0
        assert main(["estimate", *paths, "--out-dir", str(warm_dir), "--warm-start"]) == 0
        cold1 = (cold_dir / "flow_0001.flo").read_bytes()
        warm1 = (warm_dir / "flow_0001.flo").read_bytes()
        assert cold1 == warm1  # pair 1 always starts from zero

    def test_outputs_are_deterministic(self, tmp_path):
        f1, f2 = ramp_pair(32, 2)
        paths = write_frames_16bit(tmp_path, [f1, f2])
        a_dir = tmp_path / "a"
        b_dir = tmp_path / "b"
        assert main(["estimate", *paths, "--out-dir", str(a_dir)]) == 0
        assert main(["estimate", *paths, "--out-dir", str(b_dir)]) == 0
        assert (a_dir / "flow_0001.flo").read_bytes() == (b_dir / "flow_0001.flo").read_bytes()

    def test_size_mismatch_exits_two(self, tmp_path):
        a = np.full((3, 32, 32), 100.0)
        b = np.full((3, 32, 48), 100.0)
        paths = write_frames_16bit(tmp_path, [a, b])
        assert main(["estimate", *paths, "--out-dir", str(tmp_path)]) == 2

    def test_unreadable_input_exits_two(self, tmp_path):
        assert main(["estimate", str(tmp_path / "missing1.ppm"),
                     str(tmp_path / "missing2.ppm"), "--out-dir", str(tmp_path)]) == 2

    def test_threads_env_var_validated(self, tmp_path, monkeypatch):
        img = np.full((3, 32, 32), 100.0)
        paths = write_frames_16bit(tmp_path, [img, img, img])
        monkeypatch.setenv("MSRAFT_THREADS", "2")
        assert main(["estimate", *paths, "--out-dir", str(tmp_path / "t2")]) == 0
        monkeypatch.setenv("MSRAFT_THREADS", "zebra")
        assert main(["estimate", *paths, "--out-dir", str(tmp_path / "bad")]) == 2

    def test_parallel_pairs_match_serial(self, tmp_path, monkeypatch):
        f1, f2 = ramp_pair(32, 2)
        _, f3 = ramp_pair(32, 4)
        paths = write_frames_16bit(tmp_path, [f1, f2, f3])
        monkeypatch.setenv("MSRAFT_THREADS", "1")
        assert main(["estimate", *paths, "--out-dir", str(tmp_path / "ser")]) == 0
        monkeypatch.setenv("MSRAFT_THREADS", "3")
        assert main(["estimate", *paths, "--out-dir", str(tmp_path / "par")]) == 0
        for k in (1, 2):
            assert ((tmp_path / "ser" / f"flow_{k:04d}.flo").read_bytes()
                    == (tmp_path / "par" / f"flow_{k:04d}.flo").read_bytes())


class TestEvalCommand:
    def test_perfect_estimate_prints_zero_table(self, tmp_path, capsys):
        flow = np.stack([np.full((4, 4), 1.5), np.zeros((4, 4))])
        est = tmp_path / "est.flo"
        gt = tmp_path / "gt.flo"
        flowio.write_flo(est, flow)
        flowio.write_flo(gt, flow)
        assert main(["eval", str(est), str(gt)]) == 0
        out = capsys.readouterr().out
        assert "epe_all 0.0000" in out
        assert "fl_all 0.0000" in out

    def test_improvement_mode(self, capsys):
        assert main(["eval", "--improve", "4.88", "4.15"]) == 0
        assert capsys.readouterr().out.strip() == "+15.0"

    def test_kitti_gt_supplies_validity(self, tmp_path, capsys):
        flow = np.zeros((2, 3, 3))
        valid = np.ones((3, 3), dtype=bool)
        valid[0, 0] = False
        gt = flow.copy()
        gt[0, 0, 0] = 50.0  # huge error, but on the invalid pixel
        est_p = tmp_path / "est.flo"
        gt_p = tmp_path / "gt.png"
        flowio.write_flo(est_p, flow)
        flowio.write_kitti_png(gt_p, gt, valid)
        assert main(["eval", str(est_p), str(gt_p)]) == 0
        assert "epe_all 0.0000" in capsys.readouterr().out

    def test_dim_mismatch_exits_two(self, tmp_path):
        a = tmp_path / "a.flo"
        b = tmp_path / "b.flo"
        flowio.write_flo(a, np.zeros((2, 3, 3)))
        flowio.write_flo(b, np.zeros((2, 4, 4)))
        assert main(["eval", str(a), str(b)]) == 2

    def test_missing_arguments_exit_two(self):
        assert main(["eval"]) == 2


class TestCheckCorrCommand:
    def test_default_dims_pass(self, capsys):
        assert main(["check-corr", "--trials", "5", "--seed", "3"]) == 0
        assert "max relative deviation" in capsys.readouterr().out

    def test_injected_error_fails_with_coordinates(self, capsys):
        assert main(["check-corr", "--trials", "2", "--inject", "1e-3"]) == 1
        err = capsys.readouterr().err
        assert "pixel" in err and "trial" in err

    def test_self_correlation_mode(self, capsys, tmp_path):
        # r=0, L=1 sanity: negative control must catch sign perturbations too
        assert main(["check-corr", "--radius", "0", "--levels", "1", "--trials", "3"]) == 0


class TestMixPlanCommand:
    def test_default_spec_proportions(self, capsys):
        assert main(["mix-plan", "--n", "1000", "--seed", "0"]) == 0
        out = capsys.readouterr().out
        lines = out.strip().splitlines()
        assert len(lines) == 1001
        assert lines[-1].startswith("# proportions:")
        counts = {k: 0 for k in ("sintel", "viper", "kitti2015", "things", "hd1k")}
        for line in lines[:-1]:
            counts[line.split()[1]] += 1
        assert abs(counts["sintel"] / 1000 - 0.30) < 0.05
        assert abs(counts["kitti2015"] / 1000 - 0.28) < 0.05

    def test_zero_draws(self, capsys):
        assert main(["mix-plan", "--n", "0"]) == 0
        assert capsys.readouterr().out == ""

    def test_fixed_seed_is_byte_identical(self, capsys):
        assert main(["mix-plan", "--n", "200", "--seed", "9"]) == 0
        first = capsys.readouterr().out
        assert main(["mix-plan", "--n", "200", "--seed", "9"]) == 0
        assert capsys.readouterr().out == first

    def test_custom_spec(self, capsys):
        assert main(["mix-plan", "--spec", "a:0.5,b:0.5", "--n", "10"]) == 0
        out = capsys.readouterr().out
        assert all(line.split()[1] in ("a", "b") for line in out.splitlines()[:-1])

    def test_bad_spec_exits_two(self):
        assert main(["mix-plan", "--spec", "a:0.5,b:0.6", "--n", "10"]) == 2
        assert main(["mix-plan", "--spec", "nonsense", "--n", "10"]) == 2


class TestWarpAndViz:
    def test_warp_applies_forward_splat(self, tmp_path):
        from msraft.upsample import forward_warp

        flow = np.stack([np.full((4, 4), 2.0), np.zeros((4, 4))])
        src = tmp_path / "in.flo"
        dst = tmp_path / "out.flo"
        flowio.write_flo(src, flow)
        assert main(["warp", str(src), str(dst)]) == 0
        np.testing.assert_array_equal(flowio.read_flo(dst), forward_warp(flow))

    def test_viz_writes_white_for_zero_flow(self, tmp_path):
        src = tmp_path / "in.flo"
        out = tmp_path / "flow.ppm"
        flowio.write_flo(src, np.zeros((2, 5, 5)))
        assert main(["viz", str(src), str(out)]) == 0
        np.testing.assert_array_equal(flowio.read_image(out), 255.0)

    def test_viz_png_output(self, tmp_path):
        src = tmp_path / "in.flo"
        out = tmp_path / "flow.png"
        flowio.write_flo(src, np.ones((2, 4, 4)))
        assert main(["viz", str(src), str(out), "--max-norm", "2.0"]) == 0
        assert out.exists()
