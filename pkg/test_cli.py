"""
Pruebas de la interfaz de linea de comandos
"""

import pandas as pd
import pytest

from human_motion_transfer.api.cli import build_parser, main
from human_motion_transfer.utils.io import save_image_dir


@pytest.fixture
def votes_csv(tmp_path):
    path = tmp_path / "votes.csv"
    pd.DataFrame(
        {
            "method": ["ours", "baseline_a", "baseline_b", "pose_only"],
            "participant": ["todos"] * 4,
            "vote": [257, 194, 143, 54],
        }
    ).to_csv(path, index=False)
    return path


def test_resolution_flag():
    args = build_parser().parse_args(["prepare", "--data", "x", "--resolution", "64x96"])
    assert args.resolution == [64, 96]
    args = build_parser().parse_args(["prepare", "--data", "x", "--resolution", "48"])
    assert args.resolution == [48, 48]


def test_unknown_subcommand_is_usage_error():
    assert main(["teleport"]) == 2


def test_help_exits_cleanly():
    assert main(["--help"]) == 0


def test_study_prints_threshold(votes_csv, tmp_path, capsys):
    out = tmp_path / "ranking.csv"
    code = main(["study", "--votes", str(votes_csv), "--W", "4.405", "--m", "54", "--t", "4", "--out", str(out)])
    assert code == 0
    printed = capsys.readouterr().out
    assert "32.620" in printed
    assert "Grupos distinguibles: 4" in printed
    assert out.exists()


def test_study_budget_is_strict_when_declared(votes_csv, capsys):
    code = main(["study", "--votes", str(votes_csv), "--W", "4.405", "--m", "54", "--comparisons-per-pair", "1"])
    assert code == 1
    assert "error: StudyError:" in capsys.readouterr().err
    assert main(["study", "--votes", str(votes_csv), "--W", "4.405", "--m", "54", "--comparisons-per-pair", "2"]) == 0


def test_study_method_count_mismatch(votes_csv, capsys):
    assert main(["study", "--votes", str(votes_csv), "--W", "4.405", "--m", "54", "--t", "3"]) == 1
    assert "StudyError" in capsys.readouterr().err


def test_missing_file_reports_error(tmp_path, capsys):
    code = main(["study", "--votes", str(tmp_path / "none.csv"), "--m", "5"])
    assert code == 1
    assert "error: FileNotFoundError:" in capsys.readouterr().err


def test_evaluate_identical_directories(tmp_path, small_sequence, config_file, capsys):
    save_image_dir(tmp_path / "pred", small_sequence.frames)
    save_image_dir(tmp_path / "gt", small_sequence.frames)
    code = main(["evaluate", "--config", str(config_file), "--pred", str(tmp_path / "pred"), "--gt", str(tmp_path / "gt")])
    assert code == 0
    printed = capsys.readouterr().out
    assert "frames: 4" in printed
    assert "ssim: 1.000000" in printed
    assert "perceptual: 0.000000" in printed


def test_evaluate_needs_inputs(config_file, capsys):
    assert main(["evaluate", "--config", str(config_file)]) == 1
    assert "ConfigError" in capsys.readouterr().err


def test_synth_prepare_train_reenact(tmp_path, config_file, capsys):
    data = tmp_path / "seq"
    cfg = ["--config", str(config_file)]
    assert main(["synth-data", *cfg, "--out", str(data)]) == 0
    assert len(list((data / "frames").glob("*.png"))) == 4

    assert main(["prepare", *cfg, "--data", str(data)]) == 0
    assert "desde_cache: False" in capsys.readouterr().out
    assert main(["prepare", *cfg, "--data", str(data)]) == 0
    assert "desde_cache: True" in capsys.readouterr().out

    checkpoints = tmp_path / "ckpt"
    assert main(["train", *cfg, "--data", str(data), "--variant", "PS", "--checkpoint", str(checkpoints)]) == 0
    printed = capsys.readouterr().out
    assert "checkpoint:" in printed and "l1_primer_plano:" in printed

    out = tmp_path / "reenacted"
    code = main(
        ["reenact", *cfg, "--checkpoint", str(checkpoints), "--source", str(data), "--target", str(data),
         "--out", str(out), "--panels"]
    )
    assert code == 0
    assert len(list((out / "frames").glob("frame_*.png"))) == 4
    assert len(list((out / "panels").glob("panel_*.png"))) == 4

    edited = tmp_path / "edited"
    code = main(
        ["edit", *cfg, "--checkpoint", str(checkpoints), "--source", str(data), "--target", str(data),
         "--shape-from", str(data), "--out", str(edited)]
    )
    assert code == 0
    assert len(list((edited / "frames").glob("*.png"))) == 4

    code = main(
        ["edit", *cfg, "--checkpoint", str(checkpoints), "--source", str(data), "--target", str(data),
         "--structure-from", str(data), "--out", str(edited)]
    )
    assert code == 1
    assert "EditError" in capsys.readouterr().err


def test_visualize_panels(sequence_dir, tmp_path, config_file):
    out = tmp_path / "viz"
    assert main(["visualize", "--config", str(config_file), "--data", str(sequence_dir), "--out", str(out)]) == 0
    assert len(list(out.glob("panel_*.png"))) == 4
