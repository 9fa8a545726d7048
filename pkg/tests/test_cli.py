import json
import os

import pytest

from synthvid.cli import main
from synthvid.config import GeneratorConfig, config_hash


@pytest.fixture()
def cfg_file(tmp_path):
    cfg = GeneratorConfig()
    path = tmp_path / "cfg.json"
    path.write_text(cfg.to_json())
    return str(path)


SMALL = ["--set", "width=48", "--set", "height=48",
         "--set", "duration_range=[3,4]", "--set", "object_count_range=[1,2]",
         "--set", "level=\"moving_circles\""]


def test_generate_and_inspect(tmp_path, cfg_file, capsys):
    out = str(tmp_path / "ds")
    assert main(["generate", "--config", cfg_file, *SMALL,
                 "--out", out, "--count", "2"]) == 0
    captured = capsys.readouterr().out
    assert "wrote 2 new videos" in captured
    assert os.path.exists(os.path.join(out, "manifest.json"))

    assert main(["inspect", os.path.join(out, "000000.svid"), "--frames"]) == 0
    captured = capsys.readouterr().out
    assert "payload sha256" in captured
    assert "frame     0" in captured


def test_hash_matches_api(cfg_file, capsys):
    assert main(["hash", "--config", cfg_file]) == 0
    printed = capsys.readouterr().out.strip()
    assert printed == config_hash(GeneratorConfig())


def test_config_dump_roundtrips(capsys):
    assert main(["config", "--set", "global_seed=5"]) == 0
    dumped = capsys.readouterr().out
    assert GeneratorConfig.from_json(dumped).global_seed == 5


def test_set_overrides_change_hash(capsys):
    main(["hash"])
    base = capsys.readouterr().out.strip()
    main(["hash", "--set", "global_seed=1"])
    assert capsys.readouterr().out.strip() != base


def test_stats_cli(tmp_path, cfg_file, capsys):
    out = str(tmp_path / "ds")
    main(["generate", "--config", cfg_file, *SMALL, "--set", "duration_range=[10,12]",
          "--out", out, "--count", "6"])
    capsys.readouterr()
    report_path = str(tmp_path / "report.json")
    csv_path = str(tmp_path / "report.csv")
    assert main(["stats", "--dataset", out, "--out", report_path, "--csv", csv_path,
                 "--frame-sample", "40", "--video-sample", "16",
                 "--frames-per-video", "8", "--allow-small"]) == 0
    report = json.load(open(report_path))
    assert "spectrum_alpha" in report and "diversity_logdet" in report
    lines = open(csv_path).read().splitlines()
    assert lines[0] == "dataset,metric,value"
    assert len(lines) >= 3


def test_export_frames(tmp_path, cfg_file, capsys):
    out = str(tmp_path / "ds")
    main(["generate", "--config", cfg_file, *SMALL, "--out", out, "--count", "1"])
    png_dir = str(tmp_path / "frames")
    assert main(["export-frames", os.path.join(out, "000000.svid"),
                 "--out", png_dir, "--every", "2"]) == 0
    assert len(os.listdir(png_dir)) >= 2


def test_invalid_config_reports_error(tmp_path, capsys):
    assert main(["generate", "--set", "fps=0", "--out", str(tmp_path / "x"),
                 "--count", "1"]) == 2
    assert "error:" in capsys.readouterr().err
