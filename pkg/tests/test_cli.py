from __future__ import annotations

import pytest

from scoutipp.cli import EXIT_CONFIG, EXIT_OK, EXIT_SCENE, main, parse_seeds
from scoutipp.scene_io import load_scene

SMALL = ["--width", "24", "--height", "16", "--gradient", "4", "--obstacle-fraction", "0.1"]


def test_parse_seeds():
    assert parse_seeds("0-4") == [0, 1, 2, 3, 4]
    assert parse_seeds("1,3, 7") == [1, 3, 7]
    assert parse_seeds("0-2,9") == [0, 1, 2, 9]
    with pytest.raises(ValueError):
        parse_seeds("4-1")


def test_generate_then_oracle(tmp_path, capsys):
    out = tmp_path / "scene"
    assert main(["generate", *SMALL, "--seed", "3", "--out", str(out)]) == EXIT_OK
    assert load_scene(out).width == 24
    capsys.readouterr()
    assert main(["oracle", "--scene", str(out)]) == EXIT_OK
    from_file = capsys.readouterr().out.strip()
    assert main(["oracle", *SMALL, "--seed", "3"]) == EXIT_OK
    assert capsys.readouterr().out.strip() == from_file
    assert float(from_file) > 0


def test_oracle_closed_box(capsys):
    assert main(["oracle", "--scene-kind", "closed_box"]) == EXIT_OK
    assert capsys.readouterr().out.strip() == "NoPath"


def test_run_writes_record(tmp_path, capsys):
    out = tmp_path / "runs"
    code = main(["run", *SMALL, "--seed", "1", "--planner", "path_aware", "--seeds", "0", "--out", str(out)])
    assert code == EXIT_OK
    assert "outcome=optimal" in capsys.readouterr().out
    assert (out / "scene0001__path_aware__0.csv").exists()


def test_config_file_with_flag_override(tmp_path, capsys):
    config = tmp_path / "run.cfg"
    config.write_text(
        "# small scene\nwidth=24\nheight=16\nobstacle_fraction=0.1\nseed=1\nplanner=exploration\nmax-steps=1\n",
        encoding="utf-8",
    )
    assert main(["run", "--config", str(config)]) == EXIT_OK
    assert capsys.readouterr().out.startswith("exploration seed=0 outcome=")
    assert main(["run", "--config", str(config), "--planner", "path_aware", "--max-steps", "500"]) == EXIT_OK
    assert "path_aware seed=0 outcome=optimal" in capsys.readouterr().out


def test_campaign_prints_table(tmp_path, capsys):
    code = main(["campaign", *SMALL, "--scene-seeds", "1", "--seeds", "0-1", "--planner", "path_aware,exploration",
                 "--out", str(tmp_path / "c")])
    assert code == EXIT_OK
    out = capsys.readouterr().out
    assert out.startswith("metric,path_aware,exploration\n")
    assert (tmp_path / "c" / "summary.csv").exists()


class TestExitCodes:
    def test_unknown_config_key(self, tmp_path):
        config = tmp_path / "bad.cfg"
        config.write_text("colour=blue\n", encoding="utf-8")
        assert main(["run", "--config", str(config)]) == EXIT_CONFIG

    def test_malformed_config_line(self, tmp_path):
        config = tmp_path / "bad.cfg"
        config.write_text("width 24\n", encoding="utf-8")
        assert main(["run", "--config", str(config)]) == EXIT_CONFIG

    def test_missing_config_file(self, tmp_path):
        assert main(["run", "--config", str(tmp_path / "none.cfg")]) == EXIT_CONFIG

    def test_invalid_parameter(self):
        assert main(["run", "--obstacle-fraction", "1.5"]) == EXIT_CONFIG

    def test_unknown_planner(self):
        assert main(["run", *SMALL, "--planner", "teleport"]) == EXIT_CONFIG

    def test_campaign_needs_two_seeds(self):
        assert main(["campaign", *SMALL, "--seeds", "0"]) == EXIT_CONFIG

    def test_generate_needs_out(self):
        assert main(["generate", *SMALL]) == EXIT_CONFIG

    def test_missing_scene(self, tmp_path):
        assert main(["oracle", "--scene", str(tmp_path / "none")]) == EXIT_SCENE

    def test_corrupt_scene(self, tmp_path):
        bad = tmp_path / "bad"
        bad.mkdir()
        (bad / "meta.json").write_text("{", encoding="utf-8")
        assert main(["oracle", "--scene", str(bad)]) == EXIT_SCENE

    def test_unsatisfiable_generation(self):
        assert main(["oracle", "--width", "8", "--height", "8", "--obstacle-fraction", "0.9"]) == EXIT_SCENE

    def test_bad_flag_value_is_usage_error(self):
        with pytest.raises(SystemExit) as info:
            main(["run", "--width", "wide"])
        assert info.value.code == EXIT_CONFIG
