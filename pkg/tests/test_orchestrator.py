"""Command line: parsing, dispatch, exit codes and run-config resolution."""

import json

import pytest

from src.errors import ConfigError
from src.orchestrator.loader import build_parser, load_command_configs, service_name_to_class_name
from src.orchestrator.main import main
from src.orchestrator.run_config import PresetCatalog, load_run_config, resolve_seed
from src.settings import REPO_ROOT, Settings
from src.trainer.loop import FINAL_CHECKPOINT

COMMANDS = REPO_ROOT / "config" / "commands"


@pytest.fixture
def small_config(tmp_path):
    path = tmp_path / "run.json"
    path.write_text(
        json.dumps(
            {
                "scene": {"height": 32, "width": 32},
                "train": {"total_steps": 2, "warmup_steps": 1, "checkpoint_every": 0, "log_wall_time": False},
            }
        )
    )
    return path


def test_every_command_is_declared():
    commands = load_command_configs(COMMANDS)
    assert sorted(commands) == ["eval", "gen-data", "mask", "report", "sweep", "train"]
    assert service_name_to_class_name("confmask") == "ConfmaskService"


def test_help_lists_flags_and_defaults(capsys):
    with pytest.raises(SystemExit) as exit_info:
        main(["mask", "--help"])
    assert exit_info.value.code == 0
    out = capsys.readouterr().out
    for flag in ("--probmap", "--confmap", "--t-u", "--t-r", "--connectivity", "--max-growth-rounds", "--force"):
        assert flag in out
    assert "0.2" in out and "0.99999" in out


def test_train_help_lists_presets(capsys):
    with pytest.raises(SystemExit):
        main(["train", "--help"])
    out = capsys.readouterr().out
    assert "hard-threshold" in out and "synthia" in out


def test_missing_command_is_a_usage_error():
    with pytest.raises(SystemExit) as exit_info:
        main([])
    assert exit_info.value.code == 2


def test_gen_data_refuses_existing_output_without_force(tmp_path, small_config, capsys):
    out = tmp_path / "data"
    argv = ["gen-data", "--config", str(small_config), "--out", str(out), "--count-source", "2", "--count-target", "2"]
    assert main(argv) == 0
    first = sorted(p.read_bytes() for p in out.rglob("*.udas"))
    capsys.readouterr()

    assert main(argv) == 1
    assert capsys.readouterr().err.strip().splitlines()[-1].startswith("error[output-exists]: ")

    assert main(argv + ["--force"]) == 0
    assert sorted(p.read_bytes() for p in out.rglob("*.udas")) == first


def test_config_errors_name_the_field(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"train": {"total_steps": 10, "warmup_steps": 20}}))
    argv = ["train", "--config", str(bad), "--source", "s", "--target", "t", "--out", str(tmp_path / "run")]
    assert main(argv) == 1
    err = capsys.readouterr().err.strip().splitlines()[-1]
    assert err.startswith("error[config]: ")
    assert "warmup_steps" in err

    bad.write_text(json.dumps({"train": {"learning_rate": 0.1}}))
    assert main(argv) == 1
    assert "train.learning_rate" in capsys.readouterr().err


def test_invalid_environment_is_a_config_error(monkeypatch, capsys):
    monkeypatch.setenv("UDA_FORGE_SEED", "-3")
    assert main(["mask", "--help"]) == 1
    assert capsys.readouterr().err.startswith("error[config]: ")


def test_missing_checkpoint_fails_cleanly(tmp_path, tiny_data, capsys):
    argv = [
        "eval",
        "--checkpoint", str(tmp_path / "nope.udac"),
        "--dataset", str(tiny_data / "target_val"),
        "--out", str(tmp_path / "eval"),
    ]
    assert main(argv) == 1
    assert capsys.readouterr().err.strip().splitlines()[-1].startswith("error[checkpoint]: ")


def test_generate_train_evaluate(tmp_path, small_config, capsys):
    data, run, report = tmp_path / "data", tmp_path / "run", tmp_path / "report"
    assert main([
        "gen-data", "--config", str(small_config), "--out", str(data),
        "--count-source", "2", "--count-target", "2", "--count-eval", "2",
    ]) == 0
    assert main([
        "train", "--config", str(small_config), "--source", str(data / "source"),
        "--target", str(data / "target"), "--out", str(run), "--preset", "hard-threshold", "--seed", "5",
    ]) == 0
    assert (run / FINAL_CHECKPOINT).is_file()
    saved = json.loads((run / "run_config.json").read_text())
    assert saved["train"]["seed"] == 5
    assert saved["train"]["ablation"]["enable_region_growing"] is False

    assert main([
        "eval", "--checkpoint", str(run / FINAL_CHECKPOINT),
        "--dataset", str(data / "target_val"), "--out", str(report),
    ]) == 0
    assert "mIoU" in capsys.readouterr().out
    assert (report / "metrics.json").is_file()
    assert (report / "loss_curves.svg").is_file()


def test_presets_and_recipes():
    catalog = PresetCatalog.load(REPO_ROOT / "config")
    assert set(catalog.presets) == {
        "supervised",
        "adversarial-only",
        "hard-threshold",
        "no-disc-weighting",
        "no-region-growing",
        "no-class-weighting",
        "full",
    }
    with pytest.raises(ConfigError):
        catalog.preset("everything")

    cfg = load_run_config(None, Settings(), preset="supervised", recipe="synthia")
    assert not cfg.train.ablation.needs_discriminator
    assert (cfg.train.loss_weights.w_t, cfg.train.loss_weights.w_prime) == (0.001, 0.1)


def test_seed_precedence(monkeypatch):
    assert resolve_seed(None, Settings(), 11) == 11
    monkeypatch.setenv("UDA_FORGE_SEED", "22")
    assert resolve_seed(None, Settings(), 11) == 22
    assert resolve_seed(33, Settings(), 11) == 33
    assert load_run_config(None, Settings()).train.seed == 22
    with pytest.raises(ConfigError):
        resolve_seed(-1, Settings(), 11)


def test_parser_defaults_follow_command_files():
    parser = build_parser(load_command_configs(COMMANDS))
    args = parser.parse_args(["mask", "--probmap", "p", "--confmap", "c", "--out", "o"])
    assert (args.t_u, args.t_r, args.connectivity, args.max_growth_rounds, args.force) == (0.2, 0.99999, 4, None, False)
