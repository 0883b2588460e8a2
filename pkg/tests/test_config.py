import json
import math

import pytest

from spincollapse import ConfigError
from spincollapse.config import (
    DEFAULT_GAMMAS,
    DEFAULT_INIT,
    RunConfig,
    parse_config,
)
from spincollapse.engine import DESK_SCHEDULE, PAPER_SCHEDULE


class TestDefaults:
    def test_empty_document_gives_baseline_setup(self):
        cfg = parse_config("", "ensemble")
        assert cfg.omega == 1.0
        assert cfg.gamma == 5.0
        assert cfg.init == DEFAULT_INIT
        assert cfg.init.population_plus == pytest.approx(0.75)
        assert cfg.detector.epsilon == 0.01
        assert cfg.detector.tau == pytest.approx(10 * (math.pi / 2 - math.asin(0.99)))
        assert cfg.horizon == pytest.approx(2 * math.pi)
        assert cfg.schedule == DESK_SCHEDULE
        assert cfg.n_trajectories == 10_000
        assert cfg.gammas == DEFAULT_GAMMAS

    def test_paper_preset(self):
        cfg = parse_config("schedule: {preset: paper}\n", "ensemble")
        assert cfg.schedule == PAPER_SCHEDULE
        assert cfg.schedule.fine_dt == 1e-7
        assert cfg.schedule.switch_time == 0.1
        assert cfg.schedule.coarse_dt == 1e-3
        assert cfg.n_trajectories == 100_000

    def test_paper_preset_n_overridable(self):
        cfg = parse_config("schedule: {preset: paper}\nn_trajectories: 50\n", "ensemble")
        assert cfg.n_trajectories == 50


class TestValidation:
    def test_negative_gamma_names_field(self):
        with pytest.raises(ConfigError, match="gamma"):
            parse_config("gamma: -1\n", "ensemble")

    def test_unknown_key_rejected_with_path(self):
        with pytest.raises(ConfigError, match="unknown key.*gama"):
            parse_config("gama: 3\n", "ensemble")

    def test_nested_unknown_key(self):
        with pytest.raises(ConfigError, match="detector.epsilonn"):
            parse_config("detector: {epsilonn: 0.1}\n", "ensemble")

    def test_epsilon_range(self):
        with pytest.raises(ConfigError, match="detector.epsilon"):
            parse_config("detector: {epsilon: 0.7}\n", "ensemble")

    def test_init_must_normalize(self):
        with pytest.raises(ConfigError, match="init"):
            parse_config("init: {alpha: [0, 0], beta: [0, 0]}\n", "ensemble")

    def test_malformed_yaml(self):
        with pytest.raises(ConfigError, match="malformed"):
            parse_config("gamma: [unclosed\n", "ensemble")

    def test_experiment_mismatch(self):
        with pytest.raises(ConfigError, match="experiment"):
            parse_config("experiment: sweep\n", "ensemble")

    def test_experiment_agreement_ok(self):
        cfg = parse_config("experiment: sweep\n", "sweep")
        assert cfg.experiment == "sweep"

    def test_schedule_preset_exclusive(self):
        with pytest.raises(ConfigError, match="preset"):
            parse_config("schedule: {preset: desk, fine_dt: 1e-5}\n", "ensemble")

    def test_explicit_schedule_needs_all_fields(self):
        with pytest.raises(ConfigError, match="schedule"):
            parse_config("schedule: {fine_dt: 1e-5}\n", "ensemble")

    def test_type_errors_name_paths(self):
        with pytest.raises(ConfigError, match="n_trajectories"):
            parse_config("n_trajectories: 10.5\n", "ensemble")
        with pytest.raises(ConfigError, match="gammas\\[1\\]"):
            parse_config("gammas: [5, bad]\n", "ensemble")


class TestOverrides:
    def test_flags_win_over_document(self):
        cfg = parse_config("gamma: 3\nn_trajectories: 7\n", "ensemble",
                           overrides={"gamma": 9.0, "n_trajectories": 11})
        assert cfg.gamma == 9.0
        assert cfg.n_trajectories == 11

    def test_preset_override_replaces_schedule(self):
        cfg = parse_config(
            "schedule: {fine_dt: 1e-5, switch_time: 0.0, coarse_dt: 1e-4}\n",
            "ensemble", overrides={"preset": "paper"})
        assert cfg.schedule == PAPER_SCHEDULE

    def test_none_overrides_ignored(self):
        cfg = parse_config("gamma: 3\n", "ensemble", overrides={"gamma": None})
        assert cfg.gamma == 3.0


class TestRoundTrip:
    def test_json_echo_is_valid_config(self):
        cfg = parse_config("gamma: 42\nmaster_seed: 77\n", "ensemble")
        blob = json.dumps(cfg.to_json_dict())
        cfg2 = parse_config(blob, "ensemble")
        assert cfg2.gamma == cfg.gamma
        assert cfg2.master_seed == cfg.master_seed
        assert cfg2.schedule == cfg.schedule
        assert cfg2.detector == cfg.detector
        assert cfg2.init == cfg.init
        assert cfg2.stride == cfg.stride

    def test_schema_accepts_echo(self):
        jsonschema = pytest.importorskip("jsonschema")
        import importlib.resources as res

        schema = json.loads(
            res.files("spincollapse").joinpath("schemas/config.schema.json").read_text()
        )
        cfg = parse_config("", "ensemble")
        jsonschema.validate(cfg.to_json_dict(), schema)

    def test_schema_rejects_unknown_key(self):
        jsonschema = pytest.importorskip("jsonschema")
        import importlib.resources as res

        schema = json.loads(
            res.files("spincollapse").joinpath("schemas/config.schema.json").read_text()
        )
        with pytest.raises(jsonschema.ValidationError):
            jsonschema.validate({"experiment": "ensemble", "bogus": 1}, schema)
