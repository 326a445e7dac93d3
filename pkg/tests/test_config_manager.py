"""Config merging, identity, variants and the bundled config library."""

import json

import pytest

from core.config_library import ConfigLibrary
from core.config_manager import (
    DEFAULT_CONFIG,
    OUTPUT_ROOT_ENV,
    ConfigManager,
    deep_merge,
    get_output_root,
    read_json,
)
from core.errors import ConfigError
from core.simulation import EpisodeConfig
from core.sweep import SweepSpec


class TestMerge:

    def test_defaults_fill_missing(self):
        config = ConfigManager({"dt": 0.002})
        assert config.get("dt") == 0.002
        assert config.get("controller.gains.kappa_mu") == DEFAULT_CONFIG["controller"]["gains"]["kappa_mu"]

    def test_unknown_key(self):
        with pytest.raises(ConfigError) as info:
            ConfigManager({"controller": {"gains": {"kappa_x": 1.0}}})
        assert info.value.key == "controller.gains.kappa_x"

    def test_plant_params_are_open(self):
        merged = deep_merge(DEFAULT_CONFIG, {"plant": {"params": {"k1": 4.0}}})
        assert merged["plant"]["params"] == {"k1": 4.0}

    def test_base_untouched(self):
        base = {"a": {"b": 1}}
        deep_merge(base, {"a": {"b": 2}})
        assert base == {"a": {"b": 1}}

    def test_dotted_set(self):
        config = ConfigManager()
        config.set("controller.gains.kappa_a", 12.0)
        config.set("plant.params.payload_mass", 2.0)
        assert config.get("controller.gains.kappa_a") == 12.0
        assert config.get("plant.params.payload_mass") == 2.0
        with pytest.raises(ConfigError):
            config.set("controller.gains.kappa_x", 1.0)

    def test_reset(self):
        config = ConfigManager({"seed": 9})
        config.reset()
        assert config.get("seed") == 0


class TestIdentity:

    def test_hash_ignores_key_order(self):
        a = ConfigManager({"seed": 1, "dt": 0.002})
        b = ConfigManager({"dt": 0.002, "seed": 1})
        assert a.config_hash() == b.config_hash()
        assert a.config_hash() != ConfigManager({"seed": 2, "dt": 0.002}).config_hash()

    def test_save_and_reload(self, tmp_path):
        config = ConfigManager({"seed": 5, "controller": {"beta": 3.0}})
        path = tmp_path / "saved.json"
        config.save(path)
        assert ConfigManager.from_file(path).normal_form() == config.normal_form()

    def test_non_finite_rejected(self):
        with pytest.raises(ValueError):
            ConfigManager({"dt": float("nan")}).normal_form()


class TestVariants:

    def test_no_variants(self):
        [(label, data)] = ConfigManager({"seed": 2}).variants()
        assert label is None
        assert "variants" not in data

    def test_overrides_applied(self):
        config = ConfigManager({"variants": [
            {"label": "slow", "overrides": {"controller": {"beta": 1.0}}},
            {"label": "fast", "overrides": {"controller": {"beta": 4.0}}},
        ]})
        expanded = dict(config.variants())
        assert expanded["slow"]["controller"]["beta"] == 1.0
        assert expanded["fast"]["controller"]["beta"] == 4.0

    def test_duplicate_label(self):
        config = ConfigManager({"variants": [{"label": "x"}, {"label": "x"}]})
        with pytest.raises(ConfigError):
            config.variants()

    def test_validate_names_variant(self):
        config = ConfigManager({"variants": [{"label": "broken", "overrides": {"dt": -1.0}}]})
        with pytest.raises(ConfigError) as info:
            config.validate()
        assert info.value.context["variant"] == "broken"


class TestFiles:

    def test_invalid_json(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text("{not json", encoding="utf-8")
        with pytest.raises(ConfigError):
            read_json(path)

    def test_not_an_object(self, tmp_path):
        path = tmp_path / "list.json"
        path.write_text(json.dumps([1, 2]), encoding="utf-8")
        with pytest.raises(ConfigError):
            read_json(path)

    def test_missing(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            read_json(tmp_path / "absent.json")

    def test_output_root(self, monkeypatch, tmp_path):
        monkeypatch.setenv(OUTPUT_ROOT_ENV, str(tmp_path))
        assert get_output_root() == tmp_path
        monkeypatch.delenv(OUTPUT_ROOT_ENV)
        monkeypatch.chdir(tmp_path)
        assert get_output_root().resolve() == (tmp_path / "runs").resolve()


class TestLibrary:

    def test_bundled_names(self):
        names = ConfigLibrary().get_names()
        for expected in ("msd_estimation_beta", "msd_closed_loop_beta", "arm_learning_modes", "arm_sweep_pi_mu", "arm_sweep_beta", "arm_sweep_payload"):
            assert expected in names

    def test_resolve(self):
        library = ConfigLibrary()
        assert library.resolve("msd_estimation_beta") == library.get_path("msd_estimation_beta")
        with pytest.raises(FileNotFoundError):
            library.resolve("no_such_config")

    @pytest.mark.parametrize("name", ConfigLibrary().get_names())
    def test_every_bundled_config_validates(self, name):
        library = ConfigLibrary()
        path = library.get_path(name)
        if library.is_sweep(name):
            data = read_json(path)
            base = ConfigManager.from_file(library.resolve(data["base"], path.parent))
            for job in SweepSpec.from_dict(data, base).episodes():
                EpisodeConfig.from_dict(job["config"], index=job["value_index"])
        else:
            ConfigManager.from_file(path).validate()
        assert library.description(name)
