import pytest
import yaml

from src import __version__
from src.config.config_manager import (
    ConfigManager,
    ModelConfig,
    build_topology,
    model_config_from_dict,
)
from src.utils.errors import ConfigurationError


@pytest.fixture
def empty_yaml(tmp_path):
    path = tmp_path / "empty.yaml"
    path.write_text("", encoding="utf-8")
    return path


class TestLoading:

    def test_code_defaults_are_full_scale(self, empty_yaml):
        cfg = ConfigManager(yaml_path=empty_yaml, use_env=False)
        assert (cfg.model.hidden_width, cfg.model.inducing, cfg.model.n_features) == (256, 1024, 1024)
        assert cfg.model.lr == 1e-2 and cfg.model.samples == 1
        assert cfg.model.jitter_schedule == [1e-6, 1e-5, 1e-4]

    def test_project_file_is_desk_scale(self):
        cfg = ConfigManager(use_env=False)
        assert (cfg.model.hidden_width, cfg.model.inducing) == (16, 64)
        assert cfg.model.jitter_schedule == [1e-6, 1e-5, 1e-4]
        assert cfg.model.lr == pytest.approx(1e-2)

    def test_yaml_values(self, run_config):
        cfg = run_config(model={"lr": "1e-3", "kernel": "rbf"})
        assert cfg.model.lr == pytest.approx(1e-3)
        assert cfg.model.kernel == "rbf"
        assert cfg.data.frames == 5

    def test_missing_explicit_file(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            ConfigManager(yaml_path=tmp_path / "nope.yaml", use_env=False)

    def test_unknown_key_in_file(self, run_config):
        with pytest.raises(ConfigurationError) as info:
            run_config(model={"bogus": 1})
        assert info.value.field == "model.bogus"

    def test_unknown_section(self, run_config):
        with pytest.raises(ConfigurationError) as info:
            run_config(extras={"a": 1})
        assert info.value.field == "extras"

    def test_environment(self, config_file, monkeypatch, tmp_path):
        monkeypatch.setenv("SRUDGP_SEED", "42")
        monkeypatch.setenv("SRUDGP_OUTPUT_DIR", str(tmp_path / "env-run"))
        cfg = ConfigManager(yaml_path=config_file())
        assert cfg.model.seed == 42
        assert cfg.output_dir() == tmp_path / "env-run"

    def test_environment_ignored_on_request(self, config_file, monkeypatch):
        monkeypatch.setenv("SRUDGP_SEED", "42")
        assert ConfigManager(yaml_path=config_file(), use_env=False).model.seed == 0


class TestOverrides:

    def test_assignments_are_typed(self, run_config):
        cfg = run_config()
        cfg.apply_assignments([
            "model.layers=4",
            "model.jitter_schedule=[1e-8, 1e-6]",
            "model.train_v=true",
            "model.topology=[svgp, sru-dgp, ff-nn]",
            "data.noise_sd=0",
        ])
        assert cfg.model.layers == 4
        assert cfg.model.jitter_schedule == [1e-8, 1e-6]
        assert cfg.model.train_v is True
        assert cfg.model.topology == ["svgp", "sru-dgp", "ff-nn"]
        assert cfg.data.noise_sd == 0.0 and isinstance(cfg.data.noise_sd, float)

    def test_none_values_skipped(self, run_config):
        cfg = run_config()
        cfg.apply_overrides({"model.seed": None, "model.max_iters": 9})
        assert cfg.model.seed == 0 and cfg.model.max_iters == 9

    def test_unknown_dotted_key(self, run_config):
        with pytest.raises(ConfigurationError) as info:
            run_config().set_value("model.depth", 3)
        assert info.value.field == "model.depth"

    def test_assignment_without_equals(self, run_config):
        with pytest.raises(ConfigurationError):
            run_config().apply_assignments(["model.layers"])

    def test_fractional_integer(self, run_config):
        with pytest.raises(ConfigurationError) as info:
            run_config().set_value("model.layers", "3.5")
        assert info.value.field == "model.layers"


class TestValidation:

    def test_valid(self, run_config):
        assert run_config().validate(require_generator=True)

    @pytest.mark.parametrize("key,value", [
        ("model.inducing", 0),
        ("model.lr", 0.0),
        ("model.noise_variance", -1.0),
        ("model.kernel", "matern"),
        ("data.frames", 0),
    ])
    def test_rejects(self, run_config, key, value):
        cfg = run_config()
        cfg.set_value(key, value)
        with pytest.raises(ConfigurationError) as info:
            cfg.validate()
        assert info.value.field == key

    def test_recurrent_top_layer(self, run_config):
        cfg = run_config(model={"topology": ["svgp", "sru-dgp"]})
        with pytest.raises(ConfigurationError) as info:
            cfg.validate()
        assert info.value.field == "model.topology"

    def test_generator_required(self, run_config):
        cfg = run_config(data={"generator": None})
        assert cfg.validate()
        with pytest.raises(ConfigurationError) as info:
            cfg.validate(require_generator=True)
        assert info.value.field == "data.generator"


class TestDerived:

    @pytest.mark.parametrize("arch,layers,expected", [
        ("ff-dgp", 3, ["svgp", "svgp", "svgp"]),
        ("sru-dgp", 3, ["svgp", "sru-dgp", "svgp"]),
        ("sru-dgp", 5, ["svgp", "sru-dgp", "sru-dgp", "sru-dgp", "svgp"]),
        ("sru-nn", 4, ["ff-nn", "sru-nn", "sru-nn", "ff-nn"]),
        ("sru-dgp", 2, ["svgp", "svgp"]),
    ])
    def test_topology(self, arch, layers, expected):
        assert build_topology(arch, layers) == expected

    def test_topology_errors(self):
        with pytest.raises(ConfigurationError):
            build_topology("lstm", 3)
        with pytest.raises(ConfigurationError):
            build_topology("sru-dgp", 1)

    def test_elbo_level(self, run_config):
        assert run_config(model={"arch": "ff-dgp"}).elbo_level() == "frame"
        assert run_config(model={"arch": "sru-dgp"}).elbo_level() == "utterance"
        assert run_config(model={"arch": "ff-dgp", "elbo_level": "utterance"}).elbo_level() == "utterance"

    def test_split_paths(self, run_config, tmp_path):
        cfg = run_config(data={"test_path": str(tmp_path / "other.csv")})
        assert cfg.split_path("train") == tmp_path / "data" / "train.csv"
        assert cfg.split_path("test") == tmp_path / "other.csv"

    def test_write_resolved(self, run_config, tmp_path):
        cfg = run_config()
        path = cfg.write_resolved(tmp_path / "out")
        payload = yaml.safe_load(path.read_text(encoding="utf-8"))
        assert payload["library_version"] == __version__
        assert payload["model"] == cfg.to_dict()["model"]

    def test_model_config_from_checkpoint_dict(self):
        cfg = model_config_from_dict({"arch": "sru-nn", "layers": 4, "topology": ["ff-nn"] * 2, "unknown": 1})
        assert isinstance(cfg, ModelConfig)
        assert (cfg.arch, cfg.layers) == ("sru-nn", 4)
