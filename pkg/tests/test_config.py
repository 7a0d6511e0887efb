"""Tests for YAML configuration loading and validation."""
import pytest
import yaml

from specsmith.config import (
    EndpointSettings,
    PipelineConfig,
    VerifierSettings,
    config_from_dict,
    load_config,
    load_guidance_file,
)
from specsmith.errors import ConfigError
from specsmith.mutation import ALL_KINDS, MutationKind
from specsmith.verifier import DEFAULT_RULES, FailureCategory


def write_yaml(tmp_path, data, name="config.yaml"):
    path = tmp_path / name
    path.write_text(yaml.safe_dump(data), encoding="utf-8")
    return str(path)


class TestDefaults:
    def test_no_path_yields_defaults(self):
        config = load_config(None)
        assert config == PipelineConfig()

    def test_default_values(self):
        config = PipelineConfig()
        assert config.endpoint.temperature == 0.4
        assert config.endpoint.max_rounds == 10
        assert config.endpoint.shot_count == 4
        assert config.endpoint.mode == "live"
        assert config.endpoint.shot_selection == "corpus-order"
        assert config.verifier.adapter == "trace"
        assert config.verifier.timeout_seconds == 1800.0
        assert config.verifier.rules == DEFAULT_RULES
        assert config.weights.comparative == -1
        assert config.weights.logical == -2
        assert config.weights.arithmetic == -4
        assert config.weights.predicative == -4
        assert config.mutation.kinds == ALL_KINDS
        assert config.mutation.variant_cap == 4096
        assert config.strategy.name == "heuristic"
        assert config.budgets.pipeline_seconds == 1800.0
        assert config.paths.output_dir == "runs"
        assert config.report.deterministic_clock is False

    def test_empty_file_yields_defaults(self, tmp_path):
        path = tmp_path / "empty.yaml"
        path.write_text("", encoding="utf-8")
        assert load_config(str(path)) == PipelineConfig()


class TestLoading:
    def test_partial_sections_keep_other_defaults(self, tmp_path):
        path = write_yaml(tmp_path, {"endpoint": {"model": "m9", "temperature": 0.1}})
        config = load_config(path)
        assert config.endpoint.model == "m9"
        assert config.endpoint.temperature == 0.1
        assert config.endpoint.max_rounds == 10
        assert config.verifier == VerifierSettings()

    def test_full_document(self, tmp_path):
        path = write_yaml(
            tmp_path,
            {
                "endpoint": {
                    "base_url": "http://10.0.0.5:9000/v1",
                    "model": "coder",
                    "temperature": 0.2,
                    "max_rounds": 6,
                    "shot_count": 2,
                    "api_key_env": "MY_KEY",
                    "mode": "scripted",
                    "script": "responses.json",
                    "shot_selection": "random",
                    "shot_seed": 7,
                },
                "verifier": {
                    "adapter": "mock",
                    "mock_truth": ["//@ requires x >= 0;"],
                    "failures_per_call": "one",
                },
                "weights": {"comparative": -2, "logical": -3},
                "mutation": {"kinds": ["comparative", "logical"], "variant_cap": 99},
                "strategy": {"name": "random", "seed": 11},
                "budgets": {"pipeline_seconds": 30},
                "paths": {"output_dir": "out", "corpus_dir": "corpus"},
                "report": {"deterministic_clock": True},
            },
        )
        config = load_config(path)
        assert config.endpoint.base_url == "http://10.0.0.5:9000/v1"
        assert config.endpoint.shot_selection == "random"
        assert config.endpoint.shot_seed == 7
        assert config.verifier.adapter == "mock"
        assert config.verifier.mock_truth == ("//@ requires x >= 0;",)
        assert config.weights.comparative == -2
        assert config.weights.logical == -3
        assert config.weights.arithmetic == -4  # untouched default
        assert config.mutation.kinds == frozenset(
            {MutationKind.COMPARATIVE, MutationKind.LOGICAL}
        )
        assert config.mutation.variant_cap == 99
        assert config.strategy.name == "random"
        assert config.strategy.seed == 11
        assert config.budgets.pipeline_seconds == 30.0
        assert config.paths.corpus_dir == "corpus"
        assert config.report.deterministic_clock is True

    def test_int_promotes_to_float(self, tmp_path):
        path = write_yaml(tmp_path, {"endpoint": {"temperature": 1}})
        config = load_config(path)
        assert config.endpoint.temperature == 1.0
        assert isinstance(config.endpoint.temperature, float)

    def test_custom_rules(self, tmp_path):
        path = write_yaml(
            tmp_path,
            {
                "verifier": {
                    "adapter": "mock",
                    "mock_truth": [],
                    "rules": [
                        {"pattern": "cannot establish", "category": "unprovable-postcondition"},
                        {"pattern": "parse", "category": "syntax-error"},
                    ],
                }
            },
        )
        config = load_config(path)
        assert len(config.verifier.rules) == 2
        assert config.verifier.rules[0].category is FailureCategory.UNPROVABLE_POSTCONDITION

    def test_missing_file_raises_oserror(self, tmp_path):
        with pytest.raises(OSError):
            load_config(str(tmp_path / "absent.yaml"))

    def test_invalid_yaml(self, tmp_path):
        path = tmp_path / "bad.yaml"
        path.write_text("endpoint: [unclosed", encoding="utf-8")
        with pytest.raises(ConfigError, match="not valid YAML"):
            load_config(str(path))

    def test_non_mapping_root(self, tmp_path):
        path = tmp_path / "list.yaml"
        path.write_text("- a\n- b\n", encoding="utf-8")
        with pytest.raises(ConfigError, match="root must be a mapping"):
            load_config(str(path))


class TestRejection:
    def test_unknown_section(self):
        with pytest.raises(ConfigError, match="unknown configuration key: verifiers"):
            config_from_dict({"verifiers": {}})

    def test_unknown_key_names_dotted_path(self):
        with pytest.raises(
            ConfigError, match="unknown configuration key: endpoint.temprature"
        ):
            config_from_dict({"endpoint": {"temprature": 0.4}})

    def test_section_must_be_mapping(self):
        with pytest.raises(ConfigError, match="endpoint: expected a mapping"):
            config_from_dict({"endpoint": [1, 2]})

    def test_bool_is_not_an_int(self):
        with pytest.raises(ConfigError, match="endpoint.max_rounds: expected an integer"):
            config_from_dict({"endpoint": {"max_rounds": True}})

    def test_string_is_not_a_float(self):
        with pytest.raises(ConfigError, match="endpoint.temperature: expected float"):
            config_from_dict({"endpoint": {"temperature": "hot"}})

    def test_int_is_not_a_string(self):
        with pytest.raises(ConfigError, match="endpoint.model: expected str"):
            config_from_dict({"endpoint": {"model": 5}})

    def test_kinds_must_be_known(self):
        with pytest.raises(ConfigError, match="mutation.kinds: 'spooky' is not one of"):
            config_from_dict({"mutation": {"kinds": ["comparative", "spooky"]}})

    def test_kinds_must_be_non_empty_list(self):
        with pytest.raises(ConfigError, match="mutation.kinds: expected a non-empty list"):
            config_from_dict({"mutation": {"kinds": []}})

    def test_rules_entry_shape(self):
        with pytest.raises(ConfigError, match=r"verifier.rules\[0\]"):
            config_from_dict({"verifier": {"rules": [{"pattern": "x"}]}})

    def test_rules_unknown_category(self):
        with pytest.raises(ConfigError, match=r"verifier.rules\[1\].category"):
            config_from_dict(
                {
                    "verifier": {
                        "rules": [
                            {"pattern": "a", "category": "syntax-error"},
                            {"pattern": "b", "category": "bogus"},
                        ]
                    }
                }
            )

    def test_mock_truth_must_be_string_list(self):
        with pytest.raises(ConfigError, match="mock_truth: expected a list"):
            config_from_dict({"verifier": {"adapter": "mock", "mock_truth": [1]}})


class TestValidation:
    def test_temperature_bounds_checked(self):
        with pytest.raises(ConfigError, match="endpoint: temperature"):
            config_from_dict({"endpoint": {"temperature": 3.0}})

    def test_mode_values(self):
        with pytest.raises(ConfigError, match="endpoint.mode: must be live or scripted"):
            config_from_dict({"endpoint": {"mode": "replay"}})

    def test_scripted_mode_loads_without_script(self):
        # The script path is only demanded when the chat client is built,
        # so configs meant for offline subcommands still load.
        config = config_from_dict({"endpoint": {"mode": "scripted"}})
        assert config.endpoint.script is None

    def test_shot_selection_values(self):
        with pytest.raises(
            ConfigError, match="shot_selection: must be corpus-order or random"
        ):
            config_from_dict({"endpoint": {"shot_selection": "shuffled"}})

    def test_adapter_values(self):
        with pytest.raises(ConfigError, match="verifier.adapter: must be exec"):
            config_from_dict({"verifier": {"adapter": "smt"}})

    def test_adapter_fields_checked_at_build_time(self):
        # Adapter-specific required fields are enforced when the verifier
        # is constructed, not at load time (see build_verifier tests).
        config = config_from_dict({"verifier": {"adapter": "exec"}})
        assert config.verifier.command is None
        config = config_from_dict({"verifier": {"adapter": "mock"}})
        assert config.verifier.mock_truth is None

    def test_failures_per_call_values(self):
        with pytest.raises(ConfigError, match="failures_per_call: must be one or all"):
            config_from_dict(
                {
                    "verifier": {
                        "adapter": "mock",
                        "mock_truth": [],
                        "failures_per_call": "some",
                    }
                }
            )

    def test_variant_cap_positive(self):
        with pytest.raises(ConfigError, match="variant_cap: must be at least 1"):
            config_from_dict({"mutation": {"variant_cap": 0}})

    def test_strategy_names(self):
        with pytest.raises(ConfigError, match="strategy.name: must be heuristic or random"):
            config_from_dict({"strategy": {"name": "greedy"}})

    def test_pipeline_seconds_positive(self):
        with pytest.raises(ConfigError, match="pipeline_seconds: must be positive"):
            config_from_dict({"budgets": {"pipeline_seconds": 0}})


class TestEffectiveFailuresPerCall:
    def test_exec_defaults_to_one(self):
        assert VerifierSettings(adapter="exec").effective_failures_per_call() == "one"

    def test_trace_defaults_to_all(self):
        assert VerifierSettings(adapter="trace").effective_failures_per_call() == "all"

    def test_mock_defaults_to_all(self):
        assert VerifierSettings(adapter="mock").effective_failures_per_call() == "all"

    def test_explicit_value_wins(self):
        settings = VerifierSettings(adapter="exec", failures_per_call="all")
        assert settings.effective_failures_per_call() == "all"


class TestEndpointBridge:
    def test_settings_map_onto_chat_config(self):
        settings = EndpointSettings(model="m", max_rounds=3, shot_count=1)
        cfg = settings.to_endpoint_config()
        assert cfg.model == "m"
        assert cfg.max_rounds == 3
        assert cfg.shot_count == 1

    def test_mode_fields_stay_behind(self):
        cfg = EndpointSettings(mode="scripted", script="x.json").to_endpoint_config()
        assert not hasattr(cfg, "mode")
        assert not hasattr(cfg, "script")


class TestGuidanceFile:
    def test_loads_categories(self, tmp_path):
        path = write_yaml(
            tmp_path,
            {
                "unprovable-postcondition": "weaken the claim",
                "type-error": "check operand types",
            },
            name="guidance.yaml",
        )
        guidance = load_guidance_file(path)
        assert guidance == {
            FailureCategory.UNPROVABLE_POSTCONDITION: "weaken the claim",
            FailureCategory.TYPE_ERROR: "check operand types",
        }

    def test_unknown_category(self, tmp_path):
        path = write_yaml(tmp_path, {"weird": "advice"}, name="guidance.yaml")
        with pytest.raises(ConfigError, match="'weird' is not one of"):
            load_guidance_file(path)

    def test_non_string_guidance(self, tmp_path):
        path = write_yaml(
            tmp_path, {"syntax-error": ["not", "a", "string"]}, name="guidance.yaml"
        )
        with pytest.raises(ConfigError, match="must be a string"):
            load_guidance_file(path)

    def test_non_mapping_document(self, tmp_path):
        path = tmp_path / "guidance.yaml"
        path.write_text("- just\n- a\n- list\n", encoding="utf-8")
        with pytest.raises(ConfigError, match="expected a mapping"):
            load_guidance_file(path)
