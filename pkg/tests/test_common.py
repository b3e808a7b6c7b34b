import pydantic
import pytest

from refdense import settings
from refdense.controller.common import ensure_empty_dir, load_run_config, parse_flag_overrides
from refdense.domain import interfaces
from refdense.domain.errors import ConfigurationError, DivergenceError, SchemaError, exit_code_for
from refdense.dto.config_dto import AblationFlags, ModelConfig
from refdense.dto.report_dto import ConditionalMetrics, EvalReport
from refdense.dto.vocabulary_dto import ActionVocabulary
from refdense.main import main
from refdense.prompts import class_prompt, pct
from refdense.service.reporting import render_eval, write_eval_csv
from refdense.settings import Settings, get_settings, resolve_threads


class TestPrompts:
    def test_class_prompt(self):
        assert class_prompt("a cup") == "a photo of a cup"

    def test_pct(self):
        assert pct(0.4567) == "45.7"
        assert pct(None) == "-"


class TestEvalRendering:
    @pytest.fixture
    def report(self):
        return EvalReport(
            class_names=["a", "b"],
            per_class_ap=[0.5, None],
            mAP=0.5,
            skipped_classes=1,
            conditional=[ConditionalMetrics(tau=0, mAP_ac=0.25, F1_ac=0.5, P_ac=1.0, R_ac=0.125, n_pairs=1, skipped_pairs=1)],
            n_sequences=2,
            n_frames=40,
        )

    def test_text(self, report):
        text = render_eval(report)
        assert "2 sequences, 40 frames" in text
        assert "per-frame mAP(%) : 50.0" in text
        assert "scored 1 classes, skipped 1" in text
        assert "mAP_ac   25.0" in text

    def test_csv(self, report, tmp_path):
        path = tmp_path / "eval.csv"
        write_eval_csv(report, path)
        lines = path.read_text(encoding="utf-8").splitlines()
        assert lines[0] == "section,key,metric,value"
        assert "per_class,b,AP," in lines
        assert "conditional,tau=0,R_ac,0.125000" in lines


class TestFlags:
    def test_overrides(self):
        flags = parse_flag_overrides(["colv=off", "cross-attention=off", "sub_labels=false"], AblationFlags())
        assert not flags.use_colv and not flags.use_cross_attention
        assert not flags.use_sub_labels_ent and not flags.use_sub_labels_mot
        assert not flags.single_stream_baseline

    def test_single_family(self):
        flags = parse_flag_overrides(["sub_mot=off"], AblationFlags())
        assert flags.use_sub_labels_ent and not flags.use_sub_labels_mot

    @pytest.mark.parametrize("item", ["colv", "colv=maybe", "dropout=off"])
    def test_rejects_bad_entries(self, item):
        with pytest.raises(ConfigurationError):
            parse_flag_overrides([item], AblationFlags())


class TestConfig:
    def test_default_run_config(self):
        cfg = load_run_config(None)
        assert cfg.train.lr == 1e-4 and cfg.train.epochs == 40
        assert cfg.train.eval.windows == [0, 20]

    def test_invalid_json(self, tmp_path):
        path = tmp_path / "run.json"
        path.write_text("{", encoding="utf-8")
        with pytest.raises(SchemaError):
            load_run_config(path)

    @pytest.mark.parametrize("update", [{"hidden": 10, "heads": 4}, {"conv_width": 4}, {"t_train": 20, "scales": 3}])
    def test_model_config_validation(self, update):
        with pytest.raises(pydantic.ValidationError):
            ModelConfig(**update)


class TestCliHelpers:
    def test_empty_dir_check(self, tmp_path):
        ensure_empty_dir(tmp_path / "missing", force=False)
        (tmp_path / "run_manifest.gen-data.json").write_text("{}", encoding="utf-8")
        ensure_empty_dir(tmp_path, force=False)
        (tmp_path / "other").write_text("", encoding="utf-8")
        with pytest.raises(ConfigurationError):
            ensure_empty_dir(tmp_path, force=False)
        ensure_empty_dir(tmp_path, force=True)

    def test_exit_codes(self):
        assert exit_code_for(SchemaError("x")) == 2
        assert exit_code_for(FileNotFoundError("x")) == 2
        assert exit_code_for(DivergenceError("x")) == 3
        assert exit_code_for(RuntimeError("x")) == 3

    def test_thread_resolution(self):
        assert resolve_threads(4) == 4
        assert resolve_threads(0) == 1
        assert resolve_threads(None) >= 1


class TestSettings:
    @pytest.fixture
    def fresh_settings(self):
        get_settings.cache_clear()
        yield
        get_settings.cache_clear()

    def test_env_values_are_coerced(self, monkeypatch, fresh_settings):
        monkeypatch.setattr(settings, "REFDENSE_THREADS", "3")
        monkeypatch.setattr(settings, "REFDENSE_LOG_LEVEL", "warning")
        s = get_settings()
        assert s.threads == 3 and s.log_level == "WARNING"
        assert resolve_threads(None) == 3

    @pytest.mark.parametrize("name, value", [("REFDENSE_THREADS", "four"), ("REFDENSE_THREADS", "0"), ("REFDENSE_LOG_LEVEL", "loud")])
    def test_bad_env_value_is_configuration_error(self, monkeypatch, fresh_settings, name, value):
        monkeypatch.setattr(settings, name, value)
        with pytest.raises(ConfigurationError, match="REFDENSE_"):
            get_settings()

    def test_cli_rejects_bad_env(self, monkeypatch, fresh_settings, capsys):
        monkeypatch.setattr(settings, "REFDENSE_THREADS", "many")
        assert main(["report", "--input", "missing.json"]) == 2
        assert "REFDENSE_" in capsys.readouterr().err

    def test_frozen_models(self, small_vocab):
        with pytest.raises(pydantic.ValidationError):
            Settings().threads = 2
        assert isinstance(small_vocab, ActionVocabulary)
        with pytest.raises(pydantic.ValidationError):
            small_vocab.actions = []


class TestInterfaces:
    def test_module_doc_names_every_port(self):
        ports = [name for name in vars(interfaces) if name.endswith("IF")]
        assert sorted(ports) == ["CheckpointStoreIF", "FeatureProviderIF", "PredictorIF"]
        assert all(f"``{name}``" in interfaces.__doc__ for name in ports)
