import json
import tempfile
from pathlib import Path

from django.conf import settings
from django.core.exceptions import ImproperlyConfigured
from django.test import override_settings

from .base_test import RHPLabTestCase
from rhplab.conf import DEFAULTS, FIXTURE, get_config, read_config_file
from rhplab.exceptions import ConfigError, LabError
from rhplab.syntax import Level
from rhplab.workers import configured_n_jobs, parallel_first, parallel_map, using_n_jobs


class TestRHPLabSettingsCompat(RHPLabTestCase):
    def _reset_compat(self):
        import rhplab.conf as conf
        conf._APPLIED = False
        return conf

    def _restore_settings(self, original):
        for name, value in original.items():
            setattr(settings, name, value)
        for name in self._all_setting_names():
            if name not in original and hasattr(settings, name):
                delattr(settings, name)

    def _all_setting_names(self):
        return [f"RHPLAB_{key.upper()}" for key in DEFAULTS]

    @override_settings(
        RHPLAB_SETTINGS={
            "UNIVERSE": {"VMAX": 3, "FUEL": 16, "TERM_DEPTH": 3, "LITERAL_POOL": [0, 1, 3]},
            "ENUMERATION": {"CAP": 5000},
            "OUTPUT": {"FORMAT": "JSON"},
            "WORKERS": {"N_JOBS": 2},
        }
    )
    def test_nested_settings_mapping(self):
        original = {name: getattr(settings, name) for name in self._all_setting_names() if hasattr(settings, name)}
        try:
            conf = self._reset_compat()
            for name in self._all_setting_names():
                if hasattr(settings, name):
                    delattr(settings, name)
            conf.apply_lab_settings()

            assert settings.RHPLAB_VMAX == 3
            assert settings.RHPLAB_FUEL == 16
            assert settings.RHPLAB_TERM_DEPTH == 3
            assert settings.RHPLAB_LITERAL_POOL == [0, 1, 3]
            assert settings.RHPLAB_ENUM_CAP == 5000
            assert settings.RHPLAB_OUTPUT_FORMAT == "json"
            assert settings.RHPLAB_N_JOBS == 2

            config = get_config()
            assert config.universe.vmax == 3
            assert config.universe.literal_pool == (0, 1, 3)
            assert config.output_format == "json"
            assert config.n_jobs == 2
        finally:
            self._restore_settings(original)

    @override_settings(RHPLAB_SETTINGS={"UNIVERSE": {"VMAX": 3, "FUEL": 16}})
    def test_explicit_settings_not_overridden(self):
        original = {name: getattr(settings, name) for name in self._all_setting_names() if hasattr(settings, name)}
        try:
            settings.RHPLAB_VMAX = 7
            conf = self._reset_compat()
            conf.apply_lab_settings()

            assert settings.RHPLAB_VMAX == 7
            assert settings.RHPLAB_FUEL == 64
        finally:
            self._restore_settings(original)

    def test_applied_once(self):
        import rhplab.conf as conf
        assert conf._APPLIED is True
        with override_settings(RHPLAB_SETTINGS={"UNIVERSE": {"VMAX": 5}}):
            conf.apply_lab_settings()
            assert settings.RHPLAB_VMAX == 63


class TestConfigFile(RHPLabTestCase):
    def _write(self, tmp, text):
        path = Path(tmp) / "lab.json"
        path.write_text(text, encoding="utf-8")
        return path

    def test_defaults_come_from_settings(self):
        config = get_config()
        assert config.universe.vmax == 63
        assert config.universe.vars == (("h", Level.HIGH), ("l", Level.LOW))
        assert config.output_format == "text"

    def test_file_then_overrides(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = self._write(tmp, json.dumps({"vmax": 3, "fuel": 16, "literal_pool": [0, 1, 3]}))
            config = get_config(path, fuel=9, ctx_depth=None)
        assert config.universe.vmax == 3
        assert config.universe.fuel == 9
        assert config.universe.ctx_depth == 2

    def test_fixture_file(self):
        raw = read_config_file(FIXTURE)
        assert raw["literal_pool"] == [0, 1, 2, 42]
        assert get_config(FIXTURE).universe.term_depth == 4

    def test_bad_files(self):
        with tempfile.TemporaryDirectory() as tmp:
            for text in ("{not json", "[1, 2]", json.dumps({"vmx": 3})):
                with self.assertRaises(ConfigError):
                    read_config_file(self._write(tmp, text))
            with self.assertRaises(ConfigError):
                read_config_file(Path(tmp) / "missing.json")

    def test_bad_values(self):
        with self.assertRaises(ConfigError):
            get_config(vmax="big")
        with self.assertRaises(ConfigError):
            get_config(vmax=1, literal_pool=[0, 42])
        with self.assertRaises(ConfigError):
            get_config(output_format="yaml")
        with self.assertRaises(ConfigError):
            get_config(vars=[["h", "secret"]])
        with self.assertRaises(ConfigError):
            get_config(fuel=0)

    def test_config_error_is_improperly_configured(self):
        assert issubclass(ConfigError, ImproperlyConfigured)
        assert issubclass(ConfigError, LabError)


class TestWorkers(RHPLabTestCase):
    def test_override(self):
        assert configured_n_jobs() == 1
        with using_n_jobs(3):
            assert configured_n_jobs() == 3
        assert configured_n_jobs() == 1

    def test_sequential_map_keeps_order(self):
        assert parallel_map(lambda x: x * x, range(5), n_jobs=1) == [0, 1, 4, 9, 16]

    def test_first_failure_stops_the_scan(self):
        seen = []

        def square(x):
            seen.append(x)
            return x * x

        self.assertEqual(parallel_first(square, range(10), lambda r: r > 5, n_jobs=1), [0, 1, 4, 9])
        self.assertEqual(seen, [0, 1, 2, 3])
        self.assertEqual(parallel_first(square, range(3), lambda r: False, n_jobs=1), [0, 1, 4])
