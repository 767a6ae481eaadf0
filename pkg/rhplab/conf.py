import json
import logging
from dataclasses import dataclass
from pathlib import Path

from django.conf import settings

from .exceptions import ConfigError
from .syntax import DEFAULT_ENUM_CAP, Level, Universe

logger = logging.getLogger("rhplab.settings")

_APPLIED = False

DEFAULTS = {
    "vars": [["h", "high"], ["l", "low"]],
    "vmax": 63,
    "fuel": 64,
    "term_depth": 4,
    "ctx_depth": 2,
    "literal_pool": [0, 1, 2, 42],
    "expr_depth": 0,
    "enum_cap": DEFAULT_ENUM_CAP,
    "output_format": "text",
    "n_jobs": 1,
}

FIXTURE = Path(__file__).resolve().parent / "resources" / "fixture.json"


def apply_lab_settings() -> None:
    """Map the nested ``RHPLAB_SETTINGS`` dict onto the flat ``RHPLAB_*`` names."""
    global _APPLIED
    if _APPLIED:
        return
    _APPLIED = True

    nested = getattr(settings, "RHPLAB_SETTINGS", None)
    if not isinstance(nested, dict):
        return

    def set_if_missing(name, value):
        if not hasattr(settings, name):
            setattr(settings, name, value)
            return True
        return False

    universe = nested.get("UNIVERSE")
    if isinstance(universe, dict):
        for key, value in universe.items():
            set_if_missing(f"RHPLAB_{key.upper()}", value)

    enumeration = nested.get("ENUMERATION")
    if isinstance(enumeration, dict) and enumeration.get("CAP") is not None:
        set_if_missing("RHPLAB_ENUM_CAP", enumeration["CAP"])

    output = nested.get("OUTPUT")
    if isinstance(output, dict) and output.get("FORMAT"):
        set_if_missing("RHPLAB_OUTPUT_FORMAT", str(output["FORMAT"]).lower())

    workers = nested.get("WORKERS")
    if isinstance(workers, dict) and workers.get("N_JOBS") is not None:
        set_if_missing("RHPLAB_N_JOBS", workers["N_JOBS"])

    logger.debug("RHPLAB_SETTINGS applied")


def settings_values():
    values = dict(DEFAULTS)
    if not settings.configured:
        return values
    for key in DEFAULTS:
        values[key] = getattr(settings, f"RHPLAB_{key.upper()}", values[key])
    return values


def read_config_file(path):
    path = Path(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}")
    except ValueError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}")
    if not isinstance(raw, dict):
        raise ConfigError(f"config {path} must hold a JSON object")
    unknown = sorted(set(raw) - set(DEFAULTS))
    if unknown:
        raise ConfigError(f"unknown config key(s) in {path}: {', '.join(unknown)}")
    return raw


@dataclass(frozen=True)
class Config:
    universe: Universe
    output_format: str = "text"
    n_jobs: int = 1


def _int(values, key):
    value = values[key]
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{key} must be an integer, got {value!r}")
    return value


def _vars(raw):
    if not isinstance(raw, (list, tuple)):
        raise ConfigError("vars must be a list of [name, level] pairs")
    declared = []
    for entry in raw:
        try:
            name, level = entry
            declared.append((str(name), Level(str(level).lower())))
        except (TypeError, ValueError):
            raise ConfigError(f"bad variable declaration {entry!r} (expected [name, 'high'|'low'])")
    return tuple(declared)


def _validated(universe):
    problems = universe.problems()
    if problems:
        raise ConfigError("invalid universe: " + "; ".join(problems))
    return universe


def get_config(path=None, **overrides):
    """Settings, then the config file at ``path``, then non-None keyword overrides."""
    values = settings_values()
    if path:
        values.update(read_config_file(path))
    values.update({k: v for k, v in overrides.items() if v is not None})

    pool = values["literal_pool"]
    if not isinstance(pool, (list, tuple)) or not all(isinstance(n, int) for n in pool):
        raise ConfigError(f"literal_pool must be a list of integers, got {pool!r}")
    universe = Universe(
        vars=_vars(values["vars"]),
        vmax=_int(values, "vmax"),
        fuel=_int(values, "fuel"),
        term_depth=_int(values, "term_depth"),
        ctx_depth=_int(values, "ctx_depth"),
        literal_pool=tuple(pool),
        expr_depth=_int(values, "expr_depth"),
        enum_cap=_int(values, "enum_cap"),
    )
    output_format = str(values["output_format"]).lower()
    if output_format not in ("text", "json"):
        raise ConfigError(f"output_format must be 'text' or 'json', got {output_format!r}")
    config = Config(_validated(universe), output_format, _int(values, "n_jobs"))
    logger.debug("configuration loaded: %s", universe.bounds())
    return config


def configure_standalone():
    """Give the console script a minimal settings object when none is configured."""
    if settings.configured:
        return
    import django

    settings.configure(
        INSTALLED_APPS=["rhplab"],
        LOGGING_CONFIG=None,
        USE_TZ=True,
    )
    django.setup()
