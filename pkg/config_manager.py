import dataclasses
import hashlib
import json
import logging
import os
from dataclasses import dataclass, field

from jsonschema import Draft202012Validator

from grainlab.errors import ConfigError

logger = logging.getLogger(__name__)

SCHEMA_PATH = os.path.join(os.path.dirname(os.path.abspath(__file__)), "docs", "run_config.schema.json")
OUTPUT_DIR_ENV = "GRAINLAB_OUTPUT_DIR"

# Keys that change how a run executes but never what it computes.
_EXECUTION_KEYS = ("workers", "output_dir")


class ConfigManager:
    """Manages application defaults and the optional settings file."""

    def __init__(self, config_path=None):
        self.config_path = config_path or os.path.join(os.getcwd(), "data", "settings.json")
        self.default_config = {
            "workers": 1,
            "chunk_size": 4096,
            "output_dir": "runs",
            "tolerance_relative": 0.05,
            "tolerance_sigmas": 4.0,
            "grid_resolution": 1024,
        }
        self.config = self._load_config()

    def _load_config(self):
        """Loads settings.json over the defaults; the output directory may be overridden from the environment."""
        config = dict(self.default_config)
        try:
            with open(self.config_path, 'r', encoding='utf-8') as f:
                stored = json.load(f)
            if isinstance(stored, dict):
                config.update({key: value for key, value in stored.items() if key in self.default_config})
            else:
                logger.warning(f"ConfigManager: {self.config_path} is not a JSON object, using defaults")
        except FileNotFoundError:
            logger.debug(f"ConfigManager: no settings file at {self.config_path}, using defaults")
        except json.JSONDecodeError:
            logger.warning(f"ConfigManager: error decoding {self.config_path}, using defaults")

        env_output = os.environ.get(OUTPUT_DIR_ENV)
        if env_output:
            config["output_dir"] = env_output
        return config

    def save_config(self):
        """Saves the settings to settings.json."""
        try:
            os.makedirs(os.path.dirname(self.config_path) or ".", exist_ok=True)
            with open(self.config_path, 'w', encoding='utf-8') as f:
                json.dump(self.config, f, indent=2)
        except OSError as e:
            logger.error(f"ConfigManager: error saving settings: {e}")

    def get_config_value(self, key):
        """Returns a configuration value for the given key."""
        return self.config.get(key)

    def set_config_value(self, key, value):
        """Sets a configuration value and saves the settings file."""
        self.config[key] = value
        self.save_config()


@dataclass(frozen=True)
class RunConfig:
    """A validated run description; `raw` keeps the JSON it was loaded from."""

    model: dict
    study: str
    name: str = "run"
    points: tuple = ()
    radii: tuple = ()
    region: dict | None = None
    schedule: dict | None = None
    replications: int = 100_000
    seed: int = 0
    output_dir: str = "runs"
    workers: int = 1
    chunk_size: int = 4096
    steps: int = 256
    grid_resolution: int = 1024
    dump_realizations: int = 0
    tolerance_relative: float = 0.05
    tolerance_sigmas: float = 4.0
    raw: dict = field(default_factory=dict, compare=False, repr=False)

    def to_dict(self) -> dict:
        """The effective configuration as plain JSON."""
        data = {key: value for key, value in dataclasses.asdict(self).items() if key != "raw"}
        data["points"] = [list(p) for p in self.points]
        data["radii"] = list(self.radii)
        return data

    @property
    def config_hash(self) -> str:
        """sha256 of the effective configuration, ignoring keys that only affect execution."""
        data = {key: value for key, value in self.to_dict().items() if key not in _EXECUTION_KEYS}
        text = json.dumps(data, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode("utf-8")).hexdigest()


def _load_schema() -> dict:
    with open(SCHEMA_PATH, 'r', encoding='utf-8') as f:
        return json.load(f)


def _pointer(path) -> str:
    if not path:
        return "/"
    return "/" + "/".join(str(part).replace("~", "~0").replace("/", "~1") for part in path)


def validate_run_config(data) -> None:
    """
    Validates a run configuration against the published schema.

    Raises:
        ConfigError: For the first schema violation, located by JSON pointer
    """
    validator = Draft202012Validator(_load_schema())
    errors = sorted(validator.iter_errors(data), key=lambda e: (len(e.absolute_path), list(map(str, e.absolute_path))))
    if errors:
        error = errors[0]
        raise ConfigError(error.message, _pointer(error.absolute_path))


def run_config_from_dict(data: dict, settings: ConfigManager | None = None) -> RunConfig:
    """Builds a RunConfig from JSON data, filling gaps from the application settings."""
    validate_run_config(data)
    settings = settings or ConfigManager()
    tolerance = data.get("tolerance", {})
    return RunConfig(
        model=data["model"],
        study=data["study"],
        name=data.get("name", "run"),
        points=tuple(tuple(float(v) for v in p) for p in data.get("points", ())),
        radii=tuple(float(r) for r in data.get("radii", ())),
        region=data.get("region"),
        schedule=data.get("schedule"),
        replications=data.get("replications", 100_000),
        seed=data.get("seed", 0),
        output_dir=data.get("output_dir", settings.get_config_value("output_dir")),
        workers=data.get("workers", settings.get_config_value("workers")),
        chunk_size=data.get("chunk_size", settings.get_config_value("chunk_size")),
        steps=data.get("steps", 256),
        grid_resolution=data.get("grid_resolution", settings.get_config_value("grid_resolution")),
        dump_realizations=data.get("dump_realizations", 0),
        tolerance_relative=tolerance.get("relative", settings.get_config_value("tolerance_relative")),
        tolerance_sigmas=tolerance.get("sigmas", settings.get_config_value("tolerance_sigmas")),
        raw=data,
    )


def load_run_config(path: str, settings: ConfigManager | None = None) -> RunConfig:
    """
    Loads and validates a run configuration file.

    Args:
        path: Path to the JSON configuration
        settings: Application settings supplying defaults

    Returns:
        RunConfig: The validated configuration

    Raises:
        ConfigError: If the file is missing, not JSON, or violates the schema
    """
    try:
        with open(path, 'r', encoding='utf-8') as f:
            data = json.load(f)
    except FileNotFoundError:
        raise ConfigError(f"configuration file not found: {path}")
    except json.JSONDecodeError as e:
        raise ConfigError(f"invalid JSON at line {e.lineno}: {e.msg}")
    logger.info(f"ConfigManager: loaded run configuration from {path}")
    return run_config_from_dict(data, settings)


def apply_overrides(config: RunConfig, seed=None, workers=None, output_dir=None, study=None) -> RunConfig:
    """Command-line overrides; None leaves the configured value."""
    changes = {}
    if seed is not None:
        if not 0 <= seed < 2 ** 64:
            raise ConfigError(f"seed must be an unsigned 64-bit integer, got {seed}", "/seed")
        changes["seed"] = seed
    if workers is not None:
        if workers < 1:
            raise ConfigError(f"workers must be at least 1, got {workers}", "/workers")
        changes["workers"] = workers
    if output_dir is not None:
        changes["output_dir"] = output_dir
    if study is not None:
        changes["study"] = study
    return dataclasses.replace(config, **changes) if changes else config
