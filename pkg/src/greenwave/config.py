# src/greenwave/config.py
from __future__ import annotations

import tomllib
from dataclasses import dataclass, field, fields
from pathlib import Path

KMH_TO_MS = 1 / 3.6

DEFAULT_CONFIG_PATH = Path.home() / ".config" / "greenwave" / "config.toml"


@dataclass
class GeneralConfig:
    data_dir: Path = field(default_factory=lambda: Path.home() / ".local" / "share" / "greenwave")


@dataclass
class SimulationConfig:
    arterial_dt: int = 1
    ctm_dt: int = 5
    measurement_interval: int = 30


@dataclass
class ControlParameters:
    square_side: float = 400.0
    offramp_queue_reference: float = 400.0
    approach_queue_reference: float = 200.0
    arterial_speed_kmh: float = 60.0
    max_recommended_speed_kmh: float = 80.0
    control_cycle: int = 300
    loss_time: int = 12

    @property
    def arterial_speed(self) -> float:
        """Default arterial speed limit v_a in m/s."""
        return self.arterial_speed_kmh * KMH_TO_MS

    @property
    def max_recommended_speed(self) -> float:
        return self.max_recommended_speed_kmh * KMH_TO_MS


@dataclass
class LearningConfig:
    discount: float = 0.9
    temperature: float = 0.5
    convergence_threshold: float = 0.01
    min_visits: int = 3


@dataclass
class TrainingConfig:
    episode_hours: int = 12
    window_shift_hours: int = 1
    start_hour: int = 0
    warmup: int = 600
    incident_probability: float = 0.25
    incident_duration: int = 1200
    max_episodes: int = 500
    convergence_check_every: int = 10

    @property
    def episode_length(self) -> int:
        return self.episode_hours * 3600


@dataclass
class EvaluationConfig:
    replications: int = 10
    concurrent_runs: int = 4
    base_seed: int = 0


@dataclass
class EmissionParams:
    idle_rate: float = 1.0
    cruise_rate: float = 200.0
    stop_penalty: float = 10.0


@dataclass
class BaselineConfig:
    fac_cycle: int = 120
    fac_g1: float = 0.5
    fac_g2: float = 0.25
    maxband_starts: int = 8
    progression_speed_kmh: float = 60.0


@dataclass
class GreenwaveConfig:
    general: GeneralConfig = field(default_factory=GeneralConfig)
    simulation: SimulationConfig = field(default_factory=SimulationConfig)
    control: ControlParameters = field(default_factory=ControlParameters)
    learning: LearningConfig = field(default_factory=LearningConfig)
    training: TrainingConfig = field(default_factory=TrainingConfig)
    evaluation: EvaluationConfig = field(default_factory=EvaluationConfig)
    emissions: EmissionParams = field(default_factory=EmissionParams)
    baselines: BaselineConfig = field(default_factory=BaselineConfig)


def _expand_path(value: str) -> Path:
    return Path(value).expanduser().resolve()


_POSITIVE_FIELDS = {
    ("simulation", "arterial_dt"),
    ("simulation", "ctm_dt"),
    ("simulation", "measurement_interval"),
    ("control", "square_side"),
    ("control", "offramp_queue_reference"),
    ("control", "approach_queue_reference"),
    ("control", "arterial_speed_kmh"),
    ("control", "max_recommended_speed_kmh"),
    ("control", "control_cycle"),
    ("learning", "temperature"),
    ("learning", "convergence_threshold"),
    ("training", "episode_hours"),
    ("training", "incident_duration"),
    ("training", "max_episodes"),
    ("training", "convergence_check_every"),
    ("evaluation", "replications"),
    ("evaluation", "concurrent_runs"),
    ("baselines", "fac_cycle"),
    ("baselines", "maxband_starts"),
    ("baselines", "progression_speed_kmh"),
}

_NON_NEGATIVE_FIELDS = {
    ("control", "loss_time"),
    ("learning", "min_visits"),
    ("training", "window_shift_hours"),
    ("training", "start_hour"),
    ("training", "warmup"),
    ("evaluation", "base_seed"),
    ("emissions", "idle_rate"),
    ("emissions", "cruise_rate"),
    ("emissions", "stop_penalty"),
}

_UNIT_INTERVAL_FIELDS = {
    ("training", "incident_probability"),
    ("baselines", "fac_g1"),
    ("baselines", "fac_g2"),
}


def _check_range(section_name: str, key: str, value: float) -> None:
    if (section_name, key) in _POSITIVE_FIELDS and value <= 0:
        raise ValueError(f"{section_name}.{key} must be > 0")
    if (section_name, key) in _NON_NEGATIVE_FIELDS and value < 0:
        raise ValueError(f"{section_name}.{key} must be >= 0")
    if (section_name, key) in _UNIT_INTERVAL_FIELDS and not 0 <= value <= 1:
        raise ValueError(f"{section_name}.{key} must be within [0, 1]")


def _coerce_and_validate_value(section_name: str, key: str, field_value: object, value: object) -> object:
    if isinstance(field_value, Path):
        if not isinstance(value, str):
            raise TypeError(f"Invalid type for {section_name}.{key}: expected str path, got {type(value).__name__}")
        return _expand_path(value)

    if isinstance(field_value, bool):
        if not isinstance(value, bool):
            raise TypeError(f"Invalid type for {section_name}.{key}: expected bool, got {type(value).__name__}")
        return value

    if isinstance(field_value, int):
        if not isinstance(value, int) or isinstance(value, bool):
            raise TypeError(f"Invalid type for {section_name}.{key}: expected int, got {type(value).__name__}")
        _check_range(section_name, key, value)
        return value

    if isinstance(field_value, float):
        # TOML integers are accepted wherever a float is expected
        if not isinstance(value, (int, float)) or isinstance(value, bool):
            raise TypeError(f"Invalid type for {section_name}.{key}: expected number, got {type(value).__name__}")
        _check_range(section_name, key, float(value))
        return float(value)

    return value


def _merge_section(section_name: str, dataclass_instance: object, overrides: dict) -> None:
    valid_fields = {f.name for f in fields(dataclass_instance)}
    for key, value in overrides.items():
        if key not in valid_fields:
            raise ValueError(f"Unknown config key: {section_name}.{key}")
        field_value = getattr(dataclass_instance, key)
        coerced_value = _coerce_and_validate_value(section_name, key, field_value, value)
        setattr(dataclass_instance, key, coerced_value)


def _check_cross_field(cfg: GreenwaveConfig) -> None:
    if cfg.training.warmup >= cfg.training.episode_length:
        raise ValueError("training.warmup must be shorter than the episode")
    if not cfg.learning.discount < 1 or cfg.learning.discount < 0:
        raise ValueError("learning.discount must be within [0, 1)")
    if cfg.control.loss_time >= 40:
        raise ValueError("control.loss_time must be shorter than the smallest cycle (40 s)")
    if cfg.simulation.ctm_dt % cfg.simulation.arterial_dt != 0:
        raise ValueError("simulation.arterial_dt must divide simulation.ctm_dt")


def load_config(config_path: Path | None = None) -> GreenwaveConfig:
    """Load config from TOML file, falling back to defaults for missing values."""
    cfg = GreenwaveConfig()

    if config_path is None:
        config_path = DEFAULT_CONFIG_PATH

    if config_path.exists():
        with open(config_path, "rb") as f:
            raw = tomllib.load(f)

        section_map = {f.name: getattr(cfg, f.name) for f in fields(cfg)}
        for section_name in raw:
            if section_name not in section_map:
                raise ValueError(f"Unknown config section: {section_name}")
        for section_name, section_obj in section_map.items():
            if section_name in raw:
                section_overrides = raw[section_name]
                if not isinstance(section_overrides, dict):
                    raise TypeError(
                        f"Invalid config section {section_name}: expected table/object, got {type(section_overrides).__name__}"
                    )
                _merge_section(section_name, section_obj, section_overrides)

    _check_cross_field(cfg)
    cfg.general.data_dir = cfg.general.data_dir.expanduser().resolve()

    return cfg
