"""Configuration file management for stream-trust."""

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

try:
    import yaml
    HAS_YAML = True
except ImportError:
    HAS_YAML = False


def default_lag_weights(lag_set: tuple[int, ...]) -> tuple[float, ...]:
    """Weights proportional to 1/lag, normalized to sum to one."""
    raw = [1.0 / lag for lag in lag_set]
    total = math.fsum(raw)
    return tuple(w / total for w in raw)


@dataclass
class SignalConfig:
    """Ring-buffer and temporal-signal settings."""

    window: int = 16
    lag_set: tuple[int, ...] = (1, 2, 4)
    lag_weights: tuple[float, ...] | None = None
    proxy_blend: float = 0.5
    epsilon: float = 1e-6

    def __post_init__(self) -> None:
        """Validate and fill default lag weights."""
        if self.window < 1:
            raise ValueError(f"W must be a positive integer, got {self.window}")
        self.lag_set = tuple(int(lag) for lag in self.lag_set)
        if not self.lag_set:
            raise ValueError("lag_set must not be empty")
        if len(set(self.lag_set)) != len(self.lag_set) or list(self.lag_set) != sorted(self.lag_set):
            raise ValueError(f"lag_set must be strictly increasing, got {list(self.lag_set)}")
        for lag in self.lag_set:
            if not 1 <= lag <= self.window:
                raise ValueError(f"lag {lag} outside 1..W={self.window}")
        if self.lag_weights is None:
            self.lag_weights = default_lag_weights(self.lag_set)
        self.lag_weights = tuple(float(w) for w in self.lag_weights)
        if len(self.lag_weights) != len(self.lag_set):
            raise ValueError("lag_weights must have one entry per lag")
        if any(w < 0 for w in self.lag_weights):
            raise ValueError("lag_weights must be nonnegative")
        if abs(math.fsum(self.lag_weights) - 1.0) > 1e-9:
            raise ValueError(f"lag_weights must sum to 1, got {math.fsum(self.lag_weights)}")
        if not 0.0 <= self.proxy_blend <= 1.0:
            raise ValueError(f"proxy_blend must be in [0, 1], got {self.proxy_blend}")
        if self.epsilon < 0:
            raise ValueError(f"epsilon must be nonnegative, got {self.epsilon}")


@dataclass
class CalibConfig:
    """Streaming conformal threshold and abstention-budget settings."""

    lambda_: float = 0.7
    risk_level: float = 0.1
    budget: float = 0.15
    warmup_steps: int = 48
    quantile_step: float = 0.01
    burst_window: int = 50

    def __post_init__(self) -> None:
        if not 0.0 <= self.lambda_ <= 1.0:
            raise ValueError(f"lambda must be in [0, 1], got {self.lambda_}")
        if not 0.0 < self.risk_level < 1.0:
            raise ValueError(f"risk_level must be in (0, 1), got {self.risk_level}")
        if not 0.0 <= self.budget <= 1.0:
            raise ValueError(f"budget must be in [0, 1], got {self.budget}")
        if self.warmup_steps < 1:
            raise ValueError(f"warmup_steps must be positive, got {self.warmup_steps}")
        if self.quantile_step <= 0:
            raise ValueError(f"quantile_step must be > 0, got {self.quantile_step}")
        if self.burst_window < 1:
            raise ValueError(f"burst_window must be positive, got {self.burst_window}")


@dataclass
class FitConfig:
    """Offline combiner fitting settings."""

    l2: float = 1e-4
    max_iters: int = 10000
    tol: float = 1e-8
    class_balance: bool = True

    def __post_init__(self) -> None:
        if self.l2 < 0:
            raise ValueError(f"l2 must be >= 0, got {self.l2}")
        if self.max_iters < 1:
            raise ValueError(f"max_iters must be positive, got {self.max_iters}")
        if self.tol <= 0:
            raise ValueError(f"tol must be > 0, got {self.tol}")


@dataclass
class EvalConfig:
    """Offline evaluation protocol settings."""

    window_m: int = 100
    ece_bins: int = 15
    id_band_steps: int = 1000

    def __post_init__(self) -> None:
        if self.window_m < 1:
            raise ValueError(f"window_m must be positive, got {self.window_m}")
        if self.ece_bins < 1:
            raise ValueError(f"ece_bins must be >= 1, got {self.ece_bins}")
        if self.id_band_steps < 1:
            raise ValueError(f"id_band_steps must be positive, got {self.id_band_steps}")


@dataclass
class Config:
    """Complete configuration for stream-trust commands."""

    signal: SignalConfig = field(default_factory=SignalConfig)
    calib: CalibConfig = field(default_factory=CalibConfig)
    fit: FitConfig = field(default_factory=FitConfig)
    eval: EvalConfig = field(default_factory=EvalConfig)
    lut_size: int = 256

    def __post_init__(self) -> None:
        if self.lut_size < 2:
            raise ValueError(f"lut_size must be >= 2, got {self.lut_size}")

    @classmethod
    def from_flat(cls, data: dict[str, Any]) -> "Config":
        """Build a Config from the flat key/value form used in config files."""
        unknown = set(data) - set(_FLAT_KEYS)
        if unknown:
            raise ValueError(f"Unknown config keys: {', '.join(sorted(unknown))}")

        def pick(section: str) -> dict[str, Any]:
            return {
                attr: data[key]
                for key, (sec, attr) in _FLAT_KEYS.items()
                if sec == section and key in data
            }

        signal_kwargs = pick("signal")
        for key in ("lag_set", "lag_weights"):
            if key in signal_kwargs and signal_kwargs[key] is not None:
                signal_kwargs[key] = tuple(signal_kwargs[key])
        signal = SignalConfig(**signal_kwargs)

        calib_kwargs = pick("calib")
        calib_kwargs.setdefault("warmup_steps", 3 * signal.window)
        return cls(
            signal=signal,
            calib=CalibConfig(**calib_kwargs),
            fit=FitConfig(**pick("fit")),
            eval=EvalConfig(**pick("eval")),
            **pick("top"),
        )

    def snapshot(self) -> dict[str, Any]:
        """Return the flat key/value view recorded in run manifests."""
        sections = {"signal": self.signal, "calib": self.calib, "fit": self.fit, "eval": self.eval}
        result: dict[str, Any] = {}
        for key, (section, attr) in _FLAT_KEYS.items():
            owner = self if section == "top" else sections[section]
            value = getattr(owner, attr)
            result[key] = list(value) if isinstance(value, tuple) else value
        return result


# flat key -> (section, attribute)
_FLAT_KEYS: dict[str, tuple[str, str]] = {
    "W": ("signal", "window"),
    "lag_set": ("signal", "lag_set"),
    "lag_weights": ("signal", "lag_weights"),
    "proxy_blend": ("signal", "proxy_blend"),
    "epsilon": ("signal", "epsilon"),
    "lambda": ("calib", "lambda_"),
    "risk_level": ("calib", "risk_level"),
    "budget": ("calib", "budget"),
    "warmup_steps": ("calib", "warmup_steps"),
    "quantile_step": ("calib", "quantile_step"),
    "burst_window": ("calib", "burst_window"),
    "l2": ("fit", "l2"),
    "max_iters": ("fit", "max_iters"),
    "tol": ("fit", "tol"),
    "class_balance": ("fit", "class_balance"),
    "window_m": ("eval", "window_m"),
    "ece_bins": ("eval", "ece_bins"),
    "id_band_steps": ("eval", "id_band_steps"),
    "lut_size": ("top", "lut_size"),
}


def load_yaml(path: Path | str) -> Any:
    """
    Read a YAML document.

    Raises:
        FileNotFoundError: If the file does not exist
        RuntimeError: If PyYAML is not installed
    """
    path = Path(path).expanduser()
    if not path.exists():
        raise FileNotFoundError(f"File not found: {path}")
    if not HAS_YAML:
        raise RuntimeError("PyYAML is required to read YAML files. Install with: pip install 'stream-trust[config]'")
    with open(path, "r") as f:
        return yaml.safe_load(f)  # type: ignore[possibly-unbound]


def load_config(config_path: Path | str | None = None) -> Config:
    """
    Load configuration from file.

    Args:
        config_path: Path to a flat key/value YAML file. If None, defaults are used.

    Returns:
        Config object with loaded settings (or defaults if no path given)

    Raises:
        FileNotFoundError: If an explicit path does not exist
        ValueError: If the file is malformed or holds invalid values
    """
    if config_path is None:
        return Config()

    data = load_yaml(config_path) or {}
    if not isinstance(data, dict):
        raise ValueError(f"Config file {config_path} must hold a key/value mapping")
    try:
        return Config.from_flat(data)
    except TypeError as e:
        raise ValueError(f"Failed to load config from {config_path}: {e}")


def save_example_config(output_path: Path | str) -> None:
    """
    Save an example configuration file with all options documented.

    Args:
        output_path: Where to save the example config
    """
    example = """# stream-trust configuration file (flat key/value)

# Ring buffer length and lag set; weights default to 1/lag, normalized
W: 16
lag_set: [1, 2, 4]
# lag_weights: [0.5714285714, 0.2857142857, 0.1428571429]

# Blend between inverse confidence and inverse margin in the proxy signal
proxy_blend: 0.5
# Probability smoothing for the divergence signal
epsilon: 1.0e-6

# Nonconformity blend, risk level and abstention budget
lambda: 0.7
risk_level: 0.1
budget: 0.15

# Warm-up (defaults to 3 * W), quantile tracker gain, burst window
warmup_steps: 48
quantile_step: 0.01
burst_window: 50

# Offline combiner fitting
l2: 1.0e-4
max_iters: 10000
tol: 1.0e-8
class_balance: true

# Evaluation protocol
window_m: 100
ece_bins: 15
id_band_steps: 1000

# Quantized path log table size
lut_size: 256
"""

    path = Path(output_path).expanduser()
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(example)
