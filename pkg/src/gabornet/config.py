"""Flat key=value run configuration files.

Example:

    # 2-block network on a converted scene
    mode = gabor
    blocks = 2
    n_theta = 4
    n_mag = 4
    kernel_size = 5
    patch_size = 15
    epochs = 300
    lr = 0.0076
    lr_decay = 0.995
    batch_size = 100
    seed = 0
    cube_path = scene.hsic
    labels_path = scene.hsil
    train_per_class = 100
    augment = false
    precision = f64

Unknown keys are configuration errors (exit code 2 from the CLI).
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

from gabornet.network import NetworkConfig, standard_blocks


class ConfigError(ValueError):
    """Bad key, value or combination in a run configuration."""


def _parse_bool(value: str) -> bool:
    v = value.strip().lower()
    if v in ("true", "1", "yes", "on"):
        return True
    if v in ("false", "0", "no", "off"):
        return False
    raise ConfigError(f"expected a boolean, got {value!r}")


_KEY_PARSERS = {
    "mode": str,
    "blocks": int,
    "n_theta": int,
    "n_mag": int,
    "kernel_size": int,
    "patch_size": int,
    "epochs": int,
    "lr": float,
    "lr_decay": float,
    "batch_size": int,
    "seed": int,
    "cube_path": str,
    "labels_path": str,
    "train_per_class": int,
    "augment": _parse_bool,
    "precision": str,
    # needed by commands that run without dataset files (param-count,
    # grad-check); when datasets are loaded these must agree with them
    "input_bands": int,
    "n_classes": int,
}

_DEFAULTS = {
    "mode": "gabor",
    "blocks": 2,
    "n_theta": 4,
    "n_mag": 4,
    "kernel_size": 5,
    "patch_size": 15,
    "epochs": 300,
    "lr": 0.0076,
    "lr_decay": 0.995,
    "batch_size": 100,
    "seed": 0,
    "cube_path": None,
    "labels_path": None,
    "train_per_class": 100,
    "augment": False,
    "precision": "f64",
    "input_bands": None,
    "n_classes": None,
}


@dataclass
class RunConfig:
    """Everything a training/evaluation run needs besides the data itself."""

    mode: str
    blocks: int
    n_theta: int
    n_mag: int
    kernel_size: int
    patch_size: int
    epochs: int
    lr: float
    lr_decay: float
    batch_size: int
    seed: int
    cube_path: str | None
    labels_path: str | None
    train_per_class: int
    augment: bool
    precision: str
    input_bands: int | None
    n_classes: int | None

    def network_config(self, n_classes: int | None = None, input_bands: int | None = None) -> NetworkConfig:
        n_classes = n_classes if n_classes is not None else self.n_classes
        input_bands = input_bands if input_bands is not None else self.input_bands
        if n_classes is None or input_bands is None:
            raise ConfigError(
                "n_classes and input_bands must come from the config file when "
                "no dataset is loaded"
            )
        cfg = NetworkConfig(
            mode=self.mode,
            blocks=standard_blocks(self.blocks, self.n_theta, self.n_mag, self.kernel_size),
            n_classes=n_classes,
            input_bands=input_bands,
            patch_size=self.patch_size,
            epochs=self.epochs,
            lr=self.lr,
            lr_decay=self.lr_decay,
            batch_size=self.batch_size,
            seed=self.seed,
            precision=self.precision,
        )
        try:
            cfg.validate()
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        return cfg


def parse_config_text(text: str, source: str = "<config>") -> RunConfig:
    values = dict(_DEFAULTS)
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected key=value, got {raw.strip()!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in _KEY_PARSERS:
            raise ConfigError(f"{source}:{lineno}: unknown config key {key!r}")
        try:
            values[key] = _KEY_PARSERS[key](value)
        except ConfigError:
            raise
        except ValueError as exc:
            raise ConfigError(f"{source}:{lineno}: bad value for {key!r}: {exc}") from exc
    return RunConfig(**values)


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config_text(text, source=str(path))


def config_snapshot(cfg: RunConfig) -> dict:
    """Plain-dict view for run manifests."""
    return {k: getattr(cfg, k) for k in _KEY_PARSERS}
