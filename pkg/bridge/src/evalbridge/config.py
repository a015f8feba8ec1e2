"""Bridge configuration: dataset, budgets and schedule knobs.

Loaded from a flat ``key = value`` file; every key has a default tuned for
fast CPU smoke runs. The learning-rate schedule defaults mirror the reference
training recipe but are plain config values here.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path


@dataclass(frozen=True)
class BridgeConfig:
    dataset: str = "synthetic"  # synthetic | cifar10
    data_root: str = "./data"
    train_size: int = 256
    val_size: int = 64
    image_size: int = 8  # synthetic images are square
    channels: int = 3
    batch_size: int = 128
    epochs: int = 1  # fallback when a request carries no budget
    lr_start: float = 0.004
    lr_max: float = 0.1
    weight_decay: float = 0.0004
    momentum_start: float = 0.95
    momentum_end: float = 0.85
    phase1_frac: float = 0.5
    seed: int = 0
    device: str = "cpu"

    def __post_init__(self) -> None:
        if self.dataset not in ("synthetic", "cifar10"):
            raise ValueError(f"unknown dataset {self.dataset!r}")
        if self.train_size < 1 or self.val_size < 1:
            raise ValueError("train/validation split sizes must be positive")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.batch_size < 2:
            raise ValueError("batch_size must be >= 2 (batch-norm needs it)")
        if not 0.0 < self.phase1_frac < 1.0:
            raise ValueError("phase1_frac must be in (0, 1)")


_INT_KEYS = {
    "train_size", "val_size", "image_size", "channels", "batch_size",
    "epochs", "seed",
}
_FLOAT_KEYS = {
    "lr_start", "lr_max", "weight_decay", "momentum_start", "momentum_end",
    "phase1_frac",
}
_STR_KEYS = {"dataset", "data_root", "device"}


def load_config(path: str | Path | None) -> BridgeConfig:
    if path is None:
        return BridgeConfig()
    values: dict = {}
    for lineno, raw in enumerate(
        Path(path).read_text(encoding="utf-8").splitlines(), start=1
    ):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected 'key = value'")
        key, value = (part.strip() for part in line.split("=", 1))
        if key in _INT_KEYS:
            values[key] = int(value)
        elif key in _FLOAT_KEYS:
            values[key] = float(value)
        elif key in _STR_KEYS:
            values[key] = value
        else:
            raise ValueError(f"{path}:{lineno}: unknown key {key!r}")
    return BridgeConfig(**values)
