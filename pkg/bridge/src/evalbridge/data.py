"""Datasets for bridge evaluations.

The built-in synthetic set is fully deterministic: images from a seeded
generator, labels from a multiplicative hash of the sample index taken modulo
the classifier width of the network under evaluation. CIFAR-10 is available
when torchvision and a local copy are present; nothing is ever downloaded.
"""

from __future__ import annotations

import torch

from .config import BridgeConfig


def stable_label(index: int, num_classes: int) -> int:
    """Deterministic label for sample ``index``; no process-salted hashing."""
    h = (index * 2654435761 + 0x9E3779B9) & 0xFFFFFFFF
    h ^= h >> 16
    return h % num_classes


class Dataset:
    """Train/validation tensors; synthetic labels are derived per class count."""

    def __init__(self, train_x, val_x, train_y=None, val_y=None):
        self.train_x = train_x
        self.val_x = val_x
        self._train_y = train_y
        self._val_y = val_y

    def labels(self, num_classes: int):
        if self._train_y is not None:
            if int(self._train_y.max()) >= num_classes:
                raise ValueError(
                    f"dataset labels need {int(self._train_y.max()) + 1} classes, "
                    f"network classifier has {num_classes}"
                )
            return self._train_y, self._val_y
        train_y = torch.tensor(
            [stable_label(i, num_classes) for i in range(len(self.train_x))]
        )
        val_y = torch.tensor(
            [
                stable_label(len(self.train_x) + i, num_classes)
                for i in range(len(self.val_x))
            ]
        )
        return train_y, val_y


def load_dataset(config: BridgeConfig) -> Dataset:
    if config.dataset == "synthetic":
        generator = torch.Generator().manual_seed(config.seed)
        images = torch.randn(
            config.train_size + config.val_size,
            config.channels,
            config.image_size,
            config.image_size,
            generator=generator,
        )
        return Dataset(images[: config.train_size], images[config.train_size :])
    return _load_cifar10(config)


def _load_cifar10(config: BridgeConfig) -> Dataset:
    import numpy as np
    from torchvision import datasets

    raw = datasets.CIFAR10(root=config.data_root, train=True, download=False)
    images = torch.from_numpy(np.asarray(raw.data)).permute(0, 3, 1, 2).float()
    images = (images / 255.0 - 0.5) / 0.5
    labels = torch.tensor(raw.targets)
    total = config.train_size + config.val_size
    if total > len(images):
        raise ValueError(f"requested split {total} exceeds dataset size {len(images)}")
    return Dataset(
        images[: config.train_size],
        images[config.train_size : total],
        labels[: config.train_size],
        labels[config.train_size : total],
    )
