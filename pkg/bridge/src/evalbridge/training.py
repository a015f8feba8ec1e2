"""Short training runs under a two-phase one-cycle schedule.

Phase one ramps the learning rate linearly from ``lr_start`` to ``lr_max``
while the momentum term falls from ``momentum_start`` to ``momentum_end``;
phase two anneals the rate to zero on a cosine while the momentum returns the
same way. Momentum drives Adam's first-moment coefficient.
"""

from __future__ import annotations

import math

import torch
from torch import nn

from .config import BridgeConfig


def one_cycle_values(step: int, total_steps: int, cfg: BridgeConfig) -> tuple[float, float]:
    split = max(1, int(total_steps * cfg.phase1_frac))
    if step < split:
        t = step / split
        lr = cfg.lr_start + t * (cfg.lr_max - cfg.lr_start)
        momentum = cfg.momentum_start + t * (cfg.momentum_end - cfg.momentum_start)
    else:
        t = (step - split) / max(1, total_steps - split)
        cosine = 0.5 * (1.0 + math.cos(math.pi * t))
        lr = cfg.lr_max * cosine
        momentum = cfg.momentum_end + (cfg.momentum_start - cfg.momentum_end) * (
            1.0 - cosine
        )
    return lr, momentum


def train_and_evaluate(
    model: nn.Module,
    train_x: torch.Tensor,
    train_y: torch.Tensor,
    val_x: torch.Tensor,
    val_y: torch.Tensor,
    epochs: int,
    cfg: BridgeConfig,
) -> float:
    """Train for ``epochs`` and return validation accuracy in [0, 1]."""
    device = torch.device(cfg.device)
    model = model.to(device)
    optimizer = torch.optim.Adam(
        model.parameters(),
        lr=cfg.lr_start,
        betas=(cfg.momentum_start, 0.999),
        weight_decay=cfg.weight_decay,
    )
    loss_fn = nn.CrossEntropyLoss()
    batch = cfg.batch_size
    batches = math.ceil(len(train_x) / batch)
    total_steps = epochs * batches

    model.train()
    step = 0
    for _ in range(epochs):
        for i in range(batches):
            lr, momentum = one_cycle_values(step, total_steps, cfg)
            for group in optimizer.param_groups:
                group["lr"] = lr
                group["betas"] = (momentum, 0.999)
            xb = train_x[i * batch : (i + 1) * batch].to(device)
            yb = train_y[i * batch : (i + 1) * batch].to(device)
            loss = loss_fn(model(xb), yb)
            if not torch.isfinite(loss):
                raise RuntimeError(f"non-finite loss at step {step}")
            optimizer.zero_grad()
            loss.backward()
            optimizer.step()
            step += 1

    model.eval()
    correct = 0
    with torch.no_grad():
        for i in range(0, len(val_x), batch):
            xb = val_x[i : i + batch].to(device)
            yb = val_y[i : i + batch].to(device)
            correct += int((model(xb).argmax(dim=1) == yb).sum())
    return correct / len(val_y)
