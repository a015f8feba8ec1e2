"""Request loop: line-delimited JSON in, line-delimited JSON out.

One request is processed at a time. Every input line gets exactly one
response: ``{"id", "accuracy", "params"}`` on success, ``{"id", "error"}`` on
any failure, with the id echoed whenever one could be parsed. The loop never
exits because of a bad request.
"""

from __future__ import annotations

import json
import logging
import sys

import torch

from .config import BridgeConfig
from .data import Dataset, load_dataset
from .network import build_network, parameter_count
from .training import train_and_evaluate

log = logging.getLogger("evalbridge")


def handle_request(record: dict, dataset: Dataset, config: BridgeConfig) -> dict:
    request_id = str(record.get("id", ""))
    try:
        network = record["network"]
        if not isinstance(network, dict) or "layers" not in network:
            raise ValueError("request 'network' must be a layer-list object")
        budget = record.get("budget") or {}
        epochs = int(budget.get("epochs", config.epochs))
        if epochs < 1:
            raise ValueError(f"budget.epochs must be >= 1, got {epochs}")

        torch.manual_seed(config.seed)
        model = build_network(network)
        params = parameter_count(model)
        num_classes = int(network["num_classes"])
        train_y, val_y = dataset.labels(num_classes)
        accuracy = train_and_evaluate(
            model, dataset.train_x, train_y, dataset.val_x, val_y, epochs, config
        )
        return {"id": request_id, "accuracy": accuracy, "params": params}
    except Exception as exc:
        log.warning("request %s failed: %s", request_id or "<no id>", exc)
        return {"id": request_id, "error": f"{type(exc).__name__}: {exc}"}


def serve(config: BridgeConfig, stdin=None, stdout=None) -> None:
    stdin = stdin if stdin is not None else sys.stdin
    stdout = stdout if stdout is not None else sys.stdout
    dataset = load_dataset(config)
    log.info(
        "serving: dataset=%s train=%d val=%d device=%s",
        config.dataset, len(dataset.train_x), len(dataset.val_x), config.device,
    )
    for line in stdin:
        line = line.strip()
        if not line:
            continue
        try:
            record = json.loads(line)
            if not isinstance(record, dict):
                raise ValueError("request must be a JSON object")
        except (json.JSONDecodeError, ValueError) as exc:
            log.warning("unparseable request line: %s", exc)
            response = {"id": "", "error": f"bad request line: {exc}"}
        else:
            response = handle_request(record, dataset, config)
        stdout.write(json.dumps(response) + "\n")
        stdout.flush()
    log.info("input closed, shutting down")
