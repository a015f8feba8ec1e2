"""Instantiate a torch model from a layer-list network description.

The description is consumed verbatim: stem and 1x1 projections are
conv/batch-norm/ReLU stacks, cell layers execute their DAG with element-wise
summation at multi-input nodes and depthwise concatenation into the cell
output, pooling layers carry no parameters and the classifier is a single
biased linear layer on globally pooled features.
"""

from __future__ import annotations

import torch
from torch import nn

KERNELS = {
    "Conv1x1": (1, 1),
    "Conv1x3": (1, 3),
    "Conv3x1": (3, 1),
    "Conv3x3": (3, 3),
}


def conv_bn_relu(c_in: int, c_out: int, kernel: tuple[int, int]) -> nn.Sequential:
    kh, kw = kernel
    return nn.Sequential(
        nn.Conv2d(c_in, c_out, (kh, kw), padding=((kh - 1) // 2, (kw - 1) // 2),
                  bias=False),
        nn.BatchNorm2d(c_out),
        nn.ReLU(inplace=True),
    )


class CellModule(nn.Module):
    """Executes one cell DAG at a fixed node width."""

    def __init__(self, cell: dict, width: int):
        super().__init__()
        kinds = {node["id"]: node["kind"] for node in cell["nodes"]}
        inputs = [i for i, kind in kinds.items() if kind == "input"]
        outputs = [i for i, kind in kinds.items() if kind == "output"]
        if len(inputs) != 1 or len(outputs) != 1:
            raise ValueError("cell must have exactly one input and one output node")
        self.input_id = inputs[0]
        self.output_id = outputs[0]
        self.preds: dict[int, list[int]] = {i: [] for i in kinds}
        succs: dict[int, list[int]] = {i: [] for i in kinds}
        for a, b in cell["edges"]:
            self.preds[b].append(a)
            succs[a].append(b)
        for node_id in self.preds:
            self.preds[node_id].sort()

        self.order = self._topological(kinds, succs)
        self.convs = nn.ModuleDict()
        for node in cell["nodes"]:
            if node["kind"] == "conv":
                if node["op"] not in KERNELS:
                    raise ValueError(f"unknown convolution {node['op']!r}")
                self.convs[str(node["id"])] = conv_bn_relu(
                    width, width, KERNELS[node["op"]]
                )

    def _topological(self, kinds: dict, succs: dict) -> list[int]:
        indeg = {i: len(self.preds[i]) for i in kinds}
        ready = sorted(i for i, d in indeg.items() if d == 0)
        order = []
        while ready:
            node = ready.pop(0)
            order.append(node)
            for nxt in succs[node]:
                indeg[nxt] -= 1
                if indeg[nxt] == 0:
                    ready.append(nxt)
            ready.sort()
        if len(order) != len(kinds):
            raise ValueError("cell graph contains a cycle")
        return order

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        values = {self.input_id: x}
        for node_id in self.order:
            if node_id in (self.input_id, self.output_id):
                continue
            parts = [values[p] for p in self.preds[node_id]]
            combined = parts[0] if len(parts) == 1 else torch.stack(parts).sum(0)
            values[node_id] = self.convs[str(node_id)](combined)
        return torch.cat([values[p] for p in self.preds[self.output_id]], dim=1)


def build_network(network: dict) -> nn.Module:
    """Torch model matching the layer list exactly, layer by layer."""
    modules: list[nn.Module] = []
    for layer in network["layers"]:
        kind = layer["kind"]
        if kind == "stem":
            modules.append(
                conv_bn_relu(
                    layer["in_channels"], layer["out_channels"],
                    tuple(layer["kernel"]),
                )
            )
        elif kind == "projection-1x1":
            modules.append(
                conv_bn_relu(
                    layer["in_channels"], layer["out_channels"], (1, 1)
                )
            )
        elif kind == "cell-instance":
            modules.append(CellModule(layer["cell"], layer["width"]))
        elif kind == "maxpool":
            modules.append(nn.MaxPool2d(2, 2))
        elif kind == "global-pool":
            modules.append(nn.AdaptiveAvgPool2d(1))
        elif kind == "classifier":
            modules.append(
                nn.Sequential(
                    nn.Flatten(),
                    nn.Linear(layer["in_channels"], layer["out_channels"]),
                )
            )
        else:
            raise ValueError(f"unknown layer kind {kind!r}")
    return nn.Sequential(*modules)


def parameter_count(model: nn.Module) -> int:
    return sum(p.numel() for p in model.parameters())
