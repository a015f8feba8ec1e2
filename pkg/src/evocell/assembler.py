"""Macro-architecture assembly and parameter accounting.

A network is a 3x3 stem, three blocks of repeated cells with 2x2 max-pooling
between blocks (spatial halved, cell width doubled), then global average
pooling and a single fully connected classifier. A 1x1 projection is inserted
in front of any cell whose incoming channel count differs from the block's
node width, so summation inside cells always sees equal widths.

Counting convention: convolutions carry no bias and are followed by
batch-norm contributing 2 learnable scalars per channel (running statistics
uncounted); the classifier is the only biased layer; pooling is free.
"""

from __future__ import annotations

from dataclasses import dataclass

from .mapper import (
    OUTPUT_ID,
    CellGraph,
    cell_from_json,
    cell_to_json,
    validate_cell,
)

KIND_STEM = "stem"
KIND_CELL = "cell-instance"
KIND_MAXPOOL = "maxpool"
KIND_PROJECTION = "projection-1x1"
KIND_GLOBAL_POOL = "global-pool"
KIND_CLASSIFIER = "classifier"


class AssemblyError(ValueError):
    pass


@dataclass(frozen=True)
class MacroConfig:
    stem_channels: int
    blocks: tuple[int, int, int]
    num_classes: int
    input_shape: tuple[int, int, int] = (32, 32, 3)  # (height, width, channels)
    param_budget: int = 3_500_000

    def __post_init__(self) -> None:
        if self.stem_channels < 1:
            raise ValueError("stem_channels must be positive")
        if len(self.blocks) != 3 or any(b < 1 for b in self.blocks):
            raise ValueError(f"blocks must be 3 positive repeat counts, got {self.blocks}")
        if self.num_classes < 1:
            raise ValueError("num_classes must be positive")
        if any(d < 1 for d in self.input_shape):
            raise ValueError("input_shape dims must be positive")
        if self.param_budget < 0:
            raise ValueError("param_budget must be non-negative")


@dataclass(frozen=True)
class LayerSpec:
    kind: str
    in_channels: int
    out_channels: int
    in_spatial: tuple[int, int]
    out_spatial: tuple[int, int]
    params: int
    kernel: tuple[int, int] | None = None  # stem / projection
    width: int | None = None  # cell-instance node width
    cell: CellGraph | None = None  # cell-instance structure


@dataclass(frozen=True)
class NetworkSpec:
    layers: tuple[LayerSpec, ...]
    input_shape: tuple[int, int, int]
    num_classes: int

    @property
    def total_params(self) -> int:
        return sum(layer.params for layer in self.layers)


def cell_output_multiplicity(cell: CellGraph) -> int:
    """Number of output-node predecessors; the cell emits that many widths."""
    return len(cell.predecessors(OUTPUT_ID))


def cell_params(cell: CellGraph, width: int) -> int:
    """Learnable scalars inside one cell instance at the given node width."""
    total = 0
    for node in cell.conv_nodes():
        assert node.op is not None
        kh, kw = node.op.kernel
        total += kh * kw * width * width + 2 * width
    return total


def _conv_params(kh: int, kw: int, c_in: int, c_out: int) -> int:
    return kh * kw * c_in * c_out + 2 * c_out


def assemble(cell: CellGraph, macro: MacroConfig) -> NetworkSpec:
    """Expand a cell into the full layer sequence with exact shape bookkeeping."""
    problems = validate_cell(cell)
    if problems:
        raise AssemblyError(f"invalid cell: {problems[0]}")

    height, width_px, channels = macro.input_shape
    k = cell_output_multiplicity(cell)
    layers: list[LayerSpec] = []

    spatial = (height, width_px)
    layers.append(
        LayerSpec(
            kind=KIND_STEM,
            in_channels=channels,
            out_channels=macro.stem_channels,
            in_spatial=spatial,
            out_spatial=spatial,
            params=_conv_params(3, 3, channels, macro.stem_channels),
            kernel=(3, 3),
        )
    )
    current = macro.stem_channels

    for block_index, repeats in enumerate(macro.blocks):
        block_width = macro.stem_channels * (2**block_index)
        if block_index > 0:
            out_spatial = (spatial[0] // 2, spatial[1] // 2)
            if spatial[0] < 2 or spatial[1] < 2:
                raise AssemblyError(
                    f"layer {len(layers)} ({KIND_MAXPOOL} before block "
                    f"{block_index + 1}): spatial {spatial[0]}x{spatial[1]} "
                    "is too small to pool"
                )
            layers.append(
                LayerSpec(
                    kind=KIND_MAXPOOL,
                    in_channels=current,
                    out_channels=current,
                    in_spatial=spatial,
                    out_spatial=out_spatial,
                    params=0,
                )
            )
            spatial = out_spatial
        for _ in range(repeats):
            if current != block_width:
                layers.append(
                    LayerSpec(
                        kind=KIND_PROJECTION,
                        in_channels=current,
                        out_channels=block_width,
                        in_spatial=spatial,
                        out_spatial=spatial,
                        params=_conv_params(1, 1, current, block_width),
                        kernel=(1, 1),
                    )
                )
                current = block_width
            layers.append(
                LayerSpec(
                    kind=KIND_CELL,
                    in_channels=current,
                    out_channels=k * block_width,
                    in_spatial=spatial,
                    out_spatial=spatial,
                    params=cell_params(cell, block_width),
                    width=block_width,
                    cell=cell,
                )
            )
            current = k * block_width

    layers.append(
        LayerSpec(
            kind=KIND_GLOBAL_POOL,
            in_channels=current,
            out_channels=current,
            in_spatial=spatial,
            out_spatial=(1, 1),
            params=0,
        )
    )
    layers.append(
        LayerSpec(
            kind=KIND_CLASSIFIER,
            in_channels=current,
            out_channels=macro.num_classes,
            in_spatial=(1, 1),
            out_spatial=(1, 1),
            params=current * macro.num_classes + macro.num_classes,
        )
    )
    return NetworkSpec(
        layers=tuple(layers),
        input_shape=macro.input_shape,
        num_classes=macro.num_classes,
    )


def count_params(spec: NetworkSpec) -> int:
    return spec.total_params


@dataclass(frozen=True)
class ConstraintResult:
    ok: bool
    exceeded_by: int = 0


def check_constraint(spec: NetworkSpec, budget: int) -> ConstraintResult:
    """Model-size budget check: ok iff total parameters fit within ``budget``."""
    total = count_params(spec)
    if total <= budget:
        return ConstraintResult(ok=True)
    return ConstraintResult(ok=False, exceeded_by=total - budget)


# -- JSON export / import -------------------------------------------------------


def network_to_json(spec: NetworkSpec) -> dict:
    layers = []
    for layer in spec.layers:
        entry: dict = {
            "kind": layer.kind,
            "in_channels": layer.in_channels,
            "out_channels": layer.out_channels,
            "in_spatial": list(layer.in_spatial),
            "out_spatial": list(layer.out_spatial),
            "params": layer.params,
        }
        if layer.kernel is not None:
            entry["kernel"] = list(layer.kernel)
        if layer.kind == KIND_CELL:
            entry["width"] = layer.width
            entry["cell"] = cell_to_json(layer.cell)
        layers.append(entry)
    return {
        "input_shape": list(spec.input_shape),
        "num_classes": spec.num_classes,
        "total_params": spec.total_params,
        "layers": layers,
    }


def network_from_json(data: dict) -> NetworkSpec:
    layers = []
    for entry in data["layers"]:
        layers.append(
            LayerSpec(
                kind=entry["kind"],
                in_channels=entry["in_channels"],
                out_channels=entry["out_channels"],
                in_spatial=tuple(entry["in_spatial"]),
                out_spatial=tuple(entry["out_spatial"]),
                params=entry["params"],
                kernel=tuple(entry["kernel"]) if "kernel" in entry else None,
                width=entry.get("width"),
                cell=cell_from_json(entry["cell"]) if "cell" in entry else None,
            )
        )
    return NetworkSpec(
        layers=tuple(layers),
        input_shape=tuple(data["input_shape"]),
        num_classes=data["num_classes"],
    )


def layer_table(spec: NetworkSpec) -> str:
    """Human-readable layer listing with a parameter total."""
    rows = [("#", "kind", "in_ch", "out_ch", "spatial", "params")]
    for i, layer in enumerate(spec.layers):
        rows.append(
            (
                str(i),
                layer.kind,
                str(layer.in_channels),
                str(layer.out_channels),
                f"{layer.in_spatial[0]}x{layer.in_spatial[1]}"
                f"->{layer.out_spatial[0]}x{layer.out_spatial[1]}",
                str(layer.params),
            )
        )
    widths = [max(len(r[c]) for r in rows) for c in range(len(rows[0]))]
    lines = ["  ".join(cell.ljust(widths[c]) for c, cell in enumerate(row)) for row in rows]
    lines.append(f"total params: {spec.total_params}")
    return "\n".join(lines)
