"""Shared test data: the worked two-gene genotype, its known cell, a fake RNG."""

from __future__ import annotations

from evocell.genome import ConvOp
from evocell.mapper import KIND_CONV, KIND_INPUT, KIND_OUTPUT, CellGraph, CellNode

# The worked example used throughout: two genes with all-CPO heads. Develops
# into two parallel four-conv chains from the input, every conv also edged to
# the output.
GOLDEN_TEXT = (
    "CPO,CPO,CPO|Conv3x1,Conv1x3,Conv3x3,Conv3x3"
    ";CPO,CPO,CPO|Conv1x1,Conv3x3,Conv3x3,Conv3x3"
)

GOLDEN_EDGES = frozenset(
    {
        (0, 2), (2, 3), (3, 4), (4, 5),
        (2, 1), (3, 1), (4, 1), (5, 1),
        (0, 6), (6, 7), (7, 8), (8, 9),
        (6, 1), (7, 1), (8, 1), (9, 1),
    }
)


def build_golden_cell(permute: bool = False) -> CellGraph:
    """Hand-built reference cell; ``permute`` relabels nodes to test invariance."""
    ops = [
        ConvOp.CONV_3X1, ConvOp.CONV_1X3, ConvOp.CONV_3X3, ConvOp.CONV_3X3,
        ConvOp.CONV_1X1, ConvOp.CONV_3X3, ConvOp.CONV_3X3, ConvOp.CONV_3X3,
    ]
    conv_ids = list(range(2, 10))
    if permute:
        # swap the two chains
        mapping = {0: 0, 1: 1, 2: 6, 3: 7, 4: 8, 5: 9, 6: 2, 7: 3, 8: 4, 9: 5}
    else:
        mapping = {i: i for i in range(10)}
    nodes = [CellNode(0, KIND_INPUT), CellNode(1, KIND_OUTPUT)]
    by_new_id = {}
    for old_id, op in zip(conv_ids, ops):
        by_new_id[mapping[old_id]] = op
    for new_id in sorted(by_new_id):
        nodes.append(CellNode(new_id, KIND_CONV, by_new_id[new_id]))
    edges = frozenset((mapping[a], mapping[b]) for a, b in GOLDEN_EDGES)
    return CellGraph(nodes=tuple(nodes), edges=edges)


class FakeRng:
    """Scripted random source for pinpointing operator draws in tests."""

    def __init__(self, randoms=(), randranges=(), shuffles=None):
        self._randoms = list(randoms)
        self._randranges = list(randranges)
        self._shuffles = shuffles

    def random(self):
        return self._randoms.pop(0)

    def randrange(self, *args):
        return self._randranges.pop(0)

    def shuffle(self, seq):
        if self._shuffles is not None:
            seq[:] = self._shuffles
