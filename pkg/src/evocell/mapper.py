"""Development of linear genotypes into convolutional-cell DAGs.

Each gene grows its own subgraph: the first tail convolution seeds an
input -> conv -> output chain, then every head symbol divides the current
parent node, wiring the next tail convolution in as the child. Finished
subgraphs are merged into one cell at the shared input/output nodes. An END
symbol merges the in-progress subgraph and stops development of the whole
chromosome, leaving any remaining genes unexpressed.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass

from .genome import Chromosome, ConvOp, ProgramSymbol, validate

INPUT_ID = 0
OUTPUT_ID = 1

# local sentinel ids inside a gene subgraph; convs are numbered from 0
SUB_INPUT = -1
SUB_OUTPUT = -2

KIND_INPUT = "input"
KIND_OUTPUT = "output"
KIND_CONV = "conv"


@dataclass(frozen=True)
class CellNode:
    id: int
    kind: str
    op: ConvOp | None = None


@dataclass(frozen=True)
class CellGraph:
    """Acyclic cell: one input node (id 0), one output node (id 1), conv nodes."""

    nodes: tuple[CellNode, ...]
    edges: frozenset[tuple[int, int]]

    def node(self, node_id: int) -> CellNode:
        return self.nodes[node_id]

    def conv_nodes(self) -> tuple[CellNode, ...]:
        return tuple(n for n in self.nodes if n.kind == KIND_CONV)

    def predecessors(self, node_id: int) -> list[int]:
        return sorted(a for a, b in self.edges if b == node_id)

    def successors(self, node_id: int) -> list[int]:
        return sorted(b for a, b in self.edges if a == node_id)


@dataclass(frozen=True)
class GeneSubgraph:
    """One gene's in-progress graph; ``parent`` is the node the next division splits."""

    conv_ops: tuple[ConvOp, ...]
    edges: frozenset[tuple[int, int]]
    parent: int


def empty_cell() -> CellGraph:
    return CellGraph(
        nodes=(CellNode(INPUT_ID, KIND_INPUT), CellNode(OUTPUT_ID, KIND_OUTPUT)),
        edges=frozenset(),
    )


def init_subgraph(first_conv: ConvOp) -> GeneSubgraph:
    """Seed a gene subgraph: input -> first conv -> output."""
    return GeneSubgraph(
        conv_ops=(first_conv,),
        edges=frozenset({(SUB_INPUT, 0), (0, SUB_OUTPUT)}),
        parent=0,
    )


def transform(
    g: GeneSubgraph, ps: ProgramSymbol, parent: int, child: ConvOp
) -> GeneSubgraph:
    """Divide ``parent`` according to program ``ps``, creating a node for ``child``.

    SEQ: the child takes over all of the parent's outgoing edges.
    CPI: as SEQ, and the child also receives every input the parent has.
    CPO: the child copies the parent's outgoing edges; the parent keeps them.
    """
    if ps is ProgramSymbol.END:
        raise ValueError("END is not a graph transformation")
    if not (0 <= parent < len(g.conv_ops)):
        raise ValueError(f"parent node {parent} not in subgraph")

    child_id = len(g.conv_ops)
    edges = set(g.edges)
    succ = [b for a, b in g.edges if a == parent]
    if ps is ProgramSymbol.SEQ or ps is ProgramSymbol.CPI:
        for node in succ:
            edges.add((child_id, node))
            edges.discard((parent, node))
        if ps is ProgramSymbol.CPI:
            for node in [a for a, b in g.edges if b == parent]:
                edges.add((node, child_id))
    else:  # CPO
        for node in succ:
            edges.add((child_id, node))
    edges.add((parent, child_id))
    return GeneSubgraph(
        conv_ops=g.conv_ops + (child,), edges=frozenset(edges), parent=child_id
    )


def merge(dag: CellGraph, g: GeneSubgraph) -> CellGraph:
    """Graft a gene subgraph onto the cell's shared input and output nodes."""
    base = len(dag.nodes)
    id_map = {SUB_INPUT: INPUT_ID, SUB_OUTPUT: OUTPUT_ID}
    for local in range(len(g.conv_ops)):
        id_map[local] = base + local
    nodes = dag.nodes + tuple(
        CellNode(base + i, KIND_CONV, op) for i, op in enumerate(g.conv_ops)
    )
    edges = set(dag.edges)
    edges.update((id_map[a], id_map[b]) for a, b in g.edges)
    return CellGraph(nodes=nodes, edges=frozenset(edges))


def develop(ch: Chromosome, check: bool = False) -> CellGraph:
    """Map a chromosome to its cell graph.

    With ``check=True`` the cell invariants are re-verified after every
    transformation and merge (test instrumentation; development itself is
    deterministic and total over valid chromosomes).
    """
    problems = validate(ch)
    if problems:
        raise ValueError(f"invalid chromosome: {problems[0]}")

    dag = empty_cell()
    for gene in ch.genes:
        queue = list(gene.tail)
        queue.pop(0)  # first conv seeds the subgraph as the initial parent
        g = init_subgraph(gene.tail[0])
        pos = 0
        while queue:
            ps = gene.head[pos]
            if ps is ProgramSymbol.END:
                dag = merge(dag, g)
                if check:
                    _assert_cell_ok(dag)
                return dag
            child = queue.pop(0)
            g = transform(g, ps, g.parent, child)
            if check:
                _assert_acyclic(g.edges)
            pos += 1
        dag = merge(dag, g)
        if check:
            _assert_cell_ok(dag)
    return dag


def validate_cell(cell: CellGraph) -> list[str]:
    """Check the cell invariants; an empty list means the cell is well formed."""
    problems = []
    kinds = [n.kind for n in cell.nodes]
    if kinds.count(KIND_INPUT) != 1 or cell.nodes[INPUT_ID].kind != KIND_INPUT:
        problems.append("exactly one input node with id 0 required")
    if kinds.count(KIND_OUTPUT) != 1 or cell.nodes[OUTPUT_ID].kind != KIND_OUTPUT:
        problems.append("exactly one output node with id 1 required")
    ids = [n.id for n in cell.nodes]
    if ids != list(range(len(cell.nodes))):
        problems.append("node ids must be 0..n-1 in order")
    for a, b in cell.edges:
        if not (0 <= a < len(cell.nodes) and 0 <= b < len(cell.nodes)):
            problems.append(f"edge ({a}, {b}) references a missing node")
    if problems:
        return problems
    if cell.predecessors(INPUT_ID):
        problems.append("input node has incoming edges")
    if cell.successors(OUTPUT_ID):
        problems.append("output node has outgoing edges")
    if not _is_acyclic(cell.edges):
        problems.append("cell contains a cycle")
    reach_fwd = _reachable(cell.edges, INPUT_ID, forward=True)
    reach_bwd = _reachable(cell.edges, OUTPUT_ID, forward=False)
    for n in cell.conv_nodes():
        if n.id not in reach_fwd or n.id not in reach_bwd:
            problems.append(f"conv node {n.id} is off every input->output path")
    return problems


def _reachable(edges, start, forward: bool) -> set[int]:
    adj: dict[int, list[int]] = {}
    for a, b in edges:
        src, dst = (a, b) if forward else (b, a)
        adj.setdefault(src, []).append(dst)
    seen = {start}
    stack = [start]
    while stack:
        for nxt in adj.get(stack.pop(), []):
            if nxt not in seen:
                seen.add(nxt)
                stack.append(nxt)
    return seen


def _is_acyclic(edges) -> bool:
    adj: dict[int, list[int]] = {}
    indeg: dict[int, int] = {}
    nodes = set()
    for a, b in edges:
        adj.setdefault(a, []).append(b)
        indeg[b] = indeg.get(b, 0) + 1
        nodes.update((a, b))
    ready = [n for n in nodes if indeg.get(n, 0) == 0]
    seen = 0
    while ready:
        n = ready.pop()
        seen += 1
        for m in adj.get(n, []):
            indeg[m] -= 1
            if indeg[m] == 0:
                ready.append(m)
    return seen == len(nodes)


def _assert_acyclic(edges) -> None:
    if not _is_acyclic(edges):
        raise AssertionError("transformation produced a cycle")


def _assert_cell_ok(cell: CellGraph) -> None:
    problems = validate_cell(cell)
    if problems:
        raise AssertionError(f"merge broke cell invariants: {problems}")


def topological_order(cell: CellGraph) -> list[int]:
    """Deterministic topological order (ties broken by node id)."""
    indeg = {n.id: 0 for n in cell.nodes}
    for _, b in cell.edges:
        indeg[b] += 1
    ready = [i for i, d in indeg.items() if d == 0]
    heapq.heapify(ready)
    order = []
    while ready:
        n = heapq.heappop(ready)
        order.append(n)
        for m in cell.successors(n):
            indeg[m] -= 1
            if indeg[m] == 0:
                heapq.heappush(ready, m)
    if len(order) != len(cell.nodes):
        raise ValueError("graph is not acyclic")
    return order


# -- canonical form -----------------------------------------------------------
#
# Exact canonical labelling by colour refinement plus individualisation with
# full backtracking: small cells make the worst case irrelevant. Two cells are
# isomorphic iff their canonical forms are equal strings.


def _node_signature(node: CellNode) -> str:
    return f"{node.kind}:{node.op.value}" if node.op else node.kind


def _refine(colors: dict[int, int], edges) -> dict[int, int]:
    """Iterate colour refinement until the partition stabilises. Colours are ints."""
    preds: dict[int, list[int]] = {n: [] for n in colors}
    succs: dict[int, list[int]] = {n: [] for n in colors}
    for a, b in edges:
        succs[a].append(b)
        preds[b].append(a)
    while True:
        sig = {
            n: (
                colors[n],
                tuple(sorted(colors[m] for m in succs[n])),
                tuple(sorted(colors[m] for m in preds[n])),
            )
            for n in colors
        }
        ranks = {s: i for i, s in enumerate(sorted(set(sig.values())))}
        new_colors = {n: ranks[sig[n]] for n in colors}
        if len(set(new_colors.values())) == len(set(colors.values())):
            return new_colors
        colors = new_colors


def _serialize(cell: CellGraph, labels: dict[int, int]) -> str:
    nodes = sorted((labels[n.id], _node_signature(n)) for n in cell.nodes)
    edges = sorted((labels[a], labels[b]) for a, b in cell.edges)
    node_part = ",".join(f"{i}={sig}" for i, sig in nodes)
    edge_part = ",".join(f"{a}>{b}" for a, b in edges)
    return node_part + "/" + edge_part


def canonical_form(cell: CellGraph) -> str:
    """Isomorphism-invariant string encoding of the cell."""
    signatures = sorted({_node_signature(n) for n in cell.nodes})
    sig_rank = {s: i for i, s in enumerate(signatures)}
    initial = {n.id: sig_rank[_node_signature(n)] for n in cell.nodes}

    def search(colors: dict[int, int]) -> str:
        colors = _refine(colors, cell.edges)
        groups: dict[int, list[int]] = {}
        for n, c in colors.items():
            groups.setdefault(c, []).append(n)
        non_singleton = sorted(c for c, ns in groups.items() if len(ns) > 1)
        if not non_singleton:
            order = sorted(colors, key=lambda n: colors[n])
            labels = {n: i for i, n in enumerate(order)}
            return _serialize(cell, labels)
        target = non_singleton[0]
        fresh = max(colors.values()) + 1
        best: str | None = None
        for n in groups[target]:
            branched = dict(colors)
            branched[n] = fresh
            candidate = search(branched)
            if best is None or candidate < best:
                best = candidate
        assert best is not None
        return best

    return search(initial)


def cells_isomorphic(a: CellGraph, b: CellGraph) -> bool:
    return canonical_form(a) == canonical_form(b)


# -- exports -------------------------------------------------------------------


def to_dot(cell: CellGraph) -> str:
    """DOT text with nodes and edges in stable id order."""
    lines = ["digraph cell {"]
    for n in cell.nodes:
        if n.kind == KIND_CONV:
            assert n.op is not None
            lines.append(f'  n{n.id} [label="{n.op.value}"];')
        else:
            lines.append(f'  n{n.id} [label="{n.kind.capitalize()}" shape=box];')
    for a, b in sorted(cell.edges):
        lines.append(f"  n{a} -> n{b};")
    lines.append("}")
    return "\n".join(lines) + "\n"


def cell_to_json(cell: CellGraph) -> dict:
    """JSON-ready dict: nodes in id order, edges sorted."""
    nodes = []
    for n in cell.nodes:
        entry: dict = {"id": n.id, "kind": n.kind}
        if n.op is not None:
            entry["op"] = n.op.value
        nodes.append(entry)
    return {"nodes": nodes, "edges": [list(e) for e in sorted(cell.edges)]}


def cell_from_json(data: dict) -> CellGraph:
    from .genome import _OP_BY_NAME

    nodes = []
    for entry in data["nodes"]:
        op = _OP_BY_NAME[entry["op"]] if "op" in entry else None
        nodes.append(CellNode(entry["id"], entry["kind"], op))
    nodes.sort(key=lambda n: n.id)
    edges = frozenset((a, b) for a, b in data["edges"])
    return CellGraph(nodes=tuple(nodes), edges=edges)
