"""Linear fixed-length genotypes: program-symbol heads, convolution tails.

A chromosome is ``n`` genes of identical length. Each gene carries a head of
``h`` graph-transformation symbols followed by a tail of ``h + 1`` convolution
operations, so every head position can be paired with a child convolution
during development.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from random import Random
from typing import Iterator


class ProgramSymbol(enum.Enum):
    """Head alphabet: the four graph-transformation programs."""

    SEQ = "SEQ"
    CPI = "CPI"
    CPO = "CPO"
    END = "END"


class ConvOp(enum.Enum):
    """Tail alphabet: regular convolutions, stride 1, spatial-preserving pad."""

    CONV_1X1 = "Conv1x1"
    CONV_1X3 = "Conv1x3"
    CONV_3X1 = "Conv3x1"
    CONV_3X3 = "Conv3x3"

    @property
    def kernel(self) -> tuple[int, int]:
        """Kernel size as (height, width)."""
        return _KERNELS[self]


_KERNELS = {
    ConvOp.CONV_1X1: (1, 1),
    ConvOp.CONV_1X3: (1, 3),
    ConvOp.CONV_3X1: (3, 1),
    ConvOp.CONV_3X3: (3, 3),
}

PROGRAM_SYMBOLS: tuple[ProgramSymbol, ...] = tuple(ProgramSymbol)
CONV_OPS: tuple[ConvOp, ...] = tuple(ConvOp)

_SYMBOL_BY_NAME = {s.value: s for s in PROGRAM_SYMBOLS}
_OP_BY_NAME = {o.value: o for o in CONV_OPS}

GENE_SEP = ";"
SECTION_SEP = "|"
ELEMENT_SEP = ","

#: Results above this bound are reported as overflow rather than returned.
SEARCH_SPACE_LIMIT = 2**64 - 1


@dataclass(frozen=True)
class GenomeConfig:
    """Shape of a chromosome: ``gene_count`` genes with heads of ``head_length``."""

    head_length: int
    gene_count: int

    def __post_init__(self) -> None:
        if self.head_length < 1:
            raise ValueError(f"head_length must be >= 1, got {self.head_length}")
        if self.gene_count < 1:
            raise ValueError(f"gene_count must be >= 1, got {self.gene_count}")

    @property
    def tail_length(self) -> int:
        return self.head_length + 1

    @property
    def gene_length(self) -> int:
        return 2 * self.head_length + 1

    @property
    def total_elements(self) -> int:
        return self.gene_count * self.gene_length


@dataclass(frozen=True)
class Gene:
    head: tuple[ProgramSymbol, ...]
    tail: tuple[ConvOp, ...]

    def elements(self) -> tuple:
        return self.head + self.tail


@dataclass(frozen=True)
class Chromosome:
    genes: tuple[Gene, ...]
    config: GenomeConfig

    def flat(self) -> tuple:
        """All elements in gene order, heads before tails."""
        out: list = []
        for g in self.genes:
            out.extend(g.elements())
        return tuple(out)

    def __str__(self) -> str:
        return encode_text(self)


def chromosome_from_flat(config: GenomeConfig, elements) -> Chromosome:
    """Rebuild a chromosome from the flat element layout used by ``flat()``."""
    if len(elements) != config.total_elements:
        raise ValueError(
            f"expected {config.total_elements} elements, got {len(elements)}"
        )
    h, t = config.head_length, config.tail_length
    genes = []
    for i in range(config.gene_count):
        base = i * config.gene_length
        head = tuple(elements[base : base + h])
        tail = tuple(elements[base + h : base + h + t])
        genes.append(Gene(head=head, tail=tail))
    return Chromosome(genes=tuple(genes), config=config)


@dataclass(frozen=True)
class Violation:
    """One broken structural rule, located by gene and in-gene position."""

    rule: str
    gene_index: int | None = None
    position: int | None = None

    def __str__(self) -> str:
        where = ""
        if self.gene_index is not None:
            where = f" at gene {self.gene_index}"
            if self.position is not None:
                where += f", position {self.position}"
        return f"{self.rule}{where}"


def random_chromosome(config: GenomeConfig, rng: Random) -> Chromosome:
    """Draw every head element and every tail element uniformly."""
    genes = []
    for _ in range(config.gene_count):
        head = tuple(
            PROGRAM_SYMBOLS[rng.randrange(len(PROGRAM_SYMBOLS))]
            for _ in range(config.head_length)
        )
        tail = tuple(
            CONV_OPS[rng.randrange(len(CONV_OPS))] for _ in range(config.tail_length)
        )
        genes.append(Gene(head=head, tail=tail))
    return Chromosome(genes=tuple(genes), config=config)


def validate(ch: Chromosome) -> list[Violation]:
    """Check every structural rule; an empty list means the chromosome is valid.

    Positions are indices into the gene's element layout: head occupies
    ``0 .. h-1``, tail occupies ``h .. 2h``.
    """
    cfg = ch.config
    violations: list[Violation] = []
    if len(ch.genes) != cfg.gene_count:
        violations.append(Violation(rule="gene count"))
    for i, gene in enumerate(ch.genes):
        if len(gene.head) != cfg.head_length:
            violations.append(Violation(rule="head length", gene_index=i))
        if len(gene.tail) != cfg.tail_length:
            violations.append(Violation(rule="tail length", gene_index=i))
        for j, sym in enumerate(gene.head):
            if not isinstance(sym, ProgramSymbol):
                violations.append(
                    Violation(rule="head domain", gene_index=i, position=j)
                )
        for j, op in enumerate(gene.tail):
            if not isinstance(op, ConvOp):
                violations.append(
                    Violation(
                        rule="tail domain", gene_index=i, position=len(gene.head) + j
                    )
                )
    return violations


def is_valid(ch: Chromosome) -> bool:
    return not validate(ch)


def encode_text(ch: Chromosome) -> str:
    """Canonical text form: genes joined by ';', head '|' tail, ',' elements."""
    parts = []
    for gene in ch.genes:
        head = ELEMENT_SEP.join(s.value for s in gene.head)
        tail = ELEMENT_SEP.join(o.value for o in gene.tail)
        parts.append(head + SECTION_SEP + tail)
    return GENE_SEP.join(parts)


class DecodeError(ValueError):
    """Raised on malformed chromosome text; ``position`` is a character offset."""

    def __init__(self, position: int, message: str):
        self.position = position
        self.message = message
        super().__init__(f"position {position}: {message}")


def decode_text(s: str) -> Chromosome:
    """Parse canonical chromosome text, reporting the first error position."""
    if not s:
        raise DecodeError(0, "empty chromosome text")
    genes: list[Gene] = []
    head_length: int | None = None
    offset = 0
    for gene_text in s.split(GENE_SEP):
        if SECTION_SEP not in gene_text:
            raise DecodeError(offset, "gene missing '|' head/tail separator")
        head_text, tail_text = gene_text.split(SECTION_SEP, 1)
        head = _parse_section(head_text, offset, _SYMBOL_BY_NAME, "program symbol")
        tail_offset = offset + len(head_text) + 1
        tail = _parse_section(tail_text, tail_offset, _OP_BY_NAME, "convolution op")
        if head_length is None:
            head_length = len(head)
        elif len(head) != head_length:
            raise DecodeError(
                offset,
                f"head length {len(head)} differs from first gene's {head_length}",
            )
        if len(tail) != head_length + 1:
            raise DecodeError(
                tail_offset,
                f"tail length must be {head_length + 1} (head length + 1), "
                f"got {len(tail)}",
            )
        genes.append(Gene(head=tuple(head), tail=tuple(tail)))
        offset += len(gene_text) + 1
    assert head_length is not None
    config = GenomeConfig(head_length=head_length, gene_count=len(genes))
    return Chromosome(genes=tuple(genes), config=config)


def _parse_section(text: str, offset: int, table: dict, what: str) -> list:
    items = []
    pos = offset
    for token in text.split(ELEMENT_SEP):
        if token not in table:
            raise DecodeError(pos, f"unknown {what} {token!r}")
        items.append(table[token])
        pos += len(token) + 1
    return items


class SearchSpaceOverflow(OverflowError):
    """Search-space size exceeds the supported 64-bit counter range."""


def search_space_size(h: int, n: int, num_symbols: int, num_ops: int) -> int:
    """Architectures reachable at head length ``h`` with ``n`` genes.

    Computes ``num_symbols**h * num_ops**(h+1) * n``. Results beyond an
    unsigned 64-bit counter raise :class:`SearchSpaceOverflow` instead of
    being returned.
    """
    for name, value in (("h", h), ("n", n), ("num_symbols", num_symbols), ("num_ops", num_ops)):
        if value < 1:
            raise ValueError(f"{name} must be positive, got {value}")
    size = num_symbols**h * num_ops ** (h + 1) * n
    if size > SEARCH_SPACE_LIMIT:
        raise SearchSpaceOverflow(
            f"search-space size {size} exceeds the 64-bit limit {SEARCH_SPACE_LIMIT}"
        )
    return size


def all_genes(head_length: int) -> Iterator[Gene]:
    """Enumerate every distinct gene at the given head length, in codec order."""
    from itertools import product

    for head in product(PROGRAM_SYMBOLS, repeat=head_length):
        for tail in product(CONV_OPS, repeat=head_length + 1):
            yield Gene(head=head, tail=tail)


def all_chromosomes(config: GenomeConfig) -> Iterator[Chromosome]:
    """Enumerate the full chromosome space for ``config``. Combinatorial: guard sizes."""
    from itertools import product

    per_gene = list(all_genes(config.head_length))
    for combo in product(per_gene, repeat=config.gene_count):
        yield Chromosome(genes=tuple(combo), config=config)
