"""Generational search over linear genotypes.

Each generation: evaluate, roulette-wheel selection with elitism, then
per-element mutation, head-segment inversion, head-segment transposition and
two recombination forms applied to the non-elite slots. Every operator
preserves the head/tail domain split, so offspring never need repair.
"""

from __future__ import annotations

import logging
from bisect import bisect_left
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from random import Random
from typing import Callable

from .fitness import EvaluationError, MemoizedEvaluator
from .genome import (
    CONV_OPS,
    PROGRAM_SYMBOLS,
    Chromosome,
    Gene,
    GenomeConfig,
    chromosome_from_flat,
    encode_text,
    random_chromosome,
)

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class EvolutionParams:
    population_size: int = 20
    generations: int = 20
    elites: int = 1
    mutation_rate: float = 0.044  # per element
    inversion_rate: float = 0.1  # per chromosome
    transposition_rate: float = 0.1  # per chromosome
    seq_length: int = 2  # inversion/transposition segment length
    two_point_rate: float = 0.6  # per recombination pair
    gene_rate: float = 0.1  # per recombination pair
    rng_seed: int = 0

    def __post_init__(self) -> None:
        for name in ("mutation_rate", "inversion_rate", "transposition_rate",
                     "two_point_rate", "gene_rate"):
            rate = getattr(self, name)
            if not 0.0 <= rate <= 1.0:
                raise ValueError(f"{name} must be in [0, 1], got {rate}")
        if self.population_size < 1:
            raise ValueError("population_size must be >= 1")
        if self.generations < 1:
            raise ValueError("generations must be >= 1")
        if not 0 <= self.elites < self.population_size:
            raise ValueError("elites must satisfy 0 <= elites < population_size")
        if self.seq_length < 1:
            raise ValueError("seq_length must be >= 1")


@dataclass
class Individual:
    chromosome: Chromosome
    fitness: float | None = None

    @property
    def text(self) -> str:
        return encode_text(self.chromosome)


@dataclass(frozen=True)
class GenerationRecord:
    generation: int
    best_fitness: float
    mean_fitness: float
    best_chromosome: str
    evaluations: int


@dataclass
class History:
    records: list[GenerationRecord] = field(default_factory=list)

    @property
    def total_evaluations(self) -> int:
        return sum(r.evaluations for r in self.records)


# -- variation operators --------------------------------------------------------


def mutate(ch: Chromosome, rate: float, rng: Random) -> Chromosome:
    """Resample each element with probability ``rate``, uniform over its domain."""
    genes = []
    for gene in ch.genes:
        head = tuple(
            PROGRAM_SYMBOLS[rng.randrange(len(PROGRAM_SYMBOLS))]
            if rng.random() < rate
            else s
            for s in gene.head
        )
        tail = tuple(
            CONV_OPS[rng.randrange(len(CONV_OPS))] if rng.random() < rate else o
            for o in gene.tail
        )
        genes.append(Gene(head=head, tail=tail))
    return Chromosome(genes=tuple(genes), config=ch.config)


def invert(ch: Chromosome, rate: float, seq_len: int, rng: Random) -> Chromosome:
    """Reverse a ``seq_len`` head segment of one gene, with probability ``rate``."""
    h = ch.config.head_length
    if seq_len > h:
        raise ValueError(f"seq_len {seq_len} exceeds head length {h}")
    if rng.random() >= rate:
        return ch
    gene_idx = rng.randrange(ch.config.gene_count)
    start = rng.randrange(h - seq_len + 1)
    gene = ch.genes[gene_idx]
    head = list(gene.head)
    head[start : start + seq_len] = reversed(head[start : start + seq_len])
    genes = list(ch.genes)
    genes[gene_idx] = Gene(head=tuple(head), tail=gene.tail)
    return Chromosome(genes=tuple(genes), config=ch.config)


def transpose(ch: Chromosome, rate: float, seq_len: int, rng: Random) -> Chromosome:
    """Copy a head segment and insert it at position >= 1 of a gene head.

    Displaced elements shift right and fall off the head boundary; tails are
    never touched. Heads of length 1 admit no insertion point, so the operator
    is the identity there.
    """
    h = ch.config.head_length
    if seq_len > h:
        raise ValueError(f"seq_len {seq_len} exceeds head length {h}")
    if rng.random() >= rate or h < 2:
        return ch
    src_gene = rng.randrange(ch.config.gene_count)
    src_start = rng.randrange(h - seq_len + 1)
    segment = ch.genes[src_gene].head[src_start : src_start + seq_len]
    tgt_gene = rng.randrange(ch.config.gene_count)
    pos = rng.randrange(1, h)
    gene = ch.genes[tgt_gene]
    head = (gene.head[:pos] + segment + gene.head[pos:])[:h]
    genes = list(ch.genes)
    genes[tgt_gene] = Gene(head=head, tail=gene.tail)
    return Chromosome(genes=tuple(genes), config=ch.config)


def recombine_two_point(
    a: Chromosome, b: Chromosome, rng: Random
) -> tuple[Chromosome, Chromosome]:
    """Swap the flat element segment between two uniformly drawn cut points."""
    if a.config != b.config:
        raise ValueError("parents must share a genome config")
    length = a.config.total_elements
    c1 = rng.randrange(length + 1)
    c2 = rng.randrange(length + 1)
    lo, hi = min(c1, c2), max(c1, c2)
    fa, fb = list(a.flat()), list(b.flat())
    fa[lo:hi], fb[lo:hi] = fb[lo:hi], fa[lo:hi]
    return (
        chromosome_from_flat(a.config, fa),
        chromosome_from_flat(b.config, fb),
    )


def recombine_gene(
    a: Chromosome, b: Chromosome, rng: Random
) -> tuple[Chromosome, Chromosome]:
    """Swap one whole gene, drawn uniformly, between the parents."""
    if a.config != b.config:
        raise ValueError("parents must share a genome config")
    idx = rng.randrange(a.config.gene_count)
    ga, gb = list(a.genes), list(b.genes)
    ga[idx], gb[idx] = gb[idx], ga[idx]
    return (
        Chromosome(genes=tuple(ga), config=a.config),
        Chromosome(genes=tuple(gb), config=b.config),
    )


# -- selection -------------------------------------------------------------------


def select(pop: list[Individual], elites: int, rng: Random) -> list[Individual]:
    """Roulette-wheel selection with elitism.

    The ``elites`` best individuals (ties broken by position) are copied
    unchanged; remaining slots are drawn with replacement, probability
    proportional to fitness. An all-zero wheel falls back to uniform draws.
    """
    if any(ind.fitness is None for ind in pop):
        raise ValueError("selection requires a fully evaluated population")
    ranked = sorted(range(len(pop)), key=lambda i: (-pop[i].fitness, i))
    selected = [pop[ranked[i]] for i in range(elites)]
    total = sum(ind.fitness for ind in pop)
    if total > 0.0:
        cumulative = []
        running = 0.0
        for ind in pop:
            running += ind.fitness
            cumulative.append(running)
        for _ in range(len(pop) - elites):
            r = rng.random() * total
            selected.append(pop[bisect_left(cumulative, r)])
    else:
        for _ in range(len(pop) - elites):
            selected.append(pop[rng.randrange(len(pop))])
    return selected


# -- the generational loop -------------------------------------------------------


def evolve(
    genome_cfg: GenomeConfig,
    params: EvolutionParams,
    fitness_fn: Callable[[Chromosome], float],
    workers: int = 1,
) -> tuple[Individual, History]:
    """Run the full search and return the best individual ever evaluated.

    Fitness values are memoized by genotype text, so a chromosome is evaluated
    at most once per run; per-generation history records count only fresh
    evaluations. Evaluation failures are logged and scored 0.0 so one bad
    candidate cannot abort a run. Fully deterministic for a given seed and a
    deterministic fitness function.
    """
    if params.seq_length > genome_cfg.head_length:
        raise ValueError(
            f"seq_length {params.seq_length} exceeds head length "
            f"{genome_cfg.head_length}"
        )
    rng = Random(params.rng_seed)
    memo = (
        fitness_fn
        if isinstance(fitness_fn, MemoizedEvaluator)
        else MemoizedEvaluator(fitness_fn)
    )

    population = [
        Individual(random_chromosome(genome_cfg, rng))
        for _ in range(params.population_size)
    ]
    history = History()
    best: Individual | None = None

    for generation in range(1, params.generations + 1):
        fresh = _evaluate_population(population, memo, workers)
        gen_best = min(
            range(len(population)), key=lambda i: (-population[i].fitness, i)
        )
        if best is None or population[gen_best].fitness > best.fitness:
            best = Individual(
                population[gen_best].chromosome, population[gen_best].fitness
            )
        mean = sum(ind.fitness for ind in population) / len(population)
        history.records.append(
            GenerationRecord(
                generation=generation,
                best_fitness=population[gen_best].fitness,
                mean_fitness=mean,
                best_chromosome=population[gen_best].text,
                evaluations=fresh,
            )
        )
        if generation == params.generations:
            break

        population = select(population, params.elites, rng)
        offspring = [ind.chromosome for ind in population[params.elites :]]
        offspring = [mutate(ch, params.mutation_rate, rng) for ch in offspring]
        offspring = [
            invert(ch, params.inversion_rate, params.seq_length, rng)
            for ch in offspring
        ]
        offspring = [
            transpose(ch, params.transposition_rate, params.seq_length, rng)
            for ch in offspring
        ]
        offspring = _recombine_pool(offspring, params, rng)
        population = population[: params.elites] + [
            Individual(ch) for ch in offspring
        ]

    assert best is not None
    return best, history


def _recombine_pool(
    pool: list[Chromosome], params: EvolutionParams, rng: Random
) -> list[Chromosome]:
    """Pair the pool disjointly at random and apply both crossover forms."""
    order = list(range(len(pool)))
    rng.shuffle(order)
    result = list(pool)
    for k in range(0, len(order) - 1, 2):
        i, j = order[k], order[k + 1]
        a, b = result[i], result[j]
        if rng.random() < params.two_point_rate:
            a, b = recombine_two_point(a, b, rng)
        if rng.random() < params.gene_rate:
            a, b = recombine_gene(a, b, rng)
        result[i], result[j] = a, b
    return result


def _evaluate_population(
    population: list[Individual], memo: MemoizedEvaluator, workers: int
) -> int:
    """Fill in fitness for every individual; returns the fresh-evaluation count."""
    before = memo.inner_calls
    pending: list[Chromosome] = []
    seen: set[str] = set()
    for ind in population:
        text = ind.text
        if not memo.contains(text) and text not in seen:
            seen.add(text)
            pending.append(ind.chromosome)
    if workers > 1 and len(pending) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(lambda ch: _call_safely(memo, ch), pending))
    else:
        for ch in pending:
            _call_safely(memo, ch)
    for ind in population:
        ind.fitness = memo.get(ind.text)
    return memo.inner_calls - before


def _call_safely(memo: MemoizedEvaluator, ch: Chromosome) -> None:
    text = encode_text(ch)
    try:
        memo(ch)
    except EvaluationError as exc:
        log.warning("evaluation failed for %s: %s; scoring 0.0", text, exc)
        memo.store(text, 0.0)
    except Exception as exc:
        raise RuntimeError(f"fitness function failed on {text!r}: {exc}") from exc
