"""Acceptance suite: one test per release criterion, at the stated tolerance.

Run with ``pytest tests/test_acceptance.py -v -s`` to see one PASS line per
criterion. Budgets are wall-clock upper bounds and are asserted.
"""

import time
from random import Random

from evocell.cli import main, synthetic_target
from evocell.evolution import (
    EvolutionParams,
    Individual,
    evolve,
    invert,
    mutate,
    recombine_gene,
    recombine_two_point,
    select,
    transpose,
)
from evocell.fitness import eval_synthetic_target
from evocell.genome import (
    ConvOp,
    GenomeConfig,
    ProgramSymbol,
    all_chromosomes,
    decode_text,
    is_valid,
    random_chromosome,
    search_space_size,
)
from evocell.mapper import (
    OUTPUT_ID,
    SUB_INPUT,
    SUB_OUTPUT,
    canonical_form,
    develop,
    init_subgraph,
    transform,
    validate_cell,
)
from evocell.assembler import MacroConfig, assemble, count_params, network_to_json

from helpers import GOLDEN_TEXT, build_golden_cell
from test_assembler import oracle_params


class Budget:
    def __init__(self, name, seconds):
        self.name = name
        self.seconds = seconds

    def __enter__(self):
        self.start = time.perf_counter()
        return self

    def __exit__(self, exc_type, exc, tb):
        elapsed = time.perf_counter() - self.start
        if exc_type is None:
            assert elapsed < self.seconds, (
                f"{self.name} took {elapsed:.2f}s, budget {self.seconds}s"
            )
            print(f"[acceptance] {self.name}: PASS ({elapsed:.2f}s)")


def test_golden_mapping():
    with Budget("golden mapping", 1.0):
        cell = develop(decode_text(GOLDEN_TEXT))
        reference = build_golden_cell()
        assert canonical_form(cell) == canonical_form(reference)
        assert len(cell.conv_nodes()) == 8
        chains = cell.successors(0)
        assert len(chains) == 2  # both chains rooted at the input
        for root in chains:
            node = root
            for _ in range(3):
                assert (node, OUTPUT_ID) in cell.edges
                (nxt,) = [s for s in cell.successors(node) if s != OUTPUT_ID]
                node = nxt
            assert cell.successors(node) == [OUTPUT_ID]


def test_search_space_formula():
    with Budget("search-space formula", 1.0):
        assert search_space_size(2, 3, 4, 4) == 3072


def test_exhaustive_micro_space():
    with Budget("exhaustive micro-space", 5.0):
        cfg = GenomeConfig(1, 1)
        chromosomes = list(all_chromosomes(cfg))
        assert len(chromosomes) == 64
        for ch in chromosomes:
            cell = develop(ch, check=True)
            assert validate_cell(cell) == []
            head = ch.genes[0].head
            if all(s is ProgramSymbol.SEQ for s in head):
                for node in cell.conv_nodes():
                    assert len(cell.predecessors(node.id)) == 1
                    assert len(cell.successors(node.id)) == 1
            if all(s is ProgramSymbol.CPO for s in head):
                for node in cell.conv_nodes():
                    assert (node.id, OUTPUT_ID) in cell.edges


def test_transformation_unit_truths():
    with Budget("transformation unit truths", 1.0):
        seed = init_subgraph(ConvOp.CONV_1X1)
        seq = transform(seed, ProgramSymbol.SEQ, 0, ConvOp.CONV_3X3)
        assert seq.edges == frozenset({(SUB_INPUT, 0), (0, 1), (1, SUB_OUTPUT)})
        cpi = transform(seed, ProgramSymbol.CPI, 0, ConvOp.CONV_3X3)
        assert cpi.edges == frozenset(
            {(SUB_INPUT, 0), (SUB_INPUT, 1), (0, 1), (1, SUB_OUTPUT)}
        )
        cpo = transform(seed, ProgramSymbol.CPO, 0, ConvOp.CONV_3X3)
        assert cpo.edges == frozenset(
            {(SUB_INPUT, 0), (0, 1), (0, SUB_OUTPUT), (1, SUB_OUTPUT)}
        )


def test_operator_closure():
    with Budget("operator closure", 30.0):
        cfg = GenomeConfig(3, 2)
        rng = Random(1234)
        for _ in range(10_000):
            assert is_valid(mutate(random_chromosome(cfg, rng), 0.044, rng))
        for _ in range(10_000):
            assert is_valid(invert(random_chromosome(cfg, rng), 1.0, 2, rng))
        for _ in range(10_000):
            assert is_valid(transpose(random_chromosome(cfg, rng), 1.0, 2, rng))
        for _ in range(10_000):
            a, b = random_chromosome(cfg, rng), random_chromosome(cfg, rng)
            ca, cb = recombine_two_point(a, b, rng)
            assert is_valid(ca) and is_valid(cb)
        for _ in range(10_000):
            a, b = random_chromosome(cfg, rng), random_chromosome(cfg, rng)
            ca, cb = recombine_gene(a, b, rng)
            assert is_valid(ca) and is_valid(cb)


def test_elitism_monotonicity():
    with Budget("elitism monotonicity", 60.0):
        cfg = GenomeConfig(2, 2)
        for seed in range(20):
            target = synthetic_target(cfg, seed)
            params = EvolutionParams(
                population_size=20, generations=20, rng_seed=seed
            )
            _, history = evolve(
                cfg, params, lambda ch: eval_synthetic_target(ch, target)
            )
            best = [r.best_fitness for r in history.records]
            assert len(best) == 20
            assert all(b2 >= b1 for b1, b2 in zip(best, best[1:]))


def test_search_beats_random():
    with Budget("search beats random", 300.0):
        cfg = GenomeConfig(2, 2)
        wins = 0
        for seed in range(20):
            target = synthetic_target(cfg, seed)
            fitness = lambda ch: eval_synthetic_target(ch, target)
            params = EvolutionParams(
                population_size=20, generations=20, rng_seed=seed
            )
            best, history = evolve(cfg, params, fitness)
            assert history.total_evaluations <= 400  # equal budgets
            rng = Random(seed)
            random_best = max(
                fitness(random_chromosome(cfg, rng)) for _ in range(400)
            )
            wins += best.fitness >= random_best
        assert wins >= 15, f"evolution won only {wins}/20 paired seeds"


def test_roulette_wheel_fidelity():
    with Budget("roulette-wheel fidelity", 10.0):
        fitnesses = [0.35, 0.05, 0.25, 0.15, 0.20]
        cfg = GenomeConfig(1, 1)
        rng = Random(0)
        pop = [
            Individual(random_chromosome(cfg, rng), fitness=f) for f in fitnesses
        ]
        counts = dict.fromkeys(range(len(pop)), 0)
        draw_rng = Random(271828)
        draws = 100_000
        rounds = draws // len(pop)
        index_of = {id(ind): i for i, ind in enumerate(pop)}
        for _ in range(rounds):
            for ind in select(pop, elites=0, rng=draw_rng):
                counts[index_of[id(ind)]] += 1
        total_fitness = sum(fitnesses)
        for i, f in enumerate(fitnesses):
            observed = counts[i] / draws
            assert abs(observed - f / total_fitness) < 0.01


def test_parameter_counting():
    with Budget("parameter counting", 10.0):
        rng = Random(515)
        for _ in range(100):
            cfg = GenomeConfig(rng.choice([1, 2, 3]), rng.choice([1, 2, 3]))
            cell = develop(random_chromosome(cfg, rng))
            macro = MacroConfig(
                stem_channels=rng.choice([8, 16, 32]),
                blocks=(rng.randint(1, 3), rng.randint(1, 3), rng.randint(1, 3)),
                num_classes=rng.choice([10, 100]),
            )
            spec = assemble(cell, macro)
            assert count_params(spec) == oracle_params(network_to_json(spec))
        golden = assemble(
            develop(decode_text(GOLDEN_TEXT)),
            MacroConfig(stem_channels=40, blocks=(3, 3, 1), num_classes=10),
        )
        total = count_params(golden)
        assert abs(total - 2_800_000) / 2_800_000 <= 0.15


def test_cmd_search_determinism(tmp_path, capsys):
    with Budget("cmd_search determinism", 60.0):
        a, b = tmp_path / "a", tmp_path / "b"
        for out_dir in (a, b):
            code = main(
                ["search", "--seed", "17", "--out", str(out_dir),
                 "--evaluator", "synthetic"]
            )
            capsys.readouterr()
            assert code == 0
        assert (a / "history.jsonl").read_bytes() == (b / "history.jsonl").read_bytes()
