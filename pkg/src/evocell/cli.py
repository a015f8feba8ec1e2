"""Command-line surface: search, map, assemble, enumerate, random-search, report.

Every command is deterministic given its flags and seed (external evaluators
excepted). File outputs are written atomically so an interrupted run never
leaves a torn artifact. Exit codes: 0 ok, 1 usage, 2 runtime failure,
3 evaluator-protocol failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
import tempfile
from dataclasses import dataclass, replace
from pathlib import Path
from random import Random

from . import assembler, evolution, fitness, genome, mapper

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_RUNTIME = 2
EXIT_PROTOCOL = 3

EXHAUSTIVE_LIMIT = 100_000


class UsageError(Exception):
    pass


@dataclass(frozen=True)
class RunConfig:
    """Flat run configuration; defaults reproduce the reference search setup."""

    head_length: int = 3
    gene_count: int = 2
    population_size: int = 20
    generations: int = 20
    elites: int = 1
    mutation_rate: float = 0.044
    inversion_rate: float = 0.1
    transposition_rate: float = 0.1
    seq_length: int = 2
    two_point_rate: float = 0.6
    gene_rate: float = 0.1
    stem_channels: int = 16
    blocks: tuple[int, int, int] = (1, 1, 1)
    num_classes: int = 10
    input_height: int = 32
    input_width: int = 32
    input_channels: int = 3
    param_budget: int = 3_500_000
    evaluator: str = "synthetic"
    external_cmd: str | None = None
    epochs: int = 25
    eval_timeout: float = 600.0
    seed: int = 0
    workers: int = 1

    def genome_config(self) -> genome.GenomeConfig:
        return genome.GenomeConfig(self.head_length, self.gene_count)

    def evolution_params(self) -> evolution.EvolutionParams:
        return evolution.EvolutionParams(
            population_size=self.population_size,
            generations=self.generations,
            elites=self.elites,
            mutation_rate=self.mutation_rate,
            inversion_rate=self.inversion_rate,
            transposition_rate=self.transposition_rate,
            seq_length=min(self.seq_length, self.head_length),
            two_point_rate=self.two_point_rate,
            gene_rate=self.gene_rate,
            rng_seed=self.seed,
        )

    def macro_config(self) -> assembler.MacroConfig:
        return assembler.MacroConfig(
            stem_channels=self.stem_channels,
            blocks=self.blocks,
            num_classes=self.num_classes,
            input_shape=(self.input_height, self.input_width, self.input_channels),
            param_budget=self.param_budget,
        )


_INT_KEYS = {
    "head_length", "gene_count", "population_size", "generations", "elites",
    "seq_length", "stem_channels", "num_classes", "input_height", "input_width",
    "input_channels", "param_budget", "epochs", "seed", "workers",
}
_FLOAT_KEYS = {
    "mutation_rate", "inversion_rate", "transposition_rate", "two_point_rate",
    "gene_rate", "eval_timeout",
}
_STR_KEYS = {"evaluator", "external_cmd"}


def parse_config_file(path: str | Path) -> dict:
    """Parse a flat ``key = value`` config document (# starts a comment)."""
    values: dict = {}
    text = Path(path).read_text(encoding="utf-8")
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected 'key = value'")
        key, value = (part.strip() for part in line.split("=", 1))
        try:
            if key in _INT_KEYS:
                values[key] = int(value)
            elif key in _FLOAT_KEYS:
                values[key] = float(value)
            elif key in _STR_KEYS:
                values[key] = value
            elif key == "blocks":
                values[key] = _parse_blocks(value)
            else:
                raise UsageError(f"{path}:{lineno}: unknown key {key!r}")
        except ValueError as exc:
            raise UsageError(f"{path}:{lineno}: bad value for {key}: {exc}") from exc
    return values


def _parse_blocks(value: str) -> tuple[int, int, int]:
    parts = [p for p in value.split(",") if p.strip()]
    if len(parts) != 3:
        raise ValueError(f"blocks needs exactly 3 counts, got {value!r}")
    return tuple(int(p) for p in parts)  # type: ignore[return-value]


def load_run_config(args: argparse.Namespace) -> RunConfig:
    values: dict = {}
    if getattr(args, "config", None):
        values.update(parse_config_file(args.config))
    for key in ("seed", "evaluator", "external_cmd", "workers", "epochs"):
        if getattr(args, key, None) is not None:
            values[key] = getattr(args, key)
    try:
        config = RunConfig(**values)
    except (TypeError, ValueError) as exc:
        raise UsageError(f"bad configuration: {exc}") from exc
    if config.evaluator not in ("synthetic", "proxy", "external"):
        raise UsageError(f"unknown evaluator {config.evaluator!r}")
    if config.evaluator == "external" and not config.external_cmd:
        raise UsageError("evaluator 'external' requires --external-cmd")
    return config


def write_atomic(path: Path, content: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(content)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def synthetic_target(cfg: genome.GenomeConfig, seed: int) -> genome.Chromosome:
    """Fixed target genotype for the synthetic landscape, derived from the seed.

    Drawn from a stream separate from the search's own RNG so the initial
    population is independent of the target; paired runs at the same seed see
    the same landscape.
    """
    return genome.random_chromosome(cfg, Random(f"synthetic-target:{seed}"))


def build_fitness(config: RunConfig):
    """Returns (fitness_fn, close_fn) for the configured evaluator."""
    cfg = config.genome_config()
    if config.evaluator == "synthetic":
        target = synthetic_target(cfg, config.seed)
        return (lambda ch: fitness.eval_synthetic_target(ch, target)), None
    if config.evaluator == "proxy":
        macro = config.macro_config()
        return (lambda ch: fitness.eval_graph_proxy(mapper.develop(ch), macro)), None
    pool = fitness.ExternalEvaluatorPool(
        config.external_cmd,
        config.macro_config(),
        epochs=config.epochs,
        workers=config.workers,
        timeout=config.eval_timeout,
    )
    return pool, pool.close


def history_jsonl(history: evolution.History) -> str:
    lines = []
    for rec in history.records:
        lines.append(
            json.dumps(
                {
                    "generation": rec.generation,
                    "best_fitness": rec.best_fitness,
                    "mean_fitness": rec.mean_fitness,
                    "best_chromosome": rec.best_chromosome,
                    "evaluations": rec.evaluations,
                },
                separators=(",", ":"),
            )
        )
    return "\n".join(lines) + "\n"


def _write_best_artifacts(out: Path, best_text: str, config: RunConfig) -> None:
    cell = mapper.develop(genome.decode_text(best_text))
    write_atomic(out / "best.chromosome", best_text + "\n")
    write_atomic(
        out / "best.cell.json",
        json.dumps(mapper.cell_to_json(cell), separators=(",", ":")) + "\n",
    )
    write_atomic(out / "best.dot", mapper.to_dot(cell))
    spec = assembler.assemble(cell, config.macro_config())
    verdict = assembler.check_constraint(spec, config.param_budget)
    report = {
        "network": assembler.network_to_json(spec),
        "budget": config.param_budget,
        "within_budget": verdict.ok,
        "exceeded_by": verdict.exceeded_by,
    }
    write_atomic(
        out / "best.network.json", json.dumps(report, separators=(",", ":")) + "\n"
    )


# -- commands -----------------------------------------------------------------


def cmd_search(args: argparse.Namespace) -> int:
    config = load_run_config(args)
    out = Path(args.out or "run-out")
    fitness_fn, close_fn = build_fitness(config)
    try:
        best, history = evolution.evolve(
            config.genome_config(),
            config.evolution_params(),
            fitness_fn,
            workers=config.workers,
        )
    finally:
        if close_fn:
            close_fn()
    write_atomic(out / "history.jsonl", history_jsonl(history))
    _write_best_artifacts(out, best.text, config)
    verdict_path = out / "best.network.json"
    report = json.loads(verdict_path.read_text(encoding="utf-8"))
    status = "ok" if report["within_budget"] else f"exceeded by {report['exceeded_by']}"
    print(f"best_fitness: {best.fitness}")
    print(f"best_chromosome: {best.text}")
    print(f"total_params: {report['network']['total_params']}")
    print(f"budget_check: {status}")
    print(f"artifacts: {out}")
    return EXIT_OK


def cmd_map(args: argparse.Namespace) -> int:
    ch = genome.decode_text(args.chromosome)
    cell = mapper.develop(ch)
    print(json.dumps(mapper.cell_to_json(cell), separators=(",", ":")))
    if args.dot:
        print(mapper.to_dot(cell), end="")
    return EXIT_OK


def cmd_assemble(args: argparse.Namespace) -> int:
    ch = genome.decode_text(args.chromosome)
    try:
        blocks = _parse_blocks(args.blocks)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    macro = assembler.MacroConfig(
        stem_channels=args.stem_channels,
        blocks=blocks,
        num_classes=args.classes,
        input_shape=(args.input_height, args.input_width, args.input_channels),
        param_budget=args.budget,
    )
    spec = assembler.assemble(mapper.develop(ch), macro)
    verdict = assembler.check_constraint(spec, macro.param_budget)
    if args.json:
        print(json.dumps(assembler.network_to_json(spec), separators=(",", ":")))
        return EXIT_OK
    print(assembler.layer_table(spec))
    if verdict.ok:
        print(f"budget_check: ok ({spec.total_params} <= {macro.param_budget})")
    else:
        print(f"budget_check: exceeded by {verdict.exceeded_by}")
    return EXIT_OK


def cmd_enumerate(args: argparse.Namespace) -> int:
    size = genome.search_space_size(args.head, args.genes, 4, 4)
    print(f"search_space_size: {size}")
    if not args.exhaustive:
        return EXIT_OK
    per_gene = 4**args.head * 4 ** (args.head + 1)
    total = per_gene**args.genes
    if total > EXHAUSTIVE_LIMIT:
        raise RuntimeError(
            f"exhaustive enumeration of {total} genotypes exceeds the "
            f"{EXHAUSTIVE_LIMIT} limit"
        )
    cfg = genome.GenomeConfig(args.head, args.genes)
    forms = set()
    count = 0
    for ch in genome.all_chromosomes(cfg):
        forms.add(mapper.canonical_form(mapper.develop(ch)))
        count += 1
    print(f"genotypes_enumerated: {count}")
    print(f"distinct_cells: {len(forms)}")
    return EXIT_OK


def cmd_random_search(args: argparse.Namespace) -> int:
    config = load_run_config(args)
    cfg = config.genome_config()
    fitness_fn, close_fn = build_fitness(config)
    rng = Random(config.seed)
    try:
        individuals = []
        for _ in range(args.individuals):
            ch = genome.random_chromosome(cfg, rng)
            individuals.append((ch, fitness_fn(ch)))
    finally:
        if close_fn:
            close_fn()
    scores = [score for _, score in individuals]
    best_ch, best_score = max(individuals, key=lambda pair: pair[1])
    mean = sum(scores) / len(scores)
    stddev = math.sqrt(sum((s - mean) ** 2 for s in scores) / len(scores))
    print(f"individuals: {len(scores)}")
    print(f"best_fitness: {best_score}")
    print(f"mean_fitness: {mean}")
    print(f"stddev_fitness: {stddev}")
    print(f"best_chromosome: {genome.encode_text(best_ch)}")
    if args.out:
        out = Path(args.out)
        _write_best_artifacts(out, genome.encode_text(best_ch), config)
    return EXIT_OK


def cmd_report(args: argparse.Namespace) -> int:
    path = Path(args.history)
    rows = []
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise RuntimeError(f"cannot read history: {exc}") from exc
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
            rows.append(
                (rec["generation"], rec["best_fitness"], rec["mean_fitness"],
                 rec["evaluations"])
            )
        except (json.JSONDecodeError, KeyError) as exc:
            raise RuntimeError(f"{path}:{lineno}: bad history record: {exc}") from exc
    if not rows:
        raise RuntimeError(f"{path}: history is empty")
    lines = ["generation,best,mean,evaluations"]
    lines.extend(f"{g},{b},{m},{e}" for g, b, m, e in rows)
    csv_text = "\n".join(lines) + "\n"
    print(csv_text, end="")
    if args.out:
        write_atomic(Path(args.out) / "report.csv", csv_text)
    return EXIT_OK


# -- parser -------------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # argparse defaults to exit code 2
        raise UsageError(message)


def _add_run_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="flat key=value run configuration file")
    p.add_argument("--seed", type=int, default=None, help="run seed (default 0)")
    p.add_argument("--out", default=None,
                   help="output directory (search defaults to ./run-out)")
    p.add_argument(
        "--evaluator", choices=["synthetic", "proxy", "external"], default=None
    )
    p.add_argument("--external-cmd", dest="external_cmd", default=None,
                   help="command line for the external evaluator process")
    p.add_argument("--workers", type=int, default=None,
                   help="concurrent fitness evaluations")
    p.add_argument("--epochs", type=int, default=None,
                   help="training epochs requested per evaluation")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="evocell", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("search", help="run the evolutionary search")
    _add_run_flags(p)
    p.set_defaults(func=cmd_search)

    p = sub.add_parser("map", help="develop a chromosome into its cell graph")
    p.add_argument("chromosome", help="canonical chromosome text")
    p.add_argument("--dot", action="store_true", help="also print DOT")
    p.set_defaults(func=cmd_map)

    p = sub.add_parser("assemble", help="expand a chromosome into a network spec")
    p.add_argument("chromosome")
    p.add_argument("--stem-channels", dest="stem_channels", type=int, default=16)
    p.add_argument("--blocks", default="1,1,1", help="three repeat counts, e.g. 3,3,1")
    p.add_argument("--classes", type=int, default=10)
    p.add_argument("--input-height", dest="input_height", type=int, default=32)
    p.add_argument("--input-width", dest="input_width", type=int, default=32)
    p.add_argument("--input-channels", dest="input_channels", type=int, default=3)
    p.add_argument("--budget", type=int, default=3_500_000)
    p.add_argument("--json", action="store_true", help="print network JSON")
    p.set_defaults(func=cmd_assemble)

    p = sub.add_parser("enumerate", help="search-space size, optionally exhaustive")
    p.add_argument("--head", type=int, required=True)
    p.add_argument("--genes", type=int, required=True)
    p.add_argument("--exhaustive", action="store_true",
                   help="develop every genotype and count distinct cells")
    p.set_defaults(func=cmd_enumerate)

    p = sub.add_parser("random-search", help="evaluate random chromosomes, no operators")
    _add_run_flags(p)
    p.add_argument("-n", "--individuals", type=int, default=10)
    p.set_defaults(func=cmd_random_search)

    p = sub.add_parser("report", help="per-generation CSV from a history file")
    p.add_argument("history", help="path to history.jsonl")
    p.add_argument("--out", default=None, help="directory to write report.csv")
    p.set_defaults(func=cmd_report)

    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(
        level=logging.INFO, format="%(levelname)s %(name)s: %(message)s"
    )
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (fitness.EvalTimeout, fitness.ProtocolError, fitness.EvaluatorFailure) as exc:
        print(f"evaluator protocol error: {exc}", file=sys.stderr)
        return EXIT_PROTOCOL
    except genome.DecodeError as exc:
        print(f"chromosome decode error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except (genome.SearchSpaceOverflow, assembler.AssemblyError, RuntimeError,
            ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
