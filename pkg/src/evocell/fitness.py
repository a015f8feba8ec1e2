"""Fitness evaluators and the external-trainer protocol client.

Three evaluator families share the ``Chromosome -> float`` calling convention:
deterministic synthetic surrogates for desk-scale testing, a cheap structural
proxy over the developed cell, and a line-delimited-JSON client that hands
assembled networks to an external training process. All fitness values live in
[0, 1]; anything else is a typed error, never a silent clamp.
"""

from __future__ import annotations

import json
import logging
import shlex
import subprocess
import threading
import queue as queue_mod
from dataclasses import dataclass
from typing import Callable

from .assembler import MacroConfig, assemble, network_to_json
from .genome import Chromosome, encode_text
from .mapper import INPUT_ID, OUTPUT_ID, CellGraph, develop

log = logging.getLogger(__name__)


class EvaluationError(Exception):
    """Base for evaluation failures; carries the offending genotype text."""

    def __init__(self, message: str, chromosome_text: str | None = None):
        self.chromosome_text = chromosome_text
        if chromosome_text:
            message = f"{message} (chromosome: {chromosome_text})"
        super().__init__(message)


class EvalTimeout(EvaluationError):
    pass


class ProtocolError(EvaluationError):
    pass


class EvaluatorFailure(EvaluationError):
    """The evaluator answered with an error record."""


# -- synthetic surrogates ---------------------------------------------------------


def eval_synthetic_target(ch: Chromosome, target: Chromosome) -> float:
    """Element-agreement score against a fixed target genotype.

    One minus the normalized Hamming distance over the flat element layout:
    1.0 iff the chromosomes are identical, 0.0 iff they differ everywhere.
    """
    if ch.config != target.config:
        raise ValueError("chromosome and target must share a genome config")
    a, b = ch.flat(), target.flat()
    distance = sum(1 for x, y in zip(a, b) if x != y)
    return 1.0 - distance / len(a)


def longest_path_length(cell: CellGraph) -> int:
    """Edge count of the longest input -> output path."""
    from .mapper import topological_order

    dist = {node.id: None for node in cell.nodes}
    dist[INPUT_ID] = 0
    for n in topological_order(cell):
        if dist[n] is None:
            continue
        for m in cell.successors(n):
            if dist[m] is None or dist[n] + 1 > dist[m]:
                dist[m] = dist[n] + 1
    assert dist[OUTPUT_ID] is not None
    return dist[OUTPUT_ID]


def eval_graph_proxy(cell: CellGraph, macro: MacroConfig) -> float:
    """Structural heuristic: operation diversity plus capped depth.

    Half the score rewards distinct convolution kinds (of the 4 possible),
    half rewards the longest input->output path, capped at 8 edges. A cheap
    stand-in for trained accuracy; no claim of correlation is made.
    """
    kinds = {node.op for node in cell.conv_nodes()}
    depth = min(longest_path_length(cell), 8)
    return 0.5 * (len(kinds) / 4) + 0.5 * (depth / 8)


# -- memoization ------------------------------------------------------------------


class MemoizedEvaluator:
    """Cache any evaluator by canonical genotype text.

    Cache hits never touch the inner evaluator. The cache can be saved to and
    reloaded from a line-delimited JSON file of ``{"chromosome", "fitness"}``
    records, so a recorded run replays without any inner calls.
    """

    def __init__(self, inner: Callable[[Chromosome], float], cache: dict[str, float] | None = None):
        self.inner = inner
        self.cache: dict[str, float] = dict(cache) if cache else {}
        self.inner_calls = 0
        self._lock = threading.Lock()

    def __call__(self, ch: Chromosome) -> float:
        text = encode_text(ch)
        with self._lock:
            if text in self.cache:
                return self.cache[text]
        with self._lock:
            self.inner_calls += 1
        value = self.inner(ch)
        if not isinstance(value, (int, float)) or not 0.0 <= value <= 1.0:
            raise ValueError(
                f"fitness {value!r} outside [0, 1] for chromosome {text!r}"
            )
        value = float(value)
        self.store(text, value)
        return value

    def contains(self, text: str) -> bool:
        with self._lock:
            return text in self.cache

    def get(self, text: str) -> float:
        with self._lock:
            return self.cache[text]

    def store(self, text: str, value: float) -> None:
        with self._lock:
            self.cache[text] = value

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            for text, value in self.cache.items():
                fh.write(json.dumps({"chromosome": text, "fitness": value}) + "\n")

    @classmethod
    def load(cls, path, inner: Callable[[Chromosome], float]) -> MemoizedEvaluator:
        cache: dict[str, float] = {}
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                record = json.loads(line)
                cache[record["chromosome"]] = record["fitness"]
        return cls(inner, cache=cache)


def memoize(inner: Callable[[Chromosome], float]) -> MemoizedEvaluator:
    """Wrap any evaluator with a genotype-text cache."""
    return MemoizedEvaluator(inner)


# -- external evaluator protocol ---------------------------------------------------


@dataclass(frozen=True)
class EvalRequest:
    id: str
    chromosome_text: str
    network: dict
    budget: dict

    def to_json_line(self) -> str:
        record = {
            "id": self.id,
            "chromosome": self.chromosome_text,
            "network": self.network,
            "budget": self.budget,
        }
        return json.dumps(record, separators=(",", ":"))


@dataclass(frozen=True)
class EvalResponse:
    id: str
    accuracy: float | None = None
    params: int | None = None
    error: str | None = None

    @classmethod
    def from_json_line(cls, line: str) -> EvalResponse:
        record = json.loads(line)
        if "id" not in record:
            raise ValueError("response missing 'id'")
        if ("accuracy" in record) == ("error" in record):
            raise ValueError("response must carry exactly one of accuracy/error")
        return cls(
            id=record["id"],
            accuracy=record.get("accuracy"),
            params=record.get("params"),
            error=record.get("error"),
        )


class EvaluatorProcess:
    """One external evaluator child speaking line-delimited JSON over stdio."""

    def __init__(self, command: str | list[str]):
        argv = shlex.split(command) if isinstance(command, str) else list(command)
        self.command = argv
        self.proc = subprocess.Popen(
            argv,
            stdin=subprocess.PIPE,
            stdout=subprocess.PIPE,
            text=True,
            bufsize=1,
        )
        self._lines: queue_mod.Queue[str | None] = queue_mod.Queue()
        self._reader = threading.Thread(target=self._pump, daemon=True)
        self._reader.start()

    def _pump(self) -> None:
        assert self.proc.stdout is not None
        for line in self.proc.stdout:
            self._lines.put(line)
        self._lines.put(None)  # EOF marker

    def send_line(self, line: str) -> None:
        assert self.proc.stdin is not None
        try:
            self.proc.stdin.write(line + "\n")
            self.proc.stdin.flush()
        except (BrokenPipeError, OSError) as exc:
            raise ProtocolError(f"evaluator process pipe closed: {exc}") from exc

    def read_line(self, timeout: float) -> str:
        try:
            line = self._lines.get(timeout=timeout)
        except queue_mod.Empty:
            raise EvalTimeout(f"no evaluator response within {timeout}s") from None
        if line is None:
            raise ProtocolError("evaluator process closed its output")
        return line

    def close(self) -> None:
        if self.proc.poll() is None:
            if self.proc.stdin is not None:
                try:
                    self.proc.stdin.close()
                except OSError:
                    pass
            try:
                self.proc.wait(timeout=5)
            except subprocess.TimeoutExpired:
                self.proc.kill()
                self.proc.wait()


def eval_external(req: EvalRequest, endpoint: EvaluatorProcess, timeout: float = 600.0) -> float:
    """Send one request and return the matching response's accuracy as fitness."""
    text = req.chromosome_text
    endpoint.send_line(req.to_json_line())
    try:
        line = endpoint.read_line(timeout)
    except EvaluationError as exc:
        exc.chromosome_text = text
        raise
    line = line.strip()
    try:
        response = EvalResponse.from_json_line(line)
    except (json.JSONDecodeError, ValueError) as exc:
        raise ProtocolError(f"bad response line {line!r}: {exc}", text) from exc
    if response.id != req.id:
        raise ProtocolError(
            f"response id {response.id!r} does not match request id {req.id!r}", text
        )
    if response.error is not None:
        raise EvaluatorFailure(f"evaluator error: {response.error}", text)
    accuracy = response.accuracy
    if not isinstance(accuracy, (int, float)) or not 0.0 <= accuracy <= 1.0:
        raise ProtocolError(f"accuracy {accuracy!r} outside [0, 1]", text)
    return float(accuracy)


class ExternalEvaluatorPool:
    """Chromosome -> fitness via a pool of external evaluator processes.

    Each call assembles the chromosome's network, ships it to a free child
    process and blocks for the paired response; with ``workers`` > 1 that
    many requests can be in flight at once, one per process. Thread safe.
    """

    def __init__(
        self,
        command: str | list[str],
        macro: MacroConfig,
        epochs: int = 25,
        workers: int = 1,
        timeout: float = 600.0,
    ):
        self.macro = macro
        self.epochs = epochs
        self.timeout = timeout
        self._counter = 0
        self._counter_lock = threading.Lock()
        self._idle: queue_mod.Queue[EvaluatorProcess] = queue_mod.Queue()
        self.processes = [EvaluatorProcess(command) for _ in range(max(1, workers))]
        for proc in self.processes:
            self._idle.put(proc)

    def _next_id(self) -> str:
        with self._counter_lock:
            self._counter += 1
            return f"eval-{self._counter}"

    def __call__(self, ch: Chromosome) -> float:
        text = encode_text(ch)
        spec = assemble(develop(ch), self.macro)
        req = EvalRequest(
            id=self._next_id(),
            chromosome_text=text,
            network=network_to_json(spec),
            budget={"epochs": self.epochs},
        )
        proc = self._idle.get()
        try:
            return eval_external(req, proc, timeout=self.timeout)
        finally:
            self._idle.put(proc)

    def close(self) -> None:
        for proc in self.processes:
            proc.close()

    def __enter__(self) -> ExternalEvaluatorPool:
        return self

    def __exit__(self, *exc_info) -> None:
        self.close()
