"""Evolutionary search for convolutional-cell architectures.

Linear fixed-length genotypes are developed into convolutional-cell DAGs by
local graph transformations, assembled into full network specifications under
a parameter budget, and evolved with GEP-style operators against pluggable
fitness evaluators.
"""

from .assembler import (
    ConstraintResult,
    MacroConfig,
    NetworkSpec,
    assemble,
    check_constraint,
    count_params,
    network_from_json,
    network_to_json,
)
from .evolution import EvolutionParams, History, Individual, evolve
from .fitness import (
    EvaluationError,
    MemoizedEvaluator,
    eval_graph_proxy,
    eval_synthetic_target,
    memoize,
)
from .genome import (
    Chromosome,
    ConvOp,
    Gene,
    GenomeConfig,
    ProgramSymbol,
    decode_text,
    encode_text,
    random_chromosome,
    search_space_size,
    validate,
)
from .mapper import CellGraph, canonical_form, cell_to_json, develop, to_dot

__version__ = "0.1.0"

__all__ = [
    "CellGraph",
    "Chromosome",
    "ConstraintResult",
    "ConvOp",
    "EvaluationError",
    "EvolutionParams",
    "Gene",
    "GenomeConfig",
    "History",
    "Individual",
    "MacroConfig",
    "MemoizedEvaluator",
    "NetworkSpec",
    "ProgramSymbol",
    "assemble",
    "canonical_form",
    "cell_to_json",
    "check_constraint",
    "count_params",
    "decode_text",
    "develop",
    "encode_text",
    "eval_graph_proxy",
    "eval_synthetic_target",
    "evolve",
    "memoize",
    "network_from_json",
    "network_to_json",
    "random_chromosome",
    "search_space_size",
    "to_dot",
    "validate",
]
