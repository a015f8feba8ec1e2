import itertools
from random import Random

import pytest

from evocell.genome import (
    CONV_OPS,
    PROGRAM_SYMBOLS,
    Chromosome,
    ConvOp,
    DecodeError,
    Gene,
    GenomeConfig,
    ProgramSymbol,
    SearchSpaceOverflow,
    all_chromosomes,
    all_genes,
    chromosome_from_flat,
    decode_text,
    encode_text,
    is_valid,
    random_chromosome,
    search_space_size,
    validate,
)

from helpers import GOLDEN_TEXT


def test_alphabets_are_exactly_four():
    assert len(PROGRAM_SYMBOLS) == 4
    assert {s.value for s in PROGRAM_SYMBOLS} == {"SEQ", "CPI", "CPO", "END"}
    assert len(CONV_OPS) == 4
    assert {o.value for o in CONV_OPS} == {"Conv1x1", "Conv1x3", "Conv3x1", "Conv3x3"}


def test_config_derived_lengths():
    cfg = GenomeConfig(head_length=3, gene_count=2)
    assert cfg.tail_length == 4
    assert cfg.gene_length == 7
    assert cfg.total_elements == 14


@pytest.mark.parametrize("h,n", [(0, 1), (1, 0), (-2, 3)])
def test_config_rejects_nonpositive(h, n):
    with pytest.raises(ValueError):
        GenomeConfig(head_length=h, gene_count=n)


def test_random_chromosome_shapes():
    cfg = GenomeConfig(head_length=3, gene_count=2)
    ch = random_chromosome(cfg, Random(1))
    assert len(ch.genes) == 2
    for gene in ch.genes:
        assert len(gene.head) == 3
        assert len(gene.tail) == 4
        assert len(gene.elements()) == 7


def test_random_chromosome_minimal_config():
    ch = random_chromosome(GenomeConfig(1, 1), Random(5))
    (gene,) = ch.genes
    assert len(gene.head) == 1 and len(gene.tail) == 2


def test_random_chromosome_deterministic_under_seed():
    cfg = GenomeConfig(head_length=3, gene_count=2)
    assert random_chromosome(cfg, Random(42)) == random_chromosome(cfg, Random(42))


def test_validate_accepts_golden(golden_chromosome):
    assert validate(golden_chromosome) == []
    assert is_valid(golden_chromosome)


def test_validate_flags_head_domain():
    cfg = GenomeConfig(1, 1)
    bad = Chromosome(
        genes=(Gene(head=(ConvOp.CONV_1X1,), tail=(ConvOp.CONV_1X1, ConvOp.CONV_3X3)),),
        config=cfg,
    )
    rules = [v.rule for v in validate(bad)]
    assert "head domain" in rules
    violation = next(v for v in validate(bad) if v.rule == "head domain")
    assert violation.gene_index == 0 and violation.position == 0


def test_validate_flags_tail_length():
    cfg = GenomeConfig(1, 1)
    bad = Chromosome(
        genes=(Gene(head=(ProgramSymbol.SEQ,), tail=(ConvOp.CONV_1X1,)),),
        config=cfg,
    )
    rules = [v.rule for v in validate(bad)]
    assert "tail length" in rules


def test_validate_flags_tail_domain_and_gene_count():
    cfg = GenomeConfig(1, 2)
    gene = Gene(head=(ProgramSymbol.SEQ,), tail=(ConvOp.CONV_1X1, ProgramSymbol.END))
    bad = Chromosome(genes=(gene,), config=cfg)
    rules = {v.rule for v in validate(bad)}
    assert "tail domain" in rules
    assert "gene count" in rules


def test_encode_golden_text(golden_chromosome):
    assert encode_text(golden_chromosome) == GOLDEN_TEXT


def test_decode_encode_roundtrip_random():
    cfg = GenomeConfig(head_length=3, gene_count=2)
    for seed in range(1000):
        ch = random_chromosome(cfg, Random(seed))
        assert decode_text(encode_text(ch)) == ch


def test_encode_decode_identity_on_canonical_strings():
    for seed in range(200):
        ch = random_chromosome(GenomeConfig(2, 3), Random(seed))
        text = encode_text(ch)
        assert encode_text(decode_text(text)) == text


def test_decode_rejects_short_tail():
    with pytest.raises(DecodeError) as exc_info:
        decode_text("SEQ|Conv1x1")
    assert "tail length" in str(exc_info.value)


def test_decode_reports_position_of_bad_token():
    with pytest.raises(DecodeError) as exc_info:
        decode_text("SEQ|Conv1x1,Conv9x9")
    assert exc_info.value.position == 12


def test_decode_rejects_empty_and_missing_separator():
    with pytest.raises(DecodeError):
        decode_text("")
    with pytest.raises(DecodeError):
        decode_text("SEQ,CPI")


def test_decode_rejects_mismatched_gene_heads():
    with pytest.raises(DecodeError) as exc_info:
        decode_text("SEQ|Conv1x1,Conv1x1;SEQ,CPI|Conv1x1,Conv1x1,Conv1x1")
    assert "head length" in str(exc_info.value)


def test_decode_is_case_sensitive():
    with pytest.raises(DecodeError):
        decode_text("seq|Conv1x1,Conv1x1")


def test_flat_roundtrip():
    cfg = GenomeConfig(head_length=2, gene_count=3)
    ch = random_chromosome(cfg, Random(9))
    assert chromosome_from_flat(cfg, ch.flat()) == ch


def test_search_space_size_reference_values():
    assert search_space_size(2, 3, 4, 4) == 3072
    assert search_space_size(1, 1, 1, 1) == 1
    assert search_space_size(2, 1, 4, 4) == 1024


def test_search_space_size_overflow_detected():
    with pytest.raises(SearchSpaceOverflow):
        search_space_size(30, 1, 4, 4)


def test_search_space_size_rejects_nonpositive():
    with pytest.raises(ValueError):
        search_space_size(0, 1, 4, 4)


def test_closure_random_chromosomes_always_valid():
    # 10^5 draws across a few shapes
    shapes = [(1, 1), (2, 3), (3, 2), (4, 4)]
    per_shape = 25_000
    for h, n in shapes:
        cfg = GenomeConfig(h, n)
        rng = Random(h * 1000 + n)
        for _ in range(per_shape):
            assert is_valid(random_chromosome(cfg, rng))


def test_exhaustive_gene_count_matches_formula():
    genes = list(all_genes(1))
    assert len(genes) == 64
    assert len(set(genes)) == 64
    assert search_space_size(1, 1, 4, 4) // 1 == 64


def test_all_chromosomes_enumeration():
    cfg = GenomeConfig(1, 1)
    chromosomes = list(all_chromosomes(cfg))
    assert len(chromosomes) == 64
    texts = {encode_text(ch) for ch in chromosomes}
    assert len(texts) == 64  # encode is injective on this space
