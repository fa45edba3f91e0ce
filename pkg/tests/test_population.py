"""Testes de bitstrings, populações, torneio e binarização."""

import numpy as np
import pytest

from utils.errors import DomainError, InvalidArgumentError, LengthMismatchError, UnevaluatedIndividualError
from utils.population import (
    Individual,
    Population,
    binarize,
    bitstring_to_str,
    random_population,
    to_bitstring,
    tournament_select,
)
from utils.rng import derive_seed, make_rng


def test_to_bitstring_accepts_text_and_sequences() -> None:
    assert to_bitstring("0110").tolist() == [0, 1, 1, 0]
    assert to_bitstring([1, 0, 1]).dtype == np.uint8
    assert bitstring_to_str(to_bitstring("1001")) == "1001"


def test_to_bitstring_rejects_bad_input() -> None:
    with pytest.raises(DomainError):
        to_bitstring("0120")
    with pytest.raises(InvalidArgumentError):
        to_bitstring([])


def test_individual_requires_evaluation() -> None:
    ind = Individual(to_bitstring("01"))
    with pytest.raises(UnevaluatedIndividualError):
        _ = ind.fitness
    ind.fitness = 2
    assert ind.fitness == 2.0
    with pytest.raises(DomainError):
        ind.fitness = float("nan")


def test_random_population_shape_and_validation() -> None:
    pop = random_population(12, 30, make_rng(1, 0, "init"))
    assert pop.genomes.shape == (30, 12)
    assert not pop.evaluated
    with pytest.raises(InvalidArgumentError):
        random_population(12, 1, make_rng(1, 0, "init"))
    with pytest.raises(InvalidArgumentError):
        random_population(0, 10, make_rng(1, 0, "init"))


def test_unevaluated_population_has_no_best() -> None:
    pop = random_population(4, 6, make_rng(2, 0, "init"))
    with pytest.raises(UnevaluatedIndividualError):
        pop.best()


def test_union_keeps_duplicates() -> None:
    a = Population(np.array([[0, 1], [1, 1]]), [1.0, 2.0])
    b = Population(np.array([[1, 1]]), [2.0])
    merged = a.union(b)
    assert merged.size == 3
    assert merged.genomes.tolist() == [[0, 1], [1, 1], [1, 1]]
    with pytest.raises(LengthMismatchError):
        a.union(Population(np.array([[1, 1, 1]]), [3.0]))


def test_tournament_with_explicit_pairing() -> None:
    """Com pareamento fixo e sem empates o resultado é determinado."""
    genomes = np.eye(4, dtype=np.uint8)
    pop = Population(genomes, [1.0, 5.0, 3.0, 2.0])
    winners = tournament_select(pop, make_rng(0, 1, "select"), pairing=[0, 1, 2, 3])
    assert winners.fitness.tolist() == [5.0, 3.0]
    assert winners.genomes.tolist() == [genomes[1].tolist(), genomes[2].tolist()]


def test_tournament_odd_size_advances_unpaired() -> None:
    pop = Population(np.eye(5, dtype=np.uint8), [4.0, 1.0, 0.0, 2.0, -7.0])
    winners = tournament_select(pop, make_rng(0, 1, "select"), pairing=[0, 1, 2, 3, 4])
    assert winners.size == 3
    assert winners.fitness.tolist() == [4.0, 2.0, -7.0]


def test_tournament_rejects_invalid_pairing() -> None:
    pop = Population(np.eye(4, dtype=np.uint8), [1.0, 2.0, 3.0, 4.0])
    with pytest.raises(InvalidArgumentError):
        tournament_select(pop, make_rng(0, 1, "select"), pairing=[0, 0, 1, 2])


def test_tournament_ties_broken_by_coin() -> None:
    size = 2000
    genomes = np.zeros((size, 11), dtype=np.uint8)
    # índice do indivíduo gravado no genoma para saber qual lado venceu
    genomes[:, 0] = np.arange(size) % 2
    pop = Population(genomes, np.zeros(size))
    winners = tournament_select(pop, make_rng(3, 1, "select"), pairing=np.arange(size))
    left_share = 1.0 - winners.genomes[:, 0].mean()
    assert 0.4 < left_share < 0.6


def test_tournament_keeps_best_and_halves_population() -> None:
    for seed in range(20):
        pop = random_population(10, 21, make_rng(seed, 0, "init"))
        pop.fitness = make_rng(seed, 0, "sample").permutation(21).astype(float)
        winners = tournament_select(pop, make_rng(seed, 1, "select"))
        assert winners.size == 11
        assert winners.fitness.max() == 20.0


def test_binarize_bounds_and_frequency() -> None:
    rng = make_rng(7, 1, "binarize")
    assert binarize(np.array([0.0, 1.0, 0.0, 1.0]), rng).tolist() == [0, 1, 0, 1]
    bits = binarize(np.full((200, 50), 0.3), rng)
    assert bits.shape == (200, 50)
    assert abs(bits.mean() - 0.3) < 0.02
    with pytest.raises(DomainError):
        binarize(np.array([0.5, 1.2]), rng)


def test_sub_streams_are_reproducible_and_distinct() -> None:
    a = make_rng(42, 3, "sample").random(5)
    b = make_rng(42, 3, "sample").random(5)
    c = make_rng(42, 3, "binarize").random(5)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)
    assert derive_seed(1, "sweep", 50, 0) != derive_seed(1, "sweep", 50, 1)
    with pytest.raises(InvalidArgumentError):
        make_rng(1, "unknown-purpose")
