#!/usr/bin/env python3
"""
Módulo de população do EDA
Bitstrings, indivíduos, populações, seleção por torneio e binarização
"""

import logging
import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np

from utils.errors import (
    DomainError,
    InvalidArgumentError,
    LengthMismatchError,
    UnevaluatedIndividualError,
)
from utils.rng import RngState

logger = logging.getLogger(__name__)

BIT_DTYPE = np.uint8


def to_bitstring(bits: Sequence[int]) -> np.ndarray:
    """
    Converte uma sequência de 0/1 (ou string '0101') em bitstring

    Args:
        bits: Sequência de valores binários

    Returns:
        Vetor uint8 de comprimento n > 0
    """
    if isinstance(bits, str):
        bits = [int(c) for c in bits.strip()]
    arr = np.asarray(bits)
    if arr.ndim != 1 or arr.size == 0:
        raise InvalidArgumentError("Bitstring deve ser um vetor não vazio")
    if not np.all((arr == 0) | (arr == 1)):
        raise DomainError("Bitstring aceita apenas valores 0 e 1")
    return arr.astype(BIT_DTYPE)


def bitstring_to_str(genome: np.ndarray) -> str:
    return "".join("1" if b else "0" for b in genome)


@dataclass
class Individual:
    """Indivíduo com genoma binário e fitness em cache"""

    genome: np.ndarray
    _fitness: Optional[float] = field(default=None, repr=False)

    @property
    def evaluated(self) -> bool:
        return self._fitness is not None

    @property
    def fitness(self) -> float:
        if self._fitness is None:
            raise UnevaluatedIndividualError("Indivíduo ainda não avaliado")
        return self._fitness

    @fitness.setter
    def fitness(self, value: float) -> None:
        value = float(value)
        if not math.isfinite(value):
            raise DomainError(f"Fitness deve ser finito, recebido {value}")
        self._fitness = value


@dataclass
class Population:
    """
    População armazenada como matriz (size x n) de bits

    O vetor ``fitness`` usa NaN para indivíduos não avaliados.
    """

    genomes: np.ndarray
    fitness: np.ndarray = None

    def __post_init__(self):
        self.genomes = np.asarray(self.genomes, dtype=BIT_DTYPE)
        if self.genomes.ndim != 2 or self.genomes.shape[1] == 0:
            raise InvalidArgumentError("Genomas devem formar uma matriz (size x n) com n > 0")
        if self.fitness is None:
            self.fitness = np.full(len(self.genomes), np.nan)
        else:
            self.fitness = np.asarray(self.fitness, dtype=float)
            if self.fitness.shape != (len(self.genomes),):
                raise LengthMismatchError("Vetor de fitness não corresponde ao número de indivíduos")

    @property
    def size(self) -> int:
        return self.genomes.shape[0]

    @property
    def n(self) -> int:
        return self.genomes.shape[1]

    @property
    def evaluated(self) -> bool:
        return bool(np.all(np.isfinite(self.fitness)))

    def __len__(self) -> int:
        return self.size

    def members(self) -> List[Individual]:
        result = []
        for genome, fit in zip(self.genomes, self.fitness):
            ind = Individual(genome.copy())
            if np.isfinite(fit):
                ind.fitness = fit
            result.append(ind)
        return result

    def best_index(self) -> int:
        self._require_evaluated()
        return int(np.argmax(self.fitness))

    def best(self) -> Individual:
        i = self.best_index()
        return Individual(self.genomes[i].copy(), float(self.fitness[i]))

    def take(self, indices: Sequence[int]) -> "Population":
        idx = np.asarray(indices, dtype=int)
        return Population(self.genomes[idx].copy(), self.fitness[idx].copy())

    def union(self, other: "Population") -> "Population":
        """P_parents ∪ P_candidates, mantendo duplicatas"""
        if other.n != self.n:
            raise LengthMismatchError(f"Populações com n diferente: {self.n} vs {other.n}")
        return Population(
            np.vstack([self.genomes, other.genomes]),
            np.concatenate([self.fitness, other.fitness]),
        )

    def _require_evaluated(self) -> None:
        if not self.evaluated:
            missing = int(np.sum(~np.isfinite(self.fitness)))
            raise UnevaluatedIndividualError(f"{missing} indivíduo(s) sem fitness")

    @classmethod
    def from_individuals(cls, members: Sequence[Individual]) -> "Population":
        if not members:
            raise InvalidArgumentError("População vazia")
        genomes = np.vstack([m.genome for m in members])
        fitness = np.array([m.fitness if m.evaluated else np.nan for m in members])
        return cls(genomes, fitness)


def random_population(n: int, size: int, rng: RngState) -> Population:
    """
    Inicializa uma população com bits uniformes em {0,1}

    Args:
        n: Tamanho do problema
        size: Número de indivíduos (>= 2)
        rng: Gerador do sub-stream de inicialização

    Returns:
        População não avaliada
    """
    if n < 1:
        raise InvalidArgumentError(f"n deve ser >= 1, recebido {n}")
    if size < 2:
        raise InvalidArgumentError(f"Tamanho da população deve ser >= 2, recebido {size}")
    return Population(rng.integers(0, 2, size=(size, n), dtype=BIT_DTYPE))


def tournament_select(
    population: Population,
    rng: RngState,
    pairing: Optional[np.ndarray] = None,
) -> Population:
    """
    Torneio binário sem reposição

    Os indivíduos são pareados por uma permutação aleatória; o melhor de cada
    par avança. Empates são decididos por moeda justa. Com tamanho ímpar, o
    indivíduo sem par avança sem disputa.

    Args:
        population: População avaliada
        rng: Gerador do sub-stream de seleção
        pairing: Permutação explícita dos índices (para testes)

    Returns:
        População com ceil(size/2) vencedores
    """
    population._require_evaluated()
    size = population.size
    order = rng.permutation(size) if pairing is None else np.asarray(pairing, dtype=int)
    if sorted(order.tolist()) != list(range(size)):
        raise InvalidArgumentError("Pareamento deve ser uma permutação dos índices")

    n_pairs = size // 2
    pairs = order[: 2 * n_pairs].reshape(n_pairs, 2)
    left = population.fitness[pairs[:, 0]]
    right = population.fitness[pairs[:, 1]]

    coin = rng.random(n_pairs) < 0.5
    pick_left = (left > right) | ((left == right) & coin)
    winners = np.where(pick_left, pairs[:, 0], pairs[:, 1])
    if size % 2:
        winners = np.append(winners, order[-1])
    return population.take(winners)


def binarize(x: np.ndarray, rng: RngState) -> np.ndarray:
    """
    Amostra bits de Bernoulli com p = x_i, independentes por posição

    Aceita um vetor (n,) ou uma matriz (linhas x n) de probabilidades.
    """
    x = np.asarray(x, dtype=float)
    if np.any(~np.isfinite(x)) or np.any(x < 0.0) or np.any(x > 1.0):
        raise DomainError("Probabilidades devem estar em [0,1]")
    return (rng.random(x.shape) < x).astype(BIT_DTYPE)
