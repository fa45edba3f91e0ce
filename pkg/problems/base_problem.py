"""
Base para as funções de fitness dos benchmarks
"""

import logging
from typing import Any, Dict, Optional

import numpy as np

from utils.errors import LengthMismatchError, NonFiniteFitnessError

logger = logging.getLogger(__name__)


class Problem:
    """
    Função de fitness binária a ser maximizada

    Subclasses implementam ``_evaluate_rows`` sobre uma matriz (linhas x n)
    já validada. ``optimum`` é o valor ótimo conhecido (ou melhor conhecido,
    quando ``optimum_exact`` é falso).
    """

    family = "generic"
    # tolerância usada para declarar sucesso
    success_tolerance = 0.0

    def __init__(self, n: int):
        self.n = int(n)

    @property
    def optimum(self) -> Optional[float]:
        return None

    @property
    def optimum_exact(self) -> bool:
        return True

    @property
    def k(self) -> Optional[int]:
        return None

    @property
    def instance_id(self) -> str:
        return f"{self.family}-{self.n}"

    @property
    def name(self) -> str:
        return self.family

    def evaluate(self, genome: np.ndarray) -> float:
        """Avalia um único bitstring"""
        genome = np.asarray(genome)
        if genome.ndim != 1:
            raise LengthMismatchError("evaluate espera um vetor; use evaluate_batch para matrizes")
        return float(self.evaluate_batch(genome[None, :])[0])

    def evaluate_batch(self, genomes: np.ndarray) -> np.ndarray:
        genomes = np.atleast_2d(np.asarray(genomes))
        if genomes.shape[1] != self.n:
            raise LengthMismatchError(f"Esperado comprimento {self.n}, recebido {genomes.shape[1]}")
        return self._evaluate_rows(genomes.astype(np.int64))

    def _evaluate_rows(self, genomes: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def is_optimal(self, fitness: float) -> bool:
        if self.optimum is None:
            return False
        return fitness >= self.optimum - self.success_tolerance

    def describe(self) -> Dict[str, Any]:
        return {
            "problem": self.name,
            "n": self.n,
            "k": self.k,
            "instance_id": self.instance_id,
            "optimum": self.optimum,
            "optimum_exact": self.optimum_exact,
        }


class CountingProblem:
    """
    Envoltório que conta cada chamada à função de fitness

    Uma linha avaliada em lote conta como uma avaliação.
    """

    def __init__(self, problem: Problem):
        self.problem = problem
        self.evaluations = 0

    @property
    def n(self) -> int:
        return self.problem.n

    def evaluate_batch(self, genomes: np.ndarray) -> np.ndarray:
        values = self.problem.evaluate_batch(genomes)
        self.evaluations += len(values)
        bad = ~np.isfinite(values)
        if np.any(bad):
            row = int(np.argmax(bad))
            raise NonFiniteFitnessError(
                f"Fitness não finito ({values[row]}) para o indivíduo {row} "
                f"em {self.problem.instance_id}"
            )
        return values

    def is_optimal(self, fitness: float) -> bool:
        return self.problem.is_optimal(fitness)
