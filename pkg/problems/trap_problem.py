"""
Armadilhas enganosas concatenadas (concatenated deceptive traps)
"""

from typing import Optional

import numpy as np

from problems.base_problem import Problem
from utils.errors import InvalidArgumentError
from utils.rng import make_rng


class TrapProblem(Problem):
    """
    l armadilhas de k bits; cada bloco vale k se todos os bits forem 1 e
    k - (uns + 1) caso contrário

    Por padrão os blocos são contíguos. Com ``permutation_seed`` os índices
    de cada bloco são espalhados por uma permutação semeada.
    """

    family = "trap"

    def __init__(self, k: int, l: int, permutation_seed: Optional[int] = None):
        if k < 2:
            raise InvalidArgumentError(f"Tamanho da armadilha deve ser >= 2, recebido {k}")
        if l < 1:
            raise InvalidArgumentError(f"Número de armadilhas deve ser >= 1, recebido {l}")
        super().__init__(k * l)
        self.trap_size = int(k)
        self.traps = int(l)
        self.permutation_seed = permutation_seed
        if permutation_seed is None:
            self.layout = np.arange(self.n)
        else:
            self.layout = make_rng(permutation_seed, "trap_permutation").permutation(self.n)

    @property
    def k(self) -> int:
        return self.trap_size

    @property
    def optimum(self) -> float:
        return float(self.trap_size * self.traps)

    @property
    def name(self) -> str:
        return f"trap{self.trap_size}"

    @property
    def instance_id(self) -> str:
        suffix = "" if self.permutation_seed is None else f"-p{self.permutation_seed}"
        return f"trap-k{self.trap_size}-n{self.n}{suffix}"

    def _evaluate_rows(self, genomes: np.ndarray) -> np.ndarray:
        k = self.trap_size
        blocks = genomes[:, self.layout].reshape(len(genomes), self.traps, k)
        ones = blocks.sum(axis=2)
        contrib = np.where(ones == k, k, k - (ones + 1))
        return contrib.sum(axis=1).astype(float)


def eval_trap(problem: TrapProblem, x: np.ndarray) -> float:
    return problem.evaluate(np.asarray(x))
