"""
Hierarchical If-and-only-If (HIFF)
"""

import numpy as np

from problems.base_problem import Problem
from utils.errors import InvalidArgumentError

NULL = -1


class HiffProblem(Problem):
    """
    HIFF com n = 2^levels

    Em cada nível l = 1..levels, blocos de dois símbolos iguais e não nulos
    contribuem 2^l e se reduzem a esse símbolo; qualquer outro par vira nulo
    e não contribui. Não há contribuição unária no nível 0.
    """

    family = "hiff"

    def __init__(self, levels: int):
        if levels < 1:
            raise InvalidArgumentError(f"levels deve ser >= 1, recebido {levels}")
        self.levels = int(levels)
        super().__init__(2 ** self.levels)

    @classmethod
    def from_size(cls, n: int) -> "HiffProblem":
        if n < 2 or n & (n - 1):
            raise InvalidArgumentError(f"HIFF exige n potência de dois, recebido {n}")
        return cls(n.bit_length() - 1)

    @property
    def optimum(self) -> float:
        # cada nível contribui 2^(levels-l) blocos * 2^l = n
        return float(self.levels * self.n)

    @property
    def name(self) -> str:
        return "hiff"

    @property
    def instance_id(self) -> str:
        return f"hiff-n{self.n}"

    def _evaluate_rows(self, genomes: np.ndarray) -> np.ndarray:
        symbols = genomes.copy()
        total = np.zeros(len(genomes))
        for level in range(1, self.levels + 1):
            left = symbols[:, 0::2]
            right = symbols[:, 1::2]
            agree = (left == right) & (left != NULL)
            total += agree.sum(axis=1) * float(2 ** level)
            symbols = np.where(agree, left, NULL)
        return total


def eval_hiff(problem: HiffProblem, x: np.ndarray) -> float:
    return problem.evaluate(np.asarray(x))
