#!/usr/bin/env python3
"""
Módulo de NK landscapes
Geração de instâncias, avaliação, solução exata por enumeração e formato de arquivo
"""

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Tuple, Union

import numpy as np

from problems.base_problem import Problem
from utils.errors import (
    InstanceFormatError,
    InvalidArgumentError,
    LengthMismatchError,
    TooLargeError,
)
from utils.population import bitstring_to_str, to_bitstring
from utils.rng import make_rng

logger = logging.getLogger(__name__)

# Limite da busca exaustiva (2^26 strings)
MAX_EXACT_N = 26
ENUM_CHUNK = 1 << 15
OPTIMUM_TOLERANCE = 1e-12


@dataclass
class NkInstance:
    """
    Instância NK: vizinhos e tabelas f_i

    A linha i de ``tables`` é indexada pela configuração (x_i, x_{nb_1}, ...,
    x_{nb_k}) lida em big-endian, com x_i como bit mais significativo.
    """

    n: int
    k: int
    neighbors: np.ndarray
    tables: np.ndarray
    seed: int = 0
    optimum_genome: Optional[np.ndarray] = None
    optimum_fitness: Optional[float] = None
    optimum_exact: bool = True

    def __post_init__(self):
        self.neighbors = np.asarray(self.neighbors, dtype=np.int64).reshape(self.n, self.k)
        self.tables = np.asarray(self.tables, dtype=float)
        if self.n < 1 or not 0 <= self.k <= self.n - 1:
            raise InvalidArgumentError(f"Parâmetros NK inválidos: n={self.n}, k={self.k}")
        if self.tables.shape != (self.n, 2 ** (self.k + 1)):
            raise InvalidArgumentError(
                f"Tabelas devem ter formato ({self.n}, {2 ** (self.k + 1)}), recebido {self.tables.shape}"
            )
        if not np.all(np.isfinite(self.tables)):
            raise InvalidArgumentError("Tabelas NK contêm valores não finitos")
        for i, row in enumerate(self.neighbors):
            if len(set(row.tolist())) != self.k or i in row or np.any(row < 0) or np.any(row >= self.n):
                raise InvalidArgumentError(f"Vizinhos inválidos para a variável {i}: {row.tolist()}")
        # colunas (x_i, vizinhos) e pesos big-endian
        self._columns = np.hstack([np.arange(self.n)[:, None], self.neighbors])
        self._weights = 2 ** np.arange(self.k, -1, -1)
        if self.optimum_genome is not None:
            self.optimum_genome = to_bitstring(self.optimum_genome)
            if len(self.optimum_genome) != self.n:
                raise LengthMismatchError("Ótimo armazenado com comprimento diferente de n")
            check = float(self.evaluate_rows(self.optimum_genome[None, :])[0])
            if self.optimum_fitness is not None and abs(check - self.optimum_fitness) > OPTIMUM_TOLERANCE:
                raise InvalidArgumentError(
                    f"Fitness do ótimo armazenado ({self.optimum_fitness!r}) difere da reavaliação ({check!r})"
                )
            # sucesso é igualdade exata com a reavaliação
            self.optimum_fitness = check

    def evaluate_rows(self, genomes: np.ndarray) -> np.ndarray:
        bits = genomes[:, self._columns]
        index = bits @ self._weights
        values = self.tables[np.arange(self.n), index]
        return values.mean(axis=1)

    def with_optimum(self, genome: np.ndarray, fitness: float, exact: bool = True) -> "NkInstance":
        return NkInstance(
            self.n, self.k, self.neighbors, self.tables, self.seed,
            optimum_genome=genome, optimum_fitness=fitness, optimum_exact=exact,
        )


class NkProblem(Problem):
    """Adapta uma NkInstance à interface Problem"""

    family = "nk"

    def __init__(self, instance: NkInstance, instance_id: Optional[str] = None):
        super().__init__(instance.n)
        self.instance = instance
        self._instance_id = instance_id or f"nk-n{instance.n}-k{instance.k}-s{instance.seed}"

    @property
    def k(self) -> int:
        return self.instance.k

    @property
    def optimum(self) -> Optional[float]:
        return self.instance.optimum_fitness

    @property
    def optimum_exact(self) -> bool:
        return self.instance.optimum_exact

    @property
    def instance_id(self) -> str:
        return self._instance_id

    def _evaluate_rows(self, genomes: np.ndarray) -> np.ndarray:
        return self.instance.evaluate_rows(genomes)


def eval_nk(instance: NkInstance, x: np.ndarray) -> float:
    x = np.asarray(x)
    if x.shape != (instance.n,):
        raise LengthMismatchError(f"Esperado comprimento {instance.n}, recebido {x.shape}")
    return float(instance.evaluate_rows(x.astype(np.int64)[None, :])[0])


def generate_nk(n: int, k: int, seed: int) -> NkInstance:
    """
    Gera uma instância NK aleatória

    Vizinhos são sorteados sem reposição em {0..n-1} \\ {i}; entradas das
    tabelas são uniformes em [0,1). Determinística na seed.
    """
    if n < 1:
        raise InvalidArgumentError(f"n deve ser >= 1, recebido {n}")
    if k < 0 or k >= n:
        raise InvalidArgumentError(f"k deve estar em [0, n-1], recebido k={k} para n={n}")
    rng = make_rng(seed, "nk_instance")
    neighbors = np.empty((n, k), dtype=np.int64)
    for i in range(n):
        others = np.delete(np.arange(n), i)
        neighbors[i] = rng.choice(others, size=k, replace=False)
    tables = rng.random((n, 2 ** (k + 1)))
    logger.debug(f"Instância NK gerada: n={n}, k={k}, seed={seed}")
    return NkInstance(n, k, neighbors, tables, seed)


def solve_nk_exact(instance: NkInstance) -> Tuple[np.ndarray, float]:
    """
    Encontra o ótimo global por enumeração de todas as 2^n strings

    Empates são resolvidos para a string lexicograficamente menor.

    Args:
        instance: Instância com n <= 26

    Returns:
        (bitstring ótimo, fitness)
    """
    n = instance.n
    if n > MAX_EXACT_N:
        raise TooLargeError(f"Busca exaustiva limitada a n <= {MAX_EXACT_N}, recebido n={n}")

    shifts = np.arange(n - 1, -1, -1, dtype=np.int64)
    best_value = -np.inf
    best_code = 0
    total = 1 << n
    for start in range(0, total, ENUM_CHUNK):
        codes = np.arange(start, min(start + ENUM_CHUNK, total), dtype=np.int64)
        genomes = (codes[:, None] >> shifts) & 1
        values = instance.evaluate_rows(genomes)
        i = int(np.argmax(values))
        if values[i] > best_value:
            best_value = values[i]
            best_code = int(codes[i])

    genome = ((best_code >> shifts) & 1).astype(np.uint8)
    fitness = eval_nk(instance, genome)
    logger.info(f"✅ Ótimo exato NK (n={n}, k={instance.k}): {fitness:.6f}")
    return genome, fitness


def save_nk(instance: NkInstance, path: Union[str, Path]) -> Path:
    """Grava a instância no formato texto NK (reais com 17 dígitos significativos)"""
    path = Path(path)
    lines = [f"NK {instance.n} {instance.k} {instance.seed}"]
    for i, row in enumerate(instance.neighbors):
        lines.append(" ".join(str(v) for v in [i, *row.tolist()]))
    for row in instance.tables:
        lines.append(" ".join(f"{v:.17g}" for v in row))
    if instance.optimum_genome is not None:
        tag = "OPT" if instance.optimum_exact else "BEST"
        lines.append(f"{tag} {bitstring_to_str(instance.optimum_genome)} {instance.optimum_fitness:.17g}")
    path.write_text("\n".join(lines) + "\n")
    logger.info(f"💾 Instância NK salva em {path}")
    return path


def load_nk(path: Union[str, Path]) -> NkInstance:
    """
    Lê uma instância NK do formato texto

    Raises:
        InstanceFormatError: cabeçalho, contagens ou valores malformados
    """
    path = Path(path)
    lines = [line.strip() for line in path.read_text().splitlines() if line.strip()]
    if not lines:
        raise InstanceFormatError(f"{path}: arquivo vazio")

    header = lines[0].split()
    if len(header) != 4 or header[0] != "NK":
        raise InstanceFormatError(f"{path}: cabeçalho inválido '{lines[0]}'")
    try:
        n, k, seed = (int(v) for v in header[1:])
    except ValueError:
        raise InstanceFormatError(f"{path}: cabeçalho com valores não inteiros '{lines[0]}'") from None
    if n < 1 or not 0 <= k < n:
        raise InstanceFormatError(f"{path}: n={n}, k={k} fora do domínio")

    body = lines[1:]
    if len(body) not in (2 * n, 2 * n + 1):
        raise InstanceFormatError(f"{path}: esperado {2 * n} linhas de dados (+1 opcional), encontrado {len(body)}")

    try:
        neighbors = []
        for i, line in enumerate(body[:n]):
            values = [int(v) for v in line.split()]
            if len(values) != k + 1 or values[0] != i:
                raise InstanceFormatError(f"{path}: linha de vizinhos {i} malformada '{line}'")
            neighbors.append(values[1:])
        tables = []
        for i, line in enumerate(body[n:2 * n]):
            values = [float(v) for v in line.split()]
            if len(values) != 2 ** (k + 1):
                raise InstanceFormatError(
                    f"{path}: tabela {i} com {len(values)} entradas, esperado {2 ** (k + 1)}"
                )
            tables.append(values)
    except ValueError as e:
        if isinstance(e, InstanceFormatError):
            raise
        raise InstanceFormatError(f"{path}: valor numérico inválido ({e})") from None

    genome, fitness, exact = None, None, True
    if len(body) == 2 * n + 1:
        parts = body[-1].split()
        if len(parts) != 3 or parts[0] not in ("OPT", "BEST") or len(parts[1]) != n:
            raise InstanceFormatError(f"{path}: linha de ótimo malformada '{body[-1]}'")
        try:
            genome, fitness = to_bitstring(parts[1]), float(parts[2])
        except ValueError:
            raise InstanceFormatError(f"{path}: linha de ótimo malformada '{body[-1]}'") from None
        exact = parts[0] == "OPT"

    try:
        instance = NkInstance(
            n, k, np.array(neighbors, dtype=np.int64).reshape(n, k), np.array(tables), seed,
            optimum_genome=genome, optimum_fitness=fitness, optimum_exact=exact,
        )
    except InvalidArgumentError as e:
        raise InstanceFormatError(f"{path}: {e}") from None
    logger.info(f"📄 Instância NK carregada de {path} (n={n}, k={k})")
    return instance
