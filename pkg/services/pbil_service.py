"""
Serviço PBIL (Population-Based Incremental Learning), o baseline univariado
"""
import logging
from typing import Optional

import numpy as np

from utils.errors import InvalidArgumentError, LengthMismatchError
from utils.population import BIT_DTYPE
from utils.rng import RngState

logger = logging.getLogger(__name__)

# Configuração de referência: mu=1, alpha=0.02
PBIL_ALPHA = 0.02
PBIL_MU = 1


def pbil_init(n: int) -> np.ndarray:
    """Vetor de probabilidades inicial, todas as posições em 0.5"""
    if n < 1:
        raise InvalidArgumentError(f"n deve ser >= 1, recebido {n}")
    return np.full(n, 0.5)


def pbil_update(p: np.ndarray, best: np.ndarray, alpha: float = PBIL_ALPHA) -> np.ndarray:
    """
    Passo convexo em direção à média dos mu melhores indivíduos

    p' = p + alpha * (mean(best) - p), truncado em [0,1].

    Args:
        p: Vetor de probabilidades atual
        best: Matriz (mu x n) ou vetor (n,) com os melhores bitstrings
        alpha: Força da atualização, 0 < alpha < 1

    Returns:
        Novo vetor de probabilidades
    """
    if not 0.0 < alpha < 1.0:
        raise InvalidArgumentError(f"alpha deve estar em (0,1), recebido {alpha}")
    p = np.asarray(p, dtype=float)
    best = np.atleast_2d(np.asarray(best, dtype=float))
    if best.shape[0] < 1:
        raise InvalidArgumentError("pbil_update exige ao menos um indivíduo")
    if best.shape[1] != p.shape[0]:
        raise LengthMismatchError(f"Bitstrings de comprimento {best.shape[1]}, vetor tem {p.shape[0]}")
    target = best.mean(axis=0)
    return np.clip(p + alpha * (target - p), 0.0, 1.0)


def pbil_sample(p: np.ndarray, rng: RngState, count: Optional[int] = None) -> np.ndarray:
    """Bits independentes de Bernoulli(p_i); ``count`` linhas ou um único vetor"""
    p = np.asarray(p, dtype=float)
    shape = p.shape if count is None else (count, p.shape[0])
    return (rng.random(shape) < p).astype(BIT_DTYPE)
