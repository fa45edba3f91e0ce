"""
Resolução de problemas a partir da descrição usada pela CLI e pelas varreduras
"""

import logging
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Any, Dict, Optional

from problems.base_problem import Problem
from problems.hiff_problem import HiffProblem
from problems.nk_problem import MAX_EXACT_N, NkProblem, generate_nk, load_nk, solve_nk_exact
from problems.trap_problem import TrapProblem
from utils.errors import InvalidArgumentError

logger = logging.getLogger(__name__)

FAMILIES = ("trap", "nk", "hiff")


@dataclass(frozen=True)
class ProblemSpec:
    """
    Descrição serializável de um problema

    trap: n e k (n múltiplo de k). nk: arquivo de instância ou (n, k, seed).
    hiff: n potência de dois (ou levels).
    """

    family: str
    n: Optional[int] = None
    k: Optional[int] = None
    levels: Optional[int] = None
    seed: Optional[int] = None
    instance_path: Optional[str] = None
    permutation_seed: Optional[int] = None

    def to_dict(self) -> Dict[str, Any]:
        return {key: value for key, value in asdict(self).items() if value is not None}


def build_problem(spec: ProblemSpec) -> Problem:
    """
    Constrói o problema descrito por ``spec``

    Instâncias NK geradas com n <= 26 são resolvidas na hora para ter ótimo
    conhecido; acima disso o problema fica sem ótimo (nenhuma run terá sucesso
    a menos que o arquivo traga uma linha BEST).
    """
    family = spec.family.lower()

    if family == "trap":
        if not spec.n or not spec.k or spec.n % spec.k:
            raise InvalidArgumentError(f"trap exige n múltiplo de k, recebido n={spec.n}, k={spec.k}")
        return TrapProblem(spec.k, spec.n // spec.k, permutation_seed=spec.permutation_seed)

    if family == "hiff":
        if spec.levels:
            return HiffProblem(spec.levels)
        if not spec.n:
            raise InvalidArgumentError("hiff exige n ou levels")
        return HiffProblem.from_size(spec.n)

    if family == "nk":
        if spec.instance_path:
            instance = load_nk(spec.instance_path)
            return NkProblem(instance, instance_id=Path(spec.instance_path).stem)
        if spec.n is None or spec.k is None or spec.seed is None:
            raise InvalidArgumentError("nk exige --instance ou n, k e seed")
        instance = generate_nk(spec.n, spec.k, spec.seed)
        if spec.n <= MAX_EXACT_N:
            genome, fitness = solve_nk_exact(instance)
            instance = instance.with_optimum(genome, fitness, exact=True)
        else:
            logger.warning(f"⚠️ NK n={spec.n} acima do limite exato; runs sem ótimo conhecido")
        return NkProblem(instance)

    raise InvalidArgumentError(f"Família de problema desconhecida: {spec.family} (use {', '.join(FAMILIES)})")
