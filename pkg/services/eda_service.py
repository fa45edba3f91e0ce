#!/usr/bin/env python3
"""
Serviço do laço principal do EDA
Seleção, construção do modelo, amostragem e união P_parents ∪ P_candidates
"""

import logging
import math
import time
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Optional, Sequence, Union

import numpy as np

from problems.base_problem import CountingProblem, Problem
from services.dae_service import MIN_TRAINING_DATA, DaeModel, TrainConfig, init_dae, sample, train
from services.pbil_service import PBIL_ALPHA, PBIL_MU, pbil_init, pbil_sample, pbil_update
from utils.errors import InvalidArgumentError
from utils.population import Population, binarize, bitstring_to_str, random_population, tournament_select
from utils.rng import make_rng

logger = logging.getLogger(__name__)


class Algorithm(str, Enum):
    DAE = "dae"
    PBIL = "pbil"


# (gerações máximas, gerações sem melhora) da configuração de referência
DEFAULT_LIMITS = {
    Algorithm.DAE: (100, 20),
    Algorithm.PBIL: (2000, 400),
}
MIN_POPSIZE = 4


@dataclass
class EdaConfig:
    """
    Configuração de uma run do EDA

    ``max_generations`` e ``stall_generations`` assumem os padrões do
    algoritmo quando omitidos. ``hidden_size`` None significa m = n.
    """

    algorithm: Algorithm
    popsize: int
    seed: int
    max_generations: Optional[int] = None
    stall_generations: Optional[int] = None
    train: TrainConfig = field(default_factory=TrainConfig)
    hidden_size: Optional[int] = None
    sampling_steps: int = 10
    pbil_alpha: float = PBIL_ALPHA
    pbil_mu: int = PBIL_MU

    def __post_init__(self):
        self.algorithm = Algorithm(self.algorithm)
        default_max, default_stall = DEFAULT_LIMITS[self.algorithm]
        if self.max_generations is None:
            self.max_generations = default_max
        if self.stall_generations is None:
            self.stall_generations = default_stall

        if self.popsize < MIN_POPSIZE:
            raise InvalidArgumentError(f"popsize deve ser >= {MIN_POPSIZE}, recebido {self.popsize}")
        if self.max_generations < 1 or self.stall_generations < 1:
            raise InvalidArgumentError("max_generations e stall_generations devem ser >= 1")
        if self.algorithm is Algorithm.DAE:
            if math.ceil(self.popsize / 2) < MIN_TRAINING_DATA:
                raise InvalidArgumentError(
                    f"DAE-EDA exige popsize >= {2 * MIN_TRAINING_DATA - 1} para treinar com os pais, "
                    f"recebido {self.popsize}"
                )
            if self.sampling_steps < 1:
                raise InvalidArgumentError("sampling_steps deve ser >= 1")
        else:
            if not 0.0 < self.pbil_alpha < 1.0:
                raise InvalidArgumentError(f"pbil_alpha deve estar em (0,1), recebido {self.pbil_alpha}")
            if not 1 <= self.pbil_mu <= self.popsize:
                raise InvalidArgumentError(f"pbil_mu deve estar em [1, popsize], recebido {self.pbil_mu}")

    @classmethod
    def for_algorithm(cls, algorithm: Union[str, Algorithm], popsize: int, seed: int, **overrides) -> "EdaConfig":
        """Configuração com os limites padrão do algoritmo; ``None`` em overrides é ignorado"""
        values = {key: value for key, value in overrides.items() if value is not None}
        return cls(algorithm=Algorithm(algorithm), popsize=popsize, seed=seed, **values)


@dataclass
class GenerationStats:
    generation: int
    best_fitness: float
    population_size: int
    evaluations: int


@dataclass
class RunRecord:
    """Resultado de uma run"""

    best_fitness: float
    best_genome: np.ndarray
    evaluations: int
    generations: int
    wall_time_ms: float
    success: bool
    seed: int
    stop_reason: str
    history: List[GenerationStats] = field(default_factory=list)
    train_epochs: List[int] = field(default_factory=list)
    model: Optional[DaeModel] = field(default=None, repr=False)

    def comparable(self) -> Dict[str, Any]:
        """Campos determinísticos (tudo menos o tempo de parede)"""
        return {
            "best_fitness": self.best_fitness,
            "best_genome": bitstring_to_str(self.best_genome),
            "evaluations": self.evaluations,
            "generations": self.generations,
            "success": self.success,
            "seed": self.seed,
            "stop_reason": self.stop_reason,
            "history": [(h.generation, h.best_fitness, h.population_size, h.evaluations) for h in self.history],
            "train_epochs": list(self.train_epochs),
        }


@dataclass
class Termination:
    stop: bool
    reason: Optional[str] = None


def update_stall(stall: int, previous_best: float, new_best: float) -> int:
    """Zera o contador quando o melhor fitness melhora estritamente"""
    return 0 if new_best > previous_best else stall + 1


def check_termination(
    generation: int,
    stall: int,
    best_history: Sequence[float],
    cfg: EdaConfig,
    optimum_reached: bool = False,
) -> Termination:
    """
    Decide se a run termina

    Para ao atingir o ótimo conhecido, ao chegar em ``max_generations`` ou
    quando o contador de estagnação passa de ``stall_generations``.
    """
    if not best_history:
        raise InvalidArgumentError("Histórico de melhores vazio")
    if optimum_reached:
        return Termination(True, "optimum")
    if generation >= cfg.max_generations:
        return Termination(True, "max-generations")
    if stall > cfg.stall_generations:
        return Termination(True, "stall")
    return Termination(False)


def _top_mu(population: Population, mu: int) -> np.ndarray:
    order = np.argsort(-population.fitness, kind="stable")
    return population.genomes[order[:mu]]


def run_eda(problem: Problem, cfg: EdaConfig) -> RunRecord:
    """
    Executa uma run completa do EDA sobre ``problem``

    Args:
        problem: Função de fitness
        cfg: Configuração da run

    Returns:
        RunRecord com melhor solução, avaliações, gerações e tempo
    """
    counter = CountingProblem(problem)
    n = problem.n
    seed = cfg.seed
    start_time = time.perf_counter()
    logger.info(
        f"🚀 Run {cfg.algorithm.value} em {problem.instance_id}: popsize={cfg.popsize}, seed={seed}"
    )

    population = random_population(n, cfg.popsize, make_rng(seed, 0, "init"))
    population.fitness = counter.evaluate_batch(population.genomes)
    best_index = population.best_index()
    best_fitness = float(population.fitness[best_index])
    best_genome = population.genomes[best_index].copy()
    history = [GenerationStats(0, best_fitness, population.size, counter.evaluations)]
    train_epochs: List[int] = []
    model = None

    if cfg.algorithm is Algorithm.PBIL:
        # a população inicial só entra no melhor global; p parte de 0.5
        probabilities = pbil_init(n)
    hidden = cfg.hidden_size or n

    generation = 0
    stall = 0
    while True:
        decision = check_termination(
            generation, stall, [h.best_fitness for h in history], cfg, counter.is_optimal(best_fitness)
        )
        if decision.stop:
            break
        generation += 1

        if cfg.algorithm is Algorithm.DAE:
            parents = tournament_select(population, make_rng(seed, generation, "select"))
            model = init_dae(n, hidden, make_rng(seed, generation, "model_init"))
            model, report = train(model, parents.genomes, cfg.train, make_rng(seed, generation, "train"))
            train_epochs.append(report.epochs_run)
            probs = sample(
                model, cfg.sampling_steps, cfg.train.corruption_rate,
                make_rng(seed, generation, "sample"), count=cfg.popsize // 2,
            )
            genomes = binarize(probs, make_rng(seed, generation, "binarize"))
            candidates = Population(genomes, counter.evaluate_batch(genomes))
            population = parents.union(candidates)
        else:
            genomes = pbil_sample(probabilities, make_rng(seed, generation, "pbil"), count=cfg.popsize)
            population = Population(genomes, counter.evaluate_batch(genomes))
            probabilities = pbil_update(probabilities, _top_mu(population, cfg.pbil_mu), cfg.pbil_alpha)

        gen_index = population.best_index()
        gen_best = float(population.fitness[gen_index])
        stall = update_stall(stall, best_fitness, gen_best)
        if gen_best > best_fitness:
            best_fitness = gen_best
            best_genome = population.genomes[gen_index].copy()
        history.append(GenerationStats(generation, best_fitness, population.size, counter.evaluations))
        logger.debug(f"Geração {generation}: melhor={best_fitness}, avaliações={counter.evaluations}")

    wall_ms = (time.perf_counter() - start_time) * 1000.0
    success = counter.is_optimal(best_fitness)
    logger.info(
        f"{'✅' if success else '⚠️'} Run concluída: melhor={best_fitness}, avaliações={counter.evaluations}, "
        f"gerações={generation}, parada={decision.reason}, {wall_ms:.0f}ms"
    )
    return RunRecord(
        best_fitness=best_fitness,
        best_genome=best_genome,
        evaluations=counter.evaluations,
        generations=generation,
        wall_time_ms=wall_ms,
        success=success,
        seed=seed,
        stop_reason=decision.reason,
        history=history,
        train_epochs=train_epochs,
        model=model,
    )
