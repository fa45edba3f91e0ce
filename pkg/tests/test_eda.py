"""Testes do laço do EDA (DAE-EDA e PBIL)."""

import numpy as np
import pytest

from problems.base_problem import Problem
from problems.trap_problem import TrapProblem
from services.dae_service import TrainConfig
from services.eda_service import (
    Algorithm,
    EdaConfig,
    check_termination,
    run_eda,
    update_stall,
)
from services.pbil_service import pbil_init, pbil_sample
from utils.errors import InvalidArgumentError, NonFiniteFitnessError
from utils.rng import make_rng


def _assert_invariants(record, cfg: EdaConfig) -> None:
    bests = [h.best_fitness for h in record.history]
    assert all(b2 >= b1 for b1, b2 in zip(bests, bests[1:]))
    assert {h.population_size for h in record.history} == {cfg.popsize}
    per_generation = cfg.popsize // 2 if cfg.algorithm is Algorithm.DAE else cfg.popsize
    for h in record.history:
        assert h.evaluations == cfg.popsize + h.generation * per_generation
    assert record.evaluations == record.history[-1].evaluations
    assert record.generations == record.history[-1].generation
    assert record.best_fitness == bests[-1]


def test_config_defaults_per_algorithm() -> None:
    dae = EdaConfig(Algorithm.DAE, popsize=50, seed=1)
    assert (dae.max_generations, dae.stall_generations) == (100, 20)
    pbil = EdaConfig("pbil", popsize=50, seed=1)
    assert (pbil.max_generations, pbil.stall_generations) == (2000, 400)
    assert EdaConfig.for_algorithm("dae", 50, 1, max_generations=None).max_generations == 100


def test_config_validation() -> None:
    with pytest.raises(InvalidArgumentError):
        EdaConfig(Algorithm.PBIL, popsize=3, seed=1)
    with pytest.raises(InvalidArgumentError):
        EdaConfig(Algorithm.DAE, popsize=18, seed=1)
    with pytest.raises(InvalidArgumentError):
        EdaConfig(Algorithm.PBIL, popsize=10, seed=1, max_generations=0)
    with pytest.raises(ValueError):
        EdaConfig("boa", popsize=10, seed=1)
    assert EdaConfig(Algorithm.DAE, popsize=19, seed=1).popsize == 19


def test_check_termination_rules() -> None:
    cfg = EdaConfig(Algorithm.DAE, popsize=50, seed=1)
    assert check_termination(100, 0, [1.0], cfg).reason == "max-generations"
    assert check_termination(50, 21, [1.0], cfg).reason == "stall"
    assert not check_termination(50, 20, [1.0], cfg).stop
    assert check_termination(3, 0, [1.0], cfg, optimum_reached=True).reason == "optimum"
    with pytest.raises(InvalidArgumentError):
        check_termination(1, 0, [], cfg)


def test_stall_counter() -> None:
    assert update_stall(5, 1.0, 2.0) == 0
    assert update_stall(5, 2.0, 2.0) == 6


def test_dae_solves_onemax(onemax_problem) -> None:
    cfg = EdaConfig(Algorithm.DAE, popsize=200, seed=7)
    record = run_eda(onemax_problem, cfg)
    assert record.success
    assert record.stop_reason == "optimum"
    assert record.evaluations <= 20000
    assert record.best_genome.tolist() == [1] * 20
    assert len(record.train_epochs) == record.generations
    _assert_invariants(record, cfg)


def test_run_is_deterministic(onemax_problem) -> None:
    cfg = EdaConfig(Algorithm.DAE, popsize=40, seed=3, max_generations=5)
    a = run_eda(onemax_problem, cfg)
    b = run_eda(onemax_problem, cfg)
    assert a.comparable() == b.comparable()


def test_pbil_run_invariants() -> None:
    problem = TrapProblem(4, 3)
    cfg = EdaConfig(Algorithm.PBIL, popsize=30, seed=11, max_generations=40, stall_generations=10)
    record = run_eda(problem, cfg)
    _assert_invariants(record, cfg)
    assert record.generations <= 40
    assert record.stop_reason in {"optimum", "max-generations", "stall"}
    assert record.model is None


def test_dae_run_respects_generation_limit() -> None:
    problem = TrapProblem(5, 4)
    cfg = EdaConfig(Algorithm.DAE, popsize=40, seed=2, max_generations=3, train=TrainConfig(max_epochs=20))
    record = run_eda(problem, cfg)
    _assert_invariants(record, cfg)
    assert record.generations <= 3
    assert record.model is not None and record.model.n == 20


def test_different_seeds_differ() -> None:
    problem = TrapProblem(4, 3)
    a = run_eda(problem, EdaConfig(Algorithm.PBIL, popsize=20, seed=1, max_generations=3))
    b = run_eda(problem, EdaConfig(Algorithm.PBIL, popsize=20, seed=2, max_generations=3))
    assert a.comparable() != b.comparable()


class _RecordingProblem(Problem):
    family = "recording"

    def __init__(self, n):
        super().__init__(n)
        self.batches = []

    def _evaluate_rows(self, genomes):
        self.batches.append(np.array(genomes))
        return genomes.sum(axis=1).astype(float)


def test_pbil_first_generation_samples_from_one_half() -> None:
    problem = _RecordingProblem(8)
    run_eda(problem, EdaConfig(Algorithm.PBIL, popsize=30, seed=4, max_generations=1))
    assert len(problem.batches) == 2
    expected = pbil_sample(pbil_init(8), make_rng(4, 1, "pbil"), count=30)
    assert np.array_equal(problem.batches[1], expected)


class _NanAfterFirstBatch(Problem):
    family = "nan"

    def __init__(self, n):
        super().__init__(n)
        self.calls = 0

    def _evaluate_rows(self, genomes):
        self.calls += 1
        values = genomes.sum(axis=1).astype(float)
        if self.calls > 1:
            values[:] = np.nan
        return values


def test_non_finite_fitness_aborts_run() -> None:
    with pytest.raises(NonFiniteFitnessError):
        run_eda(_NanAfterFirstBatch(8), EdaConfig(Algorithm.PBIL, popsize=10, seed=1))
