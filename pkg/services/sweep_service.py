"""
Serviço de varreduras de tamanho de população e resumos no formato de tabela
"""
import csv
import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple, Union

import jsonschema
import pandas as pd

from database import init_db, log_run
from problems.base_problem import Problem
from problems.factory import ProblemSpec, build_problem
from services.dae_service import TrainConfig
from services.eda_service import Algorithm, EdaConfig, RunRecord, run_eda
from utils.errors import InvalidArgumentError, RecordIOError, SchemaMismatchError
from utils.rng import derive_seed

logger = logging.getLogger(__name__)

CSV_COLUMNS = [
    "problem", "algo", "n", "k", "instance_id", "popsize", "run", "seed",
    "success", "best_fitness", "evaluations", "generations", "wall_ms", "stop_reason",
]
GROUP_COLUMNS = ["problem", "algo", "n", "k", "instance_id"]
DEFAULT_THRESHOLDS = (0.5, 0.9)
SUMMARY_FORMAT = "sweep-summary/1"
# Teto padrão da varredura por algoritmo
MAX_POPSIZE = {Algorithm.DAE: 16000, Algorithm.PBIL: 512000}

_STATS = {
    "type": ["object", "null"],
    "properties": {
        "popsize": {"type": ["integer", "null"]},
        "evaluations_mean": {"type": ["number", "null"]},
        "evaluations_std": {"type": ["number", "null"]},
        "wall_ms_mean": {"type": ["number", "null"]},
        "wall_ms_std": {"type": ["number", "null"]},
    },
    "required": ["popsize", "evaluations_mean", "evaluations_std", "wall_ms_mean", "wall_ms_std"],
}

SUMMARY_SCHEMA = {
    "type": "object",
    "required": ["format", "thresholds", "summaries"],
    "properties": {
        "format": {"const": SUMMARY_FORMAT},
        "thresholds": {"type": "array", "items": {"type": "number", "minimum": 0, "maximum": 1}},
        "summaries": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["problem", "algo", "n", "instance_id", "popsizes", "selections", "reliability_ratio"],
                "properties": {
                    "problem": {"type": "string"},
                    "algo": {"type": "string"},
                    "n": {"type": "integer"},
                    "k": {"type": ["string", "null"]},
                    "instance_id": {"type": "string"},
                    "popsizes": {
                        "type": "array",
                        "items": {
                            "type": "object",
                            "required": ["popsize", "runs", "successes", "success_rate"],
                            "properties": {
                                "popsize": {"type": "integer"},
                                "runs": {"type": "integer", "minimum": 1},
                                "successes": {"type": "integer", "minimum": 0},
                                "success_rate": {"type": "number", "minimum": 0, "maximum": 1},
                            },
                        },
                    },
                    "selections": {"type": "object", "additionalProperties": _STATS},
                    "reliability_ratio": {"type": ["number", "null"]},
                },
            },
        },
    },
}


def doubling_popsizes(start: int = 50, maximum: int = 16000) -> List[int]:
    """50, 100, 200, ... até ``maximum``; o próprio máximo fecha a lista"""
    if start < 1 or maximum < start:
        raise InvalidArgumentError(f"Faixa de popsize inválida: {start}..{maximum}")
    sizes = []
    size = start
    while size < maximum:
        sizes.append(size)
        size *= 2
    sizes.append(maximum)
    return sizes


def default_max_popsize(algorithm: Union[str, Algorithm]) -> int:
    return MAX_POPSIZE[Algorithm(algorithm)]


def run_seed(base_seed: int, popsize: int, run: int) -> int:
    return derive_seed(base_seed, "sweep", popsize, run)


@dataclass
class SweepConfig:
    problem: ProblemSpec
    algorithm: Algorithm
    popsizes: List[int]
    runs: int
    base_seed: int
    output_path: Path
    workers: int = 1
    resume: bool = False
    max_generations: Optional[int] = None
    stall_generations: Optional[int] = None
    train: TrainConfig = field(default_factory=TrainConfig)
    db_url: Optional[str] = None
    stop_at_success_rate: Optional[float] = None

    def __post_init__(self):
        self.algorithm = Algorithm(self.algorithm)
        self.output_path = Path(self.output_path)
        if not self.popsizes:
            raise InvalidArgumentError("Lista de popsize vazia")
        if any(b <= a for a, b in zip(self.popsizes, self.popsizes[1:])):
            raise InvalidArgumentError(f"Lista de popsize deve ser estritamente crescente: {self.popsizes}")
        if self.runs < 1:
            raise InvalidArgumentError(f"runs deve ser >= 1, recebido {self.runs}")
        if self.workers < 1:
            raise InvalidArgumentError(f"workers deve ser >= 1, recebido {self.workers}")
        if self.stop_at_success_rate is not None and not 0.0 < self.stop_at_success_rate <= 1.0:
            raise InvalidArgumentError(f"stop_at_success_rate deve estar em (0,1], recebido {self.stop_at_success_rate}")

    def eda_config(self, popsize: int, run: int) -> EdaConfig:
        return EdaConfig.for_algorithm(
            self.algorithm,
            popsize,
            run_seed(self.base_seed, popsize, run),
            max_generations=self.max_generations,
            stall_generations=self.stall_generations,
            train=self.train,
        )


@dataclass
class SweepEntry:
    popsize: int
    run: int
    row: Dict[str, Any]
    record: Optional[RunRecord] = None
    error: Optional[str] = None


def record_to_row(problem: Problem, algorithm: Algorithm, popsize: int, run: int, record: RunRecord) -> Dict[str, Any]:
    return {
        "problem": problem.name,
        "algo": algorithm.value,
        "n": problem.n,
        "k": "" if problem.k is None else problem.k,
        "instance_id": problem.instance_id,
        "popsize": popsize,
        "run": run,
        "seed": record.seed,
        "success": "true" if record.success else "false",
        "best_fitness": repr(float(record.best_fitness)),
        "evaluations": record.evaluations,
        "generations": record.generations,
        "wall_ms": f"{record.wall_time_ms:.3f}",
        "stop_reason": record.stop_reason,
    }


def error_row(problem: Problem, algorithm: Algorithm, popsize: int, run: int, seed: int, error: str) -> Dict[str, Any]:
    return {
        "problem": problem.name,
        "algo": algorithm.value,
        "n": problem.n,
        "k": "" if problem.k is None else problem.k,
        "instance_id": problem.instance_id,
        "popsize": popsize,
        "run": run,
        "seed": seed,
        "success": "false",
        "best_fitness": "",
        "evaluations": 0,
        "generations": 0,
        "wall_ms": "0.000",
        "stop_reason": error,
    }


def _execute(job: Tuple[Problem, EdaConfig]) -> Tuple[Optional[RunRecord], Optional[str], Optional[str]]:
    """Executa uma run isolando falhas (roda também em processos do pool)"""
    problem, eda_cfg = job
    try:
        return run_eda(problem, eda_cfg), None, None
    except Exception as e:
        return None, f"error:{type(e).__name__}", str(e)


class CsvRunWriter:
    """Escritor único e incremental do CSV de runs"""

    def __init__(self, path: Path, append: bool):
        self.path = path
        self.rows_written = 0
        path.parent.mkdir(parents=True, exist_ok=True)
        write_header = not append or not path.exists() or path.stat().st_size == 0
        try:
            self._file = open(path, "a" if append else "w", newline="")
        except OSError as e:
            raise RecordIOError(f"Não foi possível abrir {path}: {e}") from e
        self._writer = csv.DictWriter(self._file, fieldnames=CSV_COLUMNS, lineterminator="\n")
        if write_header:
            self._writer.writeheader()
            self._file.flush()

    def write(self, row: Dict[str, Any]) -> None:
        try:
            self._writer.writerow(row)
            self._file.flush()
        except OSError as e:
            raise RecordIOError(
                f"Falha ao gravar {self.path} (popsize={row.get('popsize')}, run={row.get('run')}): {e}"
            ) from e
        self.rows_written += 1

    def close(self) -> None:
        self._file.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def completed_runs(path: Path) -> Dict[Tuple[int, int], bool]:
    """Runs já presentes num CSV existente: (popsize, run) -> sucesso"""
    if not path.exists() or path.stat().st_size == 0:
        return {}
    with open(path, newline="") as f:
        reader = csv.DictReader(f)
        if reader.fieldnames != CSV_COLUMNS:
            raise SchemaMismatchError(
                f"{path}: cabeçalho diferente do esperado", columns=sorted(set(CSV_COLUMNS) ^ set(reader.fieldnames or []))
            )
        return {(int(row["popsize"]), int(row["run"])): row["success"] == "true" for row in reader}


def run_sweep(cfg: SweepConfig, problem: Optional[Problem] = None) -> List[SweepEntry]:
    """
    Executa a varredura: para cada popsize e run, uma run do EDA com seed
    derivada de (base_seed, popsize, run), gravando uma linha de CSV por run

    Runs que falham viram linhas com success=false e stop_reason 'error:<Tipo>'.
    Com ``stop_at_success_rate``, a varredura para no primeiro popsize cuja
    taxa de sucesso atinge o valor.

    Args:
        cfg: Configuração da varredura
        problem: Problema já construído (opcional; senão vem de cfg.problem)

    Returns:
        Entradas executadas nesta chamada, em ordem (popsize, run)
    """
    problem = problem or build_problem(cfg.problem)
    done = completed_runs(cfg.output_path) if cfg.resume else {}
    logger.info(
        f"🚀 Varredura {cfg.algorithm.value} em {problem.instance_id}: popsizes={cfg.popsizes}, "
        f"{cfg.runs} runs cada ({len(done)} já concluídas), {cfg.workers} worker(s)"
    )

    session_factory = None
    if cfg.db_url:
        try:
            session_factory = init_db(cfg.db_url)
        except Exception as e:
            logger.warning(f"⚠️ Banco de runs indisponível ({e}); seguindo só com CSV")

    entries: List[SweepEntry] = []
    executor = ProcessPoolExecutor(max_workers=cfg.workers) if cfg.workers > 1 else None
    try:
        with CsvRunWriter(cfg.output_path, append=cfg.resume) as writer:
            for popsize in cfg.popsizes:
                successes = sum(done.get((popsize, run), False) for run in range(cfg.runs))
                jobs = [run for run in range(cfg.runs) if (popsize, run) not in done]
                payloads = [(problem, cfg.eda_config(popsize, run)) for run in jobs]
                results: Iterable = executor.map(_execute, payloads) if executor else map(_execute, payloads)

                for run, (_, eda_cfg), (record, error, detail) in zip(jobs, payloads, results):
                    if record is not None:
                        row = record_to_row(problem, cfg.algorithm, popsize, run, record)
                        successes += int(record.success)
                    else:
                        logger.warning(f"⚠️ Run popsize={popsize}, run={run} falhou: {error} {detail}")
                        row = error_row(problem, cfg.algorithm, popsize, run, eda_cfg.seed, error)
                    writer.write(row)
                    if session_factory is not None:
                        log_run(session_factory, row, error_message=detail)
                    entries.append(SweepEntry(popsize, run, row, record, error))

                rate = successes / cfg.runs
                logger.info(f"📊 popsize={popsize}: sucesso em {successes}/{cfg.runs} runs")
                if cfg.stop_at_success_rate is not None and rate >= cfg.stop_at_success_rate:
                    logger.info(f"✅ Taxa {rate:.0%} atingida em popsize={popsize}; varredura encerrada")
                    break
    finally:
        if executor is not None:
            executor.shutdown()

    logger.info(f"💾 {len(entries)} linha(s) gravadas em {cfg.output_path}")
    return entries


# ---------------------------------------------------------------------------
# Resumos
# ---------------------------------------------------------------------------

@dataclass
class PopsizeStats:
    popsize: int
    runs: int
    successes: int
    success_rate: float
    failed_runs: int
    evaluations_mean: Optional[float]
    evaluations_std: Optional[float]
    wall_ms_mean: Optional[float]
    wall_ms_std: Optional[float]
    success_evaluations_mean: Optional[float]


@dataclass
class ThresholdSelection:
    threshold: float
    popsize: Optional[int] = None
    evaluations_mean: Optional[float] = None
    evaluations_std: Optional[float] = None
    wall_ms_mean: Optional[float] = None
    wall_ms_std: Optional[float] = None

    @property
    def found(self) -> bool:
        return self.popsize is not None


@dataclass
class SweepSummary:
    problem: str
    algo: str
    n: int
    k: Optional[str]
    instance_id: str
    popsizes: List[PopsizeStats]
    selections: Dict[float, ThresholdSelection]

    @property
    def reliability_ratio(self) -> Optional[float]:
        """Avaliações no limiar mais alto divididas pelas do mais baixo"""
        if len(self.selections) < 2:
            return None
        keys = sorted(self.selections)
        low, high = self.selections[keys[0]], self.selections[keys[-1]]
        if not (low.found and high.found) or not low.evaluations_mean:
            return None
        return high.evaluations_mean / low.evaluations_mean

    def to_dict(self) -> Dict[str, Any]:
        return {
            "problem": self.problem,
            "algo": self.algo,
            "n": self.n,
            "k": self.k,
            "instance_id": self.instance_id,
            "popsizes": [vars(p) for p in self.popsizes],
            "selections": {
                f"{t:g}": {key: value for key, value in vars(s).items() if key != "threshold"}
                for t, s in self.selections.items()
            },
            "reliability_ratio": self.reliability_ratio,
        }


def _optional(value: Any) -> Optional[float]:
    if value is None or pd.isna(value):
        return None
    return float(value)


def _std(series: pd.Series) -> Optional[float]:
    if series.empty:
        return None
    if len(series) == 1:
        return 0.0
    return float(series.std(ddof=1))


def load_records(path: Union[str, Path]) -> pd.DataFrame:
    """Lê o CSV de runs validando o esquema"""
    path = Path(path)
    try:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False)
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise RecordIOError(f"Não foi possível ler {path}: {e}") from e
    return _validate_frame(frame, str(path))


def _validate_frame(frame: pd.DataFrame, origin: str) -> pd.DataFrame:
    missing = [c for c in CSV_COLUMNS if c not in frame.columns]
    if missing:
        raise SchemaMismatchError(f"{origin}: colunas ausentes: {', '.join(missing)}", columns=missing)
    frame = frame[CSV_COLUMNS].astype(str).copy()
    for column in ("n", "popsize", "run", "evaluations", "generations", "wall_ms"):
        values = pd.to_numeric(frame[column], errors="coerce")
        if values.isna().any():
            row = int(values.isna().to_numpy().argmax())
            raise SchemaMismatchError(
                f"{origin}: coluna '{column}' com valor não numérico na linha {row + 2}", columns=[column]
            )
        frame[column] = values
    invalid = ~frame["success"].str.lower().isin(["true", "false"])
    if invalid.any():
        raise SchemaMismatchError(f"{origin}: coluna 'success' deve conter true/false", columns=["success"])
    frame["success"] = frame["success"].str.lower() == "true"
    frame["failed"] = frame["stop_reason"].str.startswith("error")
    return frame


def summarize_frame(frame: pd.DataFrame, thresholds: Sequence[float] = DEFAULT_THRESHOLDS) -> List[SweepSummary]:
    """
    Agrupa as runs por problema/algoritmo/instância e popsize

    Para cada limiar, seleciona o menor popsize cuja taxa de sucesso atinge o
    limiar. Médias e desvios (amostrais) de avaliações e tempo usam todas as
    runs do popsize, com ou sem sucesso; runs que falharam com erro entram
    apenas na taxa de sucesso.
    """
    for t in thresholds:
        if not 0.0 <= t <= 1.0:
            raise InvalidArgumentError(f"Limiar fora de [0,1]: {t}")
    if "failed" not in frame.columns:
        frame = _validate_frame(frame, "frame")

    summaries = []
    for key, group in frame.groupby(GROUP_COLUMNS, sort=True):
        problem, algo, n, k, instance_id = key
        rows = []
        for popsize, runs in group.groupby("popsize", sort=True):
            valid = runs[~runs["failed"]]
            successful = valid[valid["success"]]
            rows.append(PopsizeStats(
                popsize=int(popsize),
                runs=len(runs),
                successes=int(runs["success"].sum()),
                success_rate=float(runs["success"].mean()),
                failed_runs=int(runs["failed"].sum()),
                evaluations_mean=_optional(valid["evaluations"].mean()) if len(valid) else None,
                evaluations_std=_std(valid["evaluations"]),
                wall_ms_mean=_optional(valid["wall_ms"].mean()) if len(valid) else None,
                wall_ms_std=_std(valid["wall_ms"]),
                success_evaluations_mean=_optional(successful["evaluations"].mean()) if len(successful) else None,
            ))

        selections = {}
        for t in thresholds:
            chosen = next((r for r in rows if r.success_rate >= t), None)
            if chosen is None:
                selections[t] = ThresholdSelection(t)
            else:
                selections[t] = ThresholdSelection(
                    t, chosen.popsize, chosen.evaluations_mean, chosen.evaluations_std,
                    chosen.wall_ms_mean, chosen.wall_ms_std,
                )
        summaries.append(SweepSummary(
            problem=problem, algo=algo, n=int(n), k=k or None, instance_id=instance_id,
            popsizes=rows, selections=selections,
        ))
    return summaries


def summarize(
    paths: Union[str, Path, Sequence[Union[str, Path]]],
    thresholds: Sequence[float] = DEFAULT_THRESHOLDS,
) -> List[SweepSummary]:
    """Resume um ou mais CSVs de varredura"""
    if isinstance(paths, (str, Path)):
        paths = [paths]
    frames = [load_records(p) for p in paths]
    return summarize_frame(pd.concat(frames, ignore_index=True), thresholds)


def _pm(mean: Optional[float], std: Optional[float], digits: int = 0) -> str:
    if mean is None:
        return "-"
    return f"{mean:,.{digits}f} ± {(std or 0.0):,.{digits}f}"


def render_table(summaries: Sequence[SweepSummary]) -> str:
    """
    Tabela em texto: problema x algoritmo x limiares, com popsize,
    avaliações e tempo; células sem popsize aceito viram '-'
    """
    records = []
    for s in summaries:
        row = {"Problem": s.instance_id, "Algorithm": s.algo}
        for t, sel in sorted(s.selections.items()):
            label = f">={t:.0%}"
            row[f"{label} popsize"] = sel.popsize if sel.found else "-"
            row[f"{label} evaluations"] = _pm(sel.evaluations_mean, sel.evaluations_std)
            row[f"{label} time ms"] = _pm(sel.wall_ms_mean, sel.wall_ms_std)
        ratio = s.reliability_ratio
        row["ratio"] = "-" if ratio is None else f"{ratio:.2f}"
        records.append(row)
    if not records:
        return "(sem runs)"
    return pd.DataFrame(records).to_string(index=False)


def render_curve(summary: SweepSummary) -> str:
    """Linhas por popsize: taxa de sucesso, avaliações e tempo"""
    frame = pd.DataFrame([
        {
            "popsize": p.popsize,
            "runs": p.runs,
            "success": f"{p.success_rate:.0%}",
            "evaluations": _pm(p.evaluations_mean, p.evaluations_std),
            "time ms": _pm(p.wall_ms_mean, p.wall_ms_std),
            "failed": p.failed_runs,
        }
        for p in summary.popsizes
    ])
    return f"{summary.instance_id} / {summary.algo}\n" + frame.to_string(index=False)


def summary_document(summaries: Sequence[SweepSummary], thresholds: Sequence[float] = DEFAULT_THRESHOLDS) -> Dict[str, Any]:
    document = {
        "format": SUMMARY_FORMAT,
        "thresholds": [float(t) for t in thresholds],
        "summaries": [s.to_dict() for s in summaries],
    }
    jsonschema.validate(document, SUMMARY_SCHEMA)
    return document


def write_summary_json(
    summaries: Sequence[SweepSummary],
    path: Union[str, Path],
    thresholds: Sequence[float] = DEFAULT_THRESHOLDS,
) -> Path:
    path = Path(path)
    path.write_text(json.dumps(summary_document(summaries, thresholds), indent=2, ensure_ascii=False))
    logger.info(f"💾 Resumo salvo em {path}")
    return path