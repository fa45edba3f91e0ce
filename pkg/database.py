from datetime import datetime
import logging
from typing import Any, Dict, Optional

import pandas as pd
from sqlalchemy import DateTime, Float, Integer, String, Text, create_engine, func, select
from sqlalchemy.orm import DeclarativeBase, Mapped, mapped_column, sessionmaker

logger = logging.getLogger(__name__)


class Base(DeclarativeBase):
    pass


class RunLog(Base):
    __tablename__ = "run_log"

    id: Mapped[int] = mapped_column(Integer, primary_key=True)
    problem: Mapped[str] = mapped_column(String(50))
    algo: Mapped[str] = mapped_column(String(20))
    n: Mapped[int] = mapped_column(Integer)
    k: Mapped[Optional[str]] = mapped_column(String(10), nullable=True)
    instance_id: Mapped[str] = mapped_column(String(255))
    popsize: Mapped[int] = mapped_column(Integer)
    run: Mapped[int] = mapped_column(Integer)
    seed: Mapped[str] = mapped_column(String(32))  # 64 bits sem sinal não cabe em INTEGER do SQLite

    # Resultado
    success: Mapped[str] = mapped_column(String(5))
    best_fitness: Mapped[Optional[float]] = mapped_column(Float, nullable=True)
    evaluations: Mapped[int] = mapped_column(Integer, default=0)
    generations: Mapped[int] = mapped_column(Integer, default=0)
    wall_ms: Mapped[float] = mapped_column(Float, default=0.0)
    stop_reason: Mapped[str] = mapped_column(String(100))

    # Meta
    created_at: Mapped[datetime] = mapped_column(DateTime, default=datetime.utcnow)
    status: Mapped[str] = mapped_column(String(20), default="success")  # success, error
    error_message: Mapped[Optional[str]] = mapped_column(Text, nullable=True)

    def to_row(self) -> Dict[str, Any]:
        """Linha no mesmo esquema do CSV de varredura"""
        return {
            "problem": self.problem,
            "algo": self.algo,
            "n": self.n,
            "k": self.k or "",
            "instance_id": self.instance_id,
            "popsize": self.popsize,
            "run": self.run,
            "seed": self.seed,
            "success": self.success,
            "best_fitness": "" if self.best_fitness is None else self.best_fitness,
            "evaluations": self.evaluations,
            "generations": self.generations,
            "wall_ms": self.wall_ms,
            "stop_reason": self.stop_reason,
        }

    def to_dict(self) -> Dict[str, Any]:
        data = self.to_row()
        data.update({
            "id": self.id,
            "created_at": self.created_at.isoformat(),
            "status": self.status,
            "error_message": self.error_message,
        })
        return data


def init_db(url: str) -> sessionmaker:
    """Cria as tabelas (se preciso) e devolve a fábrica de sessões"""
    engine = create_engine(url)
    Base.metadata.create_all(engine)
    logger.info(f"ℹ️ Banco de runs pronto em {url}")
    return sessionmaker(bind=engine, expire_on_commit=False)


def log_run(session_factory: sessionmaker, row: Dict[str, Any], error_message: Optional[str] = None) -> Optional[int]:
    """
    Grava uma linha de run no banco

    Falhas são registradas no log e nunca interrompem a varredura.

    Returns:
        ID da linha gravada ou None se falhar
    """
    with session_factory() as session:
        try:
            entry = RunLog(
                problem=row["problem"],
                algo=row["algo"],
                n=int(row["n"]),
                k=str(row["k"]) if row["k"] != "" else None,
                instance_id=row["instance_id"],
                popsize=int(row["popsize"]),
                run=int(row["run"]),
                seed=str(row["seed"]),
                success=row["success"],
                best_fitness=None if row["best_fitness"] == "" else float(row["best_fitness"]),
                evaluations=int(row["evaluations"]),
                generations=int(row["generations"]),
                wall_ms=float(row["wall_ms"]),
                stop_reason=row["stop_reason"],
                status="error" if error_message else "success",
                error_message=error_message,
            )
            session.add(entry)
            session.commit()
            return entry.id
        except Exception as e:
            session.rollback()
            logger.error(f"❌ Erro ao salvar run no banco: {e}")
            return None


def fetch_runs(
    session_factory: sessionmaker,
    page: int = 1,
    per_page: int = 50,
    problem: Optional[str] = None,
    algo: Optional[str] = None,
) -> Dict[str, Any]:
    """Página de runs, mais recentes primeiro"""
    page = max(1, page)
    per_page = min(max(1, per_page), 500)
    query = select(RunLog)
    count_query = select(func.count()).select_from(RunLog)
    if problem:
        query = query.where(RunLog.problem == problem)
        count_query = count_query.where(RunLog.problem == problem)
    if algo:
        query = query.where(RunLog.algo == algo)
        count_query = count_query.where(RunLog.algo == algo)
    with session_factory() as session:
        total = session.scalar(count_query)
        rows = session.scalars(
            query.order_by(RunLog.id.desc()).offset((page - 1) * per_page).limit(per_page)
        ).all()
        return {
            "page": page,
            "per_page": per_page,
            "total": total,
            "runs": [r.to_dict() for r in rows],
        }


def runs_frame(session_factory: sessionmaker) -> pd.DataFrame:
    """Todas as runs como DataFrame no esquema do CSV"""
    with session_factory() as session:
        rows = session.scalars(select(RunLog).order_by(RunLog.id)).all()
        return pd.DataFrame([r.to_row() for r in rows])
