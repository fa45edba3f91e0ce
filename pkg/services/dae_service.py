"""
Serviço do Denoising Autoencoder (DAE) usado como modelo probabilístico do EDA
"""
import json
import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import List, Optional, Tuple, Union

import numpy as np
from scipy.special import expit

from utils.errors import (
    DivergenceError,
    DomainError,
    InsufficientDataError,
    InvalidArgumentError,
    ShapeMismatchError,
)
from utils.rng import RngState

logger = logging.getLogger(__name__)

# Configurações do DAE
MIN_TRAINING_DATA = 10
LOG_EPS = 1e-12
FLAT_ERROR_EPS = 1e-12
MODEL_FORMAT = "dae-model/1"


class StopReason(str, Enum):
    CONVERGED_GAMMA = "converged-gamma"
    OVERFIT = "overfit"
    MAX_EPOCHS = "max-epochs"


@dataclass
class TrainConfig:
    """
    Parâmetros de treino do DAE

    Os padrões são os da configuração de referência: alpha=0.2, b=100,
    10% de corrupção sal+pimenta, gamma < 0.05, overfitting >= 10% e divisão
    90/10 entre treino e validação.

    ``min_updates`` é o número de passos de gradiente antes de os critérios
    gamma e de overfitting poderem parar o treino; com populações pequenas há
    um único lote por época.
    """

    learning_rate: float = 0.2
    batch_size: int = 100
    corruption_rate: float = 0.1
    max_epochs: int = 3000
    gamma_threshold: float = 0.05
    overfit_threshold: float = 0.1
    validation_fraction: float = 0.1
    monitor_subset_size: int = 100
    monitor_interval: int = 2
    min_gamma_epoch: int = 10
    min_updates: int = 2000

    def __post_init__(self):
        if not 0.0 < self.learning_rate < 1.0:
            raise InvalidArgumentError(f"learning_rate deve estar em (0,1), recebido {self.learning_rate}")
        if not 0.0 <= self.corruption_rate <= 1.0:
            raise InvalidArgumentError(f"corruption_rate deve estar em [0,1], recebido {self.corruption_rate}")
        if not 0.0 < self.validation_fraction < 1.0:
            raise InvalidArgumentError(
                f"validation_fraction deve estar em (0,1), recebido {self.validation_fraction}"
            )
        for name in ("batch_size", "max_epochs", "monitor_subset_size", "monitor_interval"):
            if getattr(self, name) < 1:
                raise InvalidArgumentError(f"{name} deve ser positivo")
        if self.min_updates < 0:
            raise InvalidArgumentError(f"min_updates deve ser >= 0, recebido {self.min_updates}")


@dataclass
class TrainReport:
    epochs_run: int
    stop_reason: StopReason
    # (época, erro no subconjunto monitorado u, erro na validação U')
    error_history: List[Tuple[int, float, float]] = field(default_factory=list)
    updates: int = 0


@dataclass
class DaeGradients:
    W: np.ndarray
    b_h: np.ndarray
    b_z: np.ndarray


@dataclass
class DaeModel:
    """
    DAE de uma camada escondida com pesos amarrados (W' = W^T)

    W tem formato (n x m); b_h tem m entradas e b_z tem n.
    """

    W: np.ndarray
    b_h: np.ndarray
    b_z: np.ndarray

    def __post_init__(self):
        self.W = np.asarray(self.W, dtype=float)
        self.b_h = np.asarray(self.b_h, dtype=float)
        self.b_z = np.asarray(self.b_z, dtype=float)
        if self.W.ndim != 2 or self.b_h.shape != (self.W.shape[1],) or self.b_z.shape != (self.W.shape[0],):
            raise ShapeMismatchError(
                f"Parâmetros inconsistentes: W{self.W.shape}, b_h{self.b_h.shape}, b_z{self.b_z.shape}"
            )

    @property
    def n(self) -> int:
        return self.W.shape[0]

    @property
    def m(self) -> int:
        return self.W.shape[1]

    def copy(self) -> "DaeModel":
        return DaeModel(self.W.copy(), self.b_h.copy(), self.b_z.copy())

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.W)) and np.all(np.isfinite(self.b_h)) and np.all(np.isfinite(self.b_z)))


def _round_half_up(value: float) -> int:
    return int(math.floor(value + 0.5))


def init_dae(n: int, m: int, rng: RngState) -> DaeModel:
    """
    Inicializa theta = {W, b_h, b_z}

    W ~ U[-1/sqrt(n), 1/sqrt(n)], vieses zerados.
    """
    if n < 1 or m < 1:
        raise InvalidArgumentError(f"Tamanhos do DAE devem ser positivos, recebido n={n}, m={m}")
    scale = 1.0 / math.sqrt(n)
    return DaeModel(rng.uniform(-scale, scale, size=(n, m)), np.zeros(m), np.zeros(n))


def corrupt(x: np.ndarray, rate: float, rng: RngState) -> np.ndarray:
    """
    Ruído sal+pimenta

    Em cada linha, round(rate*n) posições distintas escolhidas ao acaso são
    sobrescritas com 0 ou 1 (moeda justa); o restante fica intacto.

    Args:
        x: Vetor (n,) ou matriz (linhas x n) em [0,1]
        rate: Fração de posições corrompidas
        rng: Gerador

    Returns:
        Cópia corrompida de x
    """
    if not 0.0 <= rate <= 1.0:
        raise DomainError(f"Taxa de corrupção deve estar em [0,1], recebido {rate}")
    x = np.asarray(x, dtype=float)
    rows = np.atleast_2d(x).copy()
    count = _round_half_up(rate * rows.shape[1])
    if count > 0:
        positions = np.argsort(rng.random(rows.shape), axis=1)[:, :count]
        values = rng.integers(0, 2, size=(rows.shape[0], count))
        rows[np.arange(rows.shape[0])[:, None], positions] = values
    return rows if x.ndim == 2 else rows[0]


def forward(model: DaeModel, x_hat: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """h = sigm(x_hat W + b_h), z = sigm(h W^T + b_z)"""
    x_hat = np.asarray(x_hat, dtype=float)
    if x_hat.shape[-1] != model.n:
        raise ShapeMismatchError(f"Entrada com {x_hat.shape[-1]} posições, modelo espera {model.n}")
    h = expit(x_hat @ model.W + model.b_h)
    z = expit(h @ model.W.T + model.b_z)
    return h, z


def cross_entropy(x: np.ndarray, z: np.ndarray) -> np.ndarray:
    """Erro de reconstrução por exemplo: -sum[x log z + (1-x) log(1-z)]"""
    z = np.clip(z, LOG_EPS, 1.0 - LOG_EPS)
    return -np.sum(x * np.log(z) + (1.0 - x) * np.log(1.0 - z), axis=-1)


def reconstruction_error(model: DaeModel, data: np.ndarray) -> float:
    """Erro médio de reconstrução das entradas limpas"""
    data = np.atleast_2d(np.asarray(data, dtype=float))
    _, z = forward(model, data)
    return float(np.mean(cross_entropy(data, z)))


def loss_and_gradients(model: DaeModel, x: np.ndarray, x_hat: np.ndarray) -> Tuple[float, DaeGradients]:
    """
    Perda média do lote e gradiente analítico para pesos amarrados

    A perda compara a reconstrução de x_hat com o x limpo. Como W é
    compartilhado, o gradiente soma as contribuições do codificador e do
    decodificador: dW = x_hat^T d_h + d_z^T h.
    """
    x = np.atleast_2d(np.asarray(x, dtype=float))
    x_hat = np.atleast_2d(np.asarray(x_hat, dtype=float))
    if x.shape != x_hat.shape:
        raise ShapeMismatchError(f"x{x.shape} e x_hat{x_hat.shape} com formatos diferentes")
    h, z = forward(model, x_hat)
    loss = float(np.mean(cross_entropy(x, z)))

    batch = x.shape[0]
    delta_z = (z - x) / batch
    delta_h = (delta_z @ model.W) * h * (1.0 - h)
    grads = DaeGradients(
        W=x_hat.T @ delta_h + delta_z.T @ h,
        b_h=delta_h.sum(axis=0),
        b_z=delta_z.sum(axis=0),
    )
    return loss, grads


def apply_gradients(model: DaeModel, grads: DaeGradients, learning_rate: float) -> DaeModel:
    model.W -= learning_rate * grads.W
    model.b_h -= learning_rate * grads.b_h
    model.b_z -= learning_rate * grads.b_z
    return model


def train_step(model: DaeModel, batch: np.ndarray, cfg: TrainConfig, rng: RngState) -> Tuple[DaeModel, float]:
    """
    Um passo de gradiente descendente em mini-lote

    O modelo é atualizado no lugar (pertence ao treinador) e devolvido junto
    com a perda média do lote.
    """
    batch = np.atleast_2d(np.asarray(batch, dtype=float))
    if batch.shape[0] == 0:
        raise InvalidArgumentError("Lote vazio")
    if batch.shape[1] != model.n:
        raise ShapeMismatchError(f"Lote com {batch.shape[1]} posições, modelo espera {model.n}")
    x_hat = corrupt(batch, cfg.corruption_rate, rng)
    loss, grads = loss_and_gradients(model, batch, x_hat)
    if not math.isfinite(loss):
        raise DivergenceError(f"Perda não finita durante o treino: {loss}")
    apply_gradients(model, grads, cfg.learning_rate)
    return model, loss


def training_converged(history: List[Tuple[int, float, float]], cfg: TrainConfig) -> bool:
    """
    Critério gamma sobre o histórico de erros do subconjunto monitorado

    gamma = (e_{0.67t} - e_t) / (e_0 - e_t), usando o checkpoint registrado
    mais próximo abaixo de 0.67t. Erro plano ou crescente conta como
    convergido.
    """
    epoch, e_t, _ = history[-1]
    if epoch < cfg.min_gamma_epoch:
        return False
    e_0 = history[0][1]
    if e_0 <= e_t + FLAT_ERROR_EPS:
        return True
    cutoff = 0.67 * epoch
    e_ref = e_0
    for past_epoch, e_u, _ in history:
        if past_epoch <= cutoff:
            e_ref = e_u
        else:
            break
    gamma = (e_ref - e_t) / (e_0 - e_t)
    return gamma < cfg.gamma_threshold


def is_overfitting(e_train: float, e_validation: float, cfg: TrainConfig) -> bool:
    return abs(e_train - e_validation) / max(e_train, LOG_EPS) >= cfg.overfit_threshold


def train(
    model: DaeModel,
    data: np.ndarray,
    cfg: TrainConfig,
    rng: RngState,
) -> Tuple[DaeModel, TrainReport]:
    """
    Treina o DAE nos genomas selecionados

    Embaralha os dados, separa 90% para treino (U) e 10% para validação (U'),
    e roda épocas de mini-lotes sobre U. A cada ``monitor_interval`` épocas
    mede o erro no subconjunto fixo u de U e em U', parando por
    convergência (gamma), overfitting ou limite de épocas. Os dois primeiros
    critérios só valem depois de ``min_updates`` passos de gradiente.

    Args:
        model: Modelo recém-inicializado (atualizado no lugar)
        data: Matriz (linhas x n) de genomas
        cfg: Configuração de treino
        rng: Gerador do sub-stream de treino

    Returns:
        (modelo treinado, relatório)
    """
    data = np.atleast_2d(np.asarray(data, dtype=float))
    if data.shape[0] < MIN_TRAINING_DATA:
        raise InsufficientDataError(
            f"Treino exige pelo menos {MIN_TRAINING_DATA} exemplos, recebido {data.shape[0]}"
        )
    if data.shape[1] != model.n:
        raise ShapeMismatchError(f"Dados com {data.shape[1]} posições, modelo espera {model.n}")

    data = data[rng.permutation(data.shape[0])]
    n_validation = min(max(1, _round_half_up(cfg.validation_fraction * data.shape[0])), data.shape[0] - 1)
    validation, training = data[:n_validation], data[n_validation:]
    monitor = training[: min(cfg.monitor_subset_size, training.shape[0])]
    batch_size = min(cfg.batch_size, training.shape[0])

    history = [(0, reconstruction_error(model, monitor), reconstruction_error(model, validation))]
    stop_reason = StopReason.MAX_EPOCHS
    epochs_run = cfg.max_epochs
    updates = 0

    for epoch in range(1, cfg.max_epochs + 1):
        order = rng.permutation(training.shape[0])
        for start in range(0, training.shape[0], batch_size):
            train_step(model, training[order[start:start + batch_size]], cfg, rng)
            updates += 1

        if epoch % cfg.monitor_interval:
            continue
        e_u = reconstruction_error(model, monitor)
        e_val = reconstruction_error(model, validation)
        history.append((epoch, e_u, e_val))
        if updates < cfg.min_updates:
            continue

        if is_overfitting(e_u, e_val, cfg):
            stop_reason, epochs_run = StopReason.OVERFIT, epoch
            break
        if training_converged(history, cfg):
            stop_reason, epochs_run = StopReason.CONVERGED_GAMMA, epoch
            break

    logger.debug(f"DAE treinado: {epochs_run} épocas ({updates} passos), parada por {stop_reason.value}")
    return model, TrainReport(epochs_run, stop_reason, history, updates)


def sample(
    model: DaeModel,
    steps: int,
    corruption_rate: float,
    rng: RngState,
    count: Optional[int] = None,
) -> np.ndarray:
    """
    Amostragem iterativa: x ~ U[0,1]^n; repetir ``steps`` vezes x := f(c(q(x)))

    Args:
        model: DAE treinado (somente leitura)
        steps: Número de passos de corrupção/reconstrução
        corruption_rate: Fração corrompida em cada passo
        rng: Gerador do sub-stream de amostragem
        count: Número de amostras; None devolve um único vetor

    Returns:
        Vetor (n,) ou matriz (count x n) em [0,1]
    """
    if steps < 1:
        raise InvalidArgumentError(f"steps deve ser >= 1, recebido {steps}")
    rows = 1 if count is None else count
    x = rng.random((rows, model.n))
    for _ in range(steps):
        _, x = forward(model, corrupt(x, corruption_rate, rng))
    return x[0] if count is None else x


def save_model(model: DaeModel, path: Union[str, Path]) -> Path:
    """Grava (n, m, W linha a linha, b_h, b_z) em JSON versionado"""
    path = Path(path)
    payload = {
        "format": MODEL_FORMAT,
        "n": model.n,
        "m": model.m,
        "W": model.W.ravel().tolist(),
        "b_h": model.b_h.tolist(),
        "b_z": model.b_z.tolist(),
    }
    path.write_text(json.dumps(payload))
    logger.info(f"💾 Modelo DAE salvo em {path}")
    return path


def load_model(path: Union[str, Path]) -> DaeModel:
    payload = json.loads(Path(path).read_text())
    if payload.get("format") != MODEL_FORMAT:
        raise ShapeMismatchError(f"Formato de modelo não suportado: {payload.get('format')}")
    n, m = int(payload["n"]), int(payload["m"])
    return DaeModel(np.array(payload["W"], dtype=float).reshape(n, m), payload["b_h"], payload["b_z"])
