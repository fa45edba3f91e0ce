"""
Geradores pseudoaleatórios reprodutíveis

Todo sorteio do pacote passa por um ``numpy.random.Generator`` com bit
generator PCG64. Sub-streams são derivados com ``SeedSequence`` a partir da
tupla (seed, chaves...), onde as chaves identificam geração e propósito do
sorteio. A SeedSequence faz o hash da tupla inteira, então tuplas diferentes
nunca compartilham estado.
"""

from typing import Union

import numpy as np

from utils.errors import InvalidArgumentError

RngState = np.random.Generator

# Tags de propósito usadas na derivação de sub-streams
PURPOSES = {
    "init": 1,
    "select": 2,
    "model_init": 3,
    "train": 4,
    "sample": 5,
    "binarize": 6,
    "pbil": 7,
    "nk_instance": 8,
    "trap_permutation": 9,
    "sweep": 10,
}

SeedKey = Union[int, str]


def _key(value: SeedKey) -> int:
    if isinstance(value, str):
        try:
            return PURPOSES[value]
        except KeyError:
            raise InvalidArgumentError(f"Tag de propósito desconhecida: {value}") from None
    if value < 0:
        raise InvalidArgumentError(f"Chaves de seed devem ser não negativas: {value}")
    return int(value)


def seed_sequence(seed: int, *keys: SeedKey) -> np.random.SeedSequence:
    return np.random.SeedSequence([_key(seed)] + [_key(k) for k in keys])


def make_rng(seed: int, *keys: SeedKey) -> RngState:
    """
    Cria um gerador PCG64 para o sub-stream (seed, *keys)

    Args:
        seed: Seed base de 64 bits
        keys: Índices (run, geração...) ou tags de propósito de ``PURPOSES``

    Returns:
        Gerador independente e determinístico
    """
    return np.random.Generator(np.random.PCG64(seed_sequence(seed, *keys)))


def derive_seed(seed: int, *keys: SeedKey) -> int:
    """Deriva uma nova seed de 64 bits a partir de (seed, *keys)"""
    return int(seed_sequence(seed, *keys).generate_state(1, dtype=np.uint64)[0])
