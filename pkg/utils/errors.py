"""
Exceções do toolkit DAE-EDA
"""


class EdaError(Exception):
    """Erro base de todo o pacote"""


class InvalidArgumentError(EdaError, ValueError):
    """Argumento fora do domínio aceito (tamanhos zero, k >= n, alpha fora de (0,1)...)"""


class LengthMismatchError(EdaError, ValueError):
    """Bitstring com comprimento diferente do tamanho do problema"""


class ShapeMismatchError(EdaError, ValueError):
    """Vetor ou matriz com formato incompatível com o modelo"""


class DomainError(EdaError, ValueError):
    """Valor real fora de [0,1] onde uma probabilidade é esperada"""


class UnevaluatedIndividualError(EdaError):
    """Leitura de fitness de um indivíduo ainda não avaliado"""


class InsufficientDataError(EdaError, ValueError):
    """Conjunto de treino pequeno demais para a divisão treino/validação"""


class TooLargeError(EdaError, ValueError):
    """Instância grande demais para busca exaustiva"""


class DivergenceError(EdaError):
    """Perda não finita durante o treino do DAE"""


class NonFiniteFitnessError(EdaError):
    """Função de fitness devolveu NaN ou infinito"""


class InstanceFormatError(EdaError, ValueError):
    """Arquivo de instância NK malformado"""


class SchemaMismatchError(EdaError, ValueError):
    """CSV de resultados sem as colunas esperadas"""

    def __init__(self, message: str, columns=None):
        super().__init__(message)
        self.columns = list(columns or [])


class RecordIOError(EdaError, OSError):
    """Falha de leitura/escrita de registros, com arquivo e linha no contexto"""
