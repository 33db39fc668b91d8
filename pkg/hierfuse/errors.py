"""
Jerarquía de errores de hierfuse y códigos de salida de la CLI
"""

from enum import IntEnum


class ExitCode(IntEnum):
    """Códigos de salida documentados en `hierfuse --help`"""
    OK = 0
    GRADCHECK_FAILED = 1
    MISSING_PATH = 2
    CONFIG = 3
    DATA_FILE = 4
    CONTRACT = 5
    INTERNAL = 6


class HierFuseError(ValueError):
    """Error base de la librería; cada subclase conoce su código de salida"""
    exit_code: ExitCode = ExitCode.INTERNAL


class ConfigError(HierFuseError):
    """Configuración o especificación JSON inválida"""
    exit_code = ExitCode.CONFIG


class DimensionError(HierFuseError):
    """Formas de matrices incompatibles"""
    exit_code = ExitCode.CONTRACT


class ContractError(HierFuseError):
    """Precondición de una operación violada"""
    exit_code = ExitCode.CONTRACT


class DatasetParseError(HierFuseError):
    """Línea mal formada en un archivo de dataset"""
    exit_code = ExitCode.DATA_FILE

    def __init__(self, path, line_number: int, detail: str):
        self.path = path
        self.line_number = line_number
        super().__init__(f"{path}: línea {line_number}: {detail}")


class DatasetSchemaError(HierFuseError):
    """Dataset que no respeta el esquema (anchos, etiquetas, modalidades)"""
    exit_code = ExitCode.DATA_FILE

    def __init__(self, video_id: str | None, detail: str):
        self.video_id = video_id
        prefix = f"video '{video_id}': " if video_id is not None else ""
        super().__init__(f"{prefix}{detail}")


class ModelFileError(HierFuseError):
    """Documento de modelo inválido o inconsistente con su configuración"""
    exit_code = ExitCode.DATA_FILE


class MissingPathError(HierFuseError):
    """Archivo referenciado que no existe"""
    exit_code = ExitCode.MISSING_PATH

    def __init__(self, path):
        self.path = path
        super().__init__(f"No existe el archivo: {path}")


class GradientCheckError(HierFuseError):
    """Error relativo de gradiente por encima de la tolerancia"""
    exit_code = ExitCode.GRADCHECK_FAILED

    def __init__(self, tensor_name: str, max_rel_error: float, tolerance: float):
        self.tensor_name = tensor_name
        self.max_rel_error = max_rel_error
        super().__init__(
            f"Gradiente de '{tensor_name}' fuera de tolerancia: "
            f"error relativo {max_rel_error:.3e} >= {tolerance:.1e}"
        )
