"""
Configuración de entorno de hierfuse: hilos de trabajo y logging
"""

import logging
import os

logger = logging.getLogger(__name__)

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


def get_worker_count() -> int:
    """
    Número máximo de hilos de trabajo

    Lee HIERFUSE_THREADS; si no está definida o no es un entero positivo se usa
    el paralelismo de la máquina.
    """
    default = os.cpu_count() or 1
    raw = os.getenv("HIERFUSE_THREADS")
    if raw is None or raw == "":
        return default
    try:
        value = int(raw)
    except ValueError:
        logger.warning("HIERFUSE_THREADS=%r no es un entero; se usan %d hilos", raw, default)
        return default
    if value < 1:
        logger.warning("HIERFUSE_THREADS=%d debe ser >= 1; se usan %d hilos", value, default)
        return default
    return value


def configure_logging(level: str | None = None) -> None:
    """
    Instalar un único handler a stderr para el logger raíz

    Args:
        level: Nombre del nivel; por defecto HIERFUSE_LOG_LEVEL o INFO
    """
    name = (level or os.getenv("HIERFUSE_LOG_LEVEL") or "INFO").upper()
    numeric = logging.getLevelName(name)
    if not isinstance(numeric, int):
        numeric = logging.INFO
    root = logging.getLogger()
    for handler in list(root.handlers):
        root.removeHandler(handler)
    handler = logging.StreamHandler()
    handler.setFormatter(logging.Formatter(LOG_FORMAT))
    root.addHandler(handler)
    root.setLevel(numeric)
