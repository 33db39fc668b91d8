"""
Punto de entrada de la CLI hierfuse
"""

import argparse
import logging
import sys

from hierfuse.commands import evaluate, gradcheck, run, sweep, synth
from hierfuse.config import configure_logging
from hierfuse.errors import ConfigError, ExitCode, HierFuseError

logger = logging.getLogger("hierfuse")

EXIT_CODES_HELP = """códigos de salida:
  0  éxito
  1  verificación de gradientes fuera de tolerancia
  2  archivo referenciado inexistente
  3  configuración o argumentos inválidos
  4  archivo de dataset o de modelo inválido
     (DatasetParseError, DatasetSchemaError, ModelFileError)
  5  formas incompatibles o precondición violada
     (DimensionError, ContractError)
  6  error interno

Los códigos 4 y 5 agrupan varias causas a propósito; el mensaje en stderr
nombra el error concreto.
"""


class ArgumentParser(argparse.ArgumentParser):
    """Los errores de argumentos se reportan como errores de configuración"""

    def error(self, message: str):
        raise ConfigError(f"{self.prog}: {message}")


def build_parser() -> ArgumentParser:
    parser = ArgumentParser(
        prog="hierfuse",
        description="Red de fusión multimodal jerárquica: entrenamiento, evaluación y verificación de gradientes",
        epilog=EXIT_CODES_HELP,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument("--log-level", default=None, help="Nivel de logging (por defecto HIERFUSE_LOG_LEVEL o INFO)")
    subparsers = parser.add_subparsers(dest="command", metavar="{run,gradcheck,synth,eval,sweep}")
    subparsers.required = True
    for module in (run, gradcheck, synth, evaluate, sweep):
        module.register(subparsers)
    return parser


def main(argv: list[str] | None = None) -> int:
    """
    Ejecutar la CLI

    Returns:
        Código de salida documentado en EXIT_CODES_HELP
    """
    try:
        args = build_parser().parse_args(argv)
        configure_logging(args.log_level)
        return int(args.handler(args))
    except HierFuseError as e:
        print(f"hierfuse: error: {type(e).__name__}: {e}", file=sys.stderr)
        return int(e.exit_code)
    except FileNotFoundError as e:
        print(f"hierfuse: error: No existe el archivo: {e.filename}", file=sys.stderr)
        return int(ExitCode.MISSING_PATH)
    except Exception as e:
        logger.debug("Error interno", exc_info=True)
        print(f"hierfuse: error interno: {type(e).__name__}: {e}", file=sys.stderr)
        return int(ExitCode.INTERNAL)


if __name__ == "__main__":
    sys.exit(main())
