"""
Subcomando gradcheck
"""

import argparse
from pathlib import Path

from hierfuse.commands.common import load_config, write_json
from hierfuse.schemas.config import GradcheckConfig
from hierfuse.services.gradcheck import check_model_gradients, raise_on_failure


def register(subparsers) -> None:
    parser = subparsers.add_parser(
        "gradcheck",
        help="Comparar backward() con diferencias finitas",
        description="Verificar el gradiente de cada tensor de parámetros; sale con 1 si alguno supera la tolerancia",
    )
    parser.add_argument("--config", required=True, type=Path, help="GradcheckConfig en JSON")
    parser.add_argument("--report", type=Path, default=None, help="Escribir el reporte por tensor en JSON")
    parser.set_defaults(handler=cmd_gradcheck)


def cmd_gradcheck(args: argparse.Namespace) -> int:
    cfg = load_config(args.config, GradcheckConfig)
    report = check_model_gradients(cfg)
    for check in report.tensors:
        status = "ok" if check.passed else "FALLA"
        shape = f"{check.shape[0]}x{check.shape[1]}"
        print(f"{check.name:<16} {shape:>9} {check.max_rel_error:.3e} {status}")
    worst = report.worst
    if worst is not None:
        print(f"máximo error relativo: {worst.max_rel_error:.3e} ({worst.name})")
    if args.report is not None:
        write_json(args.report, report.model_dump())
    raise_on_failure(report)
    return 0
