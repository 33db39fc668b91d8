"""
Subcomando synth: escribir en disco un dataset sintético
"""

import argparse
import logging
from pathlib import Path

from hierfuse.commands.common import format_counts, load_config
from hierfuse.schemas.config import SynthSpec
from hierfuse.services.dataset_io import dataset_repository

logger = logging.getLogger(__name__)


def register(subparsers) -> None:
    parser = subparsers.add_parser(
        "synth",
        help="Generar un dataset sintético multimodal",
        description="Escribe train.jsonl y test.jsonl con sus manifiestos en el directorio de salida",
    )
    parser.add_argument("--spec", type=Path, default=None, help="SynthSpec en JSON (por defecto, valores por defecto)")
    parser.add_argument("--out", required=True, type=Path, help="Directorio de salida")
    parser.set_defaults(handler=cmd_synth)


def cmd_synth(args: argparse.Namespace) -> int:
    spec = load_config(args.spec, SynthSpec) if args.spec is not None else SynthSpec()
    train, test = dataset_repository.synth_generate(spec)
    for name, dataset in (("train", train), ("test", test)):
        path = Path(args.out) / f"{name}.jsonl"
        dataset_repository.save_dataset(dataset, path)
        logger.info("Dataset %s escrito en %s", name, path)
        print(format_counts(name, dataset))
    return 0
