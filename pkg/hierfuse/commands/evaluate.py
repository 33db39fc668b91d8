"""
Subcomando eval: métricas de un modelo guardado sobre un dataset
"""

import argparse
from pathlib import Path

from hierfuse.commands.common import format_counts, write_json
from hierfuse.errors import ContractError, DimensionError
from hierfuse.services.dataset_io import dataset_repository
from hierfuse.services.model_store import model_store
from hierfuse.services.trainer import trainer


def register(subparsers) -> None:
    parser = subparsers.add_parser(
        "eval",
        help="Evaluar un modelo guardado",
        description="Cargar model.json y un dataset JSONL y reportar las métricas por utterance",
    )
    parser.add_argument("--model", required=True, type=Path, help="Documento de modelo (model.json)")
    parser.add_argument("--data", required=True, type=Path, help="Dataset JSONL")
    parser.add_argument("--out", type=Path, default=None, help="Escribir las métricas en JSON")
    parser.set_defaults(handler=cmd_eval)


def cmd_eval(args: argparse.Namespace) -> int:
    """
    Raises:
        DimensionError: Anchos del dataset distintos de los del modelo
        ContractError: Etiquetas del dataset fuera de las clases del modelo
    """
    model = model_store.load_model(args.model)
    dataset = dataset_repository.load_dataset(args.data)
    cfg = model.config
    for m in cfg.modalities:
        if dataset.dims.get(m) != cfg.input_dim(m):
            raise DimensionError(
                f"Modalidad {m.value}: el dataset tiene ancho {dataset.dims.get(m)} y el modelo {cfg.input_dim(m)}"
            )
    if dataset.C > cfg.C:
        raise ContractError(f"El dataset tiene {dataset.C} clases y el modelo {cfg.C}")

    metrics = trainer.evaluate(model, dataset)
    print(format_counts("data", dataset))
    print(f"{cfg.variant.value:<9} {cfg.modality_key:<4} accuracy={metrics.accuracy:.4f} f1_weighted={metrics.f1_weighted:.4f}")
    if args.out is not None:
        write_json(args.out, metrics.model_dump())
    return 0
