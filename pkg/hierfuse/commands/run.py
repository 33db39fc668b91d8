"""
Subcomando run: datos -> modelo -> entrenamiento -> evaluación -> artefactos
"""

import argparse
import logging
from dataclasses import dataclass
from pathlib import Path

from hierfuse.commands.common import align_model_config, format_counts, load_config, prepare_data, write_json
from hierfuse.models.dataset import Dataset
from hierfuse.models.fusion import ModelParams, build_model, param_count
from hierfuse.schemas.config import ModelConfig, RunConfig, TrainConfig
from hierfuse.schemas.reports import RunMetrics
from hierfuse.services.model_store import model_store
from hierfuse.services.trainer import TrainResult, trainer

logger = logging.getLogger(__name__)


@dataclass
class RunOutcome:
    """Modelo entrenado, su historial y sus métricas de prueba"""
    model: ModelParams
    result: TrainResult
    metrics: RunMetrics


def register(subparsers) -> None:
    parser = subparsers.add_parser(
        "run",
        help="Entrenar y evaluar un modelo desde un archivo de configuración",
        description="Entrenar y evaluar un modelo; escribe model.json, history.jsonl y metrics.json",
    )
    parser.add_argument("--config", required=True, type=Path, help="RunConfig en JSON")
    parser.set_defaults(handler=cmd_run)


def load_run_config(path: Path) -> RunConfig:
    """RunConfig con las rutas relativas resueltas contra su directorio"""
    cfg = load_config(path, RunConfig)
    base_dir = Path(path).resolve().parent
    output_dir = cfg.output_dir if cfg.output_dir.is_absolute() else base_dir / cfg.output_dir
    return cfg.model_copy(update={"data": cfg.data.resolve(base_dir), "output_dir": output_dir})


def train_and_evaluate(
    model_cfg: ModelConfig, train_cfg: TrainConfig, train: Dataset, test: Dataset
) -> RunOutcome:
    """
    Construir, entrenar y evaluar una variante sobre datos ya preparados

    Raises:
        ConfigError: Si la configuración no es compatible con los datos
    """
    model_cfg = align_model_config(model_cfg, train, test)
    model = build_model(model_cfg)
    logger.info(
        "Modelo %s/%s con %d parámetros",
        model_cfg.variant.value, model_cfg.modality_key, param_count(model_cfg),
    )
    result = trainer.train(model, train, train_cfg)
    metrics = trainer.evaluate(result.model, test)
    run_metrics = RunMetrics(
        **metrics.model_dump(),
        variant=model_cfg.variant.value,
        modalities=model_cfg.modality_key,
        param_count=param_count(model_cfg),
        best_epoch=result.best_epoch,
        stopped_epoch=result.stopped_epoch,
        plain_baseline=model_cfg.is_plain_baseline,
    )
    return RunOutcome(model=result.model, result=result, metrics=run_metrics)


def write_artifacts(outcome: RunOutcome, output_dir: Path) -> None:
    """model.json, history.jsonl y metrics.json en output_dir"""
    output_dir = Path(output_dir)
    output_dir.mkdir(parents=True, exist_ok=True)
    model_store.save_model(outcome.model, output_dir / "model.json")
    with (output_dir / "history.jsonl").open("w", encoding="utf-8") as handle:
        for entry in outcome.result.history:
            handle.write(entry.model_dump_json() + "\n")
    write_json(output_dir / "metrics.json", outcome.metrics.model_dump())
    logger.info("Métricas escritas en %s", output_dir / "metrics.json")


def print_metrics(metrics: RunMetrics) -> None:
    print(
        f"{metrics.variant:<9} {metrics.modalities:<4} accuracy={metrics.accuracy:.4f} "
        f"f1_weighted={metrics.f1_weighted:.4f} params={metrics.param_count}"
    )
    print("f1 por clase: " + " ".join(f"{c}:{f:.4f}" for c, f in enumerate(metrics.f1_per_class)))
    if metrics.plain_baseline:
        print("nota: modelo unimodal sin contexto (softmax sobre características crudas)")


def cmd_run(args: argparse.Namespace) -> int:
    """
    Ejecutar un experimento completo

    Returns:
        Código de salida 0; los errores se propagan como HierFuseError
    """
    cfg = load_run_config(args.config)
    train, test = prepare_data(cfg.data)
    print(format_counts("train", train))
    print(format_counts("test", test))
    outcome = train_and_evaluate(cfg.model, cfg.train, train, test)
    write_artifacts(outcome, cfg.output_dir)
    print_metrics(outcome.metrics)
    return 0
