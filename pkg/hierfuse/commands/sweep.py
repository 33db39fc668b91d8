"""
Subcomando sweep: todas las variantes × subconjuntos de modalidades sobre los
mismos datos y semillas, con la reducción de error frente a early fusion
"""

import argparse
import logging
from pathlib import Path

from hierfuse.commands.common import format_counts, prepare_data, write_json
from hierfuse.commands.run import load_run_config, train_and_evaluate
from hierfuse.errors import ConfigError
from hierfuse.models.enums import Variant
from hierfuse.schemas.config import ModelConfig
from hierfuse.schemas.reports import RunMetrics, SweepRow

logger = logging.getLogger(__name__)

DEFAULT_VARIANTS = "early,hfusion,chfusion"
DEFAULT_MODALITIES = "T,A,V,TV,TA,AV,TAV"


def register(subparsers) -> None:
    parser = subparsers.add_parser(
        "sweep",
        help="Comparar variantes y combinaciones de modalidades",
        description="Entrena cada variante × subconjunto con la misma configuración y escribe summary.json",
    )
    parser.add_argument("--config", required=True, type=Path, help="RunConfig en JSON")
    parser.add_argument("--variants", default=DEFAULT_VARIANTS, help=f"Lista separada por comas (por defecto {DEFAULT_VARIANTS})")
    parser.add_argument("--modalities", default=DEFAULT_MODALITIES, help=f"Subconjuntos separados por comas (por defecto {DEFAULT_MODALITIES})")
    parser.set_defaults(handler=cmd_sweep)


def parse_variants(text: str) -> list[Variant]:
    """
    Raises:
        ConfigError: Variante desconocida o lista vacía
    """
    items = [v.strip() for v in text.split(",") if v.strip()]
    if not items:
        raise ConfigError("--variants está vacío")
    try:
        return [Variant(v) for v in items]
    except ValueError as e:
        raise ConfigError(f"Variante desconocida en --variants: {text}") from e


def parse_modality_sets(text: str) -> list[str]:
    items = [s.strip().upper() for s in text.split(",") if s.strip()]
    if not items:
        raise ConfigError("--modalities está vacío")
    return items


def error_rate_reduction(metrics: RunMetrics, early: RunMetrics | None) -> float | None:
    """(err_early - err) / err_early; None sin fila early o si early no comete errores"""
    if early is None or early.error_rate == 0:
        return None
    return (early.error_rate - metrics.error_rate) / early.error_rate


def summarize(results: dict[tuple[str, str], RunMetrics]) -> list[SweepRow]:
    """Filas en el orden de ejecución, cada una comparada con early del mismo subconjunto"""
    rows = []
    for (variant, modalities), metrics in results.items():
        early = results.get((Variant.EARLY.value, modalities))
        rows.append(
            SweepRow(
                variant=variant,
                modalities=modalities,
                accuracy=metrics.accuracy,
                f1_weighted=metrics.f1_weighted,
                error_rate_reduction=error_rate_reduction(metrics, early) if variant != Variant.EARLY.value else None,
                plain_baseline=metrics.plain_baseline,
            )
        )
    return rows


def cmd_sweep(args: argparse.Namespace) -> int:
    cfg = load_run_config(args.config)
    variants = parse_variants(args.variants)
    modality_sets = parse_modality_sets(args.modalities)
    train, test = prepare_data(cfg.data)
    print(format_counts("train", train))
    print(format_counts("test", test))

    results: dict[tuple[str, str], RunMetrics] = {}
    for modalities in modality_sets:
        for variant in variants:
            try:
                model_cfg = ModelConfig.model_validate(
                    {**cfg.model.model_dump(), "variant": variant, "modalities": modalities}
                )
            except ValueError as e:
                raise ConfigError(f"Subconjunto de modalidades inválido: {modalities}") from e
            logger.info("Sweep: %s/%s", variant.value, model_cfg.modality_key)
            outcome = train_and_evaluate(model_cfg, cfg.train, train, test)
            key = (variant.value, model_cfg.modality_key)
            results[key] = outcome.metrics
            write_json(cfg.output_dir / "sweep" / f"{key[0]}_{key[1]}.json", outcome.metrics.model_dump())

    rows = summarize(results)
    write_json(cfg.output_dir / "summary.json", [row.model_dump() for row in rows])

    print(f"{'modalidades':<12} {'variante':<9} {'accuracy':>9} {'f1_w':>7} {'red. error':>10}")
    for row in rows:
        reduction = f"{100 * row.error_rate_reduction:9.1f}%" if row.error_rate_reduction is not None else f"{'-':>10}"
        flag = "  (base)" if row.plain_baseline else ""
        print(f"{row.modalities:<12} {row.variant:<9} {row.accuracy:9.4f} {row.f1_weighted:7.4f} {reduction}{flag}")
    return 0
