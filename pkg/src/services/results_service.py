import csv
import json
import math
import logging
from pathlib import Path
import numpy as np
from src.config import Config, FRAMEWORKS
from src.services.metrics_service import CSV_COLUMNS

logger = logging.getLogger(__name__)

# Figura -> columna (o columnas sumadas) del CSV de resultados
FIGURES = {
    "adjacent_mpjpe": ("adj_mpjpe",),
    "mpjpe": ("mpjpe",),
    "p2point": ("p2point",),
    "psnr_y": ("psnr_y",),
    "latency": ("t_s", "t_w", "t_r"),
}
METRIC_COLUMNS = ("mpjpe", "adj_mpjpe", "weighted_err", "p2point", "psnr_y", "t_s", "t_w", "t_r")
HIGHER_IS_BETTER = {"psnr_y"}


def format_value(value):
    """Texto estable para el CSV: enteros tal cual, reales con 9 cifras significativas."""
    if isinstance(value, str):
        return value
    if isinstance(value, (int, np.integer)) and not isinstance(value, bool):
        return str(int(value))
    value = float(value)
    if math.isnan(value):
        return "nan"
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    return f"{value:.9g}"


def write_results_csv(rows, path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for row in rows:
            writer.writerow([format_value(row[c]) for c in CSV_COLUMNS])
    logger.info(f"Resultados escritos: {len(rows)} filas en {path}")
    return path


def read_results_csv(path):
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"No se encontró el CSV de resultados: {path}")
    rows = []
    with open(path, "r", encoding="utf-8", newline="") as f:
        for raw in csv.DictReader(f):
            row = {"frame": int(raw["frame"]), "framework": raw["framework"],
                   "snr_db": float(raw["snr_db"]), "seed": int(raw["seed"])}
            row.update({c: float(raw[c]) for c in METRIC_COLUMNS})
            rows.append(row)
    return rows


def _metric(row, columns):
    return sum(row[c] for c in columns)


def _ordered(values, order):
    return sorted(values, key=lambda v: (order.index(v) if v in order else len(order), v))


def aggregate(rows, columns):
    """(framework, snr) -> (media, desviación) ignorando frames fallidos (NaN)."""
    cells = {}
    for row in rows:
        cells.setdefault((row["framework"], row["snr_db"]), []).append(_metric(row, columns))
    stats = {}
    for key, values in cells.items():
        values = np.asarray(values, dtype=float)
        valid = values[~np.isnan(values)]
        stats[key] = (float(valid.mean()), float(valid.std())) if len(valid) else (math.nan, math.nan)
    return stats


def emit_plot_data(rows, figure, out_path=None):
    """Tabla larga (snr_db, framework, mean, std) para una figura."""
    if figure not in FIGURES:
        raise ValueError(f"Figura desconocida: {figure}. Válidas: {', '.join(FIGURES)}")
    if not rows:
        raise ValueError("No hay resultados para graficar")
    stats = aggregate(rows, FIGURES[figure])
    frameworks = _ordered({fw for fw, _ in stats}, list(FRAMEWORKS))
    snrs = sorted({snr for _, snr in stats})
    table = [{"snr_db": snr, "framework": fw, "mean": stats[(fw, snr)][0], "std": stats[(fw, snr)][1]}
             for fw in frameworks for snr in snrs if (fw, snr) in stats]

    if out_path:
        out_path = Path(out_path)
        out_path.parent.mkdir(parents=True, exist_ok=True)
        with open(out_path, "w", encoding="utf-8", newline="") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(("snr_db", "framework", "mean", "std"))
            for entry in table:
                writer.writerow([format_value(entry[k]) for k in ("snr_db", "framework", "mean", "std")])
        logger.info(f"Datos de la figura '{figure}' escritos en {out_path}")
    return table


def headline_comparison(rows):
    """
    Mejora relativa de cada framework semántico frente a la nube de puntos por SNR.
    Métricas de error: (base - x) / base; PSNR_y: (x - base) / base.
    """
    comparison = {}
    for metric, columns in (("latency", FIGURES["latency"]), ("mpjpe", ("mpjpe",)),
                            ("p2point", ("p2point",)), ("psnr_y", ("psnr_y",))):
        stats = aggregate(rows, columns)
        for (fw, snr), (mean, _) in stats.items():
            base = stats.get(("pointcloud", snr), (math.nan, math.nan))[0]
            if fw == "pointcloud" or not base or math.isnan(base):
                continue
            gain = (mean - base) / base if metric in HIGHER_IS_BETTER else (base - mean) / base
            comparison.setdefault(fw, {}).setdefault(metric, {})[format_value(snr)] = gain
    return comparison


def build_summary(rows, config):
    """Configuración resuelta, media/desviación por celda, frames fallidos y comparación con el baseline."""
    cells = {}
    for column in METRIC_COLUMNS:
        for (fw, snr), (mean, std) in aggregate(rows, (column,)).items():
            cells.setdefault(fw, {}).setdefault(format_value(snr), {})[column] = {"mean": mean, "std": std}
    for (fw, snr), (mean, std) in aggregate(rows, FIGURES["latency"]).items():
        cells[fw][format_value(snr)]["latency_total"] = {"mean": mean, "std": std}

    failed = {}
    for row in rows:
        if math.isnan(row["mpjpe"]):
            key = f"{row['framework']}@{format_value(row['snr_db'])}"
            failed[key] = failed.get(key, 0) + 1

    return {
        "version": Config.APP_VERSION,
        "config": config.to_dict() if hasattr(config, "to_dict") else dict(config),
        "cells": cells,
        "failed_frames": failed,
        "relative_to_pointcloud": headline_comparison(rows),
    }


def _json_safe(value):
    if isinstance(value, dict):
        return {k: _json_safe(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_json_safe(v) for v in value]
    if isinstance(value, float) and not math.isfinite(value):
        return format_value(value)
    return value


class ResultsService:
    """Persistencia de resultados: CSV por frame, resumen JSON y tablas para figuras."""

    def write(self, rows, config, out_dir):
        out_dir = Path(out_dir)
        csv_path = write_results_csv(rows, out_dir / "results.csv")
        summary = build_summary(rows, config)
        summary_path = out_dir / "summary.json"
        with open(summary_path, "w", encoding="utf-8", newline="\n") as f:
            json.dump(_json_safe(summary), f, indent=2, sort_keys=True)
        logger.info(f"Resumen escrito en {summary_path}")
        return csv_path, summary_path, summary

    def plot(self, results_path, figure, out_path=None):
        return emit_plot_data(read_results_csv(results_path), figure, out_path)


# Instancia global
results_service = ResultsService()
