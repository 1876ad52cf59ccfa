# src/experiments/report.py

"""
report.py

Сводный отчёт по нескольким экспериментам:
  - таблица сравнения методов (строки — методы; медиана числа вычислений,
    средние ошибки, доля попаданий истины в Ω₀, время);
  - трассы оптимизаторов (лучшее/среднее J, размах популяции по координатам);
  - гистограммы цепочек MCMC.
Все результаты должны относиться к одному сценарию (по отпечатку fingerprint).
"""

import logging
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import pandas as pd

from src.core.exceptions import ReportError

logger = logging.getLogger(__name__)

RESULTS_FILE = 'results.csv'


def _resolve(path: Path) -> Path:
    path = Path(path)
    if path.is_dir():
        path = path / RESULTS_FILE
    if not path.exists():
        raise ReportError(f"Файл результатов не найден: {path}")
    return path


def _per_seed(df: pd.DataFrame) -> pd.DataFrame:
    """Строки отдельных запусков (без строк-сводок median/mean)."""
    seeds = pd.to_numeric(df['seed'], errors='coerce')
    return df[seeds.notna()].assign(seed=seeds[seeds.notna()].astype(int))


def _collect(files, method: str) -> List[pd.DataFrame]:
    frames = []
    for f in sorted(files):
        df = pd.read_csv(f)
        df.insert(0, 'seed', int(f.stem.split('seed')[-1]))
        df.insert(0, 'method', method)
        frames.append(df)
    return frames


def comparison_table(results: pd.DataFrame) -> pd.DataFrame:
    """Строки — методы, столбцы — число вычислений, ошибки, время."""
    grouped = results.groupby('method', sort=True)
    table = pd.DataFrame({
        'n_seeds': grouped['seed'].count(),
        'median_evaluations': grouped['n_evaluations'].median(),
        'mean_evaluations': grouped['n_evaluations'].mean(),
        'mean_error_x': grouped['error_x'].mean(),
        'mean_error_y': grouped['error_y'].mean(),
        'mean_rel_error_s0': grouped['rel_error_s0'].mean(),
        'mean_wall_time': grouped['wall_time'].mean(),
    })
    if 'contains_truth' in results:
        contains = results['contains_truth'].map({True: 1.0, False: 0.0, 'True': 1.0, 'False': 0.0})
        table['contains_truth_fraction'] = contains.groupby(results['method']).mean()
    return table.reset_index()


def report(paths: Sequence[Path], output_dir: Optional[Path] = None) -> Dict[str, pd.DataFrame]:
    """
    Собирает results.csv (или каталоги с ними) в сводные таблицы.
    Если задан output_dir, пишет report_table.csv, report_traces.csv и
    report_histograms.csv.

    Raises:
        ReportError: пустой список, отсутствующий файл или результаты разных сценариев.
    """
    if not paths:
        raise ReportError("не заданы файлы результатов")
    files = [_resolve(p) for p in paths]

    runs, traces, hists = [], [], []
    for f in files:
        df = pd.read_csv(f)
        runs.append(_per_seed(df))
        method = str(df['method'].iloc[0])
        traces += _collect(f.parent.glob('trace_seed*.csv'), method)
        hists += _collect(f.parent.glob('hist_seed*.csv'), method)

    results = pd.concat(runs, ignore_index=True)
    fingerprints = sorted(results['fingerprint'].dropna().unique())
    if len(fingerprints) > 1:
        raise ReportError(
            "результаты относятся к разным сценариям: "
            + ", ".join(fp[:12] for fp in fingerprints)
        )

    out = {
        'table': comparison_table(results),
        'traces': pd.concat(traces, ignore_index=True) if traces else pd.DataFrame(),
        'histograms': pd.concat(hists, ignore_index=True) if hists else pd.DataFrame(),
    }
    logger.info(f"[experiment] Отчёт: {len(files)} файлов, методов {len(out['table'])}")

    if output_dir is not None:
        output_dir = Path(output_dir)
        output_dir.mkdir(parents=True, exist_ok=True)
        for key, frame in out.items():
            frame.to_csv(output_dir / f"report_{key}.csv", index=False)
        logger.info(f"[experiment] Отчёт сохранён в {output_dir}")
    return out
