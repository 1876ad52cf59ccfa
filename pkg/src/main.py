# src/main.py

"""
main.py

Точка входа приложения: настройка логирования и командная строка.

Команды:
  generate  — синтетический город → файл сценария;
  simulate  — пуассоновские наблюдения для сценария → CSV;
  optimize  — оптимизаторы и гибридные методы по описанию эксперимента;
  sample    — MCMC-семплеры (DRAM, DREAM);
  diagnose  — диагностики сходимости по CSV цепочек;
  report    — сводный отчёт по нескольким results.csv.

Коды возврата: 0 — успех, 2 — ошибка конфигурации/входных данных, 3 — ошибка выполнения.
"""

import argparse
import logging
import os
import sys
from logging.handlers import TimedRotatingFileHandler
from pathlib import Path
from typing import Any, Dict, List, Optional

import numpy as np
import yaml
from pydantic import ValidationError

from src.config.settings import settings
from src.core.exceptions import ConfigurationError, InvalidInputError, ReportError
from src.core.models import SourceParams
from src.experiments.report import report
from src.experiments.runner import SAMPLER_METHODS, ExperimentConfig, run_experiment
from src.modules.mcmc.chains import read_chains_csv
from src.modules.mcmc.diagnostics import diagnose
from src.scenario.city import generate_city
from src.scenario.scenario_file import load_scenario, save_scenario, write_observations_csv
from src.transport.response import simulate_observations

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUNTIME = 3

CONFIG_ERRORS = (ConfigurationError, ValidationError, InvalidInputError, ReportError)


def setup_logging():
    """
    Настройка логирования:
      - Консоль (stdout) — уровень settings.LOG_LEVEL и выше.
      - Файл <LOG_DIR>/app.log — ротация каждую ночь, хранить LOG_BACKUP_COUNT файлов.
    """
    logs_dir = settings.LOG_DIR
    os.makedirs(logs_dir, exist_ok=True)
    level = getattr(logging, settings.LOG_LEVEL.upper())

    logger = logging.getLogger()
    logger.setLevel(level)
    if any(isinstance(h, TimedRotatingFileHandler) for h in logger.handlers):
        return

    formatter = logging.Formatter(
        fmt="%(asctime)s [%(levelname)s] %(name)s: %(message)s",
        datefmt="%Y-%m-%d %H:%M:%S"
    )

    console_handler = logging.StreamHandler(sys.stdout)
    console_handler.setLevel(level)
    console_handler.setFormatter(formatter)
    logger.addHandler(console_handler)

    file_handler = TimedRotatingFileHandler(
        filename=os.path.join(logs_dir, "app.log"),
        when="midnight",
        interval=1,
        backupCount=settings.LOG_BACKUP_COUNT,
        encoding="utf-8"
    )
    file_handler.setLevel(level)
    file_handler.setFormatter(formatter)
    logger.addHandler(file_handler)

    logger.info(f"Logging настроен: console и файл {logs_dir}/app.log "
                f"(ротация {settings.LOG_BACKUP_COUNT} дней).")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog='sourceloc', description="Локализация точечного гамма-источника")
    sub = parser.add_subparsers(dest='command', required=True)

    gen = sub.add_parser('generate', help="синтетический город")
    gen.add_argument('--width', type=float, default=250.0)
    gen.add_argument('--height', type=float, default=180.0)
    gen.add_argument('--buildings', type=int, default=30)
    gen.add_argument('--detectors', type=int, default=10)
    gen.add_argument('--seed', type=int, required=True)
    gen.add_argument('--name', default='synthetic_city')
    gen.add_argument('--out', type=Path, required=True)

    sim = sub.add_parser('simulate', help="синтетические наблюдения")
    sim.add_argument('--scenario', type=Path, required=True)
    sim.add_argument('--n-rep', type=int, default=10)
    sim.add_argument('--seed', type=int, default=0)
    sim.add_argument('--source', type=float, nargs=3, metavar=('X', 'Y', 'S0'),
                     help="источник; по умолчанию true_source сценария")
    sim.add_argument('--out', type=Path, required=True)

    for verb, text in (('optimize', "оптимизация"), ('sample', "MCMC-семплирование")):
        p = sub.add_parser(verb, help=text)
        p.add_argument('--scenario', type=Path, required=True)
        p.add_argument('--experiment', type=Path, help="YAML-описание эксперимента")
        p.add_argument('--method')
        p.add_argument('--seeds', type=int, nargs='+')
        p.add_argument('--n-seeds', type=int)
        p.add_argument('--observations')
        p.add_argument('--n-rep', type=int)
        p.add_argument('--name')
        p.add_argument('--output-dir')
        p.add_argument('--max-evaluations', type=int)
        p.add_argument('--target-objective', type=float)

    diag = sub.add_parser('diagnose', help="диагностики сходимости цепочек")
    diag.add_argument('--chains', type=Path, required=True)
    diag.add_argument('--burn-in', type=int, default=0)
    diag.add_argument('--out', type=Path)

    rep = sub.add_parser('report', help="сводный отчёт")
    rep.add_argument('results', type=Path, nargs='*')
    rep.add_argument('--out', type=Path)
    return parser


def experiment_from_args(args: argparse.Namespace) -> ExperimentConfig:
    """Описание эксперимента: YAML, поверх — флаги командной строки."""
    data: Dict[str, Any] = {}
    if args.experiment is not None:
        if not args.experiment.exists():
            raise ConfigurationError(f"Файл эксперимента не найден: {args.experiment}")
        data = yaml.safe_load(args.experiment.read_text(encoding='utf-8')) or {}
    for flag in ('method', 'seeds', 'n_seeds', 'observations', 'n_rep', 'name', 'output_dir'):
        value = getattr(args, flag, None)
        if value is not None:
            data[flag] = value
    stopping = dict(data.get('stopping') or {})
    if getattr(args, 'max_evaluations', None) is not None:
        stopping['max_evaluations'] = args.max_evaluations
    if getattr(args, 'target_objective', None) is not None:
        stopping['target_objective'] = args.target_objective
    if stopping:
        data['stopping'] = stopping
    if 'method' not in data:
        raise ConfigurationError("метод не задан: укажите --method или method в файле эксперимента")
    return ExperimentConfig(**data)


def cmd_generate(args: argparse.Namespace) -> None:
    scn = generate_city((args.width, args.height), args.buildings, args.seed,
                        n_detectors=args.detectors, name=args.name)
    save_scenario(scn, args.out, provenance=f"generate_city(seed={args.seed})")


def cmd_simulate(args: argparse.Namespace) -> None:
    scn = load_scenario(args.scenario)
    if args.source is not None:
        theta = SourceParams(x=args.source[0], y=args.source[1], s0=args.source[2])
    elif scn.true_source is not None:
        theta = scn.true_source
    else:
        raise ConfigurationError("источник не задан: нет --source и true_source в сценарии")
    rng = np.random.Generator(np.random.Philox(args.seed))
    write_observations_csv(simulate_observations(scn, theta, args.n_rep, rng), args.out)


def cmd_run(args: argparse.Namespace) -> None:
    experiment = experiment_from_args(args)
    sampling = experiment.method in SAMPLER_METHODS
    if sampling != (args.command == 'sample'):
        expected = 'sample' if sampling else 'optimize'
        raise ConfigurationError(f"метод {experiment.method} запускается командой '{expected}'")
    if sampling and (args.max_evaluations is not None or args.target_objective is not None):
        raise ConfigurationError("--max-evaluations и --target-objective применимы только к оптимизаторам")
    table, _ = run_experiment(load_scenario(args.scenario), experiment)
    print(table.to_string(index=False))


def cmd_diagnose(args: argparse.Namespace) -> None:
    chains = read_chains_csv(args.chains, burn_in=args.burn_in)
    result = diagnose(chains)
    text = result.model_dump_json(indent=2)
    if args.out is not None:
        args.out.parent.mkdir(parents=True, exist_ok=True)
        args.out.write_text(text + '\n', encoding='utf-8')
    print(text)


def cmd_report(args: argparse.Namespace) -> None:
    out = report(args.results, args.out)
    print(out['table'].to_string(index=False))


COMMANDS = {
    'generate': cmd_generate,
    'simulate': cmd_simulate,
    'optimize': cmd_run,
    'sample': cmd_run,
    'diagnose': cmd_diagnose,
    'report': cmd_report,
}


def main(argv: Optional[List[str]] = None) -> int:
    setup_logging()
    logger = logging.getLogger("main")
    args = build_parser().parse_args(argv)
    logger.info(f"Запуск команды '{args.command}'")
    try:
        COMMANDS[args.command](args)
    except CONFIG_ERRORS as e:
        logger.error(f"Ошибка конфигурации: {e}")
        return EXIT_CONFIG
    except Exception as e:
        logger.error(f"Ошибка выполнения команды '{args.command}': {e}", exc_info=True)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
