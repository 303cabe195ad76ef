"""
Sweep execution, result CSV I/O and summaries.

The canonical CSV holds one row per run in the order of SweepSpec.runs(),
so identical specs produce byte-identical files whatever the worker count.
Wall-clock timings go to a `<out>.timings.csv` sidecar.
"""

import csv
import logging
import math
import statistics
import time
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import asdict, dataclass, fields
from pathlib import Path

import numpy as np
from scipy import stats
from tqdm import tqdm

from pinns.diagnostics import evaluate_errors, laplacian_estimates
from pinns.exceptions import EmptyInputError, ParameterError, PinnError
from pinns.training import Component, train

from .config import RunSpec, SweepSpec

logger = logging.getLogger(__name__)

TIMINGS_SUFFIX = '.timings.csv'


@dataclass
class ResultRow:
    run_id: str
    benchmark: str
    complexity: int
    horizon: float
    seed: int
    depth: int
    width: int
    learning_rate: float
    arch: str
    formulation: str
    iterations: int
    D: int
    residual_reduction: str
    rel_error_eval: float = None
    rel_error_train: float = None
    rel_error_ic: float = None
    residual_loss: float = None
    ic_loss: float = None
    residual_trace: float = None
    residual_trace_stderr: float = None
    ic_trace: float = None
    ic_trace_stderr: float = None
    probes: int = 0
    iterations_completed: int = 0
    diverged: bool = False
    message: str = ''
    # Sidecar only; never part of the canonical CSV.
    wall_seconds: float = None

    @classmethod
    def for_run(cls, run: RunSpec, horizon: float) -> 'ResultRow':
        return cls(
            run_id=run.run_id,
            benchmark=run.benchmark,
            complexity=run.complexity,
            horizon=horizon,
            seed=run.seed,
            depth=run.depth,
            width=run.width,
            learning_rate=run.learning_rate,
            arch=run.arch,
            formulation=run.formulation,
            iterations=run.iterations,
            D=run.D,
            residual_reduction=run.residual_reduction,
            probes=run.probes,
        )

    def csv_values(self) -> list:
        return [_format_cell(getattr(self, column)) for column in RESULT_COLUMNS]


RESULT_COLUMNS = tuple(f.name for f in fields(ResultRow) if f.name != 'wall_seconds')
TIMING_COLUMNS = ('run_id', 'wall_seconds')


def _format_cell(value) -> str:
    if value is None:
        return ''
    if isinstance(value, bool):
        return 'true' if value else 'false'
    if isinstance(value, float):
        return repr(value)
    return str(value)


def execute_run(run: RunSpec) -> ResultRow:
    """Train, evaluate and measure one run. Never raises; failures become diverged rows."""
    started = time.perf_counter()
    row = None
    try:
        config = run.training_config()
        row = ResultRow.for_run(run, config.system.horizon)
        with np.errstate(over='ignore', invalid='ignore'):
            report = train(config)
        row.iterations_completed = report.iterations_completed
        if report.final is not None:
            row.residual_loss = report.final.residual_loss
            row.ic_loss = report.final.ic_loss
        if report.diverged:
            row.diverged = True
            row.message = report.divergence_message
        else:
            errors = evaluate_errors(config, report.params, rtol=run.rtol, atol=run.atol)
            row.rel_error_eval = errors.rel_error_eval
            row.rel_error_train = errors.rel_error_train
            row.rel_error_ic = errors.rel_error_ic
            if run.probes > 0:
                traces = laplacian_estimates(config.system, config, report.params,
                                             n_probes=run.probes, seed=run.seed)
                residual = traces[Component.RESIDUAL]
                ic = traces[Component.INITIAL_CONDITION]
                row.residual_trace, row.residual_trace_stderr = residual.mean, residual.stderr
                row.ic_trace, row.ic_trace_stderr = ic.mean, ic.stderr
    except PinnError as exc:
        logger.warning('Run %s failed: %s', run.run_id, exc)
        row = row or ResultRow.for_run(run, horizon=None)
        row.diverged = True
        row.message = f'{type(exc).__name__}: {exc}'
    except Exception as exc:
        logger.exception('Run %s raised an unexpected error', run.run_id)
        row = row or ResultRow.for_run(run, horizon=None)
        row.diverged = True
        row.message = f'{type(exc).__name__}: {exc}'
    row.wall_seconds = time.perf_counter() - started
    return row


@dataclass
class SweepResult:
    path: Path
    rows: list

    @property
    def diverged(self) -> int:
        return sum(1 for row in self.rows if row.diverged)

    @property
    def timings_path(self) -> Path:
        return timings_path_for(self.path)


def timings_path_for(path) -> Path:
    path = Path(path)
    return path.with_name(path.stem + TIMINGS_SUFFIX)


def run_sweep(spec: SweepSpec, workers: int = 1, out_path=None, progress: bool = False,
              executor_class=None) -> SweepResult:
    """
    Runs every (complexity, seed, grid point) of `spec` and writes the CSV.

    workers > 1 uses a process pool (threads when `executor_class` says so);
    results are collected by run id and written in the order of spec.runs().
    """
    if workers < 1:
        raise ParameterError(f'workers must be >= 1, got {workers}')
    out_path = Path(out_path or spec.output_path or 'sweep.csv')
    runs = spec.runs()
    logger.info('Sweep %s: %d runs on %d worker(s) -> %s', spec.benchmark, len(runs), workers, out_path)

    bar = tqdm(total=len(runs), desc='sweep', unit='run', disable=not progress)
    results = {}
    if workers == 1:
        for run in runs:
            results[run.run_id] = execute_run(run)
            bar.update(1)
    else:
        executor_class = executor_class or ProcessPoolExecutor
        with executor_class(max_workers=workers) as executor:
            future_to_run = {executor.submit(execute_run, run): run for run in runs}
            for future in as_completed(future_to_run):
                run = future_to_run[future]
                try:
                    results[run.run_id] = future.result()
                except Exception as exc:
                    logger.error('Worker failed on %s: %s', run.run_id, exc)
                    row = ResultRow.for_run(run, horizon=None)
                    row.diverged = True
                    row.message = f'{type(exc).__name__}: {exc}'
                    results[run.run_id] = row
                bar.update(1)
    bar.close()

    rows = [results[run.run_id] for run in runs]
    write_results(out_path, rows)
    write_timings(timings_path_for(out_path), rows)
    result = SweepResult(out_path, rows)
    logger.info('Sweep finished: %d rows, %d diverged', len(rows), result.diverged)
    return result


def write_results(path, rows) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, 'w', newline='', encoding='utf-8') as handle:
        writer = csv.writer(handle, lineterminator='\n')
        writer.writerow(RESULT_COLUMNS)
        for row in rows:
            writer.writerow(row.csv_values())
    return path


def write_timings(path, rows) -> Path:
    path = Path(path)
    with open(path, 'w', newline='', encoding='utf-8') as handle:
        writer = csv.writer(handle, lineterminator='\n')
        writer.writerow(TIMING_COLUMNS)
        for row in rows:
            writer.writerow([row.run_id, _format_cell(row.wall_seconds)])
    return path


def read_results(path) -> list:
    with open(path, newline='', encoding='utf-8') as handle:
        reader = csv.DictReader(handle)
        return list(reader)


def _float_or_none(text):
    return float(text) if text not in (None, '') else None


@dataclass
class SummaryRow:
    benchmark: str
    complexity: int
    horizon: float
    runs: int
    diverged: int
    median_rel_error: float = None
    min_rel_error: float = None
    median_rel_error_ic: float = None
    mean_rel_error_ic: float = None
    # half-width of the 95% t interval around mean_rel_error_ic
    rel_error_ic_ci95: float = None
    best_run_id: str = ''
    median_residual_trace: float = None
    median_ic_trace: float = None

    def to_dict(self) -> dict:
        return asdict(self)


SUMMARY_COLUMNS = tuple(f.name for f in fields(SummaryRow))


def _median(values):
    values = [v for v in values if v is not None]
    return statistics.median(values) if values else None


def _mean_with_ci95(values):
    values = [v for v in values if v is not None]
    if not values:
        return None, None
    mean = statistics.fmean(values)
    if len(values) < 2:
        return mean, None
    half_width = stats.t.ppf(0.975, len(values) - 1) * statistics.stdev(values) / math.sqrt(len(values))
    return mean, float(half_width)


def summarize(csv_path) -> list:
    """
    Groups rows by (benchmark, complexity); diverged rows count toward
    `diverged` and are left out of every aggregate.
    """
    rows = read_results(csv_path)
    if not rows:
        raise EmptyInputError(f'{csv_path} has no result rows')

    groups = {}
    for row in rows:
        key = (row['benchmark'], int(float(row['complexity'])))
        groups.setdefault(key, []).append(row)

    summary = []
    for (benchmark, complexity), group in sorted(groups.items(), key=lambda item: (item[0][0], item[0][1])):
        finished = [r for r in group if r['diverged'] != 'true' and r['rel_error_eval'] not in ('', None)]
        horizons = [_float_or_none(r['horizon']) for r in group if r['horizon']]
        entry = SummaryRow(
            benchmark=benchmark,
            complexity=complexity,
            horizon=horizons[0] if horizons else None,
            runs=len(group),
            diverged=len(group) - len(finished),
        )
        if finished:
            errors = [float(r['rel_error_eval']) for r in finished]
            best = min(finished, key=lambda r: (float(r['rel_error_eval']), r['run_id']))
            entry.median_rel_error = statistics.median(errors)
            entry.min_rel_error = min(errors)
            ic_errors = [_float_or_none(r['rel_error_ic']) for r in finished]
            entry.median_rel_error_ic = _median(ic_errors)
            entry.mean_rel_error_ic, entry.rel_error_ic_ci95 = _mean_with_ci95(ic_errors)
            entry.best_run_id = best['run_id']
            entry.median_residual_trace = _median(_float_or_none(r['residual_trace']) for r in finished)
            entry.median_ic_trace = _median(_float_or_none(r['ic_trace']) for r in finished)
        summary.append(entry)
    return summary


def write_summary(path, summary) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, 'w', newline='', encoding='utf-8') as handle:
        writer = csv.writer(handle, lineterminator='\n')
        writer.writerow(SUMMARY_COLUMNS)
        for entry in summary:
            writer.writerow([_format_cell(getattr(entry, column)) for column in SUMMARY_COLUMNS])
    return path


def format_summary(summary) -> str:
    header = f'{"benchmark":<10}{"complexity":>11}{"runs":>6}{"diverged":>10}{"median":>13}{"min":>13}  best'
    lines = [header, '-' * len(header)]
    for entry in summary:
        median = f'{entry.median_rel_error:.4g}' if entry.median_rel_error is not None else '-'
        minimum = f'{entry.min_rel_error:.4g}' if entry.min_rel_error is not None else '-'
        lines.append(f'{entry.benchmark:<10}{entry.complexity:>11}{entry.runs:>6}{entry.diverged:>10}'
                     f'{median:>13}{minimum:>13}  {entry.best_run_id or "-"}')
    return '\n'.join(lines)
