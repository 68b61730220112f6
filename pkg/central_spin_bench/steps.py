import csv
import itertools
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
from tqdm import tqdm

from . import constants
from .aliases import PathOrStr
from .config import ScenarioConfig
from .det_hash import det_hash
from .exceptions import CentralSpinError, SolverError
from .metrics import METRICS
from .model import build_sectors
from .profiler import Profiler
from .solver import TrajectoryRecord
from .solvers import make_solver
from .spectra import build_spectra
from .util import ordered_map, print_stderr, warn
from .version import VERSION

QUANTITIES = ("re_C", "im_C", "P_plus")


def _quantity(record: TrajectoryRecord, name: str) -> np.ndarray:
    if name == "re_C":
        return record.coherence_re
    if name == "im_C":
        return record.coherence_im
    return record.population


class RunScenarioStep():
    def __init__(
        self,
        config: ScenarioConfig,
        *,
        workers: Optional[int] = None,
        progress: bool = True,
    ):
        self.config = config
        self.workers = workers
        self.progress = progress
        self.profile = config.build_profile()
        self.initial = config.build_initial()
        self.times = config.times()

    @property
    def fingerprint(self) -> str:
        return det_hash((self.profile, self.initial))

    def _solve(self, method: str, shared: Dict[str, Any]) -> Tuple[TrajectoryRecord, Dict[str, float]]:
        solver = make_solver(method, workers=self.workers, exact_cap=self.config.exact_cap)
        kwargs: Dict[str, Any] = {}
        if method == "tcl2":
            kwargs["spectra"] = shared["spectra"]
        if method == "exact":
            kwargs["progress"] = self.progress
        profiler = Profiler()
        profiler.start()
        try:
            record = solver.solve(self.profile, self.initial, self.times, **kwargs)
        except CentralSpinError as e:
            raise type(e)(f"[{method}] {e}") from e
        return record, profiler.stop()

    def run(self) -> Tuple[Dict[str, TrajectoryRecord], Dict[str, Dict[str, float]]]:
        shared: Dict[str, Any] = {}
        if "tcl2" in self.config.methods:
            sectors = build_sectors(self.profile, enumeration_cap=self.config.enumeration_cap)
            shared["spectra"] = build_spectra(self.profile, sectors, workers=self.workers)
        methods = list(self.config.methods)
        if self.workers is not None and self.workers > 1:
            results = ordered_map(lambda m: self._solve(m, shared), methods, workers=self.workers)
        else:
            results = [
                self._solve(method, shared)
                for method in tqdm(methods, desc="Solving", disable=not self.progress)
            ]
        records = {method: result[0] for method, result in zip(methods, results)}
        timings = {method: result[1] for method, result in zip(methods, results)}
        return records, timings


@dataclass
class ComparisonReport:
    window: Tuple[float, float]
    deviations: Dict[str, Dict[str, Dict[str, float]]] = field(default_factory=dict)
    timings: Dict[str, Dict[str, float]] = field(default_factory=dict)

    def deviation(self, pair: str, quantity: str, metric: str = "max_abs") -> float:
        return self.deviations[pair][quantity][metric]

    def max_deviation(self, pair: str) -> float:
        return max(self.deviations[pair][quantity]["max_abs"] for quantity in QUANTITIES)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "window": list(self.window),
            "deviations": self.deviations,
            "timings": self.timings,
        }

    def rows(self) -> Iterable[Tuple[str, str, str, float]]:
        for pair, quantities in self.deviations.items():
            for quantity, metrics in quantities.items():
                for metric_name, value in metrics.items():
                    yield pair, quantity, metric_name, value


def method_pairs(methods: Sequence[str]) -> List[Tuple[str, str]]:
    """Every pair once; ``exact`` is always the reference side when present."""
    ordered = sorted(methods, key=lambda method: method != "exact")
    return list(itertools.combinations(ordered, 2))


class CompareTrajectoriesStep():
    def __init__(self, window: Tuple[float, float]):
        self.window = window

    def run(
        self,
        records: Dict[str, TrajectoryRecord],
        timings: Optional[Dict[str, Dict[str, float]]] = None,
    ) -> ComparisonReport:
        report = ComparisonReport(window=tuple(self.window), timings=dict(timings or {}))
        for reference, other in method_pairs(list(records)):
            first, second = records[reference], records[other]
            if not np.array_equal(first.times, second.times):
                raise SolverError(f"Methods '{reference}' and '{other}' use different time grids")
            start, end = self.window
            inside = (first.times >= start) & (first.times <= end)
            pair: Dict[str, Dict[str, float]] = {}
            for quantity in QUANTITIES:
                metrics = {name: metric() for name, metric in METRICS.items()}
                for metric in metrics.values():
                    metric.update(_quantity(second, quantity)[inside], _quantity(first, quantity)[inside])
                pair[quantity] = {name: metric.compute() for name, metric in metrics.items()}
            report.deviations[f"{reference}-{other}"] = pair
        return report


class TabulateReportStep():
    def run(self, report: ComparisonReport, format: str = "text") -> Iterable[str]:
        if format != "text":
            raise AttributeError("At the moment, only the 'text' format is supported.")
        for pair, quantity, metric_name, value in report.rows():
            yield f"{pair}\t{quantity}\t{metric_name}\t{value:.3e}"
        for method, metrics in report.timings.items():
            yield f"{method}\ttime\t{metrics['time']:.3f} s"


def _format(value: float) -> str:
    return f"{value:.{constants.CSV_SIGNIFICANT_DIGITS}g}"


class EmitCsvStep():
    def __init__(self, output_dir: PathOrStr):
        self.output_dir = Path(output_dir)

    def csv_path(self, method: str) -> Path:
        return self.output_dir / f"{method}.csv"

    def _write(self, path: Path, text: str):
        try:
            path.parent.mkdir(parents=True, exist_ok=True)
            with open(path, "w", newline="") as fout:
                fout.write(text)
        except OSError as e:
            raise CentralSpinError(f"Failed to write '{path}': {e}")

    def write_record(self, record: TrajectoryRecord) -> Path:
        lines = [constants.CSV_HEADER]
        order = np.argsort(record.times, kind="stable")
        for i in order:
            lines.append(
                ",".join(
                    [
                        _format(record.times[i]),
                        _format(record.coherence_re[i]),
                        _format(record.coherence_im[i]),
                        _format(record.population[i]),
                        record.method,
                    ]
                )
            )
        path = self.csv_path(record.method)
        self._write(path, "\n".join(lines) + "\n")
        return path

    def run(
        self,
        records: Sequence[TrajectoryRecord],
        config: Optional[ScenarioConfig] = None,
        fingerprint: Optional[str] = None,
    ) -> List[Path]:
        if not records:
            warn("No trajectories to write; emitting the manifest only")
        paths = [self.write_record(record) for record in records]
        fingerprints = {record.fingerprint for record in records}
        manifest = {
            "version": VERSION,
            "fingerprint": fingerprint if fingerprint is not None else (
                fingerprints.pop() if len(fingerprints) == 1 else sorted(fingerprints)
            ),
            "config": config.describe() if config is not None else None,
            "files": [path.name for path in paths],
            "solvers": {
                record.method: record.metadata.get("solver_version") for record in records
            },
        }
        manifest_path = self.output_dir / constants.MANIFEST_FILE
        self._write(manifest_path, json.dumps(manifest, indent=2, sort_keys=True) + "\n")
        return paths + [manifest_path]


def write_report(report: ComparisonReport, output_dir: PathOrStr) -> Path:
    path = Path(output_dir) / constants.REPORT_FILE
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w") as fout:
            json.dump(report.to_dict(), fout, indent=2, sort_keys=True)
    except OSError as e:
        raise CentralSpinError(f"Failed to write '{path}': {e}")
    return path


def read_csv(path: PathOrStr) -> TrajectoryRecord:
    path = Path(path)
    try:
        with open(path, newline="") as fin:
            reader = csv.reader(fin)
            header = next(reader)
            rows = list(reader)
    except (OSError, StopIteration) as e:
        raise CentralSpinError(f"Failed to read '{path}': {e}")
    if ",".join(header) != constants.CSV_HEADER:
        raise CentralSpinError(f"'{path}' does not start with '{constants.CSV_HEADER}'")
    methods = {row[4] for row in rows}
    if len(methods) > 1:
        raise CentralSpinError(f"'{path}' mixes methods {sorted(methods)}")
    values = np.array([[float(v) for v in row[:4]] for row in rows]).reshape(-1, 4)
    return TrajectoryRecord(
        times=values[:, 0],
        coherence=values[:, 1] + 1j * values[:, 2],
        population=values[:, 3],
        method=methods.pop() if methods else path.stem,
        fingerprint="",
    )


@dataclass
class ScenarioResult:
    config: ScenarioConfig
    records: Dict[str, TrajectoryRecord]
    report: ComparisonReport
    fingerprint: str


def run_scenario(
    config: ScenarioConfig,
    *,
    output_dir: Optional[PathOrStr] = None,
    workers: Optional[int] = None,
    progress: bool = True,
) -> ScenarioResult:
    run_step = RunScenarioStep(config, workers=workers, progress=progress)
    records, timings = run_step.run()
    report = CompareTrajectoriesStep(config.effective_window).run(records, timings)
    if output_dir is not None:
        EmitCsvStep(output_dir).run(list(records.values()), config, run_step.fingerprint)
        write_report(report, output_dir)
        if progress:
            print_stderr(f"Output written to [b]{output_dir}[/]")
    return ScenarioResult(
        config=config, records=records, report=report, fingerprint=run_step.fingerprint
    )


SWEEP_HEADER = "n_bath,alpha_ratio,pair,quantity,metric,value"


def sweep_point_name(n_bath: int, alpha_ratio: float) -> str:
    return f"n{n_bath}_a{alpha_ratio:g}"


class SweepStep():
    def __init__(
        self,
        base: ScenarioConfig,
        n_baths: Sequence[int],
        alpha_ratios: Sequence[float],
        *,
        workers: Optional[int] = None,
        progress: bool = True,
    ):
        self.base = base
        self.grid = list(itertools.product(n_baths, alpha_ratios))
        self.workers = workers
        self.progress = progress

    def run(self, output_dir: Optional[PathOrStr] = None) -> List[Tuple[int, float, ScenarioResult]]:
        def one(point: Tuple[int, float]) -> Tuple[int, float, ScenarioResult]:
            n_bath, alpha_ratio = point
            config = self.base.merged({"n_bath": n_bath, "alpha0_over_omega0": alpha_ratio})
            point_dir = (
                Path(output_dir) / sweep_point_name(n_bath, alpha_ratio) if output_dir else None
            )
            return n_bath, alpha_ratio, run_scenario(
                config, output_dir=point_dir, workers=None, progress=False
            )

        if self.workers is not None and self.workers > 1:
            results = ordered_map(one, self.grid, workers=self.workers)
        else:
            results = [one(point) for point in tqdm(self.grid, desc="Sweep", disable=not self.progress)]
        if output_dir is not None:
            self.write_summary(results, output_dir)
        return results

    def write_summary(self, results, output_dir: PathOrStr) -> Path:
        lines = [SWEEP_HEADER]
        for n_bath, alpha_ratio, result in results:
            for pair, quantity, metric_name, value in result.report.rows():
                lines.append(f"{n_bath},{alpha_ratio:g},{pair},{quantity},{metric_name},{_format(value)}")
        path = Path(output_dir) / constants.SWEEP_SUMMARY_FILE
        try:
            path.parent.mkdir(parents=True, exist_ok=True)
            path.write_text("\n".join(lines) + "\n")
        except OSError as e:
            raise CentralSpinError(f"Failed to write '{path}': {e}")
        return path
