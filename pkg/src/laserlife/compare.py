"""ANN vs RF vs GBM vs conventional aging-test projection on a shared sweep."""

from __future__ import annotations

import csv
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import baselines, neuralnet
from .config import RunConfig
from .datagen import Dataset, build_dataset, sample_conditions
from .lifetest import AgingResult, conventional_predict, run_aging_test
from .metrics import EvalReport, evaluate
from .physics import OperatingCondition

METHODS = ("ANN", "RF", "GBM", "Conventional")


class MethodError(RuntimeError):
    def __init__(self, method: str, exc: Exception):
        super().__init__(f"{method}: {exc}")
        self.method = method


@dataclass
class ComparisonResult:
    sweep: Dataset
    predictions: dict[str, np.ndarray]
    reports: dict[str, EvalReport]
    heldout: dict[str, EvalReport] = field(default_factory=dict)
    aging: AgingResult | None = None
    ann_history: neuralnet.TrainHistory | None = None
    timings: dict[str, float] = field(default_factory=dict)  # fit wall-clock seconds

    def table(self) -> list[dict]:
        return [
            {
                "method": name,
                "mse": r.mse,
                "score": r.score,
                "score_per_point": r.score_per_point,
                "max_abs_error_years": r.max_abs_error_years,
            }
            for name, r in self.reports.items()
        ]

    def format_table(self) -> str:
        lines = [f"{'method':<14}{'mse (y^2)':>14}{'score':>14}{'score/n':>12}{'max|err| (y)':>14}"]
        for row in self.table():
            lines.append(
                f"{row['method']:<14}{row['mse']:>14.5g}{row['score']:>14.5g}"
                f"{row['score_per_point']:>12.4g}{row['max_abs_error_years']:>14.5g}"
            )
        return "\n".join(lines)

    def write_table_csv(self, path: str | Path) -> None:
        rows = self.table()
        with open(path, "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=list(rows[0]), lineterminator="\n")
            w.writeheader()
            for row in rows:
                w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in row.items()})

    def write_predictions_csv(self, method: str, path: str | Path) -> None:
        pred = self.predictions[method]
        rep = self.reports[method]
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["tc_c", "pop_mw", "truth_years", "prediction_years", "h_years", "s"])
            for tc, pop, t, p, h, s in zip(
                self.sweep.column("tc_c"), self.sweep.column("pop_mw"), self.sweep.targets, pred, rep.h, rep.s
            ):
                w.writerow([repr(float(v)) for v in (tc, pop, t, p, h, s)])


def sweep_dataset(cfg: RunConfig) -> Dataset:
    conds = [OperatingCondition(tc, cfg.sweep.pop_mw) for tc in cfg.sweep.temperatures()]
    return build_dataset(conds, cfg.curves, cfg.rel)


def conventional_predictions(cfg: RunConfig, sweep: Dataset, aging: AgingResult) -> np.ndarray:
    return np.array(
        [
            conventional_predict(
                aging.mttf_hours, aging.tj_test_k, tj, cfg.rel.ea_ev, cfg.rel.hours_per_year, cfg.rel.kb_ev_per_k
            )
            for tj in sweep.column("tj_k")
        ]
    )


def score_methods(sweep: Dataset, predictions: dict[str, np.ndarray]) -> dict[str, EvalReport]:
    return {name: evaluate(pred, sweep.targets) for name, pred in predictions.items()}


def run_comparison(cfg: RunConfig, dataset: Dataset | None = None) -> ComparisonResult:
    """Train the three learners on one split and score all four methods on the sweep."""
    if dataset is None:
        d = cfg.dataset
        dataset = build_dataset(sample_conditions(d.n, d.seed, d.tc_range, d.pop_range), cfg.curves, cfg.rel)
    sweep = sweep_dataset(cfg)

    timings: dict[str, float] = {}

    def guarded(method, fn, *args):
        start = time.perf_counter()
        try:
            return fn(*args)
        except (ValueError, RuntimeError) as exc:
            raise MethodError(method, exc) from exc
        finally:
            timings[method] = time.perf_counter() - start

    ann, history = guarded("ANN", neuralnet.train, dataset, cfg.mlp, cfg.train)
    train_ds = dataset.subset(history.train_index)
    heldout_ds = dataset.subset(history.val_index)
    rf = guarded("RF", baselines.fit_random_forest, train_ds, cfg.forest)
    gbm = guarded("GBM", baselines.fit_gbm, train_ds, cfg.gbm)
    aging = guarded("Conventional", run_aging_test, cfg.aging, cfg.curves)

    predictions = {
        "ANN": neuralnet.predict_dataset(ann, sweep),
        "RF": rf.predict(sweep),
        "GBM": gbm.predict(sweep),
        "Conventional": conventional_predictions(cfg, sweep, aging),
    }
    heldout = {
        "ANN": evaluate(neuralnet.predict_dataset(ann, heldout_ds), heldout_ds.targets),
        "RF": evaluate(rf.predict(heldout_ds), heldout_ds.targets),
        "GBM": evaluate(gbm.predict(heldout_ds), heldout_ds.targets),
    }
    return ComparisonResult(
        sweep=sweep,
        predictions=predictions,
        reports=score_methods(sweep, predictions),
        heldout=heldout,
        aging=aging,
        ann_history=history,
        timings=timings,
    )
