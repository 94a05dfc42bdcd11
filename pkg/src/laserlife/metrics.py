"""Regression metrics: mean squared error and the asymmetric prognostics score.

The error convention is ``h = prediction - truth`` throughout, so ``h > 0``
means the lifetime was overestimated.  Overestimates are penalized on the
steeper branch (``exp(h/10) - 1``) and underestimates on the gentler one
(``exp(-h/13) - 1``).
"""

from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

OVER_SCALE = 10.0
UNDER_SCALE = 13.0


def _pair(predictions, truths) -> tuple[np.ndarray, np.ndarray]:
    p = np.asarray(predictions, dtype=np.float64).ravel()
    t = np.asarray(truths, dtype=np.float64).ravel()
    if p.size != t.size:
        raise ValueError(f"length mismatch: {p.size} predictions vs {t.size} truths")
    if p.size == 0:
        raise ValueError("empty inputs")
    return p, t


def mse(predictions, truths) -> float:
    p, t = _pair(predictions, truths)
    return float(np.mean((p - t) ** 2))


def score_terms(h) -> np.ndarray:
    h = np.asarray(h, dtype=np.float64)
    # both branches are evaluated; the unused one may overflow to inf harmlessly
    with np.errstate(over="ignore"):
        return np.where(h < 0, np.expm1(-h / UNDER_SCALE), np.expm1(h / OVER_SCALE))


def score(predictions, truths) -> float:
    """Summed (not averaged) penalty over all points."""
    p, t = _pair(predictions, truths)
    return float(np.sum(score_terms(p - t)))


@dataclass
class EvalReport:
    mse: float
    score: float
    n: int
    max_overestimate_years: float
    max_underestimate_years: float
    h: list[float] = field(default_factory=list, repr=False)
    s: list[float] = field(default_factory=list, repr=False)

    @property
    def score_per_point(self) -> float:
        return self.score / self.n

    @property
    def max_abs_error_years(self) -> float:
        return max(self.max_overestimate_years, self.max_underestimate_years)

    def summary(self) -> dict:
        return {
            "mse": self.mse,
            "score": self.score,
            "score_per_point": self.score_per_point,
            "n": self.n,
            "max_overestimate_years": self.max_overestimate_years,
            "max_underestimate_years": self.max_underestimate_years,
            "max_abs_error_years": self.max_abs_error_years,
        }

    def to_dict(self) -> dict:
        d = asdict(self)
        d["score_per_point"] = self.score_per_point
        return d

    def write_json(self, path: str | Path, **extra) -> None:
        doc = self.to_dict()
        doc.update(extra)
        with open(path, "w") as fh:
            json.dump(doc, fh, indent=2)
            fh.write("\n")

    def write_points_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["h_years", "s"])
            for h, s in zip(self.h, self.s):
                w.writerow([repr(h), repr(s)])


def evaluate(predictions, truths) -> EvalReport:
    p, t = _pair(predictions, truths)
    h = p - t
    s = score_terms(h)
    return EvalReport(
        mse=float(np.mean(h * h)),
        score=float(np.sum(s)),
        n=int(h.size),
        # magnitudes; 0 when there is no error on that side
        max_overestimate_years=float(max(0.0, h.max())),
        max_underestimate_years=float(max(0.0, -h.min())),
        h=[float(x) for x in h],
        s=[float(x) for x in s],
    )
