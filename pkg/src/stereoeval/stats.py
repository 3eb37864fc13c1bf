"""
Per-case accuracy statistics and rankings.

A matcher's per-frame accuracies ``N(t)`` over ``T`` frames reduce to a
mean (the ranking quantity) and a population variance (steadiness). Ties in
the mean fall back to lower variance, then to the name, so every ranking is
a total order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .predict import FrameEval

__all__ = [
    "AccuracySeries",
    "CaseEntry",
    "CaseReport",
    "StatsError",
    "mean_accuracy",
    "accuracy_variance",
    "rank_case",
    "overall_best",
]


class StatsError(ValueError):
    pass


@dataclass(frozen=True)
class AccuracySeries:
    matcher_name: str
    case_id: str
    values: tuple[float, ...]
    evals: tuple[FrameEval, ...] = field(default=(), compare=False)

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))
        if not self.values:
            raise StatsError(f"series for {self.matcher_name!r} is empty")
        for v in self.values:
            if not (0.0 <= v <= 100.0):
                raise StatsError(f"accuracy {v} outside [0, 100]")
        if self.evals and len(self.evals) != len(self.values):
            raise StatsError("evals and values differ in length")

    @classmethod
    def from_evals(cls, matcher_name: str, case_id: str, evals: Sequence[FrameEval]) -> "AccuracySeries":
        return cls(matcher_name, case_id, tuple(e.n_t for e in evals), tuple(evals))

    @property
    def T(self) -> int:
        return len(self.values)


def _values(series) -> Sequence[float]:
    vals = series.values if isinstance(series, AccuracySeries) else list(series)
    if len(vals) == 0:
        raise StatsError("cannot summarize an empty series")
    return vals


def _mean(vals: Sequence[float]) -> float:
    m = math.fsum(vals) / len(vals)
    # one correction pass recovers the ulp lost in the division
    return m + math.fsum(v - m for v in vals) / len(vals)


def mean_accuracy(series) -> float:
    """Arithmetic mean of the per-frame accuracies."""
    return _mean(_values(series))


def accuracy_variance(series) -> float:
    """Population variance (divisor ``T``), computed in two passes."""
    vals = _values(series)
    m = _mean(vals)
    return math.fsum((v - m) ** 2 for v in vals) / len(vals)


@dataclass(frozen=True)
class CaseEntry:
    series: AccuracySeries
    mean: float
    variance: float

    @property
    def name(self) -> str:
        return self.series.matcher_name


def _rank_key(name: str, mean: float, variance: float):
    return (-mean, variance, name)


@dataclass(frozen=True)
class CaseReport:
    case_id: str
    entries: dict[str, CaseEntry]
    ranking: tuple[str, ...]
    failed_frames: tuple[int, ...] = ()

    @property
    def T(self) -> int:
        return next(iter(self.entries.values())).series.T

    def rank_of(self, name: str) -> int:
        return self.ranking.index(name) + 1


def rank_case(series: Iterable[AccuracySeries], failed_frames: Sequence[int] = ()) -> CaseReport:
    """Summarize one case and rank matchers by mean accuracy, best first."""
    series = list(series)
    if not series:
        raise StatsError("no series to rank")
    cases = {s.case_id for s in series}
    if len(cases) != 1:
        raise StatsError(f"series from several cases: {sorted(cases)}")
    lengths = {s.T for s in series}
    if len(lengths) != 1:
        raise StatsError(f"series lengths differ: {sorted(lengths)}")
    entries = {}
    for s in series:
        if s.matcher_name in entries:
            raise StatsError(f"duplicate matcher {s.matcher_name!r}")
        entries[s.matcher_name] = CaseEntry(s, mean_accuracy(s), accuracy_variance(s))
    ranking = tuple(sorted(entries, key=lambda n: _rank_key(n, entries[n].mean, entries[n].variance)))
    return CaseReport(cases.pop(), entries, ranking, tuple(failed_frames))


def overall_best(case_reports: Sequence[CaseReport]) -> tuple[str, dict[str, float]]:
    """Best matcher across cases by the unweighted mean of per-case means.

    Ties on the overall mean fall back to the mean of the per-case variances,
    then to the name. Every matcher must appear in every case.
    """
    if not case_reports:
        raise StatsError("no case reports")
    names = set(case_reports[0].entries)
    for rep in case_reports[1:]:
        if set(rep.entries) != names:
            missing = names.symmetric_difference(rep.entries)
            raise StatsError(f"matchers missing from case {rep.case_id!r}: {sorted(missing)}")
    overall = {n: math.fsum(r.entries[n].mean for r in case_reports) / len(case_reports) for n in names}
    spread = {n: math.fsum(r.entries[n].variance for r in case_reports) / len(case_reports) for n in names}
    winner = min(names, key=lambda n: _rank_key(n, overall[n], spread[n]))
    return winner, dict(sorted(overall.items()))
