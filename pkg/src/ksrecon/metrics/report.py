from collections import defaultdict
from itertools import combinations
from typing import Iterable

import numpy as np
from pydantic import BaseModel, Field
from tabulate import tabulate

from common.utils import get_flow_aware_logger
from ksrecon.errors import DegenerateStatisticsError
from ksrecon.metrics.stats import SIGNIFICANCE, paired_ttest

logger = get_flow_aware_logger("ksrecon.metrics.report")


class MetricsRow(BaseModel):
    method: str
    rate: float
    seed: int
    nmse: float = Field(ge=0)
    sharpness_rca: float = Field(ge=0)
    runtime_s: float = Field(default=0.0, ge=0)


class AggregateRow(BaseModel):
    method: str
    rate: float
    n: int
    nmse_mean: float
    nmse_std: float
    sharpness_mean: float
    sharpness_std: float
    runtime_mean: float = 0.0


class TTestRow(BaseModel):
    pair: str
    t: float
    p: float
    n: int

    @property
    def significant(self) -> bool:
        return self.p < SIGNIFICANCE


class MetricsReport(BaseModel):
    rows: list[MetricsRow] = Field(default_factory=list)
    aggregates: list[AggregateRow] = Field(default_factory=list)
    ttests: list[TTestRow] = Field(default_factory=list)

    def to_table(self) -> str:
        table = [
            [a.method, a.rate, a.n, a.nmse_mean, a.nmse_std, a.sharpness_mean, a.sharpness_std]
            for a in self.aggregates
        ]
        text = tabulate(
            table,
            headers=["method", "rate", "n", "nmse mean", "nmse std", "sharpness mean", "sharpness std"],
            floatfmt=".4g",
        )
        if self.ttests:
            tests = [[t.pair, t.t, t.p, t.n, "*" if t.significant else ""] for t in self.ttests]
            text += "\n\n" + tabulate(tests, headers=["pair", "t", "p", "n", "p<0.05"], floatfmt=".4g")
        return text


def _std(values: list[float]) -> float:
    return float(np.std(values, ddof=1)) if len(values) > 1 else 0.0


def summarize(rows: Iterable[MetricsRow]) -> list[AggregateRow]:
    """Mean and sample standard deviation per (method, rate), ordered by method then rate"""
    groups: dict[tuple[str, float], list[MetricsRow]] = defaultdict(list)
    for row in rows:
        groups[(row.method, row.rate)].append(row)
    out = []
    for (method, rate), members in sorted(groups.items()):
        members = sorted(members, key=lambda r: r.seed)
        nmse_values = [r.nmse for r in members]
        sharp_values = [r.sharpness_rca for r in members]
        out.append(
            AggregateRow(
                method=method,
                rate=rate,
                n=len(members),
                nmse_mean=float(np.mean(nmse_values)),
                nmse_std=_std(nmse_values),
                sharpness_mean=float(np.mean(sharp_values)),
                sharpness_std=_std(sharp_values),
                runtime_mean=float(np.mean([r.runtime_s for r in members])),
            )
        )
    return out


def compare_methods(
    rows: Iterable[MetricsRow], metrics: tuple[str, ...] = ("nmse", "sharpness_rca")
) -> list[TTestRow]:
    """Paired t-tests between every two methods at each rate, paired by seed"""
    by_rate: dict[float, dict[str, dict[int, MetricsRow]]] = defaultdict(lambda: defaultdict(dict))
    for row in rows:
        by_rate[row.rate][row.method][row.seed] = row
    out = []
    for rate in sorted(by_rate):
        methods = by_rate[rate]
        for first, second in combinations(sorted(methods), 2):
            seeds = sorted(set(methods[first]) & set(methods[second]))
            for metric in metrics:
                a = [getattr(methods[first][s], metric) for s in seeds]
                b = [getattr(methods[second][s], metric) for s in seeds]
                pair = f"{metric}:{first}-vs-{second}@R{rate:g}"
                try:
                    t, p = paired_ttest(a, b)
                except DegenerateStatisticsError as e:
                    logger.warning(f"Skipping t-test {pair} ({metric}): {e}")
                    continue
                out.append(TTestRow(pair=pair, t=t, p=p, n=len(seeds)))
    return out


def build_report(rows: Iterable[MetricsRow]) -> MetricsReport:
    rows = list(rows)
    return MetricsReport(rows=rows, aggregates=summarize(rows), ttests=compare_methods(rows))
