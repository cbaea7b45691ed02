"""Transportability measures over performance score tables.

The transport ratio of a (source, target) evaluation pair is simply
target score over source score. Aggregates over a set of targets:
the mean ratio, and the coefficient of variation of the ratios in
percent (sample standard deviation over mean, times 100), optionally
with a small-sample bias correction factor 1 + 1/(4n).
"""

from __future__ import annotations

import csv
import io
import json
import math
import statistics
from dataclasses import dataclass, field
from pathlib import Path
from typing import IO, Any, Mapping, Sequence

from .errors import ComputationError, ParseError

SCORE_COLUMNS = ("system", "task", "dataset", "split", "score")

# metrics on a 0..100 scale; scores outside it are rejected at load time
PERCENT_METRICS = {"f1", "accuracy", "precision", "recall"}


@dataclass(frozen=True)
class ScoreEntry:
    """One evaluation result: a system scored on a dataset split."""

    system: str
    task: str
    dataset: str
    split: str
    score: float

    def __post_init__(self) -> None:
        for name in ("system", "task", "dataset", "split"):
            if not getattr(self, name):
                raise ParseError(f"score entry field {name!r} must be non-empty")
        if not math.isfinite(self.score):
            raise ParseError(f"non-finite score for {self.key()}")

    def key(self) -> tuple[str, str, str, str]:
        return (self.system, self.task, self.dataset, self.split)


@dataclass(frozen=True)
class ScoreTable:
    entries: tuple[ScoreEntry, ...]
    metric_name: str = "F1"

    def __post_init__(self) -> None:
        seen: set[tuple[str, str, str, str]] = set()
        for e in self.entries:
            if e.key() in seen:
                raise ParseError(f"duplicate score entry for {e.key()}")
            seen.add(e.key())
        if self.metric_name.lower() in PERCENT_METRICS:
            for e in self.entries:
                if not (0.0 <= e.score <= 100.0):
                    raise ParseError(
                        f"{self.metric_name} score out of [0, 100] for {e.key()}: {e.score}"
                    )

    def get(self, system: str, task: str, dataset: str, split: str) -> float:
        for e in self.entries:
            if e.key() == (system, task, dataset, split):
                return e.score
        raise ParseError(
            f"score table has no entry for system={system!r} task={task!r} "
            f"dataset={dataset!r} split={split!r}"
        )

    def systems(self, task: str | None = None) -> list[str]:
        """Distinct systems in first-appearance order, optionally per task."""
        out: list[str] = []
        for e in self.entries:
            if task is not None and e.task != task:
                continue
            if e.system not in out:
                out.append(e.system)
        return out


def _is_existing_path(candidate: str | Path) -> bool:
    if isinstance(candidate, str) and ("\n" in candidate or "," in candidate):
        return False
    try:
        return Path(candidate).is_file()
    except OSError:
        return False


def load_score_table(
    data: str | Path | bytes | IO[bytes],
    metric_name: str = "F1",
) -> ScoreTable:
    """Read a score table from CSV with header system,task,dataset,split,score."""
    label = "<stream>"
    if isinstance(data, (str, Path)) and _is_existing_path(data):
        label = str(data)
        text = Path(data).read_text(encoding="utf-8")
    elif isinstance(data, bytes):
        text = data.decode("utf-8")
    elif isinstance(data, str):
        text = data
    else:
        text = data.read().decode("utf-8")

    # tolerate leading comment lines (the CLI writes a metadata comment)
    lines = [ln for ln in text.splitlines() if not ln.startswith("#")]
    reader = csv.reader(io.StringIO("\n".join(lines)))
    rows = [row for row in reader if row]
    if not rows:
        raise ParseError("score table is empty", source=label)
    header = tuple(cell.strip() for cell in rows[0])
    if header != SCORE_COLUMNS:
        raise ParseError(
            f"bad score table header {list(header)}; expected {list(SCORE_COLUMNS)}", source=label
        )
    entries = []
    for line_no, row in enumerate(rows[1:], start=2):
        if len(row) != len(SCORE_COLUMNS):
            raise ParseError(f"expected {len(SCORE_COLUMNS)} columns, got {len(row)}", line=line_no, source=label)
        system, task, dataset, split, score_text = (cell.strip() for cell in row)
        try:
            score = float(score_text)
        except ValueError as exc:
            raise ParseError(f"non-numeric score {score_text!r}", line=line_no, source=label) from exc
        entries.append(ScoreEntry(system=system, task=task, dataset=dataset, split=split, score=score))
    if not entries:
        raise ParseError("score table has a header but no rows", source=label)
    return ScoreTable(entries=tuple(entries), metric_name=metric_name)


def tau_p_pair(source_score: float, target_score: float) -> float:
    """Transport ratio: target score divided by source score."""
    if not (math.isfinite(source_score) and math.isfinite(target_score)):
        raise ComputationError("non-finite score in transport ratio")
    if source_score <= 0.0:
        raise ComputationError(
            f"undefined transport ratio: source score must be positive, got {source_score}"
        )
    if target_score < 0.0:
        raise ComputationError(f"negative target score: {target_score}")
    return target_score / source_score


def tau_p_mean(source_score: float, target_scores: Sequence[float]) -> float:
    """Mean transport ratio over a set of target scores."""
    if not target_scores:
        raise ComputationError("no target scores: transport mean is undefined")
    ratios = [tau_p_pair(source_score, t) for t in target_scores]
    # summing in sorted order makes the mean independent of input order
    return sum(sorted(ratios)) / len(ratios)


def _cov_percent(ratios: Sequence[float], bias_corrected: bool) -> float:
    n = len(ratios)
    if n < 2:
        raise ComputationError("variation is undefined for fewer than 2 ratios")
    ordered = sorted(ratios)  # canonical order: permutation cannot move the result
    mean = sum(ordered) / n
    if mean == 0.0:
        raise ComputationError("variation is undefined: mean transport ratio is zero")
    sd = statistics.stdev(ordered)  # sample standard deviation, n-1 denominator
    factor = 1.0 + 1.0 / (4.0 * n) if bias_corrected else 1.0
    return 100.0 * factor * sd / mean


def tau_var(
    source_score: float,
    target_scores: Sequence[float],
    bias_corrected: bool = False,
) -> float:
    """Coefficient of variation of transport ratios, in percent.

    With ``bias_corrected`` the small-sample factor 1 + 1/(4n) is
    applied. The default is off: published reference values use the
    plain sample statistic.
    """
    ratios = [tau_p_pair(source_score, t) for t in target_scores]
    return _cov_percent(ratios, bias_corrected)


@dataclass(frozen=True)
class TauObservation:
    """A transport ratio observed for some task/dataset, used for pooled variation."""

    task: str
    dataset: str
    ratio: float
    metric: str = "F1"

    def __post_init__(self) -> None:
        if not math.isfinite(self.ratio) or self.ratio < 0.0:
            raise ComputationError(f"invalid transport ratio {self.ratio} for {self.task}/{self.dataset}")


def tau_var_general(observations: Sequence[TauObservation], bias_corrected: bool = False) -> float:
    """Variation across arbitrary transport observations (possibly many tasks).

    All observations must share a metric; pooling F1 ratios with
    accuracy ratios would not mean anything.
    """
    if len(observations) < 2:
        raise ComputationError("variation is undefined for fewer than 2 observations")
    metrics = {o.metric for o in observations}
    if len(metrics) > 1:
        raise ComputationError(f"incomparable metrics in observations: {sorted(metrics)}")
    return _cov_percent([o.ratio for o in observations], bias_corrected)


@dataclass(frozen=True)
class TransportReport:
    """Transport summary for one system from one source evaluation."""

    system: str
    task: str
    metric_name: str
    source_key: tuple[str, str]  # (dataset, split)
    source_score: float
    per_target: tuple[tuple[tuple[str, str], float], ...]  # ((dataset, split), ratio)
    tau_p: float
    variation: float | None  # None when fewer than 2 targets
    bias_corrected: bool
    group_means: Mapping[str, float] = field(default_factory=dict)

    @property
    def n_targets(self) -> int:
        return len(self.per_target)


def build_report(
    table: ScoreTable,
    system: str,
    task: str,
    source_key: tuple[str, str],
    target_keys: Sequence[tuple[str, str]],
    *,
    bias_corrected: bool = False,
    groups: Mapping[str, Sequence[tuple[str, str]]] | None = None,
) -> TransportReport:
    """Compute all transport measures for one system.

    ``source_key`` and each target key are (dataset, split) pairs.
    ``groups`` optionally names subsets of the targets whose mean
    ratios are reported separately. Variation is None when fewer
    than two targets are given, since it is undefined there.
    """
    if not target_keys:
        raise ComputationError("no target keys given")
    source_score = table.get(system, task, *source_key)
    per_target = []
    for key in target_keys:
        target_score = table.get(system, task, *key)
        per_target.append(((key[0], key[1]), tau_p_pair(source_score, target_score)))
    ratios = [r for _, r in per_target]
    mean_ratio = sum(sorted(ratios)) / len(ratios)
    variation = _cov_percent(ratios, bias_corrected) if len(ratios) >= 2 else None
    group_means: dict[str, float] = {}
    if groups:
        for name, keys in groups.items():
            if not keys:
                raise ComputationError(f"group {name!r} has no target keys")
            scores = [table.get(system, task, *k) for k in keys]
            group_means[name] = tau_p_mean(source_score, scores)
    return TransportReport(
        system=system,
        task=task,
        metric_name=table.metric_name,
        source_key=(source_key[0], source_key[1]),
        source_score=source_score,
        per_target=tuple(per_target),
        tau_p=mean_ratio,
        variation=variation,
        bias_corrected=bias_corrected,
        group_means=group_means,
    )


def report_to_dict(report: TransportReport) -> dict[str, Any]:
    return {
        "system": report.system,
        "task": report.task,
        "metric": report.metric_name,
        "source": {"dataset": report.source_key[0], "split": report.source_key[1]},
        "source_score": report.source_score,
        "per_target": [
            {"dataset": k[0], "split": k[1], "ratio": r} for k, r in report.per_target
        ],
        "tau_p": report.tau_p,
        "variation": report.variation,
        "bias_corrected": report.bias_corrected,
        "group_means": {k: report.group_means[k] for k in sorted(report.group_means)},
    }


def render_report_text(reports: Sequence[TransportReport], group_order: Sequence[str] | None = None) -> str:
    """Fixed-width text table: one column per system, one row per measure."""
    if not reports:
        raise ComputationError("nothing to render: no reports")
    groups = list(group_order) if group_order is not None else sorted(
        {g for rep in reports for g in rep.group_means}
    )
    rows: list[tuple[str, list[str]]] = []
    rows.append(("source", [f"{r.source_key[0]}/{r.source_key[1]}" for r in reports]))
    for g in groups:
        rows.append(
            (f"tau_p({g})", ["%.3f" % r.group_means[g] if g in r.group_means else "n/a" for r in reports])
        )
    rows.append(("tau_p(mean)", ["%.3f" % r.tau_p for r in reports]))
    rows.append(
        ("tau_var(%)", ["%.3f" % r.variation if r.variation is not None else "n/a" for r in reports])
    )
    header = ["measure"] + [r.system for r in reports]
    table_rows = [header] + [[label] + cells for label, cells in rows]
    widths = [max(len(row[i]) for row in table_rows) for i in range(len(header))]
    lines = []
    for i, row in enumerate(table_rows):
        lines.append("  ".join(cell.ljust(widths[j]) for j, cell in enumerate(row)).rstrip())
        if i == 0:
            lines.append("  ".join("-" * w for w in widths))
    return "\n".join(lines) + "\n"


def score_table_to_json(table: ScoreTable) -> str:
    obj = {
        "metric": table.metric_name,
        "entries": [
            {"system": e.system, "task": e.task, "dataset": e.dataset, "split": e.split, "score": e.score}
            for e in table.entries
        ],
    }
    return json.dumps(obj, sort_keys=True, indent=2, ensure_ascii=False) + "\n"
