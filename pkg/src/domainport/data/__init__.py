"""Bundled reference fixtures: published score tables and curve points.

These back the regression tests and give library users something to
poke at without assembling their own corpora. Curve fixtures keep the
x units they were published in; see ``manifest()`` for details (the
cosine curves are in hundredths).
"""

from __future__ import annotations

import csv
import io
import json
from functools import lru_cache
from importlib import resources
from typing import Any

from ..transport import ScoreTable, load_score_table

CURVE_NAMES = (
    "curve_ner_kl_f1",
    "curve_ner_cosine_f1",
    "curve_nli_kl_accuracy",
    "curve_nli_cosine_accuracy",
)


def _read_text(name: str) -> str:
    return resources.files(__package__).joinpath(name).read_text(encoding="utf-8")


@lru_cache(maxsize=None)
def manifest() -> dict[str, Any]:
    return json.loads(_read_text("manifest.json"))


def load_ner_scores() -> ScoreTable:
    return load_score_table(_read_text("ner_scores.csv"), metric_name="F1")


def load_nli_scores() -> ScoreTable:
    return load_score_table(_read_text("nli_scores.csv"), metric_name="accuracy")


def load_curve(name: str) -> dict[str, list[tuple[float, float]]]:
    """Curve fixture as {system: [(x, y), ...]} in file order."""
    if name not in CURVE_NAMES:
        raise KeyError(f"unknown curve fixture {name!r}; expected one of {CURVE_NAMES}")
    reader = csv.reader(io.StringIO(_read_text(f"{name}.csv")))
    rows = list(reader)
    out: dict[str, list[tuple[float, float]]] = {}
    for row in rows[1:]:
        if not row:
            continue
        system, x, y = row
        out.setdefault(system, []).append((float(x), float(y)))
    return out


def transport_spec(task: str) -> dict[str, Any]:
    """Reference transport-set metadata for 'ner' or 'nli'."""
    sets = manifest()["transport_sets"]
    if task not in sets:
        raise KeyError(f"no transport spec for task {task!r}")
    return sets[task]
