"""Exponential decay fits of performance against domain similarity.

Model: y = a * exp(-b * x) + c with b >= 0. Fitting is deliberately
solver-free and deterministic: a dense log-spaced grid over the decay
rate b (plus b = 0), a closed-form least-squares solve for (a, c) at
each candidate, then a short Gauss-Newton polish of all three
parameters that never accepts a step increasing the squared error.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Any, Sequence

import numpy as np

from .errors import ComputationError

GRID_B_MIN = 1e-3
GRID_B_MAX = 1e2
GRID_B_POINTS = 1000
POLISH_MAX_STEPS = 50
TIE_TOLERANCE = 1e-12

_REL_STOP = 1e-15  # relative SSE improvement below which polishing stops


@dataclass(frozen=True)
class FitLog:
    """Diagnostics from one fit."""

    grid_b: float
    grid_sse: float
    polish_steps: int
    step_rejected: bool
    diverged: bool

    def to_dict(self) -> dict[str, Any]:
        return {
            "grid_b": self.grid_b,
            "grid_sse": self.grid_sse,
            "polish_steps": self.polish_steps,
            "step_rejected": self.step_rejected,
            "diverged": self.diverged,
        }


@dataclass(frozen=True)
class FitModel:
    """A fitted y = a * exp(-b * x) + c curve."""

    a: float
    b: float
    c: float
    predictor_name: str
    sse: float
    mae: float
    n_points: int
    percent_scale: bool
    fit_log: FitLog

    def to_dict(self) -> dict[str, Any]:
        return {
            "a": self.a,
            "b": self.b,
            "c": self.c,
            "predictor": self.predictor_name,
            "sse": self.sse,
            "mae": self.mae,
            "n": self.n_points,
            "percent_scale": self.percent_scale,
            "fit_log": self.fit_log.to_dict(),
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "FitModel":
        log = data.get("fit_log") or {}
        return cls(
            a=float(data["a"]),
            b=float(data["b"]),
            c=float(data["c"]),
            predictor_name=str(data.get("predictor", "x")),
            sse=float(data.get("sse", math.nan)),
            mae=float(data.get("mae", math.nan)),
            n_points=int(data.get("n", 0)),
            percent_scale=bool(data.get("percent_scale", True)),
            fit_log=FitLog(
                grid_b=float(log.get("grid_b", math.nan)),
                grid_sse=float(log.get("grid_sse", math.nan)),
                polish_steps=int(log.get("polish_steps", 0)),
                step_rejected=bool(log.get("step_rejected", False)),
                diverged=bool(log.get("diverged", False)),
            ),
        )


def model_to_json(model: FitModel) -> str:
    return json.dumps(model.to_dict(), sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def _validate_points(
    points: Sequence[tuple[float, float]], percent_scale: bool
) -> tuple[np.ndarray, np.ndarray]:
    if len(points) < 3:
        raise ComputationError(f"underdetermined fit: need at least 3 points, got {len(points)}")
    # canonical ordering makes the whole fit independent of input order
    ordered = sorted((float(x), float(y)) for x, y in points)
    x = np.array([p[0] for p in ordered], dtype=np.float64)
    y = np.array([p[1] for p in ordered], dtype=np.float64)
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        raise ComputationError("non-finite coordinate in fit points")
    if np.any(x < 0.0):
        raise ComputationError("negative similarity value in fit points")
    if np.all(x == x[0]):
        raise ComputationError("no predictor variation: all similarity values are identical")
    if percent_scale and (np.any(y < 0.0) or np.any(y > 100.0)):
        raise ComputationError("score outside [0, 100] in fit points for a percent-scale metric")
    return x, y


def _solve_linear(e: np.ndarray, y: np.ndarray) -> tuple[float, float]:
    """Least-squares (a, c) for y ~ a*e + c with fixed regressor e.

    When the design is rank-deficient (e constant, e.g. b = 0) the
    whole signal goes to the offset: a = 0, c = mean(y).
    """
    n = e.size
    mean_e = float(np.sum(e)) / n
    mean_y = float(np.sum(y)) / n
    var_e = float(np.sum((e - mean_e) ** 2))
    if var_e <= 1e-12 * max(float(np.sum(e * e)), 1e-300):
        return 0.0, mean_y
    cov_ey = float(np.sum((e - mean_e) * (y - mean_y)))
    a = cov_ey / var_e
    c = mean_y - a * mean_e
    return a, c


def _residuals(a: float, b: float, c: float, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    return y - (a * np.exp(-b * x) + c)


def _jacobian(a: float, b: float, c: float, x: np.ndarray) -> np.ndarray:
    """Jacobian of the residuals y - (a*exp(-b*x) + c) wrt (a, b, c)."""
    e = np.exp(-b * x)
    return np.column_stack((-e, a * x * e, -np.ones_like(x)))


def _sse(a: float, b: float, c: float, x: np.ndarray, y: np.ndarray) -> float:
    r = _residuals(a, b, c, x, y)
    return float(np.dot(r, r))


def _grid_candidates() -> np.ndarray:
    return np.concatenate(([0.0], np.logspace(np.log10(GRID_B_MIN), np.log10(GRID_B_MAX), GRID_B_POINTS)))


def _grid_search(x: np.ndarray, y: np.ndarray) -> tuple[float, float, float, float]:
    """Best (a, b, c, sse) over the decay-rate grid.

    The grid is scanned in ascending b; a candidate replaces the
    incumbent only when it improves the SSE by more than 1e-12, so
    ties resolve toward the smaller decay rate.
    """
    best: tuple[float, float, float, float] | None = None
    for b in _grid_candidates():
        e = np.exp(-b * x)
        a, c = _solve_linear(e, y)
        s = _sse(a, b, c, x, y)
        if best is None or s < best[3] - TIE_TOLERANCE:
            best = (a, float(b), c, s)
    assert best is not None
    return best


def _gauss_newton(
    a: float, b: float, c: float, x: np.ndarray, y: np.ndarray
) -> tuple[float, float, float, float, int, bool, bool]:
    """Polish (a, b, c), keeping b >= 0 and the SSE monotonically decreasing.

    Returns (a, b, c, sse, accepted_steps, step_rejected, diverged).
    A non-finite iterate counts as divergence and the caller falls
    back to the grid optimum.
    """
    sse = _sse(a, b, c, x, y)
    steps = 0
    rejected = False
    for _ in range(POLISH_MAX_STEPS):
        jac = _jacobian(a, b, c, x)
        residual = _residuals(a, b, c, x, y)
        try:
            delta, *_ = np.linalg.lstsq(jac, -residual, rcond=None)
        except np.linalg.LinAlgError:
            return a, b, c, sse, steps, rejected, True
        na = a + float(delta[0])
        nb = max(0.0, b + float(delta[1]))
        nc = c + float(delta[2])
        if not all(math.isfinite(v) for v in (na, nb, nc)):
            return a, b, c, sse, steps, rejected, True
        new_sse = _sse(na, nb, nc, x, y)
        if not math.isfinite(new_sse):
            return a, b, c, sse, steps, rejected, True
        if new_sse > sse:
            rejected = True
            break
        improvement = sse - new_sse
        a, b, c, sse = na, nb, nc, new_sse
        steps += 1
        if improvement <= _REL_STOP * max(sse, 1.0):
            break
    return a, b, c, sse, steps, rejected, False


def fit(
    points: Sequence[tuple[float, float]],
    *,
    predictor_name: str = "x",
    percent_scale: bool = True,
) -> FitModel:
    """Fit y = a * exp(-b * x) + c to (similarity, score) points.

    Deterministic: same points (in any order) give the same model.
    Needs at least 3 points with at least 2 distinct x values.
    """
    x, y = _validate_points(points, percent_scale)
    ga, gb, gc, gsse = _grid_search(x, y)
    a, b, c, sse, steps, rejected, diverged = _gauss_newton(ga, gb, gc, x, y)
    if diverged:
        a, b, c, sse = ga, gb, gc, gsse
    log = FitLog(grid_b=gb, grid_sse=gsse, polish_steps=steps, step_rejected=rejected, diverged=diverged)
    model = FitModel(
        a=a,
        b=b,
        c=c,
        predictor_name=predictor_name,
        sse=sse,
        mae=0.0,
        n_points=int(x.size),
        percent_scale=percent_scale,
        fit_log=log,
    )
    mae = mean_absolute_error(model, list(zip(x.tolist(), y.tolist())))
    return FitModel(
        a=a,
        b=b,
        c=c,
        predictor_name=predictor_name,
        sse=sse,
        mae=mae,
        n_points=int(x.size),
        percent_scale=percent_scale,
        fit_log=log,
    )


def predict(model: FitModel, x: float) -> float:
    """Predicted score at similarity x, clamped to [0, 100] on percent scales."""
    if not math.isfinite(x):
        raise ComputationError("similarity value must be finite")
    if x < 0.0:
        raise ComputationError(f"negative similarity value: {x}")
    if not all(math.isfinite(v) for v in (model.a, model.b, model.c)):
        raise ComputationError("model parameters are not finite")
    value = model.a * math.exp(-model.b * x) + model.c
    if model.percent_scale:
        value = min(max(value, 0.0), 100.0)
    return value


def mean_absolute_error(model: FitModel, points: Sequence[tuple[float, float]]) -> float:
    """Mean |y - predict(x)| over the given points."""
    if not points:
        raise ComputationError("no points: mean absolute error is undefined")
    total = 0.0
    for x, y in points:
        total += abs(float(y) - predict(model, float(x)))
    return total / len(points)


def derivative(model: FitModel, x: float) -> float:
    """Slope of the unclamped fitted curve at x: -a * b * exp(-b * x)."""
    if not math.isfinite(x):
        raise ComputationError("similarity value must be finite")
    return -model.a * model.b * math.exp(-model.b * x)


def curve_points(model: FitModel, x_max: float, n: int = 101, x_min: float = 0.0) -> list[tuple[float, float]]:
    """Evenly spaced (x, predicted score) samples for plotting."""
    if n < 2:
        raise ComputationError("need at least 2 curve points")
    if not (math.isfinite(x_min) and math.isfinite(x_max)) or x_max <= x_min:
        raise ComputationError("bad curve range")
    xs = np.linspace(x_min, x_max, n)
    return [(float(xi), predict(model, float(xi))) for xi in xs]
