"""Exponential decay fitter tests: recovery, determinism, diagnostics."""

from __future__ import annotations

import json
import math
import random

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from domainport.data import load_curve
from domainport.errors import ComputationError
from domainport.regression import (
    FitModel,
    _jacobian,
    _residuals,
    curve_points,
    derivative,
    fit,
    mean_absolute_error,
    model_to_json,
    predict,
)

EXACT_POINTS = [(x, 50.0 * math.exp(-1.2 * x) + 40.0) for x in (0.0, 0.5, 1.0, 1.5, 2.0)]


def make_model(a, b, c, percent_scale=True):
    base = fit(EXACT_POINTS)
    return FitModel(
        a=a, b=b, c=c,
        predictor_name="x",
        sse=0.0, mae=0.0, n_points=5,
        percent_scale=percent_scale,
        fit_log=base.fit_log,
    )


# ---------------------------------------------------------------- fit


def test_exact_model_recovery():
    model = fit(EXACT_POINTS)
    assert abs(model.a - 50.0) < 1e-6
    assert abs(model.b - 1.2) < 1e-6
    assert abs(model.c - 40.0) < 1e-6
    assert model.sse < 1e-10
    assert model.mae < 1e-6
    assert not model.fit_log.diverged


def test_constant_data_puts_the_signal_in_the_offset():
    model = fit([(0.0, 40.0), (1.0, 40.0), (2.0, 40.0), (3.5, 40.0)])
    assert model.a == 0.0
    assert model.b == 0.0  # SSE ties across the whole grid resolve to the smallest b
    assert model.c == 40.0
    assert model.sse == 0.0
    assert model.mae == 0.0


def test_frozen_reference_fit():
    # 7-point decay curve; values frozen from a verified run of this optimizer
    points = load_curve("curve_ner_kl_f1")["elmo"]
    model = fit(points, predictor_name="kl_divergence")
    assert model.a == pytest.approx(222.74050309375468, rel=1e-9)
    assert model.b == pytest.approx(0.1817252816715541, rel=1e-9)
    assert model.c == pytest.approx(-117.92546754819016, rel=1e-9)
    assert model.sse == pytest.approx(143.5132783521927, rel=1e-9)
    assert model.mae == pytest.approx(3.499360949332416, rel=1e-9)
    assert model.fit_log.grid_b == pytest.approx(0.18082449348779517, rel=1e-9)
    assert model.fit_log.polish_steps == 7
    assert model.fit_log.step_rejected is True
    assert model.fit_log.diverged is False
    assert model.sse <= model.fit_log.grid_sse


def test_fit_is_input_order_invariant():
    points = load_curve("curve_ner_kl_f1")["elmo"]
    shuffled = list(points)
    random.Random(7).shuffle(shuffled)
    m1, m2 = fit(points), fit(shuffled)
    assert (m1.a, m1.b, m1.c, m1.sse, m1.mae) == (m2.a, m2.b, m2.c, m2.sse, m2.mae)


def test_fit_validation_errors():
    with pytest.raises(ComputationError, match="underdetermined"):
        fit([(0.0, 1.0), (1.0, 2.0)])
    with pytest.raises(ComputationError, match="no predictor variation"):
        fit([(1.0, 10.0), (1.0, 20.0), (1.0, 30.0)])
    with pytest.raises(ComputationError, match="negative similarity"):
        fit([(-0.5, 10.0), (1.0, 20.0), (2.0, 30.0)])
    with pytest.raises(ComputationError, match="non-finite"):
        fit([(0.0, float("nan")), (1.0, 20.0), (2.0, 30.0)])
    with pytest.raises(ComputationError, match="outside \\[0, 100\\]"):
        fit([(0.0, 150.0), (1.0, 20.0), (2.0, 30.0)])
    # the same y values are fine off the percent scale
    fit([(0.0, 150.0), (1.0, 20.0), (2.0, 30.0)], percent_scale=False)


def test_fitted_sse_never_exceeds_the_flat_baseline():
    # b=0 with c=mean(y) sits on the grid, so no fit can do worse
    points = [(0.0, 90.0), (1.0, 70.0), (2.0, 30.0), (4.0, 20.0)]
    y = [p[1] for p in points]
    mean_y = sum(y) / len(y)
    baseline = sum((v - mean_y) ** 2 for v in y)
    assert fit(points).sse <= baseline + 1e-9


@given(
    st.lists(
        st.tuples(
            st.floats(min_value=0.0, max_value=5.0, allow_nan=False),
            st.floats(min_value=1.0, max_value=99.0, allow_nan=False),
        ),
        min_size=3,
        max_size=8,
    ),
    st.randoms(use_true_random=False),
)
@settings(max_examples=40, deadline=None)
def test_fit_determinism_and_permutation_invariance(points, rng):
    xs = {p[0] for p in points}
    if len(xs) < 2:
        return
    shuffled = list(points)
    rng.shuffle(shuffled)
    m1, m2 = fit(points), fit(shuffled)
    assert (m1.a, m1.b, m1.c, m1.sse) == (m2.a, m2.b, m2.c, m2.sse)
    assert m1.b >= 0.0
    assert m1.sse >= 0.0


# ---------------------------------------------------------------- predict


def test_predict_algebra():
    model = fit(EXACT_POINTS)
    assert predict(model, 0.0) == pytest.approx(model.a + model.c, rel=1e-12)
    assert predict(model, 1.0) == pytest.approx(55.059710595610106, abs=1e-6)


def test_predict_limit_is_the_offset():
    model = make_model(50.0, 1.2, 40.0)
    assert abs(predict(model, 1e6) - model.c) < 1e-6


def test_predict_clamps_only_percent_scales():
    over = make_model(80.0, 0.5, 60.0, percent_scale=True)  # a + c = 140
    assert predict(over, 0.0) == 100.0
    under = make_model(-50.0, 0.5, 20.0, percent_scale=True)  # a + c = -30
    assert predict(under, 0.0) == 0.0
    free = make_model(80.0, 0.5, 60.0, percent_scale=False)
    assert predict(free, 0.0) == 140.0


def test_predict_input_validation():
    model = fit(EXACT_POINTS)
    with pytest.raises(ComputationError):
        predict(model, float("inf"))
    with pytest.raises(ComputationError):
        predict(model, -0.1)


def test_monotone_decrease_for_positive_decay():
    model = make_model(50.0, 1.2, 10.0, percent_scale=False)
    values = [predict(model, x) for x in np.linspace(0.0, 5.0, 50)]
    assert all(earlier > later for earlier, later in zip(values, values[1:]))


# ---------------------------------------------------------------- mae


def test_mae_on_curve_is_zero():
    model = fit(EXACT_POINTS)
    assert mean_absolute_error(model, EXACT_POINTS) < 1e-9


def test_mae_of_symmetric_offsets():
    model = make_model(50.0, 1.2, 40.0, percent_scale=False)
    delta = 2.5
    points = [(0.0, 90.0 + delta), (1.0, predict(model, 1.0) - delta)]
    assert mean_absolute_error(model, points) == pytest.approx(delta, rel=1e-12)


def test_mae_requires_points():
    with pytest.raises(ComputationError, match="no points"):
        mean_absolute_error(fit(EXACT_POINTS), [])


# ---------------------------------------------------------------- derivative / curve


def test_derivative_closed_form_and_finite_difference():
    model = make_model(50.0, 1.2, 40.0, percent_scale=False)
    for x in (0.0, 0.7, 2.3):
        expected = -model.a * model.b * math.exp(-model.b * x)
        assert derivative(model, x) == expected
        h = 1e-7
        numeric = (predict(model, x + h) - predict(model, max(x - h, 0.0))) / (
            (x + h) - max(x - h, 0.0)
        )
        assert derivative(model, x) == pytest.approx(numeric, rel=1e-4)


def test_curve_points_span_the_requested_range():
    model = fit(EXACT_POINTS)
    pts = curve_points(model, 2.0, n=21)
    assert len(pts) == 21
    assert pts[0][0] == 0.0
    assert pts[-1][0] == 2.0
    with pytest.raises(ComputationError):
        curve_points(model, 2.0, n=1)
    with pytest.raises(ComputationError):
        curve_points(model, 0.0)


# ---------------------------------------------------------------- jacobian


def test_jacobian_matches_central_differences():
    rng = np.random.default_rng(20260817)
    h = 1e-6
    for _ in range(100):
        a = rng.uniform(-80.0, 80.0)
        b = rng.uniform(0.01, 3.0)
        c = rng.uniform(-50.0, 50.0)
        x = rng.uniform(0.0, 4.0, size=6)
        y = rng.uniform(0.0, 100.0, size=6)
        jac = _jacobian(a, b, c, x)
        for j, (lo, hi) in enumerate((( a - h, a + h), (b - h, b + h), (c - h, c + h))):
            params_lo = [a, b, c]
            params_hi = [a, b, c]
            params_lo[j], params_hi[j] = lo, hi
            numeric = (_residuals(*params_hi, x, y) - _residuals(*params_lo, x, y)) / (2 * h)
            scale = np.maximum(np.abs(jac[:, j]), 1.0)
            assert np.all(np.abs(jac[:, j] - numeric) / scale < 1e-4)


# ---------------------------------------------------------------- serialization


def test_model_json_round_trip():
    model = fit(EXACT_POINTS, predictor_name="kl_divergence")
    payload = json.loads(model_to_json(model))
    assert set(payload) == {"a", "b", "c", "predictor", "sse", "mae", "n", "percent_scale", "fit_log"}
    assert payload["n"] == 5
    assert payload["predictor"] == "kl_divergence"
    restored = FitModel.from_dict(payload)
    assert (restored.a, restored.b, restored.c) == (model.a, model.b, model.c)
    assert restored.n_points == model.n_points
    assert restored.fit_log == model.fit_log
