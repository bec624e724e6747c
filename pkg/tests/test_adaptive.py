import io
import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from qdoe.adaptive import (
    AdaptiveConfig,
    MseRatioResult,
    SweepResult,
    SweepRow,
    ThetaGrid,
    TrialRecord,
    _adaptive_batch,
    _static_batch,
    _sweep_point,
    arm_probabilities,
    eps_to_theta,
    estimator,
    f_hat,
    grid_sweep,
    mse_ratio,
    next_lambda,
    run_adaptive,
    run_static,
    sample_counts,
    static_mse_analytic,
    theta_to_eps,
    vratio_analytic,
)
from qdoe.closed_forms import f_values
from qdoe.errors import DegenerateModelError, EstimatorError, ValidationError


def test_theta_eps_roundtrip():
    point = theta_to_eps(0.2, 0.05)
    assert_allclose((point.eps1, point.eps2), (0.15, 0.75), atol=1e-14)
    rng = np.random.default_rng(11)
    for _ in range(25):
        t1 = rng.uniform(0.0, 1.0)
        t2 = rng.uniform(0.0, 1.0 - t1)
        back = eps_to_theta(theta_to_eps(t1, t2))
        assert_allclose(back, (t1, t2), atol=1e-12)


def test_theta_to_eps_domain():
    with pytest.raises(ValidationError):
        theta_to_eps(0.6, 0.5)
    with pytest.raises(ValidationError):
        theta_to_eps(-0.1, 0.2)


def test_arm_probabilities_match_success_rates():
    # Arm 1 succeeds with probability 1 - theta2, arm 2 with 1 - theta1.
    p1, p2 = arm_probabilities(theta_to_eps(0.2, 0.05))
    assert_allclose((p1, p2), (0.95, 0.8), atol=1e-14)
    assert arm_probabilities((0.0, 1.0)) == (1.0, 1.0)


def test_sample_counts_deterministic_at_certainty():
    rng = np.random.default_rng(0)
    assert sample_counts((0.0, 1.0), 1, 37, rng) == 37
    assert sample_counts((0.0, 1.0), 2, 0, rng) == 0
    with pytest.raises(ValidationError):
        sample_counts((0.0, 0.5), 3, 10, rng)
    with pytest.raises(ValidationError):
        sample_counts((0.0, 0.5), 1, -1, rng)


def test_estimator_value_and_guards():
    assert estimator(3, 10, 1, 5) == pytest.approx(0.3 - 0.2)
    with pytest.raises(EstimatorError):
        estimator(0, 0, 1, 5)
    with pytest.raises(EstimatorError):
        estimator(1, 5, 0, 0)
    with pytest.raises(ValidationError):
        estimator(6, 5, 0, 5)


def test_estimator_is_unbiased():
    point = theta_to_eps(0.3, 0.1)
    rng = np.random.default_rng(42)
    estimates = _static_batch(point, 100, 40000, rng)
    se = estimates.std(ddof=1) / math.sqrt(len(estimates))
    assert abs(estimates.mean() - point.eps1) < 4.0 * se


def test_f_hat():
    assert f_hat(5, 10) == pytest.approx(0.5)
    assert f_hat(0, 10) == 0.0
    assert f_hat(10, 10) == 0.0
    with pytest.raises(EstimatorError):
        f_hat(0, 0)


def test_next_lambda_worked_example():
    # inner = (0.3 + (0.3 * 20 - 0.4 * 10) / 10) / 0.7 = 5/7, lam = 3/7.
    lam = next_lambda(0.3, 0.4, 10, 20, 10)
    assert_allclose(lam, 3.0 / 7.0, atol=1e-14)


def test_next_lambda_edge_cases():
    assert next_lambda(0.0, 0.0, 5, 5, 10) == 0.0
    assert next_lambda(0.5, 0.5, 7, 7, 10) == 0.0
    assert next_lambda(0.5, 0.0, 0, 100, 10) == 1.0
    assert next_lambda(0.0, 0.5, 100, 0, 10) == -1.0
    with pytest.raises(ValidationError):
        next_lambda(0.3, 0.4, 0, 0, 0)
    with pytest.raises(ValidationError):
        next_lambda(-0.1, 0.4, 0, 0, 10)


def test_next_lambda_catch_up_property():
    # An interior step lands the cumulative arm-1 share exactly on the
    # plug-in target fh1 / (fh1 + fh2).
    rng = np.random.default_rng(7)
    for _ in range(50):
        fh1, fh2 = rng.uniform(0.05, 0.5, size=2)
        uses1, uses2 = rng.integers(1, 200, size=2)
        m = int(rng.integers(1, 50))
        lam = next_lambda(fh1, fh2, uses1, uses2, m)
        if abs(lam) == 1.0:
            continue
        alloc1 = 0.5 * (1.0 + lam) * m
        share = (uses1 + alloc1) / (uses1 + uses2 + m)
        assert_allclose(share, fh1 / (fh1 + fh2), atol=1e-12)


def test_next_lambda_vectorized():
    lam = next_lambda(
        np.array([0.3, 0.0]),
        np.array([0.4, 0.0]),
        np.array([10, 5]),
        np.array([20, 5]),
        np.array([10, 10]),
    )
    assert lam.shape == (2,)
    assert_allclose(lam, [3.0 / 7.0, 0.0], atol=1e-14)


def test_static_mse_analytic_oracle():
    assert static_mse_analytic((0.0, 0.5), 200, 0.0) == pytest.approx(0.00375)
    assert static_mse_analytic((0.0, 0.5), 200, 1.0) == math.inf
    f = f_values((0.2, 0.3))
    lam = 0.4
    expected = f.f1**2 / 140.0 + f.f2**2 / 60.0
    assert_allclose(static_mse_analytic((0.2, 0.3), 200, lam), expected, rtol=1e-14)


def test_vratio_analytic():
    eps = (0.45, 0.4)
    assert vratio_analytic(eps, 0.0) == pytest.approx(1.0)
    f = f_values(eps)
    lam_star = (f.f1 - f.f2) / (f.f1 + f.f2)
    best = 2.0 * (f.f1**2 + f.f2**2) / (f.f1 + f.f2) ** 2
    assert_allclose(vratio_analytic(eps, lam_star), best, rtol=1e-12)
    grid = np.linspace(-0.999, 0.999, 20001)
    values = [vratio_analytic(eps, lam) for lam in grid]
    assert abs(grid[int(np.argmax(values))] - lam_star) < 2e-4
    with pytest.raises(ValidationError):
        vratio_analytic(eps, 1.5)
    with pytest.raises(DegenerateModelError):
        vratio_analytic((0.0, 1.0), 0.5)


def test_adaptive_config_step_layout():
    config = AdaptiveConfig(total_uses=23, steps=4, runway=4)
    # 19 uses over 4 steps: earlier steps absorb the remainder.
    assert config.step_sizes == (5, 5, 5, 4)
    explicit = AdaptiveConfig(total_uses=23, steps=4, runway=4, step_sizes=(5, 5, 5, 4))
    assert explicit.step_sizes == config.step_sizes


def test_adaptive_config_validation():
    with pytest.raises(ValidationError):
        AdaptiveConfig(total_uses=10, steps=0)
    with pytest.raises(ValidationError):
        AdaptiveConfig(total_uses=5, steps=6)
    with pytest.raises(ValidationError):
        AdaptiveConfig(total_uses=10, steps=2, runway=10)
    with pytest.raises(ValidationError):
        AdaptiveConfig(total_uses=10, steps=2, step_sizes=(5, 5, 5))
    with pytest.raises(ValidationError):
        AdaptiveConfig(total_uses=10, steps=2, step_sizes=(4, 5))
    with pytest.raises(ValidationError):
        AdaptiveConfig(total_uses=10, steps=2, runway=2, step_sizes=(4, 5))
    with pytest.raises(ValidationError):
        AdaptiveConfig(total_uses=10, steps=2, f_init=(0.6, 0.1))


def test_run_static_record():
    record = run_static((0.2, 0.3), 101, lam=0.0, rng=np.random.default_rng(5))
    assert record.uses1 + record.uses2 == 101
    assert record.lambda_trace == (0.0,)
    assert record.estimate == pytest.approx(
        record.n1 / record.uses1 - record.n2 / record.uses2
    )
    again = run_static((0.2, 0.3), 101, lam=0.0, rng=np.random.default_rng(5))
    assert record == again
    with pytest.raises(EstimatorError):
        run_static((0.2, 0.3), 100, lam=1.0, rng=np.random.default_rng(5))
    with pytest.raises(ValidationError):
        run_static((0.2, 0.3), 1)
    with pytest.raises(ValidationError):
        run_static((0.2, 0.3), 100, lam=1.5)


def test_run_adaptive_conserves_budget():
    config = AdaptiveConfig(total_uses=200, steps=10)
    record = run_adaptive((0.3, 0.2), config, rng=np.random.default_rng(9))
    assert record.uses1 + record.uses2 == 200
    assert -1.0 <= record.lambda_eff <= 1.0
    assert len(record.lambda_trace) == 10
    assert record.lambda_eff == pytest.approx(2.0 * record.uses1 / 200.0 - 1.0)


def test_run_adaptive_reproducible():
    config = AdaptiveConfig(total_uses=120, steps=6, runway=20)
    first = run_adaptive((0.1, 0.6), config, rng=np.random.default_rng(31))
    second = run_adaptive((0.1, 0.6), config, rng=np.random.default_rng(31))
    assert first == second


def test_run_adaptive_runway_feeds_estimates():
    # With the whole budget minus one step in the runway, both arms keep at
    # least the runway's even share regardless of the adaptive tail.
    config = AdaptiveConfig(total_uses=100, steps=1, runway=90)
    record = run_adaptive((0.4, 0.1), config, rng=np.random.default_rng(3))
    assert record.uses1 >= 45
    assert record.uses2 >= 45
    assert record.uses1 + record.uses2 == 100


def test_run_adaptive_handles_pure_arms():
    # At eps = (0, 1) both arms always succeed, the spread estimates vanish
    # after the first step, and the scheme falls back to even splits.
    config = AdaptiveConfig(total_uses=40, steps=4)
    record = run_adaptive((0.0, 1.0), config, rng=np.random.default_rng(1))
    assert record.estimate == 0.0
    assert record.lambda_trace[1:] == (0.0, 0.0, 0.0)


def test_batches_match_scalar_paths_in_law():
    # The vectorized batch and the scalar loop use the same update rule, so
    # their Monte Carlo means agree within sampling error.
    point = theta_to_eps(0.3, 0.1)
    config = AdaptiveConfig(total_uses=60, steps=3)
    estimates, lambda_eff = _adaptive_batch(
        point, config, 4000, np.random.default_rng(17)
    )
    assert estimates.shape == (4000,)
    assert np.all((lambda_eff >= -1.0) & (lambda_eff <= 1.0))
    rng = np.random.default_rng(18)
    scalar = np.array(
        [run_adaptive(point, config, rng=rng).estimate for _ in range(1500)]
    )
    se = math.hypot(
        estimates.std(ddof=1) / math.sqrt(len(estimates)),
        scalar.std(ddof=1) / math.sqrt(len(scalar)),
    )
    assert abs(estimates.mean() - scalar.mean()) < 4.0 * se


def test_static_batch_guards_empty_arm():
    with pytest.raises(EstimatorError):
        _static_batch((0.0, 0.5), 1, 100, np.random.default_rng(0))


def test_mse_ratio_reproducible():
    config = AdaptiveConfig(total_uses=200, steps=10)
    first = mse_ratio((0.3, 0.5), config, replicas=500, seed=21)
    second = mse_ratio((0.3, 0.5), config, replicas=500, seed=21)
    assert first == second
    assert isinstance(first, MseRatioResult)
    with pytest.raises(ValidationError):
        mse_ratio((0.3, 0.5), config, replicas=50)


def test_mse_ratio_symmetric_point_near_one():
    # At eps1 = 0 the two arms are exchangeable, the optimal split is even,
    # and adaptation can only add noise; the ratio sits near one.
    config = AdaptiveConfig(total_uses=200, steps=10)
    result = mse_ratio((0.0, 0.0), config, replicas=2000, seed=5)
    assert abs(result.ratio - 1.0) < 4.0 * result.standard_error
    assert abs(result.mean_lambda_eff) < 0.05


def test_sweep_point_matches_mse_ratio():
    config = AdaptiveConfig(total_uses=80, steps=4)
    row = _sweep_point((0, 0, 0.3, 0.1, config, 400, 13))
    reference = mse_ratio(theta_to_eps(0.3, 0.1), config, replicas=400, seed=13)
    assert row.mse_static == reference.mse_static
    assert row.mse_adapt == reference.mse_adapt
    assert row.ratio == reference.ratio
    assert row.log10_ratio_theta == pytest.approx(math.log10(3.0))
    assert row.noise_bin == pytest.approx(0.4)


def test_theta_grid_axis_values():
    grid = ThetaGrid(step=0.25)
    assert_allclose(grid.axis_values(), (0.25, 0.5, 0.75), atol=1e-14)
    augmented = ThetaGrid(step=0.25, extra_values=(0.5, 0.33))
    assert_allclose(augmented.axis_values(), (0.25, 0.33, 0.5, 0.75), atol=1e-14)


def test_theta_grid_validation():
    with pytest.raises(ValidationError):
        ThetaGrid(step=0.0)
    with pytest.raises(ValidationError):
        ThetaGrid(step=1.0)
    with pytest.raises(ValidationError):
        ThetaGrid(step=0.25, extra_values=(1.2,))


def test_theta_grid_indexed_points():
    grid = ThetaGrid(step=0.25)
    valid, skipped = grid.indexed_points()
    assert len(valid) == 6
    assert set(skipped) == {(0.5, 0.75), (0.75, 0.5), (0.75, 0.75)}
    low_grid = ThetaGrid(step=0.25, low_noise_only=True)
    low, skipped_low = low_grid.indexed_points()
    assert low == [(0, 0, 0.25, 0.25)]
    assert set(skipped_low) == set(skipped)


def test_sweep_row_fields_define_csv_header():
    assert SweepRow._fields == (
        "theta1",
        "theta2",
        "eps1",
        "eps2",
        "log10_ratio_theta",
        "noise_bin",
        "mse_static",
        "mse_adapt",
        "ratio",
        "se_ratio",
    )


def test_sweep_result_csv_roundtrip():
    config = AdaptiveConfig(total_uses=40, steps=2)
    result = grid_sweep(ThetaGrid(step=0.4), config, replicas=200, seed=11)
    buffer = io.StringIO()
    result.to_csv(buffer)
    lines = buffer.getvalue().strip().splitlines()
    assert lines[0] == ",".join(SweepRow._fields)
    parsed = [float(v) for v in lines[1].split(",")]
    assert_allclose(parsed, list(result.rows[0]), rtol=1e-11)


def test_grid_sweep_matches_single_point():
    config = AdaptiveConfig(total_uses=40, steps=2)
    result = grid_sweep(ThetaGrid(step=0.4), config, replicas=200, seed=11)
    assert len(result.rows) == 1
    assert set(result.skipped) == {(0.4, 0.8), (0.8, 0.4), (0.8, 0.8)}
    reference = mse_ratio(theta_to_eps(0.4, 0.4), config, replicas=200, seed=11)
    assert result.rows[0].mse_static == reference.mse_static
    assert result.rows[0].mse_adapt == reference.mse_adapt


def test_grid_sweep_empty_domain():
    config = AdaptiveConfig(total_uses=40, steps=2)
    with pytest.raises(ValidationError):
        grid_sweep(ThetaGrid(step=0.6), config, replicas=200, seed=1)
    with pytest.raises(ValidationError):
        grid_sweep(ThetaGrid(step=0.4), config, replicas=50, seed=1)


def test_grid_sweep_parallel_matches_serial():
    config = AdaptiveConfig(total_uses=40, steps=2)
    grid = ThetaGrid(step=0.3)
    serial = grid_sweep(grid, config, replicas=200, seed=3, jobs=1)
    parallel = grid_sweep(grid, config, replicas=200, seed=3, jobs=2)
    assert serial.rows == parallel.rows
    assert serial.skipped == parallel.skipped
