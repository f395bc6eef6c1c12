import numpy as np
import pytest

from pathrep.mc import (
    EstimatorState,
    EstimatorError,
    LadderResult,
    bias_ladder,
    run_estimator,
    run_stream,
    simple_task,
)


def test_welford_merge_matches_direct():
    rng = np.random.default_rng(0)
    x = rng.standard_normal(10000) * 2.0 + 1.0
    a, b = EstimatorState(), EstimatorState()
    a.update_batch(x[:3000])
    b.update_batch(x[3000:])
    merged = a.merge(b)
    assert merged.count == len(x)
    assert merged.mean == pytest.approx(x.mean(), abs=1e-12)
    assert merged.variance == pytest.approx(x.var(ddof=1), abs=1e-12)
    assert merged.vmin == pytest.approx(x.min())
    assert merged.vmax == pytest.approx(x.max())


def test_merge_associative():
    rng = np.random.default_rng(1)
    parts = [rng.standard_normal(100) for _ in range(3)]
    states = []
    for p in parts:
        s = EstimatorState()
        s.update_batch(p)
        states.append(s)
    left = states[0].merge(states[1]).merge(states[2])
    right = states[0].merge(states[1].merge(states[2]))
    assert abs(left.mean - right.mean) < 1e-12
    assert abs(left.m2 - right.m2) < 1e-9


def test_complex_mean():
    s = EstimatorState()
    s.update_batch(np.array([1 + 1j, 1 - 1j, 1 + 0j]))
    assert s.mean == pytest.approx(1.0 + 0j)


def test_run_estimator_constant_and_failures():
    st = run_estimator(simple_task(lambda s, c: np.full(c, 3.5)), 1000)
    assert st.mean == pytest.approx(3.5)
    assert st.stderr == pytest.approx(0.0, abs=1e-15)

    def flaky(start, count):
        return np.ones(count - 1), 1

    with pytest.raises(EstimatorError):
        run_estimator(flaky, 1000)


def test_run_stream_batch_size_invariance():
    def make_values(start, count):
        rng = np.random.default_rng(start)  # deterministic per start
        return {"x": np.arange(start, start + count, dtype=float)}

    a = run_stream(make_values, 2048, batch=256)
    b = run_stream(make_values, 2048, batch=2048)
    assert a["x"].mean == b["x"].mean
    assert a["x"].m2 == b["x"].m2


def test_bias_ladder_fits_order_one():
    def gap_fn(factor):
        return 0.01 * factor, 1e-5

    res = bias_ladder(gap_fn, [1, 2, 4, 8])
    assert not res.noise_limited
    assert res.slope == pytest.approx(1.0, abs=1e-6)
    assert res.verdict(1.0)


def test_bias_ladder_noise_limited():
    def gap_fn(factor):
        return 1e-14, 1e-3

    res = bias_ladder(gap_fn, [1, 2, 4])
    assert res.noise_limited
    assert res.verdict(1.0)
