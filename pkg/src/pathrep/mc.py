"""Streaming Monte Carlo engine with deterministic chunked aggregation.

Estimates are accumulated per chunk with Welford updates and combined with
the pairwise (Chan et al.) merge in chunk order, so the result is bit-for-
bit independent of how chunks are assigned to workers.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .flow import CHUNK


class EstimatorError(RuntimeError):
    pass


@dataclass
class EstimatorState:
    """Streaming moments of a scalar (possibly complex) sample stream."""

    count: int = 0
    mean: complex = 0.0
    m2: float = 0.0  # sum of |x - mean|^2
    vmin: float = np.inf
    vmax: float = -np.inf
    failures: int = 0

    def update_batch(self, x: np.ndarray) -> None:
        x = np.asarray(x)
        n = len(x)
        if n == 0:
            return
        bmean = complex(x.mean())
        bm2 = float(np.sum(np.abs(x - bmean) ** 2))
        self._merge_raw(n, bmean, bm2)
        real = np.real(x)
        self.vmin = min(self.vmin, float(real.min()))
        self.vmax = max(self.vmax, float(real.max()))

    def merge(self, other: "EstimatorState") -> "EstimatorState":
        out = EstimatorState(
            self.count,
            self.mean,
            self.m2,
            min(self.vmin, other.vmin),
            max(self.vmax, other.vmax),
            self.failures + other.failures,
        )
        out._merge_raw(other.count, other.mean, other.m2)
        return out

    def _merge_raw(self, n: int, bmean: complex, bm2: float) -> None:
        if n == 0:
            return
        total = self.count + n
        delta = bmean - self.mean
        self.m2 = self.m2 + bm2 + abs(delta) ** 2 * self.count * n / total
        self.mean = self.mean + delta * n / total
        self.count = total

    @property
    def variance(self) -> float:
        return self.m2 / (self.count - 1) if self.count > 1 else np.inf

    @property
    def stderr(self) -> float:
        return float(np.sqrt(self.variance / self.count)) if self.count > 1 else np.inf

    def failure_rate(self) -> float:
        denom = self.count + self.failures
        return self.failures / denom if denom else 0.0


def _pairwise_merge(states: list) -> EstimatorState:
    while len(states) > 1:
        nxt = []
        for i in range(0, len(states) - 1, 2):
            nxt.append(states[i].merge(states[i + 1]))
        if len(states) % 2:
            nxt.append(states[-1])
        states = nxt
    return states[0]


def run_estimator(task, n_samples: int, max_failure_rate: float = 1e-3) -> EstimatorState:
    """Evaluate task(start, count) -> samples over chunked index ranges.

    The task may raise on individual chunks only via returning fewer samples
    together with a failure count: it should return (values, n_failed).
    Chunks are CHUNK wide; partial last chunk allowed.  Aggregation is a
    chunk-ordered pairwise tree, invariant under worker partitioning.
    """
    states = []
    start = 0
    while start < n_samples:
        count = min(CHUNK, n_samples - start)
        values, failed = task(start, count)
        st = EstimatorState()
        st.update_batch(values)
        st.failures = failed
        states.append(st)
        start += count
    out = _pairwise_merge(states)
    if out.failure_rate() > max_failure_rate:
        raise EstimatorError(
            f"failure rate {out.failure_rate():.2e} exceeds {max_failure_rate:.0e}"
        )
    return out


def simple_task(fn):
    """Wrap a plain (start, count) -> values function as an infallible task."""

    def task(start, count):
        return fn(start, count), 0

    return task


def run_stream(make_values, n_samples: int, batch: int = 2048) -> dict:
    """Accumulate several named sample streams over one pass of the noise.

    make_values(start, count) -> {name: values (count,)} is called on
    chunk-aligned batches; per-CHUNK states are merged with the pairwise
    tree, so results are independent of the batch size used here.
    """
    batch = max(CHUNK, (batch // CHUNK) * CHUNK)
    states: dict = {}
    start = 0
    while start < n_samples:
        count = min(batch, n_samples - start)
        values = make_values(start, count)
        for name, vals in values.items():
            lst = states.setdefault(name, [])
            for lo in range(0, count, CHUNK):
                st = EstimatorState()
                st.update_batch(np.asarray(vals)[lo : lo + CHUNK])
                lst.append(st)
        start += count
    return {name: _pairwise_merge(lst) for name, lst in states.items()}


# -- discretization-bias ladders -------------------------------------------


@dataclass(frozen=True)
class LadderResult:
    factors: np.ndarray
    gaps: np.ndarray
    stderrs: np.ndarray
    slope: float
    noise_limited: bool

    def verdict(self, expected_order: float = 1.0, slope_tol: float = 0.4) -> bool:
        if self.noise_limited:
            return True
        return abs(self.slope - expected_order) <= slope_tol


def bias_ladder(gap_fn, factors) -> LadderResult:
    """Fit the discretization order from coarsening factors.

    gap_fn(factor) -> (mean gap to the reference, stderr); factors are the
    coarsening multiples of the finest grid (1 = finest).  If the finest gap
    is within 3 stderr of zero, the ladder is reported as noise-limited and
    no slope is enforced.
    """
    factors = np.asarray(sorted(factors))
    gaps, errs = [], []
    for f in factors:
        g, e = gap_fn(int(f))
        gaps.append(g)
        errs.append(e)
    gaps = np.asarray(gaps)
    errs = np.asarray(errs)
    noise_limited = abs(gaps[0]) <= 3.0 * errs[0]
    usable = np.abs(gaps) > 3.0 * errs
    if usable.sum() >= 2:
        slope = float(
            np.polyfit(np.log(factors[usable]), np.log(np.abs(gaps[usable])), 1)[0]
        )
    else:
        slope = np.nan
    return LadderResult(factors, gaps, errs, slope, bool(noise_limited))
