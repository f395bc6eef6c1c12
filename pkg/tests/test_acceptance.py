"""Acceptance suite: ten criteria, one printed pass/fail line each.

Defaults: T = 1, N = 200, M = 1e5, groups SO(3) and the circle, base seeds
{7, 11, 13} (the cheap machine-precision suites run at all three seeds,
the Monte Carlo campaigns at the base seed).
"""

import numpy as np
import pytest

from pathrep.verify import make_cfg, run_selected

SEEDS = (7, 11, 13)
_CACHE = {}


def reports_for(group, suite=None, pattern=None, seed=7):
    key = (group, suite, pattern, seed)
    if key not in _CACHE:
        cfg = make_cfg(group=group, seed=seed)
        _CACHE[key] = run_selected(cfg, suite=suite, pattern=pattern)
    return _CACHE[key]


def check(capsys, number, label, reports):
    assert reports, f"criterion {number}: no reports produced"
    bad = [r for r in reports if r.verdict != "pass"]
    verdict = "PASS" if not bad else "FAIL"
    with capsys.disabled():
        print(f"criterion {number:2d} [{label}]: {verdict} ({len(reports)} checks)")
    for r in bad:
        print(r.summary_line(), r.notes)
    assert not bad, f"criterion {number} failed: {[r.identity for r in bad]}"


def test_criterion_1_exact_pathwise(capsys):
    reports = []
    for group in ("so3", "torus"):
        for seed in SEEDS:
            reports += reports_for(group, suite="exact", seed=seed)
    check(capsys, 1, "exact pathwise identities", reports)


def test_criterion_2_symbolic(capsys):
    reports = []
    for group in ("so3", "torus"):
        reports += [
            r
            for r in reports_for(group, suite="symbolic")
            if not r.identity.startswith("symbolic/intertwining")
        ]
    check(capsys, 2, "symbolic transform identities", reports)


def test_criterion_3_girsanov(capsys):
    reports = []
    for group in ("so3", "torus"):
        reports += reports_for(group, pattern="girsanov/*")
    reports += reports_for("so3", pattern="convergence/quasi-invariance-order")
    check(capsys, 3, "Girsanov martingales and quasi-invariance", reports)


def test_criterion_4_half_density(capsys):
    reports = []
    for group in ("so3", "torus"):
        reports += reports_for(group, pattern="halfdensity/*")
    check(capsys, 4, "half-density closed forms", reports)


def test_criterion_5_non_trace(capsys):
    reports = []
    for group in ("so3", "torus"):
        reports += reports_for(group, pattern="nontrace/*")
    check(capsys, 5, "non-trace witness", reports)


def test_criterion_6_heat_kernel(capsys):
    reports = reports_for("torus", pattern="heatkernel/fdd-chi-square")
    for group in ("so3", "torus"):
        reports = reports + reports_for(group, pattern="heatkernel/chapman-kolmogorov")
        reports = reports + reports_for(group, pattern="heatkernel/trace-moment")
    check(capsys, 6, "heat-kernel distributions", reports)


def test_criterion_7_intertwining(capsys):
    reports = list(reports_for("torus", pattern="symbolic/intertwining"))
    reports += reports_for("so3", pattern="symbolic/intertwining")
    reports += reports_for("so3", pattern="intertwining/pathwise")
    reports += reports_for("so3", pattern="convergence/intertwining-order")
    check(capsys, 7, "unitary intertwining and phase selection", reports)


def test_criterion_8_cyclicity(capsys):
    reports = reports_for("so3", pattern="cyclicity/*")
    check(capsys, 8, "cyclicity of the constant function", reports)


def test_criterion_9_quadratic_variation(capsys):
    reports = []
    for group in ("so3", "torus"):
        reports += reports_for(group, pattern="qv/*")
        reports += reports_for(group, pattern="exact/qv-rotation")
    check(capsys, 9, "quadratic variation", reports)


def test_criterion_10_martingale_property(capsys):
    reports = []
    for group in ("so3", "torus"):
        reports += reports_for(group, pattern="martingale/*")
    reports += reports_for("so3", pattern="convergence/martingale-order")
    check(capsys, 10, "compensated coordinate martingales", reports)
