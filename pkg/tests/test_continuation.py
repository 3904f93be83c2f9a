import math

import numpy as np
import pytest

from ptspec.continuation import (BranchKind, Classification, classify, locate_branch_point,
                                 sweep_g, sweep_gamma)
from ptspec.errors import NotABranchPoint
from ptspec.model import ProblemParams
from ptspec.oracle import exceptional_points, real_roots, secular_spectrum

GRID = np.round(np.arange(0.0, 3.0001, 0.1), 10)


@pytest.fixture(scope="module")
def low_pair():
    params = ProblemParams(b=0.2)
    return params, sweep_gamma([0, 1], GRID, params)


def test_coalescence_matches_oracle(low_pair):
    _, (p0, p1) = low_pair
    ep = exceptional_points(0.2, 0.0, 8.0, gamma_max=3.0)[0]
    for path in (p0, p1):
        assert path.classification is Classification.FRAGILE
        (ev,) = path.branch_events
        assert ev.kind is BranchKind.COALESCENCE
        assert ev.partner_labels == (0, 1)
        assert abs(ev.gamma_c - ep.gamma_c) < 1e-8
        assert abs(ev.mu_c.real - ep.mu_c) < 1e-5
        assert 0.4 <= ev.beta <= 0.6


def test_grid_points_match_secular_roots(low_pair):
    params, (p0, p1) = low_pair
    assert len(p0.points) == len(p1.points) == GRID.size
    for gamma in (0.5, 1.5, 2.5):
        roots = real_roots(params.replace(gamma=gamma), 0.0, 6.0)
        assert abs(p0.at(gamma).mu - roots[0]) < 1e-8
        assert abs(p1.at(gamma).mu - roots[1]) < 1e-8
    ref = secular_spectrum(params.replace(gamma=3.0), 2)
    a, b = p0.at(3.0).mu, p1.at(3.0).mu
    assert abs(a - b.conjugate()) < 1e-9
    assert min(abs(a - ref[0]), abs(a - ref[1])) < 1e-8
    # the lower label takes the +Im member
    assert a.imag > 0


def test_locate_branch_point(low_pair):
    params, (p0, p1) = low_pair
    bp = locate_branch_point(p0, p1, (2.6, 2.7), params)
    assert bp.kind is BranchKind.COALESCENCE and bp.partner_labels == (0, 1)
    assert bp.gamma_c == pytest.approx(2.680562012128, abs=1e-8)
    with pytest.raises(NotABranchPoint):
        locate_branch_point(p0, p1, (1.0, 1.5), params)


def test_robust_ground_state_outside_turning_point():
    (path,) = sweep_gamma([0], np.linspace(0.0, 2.0, 5), ProblemParams(b=math.sqrt(7)))
    assert path.classification is Classification.ROBUST
    assert classify(path) is Classification.ROBUST
    assert np.max(np.abs(path.mus.imag)) < 1e-8


def test_grid_validation():
    with pytest.raises(ValueError):
        sweep_gamma([0], [0.0, 0.5, 0.4], ProblemParams(b=1.0))
    with pytest.raises(ValueError):
        sweep_gamma([0], [], ProblemParams(b=1.0))


def test_g_continuation_of_start_values():
    pts = sweep_g([0, 3], 5.0, ProblemParams(b=1.0))
    # values reached by the g sweep at gamma = 0 (b plays no role there)
    assert pts[0].mu.real == pytest.approx(2.6898, abs=1e-3)
    assert pts[3].mu.real == pytest.approx(8.1110, abs=1e-3)
    again = sweep_g([0], 5.0, ProblemParams(b=2.0))
    assert abs(again[0].mu - pts[0].mu) < 1e-9


def test_nonlinear_complex_branch_before_fold():
    grid = np.round(np.arange(0.0, 2.5001, 0.1), 10)
    paths = sweep_gamma([0, 1], grid, ProblemParams(b=1.0, g=5.0))
    main1 = next(p for p in paths if p.n_label == 1 and p.branch == "main")
    kinds = [e.kind for e in main1.branch_events]
    assert kinds[0] is BranchKind.SYMMETRY_BREAKING
    fold = next(e for e in main1.branch_events if e.kind is BranchKind.COALESCENCE)
    assert main1.branch_events[0].gamma_c < fold.gamma_c
    plus = next(p for p in paths if p.n_label == 1 and p.branch == "+")
    minus = next(p for p in paths if p.n_label == 1 and p.branch == "-")
    assert plus.points and all(p.mu.imag > 0 for p in plus.points[1:])
    for a, b in zip(plus.points, minus.points):
        assert abs(a.mu - b.mu.conjugate()) < 1e-9
    # the real nonlinear path ends at the fold
    assert max(p.gamma for p in main1.points) < fold.gamma_c
