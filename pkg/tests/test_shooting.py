import math

import numpy as np
import pytest
from scipy import integrate

from ptspec.basis import oscillator_table
from ptspec.errors import NoConvergence
from ptspec.model import ProblemParams
from ptspec.oracle import real_roots, secular_spectrum
from ptspec.shooting import (ShootingState, newton, residual, solve, unperturbed_state,
                             wavefunction)


@pytest.mark.parametrize("n", [0, 1, 2, 7, 30, 89])
def test_unperturbed_levels(n):
    pt = solve(unperturbed_state(n), ProblemParams(gamma=0.0, b=0.2), n)
    assert abs(pt.mu - (2 * n + 1)) < 1e-8
    assert pt.state.is_symmetric


def test_symmetric_states_match_secular_roots():
    p = ProblemParams(gamma=0.3, b=0.2)
    roots = real_roots(p, 0.0, 22.0)
    for n in range(10):
        pt = solve(unperturbed_state(n), p, n)
        assert pt.mu.imag == 0.0
        assert abs(pt.mu.real - roots[n]) < 1e-8


def test_complex_pair_matches_secular_roots():
    p = ProblemParams(gamma=3.0, b=0.2)
    ref = secular_spectrum(p, 2)
    up = solve(ShootingState(0.7, 0.3, 1.0, 2.7, 0.3), p, symmetric=False)
    assert abs(up.mu - ref[1]) < 1e-9
    down = solve(up.state.pt_partner(), p, symmetric=False)
    assert abs(down.mu - up.mu.conjugate()) < 1e-9
    assert abs(down.mu - ref[0]) < 1e-9


def test_converged_residual_is_small():
    p = ProblemParams(gamma=0.9, b=1.0)
    pt = solve(unperturbed_state(3), p, 3)
    assert np.linalg.norm(residual(pt.state, p)) < 1e-9


@pytest.mark.parametrize("n", [0, 3, 12])
def test_x_max_insensitivity(n):
    p = ProblemParams(gamma=0.8, b=1.0)
    base = solve(unperturbed_state(n), p, n)
    xm = p.resolve_x_max(base.mu.real)
    wider = solve(base.state, p.replace(x_max=xm + 2.0), n)
    assert abs(wider.mu - base.mu) < 1e-9


def test_normalized_wavefunction():
    p = ProblemParams(gamma=1.2, b=0.5)
    pt = solve(unperturbed_state(2), p, 2)
    x, psi = wavefunction(pt.state, p)
    assert integrate.simpson(np.abs(psi) ** 2, x=x) == pytest.approx(1.0, abs=1e-7)
    # PT symmetry of the eigenfunction: psi(-x) = conj(psi(x)) up to the gauge
    assert np.max(np.abs(psi[::-1] - psi.conj())) < 1e-8


@pytest.mark.parametrize("n", [0, 3])
def test_weak_nonlinearity_first_order(n):
    # mu(g) - (2n + 1) -> g int psi_n^4 for small g
    g = 1e-3
    pt = solve(unperturbed_state(n), ProblemParams(gamma=0.0, b=1.0, g=g), n)
    x = np.linspace(-12, 12, 24001)
    quartic = integrate.simpson(oscillator_table(n, x)[n] ** 4, x=x)
    assert (pt.mu.real - (2 * n + 1)) / g == pytest.approx(quartic, rel=5e-3)


def test_newton_reports_failure():
    with pytest.raises(NoConvergence):
        newton(lambda z: np.array([z[0] ** 2 + 1.0]), np.array([0.3]), max_iter=5)
