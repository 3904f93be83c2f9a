import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ptspec.errors import NoConvergenceQR
from ptspec.model import ProblemParams
from ptspec.oracle import (build, eigenvalues, exceptional_points, gamma_squared, real_roots,
                           reference_spectrum, secular_function, secular_real,
                           truncation_check)


def test_hermitian_limit():
    vals = eigenvalues(build(ProblemParams(gamma=0.0, b=0.2), 60))
    assert np.array_equal(vals.real, 2.0 * np.arange(60) + 1)


def test_matrix_is_complex_symmetric():
    assert build(ProblemParams(gamma=1.0, b=0.7), 50).is_complex_symmetric()


def test_dense_size_limit():
    with pytest.raises(ValueError):
        eigenvalues(build(ProblemParams(gamma=1.0, b=0.7), 401))
    assert issubclass(NoConvergenceQR, Exception)


@pytest.mark.parametrize("n", range(6))
def test_secular_zeros_at_gamma_zero(n):
    assert abs(secular_function(2 * n + 1, 0.7, 0.0)) < 1e-25


@settings(max_examples=40, deadline=None)
@given(mu=st.floats(-3.0, 120.0), b=st.floats(0.1, 3.0), gamma=st.floats(0.0, 5.0))
def test_double_precision_secular_agrees_with_mpmath(mu, b, gamma):
    ref = float(secular_function(mu, b, gamma))
    scale = abs(float(secular_function(mu, b, 0.0))) + gamma ** 2 * abs(
        float(secular_function(mu, b, 1.0) - secular_function(mu, b, 0.0))) + 1e-300
    assert abs(float(secular_real(mu, b, gamma)) - ref) <= 1e-9 * scale


@pytest.mark.parametrize("b,gamma", [(0.2, 0.3), (1.0, 1.0), (0.2, 3.0)])
def test_dense_and_secular_routes_agree(b, gamma):
    p = ProblemParams(gamma=gamma, b=b, basis_cutoff=200)
    dense = reference_spectrum(p, 20, refine=False)
    exact = reference_spectrum(p, 20)
    # the dense route carries a truncation error of order 1e-2; near a branch
    # point that error is amplified, so compare only away from it
    for mu in exact[exact.real > 20.0]:
        assert np.min(np.abs(dense - mu)) < 3e-2
    for mu in exact:
        assert abs(complex(secular_function(mu, b, gamma))) < 1e-8 * abs(
            complex(secular_function(mu + 0.5, b, gamma)))


def test_spectrum_closed_under_conjugation():
    p = ProblemParams(gamma=4.5, b=0.2)
    for vals in (eigenvalues(build(p, 150)), reference_spectrum(p, 30)):
        for v in vals[:28]:
            assert np.min(np.abs(vals - v.conjugate())) < 1e-9


def test_refined_truncation_drift():
    p = ProblemParams(gamma=0.3, b=0.2)
    assert truncation_check(p, 120, 30) < 1e-7
    assert truncation_check(p, 120, 30, refine=False) > 1e-5


def test_real_roots_sit_on_level_set():
    p = ProblemParams(gamma=1.5, b=1.0)
    for mu in real_roots(p, 0.0, 30.0):
        assert gamma_squared(mu, 1.0) == pytest.approx(2.25, rel=1e-9)


def test_first_exceptional_point_is_double_root():
    ep = exceptional_points(0.2, 0.0, 8.0, gamma_max=5.0)[0]
    assert ep.kind == "coalescence"
    assert ep.gamma_c == pytest.approx(2.6805620121, abs=1e-8)
    # two real roots just below gamma_c, none just above
    below = real_roots(ProblemParams(gamma=ep.gamma_c - 1e-4, b=0.2), ep.mu_c - 0.5,
                       ep.mu_c + 0.5, spacing=1e-4)
    above = real_roots(ProblemParams(gamma=ep.gamma_c + 1e-4, b=0.2), ep.mu_c - 0.5,
                       ep.mu_c + 0.5, spacing=1e-4)
    assert below.size == 2 and above.size == 0
    assert abs(float(secular_function(ep.mu_c, 0.2, ep.gamma_c))) < 1e-12
