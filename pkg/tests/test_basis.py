import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate, special

from ptspec.basis import (eval_oscillator_fn, matrix_element, ms_bound_scan, oscillator_table,
                          perturbation_matrix)
from ptspec.model import ProblemParams


def _closed_form(n, x):
    norm = 1.0 / math.sqrt(2.0 ** n * math.factorial(n) * math.sqrt(math.pi))
    return norm * special.eval_hermite(n, x) * math.exp(-x * x / 2)


@settings(max_examples=60, deadline=None)
@given(n=st.integers(0, 30), x=st.floats(-6.0, 6.0))
def test_recurrence_matches_hermite_closed_form(n, x):
    assert eval_oscillator_fn(n, x) == pytest.approx(_closed_form(n, x), rel=1e-10, abs=1e-14)


def test_orthonormal_by_quadrature():
    x = np.linspace(-16, 16, 16001)
    tab = oscillator_table(40, x)
    gram = integrate.simpson(tab[:, None, :] * tab[None, :, :], x=x, axis=-1)
    assert np.max(np.abs(gram - np.eye(41))) < 1e-10


def test_large_index_is_finite_and_bounded():
    tab = oscillator_table(400, np.array([0.0, 0.2, 1.0, 20.0, 40.0]))
    assert np.all(np.isfinite(tab))
    # |psi_n(x)| <= pi^{-1/4}
    assert np.max(np.abs(tab)) <= math.pi ** -0.25 + 1e-12


def test_matrix_element_parity_and_symmetry():
    p = ProblemParams(gamma=0.7, b=0.9)
    assert matrix_element(2, 4, p) == 0
    assert matrix_element(3, 5, p) == 0
    v = matrix_element(2, 5, p)
    assert v == matrix_element(5, 2, p)
    expected = 1j * 0.7 * (_closed_form(2, 0.9) * _closed_form(5, 0.9)
                           - _closed_form(2, -0.9) * _closed_form(5, -0.9))
    assert v == pytest.approx(expected, rel=1e-12)
    m = perturbation_matrix(12, p)
    assert np.array_equal(m, m.T)
    assert m[2, 5] == pytest.approx(v, rel=1e-12)


@pytest.mark.parametrize("b", [0.2, 1.0, math.sqrt(7)])
def test_ms_bound(b):
    rep = ms_bound_scan(89, ProblemParams(gamma=1.0, b=b))
    assert math.isfinite(rep.C_tilde) and rep.C_tilde > 0
    assert rep.all_valid_satisfied
    assert rep.parity_zero
    assert rep.M_const == pytest.approx(2 * rep.C_tilde ** 2)
