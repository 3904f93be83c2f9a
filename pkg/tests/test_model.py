import math

import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from ptspec.errors import ConfigError
from ptspec.model import (Parity, ProblemParams, classical_turning_point, tail_action,
                          tail_point, unperturbed_spectrum)


def test_unperturbed_ladder():
    levels = unperturbed_spectrum(89)
    assert [lv.mu for lv in levels] == [2.0 * n + 1 for n in range(90)]
    assert all((lv.parity is Parity.EVEN) == (lv.n % 2 == 0) for lv in levels)


def test_turning_point_of_level():
    assert classical_turning_point(0) == 1.0
    assert classical_turning_point(3) == math.sqrt(7)
    with pytest.raises(ValueError):
        classical_turning_point(-1)


@pytest.mark.parametrize("kwargs", [
    dict(b=0.0), dict(b=-1.0), dict(g=-0.1), dict(b=1.0, x_max=5.0), dict(basis_cutoff=1),
    dict(h_target=0.0),
])
def test_invalid_params(kwargs):
    with pytest.raises(ConfigError):
        ProblemParams(**kwargs)


def test_basis_cutoff_covers_levels():
    p = ProblemParams(basis_cutoff=120)
    p.check_levels(60)
    with pytest.raises(ConfigError):
        p.check_levels(61)


@pytest.mark.parametrize("b", [0.2, 0.897, 1.0, math.sqrt(7)])
def test_step_puts_even_node_count_on_delta(b):
    p = ProblemParams(b=b)
    for mu in (1.0, 59.0, 179.0):
        h = p.step_for(mu)
        m = b / h
        assert abs(m - round(m)) < 1e-9 and round(m) % 2 == 0
        assert h <= p.h_target
    assert p.step_for(179.0) < p.step_for(59.0) == p.step


def test_x_max_rule():
    p = ProblemParams(b=1.0)
    for mu in (1.0, 11.0, 179.0):
        xm = p.resolve_x_max(mu)
        assert xm >= p.b + 4.5
        assert tail_action(xm, mu) >= 20.0 - 1e-9
    assert ProblemParams(b=1.0, x_max=7.0).resolve_x_max(179.0) == 7.0


@settings(max_examples=40, deadline=None)
@given(mu=st.floats(0.5, 200.0), action=st.floats(0.5, 30.0))
def test_tail_point_inverts_action(mu, action):
    x = tail_point(mu, action)
    assert x > math.sqrt(mu)
    assert tail_action(x, mu) == pytest.approx(action, rel=1e-9)


@pytest.mark.parametrize("mu,x", [(7.0, 4.0), (51.0, 9.0)])
def test_tail_action_is_wkb_integral(mu, x):
    ref, _ = integrate.quad(lambda t: math.sqrt(t * t - mu), math.sqrt(mu), x)
    assert tail_action(x, mu) == pytest.approx(ref, rel=1e-10)
