"""Outward RK4 integration of the stationary GPE with delta-function jumps.

The first-order system (psi, psi')' = (psi', (x^2 + g|psi|^2 - mu) psi) is
advanced from x = 0 towards +x_max or -x_max with a fixed step that puts a
mesh node exactly on the delta.  Crossing a delta in the direction of travel
adds i*gamma*psi to psi' on both sides (the signs of the delta strength and
of the traversal direction cancel).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numba
import numpy as np

from .errors import IntegrationOverflow, StepMisaligned
from .model import ProblemParams, tail_point

GUARD = 1e10
#: WKB action beyond which the cubic term is dropped.  A bound state has
#: |psi|^2 < e^{-12} there, while an off-eigenvalue trajectory would
#: otherwise blow up at finite x once its growing part reaches O(1).
NONLINEAR_ACTION = 6.0


class Direction(int, Enum):
    PLUS = 1
    MINUS = -1


@dataclass(frozen=True)
class WaveState:
    x: float
    psi: complex
    dpsi: complex


@dataclass(frozen=True)
class IntegrationResult:
    terminal: WaveState
    norm_contribution: float
    max_magnitude: float
    # (dpsi before, dpsi after) at the delta, for diagnostics
    jump: tuple[complex, complex] | None = None
    x: np.ndarray | None = None
    psi: np.ndarray | None = None
    dpsi: np.ndarray | None = None


@numba.njit(cache=True)
def _tail_action(x, mu):
    if mu <= 1e-12:
        return 0.5 * x * x
    if x * x <= mu:
        return 0.0
    s = math.sqrt(x * x - mu)
    return 0.5 * (x * s - mu * math.log((x + s) / math.sqrt(mu)))


@numba.njit(cache=True)
def _kernel(psi0, dpsi0, mu, gamma, g, h, n_steps, n_delta, n_norm, n_nl, sign, guard, record,
            xs, ps, dps):
    """Returns (psi, dpsi, norm, max|psi|, status, dpsi_pre, dpsi_post, psi_c, dpsi_c).

    The Simpson norm covers the first ``n_norm`` (even) steps; psi_c, dpsi_c
    are the values at that node.  The cubic term acts on the first ``n_nl``
    steps only.  status: 0 ok, 1 overflow.
    """
    p = psi0
    dp = dpsi0
    s = sign * h
    re_mu = mu.real
    start = math.sqrt(abs(psi0) ** 2 + abs(dpsi0) ** 2)
    limit = guard * max(start, 1e-300)
    w = p.real * p.real + p.imag * p.imag
    acc = w
    peak = abs(p)
    pre = 0j
    post = 0j
    pc = p
    dpc = dp
    if record:
        xs[0] = 0.0
        ps[0] = p
        dps[0] = dp
    for k in range(n_steps):
        if k == n_nl:
            g = 0.0
        x = k * s
        xm = x + 0.5 * s
        x1 = x + s
        v0 = x * x - mu
        vm = xm * xm - mu
        v1 = x1 * x1 - mu
        k1p = dp
        k1d = (v0 + g * (p.real * p.real + p.imag * p.imag)) * p
        p2 = p + 0.5 * s * k1p
        k2p = dp + 0.5 * s * k1d
        k2d = (vm + g * (p2.real * p2.real + p2.imag * p2.imag)) * p2
        p3 = p + 0.5 * s * k2p
        k3p = dp + 0.5 * s * k2d
        k3d = (vm + g * (p3.real * p3.real + p3.imag * p3.imag)) * p3
        p4 = p + s * k3p
        k4p = dp + s * k3d
        k4d = (v1 + g * (p4.real * p4.real + p4.imag * p4.imag)) * p4
        p = p + s / 6.0 * (k1p + 2.0 * k2p + 2.0 * k3p + k4p)
        dp = dp + s / 6.0 * (k1d + 2.0 * k2d + 2.0 * k3d + k4d)
        if k + 1 == n_delta:
            pre = dp
            dp = dp + 1j * gamma * p
            post = dp
        if k < n_norm:
            w = p.real * p.real + p.imag * p.imag
            if (k + 1) % 2 == 1:
                acc += 4.0 * w
            elif k + 1 < n_norm:
                acc += 2.0 * w
            else:
                acc += w
                pc = p
                dpc = dp
        a = abs(p)
        if a > peak:
            peak = a
        if record:
            xs[k + 1] = x1
            ps[k + 1] = p
            dps[k + 1] = dp
        if (k & 15) == 0 or k + 1 == n_steps:
            if not (a == a) or a * math.exp(-_tail_action(abs(x1), re_mu)) > limit:
                return p, dp, acc * h / 3.0, peak, 1, pre, post, pc, dpc
    return p, dp, acc * h / 3.0, peak, 0, pre, post, pc, dpc


_EMPTY_R = np.zeros(1)
_EMPTY_C = np.zeros(1, dtype=np.complex128)


def run_kernel(psi0, dpsi0, mu, params: ProblemParams, sign: int, n_steps: int,
               gamma=None, record=False, step=None, n_norm=None):
    """Thin wrapper around the compiled kernel; raises on overflow.

    Returns (psi, dpsi, norm, peak, jump, samples, (psi_c, dpsi_c)).
    """
    h = params.step if step is None else step
    n_delta = int(round(params.b / h))
    if abs(n_delta * h - params.b) > 1e-9 * params.b:
        raise StepMisaligned(f"step {h} does not land on b = {params.b}")
    gam = params.gamma if gamma is None else gamma
    n_nl = n_steps
    if params.g != 0:
        x_nl = max(tail_point(max(complex(mu).real, 0.0), NONLINEAR_ACTION), params.b + 1.0)
        n_nl = min(int(math.ceil(x_nl / h)), n_steps)
    if record:
        xs = np.empty(n_steps + 1)
        ps = np.empty(n_steps + 1, dtype=np.complex128)
        dps = np.empty(n_steps + 1, dtype=np.complex128)
    else:
        xs, ps, dps = _EMPTY_R, _EMPTY_C, _EMPTY_C
    out = _kernel(complex(psi0), complex(dpsi0), complex(mu), float(gam), float(params.g),
                  float(h), int(n_steps), n_delta if n_delta <= n_steps else -1,
                  int(n_steps if n_norm is None else n_norm), n_nl,
                  float(sign), GUARD, record, xs, ps, dps)
    p, dp, norm, peak, status, pre, post, pc, dpc = out
    if status:
        raise IntegrationOverflow(
            f"|psi| exceeded guard while integrating mu={complex(mu):.6g}, sign={sign}")
    return p, dp, norm, peak, (pre, post), (xs, ps, dps) if record else None, (pc, dpc)


def integrate_half_line(initial: WaveState, direction: Direction | int, mu: complex,
                        params: ProblemParams, x_max: float | None = None,
                        step: float | None = None, record: bool = False) -> IntegrationResult:
    """Integrate from x = 0 to +x_max (PLUS) or -x_max (MINUS).

    ``x_max`` defaults to ``params.resolve_x_max(mu.real)``; it is rounded
    up to an even number of steps so Simpson's rule covers the mesh.
    """
    if initial.x != 0:
        raise ValueError("integration starts at x = 0")
    h = params.step if step is None else step
    sign = int(Direction(direction))
    xm = params.resolve_x_max(complex(mu).real) if x_max is None else x_max
    n_steps = 2 * math.ceil(xm / (2 * h) - 1e-9)
    p, dp, norm, peak, jump, samples, _ = run_kernel(initial.psi, initial.dpsi, mu, params,
                                                  sign, n_steps, record=record, step=h)
    x_end = sign * n_steps * h
    kw = {}
    if samples is not None:
        kw = dict(x=samples[0], psi=samples[1], dpsi=samples[2])
    has_jump = int(round(params.b / h)) <= n_steps
    return IntegrationResult(WaveState(x_end, p, dp), norm, peak,
                             jump if has_jump else None, **kw)


def jump_condition(state: WaveState, params: ProblemParams,
                   direction: Direction | int | None = None) -> WaveState:
    """Apply the derivative jump of the delta located at ``state.x``.

    Across x0 the jump is psi'(x0+) - psi'(x0-) = c psi(x0) with c = +i gamma
    at +b and c = -i gamma at -b.  ``direction`` is the traversal direction;
    by default outward (rightward at +b, leftward at -b), where both deltas
    add i gamma psi to psi'.
    """
    if abs(abs(state.x) - params.b) > 1e-12 * max(1.0, params.b):
        raise StepMisaligned(f"state at x={state.x} is not on a delta (b={params.b})")
    side = 1 if state.x > 0 else -1
    d = side if direction is None else int(Direction(direction))
    c = 1j * params.gamma * side
    return WaveState(state.x, state.psi, state.dpsi + d * c * state.psi)
