"""Newton shooting for square-integrable normalized solutions.

Unknowns are Re psi(0), psi'(0) (complex) and mu (complex); Im psi(0) = 0
fixes the global phase.  The five real equations are the decay conditions
at +-x_max and the normalization.

The decay residuals are multiplied by exp(-S), S being the WKB action
between the turning point and x_max.  This measures the amplitude of the
growing solution referred back to the turning point, so the residual is
O(1)-scaled and its round-off floor does not depend on x_max.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import IntegrationOverflow, JacobianSingular, NoConvergence, PtSpecError
from .model import ProblemParams, tail_action, tail_point
from .ode import run_kernel, integrate_half_line, WaveState

TOL = 1e-10
MAX_ITER = 60
FD_STEP = 1e-7
MAX_HALVINGS = 8
COND_LIMIT = 1e14
#: WKB action at which the norm integral is closed with its asymptotic tail.
NORM_ACTION = 10.0
#: Closing point of the smoother norm used for seeding and path tracing.
PROXY_ACTION = 4.0


@dataclass(frozen=True)
class ShootingState:
    re_psi0: float
    re_dpsi0: float
    im_dpsi0: float
    re_mu: float
    im_mu: float

    @property
    def psi0(self) -> complex:
        return complex(self.re_psi0, 0.0)

    @property
    def dpsi0(self) -> complex:
        return complex(self.re_dpsi0, self.im_dpsi0)

    @property
    def mu(self) -> complex:
        return complex(self.re_mu, self.im_mu)

    def as_array(self) -> np.ndarray:
        return np.array([self.re_psi0, self.re_dpsi0, self.im_dpsi0, self.re_mu, self.im_mu])

    @classmethod
    def from_array(cls, v) -> ShootingState:
        return cls(*(float(t) for t in v))

    @property
    def is_symmetric(self) -> bool:
        """PT-symmetric states have real mu and purely imaginary psi'(0)."""
        return self.re_dpsi0 == 0.0 and self.im_mu == 0.0

    def pt_partner(self) -> ShootingState:
        """State of psi*(-x): conjugate mu, same Im psi(0) = 0 gauge."""
        return ShootingState(self.re_psi0, -self.re_dpsi0, self.im_dpsi0, self.re_mu, -self.im_mu)

    def flipped(self) -> ShootingState:
        return ShootingState(-self.re_psi0, -self.re_dpsi0, -self.im_dpsi0, self.re_mu, self.im_mu)


@dataclass(frozen=True)
class SpectralPoint:
    n_label: int
    mu: complex
    params: ProblemParams
    residual_norm: float
    state: ShootingState
    iterations: int = 0
    wavefunction_samples: tuple | None = field(default=None, compare=False, repr=False)

    @property
    def gamma(self) -> float:
        return self.params.gamma


def unperturbed_state(n: int) -> ShootingState:
    """Exact gamma = 0, g = 0 state of level n in the PT gauge."""
    from .basis import oscillator_table
    vals = oscillator_table(n + 1, 0.0)
    if n % 2 == 0:
        return ShootingState(float(vals[n]), 0.0, 0.0, 2.0 * n + 1, 0.0)
    # psi_n'(0) = sqrt(2n) psi_{n-1}(0); multiply by i to be PT-symmetric
    return ShootingState(0.0, 0.0, float(math.sqrt(2 * n) * vals[n - 1]), 2.0 * n + 1, 0.0)


class Mesh:
    """Integration extent frozen for the duration of one solve."""

    def __init__(self, params: ProblemParams, re_mu: float, x_max: float | None = None,
                 norm_action: float = NORM_ACTION):
        self.params = params
        h = self.h = params.step_for(re_mu)
        xm = params.resolve_x_max(re_mu) if x_max is None else x_max
        self.n_steps = 2 * math.ceil(xm / (2 * h) - 1e-9)
        self.x_max = self.n_steps * h
        self.ref_mu = re_mu
        # Past x_c the growing solution dominates |psi|^2 for any mu off the
        # eigenvalue, so the norm is closed analytically there.
        xc = max(tail_point(max(re_mu, 0.0), norm_action), params.b + 1.0)
        self.n_norm = min(2 * math.ceil(xc / (2 * h) - 1e-9), self.n_steps)
        self.x_c = self.n_norm * h

    def decay_scale(self, re_mu: float) -> float:
        return math.exp(-tail_action(self.x_max, re_mu))


def _tail_mass(psi_c: complex, dpsi_c: complex, x: float, re_mu: float) -> float:
    """int_x^inf |psi|^2 of the decaying WKB component at x.

    The growing component is projected out, which keeps the norm smooth in
    the unknowns when the closing point sits close to the turning point.
    For |psi|^2 ~ exp(-phi) the integral is exp(-phi)(1/phi' - phi''/phi'^3).
    """
    k2 = x * x - re_mu
    if k2 <= 0:
        return 0.0
    k = math.sqrt(k2)
    # log-derivatives of the decaying and growing WKB solutions
    drift = x / (2 * k2)
    dec = 0.5 * ((k - drift) * psi_c - dpsi_c) / k
    d1 = 2 * k + x / k2
    d2 = 2 * x / k + (k2 - 2 * x * x) / (k2 * k2)
    return abs(dec) ** 2 * (1.0 / d1 - d2 / d1 ** 3)


def _side(psi0, dpsi0, mu, gamma, mesh: Mesh, sign: int):
    p, dp, norm, _, _, _, (pc, dpc) = run_kernel(psi0, dpsi0, mu, mesh.params, sign,
                                                 mesh.n_steps, gamma=gamma, n_norm=mesh.n_norm,
                                                 step=mesh.h)
    kappa = cmath.sqrt(mesh.x_max ** 2 - mu)
    scale = mesh.decay_scale(mu.real)
    return (dp + sign * kappa * p) * scale, norm + _tail_mass(pc, sign * dpc, mesh.x_c, mu.real)


def full_residual(v, gamma: float, mesh: Mesh) -> np.ndarray:
    """Five real residuals for unknown vector v (ShootingState order)."""
    psi0 = complex(v[0], 0.0)
    dpsi0 = complex(v[1], v[2])
    mu = complex(v[3], v[4])
    rp, n_p = _side(psi0, dpsi0, mu, gamma, mesh, 1)
    rm, n_m = _side(psi0, dpsi0, mu, gamma, mesh, -1)
    return np.array([rp.real, rp.imag, rm.real, rm.imag, n_p + n_m - 1.0])


def symmetric_residual(u, gamma: float, mesh: Mesh) -> np.ndarray:
    """Three residuals on the PT-symmetric subspace u = (Re psi0, Im psi'0, mu).

    The left half-line is the PT image of the right one, so only x > 0 is
    integrated and the norm is doubled.
    """
    rp, n_p = _side(complex(u[0], 0.0), complex(0.0, u[1]), complex(u[2], 0.0), gamma, mesh, 1)
    return np.array([rp.real, rp.imag, 2.0 * n_p - 1.0])


def residual(state: ShootingState, params: ProblemParams, x_max: float | None = None) -> np.ndarray:
    """[Re r+, Im r+, Re r-, Im r-, N - 1] for ``state``."""
    mesh = Mesh(params, state.re_mu, x_max)
    return full_residual(state.as_array(), params.gamma, mesh)


def _safe(fun, z):
    try:
        r = fun(z)
    except IntegrationOverflow:
        return None
    if not np.all(np.isfinite(r)):
        return None
    return r


def fd_jacobian(fun, z, r0, step=FD_STEP):
    """Central-difference Jacobian.

    The norm row is quadratic in the growing-mode amplitude, so a one-sided
    difference picks up a spurious O(step * e^{2S}) term; the central
    difference cancels it.  Falls back to one-sided where a probe overflows.
    """
    J = np.empty((r0.size, z.size))
    for j in range(z.size):
        dz = step * max(1.0, abs(z[j]))
        zp = z.copy()
        zm = z.copy()
        zp[j] += dz
        zm[j] -= dz
        rp = _safe(fun, zp)
        rm = _safe(fun, zm)
        if rp is not None and rm is not None:
            J[:, j] = (rp - rm) / (2 * dz)
        elif rp is not None:
            J[:, j] = (rp - r0) / dz
        elif rm is not None:
            J[:, j] = (r0 - rm) / dz
        else:
            raise IntegrationOverflow("overflow while forming the Jacobian")
    return J


@dataclass
class NewtonResult:
    z: np.ndarray
    residual_norm: float
    iterations: int
    used_pinv: bool


def newton(fun, z0, tol=TOL, max_iter=MAX_ITER, constraint=None, allow_pinv=True,
           step_tol=1e-13) -> NewtonResult:
    """Damped Newton with finite-difference Jacobian and Armijo backtracking.

    ``constraint`` optionally appends rows (value, gradient) for augmented
    systems such as the pseudo-arclength condition; it receives z.
    Convergence is declared when ||r|| < tol, or when the full Newton step
    falls below ``step_tol`` relative to z (round-off floor reached).
    """
    z = np.array(z0, dtype=float)

    def F(zz):
        r = _safe(fun, zz)
        if r is None:
            return None
        if constraint is not None:
            r = np.concatenate([r, np.atleast_1d(constraint(zz)[0])])
        return r

    r = F(z)
    if r is None:
        raise NoConvergence("seed trajectory overflows", state=z)
    nr = float(np.linalg.norm(r))
    used_pinv = False
    for it in range(max_iter + 1):
        if nr < tol:
            return NewtonResult(z, nr, it, used_pinv)
        if it == max_iter:
            break
        if constraint is None:
            J = fd_jacobian(fun, z, r)
        else:
            J = _aug_jacobian(fun, constraint, z, r)
        try:
            cond = np.linalg.cond(J)
        except np.linalg.LinAlgError:
            cond = np.inf
        if cond > COND_LIMIT:
            if not allow_pinv:
                raise JacobianSingular(f"Jacobian condition {cond:.3g}")
            used_pinv = True
            dz = -np.linalg.pinv(J, rcond=1e-12) @ r
        else:
            dz = -np.linalg.solve(J, r)
        if not np.all(np.isfinite(dz)):
            raise NoConvergence("non-finite Newton step", state=z, residual_norm=nr)
        small = np.linalg.norm(dz) < step_tol * (1.0 + np.linalg.norm(z))
        t = 1.0
        for _ in range(MAX_HALVINGS + 1):
            rt = F(z + t * dz)
            if rt is not None:
                nt = float(np.linalg.norm(rt))
                if nt <= (1.0 - 1e-4 * t) * nr:
                    break
            t *= 0.5
        else:
            if small:
                return NewtonResult(z, nr, it, used_pinv)
            raise NoConvergence(f"line search failed (|r|={nr:.3g})", state=z, residual_norm=nr)
        z = z + t * dz
        r = rt
        nr = nt
        if small and t == 1.0:
            return NewtonResult(z, nr, it + 1, used_pinv)
    raise NoConvergence(f"no convergence after {max_iter} iterations (|r|={nr:.3g})",
                        state=z, residual_norm=nr)


def _aug_jacobian(fun, constraint, z, r):
    m = r.size - 1
    J = np.empty((r.size, z.size))
    J[:m] = fd_jacobian(fun, z, r[:m])
    J[m] = constraint(z)[1]
    return J


def _presolve(fun, z0, amp, g, tol, max_iter):
    """Converge the decay conditions at fixed amplitude, then rescale to unit norm.

    Away from an eigenvalue the growing solution dominates the norm and the
    plain system is far from linear, so for the linear problem (or a poor
    seed) the normalization is imposed afterwards by rescaling.
    """
    r0 = _safe(fun, z0)
    if r0 is not None and np.linalg.norm(r0) < (1e-2 if g > 0 else 1e-4):
        return z0
    a0 = z0[amp].copy()
    size = float(np.linalg.norm(a0))
    if size == 0.0:
        return z0
    direction = a0 / size

    def fixed(z):
        r = fun(z)
        r[-1] = float(direction @ z[amp]) - size
        return r

    try:
        z = newton(fixed, z0, tol * 1e-2, max_iter).z
    except PtSpecError:
        return z0
    r = _safe(fun, z)
    if r is None or r[-1] + 1.0 <= 0:
        return z0
    z = z.copy()
    z[amp] /= math.sqrt(r[-1] + 1.0)
    return z


def solve(seed: ShootingState, params: ProblemParams, n_label: int = -1,
          tol: float = TOL, max_iter: int = MAX_ITER, symmetric: bool | None = None,
          x_max: float | None = None, samples: bool = False) -> SpectralPoint:
    """Converge ``seed`` to an eigenstate of the problem defined by ``params``.

    PT-symmetric seeds (real mu, imaginary psi'(0)) are solved on the
    symmetric subspace unless ``symmetric=False``; this keeps the odd
    levels, whose psi(0) vanishes at gamma = 0, free of the phase
    degeneracy of the full system.
    """
    if symmetric is None:
        symmetric = seed.is_symmetric
    mesh = Mesh(params, seed.re_mu, x_max)
    proxy = Mesh(params, seed.re_mu, x_max, norm_action=PROXY_ACTION)
    if symmetric:
        z0 = np.array([seed.re_psi0, seed.im_dpsi0, seed.re_mu])
        make = lambda m: (lambda u: symmetric_residual(u, params.gamma, m))  # noqa: E731
        amp = slice(0, 2)
    else:
        z0 = seed.as_array()
        make = lambda m: (lambda v: full_residual(v, params.gamma, m))  # noqa: E731
        amp = slice(0, 3)
    fun = make(mesh)
    r0 = _safe(fun, z0)
    if r0 is None or np.linalg.norm(r0) > 1e-6:
        # seed and converge on the smoother norm first
        rough = make(proxy)
        z0 = _presolve(rough, z0, amp, params.g, tol, max_iter)
        try:
            z0 = newton(rough, z0, tol, max_iter).z
        except PtSpecError:
            pass
    res = newton(fun, z0, tol, max_iter)
    z = res.z
    state = ShootingState(z[0], 0.0, z[1], z[2], 0.0) if symmetric else ShootingState.from_array(z)
    wf = wavefunction(state, params, mesh.x_max) if samples else None
    return SpectralPoint(n_label, state.mu, params, res.residual_norm, state, res.iterations, wf)


def wavefunction(state: ShootingState, params: ProblemParams, x_max: float | None = None):
    """Sampled (x, psi) over [-x_max, x_max] for a converged state."""
    init = WaveState(0.0, state.psi0, state.dpsi0)
    xm = params.resolve_x_max(state.re_mu) if x_max is None else x_max
    h = params.step_for(state.re_mu)
    right = integrate_half_line(init, 1, state.mu, params, x_max=xm, record=True, step=h)
    left = integrate_half_line(init, -1, state.mu, params, x_max=xm, record=True, step=h)
    x = np.concatenate([left.x[:0:-1], right.x])
    psi = np.concatenate([left.psi[:0:-1], right.psi])
    return x, psi
