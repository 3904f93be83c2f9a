"""Linear-case reference spectrum.

Two independent routes are provided.  The dense route diagonalizes the
Hamiltonian projected on the first ``dim`` oscillator functions.  Because the
delta couplings decay only like n^{-1/4}, truncation errors of that route are
of order 1e-3 even for dim in the hundreds, so each dense eigenvalue can be
polished to a root of the exact secular function.

Secular function.  Away from the deltas the solutions are parabolic cylinder
functions.  Writing e(mu), o(mu) for the even and odd solutions regular at 0
(normalized to e(0) = 1, o'(0) = 1) evaluated at b, and A = 1/Gamma((1-mu)/4),
B = 1/Gamma((3-mu)/4) for the decaying-solution coefficients, the matching
conditions at +-b reduce to

    E(mu) = 2 A B + gamma^2 e o (B e - 2 A o)^2 = 0,

which is entire in mu and real for real mu.  Since E is linear in gamma^2,
the real spectrum is the level set gamma^2 = t(mu) = -2AB / (e o (Be - 2Ao)^2)
and branch points are the local extrema of t.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import mpmath as mp
import numpy as np
from scipy import optimize, special

from .basis import perturbation_matrix
from .errors import NoConvergenceQR
from .model import ProblemParams

_DPS = 30
#: dense values closer than this to a secular root count as matched
_MATCH = 0.05


@dataclass(frozen=True)
class TruncatedHamiltonian:
    params: ProblemParams
    dim: int
    entries: np.ndarray

    def is_complex_symmetric(self, atol: float = 0.0) -> bool:
        return bool(np.allclose(self.entries, self.entries.T, rtol=0.0, atol=atol))


def build(params: ProblemParams, dim: int | None = None) -> TruncatedHamiltonian:
    dim = params.basis_cutoff if dim is None else dim
    if dim < 2:
        raise ValueError("dim must be >= 2")
    h = perturbation_matrix(dim, params)
    h[np.diag_indices(dim)] += 2.0 * np.arange(dim) + 1.0
    return TruncatedHamiltonian(params, dim, h)


def eigenvalues(H: TruncatedHamiltonian) -> np.ndarray:
    """All eigenvalues of the dense matrix sorted by real part (then imaginary)."""
    if H.dim > 400:
        raise ValueError("dense oracle limited to dim <= 400")
    if H.params.gamma == 0:
        return np.sort(np.diag(H.entries).astype(complex))
    try:
        vals = np.linalg.eigvals(H.entries)
    except np.linalg.LinAlgError as exc:
        raise NoConvergenceQR(str(exc)) from exc
    # conjugate pairs share their real part up to round-off; make the order stable
    return vals[np.lexsort((vals.imag, np.round(vals.real, 9)))]


# ---------------------------------------------------------------- secular route

def _parts(mu, b):
    b2 = mp.mpf(b) ** 2
    damp = mp.exp(-b2 / 2)
    e = damp * mp.hyp1f1((1 - mu) / 4, mp.mpf(1) / 2, b2)
    o = mp.mpf(b) * damp * mp.hyp1f1((3 - mu) / 4, mp.mpf(3) / 2, b2)
    A = mp.rgamma((1 - mu) / 4)
    B = mp.rgamma((3 - mu) / 4)
    return A, B, e, o


def secular_function(mu, b: float, gamma: float):
    """E(mu) at working precision ``_DPS`` (mpmath number)."""
    with mp.workdps(_DPS):
        A, B, e, o = _parts(mp.mpmathify(mu), b)
        return 2 * A * B + mp.mpf(gamma) ** 2 * e * o * (B * e - 2 * A * o) ** 2


def secular_real(mu, b: float, gamma: float) -> np.ndarray:
    """Vectorized double-precision E(mu) for real mu (used for scanning)."""
    mu = np.asarray(mu, dtype=float)
    A, B, e, o = _parts_real(mu, b)
    return 2 * A * B + gamma ** 2 * e * o * (B * e - 2 * A * o) ** 2


def _parts_real(mu, b):
    b2 = b * b
    damp = math.exp(-b2 / 2)
    e = damp * special.hyp1f1((1 - mu) / 4, 0.5, b2)
    o = b * damp * special.hyp1f1((3 - mu) / 4, 1.5, b2)
    return special.rgamma((1 - mu) / 4), special.rgamma((3 - mu) / 4), e, o


def gamma_squared(mu, b: float) -> np.ndarray:
    """t(mu): the gamma^2 at which real mu is an eigenvalue (may be negative or inf)."""
    A, B, e, o = _parts_real(np.asarray(mu, dtype=float), b)
    den = e * o * (B * e - 2 * A * o) ** 2
    with np.errstate(divide="ignore", invalid="ignore"):
        return -2 * A * B / den


def refine_eigenvalue(seed: complex, params: ProblemParams, tol: float = 1e-13) -> complex:
    """Polish ``seed`` to the nearest root of the secular function."""
    if params.g != 0:
        raise ValueError("the secular function only describes the linear problem")
    with mp.workdps(_DPS):
        s = mp.mpc(seed)
        b, gam = params.b, params.gamma
        scale = abs(secular_function(s + 0.5, b, gam)) + abs(secular_function(s - 0.5, b, gam))
        if scale == 0:
            scale = mp.mpf(1)
        root = mp.findroot(lambda m: secular_function(m, b, gam) / scale, s,
                           solver="muller", verify=False, maxsteps=100, tol=tol ** 2)
        out = complex(root)
    # real roots come back with round-off imaginary parts
    if abs(out.imag) < 1e-12 * max(1.0, abs(out.real)) and abs(seed.imag) < 1e-6:
        out = complex(out.real, 0.0)
    return out


def refine_eigenvalues(values, params: ProblemParams, tol: float = 1e-13) -> np.ndarray:
    """Refine each value; keeps the dense value where two seeds land on one root."""
    values = np.asarray(values, dtype=complex)
    out = np.array([refine_eigenvalue(v, params, tol) for v in values])
    for i in range(out.size):
        for j in range(i + 1, out.size):
            if abs(out[i] - out[j]) < 1e-9 and abs(values[i] - values[j]) > 1e-6:
                out[i], out[j] = values[i], values[j]
    return out


def real_roots(params: ProblemParams, mu_lo: float, mu_hi: float,
               spacing: float = 1e-3) -> np.ndarray:
    """Real eigenvalues in [mu_lo, mu_hi] from sign changes of the secular function.

    Pairs of roots closer than ``spacing`` (only near a branch point) are missed.
    """
    b, gam = params.b, params.gamma
    mu = np.linspace(mu_lo, mu_hi, int(math.ceil((mu_hi - mu_lo) / spacing)) + 1)
    val = secular_real(mu, b, gam)
    idx = np.nonzero(np.sign(val[:-1]) * np.sign(val[1:]) < 0)[0]
    f = lambda m: float(secular_real(m, b, gam))  # noqa: E731
    roots = [optimize.brentq(f, mu[i], mu[i + 1], xtol=1e-15, rtol=1e-15) for i in idx]
    roots += [float(m) for m in mu[np.nonzero(val == 0)[0]]]
    return np.sort(np.array(roots))


def _complex_root(seed: complex, params: ProblemParams, known) -> complex | None:
    # Muller on E deflated by the roots already found, then checked against E itself
    b, gam = params.b, params.gamma
    with mp.workdps(_DPS):
        known = [mp.mpc(k) for k in known]
        s = mp.mpc(seed)

        def deflated(m):
            v = secular_function(m, b, gam)
            for k in known:
                v /= (m - k)
            return v

        scale = abs(deflated(s + 0.5)) + abs(deflated(s - 0.5)) or mp.mpf(1)
        try:
            root = mp.findroot(lambda m: deflated(m) / scale, s, solver="muller",
                               verify=False, maxsteps=200, tol=1e-26)
        except (ZeroDivisionError, ValueError):
            return None
        ref = abs(secular_function(root + 0.5, b, gam)) + abs(secular_function(root - 0.5, b, gam))
        if abs(secular_function(root, b, gam)) > 1e-10 * ref:
            return None
        return complex(root)


def secular_spectrum(params: ProblemParams, count: int, dim: int | None = None) -> np.ndarray:
    """Lowest ``count`` eigenvalues as roots of the secular function.

    Real roots are bracketed directly; complex pairs are polished from dense
    seeds with the already located roots deflated out, so a poor seed cannot
    converge onto a neighbour.
    """
    dim = max(params.basis_cutoff, int(2.5 * count), 120) if dim is None else dim
    dense = eigenvalues(build(params, dim))
    if params.gamma == 0:
        return dense[:count]
    hi = dense[min(count, dense.size) - 1].real + 3.0
    reals = real_roots(params, min(dense[0].real, 1.0) - 3.0, hi)
    found = list(reals.astype(complex))
    seeds = [v for v in dense if v.real < hi and v.imag > 1e-7]
    for s in sorted(seeds, key=lambda v: (v.real, v.imag)):
        r = _complex_root(s, params, found)
        if r is None or abs(r.imag) < 1e-10:
            continue
        r = complex(r.real, abs(r.imag))
        found += [r, r.conjugate()]
    # a pair just past its branch point can still look real in the dense
    # spectrum; seed the complex search from dense values left unmatched
    expected = int(np.sum(dense.real < hi))
    for v in sorted(dense[dense.real < hi], key=lambda v: v.real):
        if len(found) >= expected:
            break
        if np.min(np.abs(np.array(found) - v), initial=np.inf) < _MATCH:
            continue
        r = _complex_root(complex(v.real, max(abs(v.imag), 0.05)), params, found)
        if r is None:
            continue
        if abs(r.imag) < 1e-10:
            found.append(complex(r.real, 0.0))
        else:
            r = complex(r.real, abs(r.imag))
            found += [r, r.conjugate()]
    vals = np.array(found, dtype=complex)
    vals = vals[np.lexsort((vals.imag, np.round(vals.real, 9)))]
    return vals[:count]


def reference_spectrum(params: ProblemParams, count: int, dim: int | None = None,
                       refine: bool = True) -> np.ndarray:
    """Lowest ``count`` eigenvalues: exact secular roots, or raw dense values."""
    if refine and params.gamma != 0:
        return secular_spectrum(params, count, dim)
    dim = max(params.basis_cutoff, int(2.5 * count), 120) if dim is None else dim
    return eigenvalues(build(params, dim))[:count]


def truncation_check(params: ProblemParams, dim: int, probe_count: int,
                     refine: bool = True) -> float:
    """Max |change| of the lowest ``probe_count`` eigenvalues between dim and dim + 40.

    With ``refine`` the dense values only serve as seeds, so the drift
    measures whether both truncations lead to the same roots.
    """
    if dim < 40:
        raise ValueError("dim must be >= 40")
    a = reference_spectrum(params, probe_count, dim, refine)
    c = reference_spectrum(params, probe_count, dim + 40, refine)
    return float(np.max(np.abs(a - c)))


@dataclass(frozen=True)
class ExceptionalPoint:
    gamma_c: float
    mu_c: float
    kind: str  # "coalescence" (local max of gamma^2(mu)) or "splitting" (local min)


def exceptional_points(b: float, mu_lo: float, mu_hi: float, gamma_max: float = math.inf,
                       samples_per_unit: int = 2000) -> list[ExceptionalPoint]:
    """Branch points with real mu in [mu_lo, mu_hi], from extrema of gamma^2(mu).

    Extrema are bracketed on a grid and polished with a bounded scalar search;
    only extrema with 0 < gamma^2 <= gamma_max^2 inside a finite arc of t are
    reported.
    """
    n = max(int((mu_hi - mu_lo) * samples_per_unit), 16)
    mu = np.linspace(mu_lo, mu_hi, n + 1)
    t = gamma_squared(mu, b)
    found = []
    for i in range(1, n):
        tl, tc, tr = t[i - 1], t[i], t[i + 1]
        if not (np.isfinite(tl) and np.isfinite(tc) and np.isfinite(tr)) or tc <= 0:
            continue
        if tc >= tl and tc > tr:
            sign, kind = -1.0, "coalescence"
        elif tc <= tl and tc < tr:
            sign, kind = 1.0, "splitting"
        else:
            continue
        res = optimize.minimize_scalar(lambda m: sign * float(gamma_squared(m, b)),
                                       bounds=(mu[i - 1], mu[i + 1]), method="bounded",
                                       options={"xatol": 1e-12})
        tc = float(gamma_squared(res.x, b))
        if 0 < tc <= gamma_max ** 2:
            found.append(ExceptionalPoint(math.sqrt(tc), float(res.x), kind))
    return found
