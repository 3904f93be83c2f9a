"""Continuation of eigenvalue branches in gamma (and g).

Each level is traced by pseudo-arclength continuation, which passes smoothly
through folds of the real branches.  A real branch of the linear problem ends
at a fold (an exceptional point, where it meets its partner); the path then
follows the complex-conjugate branch born there.  A complex branch whose
imaginary part returns to zero splits into two real branches; the member with
positive imaginary part takes the lower one.  For g > 0 complex branches can
also bifurcate off a real branch (symmetry breaking); these are traced as
separate paths.

The traced curves are finally resampled onto the requested gamma grid by
fixed-gamma solves seeded from the arclength nodes.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Iterable

import numpy as np
from scipy import optimize

from .errors import NoConvergence, NotABranchPoint, PathLost, PtSpecError
from .model import ProblemParams
from .shooting import (NORM_ACTION, PROXY_ACTION, Mesh, ShootingState, SpectralPoint, fd_jacobian, full_residual, newton,
                       solve, symmetric_residual, unperturbed_state)

log = logging.getLogger(__name__)

IMAG_TOL = 1e-8
DS_START = 0.02
DS_MIN = 1e-7
DS_MAX = 0.2
CORRECTOR_ITER = 15
#: Imaginary part used to step off an exceptional point onto the complex branch.
EP_OFFSET = 1e-3
G_STEP = 0.5


class Classification(str, Enum):
    ROBUST = "robust"
    FRAGILE = "fragile"
    UNDETERMINED = "undetermined"


class BranchKind(str, Enum):
    COALESCENCE = "coalescence"
    SPLITTING = "splitting"
    SYMMETRY_BREAKING = "symmetry_breaking"


@dataclass(frozen=True)
class BranchPoint:
    gamma_c: float
    mu_c: complex
    partner_labels: tuple[int, int]
    kind: BranchKind
    beta: float = math.nan


@dataclass
class ContinuationPath:
    n_label: int
    points: list[SpectralPoint] = field(default_factory=list)
    branch_events: list[BranchPoint] = field(default_factory=list)
    classification: Classification = Classification.UNDETERMINED
    #: grid values where no converged point could be produced
    failures: list[float] = field(default_factory=list)
    #: "main" for the path continued from the unperturbed level; "+" / "-" for
    #: complex branches born off it in a symmetry-breaking bifurcation
    branch: str = "main"

    @property
    def gammas(self) -> np.ndarray:
        return np.array([p.gamma for p in self.points])

    @property
    def mus(self) -> np.ndarray:
        return np.array([p.mu for p in self.points], dtype=complex)

    def at(self, gamma: float, atol: float = 1e-12) -> SpectralPoint | None:
        for p in self.points:
            if abs(p.gamma - gamma) <= atol:
                return p
        return None


# ------------------------------------------------------------------ systems

class _MeshCache:
    """Meshes keyed by an even upper bound of Re mu, so x_max only grows in jumps.

    Tracing uses the smoother proxy norm; ``exact=True`` gives the full norm.
    """

    def __init__(self, params: ProblemParams):
        self.params = params
        self._meshes: dict[tuple[int, bool], Mesh] = {}

    def get(self, re_mu: float, exact: bool = False) -> Mesh:
        key = (2 * math.ceil(max(re_mu, 0.0) / 2.0) + 2, exact)
        if key not in self._meshes:
            action = NORM_ACTION if exact else PROXY_ACTION
            self._meshes[key] = Mesh(self.params, float(key[0]), norm_action=action)
        return self._meshes[key]


class _Real:
    """z = (Re psi0, Im psi'0, mu, gamma) on the PT-symmetric subspace."""

    kind = "real"
    g_index = 3
    mu_index = 2

    @staticmethod
    def residual(z, mesh):
        return symmetric_residual(z[:3], z[3], mesh)

    @staticmethod
    def state(z) -> ShootingState:
        return ShootingState(float(z[0]), 0.0, float(z[1]), float(z[2]), 0.0)

    @staticmethod
    def pack(state: ShootingState, gamma: float) -> np.ndarray:
        return np.array([state.re_psi0, state.im_dpsi0, state.re_mu, gamma])


class _Complex:
    """z = (ShootingState fields, gamma)."""

    kind = "complex"
    g_index = 5
    mu_index = 3

    @staticmethod
    def residual(z, mesh):
        return full_residual(z[:5], z[5], mesh)

    @staticmethod
    def state(z) -> ShootingState:
        return ShootingState.from_array(z[:5])

    @staticmethod
    def pack(state: ShootingState, gamma: float) -> np.ndarray:
        return np.append(state.as_array(), gamma)


def _conjugate(z: np.ndarray) -> np.ndarray:
    # PT partner of a complex-system vector
    w = z.copy()
    w[1] = -w[1]
    w[4] = -w[4]
    return w


@dataclass
class _Segment:
    system: type
    nodes: list[np.ndarray]
    sqrt_start: bool = False
    sqrt_end: bool = False
    end: str = "end"
    # anti-symmetric determinant sign per node (nonlinear real segments only)
    anti: list[float] = field(default_factory=list)

    @property
    def gammas(self) -> np.ndarray:
        return np.array([z[self.system.g_index] for z in self.nodes])

    def conjugated(self) -> _Segment:
        return _Segment(self.system, [_conjugate(z) for z in self.nodes], self.sqrt_start,
                        self.sqrt_end, self.end)


# ------------------------------------------------------------------ arclength

def _tangent(fun, z, prev=None, orient: tuple[int, float] | None = None) -> np.ndarray:
    J = fd_jacobian(fun, z, fun(z))
    t = np.linalg.svd(J)[2][-1]
    if prev is not None:
        if t @ prev < 0:
            t = -t
    elif orient is not None and t[orient[0]] * orient[1] < 0:
        t = -t
    return t


def _trace(system, z0, t0, cache: _MeshCache, stop: Callable, ds: float = DS_START,
           max_steps: int = 4000):
    """Arclength continuation from (z0, t0) until ``stop`` returns a reason.

    ``stop(z_prev, t_prev, z_new, t_new)`` returns None to continue.  Returns
    (nodes, tangents, reason); reason "lost" means the step size underflowed.
    """
    nodes, tangents = [np.asarray(z0, float)], [np.asarray(t0, float)]
    for _ in range(max_steps):
        z, t = nodes[-1], tangents[-1]
        while True:
            zp = z + ds * t
            mesh = cache.get(zp[system.mu_index])
            fun = lambda zz, m=mesh: system.residual(zz, m)  # noqa: E731
            cons = lambda zz, zp=zp, t=t: (float(t @ (zz - zp)), t)  # noqa: E731
            try:
                res = newton(fun, zp, max_iter=CORRECTOR_ITER, constraint=cons)
                tn = _tangent(fun, res.z, prev=t)
                ok = tn @ t > 0.9 or ds <= 4 * DS_MIN
            except PtSpecError:
                ok = False
            if ok:
                break
            ds *= 0.5
            if ds < DS_MIN:
                return nodes, tangents, "lost"
        nodes.append(res.z)
        tangents.append(tn)
        reason = stop(z, t, res.z, tn)
        if reason:
            return nodes, tangents, reason
        if res.iterations <= 3:
            ds = min(ds * 1.5, DS_MAX)
    return nodes, tangents, "lost"


# ------------------------------------------------------------------ folds

def _gamma_at(mu: float, seed, cache: _MeshCache) -> np.ndarray:
    """(Re psi0, Im psi'0, gamma) of the real branch through real ``mu``.

    Converged on the proxy norm, then polished on the full norm when g > 0
    (for g = 0 the normalization does not affect gamma).
    """
    w = np.asarray(seed, float)
    for exact in (False, True) if cache.params.g > 0 else (False,):
        mesh = cache.get(mu, exact)
        fun = lambda w, m=mesh: symmetric_residual((w[0], w[1], mu), w[2], m)  # noqa: E731
        w = newton(fun, w, max_iter=30).z
    return w


def _extremum(nodes, cache: _MeshCache, maximize: bool, widen: float = 1.0):
    """Local extremum of gamma(mu) on the real curve through ``nodes``.

    ``nodes`` are real-system vectors around the extremum; the search
    interval spans their mu values, padded by ``widen`` times the last
    spacing, and is re-centred if the optimum lands on an edge.  Returns the
    real-system vector at the extremum.
    """
    nodes = sorted(nodes, key=lambda z: z[2])
    mus = np.array([z[2] for z in nodes])
    comp = np.array([[z[0], z[1], z[3]] for z in nodes])
    step = max(float(np.max(np.diff(mus))) if len(mus) > 1 else 0.0, 1e-6)
    lo, hi = mus[0] - widen * step, mus[-1] + widen * step
    last = {}

    def seed(mu):
        if len(mus) == 1:
            return comp[0]
        i = int(np.clip(np.searchsorted(mus, mu) - 1, 0, len(mus) - 2))
        f = (mu - mus[i]) / (mus[i + 1] - mus[i]) if mus[i + 1] != mus[i] else 0.0
        return comp[i] + f * (comp[i + 1] - comp[i])

    def obj(mu):
        try:
            w = _gamma_at(mu, seed(mu), cache)
        except PtSpecError:
            if "w" not in last:
                raise
            w = _gamma_at(mu, last["w"], cache)
        last["w"] = w
        return -w[2] if maximize else w[2]

    for _ in range(4):
        res = optimize.minimize_scalar(obj, bounds=(lo, hi), method="bounded",
                                       options={"xatol": 1e-11})
        mu = float(res.x)
        width = hi - lo
        if mu - lo > 1e-4 * width and hi - mu > 1e-4 * width:
            break
        lo, hi = mu - 0.5 * width, mu + 0.5 * width
    w = _gamma_at(mu, last["w"], cache)
    return np.array([w[0], w[1], mu, w[2]])


def _exponent(zc: np.ndarray, cache: _MeshCache,
              steps: Iterable[float] = (1e-4, 3e-4, 1e-3, 3e-3, 1e-2)) -> float:
    """Exponent beta of |mu - mu_c| ~ |gamma - gamma_c|^beta at an extremum zc.

    Steps move outward so that each solve is seeded by the previous one.
    """
    x, y = [], []
    for side in (-1.0, 1.0):
        w = np.array([zc[0], zc[1], zc[3]])
        for h in steps:
            try:
                w = _gamma_at(zc[2] + side * h, w, cache)
            except PtSpecError:
                break
            dg = abs(w[2] - zc[3])
            if dg > 1e-11:
                x.append(math.log(dg))
                y.append(math.log(h))
    if len(x) < 3:
        return math.nan
    return float(np.polyfit(x, y, 1)[0])


def _leave_ep(zc: np.ndarray, sign: float, cache: _MeshCache):
    """First node on the complex branch born at the real fold zc.

    Solves with Im mu pinned to sign * EP_OFFSET and gamma free.
    """
    mesh = cache.get(zc[2])
    for eps in (EP_OFFSET, 3 * EP_OFFSET, 1e-2):
        im = sign * eps

        def fun(w):
            return full_residual((w[0], w[1], w[2], w[3], im), w[4], mesh)

        seed = np.array([zc[0], 0.0, zc[1], zc[2], zc[3]])
        try:
            w = newton(fun, seed, max_iter=40).z
        except PtSpecError:
            continue
        z = np.array([w[0], w[1], w[2], w[3], im, w[4]])
        sysfun = lambda zz: _Complex.residual(zz, mesh)  # noqa: E731
        return z, _tangent(sysfun, z, orient=(4, sign))
    raise NoConvergence("could not leave the exceptional point")


# ------------------------------------------------------------------ symmetry breaking

def _anti_block(z: np.ndarray, cache: _MeshCache, step: float = 1e-6) -> np.ndarray:
    """Jacobian of the PT-odd residual combinations w.r.t. (Re psi'0, Im mu).

    At a PT-symmetric solution r+ = -conj(r-), so Re r+ + Re r- and
    Im r+ - Im r- vanish; their derivatives in the PT-odd unknowns form a
    2x2 block whose determinant changes sign where complex branches
    bifurcate off the real one.
    """
    mesh = cache.get(z[2])
    v = np.array([z[0], 0.0, z[1], z[2], 0.0])
    J = np.empty((2, 2))
    for col, idx in enumerate((1, 4)):
        vp, vm = v.copy(), v.copy()
        vp[idx] += step
        vm[idx] -= step
        rp = full_residual(vp, z[3], mesh)
        rm = full_residual(vm, z[3], mesh)
        d = (rp - rm) / (2 * step)
        J[:, col] = (d[0] + d[2], d[1] - d[3])
    return J


def _anti_sign(z, cache) -> float:
    try:
        return float(np.sign(np.linalg.det(_anti_block(z, cache))))
    except PtSpecError:
        return 0.0


def _bifurcate(za, zb, cache: _MeshCache, sign: float):
    """Seed the complex branch leaving the real curve between za and zb."""
    # locate det = 0 by bisection along the chord, re-solved at fixed gamma
    da = np.linalg.det(_anti_block(za, cache))
    lo, hi = za, zb
    for _ in range(30):
        mid_g = 0.5 * (lo[3] + hi[3])
        seed = 0.5 * (lo + hi)
        mesh = cache.get(seed[2])
        fun = lambda u, g=mid_g, m=mesh: symmetric_residual(u, g, m)  # noqa: E731
        u = newton(fun, seed[:3], max_iter=30).z
        mid = np.array([u[0], u[1], u[2], mid_g])
        dm = np.linalg.det(_anti_block(mid, cache))
        if dm * da > 0:
            lo, da = mid, dm
        else:
            hi = mid
        if abs(hi[3] - lo[3]) < 1e-9:
            break
    zb_ = 0.5 * (lo + hi)
    J = _anti_block(zb_, cache)
    null = np.linalg.svd(J)[2][-1]  # (d Re psi'0, d Im mu)
    if abs(null[1]) < 1e-12:
        raise NoConvergence("bifurcation without an Im mu component")
    mesh = cache.get(zb_[2])
    for eps in (EP_OFFSET, 3 * EP_OFFSET, 1e-2):
        im = sign * eps

        def fun(w):
            return full_residual((w[0], w[1], w[2], w[3], im), w[4], mesh)

        seed = np.array([zb_[0], im * null[0] / null[1], zb_[1], zb_[2], zb_[3]])
        try:
            w = newton(fun, seed, max_iter=40).z
        except PtSpecError:
            continue
        z = np.array([w[0], w[1], w[2], w[3], im, w[4]])
        sysfun = lambda zz: _Complex.residual(zz, mesh)  # noqa: E731
        return zb_, z, _tangent(sysfun, z, orient=(4, sign))
    raise NoConvergence("could not follow the symmetry-breaking branch")


# ------------------------------------------------------------------ level tracing

@dataclass
class _Trace:
    segments: list[_Segment]
    events: list[tuple]  # (kind, gamma_c, mu_c, beta, side)
    complete: bool
    extra: list[tuple] = field(default_factory=list)  # (gamma_b, segment) complex branches


def _real_stop(gamma_stop):
    def stop(z, t, zn, tn):
        if zn[3] >= gamma_stop:
            return "end"
        if tn[3] < 0 <= t[3]:
            return "fold"
        return None
    return stop


def _complex_stop(gamma_stop, sign):
    def stop(z, t, zn, tn):
        if zn[4] * sign <= 0:
            return "split"
        if zn[5] >= gamma_stop:
            return "end"
        if tn[5] < 0:
            return "turn"
        return None
    return stop


def _trace_real(z0, t0, cache, gamma_stop, anti: bool):
    nodes, tangents, reason = _trace(_Real, z0, t0, cache, _real_stop(gamma_stop))
    seg = _Segment(_Real, nodes, end=reason)
    fold = None
    if reason == "fold":
        zc = _extremum(nodes[-3:], cache, maximize=True)
        seg.nodes = nodes[:-1] + [zc]
        seg.sqrt_end = True
        fold = zc
    if anti:
        seg.anti = [_anti_sign(z, cache) for z in seg.nodes]
    return seg, fold


def _trace_complex(z0, t0, cache, gamma_stop, sign, start: np.ndarray | None):
    nodes, tangents, reason = _trace(_Complex, z0, t0, cache, _complex_stop(gamma_stop, sign))
    split = None
    if reason == "split":
        za, zb = nodes[-2], nodes[-1]
        f = za[4] / (za[4] - zb[4])
        zs = za + f * (zb - za)
        w = 4 * abs(zb[3] - za[3]) + 1e-3
        ra = np.array([zs[0], zs[2], zs[3] - w, zs[5]])
        rb = np.array([zs[0], zs[2], zs[3] + w, zs[5]])
        split = _extremum([ra, rb], cache, maximize=False, widen=0.0)
        nodes = nodes[:-1]
    nodes = ([] if start is None else [start]) + nodes
    seg = _Segment(_Complex, nodes, sqrt_start=start is not None,
                   sqrt_end=split is not None, end=reason)
    if split is not None:
        seg.nodes.append(np.array([split[0], 0.0, split[1], split[2], 0.0, split[3]]))
    return seg, split


def _ep_node(zc):
    return np.array([zc[0], 0.0, zc[1], zc[2], 0.0, zc[3]])


def _trace_level(z_start: np.ndarray, cache: _MeshCache, gamma_stop: float,
                 complex_cache: dict, max_events: int = 12) -> _Trace:
    """Follow one level from its gamma = 0 real state up to gamma_stop."""
    nonlinear = cache.params.g > 0
    fun0 = lambda zz: _Real.residual(zz, cache.get(z_start[2]))  # noqa: E731
    z, t = z_start, _tangent(fun0, z_start, orient=(3, 1.0))
    out = _Trace([], [], False)
    approach = None
    for _ in range(max_events):
        seg, fold = _trace_real(z, t, cache, gamma_stop, anti=nonlinear)
        out.segments.append(seg)
        if nonlinear:
            _scan_symmetry_breaking(seg, cache, gamma_stop, out)
        if fold is None:
            out.complete = seg.end == "end"
            return out
        # the side of the fold we came from decides the sign of Im mu
        approach = seg.nodes[-2][2] if len(seg.nodes) > 1 else fold[2] - 1e-6
        side = -1.0 if approach < fold[2] else 1.0
        beta = _exponent(fold, cache)
        out.events.append(("coalescence", fold[3], fold[2], beta, side))
        if nonlinear:
            # real pairs of the nonlinear problem annihilate at the fold
            out.complete = False
            return out
        sign = -side  # lower member gets +Im
        key = (round(fold[3], 7), round(fold[2], 5))
        if key not in complex_cache:
            z1, t1 = _leave_ep(fold, 1.0, cache)
            complex_cache[key] = _trace_complex(z1, t1, cache, gamma_stop, 1.0, _ep_node(fold))
        cseg, split = complex_cache[key]
        out.segments.append(cseg if sign > 0 else cseg.conjugated())
        if split is None:
            out.complete = cseg.end == "end"
            return out
        out.events.append(("splitting", split[3], split[2], _exponent(split, cache), sign))
        # + member continues on the lower real branch
        fun = lambda zz: _Real.residual(zz, cache.get(split[2]))  # noqa: E731
        z, t = split, _tangent(fun, split, orient=(2, -sign))
    return out


def _scan_symmetry_breaking(seg: _Segment, cache, gamma_stop, out: _Trace):
    signs = seg.anti
    last = len(seg.nodes) - (2 if seg.sqrt_end else 1)
    for i in range(1, last + 1):
        if signs[i - 1] * signs[i] < 0:
            try:
                zb, z1, t1 = _bifurcate(seg.nodes[i - 1], seg.nodes[i], cache, 1.0)
                cseg, _ = _trace_complex(z1, t1, cache, gamma_stop, 1.0, _ep_node(zb))
            except PtSpecError as exc:
                log.warning("symmetry-breaking branch near gamma=%.4g lost: %s",
                            seg.nodes[i][3], exc)
                continue
            out.extra.append((zb, cseg))


# ------------------------------------------------------------------ resampling

def _sqrt_coordinate(seg: _Segment, gamma: float):
    """Interpolation variable along a segment: sqrt of the distance to a
    square-root end point when ``gamma`` lies in that half, else gamma."""
    g0, g1 = seg.gammas[0], seg.gammas[-1]
    mid = 0.5 * (g0 + g1)
    if seg.sqrt_end and (gamma >= mid or not seg.sqrt_start):
        return lambda x: -math.sqrt(max(g1 - x, 0.0))
    if seg.sqrt_start:
        return lambda x: math.sqrt(max(x - g0, 0.0))
    return lambda x: x


def _resample(seg: _Segment, grid: np.ndarray, params: ProblemParams, label: int,
              taken: set):
    """Converged points of ``seg`` at the grid values it covers."""
    g = seg.gammas
    pts, failed = [], []
    if len(g) < 2:
        return pts, failed
    for gamma in grid:
        if gamma in taken or gamma < g[0] - 1e-15 or gamma > g[-1] + 1e-15:
            continue
        i = int(np.searchsorted(g, gamma, side="right")) - 1
        i = min(max(i, 0), len(g) - 2)
        q = _sqrt_coordinate(seg, gamma)
        qa, qb = q(g[i]), q(g[i + 1])
        s = 0.0 if qb == qa else min(max((q(gamma) - qa) / (qb - qa), 0.0), 1.0)
        za, zb = seg.nodes[i], seg.nodes[i + 1]
        z = za + s * (zb - za)
        state = seg.system.state(z)
        p = params.replace(gamma=float(gamma))
        try:
            sp = solve(state, p, label, symmetric=seg.system is _Real)
        except PtSpecError:
            failed.append(float(gamma))
            continue
        mu_a = complex(*(za[[seg.system.mu_index, seg.system.mu_index + 2]]
                         if seg.system is _Complex else (za[2], 0.0)))
        mu_b = complex(*(zb[[seg.system.mu_index, seg.system.mu_index + 2]]
                         if seg.system is _Complex else (zb[2], 0.0)))
        if abs(sp.mu - state.mu) > 0.5 * abs(mu_b - mu_a) + 1e-6:
            failed.append(float(gamma))
            continue
        taken.add(gamma)
        pts.append(sp)
    return pts, failed


# ------------------------------------------------------------------ public API

def _check_grid(grid) -> np.ndarray:
    grid = np.asarray(list(grid), dtype=float)
    if grid.size == 0:
        raise ValueError("empty gamma grid")
    if np.any(np.diff(grid) <= 0):
        raise ValueError("gamma grid must be strictly increasing")
    if grid[0] < 0:
        raise ValueError("gamma grid must be non-negative")
    return grid


def _start_vector(label: int, params: ProblemParams, seed) -> np.ndarray:
    if seed is None:
        state = unperturbed_state(label)
        if params.g > 0:
            state = sweep_g([label], params.g, params.replace(gamma=0.0))[label].state
    else:
        state = seed.state if isinstance(seed, SpectralPoint) else seed
    p0 = params.replace(gamma=0.0)
    state = solve(state, p0, label, symmetric=True).state
    return _Real.pack(state, 0.0)


def _path_from_trace(label: int, tr: _Trace, grid, params) -> list[ContinuationPath]:
    path = ContinuationPath(label)
    taken: set = set()
    for seg in tr.segments:
        pts, failed = _resample(seg, grid, params, label, taken)
        path.points.extend(pts)
        path.failures.extend(failed)
    path.points.sort(key=lambda p: p.gamma)
    path.failures = sorted(set(path.failures) - taken)
    for kind, gc, mc, beta, side in tr.events:
        path.branch_events.append(BranchPoint(float(gc), complex(mc), (label, -1),
                                              BranchKind(kind), float(beta)))
    paths = [path]
    for zb, cseg in tr.extra:
        ev = BranchPoint(float(zb[3]), complex(zb[2]), (label, label),
                         BranchKind.SYMMETRY_BREAKING, math.nan)
        path.branch_events.append(ev)
        for name, seg in (("+", cseg), ("-", cseg.conjugated())):
            extra = ContinuationPath(label, branch=name, branch_events=[ev])
            pts, failed = _resample(seg, grid, params, label, set())
            extra.points, extra.failures = pts, failed
            extra.classification = Classification.FRAGILE
            paths.append(extra)
    path.branch_events.sort(key=lambda e: e.gamma_c)
    return paths


def _pair_events(paths: list[ContinuationPath], tr_sides: dict):
    """Attach partner labels to matching coalescence/splitting events."""
    events = [(p, i, e) for p in paths if p.branch == "main"
              for i, e in enumerate(p.branch_events)
              if e.kind in (BranchKind.COALESCENCE, BranchKind.SPLITTING)]
    for p, i, e in events:
        partners = [q.n_label for q, _, f in events
                    if q is not p and f.kind == e.kind and abs(f.gamma_c - e.gamma_c) < 1e-6
                    and abs(f.mu_c - e.mu_c) < 1e-4]
        if partners:
            pair = (min(p.n_label, partners[0]), max(p.n_label, partners[0]))
        else:
            side = tr_sides.get((p.n_label, i), 1.0)
            pair = (p.n_label, -1) if side < 0 else (-1, p.n_label)
        p.branch_events[i] = BranchPoint(e.gamma_c, e.mu_c, pair, e.kind, e.beta)


def sweep_gamma(n_labels: Iterable[int], gamma_grid: Iterable[float],
                params_base: ProblemParams, seeds: dict | None = None,
                progress: Callable[[str], None] | None = None) -> list[ContinuationPath]:
    """Continue each level over ``gamma_grid`` at the g and b of ``params_base``.

    Returns one main path per label (in label order), followed by any
    symmetry-breaking complex branches found for g > 0.  Points sit exactly
    on the grid; grid values where a branch does not exist (after the path
    has ended) or the corrector failed are absent from ``points``.
    """
    grid = _check_grid(gamma_grid)
    labels = list(n_labels)
    cache = _MeshCache(params_base)
    complex_cache: dict = {}
    main, extras, sides = [], [], {}
    gamma_stop = float(grid[-1])
    for label in labels:
        if progress:
            progress(f"level {label}: tracing to gamma={gamma_stop:g}")
        seed = None if seeds is None else seeds.get(label)
        z0 = _start_vector(label, params_base, seed)
        if gamma_stop > 0:
            tr = _trace_level(z0, cache, gamma_stop, complex_cache)
        else:
            tr = _Trace([_Segment(_Real, [z0, z0])], [], True)
        for i, ev in enumerate(tr.events):
            sides[(label, i)] = ev[4]
        paths = _path_from_trace(label, tr, grid, params_base)
        if not paths[0].points or paths[0].points[0].gamma != grid[0]:
            raise PathLost("could not start the path", label, float(grid[0]), params_base.g)
        main.append(paths[0])
        extras.extend(paths[1:])
    _pair_events(main, sides)
    for path in main:
        path.classification = classify(path, grid)
    return main + extras


def classify(path: ContinuationPath, gamma_grid=None) -> Classification:
    """robust: real along the whole path; fragile: has a coalescence."""
    if any(e.kind is BranchKind.COALESCENCE for e in path.branch_events):
        return Classification.FRAGILE
    complete = gamma_grid is None or (
        len(path.points) == len(gamma_grid) and not path.failures)
    if complete and path.points and float(np.max(np.abs(path.mus.imag))) < IMAG_TOL:
        return Classification.ROBUST
    return Classification.UNDETERMINED


def locate_branch_point(path_a: ContinuationPath, path_b: ContinuationPath,
                        bracket: tuple[float, float], params: ProblemParams) -> BranchPoint:
    """Branch point of two paths inside the gamma ``bracket``.

    Coalescence (both real at the lower end): the maximum of gamma along the
    real curve between the two eigenvalues.  Splitting (complex at the lower
    end): the minimum between the two real eigenvalues at the upper end.
    The local exponent beta of |mu - mu_c| ~ |gamma - gamma_c|^beta must lie
    in [0.4, 0.6].
    """
    lo, hi = bracket
    if not hi > lo:
        raise NotABranchPoint("empty bracket")
    pa = [p for p in path_a.points if lo <= p.gamma <= hi]
    pb = [p for p in path_b.points if lo <= p.gamma <= hi]
    if not pa or not pb:
        raise NotABranchPoint("paths do not cover the bracket")
    real_lo = abs(pa[0].mu.imag) < IMAG_TOL and abs(pb[0].mu.imag) < IMAG_TOL
    if real_lo:
        a = [p for p in pa if abs(p.mu.imag) < IMAG_TOL][-1]
        b = [p for p in pb if abs(p.mu.imag) < IMAG_TOL][-1]
        kind, maximize = BranchKind.COALESCENCE, True
    else:
        a = [p for p in pa if abs(p.mu.imag) < IMAG_TOL]
        b = [p for p in pb if abs(p.mu.imag) < IMAG_TOL]
        if not a or not b:
            raise NotABranchPoint("no real eigenvalues after the bracket")
        a, b = a[0], b[0]
        kind, maximize = BranchKind.SPLITTING, False
    if abs(a.mu - b.mu) < 1e-12:
        raise NotABranchPoint("the two paths coincide")
    cache = _MeshCache(params)
    za = _Real.pack(a.state, a.gamma)
    zb = _Real.pack(b.state, b.gamma)
    if za[:2] @ zb[:2] < 0:
        zb[:2] = -zb[:2]  # same overall sign, so interpolated seeds stay normalized
    try:
        zc = _extremum([za, zb], cache, maximize, widen=0.0)
    except PtSpecError as exc:
        raise NotABranchPoint(f"extremum search failed: {exc}") from exc
    span = sorted((a.mu.real, b.mu.real))
    inside = span[0] + 1e-9 < zc[2] < span[1] - 1e-9
    if not inside or not (lo - 1e-9 <= zc[3] <= hi + 1e-9):
        raise NotABranchPoint("no interior extremum of gamma between the eigenvalues")
    beta = _exponent(zc, cache)
    if not 0.4 <= beta <= 0.6:
        raise NotABranchPoint(f"local exponent {beta:.3g} is not a square root")
    labels = tuple(sorted((path_a.n_label, path_b.n_label)))
    return BranchPoint(float(zc[3]), complex(zc[2]), labels, kind, beta)


def sweep_g(n_labels: Iterable[int], g_target: float, params_base: ProblemParams,
            max_step: float = G_STEP) -> dict[int, SpectralPoint]:
    """Continue the gamma = 0 levels from g = 0 to ``g_target``.

    Returns converged start points keyed by label.  Steps are at most
    ``max_step`` with a secant predictor and are halved on failure.
    """
    if g_target < 0:
        raise ValueError("g_target must be >= 0")
    base = params_base.replace(gamma=0.0, g=0.0)
    out = {}
    for label in n_labels:
        state = solve(unperturbed_state(label), base, label, symmetric=True).state
        g, prev, h = 0.0, None, max_step
        pt = SpectralPoint(label, state.mu, base, 0.0, state)
        while g < g_target:
            h = min(h, g_target - g, max_step)
            ng = g + h
            guess = state
            if prev is not None:
                a, b = prev[1].as_array(), state.as_array()
                guess = ShootingState.from_array(b + (b - a) * h / (g - prev[0]))
            try:
                pt = solve(guess, params_base.replace(gamma=0.0, g=ng), label, symmetric=True)
            except PtSpecError:
                h *= 0.5
                if h < 1e-4:
                    raise PathLost("g continuation failed", label, 0.0, ng)
                continue
            prev, state, g = (g, state), pt.state, ng
            h = max_step
        out[label] = pt
    return out
