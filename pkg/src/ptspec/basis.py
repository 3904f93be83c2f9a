"""Hermite functions, delta-pair matrix elements and the decay-bound scan."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import PtSpecError
from .model import ProblemParams

MS_ALPHA = 0.25
_RESCALE = 1e100


def oscillator_table(n_max: int, x) -> np.ndarray:
    """Normalized oscillator eigenfunctions psi_0..psi_{n_max} at points ``x``.

    Returns an array of shape ``(n_max + 1,) + np.shape(x)``.  Uses the
    normalized three-term recurrence

        psi_{k+1} = x sqrt(2/(k+1)) psi_k - sqrt(k/(k+1)) psi_{k-1}

    with the Gaussian factor and any rescalings carried in a separate
    log-amplitude so that nothing under- or overflows for large |x|.
    """
    if n_max < 0:
        raise ValueError("n_max must be >= 0")
    x = np.asarray(x, dtype=float)
    out = np.empty((n_max + 1,) + x.shape)
    log_amp = -0.5 * x * x
    prev = np.zeros_like(x)
    cur = np.full_like(x, np.pi ** -0.25)
    out[0] = cur * np.exp(log_amp)
    for k in range(n_max):
        nxt = x * np.sqrt(2.0 / (k + 1)) * cur - np.sqrt(k / (k + 1.0)) * prev
        prev, cur = cur, nxt
        big = np.abs(cur) > _RESCALE
        if np.any(big):
            s = np.where(big, 1.0 / _RESCALE, 1.0)
            prev = prev * s
            cur = cur * s
            log_amp = log_amp + np.where(big, np.log(_RESCALE), 0.0)
        with np.errstate(over="raise"):
            try:
                out[k + 1] = cur * np.exp(log_amp)
            except FloatingPointError as exc:
                raise PtSpecError(f"psi_{k + 1} overflows at |x| <= {np.max(np.abs(x))}") from exc
    return out


def eval_oscillator_fn(n: int, x: float) -> float:
    """psi_n(x) = (2^n n! sqrt(pi))^{-1/2} H_n(x) exp(-x^2/2)."""
    if n < 0:
        raise ValueError("n must be >= 0")
    return float(oscillator_table(n, x)[n])


def matrix_element(m: int, n: int, params: ProblemParams) -> complex:
    """<psi_m| i gamma (delta(x-b) - delta(x+b)) |psi_n>."""
    if m < 0 or n < 0:
        raise ValueError("indices must be >= 0")
    if (m + n) % 2 == 0:
        return 0j
    top = max(m, n)
    vals = oscillator_table(top, params.b)
    # psi_m(-b) psi_n(-b) = -psi_m(b) psi_n(b) for opposite parity
    return 2j * params.gamma * vals[m] * vals[n]


def perturbation_matrix(dim: int, params: ProblemParams) -> np.ndarray:
    vals = oscillator_table(dim - 1, params.b)
    k = np.arange(dim)
    odd = ((k[:, None] + k[None, :]) % 2) == 1
    return np.where(odd, 2j * params.gamma * np.outer(vals, vals), 0j)


@dataclass(frozen=True)
class MSBoundReport:
    """Outcome of the decay-bound scan over indices 1..n_max.

    ``validity[i, j]`` and ``satisfied[i, j]`` refer to the pair
    ``(indices[i], indices[j])``.
    """

    alpha: float
    M_const: float
    C_tilde: float
    indices: np.ndarray
    validity: np.ndarray
    satisfied: np.ndarray
    magnitudes: np.ndarray

    @property
    def all_valid_satisfied(self) -> bool:
        return bool(np.all(self.satisfied[self.validity]))

    @property
    def parity_zero(self) -> bool:
        k = self.indices
        same = ((k[:, None] + k[None, :]) % 2) == 0
        return bool(np.all(self.magnitudes[same] == 0.0))


def ms_bound_scan(n_max: int, params: ProblemParams, rtol: float = 1e-12) -> MSBoundReport:
    """Measure the smallest C~ with |psi_n(b)| <= C~ n^{-1/4} and check the pair bound.

    The bound constant is M = 2|gamma| C~^2 and every pair (m, n) is
    tested against M m^{-1/4} n^{-1/4}.  C~ is taken over the indices whose
    inequality is valid, i.e. 2(2n+1) >= b^2.
    """
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    idx = np.arange(1, n_max + 1)
    psi_b = oscillator_table(n_max, params.b)[1:]
    valid_n = 2 * (2 * idx + 1) >= params.b ** 2
    scaled = np.abs(psi_b) * idx ** MS_ALPHA
    c_tilde = float(np.max(scaled[valid_n])) if np.any(valid_n) else float("nan")
    m_const = 2 * abs(params.gamma) * c_tilde ** 2

    odd = ((idx[:, None] + idx[None, :]) % 2) == 1
    mags = np.where(odd, 2 * abs(params.gamma) * np.abs(np.outer(psi_b, psi_b)), 0.0)
    bound = m_const * np.outer(idx, idx).astype(float) ** -MS_ALPHA
    satisfied = mags <= bound * (1 + rtol)
    validity = valid_n[:, None] & valid_n[None, :]
    return MSBoundReport(MS_ALPHA, m_const, c_tilde, idx, validity, satisfied, mags)
