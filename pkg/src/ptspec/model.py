"""Problem definition: harmonic trap with a PT-symmetric pair of imaginary deltas.

Units are the oscillator units of the stationary equation

    -psi'' + x**2 psi + i*gamma*(delta(x - b) - delta(x + b)) psi + g |psi|**2 psi = mu psi,

so the unperturbed levels are mu_n = 2n + 1 with spacing 2.
"""
from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from enum import Enum

from scipy.optimize import brentq

from .errors import ConfigError

#: WKB action (past the turning point) at which the shooting domain is cut.
#: Round-off injected into the growing mode is amplified by exp(TAIL_ACTION).
TAIL_ACTION = 20.0
#: above this Re mu the step shrinks to hold the discretization error of mu
STEP_REF_MU = 60.0


class Parity(str, Enum):
    EVEN = "even"
    ODD = "odd"


@dataclass(frozen=True)
class ProblemParams:
    """Physical configuration of one Hamiltonian instance.

    ``x_max=None`` selects the half-width per level from the decay
    requirement (see :meth:`resolve_x_max`).
    """

    gamma: float = 0.0
    b: float = 1.0
    g: float = 0.0
    basis_cutoff: int = 120
    x_max: float | None = None
    h_target: float = 1e-3

    def __post_init__(self):
        if not self.b > 0:
            raise ConfigError(f"delta position b must be > 0, got {self.b}")
        if self.g < 0:
            raise ConfigError(f"nonlinearity g must be >= 0, got {self.g}")
        if self.basis_cutoff < 2:
            raise ConfigError("basis_cutoff must be >= 2")
        if self.x_max is not None and not self.x_max > self.b + 4:
            raise ConfigError(
                f"x_max={self.x_max} must exceed b + 4 = {self.b + 4} so the "
                "integration reaches the decaying region")
        if not 0 < self.h_target <= 0.05:
            raise ConfigError("h_target must lie in (0, 0.05]")

    def replace(self, **changes) -> ProblemParams:
        return dataclasses.replace(self, **changes)

    @property
    def step(self) -> float:
        """RK4 step: divides b into an even number of intervals."""
        m = 2 * math.ceil(self.b / (2 * self.h_target))
        return self.b / m

    def step_for(self, re_mu: float) -> float:
        """Step for levels near ``re_mu``: RK4 eigenvalue error grows like h^4 mu^3."""
        scale = min(1.0, (STEP_REF_MU / max(re_mu, 1.0)) ** 0.75)
        m = 2 * math.ceil(self.b / (2 * self.h_target * scale))
        return self.b / m

    @property
    def delta_index(self) -> int:
        return int(round(self.b / self.step))

    def resolve_x_max(self, re_mu: float) -> float:
        if self.x_max is not None:
            return self.x_max
        return max(self.b + 4.5, tail_point(re_mu, TAIL_ACTION))

    def n_steps(self, re_mu: float) -> int:
        """Even number of steps reaching at least ``resolve_x_max``."""
        h = self.step
        return 2 * math.ceil(self.resolve_x_max(re_mu) / (2 * h))

    def check_levels(self, n_max: int) -> None:
        if self.basis_cutoff < 2 * n_max:
            raise ConfigError(
                f"basis_cutoff={self.basis_cutoff} is below 2 * n_max = {2 * n_max}")


@dataclass(frozen=True)
class UnperturbedLevel:
    n: int
    mu: float
    parity: Parity


def unperturbed_spectrum(n_max: int) -> list[UnperturbedLevel]:
    if n_max < 0:
        raise ValueError("n_max must be >= 0")
    return [UnperturbedLevel(n, float(2 * n + 1), Parity.EVEN if n % 2 == 0 else Parity.ODD)
            for n in range(n_max + 1)]


def classical_turning_point(n: int) -> float:
    if n < 0:
        raise ValueError("n must be >= 0")
    return math.sqrt(2 * n + 1)


def _action(x: float, mu: float) -> float:
    # int_{sqrt(mu)}^{x} sqrt(t^2 - mu) dt, closed form
    s = math.sqrt(max(x * x - mu, 0.0))
    return 0.5 * (x * s - mu * math.log((x + s) / math.sqrt(mu)))


def tail_point(mu: float, action: float) -> float:
    """Position beyond the turning point where the WKB action reaches ``action``."""
    if mu <= 1e-12:
        # no turning point: int_0^x sqrt(t^2 + |mu|) >= x^2/2
        return math.sqrt(2 * action) + 1.0
    xt = math.sqrt(mu)
    hi = xt + 1.0
    while _action(hi, mu) < action:
        hi *= 2
    return brentq(lambda x: _action(x, mu) - action, xt, hi, xtol=1e-12)


def tail_action(x: float, mu: float) -> float:
    """WKB action accumulated between the turning point and ``x`` (0 inside)."""
    if mu <= 1e-12:
        return 0.5 * x * x
    if x * x <= mu:
        return 0.0
    return _action(x, mu)
