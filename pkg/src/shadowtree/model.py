"""Market parameters, validation, and the frictionless baseline.

The market is a recombining binomial tree: S_{t+1} = u*S_t with probability p,
S_{t+1} = d*S_t with probability 1-p, d = 1/u, zero interest, and proportional
transaction cost lam, so the bid/ask prices are (1-lam)*S and S.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import RejectsArbitrage, RejectsDrift, RejectsRecombining

# |p - 1/2| below this selects the p=1/2 formula branch everywhere; the
# general-p formulas are 0/0 at p=1/2 and lose precision nearby.
P_HALF_TOL = 1e-11

# inputs this close to an open-interval endpoint are rejected: every
# downstream formula has a pole there.
BOUNDARY_TOL = 1e-12

RECOMBINING_TOL = 1e-12


def is_half(p: float) -> bool:
    return abs(p - 0.5) < P_HALF_TOL


@dataclass(frozen=True)
class ModelParams:
    """Binomial market parameters.

    Stored as (d, p, lam, s0); u is always computed as 1/d so the
    recombining identity cannot drift. An explicit ``u`` may be supplied
    purely so that validate() can check |u*d - 1|.
    """

    d: float
    p: float
    lam: float
    s0: float = 1.0
    u_input: float | None = None

    @property
    def u(self) -> float:
        return 1.0 / self.d

    @property
    def q(self) -> float:
        return 1.0 - self.p

    def admissible_drift(self) -> bool:
        d = self.d
        return d / (1 + d) + BOUNDARY_TOL < self.p < 1 / (1 + d) - BOUNDARY_TOL


@dataclass(frozen=True)
class DerivedConstants:
    """Constants derived from (p, d): cbar, b, eta, and the Merton fraction."""

    cbar: float
    b: float | None  # log(d)/log((1-p)/p); undefined at p = 1/2
    eta: float
    merton_pi: float


@dataclass(frozen=True)
class ValidatedModel:
    params: ModelParams
    constants: DerivedConstants


def cbar_const(p: float, d: float) -> float:
    """Frictionless optimal bond/stock ratio: (1-p-pd)/(p+pd-d); 1 at p=1/2."""
    if is_half(p):
        return 1.0
    return (1 - p - p * d) / (p + p * d - d)


def eta_const(p: float, d: float) -> float:
    """eta = (2p-1)log(d) / ((1-d)log((1-p)/p)), continued by log(d)/(-2(1-d)) at p=1/2."""
    if is_half(p):
        return math.log(d) / (-2.0 * (1.0 - d))
    return (2 * p - 1) * math.log(d) / ((1 - d) * math.log((1 - p) / p))


def b_const(p: float, d: float) -> float | None:
    if is_half(p):
        return None
    return math.log(d) / math.log((1 - p) / p)


def derived_constants(params: ModelParams) -> DerivedConstants:
    p, d = params.p, params.d
    cb = cbar_const(p, d)
    return DerivedConstants(
        cbar=cb,
        b=b_const(p, d),
        eta=eta_const(p, d),
        merton_pi=1.0 / (1.0 + cb),
    )


def validate(params: ModelParams) -> ValidatedModel:
    """Check all model invariants and return the params with derived constants.

    Raises RejectsArbitrage, RejectsRecombining, or RejectsDrift; also rejects
    lam outside [0, 1), s0 <= 0, and p within BOUNDARY_TOL of {0, 1}.
    """
    d, p, lam, s0 = params.d, params.p, params.lam, params.s0
    if not (0.0 < d < 1.0):
        raise RejectsArbitrage(f"need 0 < d < 1 (got d={d})")
    if params.u_input is not None and abs(params.u_input * d - 1.0) > RECOMBINING_TOL:
        raise RejectsRecombining(f"u*d = {params.u_input * d} != 1")
    if not (BOUNDARY_TOL < p < 1.0 - BOUNDARY_TOL):
        raise RejectsDrift(f"p={p} outside (0, 1)")
    if not params.admissible_drift():
        raise RejectsDrift(
            f"p={p} outside ({d / (1 + d)}, {1 / (1 + d)}) for d={d}"
        )
    if not (0.0 <= lam < 1.0):
        raise ValueError(f"need 0 <= lam < 1 (got {lam})")
    if not s0 > 0.0:
        raise ValueError(f"need s0 > 0 (got {s0})")
    return ValidatedModel(params=params, constants=derived_constants(params))


def frictionless_fraction(p_up: float, u: float, d: float) -> float:
    """Log-optimal fraction of wealth in stock for one period without costs.

    pi = (p*u + (1-p)*d - 1) / ((u - 1)(1 - d)).
    """
    if not (u > 1.0 > d > 0.0):
        raise RejectsArbitrage(f"need u > 1 > d > 0 (got u={u}, d={d})")
    if not (0.0 < p_up < 1.0):
        raise RejectsDrift(f"need 0 < p < 1 (got {p_up})")
    return (p_up * u + (1 - p_up) * d - 1.0) / ((u - 1.0) * (1.0 - d))


def frictionless_growth(params: ModelParams) -> float:
    """Optimal growth rate per period with lam = 0: log((1+d) p^p (1-p)^(1-p) / d^p)."""
    p, d = params.p, params.d
    return math.log(1 + d) + p * math.log(p) + (1 - p) * math.log(1 - p) - p * math.log(d)


def state_price_density(moves: list[int], params: ModelParams) -> float:
    """Z_t = prod over moves of (ptilde/p) per up and (qtilde/q) per down.

    ptilde = (1-d)/(u-d). The frictionless optimal wealth is V0/Z_t.
    """
    p, d, u = params.p, params.d, params.u
    ptilde = (1 - d) / (u - d)
    z = 1.0
    for mv in moves:
        z *= ptilde / p if mv > 0 else (1 - ptilde) / (1 - p)
    return z
