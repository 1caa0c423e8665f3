"""Shadow price g on the lattice, the reflected state machine, and the
explicit log-optimal portfolio.

The ratio Z_t = S_t/m_t lives on the lattice {1, u, ..., u^k} (indices
0..k). m is the auxiliary running extremum: it decreases only when the
price sits at the bottom boundary (S_t = m_t) and moves down, and increases
only when it sits at the top (S_t = sbar*m_t) and moves up; at those events
the portfolio trades (buy at the ask, sell at the bid), otherwise holdings
are frozen. The shadow price is S~_t = m_t * g(Z_t) with

    g(u^n) = (c(1 - x^n) + beta_p) / (-(1 - x^n) + beta_p)   (p != 1/2)
    g(u^n) = (c*n + beta) / (beta - n)                       (p  = 1/2)

for x = (1-p)/p, beta_p = (c+d)(2p-1)/((1-d)(1-p)), beta = (c+d)/(1-d),
evaluated on the extended lattice n = -1..k+1.

A regime switch happens on the second consecutive boundary residence:
two top hits in a row flip BUY -> SELL (a sigma stopping time), two bottom
hits flip SELL -> BUY (a rho time). Boundary membership is decided by
integer lattice indices, never by float comparison of prices.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import BrokenInvariant, DomainError, OffLattice
from .model import is_half
from .solver import ShadowSolution

EQ5_TOL = 1e-9  # relative tolerance for phi0 = c*m*phi on entry


class Regime(Enum):
    BUY = "buy"
    SELL = "sell"


def g_lattice_values(sol: ShadowSolution) -> np.ndarray:
    """g at u^n for integer n = -1..k+1 (array index n+1)."""
    p, d, c = sol.params.p, sol.params.d, sol.c
    k = int(round(sol.k))
    n = np.arange(-1, k + 2, dtype=float)
    if is_half(p):
        beta = (c + d) / (1 - d)
        den = beta - n
        num = c * n + beta
    else:
        x = (1 - p) / p
        beta = (c + d) * (2 * p - 1) / ((1 - d) * (1 - p))
        xn = x ** n
        den = -(1 - xn) + beta
        num = c * (1 - xn) + beta
    if np.any(den == 0.0) or np.any(np.sign(den) != np.sign(den[0])):
        raise DomainError("g denominator changes sign on the lattice")
    return num / den


@dataclass(frozen=True)
class ShadowFunction:
    """Precomputed g on the (k+3)-point lattice n = -1..k+1."""

    solution: ShadowSolution
    g: np.ndarray  # g[n+1] = g(u^n)

    @classmethod
    def from_solution(cls, sol: ShadowSolution) -> "ShadowFunction":
        if abs(sol.k - round(sol.k)) > 1e-9:
            raise DomainError(f"k={sol.k} is not an integer; calibrate first")
        vals = g_lattice_values(sol)
        if np.any(np.diff(vals) <= 0.0):
            raise DomainError("g is not strictly increasing on the lattice")
        return cls(solution=sol, g=vals)

    @property
    def k(self) -> int:
        return int(round(self.solution.k))

    @property
    def c(self) -> float:
        return self.solution.c

    def g_at(self, n: int) -> float:
        """g(u^n) for integer lattice index n in [-1, k+1]."""
        if not -1 <= n <= self.k + 1:
            raise OffLattice(f"lattice index {n} outside [-1, {self.k + 1}]")
        return float(self.g[n + 1])

    def g_eval(self, s: float) -> float:
        """g at a price ratio s; s must be a lattice point u^n, n in [-1, k+1]."""
        u = self.solution.params.u
        if s <= 0.0:
            raise OffLattice(f"s={s} <= 0")
        n_real = math.log(s) / math.log(u)
        n = round(n_real)
        if abs(s - u ** n) > 1e-9 * s:
            raise OffLattice(f"s={s} is not a lattice point (nearest u^{n})")
        return self.g_at(n)


def g_eval(sf: ShadowFunction, s: float) -> float:
    return sf.g_eval(s)


@dataclass(frozen=True)
class OptimalityReport:
    max_abs_deviation: float
    deviations: tuple[float, ...]  # indexed by lattice n = 0..k


def optimality_identity_check(sf: ShadowFunction) -> OptimalityReport:
    """Check the one-step optimality identity at every interior lattice point:

    [p g(us)/g(s) + (1-p) g(ds)/g(s) - 1] / [(g(us)/g(s)-1)(1-g(ds)/g(s))]
        = g(s)/(c + g(s)),   s = u^n, n = 0..k.
    """
    p = sf.solution.params.p
    c = sf.c
    devs = []
    for n in range(0, sf.k + 1):
        gs, gu, gd = sf.g_at(n), sf.g_at(n + 1), sf.g_at(n - 1)
        ru, rd = gu / gs, gd / gs
        lhs = (p * ru + (1 - p) * rd - 1.0) / ((ru - 1.0) * (1.0 - rd))
        rhs = gs / (c + gs)
        devs.append(abs(lhs - rhs))
    return OptimalityReport(max_abs_deviation=max(devs), deviations=tuple(devs))


@dataclass(frozen=True)
class PathState:
    """One step of the regime-switching process; all positions are integer.

    m = s0 * u^i and S = s0 * u^(i+n), so boundary hits are exact.
    """

    t: int
    n: int  # Z_t = u^n, 0 <= n <= k
    i: int  # m_t = s0 * u^i
    k: int
    regime: Regime
    top_streak: int
    bottom_streak: int
    n_sigma: int
    n_rho: int

    def price(self, params) -> float:
        return params.s0 * params.u ** (self.i + self.n)

    def m_value(self, params) -> float:
        return params.s0 * params.u ** self.i

    def log_m(self, params) -> float:
        return math.log(params.s0) + self.i * math.log(params.u)


def initial_state(sf: ShadowFunction) -> PathState:
    # rho_0 convention: start in BUY regime at t=0 with m_0 = S_0 (Z_0 = 1)
    return PathState(t=0, n=0, i=0, k=sf.k, regime=Regime.BUY,
                     top_streak=0, bottom_streak=1, n_sigma=0, n_rho=0)


def step(state: PathState, move: int) -> PathState:
    """Advance one period; move is +1 (up) or -1 (down).

    Z reflects at the boundaries: at the top an up-move raises m instead of
    Z (a sell event), at the bottom a down-move lowers m (a buy event).
    The second consecutive top residence fires sigma (BUY -> SELL); the
    second consecutive bottom residence fires rho (SELL -> BUY).
    """
    n, i, k = state.n, state.i, state.k
    regime, n_sigma, n_rho = state.regime, state.n_sigma, state.n_rho
    if move > 0:
        if n < k:
            n += 1
            top = 1 if n == k else 0
            bottom = 0
        else:
            i += 1
            top = state.top_streak + 1
            bottom = 0
            if regime is Regime.BUY:
                regime = Regime.SELL
                n_sigma += 1
    else:
        if n > 0:
            n -= 1
            bottom = 1 if n == 0 else 0
            top = 0
        else:
            i -= 1
            bottom = state.bottom_streak + 1
            top = 0
            if regime is Regime.SELL:
                regime = Regime.BUY
                n_rho += 1
    return PathState(t=state.t + 1, n=n, i=i, k=k, regime=regime,
                     top_streak=top, bottom_streak=bottom,
                     n_sigma=n_sigma, n_rho=n_rho)


def shadow_price(state: PathState, sf: ShadowFunction) -> float:
    """S~_t = m_t * g(Z_t); lies in the bid-ask interval [(1-lam)S, S]."""
    return state.m_value(sf.solution.params) * sf.g_at(state.n)


@dataclass(frozen=True)
class Portfolio:
    phi0: float
    phi: float
    shadow_wealth: float
    liquidation_wealth: float


def _wealths(phi0: float, phi: float, state: PathState, sf: ShadowFunction) -> Portfolio:
    params = sf.solution.params
    s = state.price(params)
    stilde = shadow_price(state, sf)
    liq = phi0 + (1 - params.lam) * phi * s if phi >= 0 else phi0 - (-phi) * s
    return Portfolio(phi0=phi0, phi=phi, shadow_wealth=phi0 + phi * stilde,
                     liquidation_wealth=liq)


def initial_portfolio(x: float, sf: ShadowFunction, state: PathState) -> Portfolio:
    """Initial trade from (x, 0) at the ask: phi0 = cx/(c+1), phi = x/((c+1)s0)."""
    c = sf.c
    s0 = sf.solution.params.s0
    return _wealths(c * x / (c + 1), x / ((c + 1) * s0), state, sf)


def buy_factors(sol: ShadowSolution) -> tuple[float, float]:
    """(phi0, phi) multipliers for one m-downtick: ((c+d)/(c+1), (c+d)/((c+1)d))."""
    c, d = sol.c, sol.params.d
    return (c + d) / (c + 1), (c + d) / ((c + 1) * d)


def sell_factors(sol: ShadowSolution) -> tuple[float, float]:
    """(phi0, phi) multipliers for one m-uptick; phi scales by
    (cd + (1-lam)sbar)/(c + (1-lam)sbar), phi0 by u times that."""
    c, d, lam, sbar = sol.c, sol.params.d, sol.params.lam, sol.sbar
    f = (c * d + (1 - lam) * sbar) / (c + (1 - lam) * sbar)
    return f / d, f


def portfolio_step(pf: Portfolio, state_before: PathState, state_after: PathState,
                   sf: ShadowFunction) -> Portfolio:
    """Advance holdings per the explicit strategy: trade only when m moved.

    Maintains phi0 = c * m * phi exactly by recomputing phi0 from phi after
    every trade; self-financing in S~ then holds identically.
    """
    if state_after.t != state_before.t + 1:
        raise BrokenInvariant("states are not consecutive")
    params = sf.solution.params
    c = sf.c
    m_before = state_before.m_value(params)
    if abs(pf.phi0 - c * m_before * pf.phi) > EQ5_TOL * max(abs(pf.phi0), 1e-300):
        raise BrokenInvariant(
            f"phi0={pf.phi0} != c*m*phi={c * m_before * pf.phi} on entry"
        )
    di = state_after.i - state_before.i
    phi0, phi = pf.phi0, pf.phi
    if di == 0:
        return _wealths(phi0, phi, state_after, sf)
    if di < 0:
        f0, _ = buy_factors(sf.solution)
        phi0 = phi0 * f0
        phi = phi0 / (c * state_after.m_value(params))
    else:
        _, f = sell_factors(sf.solution)
        phi = phi * f
        phi0 = c * state_after.m_value(params) * phi
    return _wealths(phi0, phi, state_after, sf)


@dataclass(frozen=True)
class ReplayStep:
    state: PathState
    portfolio: Portfolio
    stilde: float


def replay(sf: ShadowFunction, moves, x: float = 1.0) -> list[ReplayStep]:
    """Run the strategy along one move sequence (+1/-1 per period)."""
    state = initial_state(sf)
    pf = initial_portfolio(x, sf, state)
    out = [ReplayStep(state=state, portfolio=pf, stilde=shadow_price(state, sf))]
    for mv in moves:
        nxt = step(state, 1 if mv > 0 else -1)
        pf = portfolio_step(pf, state, nxt, sf)
        state = nxt
        out.append(ReplayStep(state=state, portfolio=pf, stilde=shadow_price(state, sf)))
    return out


@dataclass(frozen=True)
class ConditionsReport:
    n_steps: int
    n_buys: int
    n_sells: int
    boundary_violations: int
    max_selffin_rel: float
    max_band_excess: float  # how far pi~ left [1/(1+c), 1/(1+c/sbar)]

    @property
    def ok(self) -> bool:
        return (self.boundary_violations == 0 and self.max_selffin_rel <= 1e-12
                and self.max_band_excess <= 1e-12)


def shadow_conditions_check(moves, sf, x: float = 1.0) -> ConditionsReport:
    """Replay one path and verify the shadow-price trading conditions:

    increases of phi only where S~ = S, decreases only where S~ = (1-lam)S,
    self-financing in S~ at every step, and pi~ inside the no-trade band.
    Violations are counted, not raised. Accepts a ShadowFunction or a
    (calibrated) ShadowSolution.
    """
    if isinstance(sf, ShadowSolution):
        sf = ShadowFunction.from_solution(sf)
    params = sf.solution.params
    c, lam, sbar = sf.c, params.lam, sf.solution.sbar
    lo_pi, hi_pi = 1 / (1 + c), 1 / (1 + c / sbar)
    steps = replay(sf, moves, x=x)
    n_buys = n_sells = violations = 0
    max_sf = 0.0
    max_band = 0.0
    for prev, cur in zip(steps[:-1], steps[1:]):
        pre_trade = prev.portfolio.phi0 + prev.portfolio.phi * cur.stilde
        max_sf = max(max_sf, abs(cur.portfolio.shadow_wealth - pre_trade) / pre_trade)
        dphi = cur.portfolio.phi - prev.portfolio.phi
        s = cur.state.price(params)
        if dphi > 1e-14 * prev.portfolio.phi:
            n_buys += 1
            if cur.state.n != 0 or abs(cur.stilde - s) > 1e-10 * s:
                violations += 1
        elif dphi < -1e-14 * prev.portfolio.phi:
            n_sells += 1
            if cur.state.n != sf.k or abs(cur.stilde - (1 - lam) * s) > 1e-10 * s:
                violations += 1
        pi = cur.portfolio.phi * cur.stilde / cur.portfolio.shadow_wealth
        max_band = max(max_band, lo_pi - pi, pi - hi_pi, 0.0)
    return ConditionsReport(n_steps=len(moves), n_buys=n_buys, n_sells=n_sells,
                            boundary_violations=violations, max_selffin_rel=max_sf,
                            max_band_excess=max_band)
