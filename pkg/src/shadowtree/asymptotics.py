"""Series machinery: Taylor coefficients of F at cbar, Lagrange inversion,
no-trade-region and growth expansions, and the Black-Scholes limit.

Closed forms (eta = (2p-1)log(d)/((1-d)log((1-p)/p)), continued at p=1/2):

    lambda_1 = ((1+d)eta - 1) / (cbar (1-p))
    lambda_2 = -[(1+d)^2 eta^2 + (d^2+(2-2p)d-1-2p)/(1-d) eta
                 + 2p(p+pd-d)/(1-d)] / (2 cbar^2 (1-p)^2)
    c_1 = 1/lambda_1,  c_2 = -lambda_2/lambda_1^3.

Higher orders come from central finite differences with two-level
Richardson extrapolation; the inverse series is computed by triangular
series reversion rather than hard-coded formulas.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

from scipy.optimize import brentq

from .errors import DomainError, InadmissibleDelta, NoBracket, PrecisionWarning
from .model import BOUNDARY_TOL, ModelParams, cbar_const, eta_const
from .solver import f_scalar, k_scalar, solve_c

# central-difference stencils: order -> (weights, offsets are centered)
_STENCILS = {
    1: (-0.5, 0.0, 0.5),
    2: (1.0, -2.0, 1.0),
    3: (-0.5, 1.0, 0.0, -1.0, 0.5),
    4: (1.0, -4.0, 6.0, -4.0, 1.0),
    5: (-0.5, 2.0, -2.5, 0.0, 2.5, -2.0, 0.5),
}
RICHARDSON_REL_TOL = 1e-6


def _cbrt(x: float) -> float:
    return math.copysign(abs(x) ** (1.0 / 3.0), x)


def lam1_closed(p: float, d: float) -> float:
    e = eta_const(p, d)
    return ((1 + d) * e - 1.0) / (cbar_const(p, d) * (1 - p))


def lam2_closed(p: float, d: float) -> float:
    e = eta_const(p, d)
    num = ((1 + d) ** 2 * e * e
           + (d * d + (2 - 2 * p) * d - 1 - 2 * p) / (1 - d) * e
           + 2 * p * (p + p * d - d) / (1 - d))
    return -num / (2 * cbar_const(p, d) ** 2 * (1 - p) ** 2)


def _fd_derivative(p: float, d: float, order: int, h0: float) -> tuple[float, float]:
    """F^(order)(cbar) by central differences, two Richardson levels.

    Returns (value, relative spread of the last two levels).
    """
    cb = cbar_const(p, d)
    w = _STENCILS[order]
    half = (len(w) - 1) // 2

    def stencil(h: float) -> float:
        return sum(wi * f_scalar(p, d, cb + (j - half) * h)
                   for j, wi in enumerate(w) if wi != 0.0) / h ** order

    h = h0
    while True:  # shrink until the widest stencil point is inside the domain
        try:
            d0, d1, d2 = stencil(h), stencil(h / 2), stencil(h / 4)
            break
        except DomainError:
            h *= 0.5
            if h < 1e-8 * max(1.0, abs(cb)):
                raise
    r1 = (4 * d1 - d0) / 3
    r2 = (4 * d2 - d1) / 3
    val = (16 * r2 - r1) / 15
    spread = abs(r2 - r1) / max(abs(val), 1e-300)
    return val, spread


def lambda_taylor(params: ModelParams, order: int) -> list[float]:
    """(lambda_1, ..., lambda_order): Taylor coefficients of F at cbar.

    Orders 1-2 use the closed forms; orders 3-5 finite differences (base
    step 1e-3*max(1,|cbar|), 1e-2 for orders above 3 where the smaller step
    is roundoff-dominated). Emits PrecisionWarning if Richardson levels
    disagree beyond 1e-6 relative.
    """
    if not 1 <= order <= 5:
        raise DomainError(f"order must be in 1..5 (got {order})")
    p, d = params.p, params.d
    scale = max(1.0, abs(cbar_const(p, d)))
    out = []
    for i in range(1, order + 1):
        if i == 1:
            out.append(lam1_closed(p, d))
        elif i == 2:
            out.append(lam2_closed(p, d))
        else:
            h0 = (1e-3 if i == 3 else 1e-2) * scale
            val, spread = _fd_derivative(p, d, i, h0)
            if spread > RICHARDSON_REL_TOL:
                warnings.warn(
                    f"order-{i} Richardson levels disagree by {spread:.2e}",
                    PrecisionWarning, stacklevel=2,
                )
            out.append(val / math.factorial(i))
    return out


def lambda_taylor_fd(params: ModelParams, order: int) -> list[float]:
    """All coefficients by finite differences only (cross-check path)."""
    p, d = params.p, params.d
    scale = max(1.0, abs(cbar_const(p, d)))
    out = []
    for i in range(1, order + 1):
        h0 = (1e-3 if i <= 3 else 1e-2) * scale
        val, _ = _fd_derivative(p, d, i, h0)
        out.append(val / math.factorial(i))
    return out


def invert_series(a: list[float]) -> list[float]:
    """Coefficients b of the inverse series: b(a(x)) = x, both without
    constant term (a = [a1, a2, ...]). Triangular reversion."""
    n = len(a)
    if n == 0 or a[0] == 0.0:
        raise DomainError("cannot invert a series with vanishing first coefficient")
    # powers[i][m] = coefficient of x^(m+1) in a(x)^(i+1)
    powers = [list(a)]
    for _ in range(n - 1):
        prev = powers[-1]
        nxt = [0.0] * n
        for j1, v1 in enumerate(prev):
            if v1 == 0.0:
                continue
            for j2, v2 in enumerate(a):
                j = j1 + j2 + 1
                if j < n:
                    nxt[j] += v1 * v2
        powers.append(nxt)
    b = [0.0] * n
    for m in range(n):
        target = 1.0 if m == 0 else 0.0
        acc = sum(b[i] * powers[i][m] for i in range(m))
        b[m] = (target - acc) / powers[m][m]
    return b


def c_series(params: ModelParams, order: int) -> list[float]:
    """(c_1, ..., c_order) of c(lam) = cbar + sum c_i lam^i by inversion."""
    return invert_series(lambda_taylor(params, order))


@dataclass(frozen=True)
class NTRExpansion:
    """First-order no-trade-region boundaries: theta = theta0 + theta1*lam."""

    theta0: float
    lower1: float
    upper1: float
    width1: float


def ntr_expansion(params: ModelParams) -> NTRExpansion:
    """Closed-form boundary coefficients.

    theta0 = (p+pd-d)/(1-d) (the Merton fraction); the first-order terms are
    -(1-p-pd)(p+pd-d)(1-p)/' and (1-p-pd)(p+pd-d)((1+d)eta-(1-p))/' with
    ' = ((1+d)eta - 1)(1-d)^2; the width coefficient is their difference,
    (1-p-pd)(p+pd-d)(1+d)eta/'.
    """
    p, d = params.p, params.d
    e = eta_const(p, d)
    big_p = p + p * d - d
    big_q = 1 - p - p * d
    den = ((1 + d) * e - 1.0) * (1 - d) ** 2
    return NTRExpansion(
        theta0=big_p / (1 - d),
        lower1=-big_q * big_p * (1 - p) / den,
        upper1=big_q * big_p * ((1 + d) * e - (1 - p)) / den,
        width1=big_q * big_p * (1 + d) * e / den,
    )


def growth_expansion(params: ModelParams) -> tuple[float, float]:
    """(R0, R1): R0 the frictionless growth rate, R1 the linear correction

    R1 = [ (p+pd-d)(1-p-pd) - (1+d)^2 (1-p) p log((1+d)^2 (1-p) p / d) ]
         / ((1-d^2)((1+d)eta - 1)).
    """
    p, d = params.p, params.d
    r0 = (math.log(1 + d) + p * math.log(p) + (1 - p) * math.log(1 - p)
          - p * math.log(d))
    e = eta_const(p, d)
    big_p = p + p * d - d
    big_q = 1 - p - p * d
    r1 = ((big_p * big_q
           - (1 + d) ** 2 * (1 - p) * p * math.log((1 + d) ** 2 * (1 - p) * p / d))
          / ((1 - d * d) * ((1 + d) * e - 1.0)))
    return r0, r1


@dataclass(frozen=True)
class ExpansionSet:
    lambda_coeffs: tuple[float, ...]
    c_coeffs: tuple[float, ...]
    theta_lower: tuple[float, float]  # (constant, first order)
    theta_upper: tuple[float, float]
    width_coeff: float
    growth_coeffs: tuple[float, float]
    order: int


def expansion_set(params: ModelParams, order: int) -> ExpansionSet:
    lam_c = lambda_taylor(params, order)
    ntr = ntr_expansion(params)
    return ExpansionSet(
        lambda_coeffs=tuple(lam_c),
        c_coeffs=tuple(invert_series(lam_c)),
        theta_lower=(ntr.theta0, ntr.lower1),
        theta_upper=(ntr.theta0, ntr.upper1),
        width_coeff=ntr.width1,
        growth_coeffs=growth_expansion(params),
        order=order,
    )


@dataclass(frozen=True)
class BSLimitParams:
    """Black-Scholes limit parametrization: p = 1/2 + (mu - sigma^2/2)/(2 sigma) sqrt(delta),
    d = exp(-sigma sqrt(delta)), theta = mu/sigma^2."""

    mu: float
    sigma: float
    delta: float

    def __post_init__(self):
        if self.sigma <= 0.0:
            raise DomainError(f"need sigma > 0 (got {self.sigma})")
        if self.delta <= 0.0:
            raise DomainError(f"need delta > 0 (got {self.delta})")

    @property
    def theta(self) -> float:
        return self.mu / self.sigma ** 2


def bs_params(bsl: BSLimitParams, lam: float = 0.0, s0: float = 1.0) -> ModelParams:
    """Induced binomial parameters; lam is passed through for the caller.

    Raises InadmissibleDelta when delta is so large the induced p leaves
    (0, 1). The drift-window admissibility of (p, d) is a separate concern
    checked by model.validate; the asymptotic formulas remain evaluable
    outside it.
    """
    sq = math.sqrt(bsl.delta)
    p = 0.5 + (bsl.mu - bsl.sigma ** 2 / 2) / (2 * bsl.sigma) * sq
    if not (BOUNDARY_TOL < p < 1.0 - BOUNDARY_TOL):
        raise InadmissibleDelta(f"induced p={p} outside (0, 1)")
    return ModelParams(d=math.exp(-bsl.sigma * sq), p=p, lam=lam, s0=s0)


def g_bs(c: float, theta: float, s: float) -> float:
    """Black-Scholes shadow ratio g^(BS)_c(s); convergence target of g.

        (-cs + (2 theta - 1 + 2 c theta) s^(2 theta))
        / (s - (2 - 2 theta - c(2 theta - 1)) s^(2 theta))   (theta not in {1/2, 1})
        ((c+1) + c log s) / (c + 1 - log s)                  (theta = 1/2)
    """
    if abs(theta - 1.0) < 1e-12:
        raise DomainError("theta = 1 is outside the parametrization")
    if s <= 0.0:
        raise DomainError(f"need s > 0 (got {s})")
    if abs(theta - 0.5) < 1e-12:
        ls = math.log(s)
        return ((c + 1) + c * ls) / (c + 1 - ls)
    s2t = s ** (2 * theta)
    num = -c * s + (2 * theta - 1 + 2 * c * theta) * s2t
    den = s - (2 - 2 * theta - c * (2 * theta - 1)) * s2t
    if den == 0.0:
        raise DomainError(f"g_bs pole at s={s}")
    return num / den


def f2_scalar(p: float, d: float, c: float) -> float:
    """F with its first two Taylor terms at cbar removed."""
    cb = cbar_const(p, d)
    x = c - cb
    return f_scalar(p, d, c) - lam1_closed(p, d) * x - lam2_closed(p, d) * x * x


def g2_solve(bsl: BSLimitParams, lam: float) -> float:
    """Root above cbar of F2(c) = lam for the induced binomial parameters."""
    if not (0.0 < lam < 1.0):
        raise DomainError(f"need 0 < lam < 1 (got {lam})")
    params = bs_params(bsl)
    p, d = params.p, params.d
    cb = cbar_const(p, d)
    lo = cb + 1e-13 * max(1.0, abs(cb))
    h = 0.25 * max(1.0, abs(cb))
    cur = lo
    hi = None
    for _ in range(200):
        cand = cur + h
        try:
            if f2_scalar(p, d, cand) > lam:
                hi = cand
                break
        except DomainError:
            h *= 0.5
            if h < 1e-15 * max(1.0, abs(cur)):
                raise NoBracket("domain wall before F2 reached lam") from None
            continue
        cur = cand
        h *= 2.0
    if hi is None:
        raise NoBracket(f"F2 never exceeded lam={lam}")
    return brentq(lambda x: f2_scalar(p, d, x) - lam, lo, hi,
                  xtol=1e-15, rtol=8.9e-16, maxiter=200)


@dataclass(frozen=True)
class BSExpansion:
    """Coefficient set for the near-Black-Scholes regime (delta << lam^2).

    Boundaries: theta = theta*_0 + theta*_1 lam^(1/3) + O(lam^(2/3));
    growth: R/delta = growth0 + growth1 lam^(1/3) + O(lam^(2/3));
    cbar(delta) = cbar0 + cbar1 delta + cbar2 delta^2 + O(delta^3);
    sbar = 1 + sbar1 lam^(1/3) + sbar2 lam^(2/3) + O(lam).
    """

    theta_lower0: float
    theta_lower1: float
    theta_upper0: float
    theta_upper1: float
    width_coeff: float
    growth0: float
    growth1: float
    cbar0: float
    cbar1: float
    cbar2: float
    sbar1: float
    sbar2: float
    c3_tilde: float
    c4_tilde: float


def bs_ntr_expansion(bsl: BSLimitParams) -> BSExpansion:
    """Closed-form coefficients including the sqrt(delta) corrections."""
    th = bsl.theta
    sig = bsl.sigma
    dl = bsl.delta
    sq = math.sqrt(dl)
    tt = th * th * (1 - th) ** 2  # theta^2 (1-theta)^2 >= 0
    base = _cbrt(0.75 * tt)
    corr = _cbrt(3.0 * tt / 32.0)
    shift = th + sig * sig / 24.0 * (2 * th - 1) * dl
    six = 6.0 / (th * (1 - th))
    return BSExpansion(
        theta_lower0=shift,
        theta_lower1=-base + corr * (4 * th - 3) * sig * sq,
        theta_upper0=shift,
        theta_upper1=base + corr * sig * sq,
        width_coeff=_cbrt(6.0 * tt) * (1.0 + (1 - th) * sig * sq),
        growth0=(bsl.mu ** 2 / (2 * sig * sig)
                 + sig * sig / 24.0 * th * (th - 1) * (2 * th * th - 2 * th + 1) * dl),
        growth1=_cbrt(3.0 / 32.0) * sig ** 3 * _cbrt((th * (th - 1)) ** 5) * sq,
        cbar0=(1 - th) / th,
        cbar1=sig * sig * (1 - 2 * th) / (24 * th * th),
        cbar2=(24 * th * th - 22 * th + 5) * sig ** 4 / (2880 * th ** 3),
        sbar1=_cbrt(six) + _cbrt(6 * (1 - th) ** 2 / th) * sig * sq,
        sbar2=(0.5 * _cbrt(six) ** 2
               + (7 - 2 * th) * (1 - th) * sig / 4.0 * _cbrt(six) ** 2 * sq),
        c3_tilde=(1 - th) / (2 * th) * _cbrt(six),
        c4_tilde=(1 - th) ** 2 / (4 * th) * _cbrt(six) ** 2,
    )


def exact_boundaries(params: ModelParams) -> tuple[float, float]:
    """Exact no-trade boundaries (1/(1+c), 1/(1+c/sbar)) from the solved c
    with real-valued k; usable on the extended domain."""
    sol = solve_c(params)
    sbar = math.exp(-k_scalar(params.p, params.d, sol.c) * math.log(params.d))
    return 1.0 / (1.0 + sol.c), 1.0 / (1.0 + sol.c / sbar)
