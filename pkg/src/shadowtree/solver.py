"""The cost-to-ratio map F, its root c, and the integer-k calibration.

F(c) maps the optimal bond/stock ratio c to the transaction cost lam for
which it is optimal:

    F(c) = 1 - A(c)^2 * r(c)^(b-1)            (p != 1/2)
    F(c) = 1 - c^2 * d^((c+d)(c-1)/(c(1-d)))  (p  = 1/2)

with A(c) = (c(p+pd-d) + d(2p-1)) / ((1-d)(1-p)) and

    r(c) = [c(p+pd-d) + d(2p-1)] [1-p-pd - c(2p-1)] / (c (1-d)^2 (1-p)^2),
    b = log(d) / log((1-p)/p).

F(cbar) = 0 and F(c) = lam has a unique root above cbar (below
c2 = (1-p-pd)/(2p-1) when p > 1/2). The sell boundary is sbar = u^k with
k = log(r(c))/log((1-p)/p), resp. k = (c+d)(c-1)/(c(1-d)) at p = 1/2.

Everything is evaluated in log-domain (log1p/expm1 on the exact linear
factors A-1 and B-1, where r = A*B) so tiny lam and the near-Black-Scholes
regime keep full relative precision.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from scipy.optimize import brentq

from .errors import DomainError, NoAdmissibleRoot, NoBracket, NoConvergence
from .model import (
    DerivedConstants,
    ModelParams,
    cbar_const,
    derived_constants,
    is_half,
    validate,
)

RESIDUAL_TOL = 1e-13
_MAX_EXPAND = 200


@dataclass(frozen=True)
class ShadowSolution:
    """Solved shadow-price construction for one (p, d, lam)."""

    params: ModelParams
    constants: DerivedConstants
    c: float
    k: float
    sbar: float
    beta: float
    r_of_c: float | None  # r(c) = ((1-p)/p)^k; None on the p=1/2 branch
    residual: float  # |F(c) - lam|
    k_integer: bool
    admissible: bool  # (p, d) inside the drift window

    @property
    def lam(self) -> float:
        return self.params.lam


def _split_factors(p: float, d: float, c: float) -> tuple[float, float]:
    """(A-1, B-1) where r(c) = A*B; both exact linear fractions in c - cbar."""
    cb = cbar_const(p, d)
    big_p = p + p * d - d
    den = (1 - d) * (1 - p)
    return (c - cb) * big_p / den, big_p * (cb - c) / (c * den)


def f_scalar(p: float, d: float, c: float) -> float:
    if is_half(p):
        if c <= 0.0:
            raise DomainError(f"c={c} <= 0")
        k = (c + d) * (c - 1) / (c * (1 - d))
        return -math.expm1(2 * math.log(c) + k * math.log(d))
    am1, bm1 = _split_factors(p, d, c)
    if 1 + am1 <= 0.0 or 1 + bm1 <= 0.0:
        raise DomainError(f"r(c) <= 0 at c={c} (p={p}, d={d})")
    b = math.log(d) / math.log((1 - p) / p)
    log_r = math.log1p(am1) + math.log1p(bm1)
    return -math.expm1(2 * math.log1p(am1) + (b - 1) * log_r)


def big_f(params: ModelParams, c: float) -> float:
    """Evaluate F(c); params.lam is not consulted."""
    return f_scalar(params.p, params.d, c)


def r_scalar(p: float, d: float, c: float) -> float:
    am1, bm1 = _split_factors(p, d, c)
    return (1 + am1) * (1 + bm1)


def k_scalar(p: float, d: float, c: float) -> float:
    if is_half(p):
        return (c + d) * (c - 1) / (c * (1 - d))
    r = r_scalar(p, d, c)
    if r <= 0.0:
        raise DomainError(f"r(c)={r} <= 0 at c={c}")
    return math.log(r) / math.log((1 - p) / p)


def k_of_c(params: ModelParams, c: float) -> float:
    """Net up-steps to the sell boundary: k with sbar = u^k; k(cbar) = 0."""
    return k_scalar(params.p, params.d, c)


def _upper_edge(p: float, d: float) -> float | None:
    """c2 = (1-p-pd)/(2p-1) when it lies above cbar (admissible p > 1/2)."""
    if is_half(p) or p < 0.5:
        return None
    c2 = (1 - p - p * d) / (2 * p - 1)
    return c2 if c2 > cbar_const(p, d) else None


def _bracket_high(p: float, d: float, lam: float, lo: float) -> float:
    """Expand upward from lo until F exceeds lam, halving on domain walls."""
    edge = _upper_edge(p, d)
    if edge is not None:
        hi = edge - 1e-12 * max(1.0, abs(edge))
        if f_scalar(p, d, hi) > lam:
            return hi
        # F -> 1 at the edge but can approach slowly when b is near 1;
        # fall through to the expanding search, which stops at the wall
    h = 0.5 * max(1.0, abs(lo))
    cur = lo
    for _ in range(_MAX_EXPAND):
        cand = cur + h
        try:
            val = f_scalar(p, d, cand)
        except (DomainError, ValueError, OverflowError):
            h *= 0.5
            if h < 1e-15 * max(1.0, abs(cur)):
                raise NoBracket(f"domain wall before F reached {lam}")
            continue
        if val > lam:
            return cand
        cur = cand
        h *= 2.0
    raise NoBracket(f"F never exceeded lam={lam} during expansion")


def solve_c(params: ModelParams) -> ShadowSolution:
    """Solve F(c) = params.lam for the unique root above cbar.

    Bracketed Brent iteration (bisection/secant/inverse-quadratic hybrid)
    inside [cbar + eps, upper]; residual |F(c) - lam| must meet RESIDUAL_TOL.
    """
    p, d, lam = params.p, params.d, params.lam
    if not (0.0 < lam < 1.0):
        raise DomainError(f"need 0 < lam < 1 (got {lam})")
    cb = cbar_const(p, d)
    lo = cb + 1e-12 * max(1.0, abs(cb))
    hi = _bracket_high(p, d, lam, lo)
    c = brentq(lambda x: f_scalar(p, d, x) - lam, lo, hi,
               xtol=1e-15, rtol=8.9e-16, maxiter=200)
    resid = abs(f_scalar(p, d, c) - lam)
    if resid > RESIDUAL_TOL:
        # near the upper edge F' blows up and the best attainable residual is
        # |F'| * eps * |c| (the root itself is converged to machine precision);
        # accept up to a few times that quantization floor, otherwise fail
        dc = 8 * 2.3e-16 * max(1.0, abs(c))
        try:
            span = abs(f_scalar(p, d, c + dc) - f_scalar(p, d, c - dc))
        except DomainError:
            span = 0.0
        if resid > max(RESIDUAL_TOL, 4.0 * span):
            raise NoConvergence(f"residual {resid} > {RESIDUAL_TOL}")
    return _finish_solution(params, c, resid, k_integer=False)


def _finish_solution(params: ModelParams, c: float, resid: float,
                     k_integer: bool) -> ShadowSolution:
    p, d = params.p, params.d
    k = k_scalar(p, d, c)
    if k_integer:
        k = round(k)
    sbar = math.exp(-k * math.log(d))  # u^k in log-domain
    if is_half(p):
        beta = (c + d) / (1 - d)
        r = None
    else:
        beta = (c + d) * (2 * p - 1) / ((1 - d) * (1 - p))
        r = r_scalar(p, d, c)
    return ShadowSolution(
        params=params,
        constants=derived_constants(params),
        c=c,
        k=float(k),
        sbar=sbar,
        beta=beta,
        r_of_c=r,
        residual=resid,
        k_integer=k_integer,
        admissible=params.admissible_drift(),
    )


def calibrate_integer_k(p: float, d: float, k_target: int, s0: float = 1.0) -> ShadowSolution:
    """Find (c, lam) so the sell boundary sits exactly k_target steps up.

    Solves the quadratic r(c) = ((1-p)/p)^k_target for c and returns the
    solution with lam = F(c). The quadratic's second root (the one matching
    k = -1, i.e. hitting at the ask instead of the bid) falls outside the
    admissible interval and is rejected.
    """
    if k_target < 1 or k_target != int(k_target):
        raise DomainError(f"k_target must be a positive integer (got {k_target})")
    validate(ModelParams(d=d, p=p, lam=0.0, s0=s0))
    cb = cbar_const(p, d)
    if is_half(p):
        # (c+d)(c-1) = c(1-d)k  =>  c^2 - (1-d)(1+k)c - d = 0, root above 1
        half_b = 0.5 * (1 - d) * (1 + k_target)
        c = half_b + math.sqrt(half_b * half_b + d)
    else:
        y = ((1 - p) / p) ** k_target
        a1 = p + p * d - d
        b1 = d * (2 * p - 1)
        a2 = -(2 * p - 1)
        b2 = 1 - p - p * d
        qa = a1 * a2
        qb = a1 * b2 + a2 * b1 - y * (1 - d) ** 2 * (1 - p) ** 2
        qc = b1 * b2
        disc = qb * qb - 4 * qa * qc
        if disc < 0.0:
            raise NoAdmissibleRoot(f"negative discriminant for k={k_target}")
        roots = ((-qb + math.sqrt(disc)) / (2 * qa), (-qb - math.sqrt(disc)) / (2 * qa))
        edge = _upper_edge(p, d)
        cands = [x for x in roots if x > cb and (edge is None or x < edge)]
        if len(cands) != 1:
            raise NoAdmissibleRoot(
                f"roots {roots} vs interval ({cb}, {edge if edge is not None else 'inf'})"
            )
        c = cands[0]
    lam = f_scalar(p, d, c)
    if not (0.0 < lam < 1.0):
        raise NoAdmissibleRoot(f"calibrated lam={lam} outside (0, 1)")
    params = ModelParams(d=d, p=p, lam=lam, s0=s0)
    return _finish_solution(params, c, 0.0, k_integer=True)
