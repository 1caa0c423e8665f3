"""The reflected chain Z_t = S_t/m_t on {1, u, ..., u^k} and the optimal
growth rate.

Transition structure: step up with probability p and down with 1-p,
reflecting at both ends (P[k,k] = p, P[0,0] = 1-p). The invariant law is
uniform for p = 1/2 and geometric alpha_n proportional to (p/(1-p))^n
otherwise. The optimal growth rate is the stationary expectation of the
one-step log growth of shadow wealth, which telescopes to a closed form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .model import is_half
from .shadow import ShadowFunction
from .solver import ShadowSolution


def transition_matrix(p: float, k: int) -> np.ndarray:
    """Birth-death matrix on states 0..k with reflecting boundaries."""
    if k < 1:
        raise DomainError(f"need k >= 1 (got {k})")
    if not 0.0 < p < 1.0:
        raise DomainError(f"need 0 < p < 1 (got {p})")
    m = np.zeros((k + 1, k + 1))
    for i in range(k + 1):
        if i < k:
            m[i, i + 1] = p
        else:
            m[i, i] += p
        if i > 0:
            m[i, i - 1] = 1 - p
        else:
            m[i, i] += 1 - p
    return m


def invariant_distribution(p: float, k: int) -> np.ndarray:
    """alpha with alpha^T P = alpha^T: uniform at p=1/2, geometric otherwise."""
    if k < 1:
        raise DomainError(f"need k >= 1 (got {k})")
    if is_half(p):
        return np.full(k + 1, 1.0 / (k + 1))
    w = (p / (1 - p)) ** np.arange(k + 1, dtype=float)
    return w / w.sum()


@dataclass(frozen=True)
class BoundaryChain:
    k: int
    p: float
    transition: np.ndarray
    alpha: np.ndarray

    @classmethod
    def build(cls, p: float, k: int) -> "BoundaryChain":
        return cls(k=k, p=p, transition=transition_matrix(p, k),
                   alpha=invariant_distribution(p, k))


def growth_rate_closed_form(sol: ShadowSolution) -> float:
    """Optimal growth rate per period.

        R = c(1-d)/(c^2-d) * log((c+d)/(sqrt(d)(c+1)))            (p = 1/2)
        R = (1-2p)/((1-p)(1-rho^(k+1)))
            * [(1-p) log((c+d)/(c+1)) + p rho^k log((c+d)p/((c+1)(1-p)d))]
                                                                  (p != 1/2)

    with rho = p/(1-p). The k may be non-integral; the formula is then the
    analytic interpolation used for expansion checks.
    """
    p, d, c, k = sol.params.p, sol.params.d, sol.c, sol.k
    if is_half(p):
        if c <= 0.0 or (c + d) / (math.sqrt(d) * (c + 1)) <= 0.0:
            raise DomainError(f"log argument non-positive at c={c}")
        return c * (1 - d) / (c * c - d) * math.log((c + d) / (math.sqrt(d) * (c + 1)))
    arg1 = (c + d) / (c + 1)
    arg2 = (c + d) * p / ((c + 1) * (1 - p) * d)
    if arg1 <= 0.0 or arg2 <= 0.0:
        raise DomainError(f"log argument non-positive at c={c}")
    rho = p / (1 - p)
    pref = (1 - 2 * p) / ((1 - p) * (1 - rho ** (k + 1)))
    return pref * ((1 - p) * math.log(arg1) + p * rho ** k * math.log(arg2))


def growth_rate_stationary(sol: ShadowSolution) -> float:
    """R as the stationary expectation over the chain and the lattice g:

    R = -p E*[log((c+g(Z))/(c+g(uZ)))] - (1-p) E*[log((c+g(Z))/(c+g(dZ)))].
    """
    sf = ShadowFunction.from_solution(sol)
    p = sol.params.p
    c = sol.c
    k = sf.k
    alpha = invariant_distribution(p, k)
    logcg = np.log(c + sf.g)  # index n+1
    total = 0.0
    for n in range(k + 1):
        up = logcg[n + 2] - logcg[n + 1]
        dn = logcg[n] - logcg[n + 1]
        total += alpha[n] * (p * up + (1 - p) * dn)
    return float(total)
