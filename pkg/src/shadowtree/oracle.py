"""Independent ground truth: exhaustive-tree evaluation of the explicit
strategy, grid dynamic programming for the true transaction-cost problem,
the optimality sandwich, and the seeded Monte Carlo engine.

The DP exploits log-homogeneity: with log utility the value separates into
log-wealth plus a function of the pre-trade stock fraction, so the state is
(t, fraction) on a uniform grid. Buying at the ask leaves mark-to-ask wealth
W = phi0 + phi*S unchanged; selling to fraction pi'' rescales it by
(1 - lam*pi)/(1 - lam*pi''); terminal utility is log(W_T (1 - lam*pi_T)).
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, IntractableSize
from .model import ModelParams
from .shadow import ShadowFunction, buy_factors, sell_factors
from .solver import ShadowSolution

MAX_EXHAUSTIVE_T = 16
MAX_DP_T = 12


def worker_count() -> int:
    raw = os.environ.get("SHADOWTREE_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


@dataclass(frozen=True)
class DPConfig:
    horizon: int
    fraction_grid: int = 2001
    fraction_range: tuple[float, float] = (0.0, 1.0)
    seed: int = 0

    def __post_init__(self):
        lo, hi = self.fraction_range
        if not (-1.0 < lo < hi < 2.0):
            raise DomainError(f"fraction_range {self.fraction_range} not inside (-1, 2)")
        if self.fraction_grid < 3:
            raise DomainError("need at least 3 grid points")
        if self.horizon < 1:
            raise DomainError("need horizon >= 1")


# ---------------------------------------------------------------------------
# exhaustive replay of the explicit strategy over all 2^T paths


@dataclass(frozen=True)
class ExhaustiveReport:
    horizon: int
    elog_liquidation: float  # E log V_T  (x = 1)
    elog_shadow: float       # E log V~_T
    elog_one_minus_lam_y: float  # E log(1 - lam * terminal ask-value fraction)
    max_selffin_rel: float
    boundary_violations: int
    max_band_excess: float
    max_pi_identity_dev: float
    y_min: float
    y_max: float


def exhaustive_report(sol: ShadowSolution, horizon: int) -> ExhaustiveReport:
    """Replay the strategy on every path of the given horizon (x = 1).

    Verifies at every step: self-financing in the shadow market, trades only
    at bid/ask (buys at Z=1, sells at Z=sbar), pi~ inside the no-trade band,
    and pi~ = g(Z)/(c+g(Z)).
    """
    if horizon > MAX_EXHAUSTIVE_T:
        raise IntractableSize(f"horizon {horizon} > {MAX_EXHAUSTIVE_T}; use simulate()")
    sf = ShadowFunction.from_solution(sol)
    params = sol.params
    p, d, lam, s0 = params.p, params.d, params.lam, params.s0
    u = params.u
    c, k = sol.c, sf.k
    g = sf.g  # g[n+1] = g(u^n)
    f0_buy, _ = buy_factors(sol)
    _, f_sell = sell_factors(sol)
    lo_pi, hi_pi = 1 / (1 + c), 1 / (1 + c / sol.sbar)

    npaths = 1 << horizon
    idx = np.arange(npaths, dtype=np.uint64)
    n = np.zeros(npaths, dtype=np.int64)
    i = np.zeros(npaths, dtype=np.int64)
    nups = np.zeros(npaths, dtype=np.int64)
    phi0 = np.full(npaths, c / (c + 1.0))
    phi = np.full(npaths, 1.0 / ((c + 1.0) * s0))

    max_sf = 0.0
    max_band = 0.0
    max_pi_dev = 0.0
    violations = 0
    for t in range(horizon):
        up = ((idx >> np.uint64(t)) & np.uint64(1)) == 1
        nups += up
        at_top = n == k
        at_bot = n == 0
        sells = up & at_top
        buys = (~up) & at_bot
        n = n + np.where(up & ~at_top, 1, 0) - np.where((~up) & ~at_bot, 1, 0)
        i = i + np.where(sells, 1, 0) - np.where(buys, 1, 0)
        m = s0 * u ** i.astype(float)
        stilde = m * g[n + 1]
        pre_trade = phi0 + phi * stilde
        phi = np.where(sells, phi * f_sell, phi)
        phi0 = np.where(sells, c * m * phi, phi0)
        phi0 = np.where(buys, phi0 * f0_buy, phi0)
        phi = np.where(buys, phi0 / (c * m), phi)
        wealth = phi0 + phi * stilde
        max_sf = max(max_sf, float(np.max(np.abs(wealth - pre_trade) / pre_trade)))
        s_price = m * u ** n.astype(float)
        bad_sell = sells & (np.abs(stilde - (1 - lam) * s_price) > 1e-10 * s_price)
        bad_buy = buys & (np.abs(stilde - s_price) > 1e-10 * s_price)
        violations += int(np.sum(bad_sell) + np.sum(bad_buy))
        pi = phi * stilde / wealth
        max_band = max(max_band, float(np.max(pi - hi_pi)), float(np.max(lo_pi - pi)))
        gn = g[n + 1]
        max_pi_dev = max(max_pi_dev, float(np.max(np.abs(pi - gn / (c + gn)))))

    m = s0 * u ** i.astype(float)
    s_price = m * u ** n.astype(float)
    stilde = m * g[n + 1]
    v_liq = phi0 + (1 - lam) * phi * s_price
    v_shadow = phi0 + phi * stilde
    y = 1.0 / (1.0 + phi0 / (phi * s_price))
    logprob = nups * math.log(p) + (horizon - nups) * math.log(1 - p)
    prob = np.exp(logprob)
    return ExhaustiveReport(
        horizon=horizon,
        elog_liquidation=float(np.sum(prob * np.log(v_liq))),
        elog_shadow=float(np.sum(prob * np.log(v_shadow))),
        elog_one_minus_lam_y=float(np.sum(prob * np.log1p(-lam * y))),
        max_selffin_rel=max_sf,
        boundary_violations=violations,
        max_band_excess=max(max_band, 0.0),
        max_pi_identity_dev=max_pi_dev,
        y_min=float(np.min(y)),
        y_max=float(np.max(y)),
    )


def shadow_strategy_value(sol: ShadowSolution, horizon: int) -> tuple[float, float]:
    """(E log V_T, E log V~_T) of the explicit strategy, exact over the tree."""
    rep = exhaustive_report(sol, horizon)
    return rep.elog_liquidation, rep.elog_shadow


# ---------------------------------------------------------------------------
# grid DP for the true problem


def _running_argmax(vals: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Prefix running max and the index where it was attained."""
    m = np.maximum.accumulate(vals)
    fresh = vals >= m
    idx = np.where(fresh, np.arange(len(vals)), 0)
    return m, np.maximum.accumulate(idx)


@dataclass(frozen=True)
class DPResult:
    value: float           # exact expected log of the DP policy (x = 1)
    backward_value: float  # interpolated backward-induction estimate
    config: DPConfig


def dp_true(params: ModelParams, cfg: DPConfig) -> DPResult:
    """Optimal expected log of liquidation wealth by backward induction.

    State (t, pre-trade fraction); controls are post-trade fractions on the
    grid; cost lam charged on stock sold (selling at the bid) or implicitly
    on purchase (at the ask). The returned value is the exact tree
    expectation of the induced policy starting from (x, 0) = (1, 0) with the
    initial trade at t=0, so it is a certified lower bound for the sup.
    """
    T = cfg.horizon
    if T > MAX_DP_T:
        raise IntractableSize(f"horizon {T} > {MAX_DP_T} for the DP")
    p, d, lam, u = params.p, params.d, params.lam, params.u
    if lam * cfg.fraction_range[1] >= 1.0:
        raise DomainError("fraction_range upper end reaches the 1/lam pole")
    grid = np.linspace(cfg.fraction_range[0], cfg.fraction_range[1], cfg.fraction_grid)
    # sell transitions rescale W by (1-lam*pi)/(1-lam*pi'') for any sign of pi'';
    # the terminal liquidation factor charges costs only on long positions.
    log_sell = np.log1p(-lam * grid)
    log_term = np.log1p(-lam * np.maximum(grid, 0.0))

    with np.errstate(divide="ignore", invalid="ignore"):
        gu = 1.0 - grid + grid * u
        gd = 1.0 - grid + grid * d
        lgu = np.where(gu > 0, np.log(np.maximum(gu, 1e-300)), -np.inf)
        lgd = np.where(gd > 0, np.log(np.maximum(gd, 1e-300)), -np.inf)
        pi_u = np.where(gu > 0, grid * u / gu, 0.0)
        pi_d = np.where(gd > 0, grid * d / gd, 0.0)

    h = log_term.copy()  # terminal: log liquidation factor
    a_tables = []
    for _ in range(T):
        iu = np.interp(pi_u, grid, h)
        idn = np.interp(pi_d, grid, h)
        a = p * (lgu + iu) + (1 - p) * (lgd + idn)
        a_tables.append(a)
        suf = np.maximum.accumulate(a[::-1])[::-1]
        pre = np.maximum.accumulate(a - log_sell)
        h = np.maximum(suf, log_sell + pre)
    a_tables.reverse()
    # pre-trade fraction 0 at t=0: buying only, value = max over grid of A
    backward_value = float(h[np.searchsorted(grid, 0.0)])

    value = _policy_forward(params, cfg, grid, log_sell, a_tables)
    return DPResult(value=value, backward_value=backward_value, config=cfg)


def _policy_forward(params: ModelParams, cfg: DPConfig, grid: np.ndarray,
                    log_sell: np.ndarray, a_tables: list[np.ndarray]) -> float:
    """Exact expectation of the DP-derived policy over the full tree."""
    p, d, lam, u = params.p, params.d, params.lam, params.u
    n_grid = len(grid)
    pis = np.array([0.0])
    logw = np.array([0.0])
    logprob = np.array([0.0])
    for t in range(cfg.horizon):
        a = a_tables[t]
        sell_term = a - log_sell
        suf_val, suf_arg = _running_argmax(a[::-1])
        suf_val, suf_arg = suf_val[::-1], (n_grid - 1) - suf_arg[::-1]
        pre_val, pre_arg = _running_argmax(sell_term)
        ins = np.searchsorted(grid, pis, side="left")
        ins = np.minimum(ins, n_grid - 1)
        buy_val = suf_val[ins]
        buy_arg = suf_arg[ins]
        isell = ins - 1
        can_sell = isell >= 0
        isell_c = np.maximum(isell, 0)
        sell_val = np.where(can_sell,
                            np.log1p(-lam * pis) + pre_val[isell_c],
                            -np.inf)
        sell_arg = pre_arg[isell_c]
        choose_sell = sell_val > buy_val
        act = np.where(choose_sell, sell_arg, buy_arg)
        pstar = grid[act]
        cost = np.where(choose_sell,
                        np.log1p(-lam * pis) - log_sell[act],
                        0.0)
        logw = logw + cost
        gu = 1.0 - pstar + pstar * u
        gd = 1.0 - pstar + pstar * d
        pis = np.concatenate([pstar * u / gu, pstar * d / gd])
        logw = np.concatenate([logw + np.log(gu), logw + np.log(gd)])
        logprob = np.concatenate([logprob + math.log(p), logprob + math.log(1 - p)])
    terminal = logw + np.log1p(-lam * np.maximum(pis, 0.0))
    return float(np.sum(np.exp(logprob) * terminal))


def shadow_market_dp(sol: ShadowSolution, horizon: int, n_grid: int = 2001) -> float:
    """Best expected log growth of any fraction-grid policy in the frictionless
    shadow market (state = chain position), starting from Z = 1.

    Competitor for the explicit strategy: by its one-step optimality no grid
    policy can beat it beyond grid resolution.
    """
    sf = ShadowFunction.from_solution(sol)
    p = sol.params.p
    k = sf.k
    g = sf.g
    ut = g[2:] / g[1:-1]   # per state n = 0..k
    dt = g[0:-2] / g[1:-1]
    grid = np.linspace(0.0, 1.0, n_grid)
    grow_u = np.log(1.0 - grid[None, :] + grid[None, :] * ut[:, None])
    grow_d = np.log(1.0 - grid[None, :] + grid[None, :] * dt[:, None])
    n_up = np.minimum(np.arange(k + 1) + 1, k)
    n_dn = np.maximum(np.arange(k + 1) - 1, 0)
    v = np.zeros(k + 1)
    for _ in range(horizon):
        v = np.max(p * (grow_u + v[n_up][:, None]) + (1 - p) * (grow_d + v[n_dn][:, None]),
                   axis=1)
    return float(v[0])


# ---------------------------------------------------------------------------
# sandwich


@dataclass(frozen=True)
class SandwichReport:
    dp_sup: float
    dp_backward: float
    shadow_value: float
    shadow_modified: float
    log_one_minus_lam: float
    elog_one_minus_lam_y: float
    grid_slack: float
    passes: dict = field(compare=False)

    @property
    def all_pass(self) -> bool:
        return all(self.passes.values())


def sandwich_check(sol: ShadowSolution, cfg: DPConfig,
                   grid_slack: float = 1e-4) -> SandwichReport:
    """Evaluate the optimality sandwich between the true and modified problems:

    shadow_value <= dp_sup <= shadow_value - log(1-lam) + slack, the refined
    lower gap with E log(1 - lam Y), and shadow_value <= shadow_modified.
    """
    rep = exhaustive_report(sol, cfg.horizon)
    dp = dp_true(sol.params, cfg)
    lam = sol.params.lam
    log1m = math.log1p(-lam)
    passes = {
        "shadow_le_dp": rep.elog_liquidation <= dp.value + 1e-12,
        "dp_le_shadow_plus_gap": dp.value <= rep.elog_liquidation - log1m + grid_slack,
        "dp_plus_ygap_le_shadow": dp.value + rep.elog_one_minus_lam_y
                                  <= rep.elog_liquidation + 1e-12,
        "shadow_le_modified": rep.elog_liquidation <= rep.elog_shadow + 1e-12,
        "no_boundary_violations": rep.boundary_violations == 0,
    }
    return SandwichReport(
        dp_sup=dp.value,
        dp_backward=dp.backward_value,
        shadow_value=rep.elog_liquidation,
        shadow_modified=rep.elog_shadow,
        log_one_minus_lam=log1m,
        elog_one_minus_lam_y=rep.elog_one_minus_lam_y,
        grid_slack=grid_slack,
        passes=passes,
    )


# ---------------------------------------------------------------------------
# Monte Carlo engine


@dataclass(frozen=True)
class SimStats:
    n_paths: int
    steps_per_path: int
    mean_log_growth: float   # per period, shadow wealth
    stderr: float            # across independent paths
    per_path_means: tuple
    buys: int
    sells: int
    z_occupancy: tuple       # counts over chain states 0..k
    transition_counts: tuple  # flattened (k+1)x(k+1) counts
    buy_regime_fraction: float
    seed: int


def _simulate_block(sol: ShadowSolution, horizon: int, block_paths: int,
                    seed: int, block_index: int, logcg: np.ndarray, k: int):
    p = sol.params.p
    rng = np.random.default_rng(
        np.random.Philox(np.random.SeedSequence(seed, spawn_key=(block_index,)))
    )
    ups = rng.random((horizon, block_paths)) < p
    n = np.zeros(block_paths, dtype=np.int64)
    regime_buy = np.ones(block_paths, dtype=bool)
    tot = np.zeros(block_paths)
    occ = np.zeros(k + 1, dtype=np.int64)
    trans = np.zeros((k + 1) * (k + 1), dtype=np.int64)
    buys = sells = 0
    buy_regime_steps = 0
    for t in range(horizon):
        up = ups[t]
        ext = np.where(up, n + 1, n - 1)          # extended index in [-1, k+1]
        tot += logcg[ext + 1] - logcg[n + 1]
        sells_t = up & (n == k)
        buys_t = (~up) & (n == 0)
        regime_buy = np.where(sells_t, False, regime_buy)
        regime_buy = np.where(buys_t, True, regime_buy)
        n_next = np.clip(ext, 0, k)
        trans += np.bincount(n * (k + 1) + n_next, minlength=(k + 1) * (k + 1))
        n = n_next
        occ += np.bincount(n, minlength=k + 1)
        buys += int(np.sum(buys_t))
        sells += int(np.sum(sells_t))
        buy_regime_steps += int(np.sum(regime_buy))
    return tot / horizon, occ, trans, buys, sells, buy_regime_steps


def simulate(sol: ShadowSolution, horizon: int, n_paths: int, seed: int,
             block_size: int = 16) -> SimStats:
    """Monte Carlo replay of the explicit strategy (log-domain, integer state).

    Paths are split into fixed blocks; block b draws from a Philox stream
    keyed by (seed, b), so results are bit-identical for a given seed and
    independent of the worker count (set via SHADOWTREE_THREADS).
    """
    sf = ShadowFunction.from_solution(sol)
    k = sf.k
    logcg = np.log(sol.c + sf.g)
    blocks = []
    start = 0
    b = 0
    while start < n_paths:
        size = min(block_size, n_paths - start)
        blocks.append((b, size))
        start += size
        b += 1

    def run(args):
        bi, size = args
        return _simulate_block(sol, horizon, size, seed, bi, logcg, k)

    workers = worker_count()
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            results = list(ex.map(run, blocks))
    else:
        results = [run(blk) for blk in blocks]

    per_path = np.concatenate([r[0] for r in results])
    occ = np.sum([r[1] for r in results], axis=0)
    trans = np.sum([r[2] for r in results], axis=0)
    buys = sum(r[3] for r in results)
    sells = sum(r[4] for r in results)
    buy_steps = sum(r[5] for r in results)
    mean = float(np.mean(per_path))
    stderr = (float(np.std(per_path, ddof=1)) / math.sqrt(len(per_path))
              if len(per_path) > 1 else float("nan"))
    return SimStats(
        n_paths=n_paths,
        steps_per_path=horizon,
        mean_log_growth=mean,
        stderr=stderr,
        per_path_means=tuple(per_path.tolist()),
        buys=buys,
        sells=sells,
        z_occupancy=tuple(int(x) for x in occ),
        transition_counts=tuple(int(x) for x in trans),
        buy_regime_fraction=buy_steps / (n_paths * horizon),
        seed=seed,
    )
