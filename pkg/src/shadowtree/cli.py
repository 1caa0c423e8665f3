"""Command-line front end.

Subcommands: solve, calibrate, replay, growth, expand, bs-limit, verify,
simulate. Model parameters come from --config (TOML or JSON with keys
{d, p, lambda, s0}) with individual flags overriding file values. All JSON
numbers are emitted with full round-trip precision. Exit codes: 0 success,
1 domain error, 2 verification failure, 64 usage error.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

from . import asymptotics, markov, oracle, shadow
from .errors import ShadowTreeError
from .model import ModelParams, validate
from .solver import calibrate_integer_k, solve_c

USAGE_EXIT = 64
K_SNAP_TOL = 1e-6


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"error: {message}\n")
        raise SystemExit(USAGE_EXIT)


def _emit(obj, output: str | None) -> None:
    text = json.dumps(obj, indent=2, sort_keys=True)
    if output:
        Path(output).write_text(text + "\n")
    else:
        print(text)


def _emit_csv(header: list[str], rows: list[list], output: str | None) -> None:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(repr(x) if isinstance(x, float) else str(x) for x in row))
    text = "\n".join(lines)
    if output:
        Path(output).write_text(text + "\n")
    else:
        print(text)


def _load_config(path: str | None) -> dict:
    if path is None:
        return {}
    raw = Path(path).read_bytes()
    if path.endswith(".json"):
        return json.loads(raw)
    try:
        import tomllib
    except ModuleNotFoundError:  # python 3.10
        import tomli as tomllib
    try:
        return tomllib.loads(raw.decode())
    except tomllib.TOMLDecodeError:
        return json.loads(raw)


def _model_from(args) -> ModelParams:
    cfg = _load_config(getattr(args, "config", None))
    d = args.d if args.d is not None else cfg.get("d")
    p = args.p if args.p is not None else cfg.get("p")
    lam = args.lam if args.lam is not None else cfg.get("lambda", cfg.get("lam"))
    s0 = args.s0 if args.s0 is not None else cfg.get("s0", 1.0)
    missing = [k for k, v in (("d", d), ("p", p), ("lambda", lam)) if v is None]
    if missing:
        raise ShadowTreeError(f"missing model parameters: {', '.join(missing)}")
    return ModelParams(d=float(d), p=float(p), lam=float(lam), s0=float(s0))


def _add_model_flags(sp, need_lambda=True):
    sp.add_argument("--config", help="TOML/JSON file with keys d, p, lambda, s0")
    sp.add_argument("--d", type=float, default=None)
    sp.add_argument("--p", type=float, default=None)
    if need_lambda:
        sp.add_argument("--lambda", dest="lam", type=float, default=None)
    sp.add_argument("--s0", type=float, default=None)
    sp.add_argument("--output", default=None, help="write to file instead of stdout")


def _parse_moves(text: str) -> list[int]:
    table = {"u": 1, "U": 1, "+": 1, "d": -1, "D": -1, "-": -1}
    try:
        return [table[ch] for ch in text]
    except KeyError as e:
        raise ShadowTreeError(f"bad move character {e.args[0]!r}; use U/D") from None


def _cmd_solve(args) -> int:
    params = _model_from(args)
    validate(params)
    sol = solve_c(params)
    _emit({"c": sol.c, "k": sol.k, "sbar": sol.sbar, "residual": sol.residual,
           "cbar": sol.constants.cbar, "lambda": params.lam}, args.output)
    return 0


def _cmd_calibrate(args) -> int:
    cfg = _load_config(args.config)
    d = args.d if args.d is not None else cfg.get("d")
    p = args.p if args.p is not None else cfg.get("p")
    if d is None or p is None:
        raise ShadowTreeError("calibrate needs --d and --p")
    sol = calibrate_integer_k(float(p), float(d), args.k)
    _emit({"c": sol.c, "lambda": sol.lam, "k": int(sol.k), "sbar": sol.sbar},
          args.output)
    return 0


def _solved_integer_k(params: ModelParams):
    sol = solve_c(params)
    if abs(sol.k - round(sol.k)) > K_SNAP_TOL:
        return sol, False
    if not sol.k_integer:
        from dataclasses import replace as _rep
        sol = _rep(sol, k=float(round(sol.k)),
                   sbar=math.exp(-round(sol.k) * math.log(params.d)), k_integer=True)
    return sol, True


def _cmd_replay(args) -> int:
    params = _model_from(args)
    validate(params)
    sol, ok = _solved_integer_k(params)
    if not ok:
        raise ShadowTreeError(
            f"k={sol.k} is not an integer; use `calibrate` to pick lambda first"
        )
    sf = shadow.ShadowFunction.from_solution(sol)
    steps = shadow.replay(sf, _parse_moves(args.path), x=args.x)
    rows = []
    for st in steps:
        state, pf = st.state, st.portfolio
        rows.append([
            state.t, state.price(params), state.m_value(params),
            state.regime.value, state.n, st.stilde, pf.phi0, pf.phi,
            pf.phi * st.stilde / pf.shadow_wealth,
            pf.liquidation_wealth, pf.shadow_wealth,
        ])
    _emit_csv(["t", "S", "m", "regime", "Z_index", "S_tilde", "phi0", "phi",
               "pi_tilde", "V_liq", "V_shadow"], rows, args.output)
    return 0


def _cmd_growth(args) -> int:
    params = _model_from(args)
    validate(params)
    sol, integer_k = _solved_integer_k(params)
    out = {"c": sol.c, "k": sol.k, "k_integer": integer_k,
           "R_closed": markov.growth_rate_closed_form(sol),
           "R_stationary": None, "R_mc": None, "mc_stderr": None}
    if integer_k:
        out["R_stationary"] = markov.growth_rate_stationary(sol)
        if args.mc_steps:
            n_paths = max(2, args.mc_paths)
            horizon = max(1, args.mc_steps // n_paths)
            stats = oracle.simulate(sol, horizon, n_paths, args.seed)
            out["R_mc"] = stats.mean_log_growth
            out["mc_stderr"] = stats.stderr
    _emit(out, args.output)
    return 0


def _cmd_expand(args) -> int:
    params = _model_from(args)
    validate(params)
    es = asymptotics.expansion_set(params, args.order)
    _emit({
        "order": es.order,
        "lambda_coeffs": list(es.lambda_coeffs),
        "c_coeffs": list(es.c_coeffs),
        "theta_lower": list(es.theta_lower),
        "theta_upper": list(es.theta_upper),
        "width_coeff": es.width_coeff,
        "growth_coeffs": list(es.growth_coeffs),
    }, args.output)
    return 0


def _cmd_bs_limit(args) -> int:
    bsl = asymptotics.BSLimitParams(mu=args.mu, sigma=args.sigma, delta=args.delta)
    lam = args.lam
    params = asymptotics.bs_params(bsl, lam=lam)
    lo, hi = asymptotics.exact_boundaries(params)
    ex = asymptotics.bs_ntr_expansion(bsl)
    lam13 = lam ** (1.0 / 3.0)
    rows = []
    for name, exact, approx in (
        ("theta_lower", lo, ex.theta_lower0 + ex.theta_lower1 * lam13),
        ("theta_upper", hi, ex.theta_upper0 + ex.theta_upper1 * lam13),
        ("width", hi - lo, ex.width_coeff * lam13),
    ):
        rows.append([name, exact, approx, abs(exact - approx)])
    try:
        sol = solve_c(params)
        r_exact = markov.growth_rate_closed_form(sol) / args.delta
        rows.append(["growth_per_time", r_exact,
                     ex.growth0 + ex.growth1 * lam13,
                     abs(r_exact - (ex.growth0 + ex.growth1 * lam13))])
    except ShadowTreeError:
        pass  # growth closed form undefined outside c > 0; boundary rows stand
    _emit_csv(["quantity", "exact", "expansion", "abs_err"], rows, args.output)
    return 0


def _cmd_verify(args) -> int:
    params = _model_from(args)
    validate(params)
    sol, ok = _solved_integer_k(params)
    if not ok:
        raise ShadowTreeError(
            f"k={sol.k} is not an integer; use `calibrate` to pick lambda first"
        )
    cfg = oracle.DPConfig(horizon=args.horizon, fraction_grid=args.grid)
    rep = oracle.sandwich_check(sol, cfg)
    _emit({
        "pass": rep.all_pass,
        "dp_sup": rep.dp_sup,
        "dp_backward": rep.dp_backward,
        "shadow_value": rep.shadow_value,
        "shadow_modified": rep.shadow_modified,
        "log_one_minus_lambda": rep.log_one_minus_lam,
        "elog_one_minus_lambda_y": rep.elog_one_minus_lam_y,
        "checks": rep.passes,
    }, args.output)
    return 0 if rep.all_pass else 2


def _cmd_simulate(args) -> int:
    params = _model_from(args)
    validate(params)
    sol, ok = _solved_integer_k(params)
    if not ok:
        raise ShadowTreeError(
            f"k={sol.k} is not an integer; use `calibrate` to pick lambda first"
        )
    stats = oracle.simulate(sol, args.horizon, args.paths, args.seed)
    _emit({
        "n_paths": stats.n_paths,
        "steps_per_path": stats.steps_per_path,
        "mean_log_growth": stats.mean_log_growth,
        "stderr": stats.stderr,
        "buys": stats.buys,
        "sells": stats.sells,
        "z_occupancy": list(stats.z_occupancy),
        "buy_regime_fraction": stats.buy_regime_fraction,
        "seed": stats.seed,
    }, args.output)
    return 0


def build_parser() -> _Parser:
    ap = _Parser(prog="shadowtree",
                 description="Log-optimal trading under proportional transaction "
                             "costs in a binomial model via shadow prices.")
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("solve", help="solve F(c)=lambda; print c, k, sbar")
    _add_model_flags(sp)
    sp.set_defaults(fn=_cmd_solve)

    sp = sub.add_parser("calibrate", help="pick lambda so k is a given integer")
    sp.add_argument("--config", default=None)
    sp.add_argument("--d", type=float, default=None)
    sp.add_argument("--p", type=float, default=None)
    sp.add_argument("--k", type=int, required=True)
    sp.add_argument("--output", default=None)
    sp.set_defaults(fn=_cmd_calibrate)

    sp = sub.add_parser("replay", help="CSV trace of the strategy along a path")
    _add_model_flags(sp)
    sp.add_argument("--path", required=True, help="moves, e.g. UUDDU")
    sp.add_argument("--x", type=float, default=1.0, help="initial wealth")
    sp.set_defaults(fn=_cmd_replay)

    sp = sub.add_parser("growth", help="closed-form / stationary / MC growth rate")
    _add_model_flags(sp)
    sp.add_argument("--mc-steps", type=int, default=0)
    sp.add_argument("--mc-paths", type=int, default=64)
    sp.add_argument("--seed", type=int, default=0)
    sp.set_defaults(fn=_cmd_growth)

    sp = sub.add_parser("expand", help="series coefficients around lambda = 0")
    _add_model_flags(sp)
    sp.add_argument("--order", type=int, default=3)
    sp.set_defaults(fn=_cmd_expand)

    sp = sub.add_parser("bs-limit", help="exact vs near-Black-Scholes expansion")
    sp.add_argument("--mu", type=float, required=True)
    sp.add_argument("--sigma", type=float, required=True)
    sp.add_argument("--delta", type=float, required=True)
    sp.add_argument("--lambda", dest="lam", type=float, required=True)
    sp.add_argument("--output", default=None)
    sp.set_defaults(fn=_cmd_bs_limit)

    sp = sub.add_parser("verify", help="sandwich check vs the DP oracle")
    _add_model_flags(sp)
    sp.add_argument("--horizon", type=int, default=8)
    sp.add_argument("--grid", type=int, default=2001)
    sp.set_defaults(fn=_cmd_verify)

    sp = sub.add_parser("simulate", help="seeded Monte Carlo statistics")
    _add_model_flags(sp)
    sp.add_argument("--horizon", type=int, default=10000)
    sp.add_argument("--paths", type=int, default=64)
    sp.add_argument("--seed", type=int, default=0)
    sp.set_defaults(fn=_cmd_simulate)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as e:
        return e.code if e.code is not None else USAGE_EXIT
    try:
        return args.fn(args)
    except ShadowTreeError as e:
        print(json.dumps({"error": type(e).__name__, "message": str(e)}),
              file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
