import math

import numpy as np
import pytest

from shadowtree.errors import RejectsArbitrage, RejectsDrift, RejectsRecombining
from shadowtree.model import (
    ModelParams,
    frictionless_fraction,
    frictionless_growth,
    state_price_density,
    validate,
)

from conftest import admissible_grid, all_paths


def test_validate_accepts_and_derives_cbar():
    vm = validate(ModelParams(d=0.5, p=0.5, lam=0.01, s0=1.0, u_input=2.0))
    assert vm.constants.cbar == 1.0
    assert vm.constants.merton_pi == pytest.approx(0.5, abs=1e-15)
    assert vm.constants.b is None  # p = 1/2 branch


def test_validate_rejects_drift():
    with pytest.raises(RejectsDrift):
        validate(ModelParams(d=0.5, p=0.8, lam=0.01, u_input=2.0))


def test_validate_rejects_non_recombining():
    with pytest.raises(RejectsRecombining):
        validate(ModelParams(d=0.4, p=0.5, lam=0.01, u_input=2.0))


def test_validate_rejects_arbitrage():
    with pytest.raises(RejectsArbitrage):
        validate(ModelParams(d=1.2, p=0.5, lam=0.01))


def test_validate_rejects_boundary_probabilities():
    with pytest.raises(RejectsDrift):
        validate(ModelParams(d=0.5, p=1.0 / 3.0, lam=0.01))  # exactly d/(1+d)


def _one_period_log_growth(pi, p, u, d):
    up, dn = 1 + pi * (u - 1), 1 - pi * (1 - d)
    ok = (up > 0) & (dn > 0)
    out = np.full_like(pi, -np.inf)
    out[ok] = p * np.log(up[ok]) + (1 - p) * np.log(dn[ok])
    return out


@pytest.mark.parametrize("p,u,d,expected", [
    (0.5, 2.0, 0.5, 0.5),
    (0.55, 1.1, 1 / 1.1, None),
])
def test_frictionless_fraction_against_grid_search(p, u, d, expected):
    # independent oracle: brute-force maximizer of the one-period expected log;
    # the optimizer is unconstrained, so search beyond [0, 1] as well
    grid = np.arange(-0.5, 2.0 + 1e-6, 1e-6)
    vals = _one_period_log_growth(grid, p, u, d)
    best = grid[np.argmax(vals)]
    got = frictionless_fraction(p, u, d)
    assert got == pytest.approx(best, abs=1e-5)
    if expected is not None:
        assert got == pytest.approx(expected, abs=1e-12)


def test_frictionless_fraction_zero_drift():
    # p*u + (1-p)*d = 1 with u=2, d=0.5 at p=1/3
    assert frictionless_fraction(1 / 3, 2.0, 0.5) == pytest.approx(0.0, abs=1e-15)


def test_frictionless_fraction_equals_merton_from_cbar():
    for p, d in admissible_grid():
        vm = validate(ModelParams(d=d, p=p, lam=0.0))
        assert frictionless_fraction(p, 1 / d, d) == pytest.approx(
            vm.constants.merton_pi, abs=1e-12)


def _tree_expected_log(params, horizon):
    """Exhaustive expectation of the one-period-optimal strategy's log wealth."""
    p, u, d = params.p, params.u, params.d
    pi = frictionless_fraction(p, u, d)
    paths = all_paths(horizon)
    gu, gd = 1 + pi * (u - 1), 1 - pi * (1 - d)
    n_up = (paths > 0).sum(axis=1)
    logw = n_up * math.log(gu) + (horizon - n_up) * math.log(gd)
    prob = p ** n_up * (1 - p) ** (horizon - n_up)
    return float(np.sum(prob * logw))


def test_frictionless_growth_value_and_tree_oracle():
    params = ModelParams(d=0.5, p=0.5, lam=0.0)
    g = frictionless_growth(params)
    assert g == pytest.approx(0.058891517828191727, rel=1e-12)
    assert g == pytest.approx(math.log(0.75 / math.sqrt(0.5)), rel=1e-14)
    assert _tree_expected_log(params, 10) / 10 == pytest.approx(g, abs=1e-10)


def test_frictionless_growth_matches_tree_on_second_model():
    params = ModelParams(d=1 / 1.1, p=0.52, lam=0.0)
    g = frictionless_growth(params)
    assert _tree_expected_log(params, 10) / 10 == pytest.approx(g, abs=1e-12)


def test_tree_value_is_growth_plus_log_initial_wealth():
    v0 = 2.5
    for p, d in admissible_grid()[:4]:
        params = ModelParams(d=d, p=p, lam=0.0)
        total = _tree_expected_log(params, 10) + math.log(v0)
        assert total == pytest.approx(
            10 * frictionless_growth(params) + math.log(v0), abs=1e-10)


def test_frictionless_growth_zero_at_zero_drift():
    assert frictionless_growth(ModelParams(d=0.5, p=1 / 3, lam=0.0)) == pytest.approx(
        0.0, abs=1e-15)


def test_frictionless_growth_nonnegative_on_grid():
    for p, d in admissible_grid():
        assert frictionless_growth(ModelParams(d=d, p=p, lam=0.0)) > 0.0


def test_state_price_density_examples():
    params = ModelParams(d=0.5, p=0.5, lam=0.0)
    assert state_price_density([], params) == 1.0
    assert state_price_density([1], params) == pytest.approx(2 / 3, rel=1e-15)


def test_state_price_density_is_a_density():
    params = ModelParams(d=0.8, p=0.52, lam=0.0)
    horizon = 8
    paths = all_paths(horizon)
    total = 0.0
    for row in paths:
        n_up = int((row > 0).sum())
        prob = params.p ** n_up * (1 - params.p) ** (horizon - n_up)
        total += prob * state_price_density(list(row), params)
    assert total == pytest.approx(1.0, abs=1e-12)


def test_budget_identity():
    # E[Z_T * (V0/Z_T)] = V0 exactly, path by path
    params = ModelParams(d=0.5, p=0.45, lam=0.0)
    v0 = 3.7
    for row in all_paths(6)[:16]:
        z = state_price_density(list(row), params)
        assert z * (v0 / z) == v0
