import math

import numpy as np
import pytest

import stopgame.examples as ex
from conftest import game_at
from stopgame.errors import InputError
from stopgame.model import bilinear_payoff
from stopgame.montecarlo import (PureResponseFamily, best_response_value,
                                 default_time_grid, estimate_payoff,
                                 exploit_gap)
from stopgame.pdmp import (ConstantTimeStrategy, NeverStopStrategy,
                           StopNowStrategy)


def small_family(r=1.0):
    return PureResponseFamily(np.concatenate([[0.0], np.geomspace(0.05, 20.0, 40),
                                              [math.inf]]))


def test_time_grid_shape():
    grid = default_time_grid(0.1)
    assert grid[0] == 0.0 and math.isinf(grid[-1])
    assert grid.size == 202
    assert np.all(np.diff(grid[:-1]) > 0)
    with pytest.raises(InputError):
        PureResponseFamily(np.array([0.0, 1.0, 2.0]))  # no +inf tail


def test_estimate_stop_now_gives_h(e1_spec):
    spec = game_at(e1_spec, 0.3, 0.7)
    est = estimate_payoff(spec, StopNowStrategy(), ConstantTimeStrategy(2.0),
                          n=20_000, seed=0)
    target = bilinear_payoff(spec.h, spec.p0, spec.q0)
    assert abs(est.mean - target) <= 3.0 * max(est.std_error, 1e-12)


def test_estimate_opponent_stop_now_gives_f(e1_spec):
    spec = game_at(e1_spec, 0.3, 0.7)
    est = estimate_payoff(spec, NeverStopStrategy(), StopNowStrategy(),
                          n=20_000, seed=1)
    target = bilinear_payoff(spec.f, spec.p0, spec.q0)
    assert abs(est.mean - target) <= 3.0 * max(est.std_error, 1e-12)


def test_estimate_nobody_stops_is_zero(e1_spec):
    spec = game_at(e1_spec, 0.3, 0.7)
    est = estimate_payoff(spec, NeverStopStrategy(), NeverStopStrategy(),
                          n=500, seed=2)
    assert est.mean == 0.0 and est.std_error == 0.0


def test_common_random_numbers_bit_identical(e2_spec, e2_params):
    spec = game_at(e2_spec, 1.0 / 3.0, None)
    strat = ex.e2_optimal_mu(e2_params, 1.0 / 3.0)
    fam = small_family()
    a = best_response_value(spec, strat, fam, n=4000, seed=9)
    b = best_response_value(spec, strat, fam, n=4000, seed=9)
    assert a.value == b.value and a.std_error == b.std_error
    assert a.argmin == b.argmin
    c = estimate_payoff(spec, strat, ConstantTimeStrategy(1.0), n=4000, seed=9)
    d = estimate_payoff(spec, strat, ConstantTimeStrategy(1.0), n=4000, seed=9)
    assert c.mean == d.mean


def test_standard_error_scaling(e2_spec, e2_params):
    spec = game_at(e2_spec, 0.5, None)
    strat = ex.e2_optimal_mu(e2_params, 0.5)
    ses = []
    for n in (1_000, 10_000, 100_000):
        est = estimate_payoff(spec, strat, ConstantTimeStrategy(2.0), n=n, seed=3)
        ses.append(est.std_error)
    root10 = math.sqrt(10.0)
    for ratio in (ses[0] / ses[1], ses[1] / ses[2]):
        assert root10 / 1.3 <= ratio <= root10 * 1.3


def test_purification_monotone_in_family(e2_spec, e2_params):
    spec = game_at(e2_spec, 0.5, None)
    strat = ex.e2_optimal_mu(e2_params, 0.5)
    t_small = np.concatenate([[0.0], np.geomspace(0.1, 10.0, 8), [math.inf]])
    t_big = np.unique(np.concatenate([t_small, np.geomspace(0.03, 30.0, 23)]))
    small = best_response_value(spec, strat, PureResponseFamily(t_small),
                                n=4000, seed=5)
    big = best_response_value(spec, strat, PureResponseFamily(t_big),
                              n=4000, seed=5)
    assert big.value <= small.value + 1e-12  # exact with common random numbers


def test_exploit_gap_infinite_claim(e2_spec, e2_params):
    spec = game_at(e2_spec, 0.5, None)
    gap = exploit_gap(spec, NeverStopStrategy(), -math.inf, small_family(),
                      n=10, seed=0)
    assert gap.gap == math.inf


def test_exploit_gap_detects_suboptimal_play(e2_spec, e2_params):
    # stopping immediately at the kink belief hands the opponent h - V
    spec = game_at(e2_spec, 1.0 / 3.0, None)
    fam = PureResponseFamily.for_game(spec, n=60)
    claim = ex.e2_value(e2_params, 1.0 / 3.0)
    gap = exploit_gap(spec, StopNowStrategy(), claim, fam, n=20_000, seed=6)
    expected = e2_params.h(1.0 / 3.0) - e2_params.f(1.0 / 3.0)
    assert gap.gap == pytest.approx(expected, abs=0.05)
    assert gap.gap < -3.0 * gap.std_error - 0.05


def test_never_stop_best_response_matches_quadrature(e2_spec, e2_params):
    # responder against silence: min over t of e^{-rt} f(p_t), p_t the flow
    from stopgame.model import marginal_flow

    spec = game_at(e2_spec, 0.8, None)
    fam = PureResponseFamily.for_game(spec, n=120)
    br = best_response_value(spec, NeverStopStrategy(), fam, n=60_000, seed=7)
    times = fam.times[:-1]
    curve = np.array([
        math.exp(-spec.r * t)
        * bilinear_payoff(spec.f, marginal_flow(spec.p0, spec.R, t), spec.q0)
        for t in times])
    direct = min(curve.min(), 0.0)
    assert abs(br.value - direct) <= 3.0 * br.std_error + 1e-9


def test_threads_reproduce_serial(e2_spec, e2_params):
    spec = game_at(e2_spec, 0.5, None)
    strat = ex.e2_optimal_mu(e2_params, 0.5)
    fam = small_family()
    serial = best_response_value(spec, strat, fam, n=20_000, seed=8, threads=1)
    parallel = best_response_value(spec, strat, fam, n=20_000, seed=8, threads=2)
    assert serial.value == parallel.value
    assert serial.std_error == parallel.std_error
    assert serial.argmin == parallel.argmin


def test_coarse_family_flag():
    # responder's optimum sits beyond the truncated grid: argmin lands on the
    # largest finite time and the coarseness flag fires
    import stopgame.model as model

    R = np.array([[-1.0, 1.0], [1.0, -1.0]])
    spec = model.GameSpec(R=R, Q=np.zeros((1, 1)), r=0.01,
                          f=[[-2.0], [-1.0]], h=[[-3.0], [-2.0]],
                          p0=[0.1, 0.9], q0=[1.0])
    fam = PureResponseFamily(np.concatenate([[0.0], np.geomspace(0.01, 0.6, 12),
                                             [math.inf]]))
    br = best_response_value(spec, NeverStopStrategy(), fam, n=2000, seed=10)
    assert br.coarse_flag
    assert br.argmin[0] == pytest.approx(0.6)


def test_exhaustive_flag(e1_spec, e2_spec):
    fam = small_family()
    assert fam.exhaustive_for(e2_spec)          # singleton side
    assert fam.exhaustive_for(e1_spec)          # frozen chain
    moving = game_at(e2_spec, 0.5, None)
    spec = ex.e2_game(ex.REFERENCE_E2)
    import stopgame.model as model

    both_moving = model.GameSpec(R=spec.R, Q=spec.R, r=0.1,
                                 f=np.full((2, 2), 2.0), h=np.full((2, 2), 1.0),
                                 p0=[0.5, 0.5], q0=[0.5, 0.5])
    assert not fam.exhaustive_for(both_moving)
