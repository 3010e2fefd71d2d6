"""Acceptance criteria, one test each; every check prints a PASS/FAIL line."""
import math
import time

import numpy as np
import pytest

from isingchain.chain import HALF_PI, ChainSpec, TransferEndpoints, normalize_chain
from isingchain.geodesic import (clear_memo, elliptic_time, eta, minimal_time, pendulum_field,
                                 shoot, unit_rate)
from isingchain.ode import first_zero_crossing, integrate
from isingchain.planner import assemble_chain_pulse, dp_solve, simulate_chain
from isingchain.pulse import reconstruct_control, simulate_full


def check(label, ok, detail):
    print(f"{'PASS' if ok else 'FAIL'} {label}: {detail}")
    assert ok, f"{label}: {detail}"


def _fresh():
    clear_memo()
    unit_rate.cache_clear()


def test_1_unit_ratio_minimal_time():
    _fresh()
    t0 = time.perf_counter()
    sol = shoot(1.0, TransferEndpoints(0.0, HALF_PI))
    elapsed = time.perf_counter() - t0
    check("k=1 duration", abs(sol.duration - 2.72) <= 0.01, f"T = {sol.duration:.6f}")
    check("k=1 runtime", elapsed < 5.0, f"{elapsed:.2f} s")


def test_2_unit_ratio_fraction_of_conventional():
    ratio = minimal_time(1.0) / math.pi
    check("k=1 T/pi", abs(ratio - 0.866) <= 0.005, f"{ratio:.6f}")


def test_3_example2_reproduction():
    _fresh()
    chain = normalize_chain(ChainSpec((91.0, 15.0, 55.0)), ref_index=1)
    t0 = time.perf_counter()
    plan = dp_solve(chain)
    elapsed = time.perf_counter() - t0
    gamma = plan.betas[1] / math.pi
    check("gamma_opt", abs(gamma - 0.193) <= 0.01, f"{gamma:.4f} pi")
    check("total time", abs(plan.total_time - 2.01) <= 0.02, f"{plan.total_time:.5f} / J23")
    check("conventional", abs(plan.conventional_time - 2.26) <= 0.01,
          f"{plan.conventional_time:.5f} / J23")
    check("savings", abs(plan.savings_percent - 12.2) <= 1.0, f"{plan.savings_percent:.2f} %")
    check("runtime", elapsed < 60.0, f"{elapsed:.1f} s")


@pytest.mark.parametrize("k", [2.0, 5.0, 10.0])
def test_4_scaling_symmetry(k):
    t_k, t_inv = minimal_time(k), minimal_time(1.0 / k)
    rel = abs(t_inv - k * t_k) / t_inv
    check(f"T(1/{k:g}) = {k:g} T({k:g})", rel <= 1e-3, f"relative gap {rel:.2e}")
    gap = abs(eta(k) - eta(1.0 / k))
    check(f"eta({k:g}) = eta(1/{k:g})", gap <= 1e-3, f"gap {gap:.2e}")
    # T(1/k) comes from the mirrored solve, so confirm it is attainable in the
    # unmirrored system by forward simulation with ratio 1/k
    sol = shoot(1.0 / k, TransferEndpoints(0.0, HALF_PI))
    report = simulate_full(reconstruct_control(sol), 1.0 / k)
    check(f"ratio 1/{k:g} simulated", report.fidelity >= 1.0 - 1e-6,
          f"1 - F = {1.0 - report.fidelity:.2e} at T = {sol.duration:.6f}")


def test_4_direct_shot_for_inverse_ratio():
    # for k = 2 the ratio-1/2 problem can also be shot without the mirror map
    direct = shoot(0.5, TransferEndpoints(0.0, HALF_PI), mirror=False).duration
    t2 = minimal_time(2.0)
    rel = abs(direct - 2.0 * t2) / direct
    check("direct T(1/2) = 2 T(2)", rel <= 1e-3, f"relative gap {rel:.2e}")


@pytest.mark.parametrize("k", [1.0, 2.0, 10.0])
def test_5_single_segment_verification(k):
    sol = shoot(k, TransferEndpoints(0.0, HALF_PI))
    report = simulate_full(reconstruct_control(sol), k)
    check(f"k={k:g} fidelity", report.fidelity >= 1.0 - 1e-6, f"1 - F = {1.0 - report.fidelity:.2e}")


def test_5_chain_verification():
    chain = normalize_chain(ChainSpec((91.0, 15.0, 55.0)), ref_index=1)
    plan = dp_solve(chain)
    report = simulate_chain(assemble_chain_pulse(plan), chain)
    check("example 2 chain fidelity", report.fidelity >= 1.0 - 1e-5,
          f"1 - F = {1.0 - report.fidelity:.2e}")


def _conservation_cases():
    cases = [(k, 0.0, HALF_PI) for k in (0.1, 0.2, 0.5, 1.0, 2.0, 5.0, 10.0)]
    cases += [(2.0, 0.0, math.pi / 4), (2.0, 0.3, 0.9), (0.5, 0.4, 0.2), (3.0, 0.0, 0.0)]
    return cases


def test_6_conservation_suite():
    sols = [shoot(k, TransferEndpoints(a, b)) for k, a, b in _conservation_cases()]
    chain = normalize_chain(ChainSpec((91.0, 15.0, 55.0)), ref_index=1)
    sols += list(dp_solve(chain).solutions)
    worst = {"norm": 0.0, "energy": 0.0, "speed": 0.0}
    for sol in sols:
        res = sol.residuals()
        for key in worst:
            worst[key] = max(worst[key], res[key])
    check("|r| - 1 drift", worst["norm"] <= 1e-9, f"{worst['norm']:.2e} over {len(sols)} solutions")
    check("c drift", worst["energy"] <= 1e-8, f"{worst['energy']:.2e}")
    check("geodesic speed residual", worst["speed"] <= 1e-7, f"{worst['speed']:.2e}")


def _ode_elapsed(theta0, theta1, c, a, horizon):
    rate = math.sqrt(c - a * math.cos(theta0) ** 2)
    f = pendulum_field(a)

    def field(t, y):
        d = f(t, y[:2])
        return np.array([d[0], d[1], -d[0]])

    traj = integrate(field, [theta0, rate, theta1 - theta0], horizon, step=1e-3)
    return first_zero_crossing(traj, 2, tol=1e-12)


def test_7_elliptic_oracle():
    rng = np.random.default_rng(20240611)
    worst = 0.0
    for _ in range(20):
        a = rng.uniform(-0.99, 20.0)
        c = max(0.0, a) + rng.uniform(0.05, 3.0)
        theta0 = rng.uniform(0.0, math.pi)
        theta1 = theta0 + rng.uniform(0.1, 1.5)
        quad = elliptic_time(theta0, theta1, c, a)
        ode = _ode_elapsed(theta0, theta1, c, a, 1.2 * quad + 0.01)
        worst = max(worst, abs(quad - ode))
    check("elliptic vs ODE", worst <= 1e-6, f"max gap {worst:.2e} over 20 branches")


def test_8_bounds_and_monotonicity():
    ks = (1.0, 2.0, 5.0, 10.0)
    times = [minimal_time(k) for k in ks]
    for k, t in zip(ks, times):
        lo, hi = HALF_PI - 1e-6, HALF_PI + HALF_PI / k + 1e-6
        check(f"bounds k={k:g}", lo <= t <= hi, f"{lo:.6f} <= {t:.6f} <= {hi:.6f}")
    mono = all(a >= b for a, b in zip(times, times[1:]))
    check("T non-increasing in k", mono, ", ".join(f"{t:.6f}" for t in times))
