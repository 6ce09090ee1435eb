#!/usr/bin/env python3
"""Smoke test for the tcrab extension module.

Build and stage the module first:

    cargo build -p tcrab-py --release
    cp target/release/libtcrab.so python/tcrab.so

then run `python3 python/smoke_test.py` (or let python/build.sh do all three).
"""

import math
import os
import sys

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

import tcrab


def approx(a, b, tol):
    assert abs(a - b) < tol, f"{a} != {b} (tol {tol})"


def main():
    names = tcrab.experiment_names()
    assert names == ["josephson", "lmg", "spin_cz_swap", "spin_cz_dipole"], names

    exp = tcrab.Experiment.preset("josephson")
    assert exp.name == "josephson"
    assert exp.m == 8
    approx(exp.t_max, 10.0, 1e-12)

    ev = exp.evaluator(seed=0)
    assert ev.n_parameters == 2 * exp.m + 1

    # zero time, zero pulse: the objective is 1 - |<target|initial>|^2 shrunk
    # by the depolarizing channel at T = 0, i.e. exactly the Bell overlap
    approx(ev.infidelity(0.0, [0.0] * ev.n_parameters), 0.5, 1e-9)

    # the fast objective and the master-equation integrator agree to 1e-8
    alpha = [0.3, -0.4, 0.25, 0.1, -0.2] + [0.05] * (ev.n_parameters - 5)
    for t in (0.7, 1.3):
        shortcut = 1.0 - ev.infidelity(t, alpha)
        oracle = ev.oracle_fidelity(t, alpha)
        approx(shortcut, oracle, 1e-8)

    # the same check through the bundled verifier, with certificates
    rows = exp.verify(points=3, seed=0)
    assert all(r.certified for r in rows)
    assert max(r.abs_diff for r in rows) < 1e-8

    # a short fixed-time optimization improves on the zero pulse
    start = ev.infidelity(1.3, [0.0] * ev.n_parameters)
    out = ev.optimize(1.3, max_fun=200)
    assert out.infidelity < start, (out.infidelity, start)
    assert out.n_fun_evals <= 200
    assert out.converged_reason in (
        "ftol",
        "gtol",
        "max_fun",
        "line_search_stalled",
    ), out.converged_reason

    # the joint (T, alpha) search seeds itself with that same fixed-time
    # solve, so with an equal budget it can only match or improve it
    bh = ev.basinhopping(t_init=1.3, seed=7, n_iterations=2, max_fun=200)
    assert 0.0 <= bh.t_opt <= exp.t_max
    assert bh.infidelity <= out.infidelity + 1e-12

    # bisection returns a converged reason from the interval family
    bi = ev.bisection(0.5, 3.0, max_fun=200)
    assert bi.converged_reason in (
        "derivative_tolerance",
        "interval_tolerance",
        "no_bracketed_extremum",
    ), bi.converged_reason

    # config documents round through the same schema as the CLI
    exp2 = tcrab.Experiment.from_config(
        '{"experiment": "lmg", "ansatz": {"M": 4}, "sweep": {"N_S": 10, "T_max": 3.0}}'
    )
    assert exp2.m == 4 and exp2.t_max == 3.0

    # identity sweep: LMG controls cancel the drift at every grid time
    flat = exp2.identity_sweep(n_points=4, seed=0, max_fun=2000)
    assert len(flat) == 4
    assert max(infid for _, infid, _ in flat) < 1e-8

    # bad input surfaces as ValueError, not a crash
    try:
        tcrab.Experiment.preset("nope")
    except ValueError:
        pass
    else:
        raise AssertionError("unknown preset accepted")
    try:
        ev.infidelity(1.0, [0.0] * 3)
    except ValueError:
        pass
    else:
        raise AssertionError("wrong alpha length accepted")

    print(f"smoke test ok (tcrab {tcrab.__version__})")


if __name__ == "__main__":
    main()
