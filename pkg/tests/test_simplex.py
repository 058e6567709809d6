import numpy as np
import pytest
from scipy.optimize import linprog

from quaddelivery.fixtures import random_lp
from quaddelivery.milp import EQ, GE, LE, make_model
from quaddelivery.simplex import (INFEASIBLE, OPTIMAL, UNBOUNDED, LpSolution, check_duality,
                                  farkas_margin, solve_lp)


def test_single_lower_bound_row():
    sol = solve_lp(make_model([[1.0]], [GE], [3.0], [1.0]))
    assert sol.status == OPTIMAL
    assert sol.primal[0] == pytest.approx(3.0) and sol.objective == pytest.approx(3.0)


def test_contradictory_rows_have_certificate():
    m = make_model([[1.0], [1.0]], [LE, GE], [-1.0, 0.0], [0.0], lower=[-np.inf])
    sol = solve_lp(m)
    assert sol.status == INFEASIBLE
    assert farkas_margin(m, sol.certificate) > 0


def test_face_optimum_gap_zero():
    m = make_model([[1.0, 1.0]], [LE], [1.0], [-1.0, -1.0])
    sol = solve_lp(m)
    assert sol.status == OPTIMAL and sol.objective == pytest.approx(-1.0)
    assert sol.primal.sum() == pytest.approx(1.0)
    rep = check_duality(m, sol)
    assert rep.passed and rep.gap <= 1e-12


def test_unbounded():
    sol = solve_lp(make_model([[1.0, -1.0]], [LE], [1.0], [-1.0, 0.0]))
    assert sol.status == UNBOUNDED


def test_perturbed_primal_names_row():
    m = make_model([[1.0, 2.0], [3.0, 1.0]], [LE, LE], [4.0, 6.0], [-1.0, -1.0])
    sol = solve_lp(m)
    assert check_duality(m, sol).passed
    x = sol.primal.copy()
    x[0] += 0.1
    rep = check_duality(m, LpSolution(OPTIMAL, x, sol.dual, float(m.objective @ x)))
    assert not rep.passed
    assert any("row 1 (row1)" in v for v in rep.violations)


def test_hand_built_pair_exact():
    # min x1 + x2  s.t. x1 + 2 x2 >= 2, 2 x1 + x2 >= 2  ->  x = (2/3, 2/3), y = (1/3, 1/3)
    m = make_model([[1.0, 2.0], [2.0, 1.0]], [GE, GE], [2.0, 2.0], [1.0, 1.0])
    pair = LpSolution(OPTIMAL, np.array([2 / 3, 2 / 3]), np.array([1 / 3, 1 / 3]), 4 / 3)
    rep = check_duality(m, pair)
    assert rep.passed and rep.gap == pytest.approx(0.0, abs=1e-15)


def test_equality_and_bounds():
    m = make_model([[1.0, 1.0, 1.0]], [EQ], [2.0], [1.0, 2.0, 3.0], upper=[1.0, 1.0, 1.0])
    sol = solve_lp(m)
    assert sol.objective == pytest.approx(3.0)
    assert check_duality(m, sol).passed


def _scipy(m):
    A = m.matrix()
    ub, bub, eq, beq = [], [], [], []
    for row, s, b in zip(A, m.senses, m.rhs):
        if s == LE:
            ub.append(row); bub.append(b)
        elif s == GE:
            ub.append(-row); bub.append(-b)
        else:
            eq.append(row); beq.append(b)
    bounds = [(None if not np.isfinite(lo) else lo, None if not np.isfinite(hi) else hi)
              for lo, hi in zip(m.lower, m.upper)]
    r = linprog(m.objective, A_ub=np.array(ub) if ub else None, b_ub=bub or None,
                A_eq=np.array(eq) if eq else None, b_eq=beq or None, bounds=bounds, method="highs")
    return {0: OPTIMAL, 2: INFEASIBLE, 3: UNBOUNDED}[r.status], r.fun


@pytest.mark.parametrize("seed", range(60))
def test_unrestricted_lps_match_reference(seed):
    m = random_lp(seed, planted=False)
    sol = solve_lp(m)
    status, fun = _scipy(m)
    assert sol.status == status
    if status == OPTIMAL:
        assert sol.objective == pytest.approx(fun, abs=1e-6)
        assert check_duality(m, sol).passed
    elif status == INFEASIBLE:
        assert farkas_margin(m, sol.certificate) > 0


@pytest.mark.parametrize("seed", range(40))
def test_planted_lps_certified(seed):
    m = random_lp(1000 + seed)
    sol = solve_lp(m)
    assert sol.status == OPTIMAL
    assert sol.objective == pytest.approx(_scipy(m)[1], abs=1e-6)
    assert check_duality(m, sol).passed


def test_adding_a_row_never_improves():
    rng = np.random.default_rng(5)
    for seed in range(30):
        m = random_lp(2000 + seed)
        base = solve_lp(m)
        coefs = rng.integers(-5, 6, m.n_columns).astype(float)
        row = make_model([coefs], [LE], [float(rng.integers(-5, 6))], np.zeros(m.n_columns)).rows
        tighter = solve_lp(m.with_rows(row))
        assert tighter.status in (OPTIMAL, INFEASIBLE)
        if tighter.status == OPTIMAL:
            assert tighter.objective >= base.objective - 1e-9


def test_deterministic():
    m = random_lp(7)
    a, b = solve_lp(m), solve_lp(m)
    assert np.array_equal(a.primal, b.primal) and a.iterations == b.iterations


def test_rowless_problem_solved_without_iterations():
    from quaddelivery.simplex import Tolerances, _solve_arrays

    sol = _solve_arrays(np.zeros((0, 2)), [], np.zeros(0), np.array([1.0, -1.0]), np.zeros(2),
                        np.ones(2), Tolerances())
    assert sol.status == OPTIMAL
    assert sol.primal.tolist() == [0.0, 1.0]
