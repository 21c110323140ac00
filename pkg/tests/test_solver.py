"""Certifying branch-and-bound: statuses, values, certificates, determinism."""

from __future__ import annotations

import itertools
import random

import pytest
from conftest import load_golden

from mipcert.checker import verify_certificate
from mipcert.model import (
    Constraint,
    InfeasibleGoal,
    ObjectiveSense,
    Problem,
    RangeGoal,
    Rnd,
    Sense,
    SparseVec,
    evaluate_solution,
    is_absurd,
)
from mipcert.numeric import Rational as R
from mipcert.solve import NodeLimitError, SolveConfig, SolveResult, select_branch_variable, solve

CG = SolveConfig(cg_objective=True)


def vec(*pairs) -> SparseVec:
    return SparseVec(tuple((i, R(*v) if isinstance(v, tuple) else R(v)) for i, v in pairs))


def con(name: str, sense: Sense, rhs, *pairs) -> Constraint:
    return Constraint(name, sense, vec(*pairs), R(*rhs) if isinstance(rhs, tuple) else R(rhs))


def problem_of(objective, sense, rows, integers=()) -> Problem:
    names = tuple(f"x{i}" for i in range(_width(objective, rows)))
    return Problem(names, frozenset(integers), objective, sense, tuple(rows))


def _width(objective, rows) -> int:
    width = 0
    for vector in [objective] + [row.lhs for row in rows]:
        for index, _ in vector:
            width = max(width, index + 1)
    return width


def assert_certified_optimal(problem: Problem, result: SolveResult) -> None:
    assert result.status == "optimal"
    assert result.certificate is not None
    report = verify_certificate(result.certificate)
    assert report.verified, report.failure
    assert result.certificate.goal == RangeGoal(result.value, result.value)
    solution = result.certificate.solutions[0]
    feasible, value = evaluate_solution(problem, solution)
    assert feasible and value == result.value
    dense = [R(0)] * problem.num_variables
    for index, coeff in problem.objective:
        dense[index] = coeff
    assert sum((c * x for c, x in zip(dense, result.point)), R(0)) == result.value


class TestBranchVariableSelection:
    def test_most_fractional_wins(self) -> None:
        point = (R(10, 17), R(-1, 17))
        assert select_branch_variable(point, frozenset({0, 1})) == 0

    def test_ties_break_to_smallest_index(self) -> None:
        point = (R(1, 2), R(1, 2))
        assert select_branch_variable(point, frozenset({0, 1})) == 0

    def test_continuous_variables_ignored(self) -> None:
        point = (R(1, 2), R(1, 3))
        assert select_branch_variable(point, frozenset({1})) == 1

    def test_integral_point_selects_nothing(self) -> None:
        point = (R(1), R(-2))
        assert select_branch_variable(point, frozenset({0, 1})) is None
        assert select_branch_variable((R(1, 2),), frozenset()) is None


class TestOptimalSolves:
    @pytest.mark.parametrize("config", (SolveConfig(), CG))
    def test_pure_lp_solves_in_one_node(self, config: SolveConfig) -> None:
        problem = load_golden("small_range").problem
        result = solve(problem, config)
        assert result.value == R(1)
        assert result.point == (R(3, 7), R(1, 7))
        assert result.num_nodes == 1
        assert_certified_optimal(problem, result)

    @pytest.mark.parametrize("config", (SolveConfig(), CG))
    def test_integer_program_with_branching(self, config: SolveConfig) -> None:
        problem = load_golden("rounding_chain").problem
        result = solve(problem, config)
        assert result.value == R(1)
        assert result.num_nodes >= 1
        assert_certified_optimal(problem, result)

    @pytest.mark.parametrize("config", (SolveConfig(), CG))
    def test_maximization(self, config: SolveConfig) -> None:
        problem = problem_of(
            vec((0, 1), (1, 2)),
            ObjectiveSense.MAX,
            [
                con("cap", Sense.LE, 5, (0, 2), (1, 2)),
                con("x-lo", Sense.GE, 0, (0, 1)),
                con("y-lo", Sense.GE, 0, (1, 1)),
            ],
            integers=(0, 1),
        )
        result = solve(problem, config)
        assert result.value == R(4)
        assert result.point == (R(0), R(2))
        assert_certified_optimal(problem, result)

    def test_cg_objective_rounds_bounds_to_integers(self) -> None:
        # Integral objective on integer variables: with cuts enabled the
        # final bound row chain must contain a rounding step whenever the LP
        # bound is fractional.
        problem = load_golden("rounding_chain").problem
        result = solve(problem, CG)
        rounded = [
            d for d in result.certificate.derivations if isinstance(d.reason, Rnd)
        ]
        assert rounded, "expected at least one rounding step"
        assert_certified_optimal(problem, result)

    def test_non_roundable_objective_emits_no_rounding(self) -> None:
        problem = problem_of(
            vec((0, 1), (1, (1, 2))),
            ObjectiveSense.MIN,
            [
                con("C", Sense.GE, 1, (0, 2), (1, 2)),
                con("y-hi", Sense.LE, 0, (1, 1)),
            ],
            integers=(0,),
        )
        result = solve(problem, CG)
        assert result.value == R(3, 4)
        assert result.point == (R(1), R(-1, 2))
        assert_certified_optimal(problem, result)
        reasons = verify_certificate(result.certificate).stats.reason_counts
        assert reasons["rnd"] == 0


class TestInfeasibleSolves:
    def test_plain_split_proof(self) -> None:
        problem = load_golden("split_infeasible").problem
        result = solve(problem)
        assert result.status == "infeasible"
        assert result.value is None and result.point is None
        assert result.num_nodes == 7
        assert result.certificate.goal == InfeasibleGoal()
        report = verify_certificate(result.certificate)
        assert report.verified
        assert report.stats.reason_counts == {"asm": 6, "lin": 4, "rnd": 0, "uns": 3}

    def test_cut_strengthened_split_proof(self) -> None:
        problem = load_golden("split_infeasible").problem
        result = solve(problem, CG)
        assert result.status == "infeasible"
        assert result.num_nodes == 5
        report = verify_certificate(result.certificate)
        assert report.verified
        assert report.stats.reason_counts == {"asm": 4, "lin": 4, "rnd": 1, "uns": 2}
        absurdities = [
            d
            for d in result.certificate.derivations
            if not isinstance(d.reason, Rnd) and is_absurd(d.constraint)
        ]
        assert len(absurdities) >= 3

    def test_lp_infeasible_root_needs_no_assumptions(self) -> None:
        problem = problem_of(
            SparseVec(()),
            ObjectiveSense.MIN,
            [con("lo", Sense.GE, 1, (0, 1)), con("hi", Sense.LE, 0, (0, 1))],
        )
        result = solve(problem)
        assert result.status == "infeasible"
        assert result.num_nodes == 1
        report = verify_certificate(result.certificate)
        assert report.verified
        assert report.stats.reason_counts == {"asm": 0, "lin": 1, "rnd": 0, "uns": 0}


class TestEdges:
    def test_unbounded_has_no_certificate(self) -> None:
        problem = problem_of(
            vec((0, -1)), ObjectiveSense.MIN, [con("lo", Sense.GE, 0, (0, 1))]
        )
        result = solve(problem)
        assert result.status == "unbounded"
        assert result.value is None
        assert result.point is None
        assert result.certificate is None

    def test_node_limit(self) -> None:
        problem = load_golden("split_infeasible").problem
        with pytest.raises(NodeLimitError):
            solve(problem, SolveConfig(node_limit=2))

    @pytest.mark.parametrize("config", (SolveConfig(), CG))
    def test_deterministic(self, config: SolveConfig) -> None:
        problem = load_golden("split_infeasible").problem
        assert solve(problem, config) == solve(problem, config)


# --- randomized cross-check against exhaustive enumeration ------------------


def random_box_problem(rng: random.Random) -> tuple[Problem, list[tuple[int, int]]]:
    num_variables = rng.randint(1, 3)
    boxes = []
    rows = []
    for index in range(num_variables):
        low = rng.randint(-3, 0)
        high = low + rng.randint(0, 3)
        boxes.append((low, high))
        rows.append(con(f"lo{index}", Sense.GE, low, (index, 1)))
        rows.append(con(f"hi{index}", Sense.LE, high, (index, 1)))
    for row_number in range(rng.randint(1, 3)):
        entries = tuple(
            (index, R(value))
            for index, value in enumerate(
                rng.randint(-4, 4) for _ in range(num_variables)
            )
            if value != 0
        )
        sense = rng.choice((Sense.GE, Sense.LE))
        rhs = R(rng.randint(-6, 6))
        rows.append(Constraint(f"r{row_number}", sense, SparseVec(entries), rhs))
    objective = SparseVec(
        tuple(
            (index, R(value))
            for index, value in enumerate(
                rng.randint(-5, 5) for _ in range(num_variables)
            )
            if value != 0
        )
    )
    sense = rng.choice((ObjectiveSense.MIN, ObjectiveSense.MAX))
    problem = problem_of(objective, sense, rows, integers=range(num_variables))
    return problem, boxes


def brute_force(problem: Problem, boxes: list[tuple[int, int]]):
    best = None
    dense = [R(0)] * problem.num_variables
    for index, coeff in problem.objective:
        dense[index] = coeff
    for point in itertools.product(*(range(lo, hi + 1) for lo, hi in boxes)):
        ok = True
        for row in problem.constraints:
            activity = sum((c * point[i] for i, c in row.lhs), R(0))
            if row.sense is Sense.GE and activity < row.rhs:
                ok = False
            elif row.sense is Sense.LE and activity > row.rhs:
                ok = False
            elif row.sense is Sense.EQ and activity != row.rhs:
                ok = False
            if not ok:
                break
        if not ok:
            continue
        value = sum((c * x for c, x in zip(dense, point)), R(0))
        if best is None:
            best = value
        elif problem.objective_sense is ObjectiveSense.MIN:
            best = min(best, value)
        else:
            best = max(best, value)
    return best


@pytest.mark.parametrize("cg", (False, True), ids=("plain", "cg"))
def test_random_batch_matches_enumeration(cg: bool) -> None:
    rng = random.Random(20260817 + cg)
    config = SolveConfig(cg_objective=cg)
    for _ in range(40):
        problem, boxes = random_box_problem(rng)
        expected = brute_force(problem, boxes)
        result = solve(problem, config)
        if expected is None:
            assert result.status == "infeasible"
        else:
            assert result.status == "optimal"
            assert result.value == expected
        assert verify_certificate(result.certificate).verified
