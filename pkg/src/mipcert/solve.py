"""Certifying branch-and-bound MILP solver.

``solve`` optimizes a mixed-integer linear program with exact rational
arithmetic and emits, alongside the answer, a certificate that the checker
accepts: a proof of infeasibility, or a derived bound row landing exactly on
the optimal value together with a feasible solution meeting it.

How the tree becomes a proof. Internally the solver always minimizes
(maximization negates the objective and flips the emitted bound rows to
``<=``). Each node solves an exact LP relaxation over the original rows plus
the branch assumptions on its path, and contributes one *bound row* — either
an absurdity ``0 >= 1`` or ``objective >= r`` — whose assumption set is
contained in the node's path:

- an infeasible LP yields Farkas multipliers, emitted as a suitable linear
  combination scaled to ``0 >= 1``;
- an integral or pruned LP optimum yields dual multipliers, emitted as the
  combination ``objective >= value``;
- otherwise the solver branches on the most fractional integer variable,
  assumes ``x_v <= floor`` and ``x_v >= floor + 1`` in turn, and merges the
  two child bound rows by unsplitting, stating the weaker of the two bounds.

When a child's bound row does not actually depend on that child's branch
assumption, the row already holds for the whole node and is adopted directly
instead of unsplitting (unsplitting would be illegal there: it requires each
cited row to depend on its cited assumption).

With ``cg_objective`` enabled, two rounding refinements are added. Every
objective bound row is followed by a rounding step whenever the objective is
integral over the integer variables, and every node about to branch first
probes its fractional integer variables: if minimizing ``x_i`` over the node
rows yields a fractional bound whose rounding makes the node LP-infeasible,
the node closes with the chain combination -> rounding -> Farkas absurdity
instead of branching further.

Every emitted derivation is re-validated at emission time against the same
inference rules the checker enforces, so a bug in the emission logic fails
fast at its source rather than as a distant verification failure.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

from .model import (
    Asm,
    AssumptionSet,
    Certificate,
    Constraint,
    Derivation,
    InfeasibleGoal,
    Lin,
    ObjectiveSense,
    Problem,
    RangeGoal,
    Reason,
    Rnd,
    Sense,
    Solution,
    SparseVec,
    Uns,
    check_disjunction_pair,
    dominates,
    is_absurd,
    linear_combine,
    round_constraint,
)
from .numeric import Rational, is_integral, rational_ceil, rational_floor
from .simplex import LpInfeasible, LpOptimal, LpUnbounded, solve_lp

__all__ = [
    "SolveConfig",
    "SolveResult",
    "NodeLimitError",
    "select_branch_variable",
    "solve",
]

_ZERO = Rational(0)
_ONE = Rational(1)


class NodeLimitError(RuntimeError):
    """Raised when branch and bound exceeds the configured node budget."""


class _RootUnbounded(Exception):
    """Internal: the root LP relaxation is unbounded."""


@dataclass(frozen=True)
class SolveConfig:
    """Solver options.

    ``node_limit`` bounds the number of branch-and-bound nodes (``None`` for
    no bound); exceeding it raises :class:`NodeLimitError`. ``cg_objective``
    enables the rounding refinements described in the module docstring.
    """

    node_limit: Optional[int] = None
    cg_objective: bool = False


@dataclass(frozen=True)
class SolveResult:
    """Outcome of a solve.

    ``status`` is ``"optimal"``, ``"infeasible"``, or ``"unbounded"``.
    ``value`` and ``point`` are the optimal value and one optimal assignment
    (in the problem's own objective sense), present only when optimal.
    ``certificate`` is a checker-ready certificate, absent only when the
    relaxation is unbounded. ``num_nodes`` counts explored nodes.
    """

    status: str
    value: Optional[Rational]
    point: Optional[tuple[Rational, ...]]
    certificate: Optional[Certificate]
    num_nodes: int


def select_branch_variable(
    point: Sequence[Rational], integer_set: frozenset[int]
) -> Optional[int]:
    """Index of the integer variable farthest from integrality, or None.

    Distance to the nearest integer is the score; ties go to the smallest
    index. Returns None when every integer variable is integral.
    """
    best_index: Optional[int] = None
    best_score: Optional[Rational] = None
    for index in sorted(integer_set):
        value = point[index]
        if is_integral(value):
            continue
        floor = rational_floor(value)
        score = min(value - floor, floor + 1 - value)
        if best_score is None or score > best_score:
            best_score = score
            best_index = index
    return best_index


class _Builder:
    """Accumulates derivations, validating each against the checker's rules."""

    def __init__(self, problem: Problem) -> None:
        self.problem = problem
        self.derivations: list[Derivation] = []
        self.assumption_sets: dict[int, AssumptionSet] = {
            index: frozenset() for index in range(problem.num_constraints)
        }
        self._names = {c.name for c in problem.constraints}
        self._counters = {"A": 0, "D": 0}

    def fresh_name(self, prefix: str) -> str:
        while True:
            self._counters[prefix] += 1
            name = f"{prefix}{self._counters[prefix]}"
            if name not in self._names:
                return name

    @property
    def next_index(self) -> int:
        return self.problem.num_constraints + len(self.derivations)

    def row(self, index: int) -> Constraint:
        m = self.problem.num_constraints
        if index < m:
            return self.problem.constraints[index]
        return self.derivations[index - m].constraint

    def is_assumption(self, index: int) -> bool:
        m = self.problem.num_constraints
        return index >= m and isinstance(self.derivations[index - m].reason, Asm)

    def _push(
        self, constraint: Constraint, reason: Reason, assumptions: AssumptionSet
    ) -> int:
        index = self.next_index
        self.derivations.append(Derivation(constraint, reason))
        self.assumption_sets[index] = assumptions
        self._names.add(constraint.name)
        return index

    def add_assumption(self, variable: int, sense: Sense, bound: Rational) -> int:
        constraint = Constraint(
            self.fresh_name("A"), sense, SparseVec(((variable, _ONE),)), bound
        )
        return self._push(constraint, Asm(), frozenset((self.next_index,)))

    def _combined_assumptions(
        self, terms: Sequence[tuple[int, Rational]]
    ) -> AssumptionSet:
        union: AssumptionSet = frozenset()
        for index, _ in terms:
            union |= self.assumption_sets[index]
        return union

    def add_lin(
        self, terms: Sequence[tuple[int, Rational]], constraint: Constraint
    ) -> int:
        clean = tuple(sorted((i, m) for i, m in terms if m != 0))
        combined = linear_combine(
            [(self.row(i), m) for i, m in clean], constraint.sense
        )
        assert dominates(combined, constraint), "emitted combination too weak"
        return self._push(constraint, Lin(clean), self._combined_assumptions(clean))

    def add_rnd(
        self, terms: Sequence[tuple[int, Rational]], constraint: Constraint
    ) -> int:
        clean = tuple(sorted((i, m) for i, m in terms if m != 0))
        combined = linear_combine(
            [(self.row(i), m) for i, m in clean], constraint.sense
        )
        rounded = round_constraint(combined, self.problem.integer_set)
        assert dominates(rounded, constraint), "emitted rounding too weak"
        return self._push(constraint, Rnd(clean), self._combined_assumptions(clean))

    def add_uns(
        self, i1: int, a1: int, i2: int, a2: int, constraint: Constraint
    ) -> int:
        assert self.is_assumption(a1) and self.is_assumption(a2)
        assert a1 in self.assumption_sets[i1] and a2 in self.assumption_sets[i2]
        assert check_disjunction_pair(
            self.row(a1), self.row(a2), self.problem.integer_set
        ), "branch rows are not a split disjunction"
        assert dominates(self.row(i1), constraint), "first branch row too weak"
        assert dominates(self.row(i2), constraint), "second branch row too weak"
        assumptions = (
            self.assumption_sets[i1] | self.assumption_sets[i2]
        ) - {a1, a2}
        return self._push(constraint, Uns(i1, a1, i2, a2), assumptions)


class _Solver:
    def __init__(self, problem: Problem, config: SolveConfig) -> None:
        self.problem = problem
        self.config = config
        self.minimize = problem.objective_sense is ObjectiveSense.MIN
        # Internal objective, always minimized.
        self.objective = (
            problem.objective
            if self.minimize
            else SparseVec(tuple((i, -c) for i, c in problem.objective))
        )
        self.builder = _Builder(problem)
        self.incumbent_value: Optional[Rational] = None  # internal (min) sense
        self.incumbent_point: Optional[tuple[Rational, ...]] = None
        self.num_nodes = 0
        self.objective_roundable = all(
            index in problem.integer_set and is_integral(coeff)
            for index, coeff in problem.objective
        )

    # -- certificate rows -------------------------------------------------

    def _bound_row(self, internal_rhs: Rational) -> Constraint:
        name = self.builder.fresh_name("D")
        if self.minimize:
            return Constraint(name, Sense.GE, self.problem.objective, internal_rhs)
        return Constraint(name, Sense.LE, self.problem.objective, -internal_rhs)

    def _absurd_row(self) -> Constraint:
        return Constraint(self.builder.fresh_name("D"), Sense.GE, SparseVec(()), _ONE)

    def _internal_rhs(self, bound_row: Constraint) -> Rational:
        return bound_row.rhs if self.minimize else -bound_row.rhs

    def _emit_objective_bound(
        self,
        duals: Sequence[Rational],
        rows: Sequence[tuple[int, Constraint]],
        internal_value: Rational,
    ) -> int:
        multipliers = duals if self.minimize else [-d for d in duals]
        terms = [
            (index, mult)
            for (index, _), mult in zip(rows, multipliers)
            if mult != 0
        ]
        bound_index = self.builder.add_lin(terms, self._bound_row(internal_value))
        if self.config.cg_objective and self.objective_roundable:
            rounded = self._bound_row(rational_ceil(internal_value))
            bound_index = self.builder.add_rnd([(bound_index, _ONE)], rounded)
        return bound_index

    def _emit_farkas(
        self,
        farkas: Sequence[Rational],
        rows: Sequence[tuple[int, Constraint]],
    ) -> int:
        gap = sum(
            (mult * con.rhs for (_, con), mult in zip(rows, farkas)), _ZERO
        )
        assert gap > 0, "Farkas multipliers must witness a positive gap"
        scale = _ONE / gap
        terms = [
            (index, mult * scale)
            for (index, _), mult in zip(rows, farkas)
            if mult != 0
        ]
        return self.builder.add_lin(terms, self._absurd_row())

    # -- search ------------------------------------------------------------

    def _node_rows(self, path: Sequence[int]) -> list[tuple[int, Constraint]]:
        rows = list(enumerate(self.problem.constraints))
        rows.extend((index, self.builder.row(index)) for index in path)
        return rows

    def solve_node(self, path: list[int]) -> int:
        self.num_nodes += 1
        limit = self.config.node_limit
        if limit is not None and self.num_nodes > limit:
            raise NodeLimitError(f"node limit of {limit} exceeded")

        rows = self._node_rows(path)
        outcome = solve_lp(
            self.problem.num_variables, [con for _, con in rows], self.objective
        )
        if isinstance(outcome, LpInfeasible):
            return self._emit_farkas(outcome.farkas, rows)
        if isinstance(outcome, LpUnbounded):
            # Children inherit the parent's finite LP bound, so an unbounded
            # relaxation can only appear at the root.
            assert not path, "unbounded relaxation below the root"
            raise _RootUnbounded
        point, value = outcome.point, outcome.value

        if self.incumbent_value is not None and value >= self.incumbent_value:
            return self._emit_objective_bound(outcome.duals, rows, value)

        branch_variable = select_branch_variable(point, self.problem.integer_set)
        if branch_variable is None:
            if self.incumbent_value is None or value < self.incumbent_value:
                self.incumbent_value = value
                self.incumbent_point = point
            return self._emit_objective_bound(outcome.duals, rows, value)

        if self.config.cg_objective:
            closed = self._try_probe(rows, point)
            if closed is not None:
                return closed

        floor = rational_floor(point[branch_variable])
        down_asm = self.builder.add_assumption(branch_variable, Sense.LE, floor)
        down_index = self.solve_node(path + [down_asm])
        down_row = self.builder.row(down_index)
        if down_asm not in self.builder.assumption_sets[down_index] and is_absurd(
            down_row
        ):
            # The refutation never used the branch assumption, so it already
            # covers the whole node; the other branch cannot contain anything.
            return down_index

        up_asm = self.builder.add_assumption(branch_variable, Sense.GE, floor + 1)
        up_index = self.solve_node(path + [up_asm])
        up_row = self.builder.row(up_index)

        # A child bound that does not depend on its own branch assumption
        # already holds for this node; unsplitting would even be illegal.
        if up_asm not in self.builder.assumption_sets[up_index]:
            return up_index
        if down_asm not in self.builder.assumption_sets[down_index]:
            return down_index

        stated = self._stated_row(down_row, up_row)
        return self.builder.add_uns(down_index, down_asm, up_index, up_asm, stated)

    def _stated_row(self, down_row: Constraint, up_row: Constraint) -> Constraint:
        down_absurd = is_absurd(down_row)
        up_absurd = is_absurd(up_row)
        if down_absurd and up_absurd:
            return self._absurd_row()
        if down_absurd:
            return self._bound_row(self._internal_rhs(up_row))
        if up_absurd:
            return self._bound_row(self._internal_rhs(down_row))
        return self._bound_row(
            min(self._internal_rhs(down_row), self._internal_rhs(up_row))
        )

    def _try_probe(
        self, rows: list[tuple[int, Constraint]], point: Sequence[Rational]
    ) -> Optional[int]:
        """Try to close the node with a combination -> rounding -> absurdity.

        For each fractional integer variable, minimize it exactly over the
        node rows; a fractional minimum whose round-up makes the node rows
        infeasible closes the node without further branching.
        """
        constraints = [con for _, con in rows]
        for variable in sorted(self.problem.integer_set):
            if is_integral(point[variable]):
                continue
            unit = SparseVec(((variable, _ONE),))
            aux = solve_lp(self.problem.num_variables, constraints, unit)
            if not isinstance(aux, LpOptimal):
                continue  # unbounded below: no cut from this variable
            low = aux.value
            if is_integral(low):
                continue
            lifted = rational_ceil(low)
            strengthened = constraints + [
                Constraint("_probe", Sense.GE, unit, lifted)
            ]
            refutation = solve_lp(
                self.problem.num_variables, strengthened, self.objective
            )
            if not isinstance(refutation, LpInfeasible):
                continue
            lin_terms = [
                (index, mult)
                for (index, _), mult in zip(rows, aux.duals)
                if mult != 0
            ]
            lin_index = self.builder.add_lin(
                lin_terms,
                Constraint(self.builder.fresh_name("D"), Sense.GE, unit, low),
            )
            rnd_index = self.builder.add_rnd(
                [(lin_index, _ONE)],
                Constraint(self.builder.fresh_name("D"), Sense.GE, unit, lifted),
            )
            farkas_rows = rows + [(rnd_index, self.builder.row(rnd_index))]
            return self._emit_farkas(refutation.farkas, farkas_rows)
        return None


def solve(problem: Problem, config: SolveConfig = SolveConfig()) -> SolveResult:
    """Optimize ``problem`` exactly and return the result with a certificate.

    Raises :class:`NodeLimitError` if the configured node budget is exceeded.
    """
    solver = _Solver(problem, config)
    try:
        root_index = solver.solve_node([])
    except _RootUnbounded:
        return SolveResult(
            status="unbounded",
            value=None,
            point=None,
            certificate=None,
            num_nodes=solver.num_nodes,
        )

    builder = solver.builder
    root_row = builder.row(root_index)
    assert not builder.assumption_sets[root_index], "root bound under assumptions"

    if is_absurd(root_row):
        assert solver.incumbent_value is None, "incumbent in an infeasible problem"
        certificate = Certificate(
            problem=problem,
            goal=InfeasibleGoal(),
            solutions=(),
            derivations=tuple(builder.derivations),
        )
        return SolveResult(
            status="infeasible",
            value=None,
            point=None,
            certificate=certificate,
            num_nodes=solver.num_nodes,
        )

    assert solver.incumbent_value is not None, "bounded tree without incumbent"
    assert solver.incumbent_point is not None
    internal_value = solver.incumbent_value
    assert solver._internal_rhs(root_row) == internal_value, (
        "root bound must land exactly on the incumbent value"
    )
    value = internal_value if solver.minimize else -internal_value
    assignment = SparseVec.from_dict(
        {i: v for i, v in enumerate(solver.incumbent_point)}
    )
    certificate = Certificate(
        problem=problem,
        goal=RangeGoal(lower=value, upper=value),
        solutions=(Solution("opt", assignment),),
        derivations=tuple(builder.derivations),
    )
    return SolveResult(
        status="optimal",
        value=value,
        point=solver.incumbent_point,
        certificate=certificate,
        num_nodes=solver.num_nodes,
    )
