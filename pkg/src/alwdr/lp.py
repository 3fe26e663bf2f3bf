"""A self-contained linear-programming engine returning basic optima.

The solver is a bounded-variable two-phase simplex over exact rationals
(:class:`fractions.Fraction`) or floats.  Exact arithmetic is the default:
integrality of a vertex can then be asserted with zero tolerance.  The float
backend exists for speed comparisons only.

Pivoting uses largest-reduced-cost selection and falls back to Bland's
smallest-index rule after a run of degenerate pivots, so the solver cannot
cycle and identical problems always produce identical bases.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable

Rat = Fraction


class LpError(ValueError):
    """Malformed problem: unknown variables, bad bounds, bad relations."""


class SolverStall(RuntimeError):
    """Internal pivot-limit guard; indicates a solver bug, not a bad input."""


@dataclass(frozen=True)
class Constraint:
    name: str
    coeffs: dict[str, Fraction]
    rel: str  # "<=", "=", ">="
    rhs: Fraction


@dataclass
class LpProblem:
    """Variables with [lb, ub] bounds, linear constraints, one objective."""

    name: str = "lp"
    sense: str = "max"
    var_order: list[str] = field(default_factory=list)
    bounds: dict[str, tuple[Fraction, Fraction | None]] = field(default_factory=dict)
    objective: dict[str, Fraction] = field(default_factory=dict)
    constraints: list[Constraint] = field(default_factory=list)

    def add_var(self, name: str, lb=0, ub=1, obj=0) -> str:
        if name in self.bounds:
            raise LpError(f"duplicate variable {name!r}")
        lb = Fraction(lb)
        ub = None if ub is None else Fraction(ub)
        if ub is not None and lb > ub:
            raise LpError(f"variable {name!r} has lb {lb} > ub {ub}")
        self.var_order.append(name)
        self.bounds[name] = (lb, ub)
        if obj:
            self.objective[name] = Fraction(obj)
        return name

    def add_constraint(self, coeffs: dict[str, Fraction], rel: str, rhs,
                       name: str | None = None) -> None:
        if rel not in ("<=", "=", ">="):
            raise LpError(f"bad relation {rel!r}")
        for var in coeffs:
            if var not in self.bounds:
                raise LpError(f"constraint references unknown variable {var!r}")
        if name is None:
            name = f"c{len(self.constraints)}"
        self.constraints.append(
            Constraint(name, {k: Fraction(v) for k, v in coeffs.items()}, rel,
                       Fraction(rhs))
        )

    def objective_value(self, values: dict) -> Fraction:
        total = Fraction(0)
        for var, c in self.objective.items():
            total += Fraction(c) * Fraction(values[var])
        return total


@dataclass(frozen=True)
class LpSolution:
    status: str  # optimal | infeasible | unbounded
    values: dict
    objective: Fraction | float | None
    basis: tuple[str, ...]


def is_integral(sol: LpSolution, tol=Fraction(0)) -> bool:
    """True iff every reported value is within ``tol`` of 0 or 1.

    Use ``tol=0`` with the rational backend; floats need a small tolerance.
    """
    if sol.status != "optimal":
        raise LpError("integrality is only defined for optimal solutions")
    for v in sol.values.values():
        if not (abs(v) <= tol or abs(v - 1) <= tol):
            return False
    return True


_LOWER, _UPPER, _BASIC = 0, 1, 2


def solve_basic_optimal(problem: LpProblem, backend: str = "rational") -> LpSolution:
    """Solve to a basic (vertex) optimum; deterministic for a fixed problem."""
    if backend == "rational":
        return _Simplex(problem, Fraction, Fraction(0)).solve()
    if backend == "float":
        return _Simplex(problem, float, 1e-9).solve()
    raise LpError(f"unknown backend {backend!r}")


class _Simplex:
    def __init__(self, problem: LpProblem, conv, eps):
        self.p = problem
        self.conv = conv
        self.eps = eps
        self.zero = conv(0)
        self.one = conv(1)
        self._build()

    # -- tableau construction ---------------------------------------------

    def _build(self):
        p, conv = self.p, self.conv
        self.struct = list(p.var_order)
        self.col_name = list(self.struct)
        self.lb_shift = []
        self.ub = []
        for v in self.struct:
            lb, ub = p.bounds[v]
            self.lb_shift.append(conv(lb))
            self.ub.append(None if ub is None else conv(ub - lb))

        nrows = len(p.constraints)
        rows = []
        rhs = []
        slack_of_row: list[int | None] = []
        col_index = {v: i for i, v in enumerate(self.struct)}
        for con in p.constraints:
            row = [self.zero] * len(self.col_name)
            base = self.zero
            for var, c in con.coeffs.items():
                j = col_index[var]
                row[j] = row[j] + conv(c)
                base += conv(c) * self.lb_shift[j]
            b = conv(con.rhs) - base
            if con.rel == "=":
                slack_of_row.append(None)
            else:
                j = len(self.col_name)
                self.col_name.append(f"slack_{con.name}")
                self.ub.append(None)
                for r in rows:
                    r.append(self.zero)
                row.append(self.one if con.rel == "<=" else -self.one)
                slack_of_row.append(j)
            rows.append(row)
            rhs.append(b)
        # make every right-hand side non-negative
        for r in range(nrows):
            if rhs[r] < 0:
                rows[r] = [-v for v in rows[r]]
                rhs[r] = -rhs[r]

        self.A = rows
        self.basis: list[int] = []
        self.val: list = []
        self.stat = [_LOWER] * len(self.col_name)
        self.artificials: list[int] = []
        for r in range(nrows):
            sj = slack_of_row[r]
            if sj is not None and self.A[r][sj] == self.one:
                self.basis.append(sj)
            else:
                j = len(self.col_name)
                self.col_name.append(f"art_{r}")
                self.ub.append(None)
                for rr in range(nrows):
                    self.A[rr].append(self.one if rr == r else self.zero)
                self.artificials.append(j)
                self.basis.append(j)
            self.val.append(rhs[r])
        self.stat.extend([_LOWER] * (len(self.col_name) - len(self.stat)))
        for r, j in enumerate(self.basis):
            self.stat[j] = _BASIC
        self.nrows = nrows
        self.ncols = len(self.col_name)

    # -- core iteration ----------------------------------------------------

    def _reduced_costs(self, cost: list) -> list:
        z = list(cost)
        for r in range(self.nrows):
            j = self.basis[r]
            f = z[j]
            if f != self.zero:
                row = self.A[r]
                for k in range(self.ncols):
                    if row[k] != self.zero:
                        z[k] -= f * row[k]
        return z

    def _iterate(self, z: list, phase: int) -> str:
        eps = self.eps
        degenerate_run = 0
        bland = False
        for _ in range(200000):
            if phase == 1 and self._phase1_value() <= eps:
                return "optimal"
            enter = -1
            enter_rate = self.eps
            for j in range(self.ncols):
                if self.stat[j] == _BASIC:
                    continue
                ubj = self.ub[j]
                if ubj is not None and ubj == self.zero:
                    continue  # pinned columns can never move
                zj = z[j]
                if self.stat[j] == _LOWER and zj < -eps:
                    rate = -zj
                elif self.stat[j] == _UPPER and zj > eps:
                    rate = zj
                else:
                    continue
                if bland:
                    enter = j
                    break
                if rate > enter_rate:
                    enter, enter_rate = j, rate
            if enter < 0:
                return "optimal"

            d = 1 if self.stat[enter] == _LOWER else -1
            leave_row = -1
            leave_to_upper = False
            t_best = None
            ub_e = self.ub[enter]
            if ub_e is not None:
                t_best = ub_e
            for r in range(self.nrows):
                a = self.A[r][enter]
                if d < 0:
                    a = -a
                if a > eps:
                    t = self.val[r] / a
                    hit_upper = False
                elif a < -eps:
                    ub_b = self.ub[self.basis[r]]
                    if ub_b is None:
                        continue
                    t = (ub_b - self.val[r]) / (-a)
                    hit_upper = True
                else:
                    continue
                take = t_best is None or t < t_best or (
                    t == t_best and leave_row >= 0
                    and self.basis[r] < self.basis[leave_row]
                )
                if take:
                    t_best = t
                    leave_row = r
                    leave_to_upper = hit_upper
            if t_best is None:
                return "unbounded"
            if t_best <= eps:
                degenerate_run += 1
                if degenerate_run > 50:
                    bland = True
            else:
                degenerate_run = 0

            if leave_row < 0:
                # bound flip: the entering variable crosses to its other bound
                t = t_best
                col = [self.A[r][enter] for r in range(self.nrows)]
                for r in range(self.nrows):
                    if col[r] != self.zero:
                        self.val[r] -= d * col[r] * t
                self.stat[enter] = _UPPER if self.stat[enter] == _LOWER else _LOWER
                continue

            t = t_best
            enter_val = (self.zero + d * t) if self.stat[enter] == _LOWER else (
                self.ub[enter] - t
            )
            for r in range(self.nrows):
                if r != leave_row and self.A[r][enter] != self.zero:
                    self.val[r] -= d * self.A[r][enter] * t
            leaving = self.basis[leave_row]
            self.stat[leaving] = _UPPER if leave_to_upper else _LOWER
            self.basis[leave_row] = enter
            self.stat[enter] = _BASIC
            self.val[leave_row] = enter_val
            self._pivot_rows(leave_row, enter, z)
        raise SolverStall("pivot limit exceeded")

    def _pivot_rows(self, r: int, j: int, z: list) -> None:
        row = self.A[r]
        piv = row[j]
        if piv != self.one:
            inv = self.one / piv
            for k in range(self.ncols):
                if row[k] != self.zero:
                    row[k] *= inv
        nz = [k for k in range(self.ncols) if row[k] != self.zero]
        for rr in range(self.nrows):
            if rr == r:
                continue
            f = self.A[rr][j]
            if f != self.zero:
                target = self.A[rr]
                for k in nz:
                    target[k] -= f * row[k]
        f = z[j]
        if f != self.zero:
            for k in nz:
                z[k] -= f * row[k]

    def _phase1_value(self):
        art = set(self.artificials)
        total = self.zero
        for r in range(self.nrows):
            if self.basis[r] in art:
                total += self.val[r]
        return total

    # -- drive -------------------------------------------------------------

    def solve(self) -> LpSolution:
        if self.artificials:
            cost = [self.zero] * self.ncols
            for j in self.artificials:
                cost[j] = self.one
            z = self._reduced_costs(cost)
            status = self._iterate(z, phase=1)
            feas_tol = 1e-7 if self.conv is float else self.zero
            if status != "optimal" or self._phase1_value() > feas_tol:
                return LpSolution("infeasible", {}, None, ())
            for j in self.artificials:
                self.ub[j] = self.zero  # pinned: they may stay basic at zero

        sign = -1 if self.p.sense == "max" else 1
        col_index = {v: i for i, v in enumerate(self.struct)}
        cost = [self.zero] * self.ncols
        for var, c in self.p.objective.items():
            cost[col_index[var]] = sign * self.conv(c)
        z = self._reduced_costs(cost)
        status = self._iterate(z, phase=2)
        if status == "unbounded":
            return LpSolution("unbounded", {}, None, ())

        values = {}
        basic_value = {self.basis[r]: self.val[r] for r in range(self.nrows)}
        for j, name in enumerate(self.struct):
            if self.stat[j] == _BASIC:
                x = basic_value[j]
            elif self.stat[j] == _UPPER:
                x = self.ub[j]
            else:
                x = self.zero
            values[name] = x + self.lb_shift[j]
        objective = self.p.objective_value(values) if self.conv is Fraction else float(
            sum(float(c) * values[v] for v, c in self.p.objective.items())
        )
        basis_names = tuple(self.col_name[self.basis[r]] for r in range(self.nrows))
        return LpSolution("optimal", values, objective, basis_names)


def check_solution(problem: LpProblem, sol: LpSolution, tol=Fraction(0)) -> None:
    """Raise if reported values violate any constraint or bound."""
    for var, (lb, ub) in problem.bounds.items():
        v = sol.values[var]
        if v < lb - tol or (ub is not None and v > ub + tol):
            raise LpError(f"{var} = {v} violates bounds [{lb}, {ub}]")
    for con in problem.constraints:
        lhs = sum((Fraction(c) * Fraction(sol.values[v]) if tol == 0
                   else c * sol.values[v])
                  for v, c in con.coeffs.items())
        ok = {
            "<=": lhs <= con.rhs + tol,
            "=": abs(lhs - con.rhs) <= tol,
            ">=": lhs >= con.rhs - tol,
        }[con.rel]
        if not ok:
            raise LpError(f"constraint {con.name} violated: {lhs} {con.rel} {con.rhs}")


def write_lp_format(problem: LpProblem) -> str:
    """Serialize in the common solver-interchange LP text format.

    Rational coefficients are emitted as repr'd floats; the export is for
    cross-checking against external solvers, not for exact round-trips.
    """
    def num(x) -> str:
        f = float(x)
        return repr(int(f)) if f == int(f) else repr(f)

    def terms(coeffs: dict[str, Fraction]) -> str:
        parts = []
        for var in problem.var_order:
            if var not in coeffs or coeffs[var] == 0:
                continue
            c = coeffs[var]
            sign = "-" if c < 0 else ("+" if parts else "")
            mag = abs(c)
            parts.append(f"{sign} {num(mag)} {var}".strip())
        return " ".join(parts) if parts else "0 " + problem.var_order[0]

    lines = [f"\\ Problem: {problem.name}"]
    lines.append("Maximize" if problem.sense == "max" else "Minimize")
    lines.append(f" obj: {terms(problem.objective)}")
    lines.append("Subject To")
    rel_text = {"<=": "<=", "=": "=", ">=": ">="}
    for con in problem.constraints:
        lines.append(f" {con.name}: {terms(con.coeffs)} {rel_text[con.rel]} {num(con.rhs)}")
    lines.append("Bounds")
    for var in problem.var_order:
        lb, ub = problem.bounds[var]
        if ub is None:
            lines.append(f" {num(lb)} <= {var} <= +inf")
        else:
            lines.append(f" {num(lb)} <= {var} <= {num(ub)}")
    lines.append("End")
    return "\n".join(lines) + "\n"
