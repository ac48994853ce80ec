"""Exact two-phase simplex over rationals.

Problems are given in equality form {x >= 0 : A x = b}. Pivoting follows
Bland's rule (smallest entering index, smallest leaving basic variable on
ratio ties), so the method terminates without any tolerance parameter.
"""
from fractions import Fraction

ZERO = Fraction(0)
ONE = Fraction(1)


class InfeasibleError(Exception):
    pass


class UnboundedError(Exception):
    pass


class SimplexTableau:
    def __init__(self, rows, rhs, basis):
        self.rows = rows
        self.rhs = rhs
        self.basis = basis

    @classmethod
    def with_artificials(cls, a_eq, b_eq):
        "Tableau for A x = b with one artificial column per row forming the starting basis."
        m = len(a_eq)
        width = len(a_eq[0]) if m else 0
        rows, rhs = [], []
        for r, (row, b) in enumerate(zip(a_eq, b_eq)):
            row = [Fraction(v) for v in row]
            b = Fraction(b)
            if len(row) != width:
                raise ValueError("Constraint rows must have equal length")
            if b < 0:
                row = [-v for v in row]
                b = -b
            rows.append(row + [ONE if c == r else ZERO for c in range(m)])
            rhs.append(b)
        return cls(rows, rhs, [width + r for r in range(m)])

    @property
    def width(self):
        return len(self.rows[0]) if self.rows else 0

    def pivot(self, r, c):
        piv = self.rows[r][c]
        row = [v / piv for v in self.rows[r]]
        b = self.rhs[r] / piv
        self.rows[r] = row
        self.rhs[r] = b
        for i, other in enumerate(self.rows):
            f = other[c]
            if i == r or not f:
                continue
            self.rows[i] = [a - f * p if p else a for a, p in zip(other, row)]
            self.rhs[i] -= f * b
        self.basis[r] = c

    def objective(self, cost):
        return sum((cost[v] * b for v, b in zip(self.basis, self.rhs)), ZERO)

    def _entering(self, cost, columns):
        basic = set(self.basis)
        weights = [(cost[v], row) for v, row in zip(self.basis, self.rows) if cost[v]]
        for j in columns:
            if j in basic:
                continue
            reduced = cost[j] - sum((w * row[j] for w, row in weights if row[j]), ZERO)
            if reduced < 0:
                return j
        return None

    def _leaving(self, j):
        leaving, best = None, None
        for i, row in enumerate(self.rows):
            if row[j] > 0:
                ratio = self.rhs[i] / row[j]
                if best is None or ratio < best or (ratio == best and self.basis[i] < self.basis[leaving]):
                    leaving, best = i, ratio
        return leaving

    def minimize(self, cost, columns):
        "Runs Bland pivots until no column in columns has negative reduced cost."
        while True:
            j = self._entering(cost, columns)
            if j is None:
                return self.objective(cost)
            i = self._leaving(j)
            if i is None:
                raise UnboundedError(f"Column {j} can grow without bound")
            self.pivot(i, j)

    def drive_out(self, first_artificial):
        "Pivots zero-level artificials out of the basis and drops redundant rows."
        r = 0
        while r < len(self.rows):
            if self.basis[r] >= first_artificial:
                row = self.rows[r]
                c = next((c for c in range(first_artificial) if row[c]), None)
                if c is None:
                    del self.rows[r], self.rhs[r], self.basis[r]
                    continue
                self.pivot(r, c)
            r += 1

    def solution(self, size):
        x = [ZERO] * size
        for v, b in zip(self.basis, self.rhs):
            if v < size:
                x[v] = b
        return x


def _phase_one(a_eq, b_eq):
    tableau = SimplexTableau.with_artificials(a_eq, b_eq)
    m = len(tableau.rows)
    size = tableau.width - m
    cost = [ZERO] * size + [ONE] * m
    if tableau.minimize(cost, range(tableau.width)) > 0:
        raise InfeasibleError("Artificial variables cannot be driven to zero")
    tableau.drive_out(size)
    return tableau, size


def feasible_point(a_eq, b_eq, size=None):
    """Returns a basic feasible x >= 0 with A x = b, or None.

    size gives the number of variables when A has no rows.
    """
    if not a_eq:
        return [ZERO] * (size or 0)
    try:
        tableau, width = _phase_one(a_eq, b_eq)
    except InfeasibleError:
        return None
    return tableau.solution(width)


def minimize(cost, a_eq, b_eq):
    cost = [Fraction(c) for c in cost]
    if not a_eq:
        if any(c < 0 for c in cost):
            raise UnboundedError("Negative cost on an unconstrained variable")
        return ZERO, [ZERO] * len(cost)
    tableau, size = _phase_one(a_eq, b_eq)
    assert len(cost) == size, "Cost vector must have one entry per variable"
    full_cost = cost + [ZERO] * (tableau.width - size)
    value = tableau.minimize(full_cost, range(size))
    return value, tableau.solution(size)


def maximize(cost, a_eq, b_eq):
    value, x = minimize([-Fraction(c) for c in cost], a_eq, b_eq)
    return -value, x
