"""Gaussian elimination over the expression field."""

from __future__ import annotations

from typing import Sequence

from .symexpr import DomainError, Expr, div, eval_expr, expand, is_zero, mul, sample_points, sub


class SingularSystemError(ArithmeticError):
    pass


def _probably_nonzero(e: Expr, probes: int = 3, seed: int = 12345) -> bool:
    if is_zero(e):
        return False
    if not e.free_vars():
        return True
    for pt in sample_points(e.free_vars(), probes, seed, default_range=(-1.3, 1.7)):
        try:
            if eval_expr(e, pt) != 0.0:
                return True
        except DomainError:
            continue
    return False


def solve_linear(matrix: Sequence[Sequence[Expr]], rhs: Sequence[Expr]) -> list[Expr]:
    """Solve ``matrix @ x = rhs`` exactly with partial (first-nonzero) pivoting.

    Pivots are accepted only when they are structurally nonzero after
    expansion and nonzero at a random probe point.
    """
    n = len(rhs)
    a = [[expand(x) for x in row] + [expand(r)] for row, r in zip(matrix, rhs)]
    if any(len(row) != n + 1 for row in a):
        raise ValueError("matrix must be square and match the right-hand side")
    for col in range(n):
        piv = next((r for r in range(col, n) if _probably_nonzero(a[r][col])), None)
        if piv is None:
            raise SingularSystemError(f"no nonzero pivot in column {col}")
        a[col], a[piv] = a[piv], a[col]
        for r in range(col + 1, n):
            if is_zero(a[r][col]):
                continue
            factor = div(a[r][col], a[col][col])
            a[r] = [expand(sub(x, mul(factor, y))) for x, y in zip(a[r], a[col])]
    x: list[Expr] = [None] * n  # type: ignore[list-item]
    for row in range(n - 1, -1, -1):
        acc = a[row][n]
        for c in range(row + 1, n):
            acc = sub(acc, mul(a[row][c], x[c]))
        x[row] = expand(div(acc, a[row][row]))
    return x
