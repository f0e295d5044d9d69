"""Dense Gaussian elimination for the small N x N taboo systems.

Works on Fraction (exact pivoting: first nonzero pivot) or float (partial
pivoting). One factorization is reused for many right-hand sides.
"""

from __future__ import annotations

from fractions import Fraction

from .errors import SingularMatrixError

FLOAT_SINGULAR_RTOL = 1e-13


class LUFactorization:
    """PA = LU of a square matrix given as a list of rows."""

    def __init__(self, matrix):
        n = len(matrix)
        if any(len(row) != n for row in matrix):
            raise ValueError("matrix must be square")
        self.n = n
        a = [list(row) for row in matrix]
        self.exact = all(isinstance(x, (Fraction, int)) for row in a for x in row)
        scale = max((abs(x) for row in a for x in row), default=0)
        perm = list(range(n))
        for col in range(n):
            if self.exact:
                pivot = next((r for r in range(col, n) if a[r][col] != 0), None)
                if pivot is None:
                    raise SingularMatrixError(f"singular matrix (column {col})")
            else:
                pivot = max(range(col, n), key=lambda r: abs(a[r][col]))
                if abs(a[pivot][col]) <= FLOAT_SINGULAR_RTOL * scale or scale == 0:
                    raise SingularMatrixError(f"numerically singular matrix (column {col})")
            if pivot != col:
                a[col], a[pivot] = a[pivot], a[col]
                perm[col], perm[pivot] = perm[pivot], perm[col]
            piv = a[col][col]
            for r in range(col + 1, n):
                if a[r][col] == 0:
                    continue
                f = a[r][col] / piv
                a[r][col] = f
                for c in range(col + 1, n):
                    a[r][c] -= f * a[col][c]
        self._lu = a
        self._perm = perm

    def solve(self, rhs):
        n = self.n
        if len(rhs) != n:
            raise ValueError("right-hand side has wrong length")
        lu = self._lu
        y = [rhs[p] for p in self._perm]
        for i in range(n):
            acc = y[i]
            for c in range(i):
                acc -= lu[i][c] * y[c]
            y[i] = acc
        x = [None] * n
        for i in reversed(range(n)):
            acc = y[i]
            for c in range(i + 1, n):
                acc -= lu[i][c] * x[c]
            x[i] = acc / lu[i][i]
        return x


def solve(matrix, rhs):
    return LUFactorization(matrix).solve(rhs)
