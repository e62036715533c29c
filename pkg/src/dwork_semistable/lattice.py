"""Exact integer and rational linear algebra on small lattices.

Everything here works on plain Python ``int`` / ``Fraction`` lists so that
results are exact regardless of size.  Matrices are lists of rows.
"""

from __future__ import annotations

from fractions import Fraction
from math import gcd
from typing import Iterable, Sequence

IntMatrix = list[list[int]]


def vec_gcd(v: Iterable[int]) -> int:
    g = 0
    for x in v:
        g = gcd(g, int(x))
    return g


def primitive(v: Sequence[int]) -> tuple[int, ...]:
    """Divide an integer vector by the gcd of its entries."""
    g = vec_gcd(v)
    if g == 0:
        raise ValueError("zero vector has no primitive representative")
    return tuple(int(x) // g for x in v)


def lcm(a: int, b: int) -> int:
    return abs(a * b) // gcd(a, b) if a and b else 0


def common_denominator(values: Iterable[Fraction]) -> int:
    d = 1
    for x in values:
        d = lcm(d, Fraction(x).denominator)
    return d


def identity(n: int) -> IntMatrix:
    return [[int(r == c) for c in range(n)] for r in range(n)]


def transpose(A: Sequence[Sequence]) -> list[list]:
    return [list(col) for col in zip(*A)]


def matmul(A: Sequence[Sequence], B: Sequence[Sequence]) -> list[list]:
    Bt = transpose(B)
    return [[sum(a * b for a, b in zip(row, col)) for col in Bt] for row in A]


def dot(u: Sequence, v: Sequence):
    return sum(a * b for a, b in zip(u, v))


def column_echelon(A: Sequence[Sequence[int]]) -> tuple[IntMatrix, IntMatrix, int]:
    """Integer column reduction ``H = A U`` with ``U`` unimodular.

    Rows are processed top to bottom; within a row the smallest nonzero
    entry (lowest column index on ties) becomes the pivot.  The pivot order
    is fixed, so the output is deterministic.

    Returns
    -------
    H, U, rank
        ``H`` has its first ``rank`` columns in lower echelon form with
        positive pivots and its remaining columns zero.  The trailing
        ``n - rank`` columns of ``U`` are a basis of the integer kernel.
    """
    H = [[int(x) for x in row] for row in A]
    n = len(H[0]) if H else 0
    U = identity(n)

    def swap(c1: int, c2: int) -> None:
        for M in (H, U):
            for row in M:
                row[c1], row[c2] = row[c2], row[c1]

    def axpy(dst: int, src: int, q: int) -> None:
        # column dst -= q * column src
        for M in (H, U):
            for row in M:
                row[dst] -= q * row[src]

    col = 0
    for r in range(len(H)):
        if col >= n:
            break
        row = H[r]
        while True:
            nz = [c for c in range(col, n) if row[c] != 0]
            if not nz:
                break
            p = min(nz, key=lambda c: (abs(row[c]), c))
            if p != col:
                swap(p, col)
            done = True
            for c in range(col + 1, n):
                if row[c]:
                    axpy(c, col, row[c] // row[col])
                    if row[c]:
                        done = False
            if done:
                break
        if row[col] != 0:
            if row[col] < 0:
                for M in (H, U):
                    for rr in M:
                        rr[col] = -rr[col]
            col += 1
    return H, U, col


def integer_kernel(A: Sequence[Sequence[int]], n: int | None = None) -> IntMatrix:
    """Basis (as rows) of ``{x in Z^n : A x = 0}``."""
    if not A:
        return identity(n or 0)
    _, U, rank = column_echelon(A)
    ncols = len(U)
    return [[U[r][c] for r in range(ncols)] for c in range(rank, ncols)]


def saturation_basis(vectors: Sequence[Sequence[int]]) -> IntMatrix:
    """Basis (as rows) of ``span_R(vectors) ∩ Z^n``."""
    n = len(vectors[0])
    ann = integer_kernel(vectors, n)
    if not ann:
        return identity(n)
    return integer_kernel(ann, n)


def lattice_index(vectors: Sequence[Sequence[int]]) -> int:
    """Index of the lattice spanned by ``vectors`` inside its saturation.

    This is the gcd of the maximal minors, read off the pivots of the
    column echelon form.  The vectors must be linearly independent.
    """
    H, _, rank = column_echelon(vectors)
    if rank != len(vectors):
        raise ValueError("vectors are linearly dependent")
    out = 1
    # pivot of the j-th pivot column sits on the first row where it appears
    r = 0
    for c in range(rank):
        while H[r][c] == 0:
            r += 1
        out *= H[r][c]
        r += 1
    return abs(out)


def complete_to_basis(vectors: Sequence[Sequence[int]]) -> IntMatrix:
    """Extend ``vectors`` to a basis of ``Z^n`` (rows of a unimodular matrix).

    Raises ``ValueError`` when the vectors are not part of any basis, i.e.
    when they are dependent or span a non-saturated sublattice.
    """
    k = len(vectors)
    n = len(vectors[0])
    H, U, rank = column_echelon(vectors)
    if rank != k:
        raise ValueError("vectors are linearly dependent")
    if lattice_index(vectors) != 1:
        raise ValueError("vectors span a non-saturated sublattice")
    # A U = [H_k | 0] with H_k lower triangular, unit diagonal up to sign
    # after the saturation check; so A = [H_k | 0] U^{-1} and the last n-k
    # rows of U^{-1} complete the rows of A.
    Uinv = integer_inverse(U)
    out = [list(map(int, v)) for v in vectors]
    out.extend(Uinv[r] for r in range(k, n))
    assert abs(determinant(out)) == 1
    return out


def integer_inverse(U: Sequence[Sequence[int]]) -> IntMatrix:
    inv = rational_inverse(U)
    out = []
    for row in inv:
        if any(x.denominator != 1 for x in row):
            raise ValueError("matrix is not unimodular")
        out.append([int(x) for x in row])
    return out


def unimodular_with_last_row(c: Sequence[int]) -> IntMatrix:
    """Unimodular ``A`` whose last row is the primitive vector ``c``.

    Equivalent to finding a basis ``g_1..g_m`` with ``<c, g_j> = 0`` for
    ``j < m`` and ``<c, g_m> = 1`` (the columns of ``A^{-1}``).
    """
    c = [int(x) for x in c]
    if vec_gcd(c) != 1:
        raise ValueError("vector is not primitive")
    rows = complete_to_basis([c])
    return rows[1:] + rows[:1]


# --- rational linear algebra -------------------------------------------------


def _fractions(A: Sequence[Sequence]) -> list[list[Fraction]]:
    return [[Fraction(x) for x in row] for row in A]


def rref(A: Sequence[Sequence]) -> tuple[list[list[Fraction]], list[int]]:
    M = _fractions(A)
    rows = len(M)
    cols = len(M[0]) if M else 0
    pivots: list[int] = []
    r = 0
    for c in range(cols):
        p = next((i for i in range(r, rows) if M[i][c] != 0), None)
        if p is None:
            continue
        M[r], M[p] = M[p], M[r]
        inv = 1 / M[r][c]
        M[r] = [x * inv for x in M[r]]
        for i in range(rows):
            if i != r and M[i][c] != 0:
                f = M[i][c]
                M[i] = [a - f * b for a, b in zip(M[i], M[r])]
        pivots.append(c)
        r += 1
        if r == rows:
            break
    return M, pivots


def rank(A: Sequence[Sequence]) -> int:
    if not A:
        return 0
    return len(rref(A)[1])


def nullspace(A: Sequence[Sequence]) -> list[list[Fraction]]:
    """Rational basis of ``{x : A x = 0}``."""
    cols = len(A[0])
    M, pivots = rref(A)
    free = [c for c in range(cols) if c not in pivots]
    basis = []
    for f in free:
        v = [Fraction(0)] * cols
        v[f] = Fraction(1)
        for r, p in enumerate(pivots):
            v[p] = -M[r][f]
        basis.append(v)
    return basis


def determinant(A: Sequence[Sequence]) -> Fraction:
    M = _fractions(A)
    n = len(M)
    det = Fraction(1)
    for c in range(n):
        p = next((i for i in range(c, n) if M[i][c] != 0), None)
        if p is None:
            return Fraction(0)
        if p != c:
            M[c], M[p] = M[p], M[c]
            det = -det
        det *= M[c][c]
        for i in range(c + 1, n):
            if M[i][c]:
                f = M[i][c] / M[c][c]
                M[i] = [a - f * b for a, b in zip(M[i], M[c])]
    return det


def rational_inverse(A: Sequence[Sequence]) -> list[list[Fraction]]:
    n = len(A)
    aug = [list(row) + [int(r == c) for c in range(n)] for r, row in enumerate(A)]
    M, pivots = rref(aug)
    if pivots[:n] != list(range(n)):
        raise ValueError("singular matrix")
    return [row[n:] for row in M]


def solve(A: Sequence[Sequence], b: Sequence) -> list[Fraction] | None:
    """A solution of ``A x = b`` or ``None``; unique when ``A`` has full column rank."""
    cols = len(A[0])
    aug = [list(row) + [b_i] for row, b_i in zip(A, b)]
    M, pivots = rref(aug)
    if cols in pivots:
        return None
    x = [Fraction(0)] * cols
    for r, p in enumerate(pivots):
        x[p] = M[r][cols]
    return x


def int_det(A: Sequence[Sequence[int]]) -> int:
    """Exact determinant of a square integer matrix (fraction-free Bareiss)."""
    M = [[int(x) for x in row] for row in A]
    n = len(M)
    if n == 0:
        return 1
    sign, prev = 1, 1
    for c in range(n - 1):
        if M[c][c] == 0:
            p = next((r for r in range(c + 1, n) if M[r][c] != 0), None)
            if p is None:
                return 0
            M[c], M[p] = M[p], M[c]
            sign = -sign
        for r in range(c + 1, n):
            for j in range(c + 1, n):
                M[r][j] = (M[r][j] * M[c][c] - M[r][c] * M[c][j]) // prev
        prev = M[c][c]
    return sign * M[n - 1][n - 1]


def adjugate(A: Sequence[Sequence[int]]) -> tuple[IntMatrix, int]:
    """``(adj(A), det(A))`` with ``adj(A) A = det(A) I``; ``A`` must be invertible."""
    d = int_det(A)
    inv = rational_inverse(A)
    return [[int(x * d) for x in row] for row in inv], d


def hermite_rows(A: Sequence[Sequence[int]]) -> tuple[IntMatrix, IntMatrix]:
    """Reduced row Hermite form ``H = U A`` of a square nonsingular integer matrix.

    ``H`` is upper triangular with positive diagonal and entries above each
    pivot reduced into ``[0, pivot)``, hence unique for the orbit of ``A``
    under left multiplication by ``GL_n(Z)``.
    """
    Hc, V, r = column_echelon(transpose(A))
    n = len(A)
    if r != n:
        raise ValueError("matrix is singular")
    H = transpose(Hc)
    U = transpose(V)
    for c in range(n):
        piv = H[c][c]
        for r2 in range(c):
            q = H[r2][c] // piv
            if q:
                H[r2] = [a - q * b for a, b in zip(H[r2], H[c])]
                U[r2] = [a - q * b for a, b in zip(U[r2], U[c])]
    return H, U
