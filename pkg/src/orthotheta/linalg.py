"""Exact dense linear algebra helpers.

Generic routines work over any exact field elements supporting +,-,*,/ and
truthiness (Fraction, ExactScalar).  Integer lattice routines (HNF, LLL,
bounded quadratic-form enumeration) use Fractions internally and are all
deterministic.
"""

from __future__ import annotations

from fractions import Fraction
from math import isqrt


def _nz(x):
    if isinstance(x, Fraction) or isinstance(x, int):
        return x != 0
    return bool(x)


def identity(n, one=Fraction(1), zero=None):
    zero = zero if zero is not None else one - one
    return [[one if i == j else zero for j in range(n)] for i in range(n)]


def transpose(A):
    return [list(r) for r in zip(*A)]


def mat_mul(A, B):
    n, k, m = len(A), len(B), len(B[0])
    out = []
    for i in range(n):
        row = []
        Ai = A[i]
        for j in range(m):
            s = None
            for t in range(k):
                if not _nz(Ai[t]) or not _nz(B[t][j]):
                    continue
                term = Ai[t] * B[t][j]
                s = term if s is None else s + term
            if s is None:
                s = Ai[0] * B[0][j]  # a zero of the right type
                s = s - s
            row.append(s)
        out.append(row)
    return out


def mat_vec(A, v):
    return [r[0] for r in mat_mul(A, [[x] for x in v])]


def mat_sub(A, B):
    return [[a - b for a, b in zip(ra, rb)] for ra, rb in zip(A, B)]


def mat_add(A, B):
    return [[a + b for a, b in zip(ra, rb)] for ra, rb in zip(A, B)]


def mat_scale(A, c):
    return [[c * a for a in r] for r in A]


def mat_eq(A, B):
    if len(A) != len(B) or len(A[0]) != len(B[0]):
        return False
    return all(not _nz(a - b) for ra, rb in zip(A, B) for a, b in zip(ra, rb))


def mat_inv(A):
    """Gauss-Jordan inverse over an exact field."""
    n = len(A)
    M = [list(r) for r in A]
    one = None
    for r in M:
        for x in r:
            if _nz(x):
                one = x / x
                break
        if one is not None:
            break
    if one is None:
        raise ZeroDivisionError("zero matrix")
    zero = one - one
    I = [[one if i == j else zero for j in range(n)] for i in range(n)]
    for col in range(n):
        piv = None
        for r in range(col, n):
            if _nz(M[r][col]):
                piv = r
                break
        if piv is None:
            raise ZeroDivisionError("singular matrix")
        M[col], M[piv] = M[piv], M[col]
        I[col], I[piv] = I[piv], I[col]
        inv = one / M[col][col]
        M[col] = [inv * x for x in M[col]]
        I[col] = [inv * x for x in I[col]]
        for r in range(n):
            if r != col and _nz(M[r][col]):
                f = M[r][col]
                M[r] = [a - f * b for a, b in zip(M[r], M[col])]
                I[r] = [a - f * b for a, b in zip(I[r], I[col])]
    return I


def det(A):
    n = len(A)
    M = [list(r) for r in A]
    sign = 1
    out = None
    for col in range(n):
        piv = None
        for r in range(col, n):
            if _nz(M[r][col]):
                piv = r
                break
        if piv is None:
            x = M[0][0]
            return x - x
        if piv != col:
            M[col], M[piv] = M[piv], M[col]
            sign = -sign
        for r in range(col + 1, n):
            if _nz(M[r][col]):
                f = M[r][col] / M[col][col]
                M[r] = [a - f * b for a, b in zip(M[r], M[col])]
    for i in range(n):
        out = M[i][i] if out is None else out * M[i][i]
    if sign < 0:
        out = -out
    return out


def solve(A, b):
    """Solve A x = b (A square invertible)."""
    return mat_vec(mat_inv(A), b)


# ---------------------------------------------------------------------------
# integer lattices


def hnf_columns(M):
    """Column-style Hermite normal form of the lattice spanned by the columns
    of the integer matrix M (n x k, k >= n, full rank assumed).

    Returns an n x n lower-triangular basis matrix with positive diagonal
    whose columns span the same lattice."""
    n = len(M)
    cols = [list(c) for c in zip(*M)]
    basis = []
    row = 0
    work = cols
    for row in range(n):
        # reduce all columns so only pivots remain at this row
        while True:
            nz = [c for c in work if c[row] != 0]
            if len(nz) <= 1:
                break
            nz.sort(key=lambda c: abs(c[row]))
            a = nz[0]
            for c in nz[1:]:
                q = c[row] // a[row]
                for i in range(n):
                    c[i] -= q * a[i]
            work = [c for c in work if any(c)]
        piv = None
        rest = []
        for c in work:
            if c[row] != 0 and piv is None:
                piv = c
            elif c[row] != 0:
                rest.append(c)  # unreachable after reduction
            else:
                rest.append(c)
        if piv is None:
            raise ValueError("lattice matrix not full rank")
        if piv[row] < 0:
            piv = [-x for x in piv]
        basis.append(piv)
        work = rest
    # basis[j] has pivot at row j, zeros above; reduce entries below each
    # pivot against the later columns
    B = basis
    for i in range(n):
        for r in range(i + 1, n):
            q = B[i][r] // B[r][r]
            if q:
                B[i] = [a - q * b for a, b in zip(B[i], B[r])]
    # columns as matrix
    return [[B[j][i] for j in range(n)] for i in range(n)]


def gram_matrix(basis_cols, Q):
    """Gram matrix (Fractions) of column vectors under x^T Q y."""
    k = len(basis_cols[0])
    n = len(basis_cols)
    cols = [list(c) for c in zip(*basis_cols)]
    out = []
    for i in range(k):
        row = []
        for j in range(k):
            s = Fraction(0)
            for a in range(n):
                for b in range(n):
                    if Q[a][b]:
                        s += Fraction(cols[i][a]) * Q[a][b] * cols[j][b]
            row.append(s)
        out.append(row)
    return out


def lll_reduce(cols, Q, delta=Fraction(3, 4)):
    """Exact LLL on the lattice with basis the columns of `cols` (rational
    entries) under the positive-definite form Q.  Returns new columns."""
    n = len(cols)
    k = len(cols[0])
    B = [list(c) for c in zip(*cols)]  # list of k basis vectors

    def ip(u, v):
        s = Fraction(0)
        for a in range(n):
            if u[a]:
                for b in range(n):
                    if Q[a][b] and v[b]:
                        s += Fraction(u[a]) * Q[a][b] * v[b]
        return s

    def gso():
        mu = [[Fraction(0)] * k for _ in range(k)]
        Bstar_norm = [Fraction(0)] * k
        Bs = [None] * k
        for i in range(k):
            Bs[i] = [Fraction(x) for x in B[i]]
            for j in range(i):
                if Bstar_norm[j] == 0:
                    continue
                mu[i][j] = ip(B[i], Bs[j]) / Bstar_norm[j]
                Bs[i] = [a - mu[i][j] * b for a, b in zip(Bs[i],Bs[j])]
            Bstar_norm[i] = ip(Bs[i], Bs[i])
        return mu, Bstar_norm

    mu, Bn = gso()
    i = 1
    while i < k:
        for j in range(i - 1, -1, -1):
            if abs(mu[i][j]) > Fraction(1, 2):
                q = round(mu[i][j])
                B[i] = [a - q * b for a, b in zip(B[i], B[j])]
                mu, Bn = gso()
        if Bn[i] >= (delta - mu[i][i - 1] ** 2) * Bn[i - 1]:
            i += 1
        else:
            B[i], B[i - 1] = B[i - 1], B[i]
            mu, Bn = gso()
            i = max(i - 1, 1)
    return [[B[j][a] for j in range(k)] for a in range(n)]


def enumerate_by_norm(cols, Q, target):
    """All integer-combination vectors v of the given column basis with
    v^T Q v == target (target a Fraction/int).  Deterministic order.

    Uses exact rational Cholesky bounds on the basis Gram matrix."""
    k = len(cols[0])
    G = gram_matrix(cols, Q)
    target = Fraction(target)
    if target < 0:
        return []
    # LDL^T decomposition
    D = [Fraction(0)] * k
    L = [[Fraction(0)] * k for _ in range(k)]
    for i in range(k):
        L[i][i] = Fraction(1)
        for j in range(i):
            s = G[i][j] - sum(L[i][t] * L[j][t] * D[t] for t in range(j))
            L[i][j] = s / D[j] if D[j] else Fraction(0)
        D[i] = G[i][i] - sum(L[i][t] ** 2 * D[t] for t in range(i))
        if D[i] <= 0:
            raise ValueError("form not positive definite on basis")
    sols = []
    x = [0] * k

    def rec(idx, rem, shift):
        # rem = remaining norm budget, shift[t] = sum_{j>idx} L[j][t]*x[j]
        if idx < 0:
            if rem == 0:
                sols.append(list(x))
            return
        # x[idx] contributes D[idx]*(x[idx] + shift[idx])^2
        c = shift[idx]
        bound = rem / D[idx]
        # integer x with (x + c)^2 <= bound
        lo = _ceil_frac(-c - _sqrt_frac_upper(bound))
        hi = _floor_frac(-c + _sqrt_frac_upper(bound))
        for xv in range(lo, hi + 1):
            val = D[idx] * (Fraction(xv) + c) ** 2
            if val > rem:
                continue
            x[idx] = xv
            new_shift = [shift[t] + xv * L[idx][t] for t in range(idx)] + shift[idx:]
            rec(idx - 1, rem - val, new_shift)
        x[idx] = 0

    rec(k - 1, target, [Fraction(0)] * k)
    out = []
    n = len(cols)
    for xs in sorted(sols):
        v = [sum(cols[a][j] * xs[j] for j in range(k)) for a in range(n)]
        out.append(v)
    return out


def _sqrt_frac_upper(q):
    """A rational upper bound for sqrt(q), q >= 0, tight to 1/2."""
    if q <= 0:
        return Fraction(0)
    num, den = q.numerator, q.denominator
    r = Fraction(isqrt(num * den) + 1, den)
    return r


def _floor_frac(q):
    return q.numerator // q.denominator


def _ceil_frac(q):
    return -((-q.numerator) // q.denominator)
