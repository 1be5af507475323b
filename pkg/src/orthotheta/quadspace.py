"""Quadratic and symplectic space data.

OrthogonalSpace carries the diagonal form Q_U = diag(delta_1..delta_n), the
basis-change matrix into the isotropic-paired basis, and the full integral
automorphism group, computed by exhaustive Gram-preserving column search
(complete for diagonal forms: any automorphism sends the i-th standard
vector to a vector of norm delta_i, and those are finitely enumerable).
"""

from __future__ import annotations

from fractions import Fraction
from math import isqrt

from .exactnum import ExactScalar, is_squarefree
from . import linalg


class QuadspaceError(ValueError):
    pass


def _norm_vectors(deltas, target):
    """All integer v with sum(delta_i v_i^2) == target, lex order."""
    n = len(deltas)
    out = []
    v = [0] * n

    def rec(i, rem):
        if i == n:
            if rem == 0:
                out.append(tuple(v))
            return
        d = deltas[i]
        b = isqrt(rem // d)
        for x in range(-b, b + 1):
            c = d * x * x
            if c <= rem:
                v[i] = x
                rec(i + 1, rem - c)
        v[i] = 0

    if target >= 0:
        rec(0, target)
    return sorted(out)


class OrthogonalSpace:
    """Definite diagonal quadratic space over Z with odd squarefree entries."""

    def __init__(self, n, deltas):
        n = int(n)
        if n < 3:
            raise QuadspaceError("rank must be >= 3")
        deltas = [int(d) for d in deltas]
        if len(deltas) != n:
            raise QuadspaceError("need one delta per coordinate")
        for d in deltas:
            if d <= 0 or d % 2 == 0 or not is_squarefree(d):
                raise QuadspaceError(f"delta {d} must be positive, odd, squarefree")
        self.n = n
        self.deltas = tuple(deltas)
        self.n0 = n // 2
        self.nr = n - 2 * self.n0
        self._T = None
        self._Tinv = None
        self._Tdual = None
        self._Tdualinv = None
        self._aut = None

    # -- exact matrices ------------------------------------------------------

    def gram(self):
        return [[Fraction(self.deltas[i]) if i == j else Fraction(0)
                 for j in range(self.n)] for i in range(self.n)]

    def gram_exact(self):
        z, o = ExactScalar.zero(), ExactScalar.one()
        return [[ExactScalar.rational(self.deltas[i]) if i == j else z
                 for j in range(self.n)] for i in range(self.n)]

    def tmatrix(self, normalize_odd_slot=False):
        """The basis-change matrix: row k gives the standard-basis
        coefficients of the k-th split-basis vector.

        With normalize_odd_slot the last row is E_n / sqrt(delta_n), which
        makes the split Gram antidiag(1,1) (+) (1)."""
        n, n0 = self.n, self.n0
        z = ExactScalar.zero()
        T = [[z for _ in range(n)] for _ in range(n)]
        i = ExactScalar.i()
        for k in range(n0):
            a = ExactScalar.sqrt(2 * self.deltas[2 * k]).inv()
            b = ExactScalar.sqrt(2 * self.deltas[2 * k + 1]).inv()
            T[k][2 * k] = a
            T[k][2 * k + 1] = i * b
            T[n0 + k][2 * k] = a
            T[n0 + k][2 * k + 1] = -(i * b)
        if self.nr:
            if normalize_odd_slot:
                T[n - 1][n - 1] = ExactScalar.sqrt(self.deltas[n - 1]).inv()
            else:
                T[n - 1][n - 1] = ExactScalar.one()
        return T

    def tmatrix_normalized(self):
        if self._T is None:
            self._T = self.tmatrix(normalize_odd_slot=True)
        return self._T

    def tmatrix_normalized_inv(self):
        if self._Tinv is None:
            self._Tinv = linalg.mat_inv(self.tmatrix_normalized())
        return self._Tinv

    def tdual(self):
        """The column map T^{-T}: its columns w = T^{-T} z have split-basis
        Gram equal to z^T Q z, and z -> g z transports to the isometric
        slot action below."""
        if self._Tdual is None:
            self._Tdual = linalg.transpose(self.tmatrix_normalized_inv())
        return self._Tdual

    def tdual_inv(self):
        if self._Tdualinv is None:
            self._Tdualinv = linalg.transpose(self.tmatrix_normalized())
        return self._Tdualinv

    def split_gram(self):
        """Gram of the split basis with the normalized odd slot."""
        n, n0 = self.n, self.n0
        z, o = ExactScalar.zero(), ExactScalar.one()
        B = [[z for _ in range(n)] for _ in range(n)]
        for k in range(n0):
            B[k][n0 + k] = ExactScalar.one()
            B[n0 + k][k] = ExactScalar.one()
        if self.nr:
            B[n - 1][n - 1] = ExactScalar.one()
        return B

    def split_gram_paper(self):
        """Gram of the paper's split basis (plain E_n in the odd slot)."""
        B = self.split_gram()
        if self.nr:
            B[self.n - 1][self.n - 1] = ExactScalar.rational(self.deltas[-1])
        return B

    # -- automorphisms --------------------------------------------------------

    def automorphisms(self):
        """All g in GL_n(Z) with g^T Q g = Q, as tuples of row-tuples."""
        if self._aut is not None:
            return self._aut
        n, deltas = self.n, self.deltas
        cand = {}
        for d in sorted(set(deltas)):
            cand[d] = _norm_vectors(deltas, d)
        cols = []
        out = []

        def ortho(v, w):
            return sum(deltas[i] * v[i] * w[i] for i in range(n)) == 0

        def rec(j):
            if j == n:
                out.append(tuple(zip(*cols)))
                return
            for v in cand[deltas[j]]:
                if all(ortho(v, c) for c in cols):
                    cols.append(v)
                    rec(j + 1)
                    cols.pop()

        rec(0)
        self._aut = out
        return out

    def automorphism_order(self):
        return len(self.automorphisms())

    def act_split(self, g):
        """Slot action T^{-T} g T^T of an isometry g, over ExactScalar.

        This is an exact isometry of the split Gram for every g in O(Q),
        rational or not, and intertwines the column map tdual()."""
        G = [[x if isinstance(x, ExactScalar) else ExactScalar.rational(x)
              for x in row] for row in g]
        return linalg.mat_mul(linalg.mat_mul(self.tdual(), G),
                              self.tdual_inv())


def build_space(n, deltas):
    return OrthogonalSpace(n, deltas)


class SymplecticSpace:
    """Bookkeeping for V = V^+ (+) V^- with <e_i^+, e_j^-> = delta_ij."""

    def __init__(self, m):
        m = int(m)
        if m <= 0:
            raise QuadspaceError("m must be positive")
        self.m = m

    def qv(self):
        m = self.m
        Z = [[Fraction(0)] * (2 * m) for _ in range(2 * m)]
        for i in range(m):
            Z[i][m + i] = Fraction(1)
            Z[m + i][i] = Fraction(-1)
        return Z


class GramTarget:
    """Target Gram matrix, stored as the integral matrix 2S.

    `strict` enforces the half-integral-with-integral-diagonal condition
    (even diagonal of 2S); the expansion sweep also uses odd-diagonal keys,
    which the resolved indexing convention requires."""

    def __init__(self, two_s, strict=False):
        m = len(two_s)
        M = [[int(x) for x in row] for row in two_s]
        for i in range(m):
            for j in range(m):
                if M[i][j] != M[j][i]:
                    raise QuadspaceError("2S must be symmetric")
        self.two_s = tuple(tuple(r) for r in M)
        self.m = m
        if strict and not self.in_sym_circ():
            raise QuadspaceError("S has non-integral diagonal entries")

    def in_sym_circ(self):
        return all(self.two_s[i][i] % 2 == 0 for i in range(self.m))

    def is_positive_semidefinite(self):
        """Exact check via signs of leading principal minors with a rank
        fallback (sufficient for the definite targets used here)."""
        M = [[Fraction(x) for x in row] for row in self.two_s]
        m = self.m
        # exact eigen-free psd test: all principal minors >= 0
        import itertools
        for k in range(1, m + 1):
            for idx in itertools.combinations(range(m), k):
                sub = [[M[a][b] for b in idx] for a in idx]
                if linalg.det(sub) < 0:
                    return False
        return True

    def trace(self):
        return sum(self.two_s[i][i] for i in range(self.m))

    def key(self):
        return self.two_s

    def to_json(self):
        return [[str(Fraction(x, 2)) for x in row] for row in self.two_s]

    def __repr__(self):
        return f"GramTarget(2S={self.two_s})"


def enumerate_gram(space: OrthogonalSpace, target: GramTarget):
    """All integer n x m matrices z with z^T Q_U z == 2S, lex ordered by
    columns.  Column j runs over vectors of norm 2S_jj compatible with the
    prescribed inner products against the previous columns."""
    if not target.is_positive_semidefinite():
        return []
    n, deltas = space.n, space.deltas
    m = target.m
    two_s = target.two_s
    col_cand = {}
    for j in range(m):
        t = two_s[j][j]
        if t not in col_cand:
            col_cand[t] = _norm_vectors(deltas, t)
    out = []
    cols = []

    def ip(v, w):
        return sum(deltas[i] * v[i] * w[i] for i in range(n))

    def rec(j):
        if j == m:
            out.append(tuple(zip(*cols)))
            return
        for v in col_cand[two_s[j][j]]:
            ok = True
            for i, c in enumerate(cols):
                if ip(c, v) != two_s[i][j]:
                    ok = False
                    break
            if ok:
                cols.append(v)
                rec(j + 1)
                cols.pop()

    rec(0)
    return out


def special_z(space: OrthogonalSpace):
    """The distinguished n x 2n0 interleaving matrix: row 2i has a 1 in
    column i, row 2i+1 a 1 in column n0+i (0-based), zero rows below."""
    n, n0 = space.n, space.n0
    Z = [[0] * (2 * n0) for _ in range(n)]
    for i in range(n0):
        Z[2 * i][i] = 1
        Z[2 * i + 1][n0 + i] = 1
    return Z


def special_z_det(space: OrthogonalSpace):
    zp = [row[:] for row in special_z(space)[: 2 * space.n0]]
    M = [[Fraction(x) for x in row] for row in zp]
    return linalg.det(M)


def split_unipotent(space: OrthogonalSpace, i, t):
    """The displayed one-parameter unipotents in the split basis, embedded
    n x n (identity on the odd slot):

    i < n0:  A-block pair  (1_{n0} - t E_{n0,i}) (+) (1_{n0} + t E_{i,n0})
    i == n0: B-block       [[1_{n0}, -t(E_{1,n0} - E_{n0,1})], [0, 1_{n0}]]

    Entries are Fractions; these are exact isometries of the split Gram."""
    n, n0 = space.n, space.n0
    if not (1 <= i <= n0):
        raise QuadspaceError("unipotent index out of range")
    M = [[Fraction(1) if r == c else Fraction(0) for c in range(n)]
         for r in range(n)]
    t = Fraction(t)
    if n0 == 1 and i == 1:
        raise QuadspaceError("rank-one split part has no block unipotents")
    if i < n0:
        M[n0 - 1][i - 1] -= t
        M[n0 + i - 1][2 * n0 - 1] += t
    else:
        M[0][2 * n0 - 1] -= t
        M[n0 - 1][n0] += t
    return M
