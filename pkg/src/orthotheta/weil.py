"""Local constants for the theta kernel bookkeeping.

Hilbert symbols over Q_v, the quadratic character of the space, one
dimensional Weil constants at odd finite places (as exact 8th roots of
unity inside Q(i, sqrt 2)), and the level data Gamma_0(2, delta_U) with its
character.  Weil indices at v = 2 and at infinity are never evaluated."""

from __future__ import annotations

from fractions import Fraction
from math import gcd

from .exactnum import ExactScalar, factorize, legendre
from .quadspace import OrthogonalSpace


class WeilError(ValueError):
    pass


def _split_at(a: Fraction, q: int):
    """a = q^e * u with u a q-unit; returns (e, u as Fraction)."""
    e = 0
    num, den = a.numerator, a.denominator
    while num % q == 0:
        num //= q
        e += 1
    while den % q == 0:
        den //= q
        e -= 1
    return e, Fraction(num, den)


def _legendre_frac(u: Fraction, q: int):
    return legendre(u.numerator % q * pow(u.denominator, -1, q) % q, q)


def hilbert_symbol(a, b, v):
    """Hilbert symbol (a, b)_v.  v is 'inf', 2 or an odd prime.

    The place v = 2 is supported only for this elementary symbol (used by
    the reciprocity checks); Weil constants stay away from 2."""
    a, b = Fraction(a), Fraction(b)
    if a == 0 or b == 0:
        raise WeilError("Hilbert symbol needs nonzero entries")
    if v == "inf":
        return -1 if a < 0 and b < 0 else 1
    q = int(v)
    if q == 2:
        al, u = _split_at(a, 2)
        bl, w = _split_at(b, 2)
        uu = (u.numerator * pow(u.denominator, -1, 8)) % 8
        ww = (w.numerator * pow(w.denominator, -1, 8)) % 8
        eps = ((uu - 1) // 2) * ((ww - 1) // 2)
        om_u = (uu * uu - 1) // 8
        om_w = (ww * ww - 1) // 8
        t = eps + al * om_w + bl * om_u
        return -1 if t % 2 else 1
    al, u = _split_at(a, q)
    bl, w = _split_at(b, q)
    s = 1
    if (al * bl) % 2 and q % 4 == 3:
        s = -s
    if bl % 2:
        s *= _legendre_frac(u, q)
    if al % 2:
        s *= _legendre_frac(w, q)
    return s


def chi_U(x, v, space: OrthogonalSpace):
    """Quadratic character of the space at v."""
    x = Fraction(x)
    d = 1
    for dd in space.deltas:
        d *= dd
    n = space.n
    disc = Fraction((-1) ** ((n * (n - 1) // 2) % 2) * d)
    return hilbert_symbol(x, disc, v)


def weil_gamma_scalar(a, q):
    """One-dimensional Weil constant gamma_q(a x^2) at an odd prime q,
    as an exact root of unity in Q(i); normalized so units give 1.

    Pinned by the cocycle gamma(ab) = gamma(a) gamma(b) (a,b)_q, verified
    in the tests rather than transcribed from a table."""
    q = int(q)
    if q == 2:
        raise WeilError("q = 2 Weil constants are out of scope")
    a = Fraction(a)
    e, u = _split_at(a, q)
    sym = _legendre_frac(u, q)
    c = ExactScalar.one() if q % 4 == 1 else ExactScalar.i()
    kappa = legendre(-1, q)
    val = c ** e
    s = 1
    if e % 2:
        s *= sym
    if kappa == -1 and (e * (e - 1) // 2) % 2:
        s = -s
    return val.scale(s)


def weil_gamma(space: OrthogonalSpace, q):
    """gamma(q_v) of the diagonal form at the odd prime q; exactly 1 when
    q does not divide prod(delta)."""
    out = ExactScalar.one()
    for d in space.deltas:
        out = out * weil_gamma_scalar(d, q)
    return out


def gamma_rel(a, q, space: OrthogonalSpace):
    """Relative index gamma(a, q_v) = gamma(a q_v)/gamma(q_v) at odd q."""
    num = ExactScalar.one()
    for d in space.deltas:
        num = num * weil_gamma_scalar(Fraction(a) * d, q)
    return num * weil_gamma(space, q).inv()


def gamma_n(x, space: OrthogonalSpace, places=None):
    """gamma_n(x) over the odd finite support; 1 for n even, the inverse
    product of relative indices for n odd."""
    if space.n % 2 == 0:
        return ExactScalar.one()
    x = Fraction(x)
    if places is None:
        support = set()
        for d in space.deltas:
            support |= set(factorize(d))
        support |= set(factorize(x.numerator)) | set(factorize(x.denominator))
        places = sorted(p for p in support if p != 2)
    out = ExactScalar.one()
    for q in places:
        out = out * gamma_rel(x, q, space).inv()
    return out


def chi_U_circ(x, space: OrthogonalSpace):
    """The level character evaluated on a rational that is a unit at 2 and
    congruent to 1 mod 4 (its domain); exact root of unity."""
    x = Fraction(x)
    if x.numerator % 2 == 0 or x.denominator % 2 == 0:
        raise WeilError("argument must be a 2-adic unit")
    num = (x.numerator * pow(x.denominator, -1, 4)) % 4
    if num != 1:
        raise WeilError("argument must be congruent to 1 mod 4")
    out = gamma_n(x, space)
    support = set(factorize(x.numerator)) | set(factorize(x.denominator))
    for d in space.deltas:
        support |= set(factorize(d))
    sgn = 1
    for q in sorted(p for p in support if p != 2):
        sgn *= chi_U(x, q, space)
    if x < 0:
        sgn *= chi_U(x, "inf", space)
    return out.scale(sgn)


class ThetaLevelData:
    """delta_U = lcm of the diagonal entries, plus the level predicate."""

    def __init__(self, space: OrthogonalSpace):
        self.space = space
        d = 1
        for x in space.deltas:
            d = d * x // gcd(d, x)
        self.delta_U = d

    def in_gamma0(self, g):
        """Membership of an integer 2m x 2m matrix in Gamma_0(2, delta_U)."""
        size = len(g)
        if size % 2:
            return False
        m = size // 2
        for row in g:
            if len(row) != size or any(x != int(x) for x in row):
                return False
        # symplectic: g^T J g = J with J = [[0, 1], [-1, 0]]
        def jmul(v):
            return [v[m:], [-x for x in v[:m]]]
        J = [[0] * size for _ in range(size)]
        for i in range(m):
            J[i][m + i] = 1
            J[m + i][i] = -1
        gt = [[g[r][c] for r in range(size)] for c in range(size)]
        JG = [[sum(J[i][k] * g[k][j] for k in range(size)) for j in range(size)]
              for i in range(size)]
        GJG = [[sum(gt[i][k] * JG[k][j] for k in range(size)) for j in range(size)]
               for i in range(size)]
        if GJG != J:
            return False
        B = [[g[i][m + j] for j in range(m)] for i in range(m)]
        C = [[g[m + i][j] for j in range(m)] for i in range(m)]
        D = [[g[m + i][m + j] for j in range(m)] for i in range(m)]
        if any(x % 2 for row in B for x in row):
            return False
        if any(x % (2 * self.delta_U) for row in C for x in row):
            return False
        detD = _int_det(D)
        return detD % 4 == 1

    def describe(self):
        return {"delta_U": self.delta_U,
                "level": f"Gamma_0(2, {self.delta_U})",
                "character": "gamma_n * chi_U on (1+4 Z_2) x prod Z_q^*"}


def _int_det(M):
    n = len(M)
    A = [[Fraction(x) for x in row] for row in M]
    from .linalg import det
    d = det(A)
    return int(d)
