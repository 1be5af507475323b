"""Exact arithmetic in multiquadratic-cyclotomic extensions of Q(i).

Scalars live in Q(i, sqrt(d1), ..., sqrt(ds))(zeta_N) with all radicands
positive squarefree integers and N odd, coprime to every radicand.  Under
that coprimality constraint the monomial representation below is a field
(no hidden relations between radicals and roots of unity), so equality is
decidable by comparing canonical coefficient dictionaries.

A PadicReductionContext embeds this field into an unramified extension of
Z_p at exact, arbitrary precision; that gives p-adic valuations and
reduction into F_{p^f}.
"""

from __future__ import annotations

from fractions import Fraction
from math import gcd, prod


class ExactnumError(ValueError):
    pass


class PrecisionExhausted(ExactnumError):
    pass


class ContextMismatch(ExactnumError):
    pass


# ---------------------------------------------------------------------------
# small integer helpers


def factorize(n):
    """Prime factorization of n >= 1 as a dict prime -> exponent."""
    n = abs(int(n))
    out = {}
    d = 2
    while d * d <= n:
        while n % d == 0:
            out[d] = out.get(d, 0) + 1
            n //= d
        d += 1 if d == 2 else 2
    if n > 1:
        out[n] = out.get(n, 0) + 1
    return out


def is_squarefree(n):
    return all(e == 1 for e in factorize(n).values())


def euler_phi(n):
    return prod((p - 1) * p ** (e - 1) for p, e in factorize(n).items())


def multiplicative_order(a, n):
    if gcd(a, n) != 1:
        raise ExactnumError(f"{a} not a unit mod {n}")
    k, x = 1, a % n
    while x != 1:
        x = (x * a) % n
        k += 1
    return k


def legendre(a, p):
    """Legendre symbol (a|p) for odd prime p."""
    a %= p
    if a == 0:
        return 0
    t = pow(a, (p - 1) // 2, p)
    return 1 if t == 1 else -1


def valp_int(n, p):
    if n == 0:
        raise ExactnumError("valuation of 0")
    v = 0
    while n % p == 0:
        n //= p
        v += 1
    return v


def valp_fraction(q: Fraction, p):
    return valp_int(q.numerator, p) - valp_int(q.denominator, p)


# ---------------------------------------------------------------------------
# cyclotomic reduction tables


def cyclotomic_polynomial(n):
    """Coefficient list (ascending) of Phi_n over Z."""
    # divide x^n - 1 by prod of Phi_d, d | n, d < n
    poly = [-1] + [0] * (n - 1) + [1]
    for d in range(1, n):
        if n % d == 0:
            phi_d = cyclotomic_polynomial(d) if d > 1 else [-1, 1]
            poly = _polydiv_exact(poly, phi_d)
    return poly


def _polydiv_exact(num, den):
    num = list(num)
    dd = len(den) - 1
    out = [0] * (len(num) - dd)
    for i in range(len(num) - 1, dd - 1, -1):
        c = num[i]
        if c == 0:
            continue
        assert c % den[dd] == 0
        q = c // den[dd]
        out[i - dd] = q
        for j, dc in enumerate(den):
            num[i - dd + j] -= q * dc
    assert all(c == 0 for c in num)
    return out


_CYCLO_CACHE = {}


def _cyclo_table(n):
    """For level n: (phi(n), list red[k] = coeffs of x^k mod Phi_n, k < 2*phi(n))."""
    if n in _CYCLO_CACHE:
        return _CYCLO_CACHE[n]
    ph = euler_phi(n)
    phi_poly = cyclotomic_polynomial(n)
    red = []
    for k in range(2 * ph):
        if k < ph:
            row = {k: 1}
        else:
            # x^k = x * x^(k-1) then reduce the top term via Phi_n
            prev = red[k - 1]
            row = {}
            for j, c in prev.items():
                row[j + 1] = row.get(j + 1, 0) + c
            top = row.pop(ph, 0)
            if top:
                for j in range(ph):
                    c = -phi_poly[j] * top
                    if c:
                        row[j] = row.get(j, 0) + c
            row = {j: c for j, c in row.items() if c}
        red.append(row)
    _CYCLO_CACHE[n] = (ph, red)
    return _CYCLO_CACHE[n]


# ---------------------------------------------------------------------------
# the scalar field


def _merge_rad(r1, r2):
    """sqrt(r1)*sqrt(r2) = g * sqrt(r1*r2/g^2), g = gcd."""
    g = gcd(r1, r2)
    return g, (r1 // g) * (r2 // g)


class ExactScalar:
    """Element of Q(i, sqrt(d)...)(zeta_N), canonical sparse form.

    terms maps (ipow, rad, zpow) -> Fraction with ipow in {0,1}, rad a
    positive squarefree integer (1 means no radical) and zpow reduced into
    [0, phi(level)).
    """

    __slots__ = ("terms", "level")

    def __init__(self, terms=None, level=1):
        self.terms = terms or {}
        self.level = level

    # -- constructors ------------------------------------------------------

    @staticmethod
    def rational(q):
        q = Fraction(q)
        return ExactScalar({(0, 1, 0): q} if q else {}, 1)

    @staticmethod
    def sqrt(d):
        """sqrt of a nonzero squarefree integer; sqrt(-m) = i*sqrt(m)."""
        d = int(d)
        if d == 0 or not is_squarefree(d):
            raise ExactnumError(f"radicand {d} not squarefree nonzero")
        if d > 0:
            return ExactScalar({(0, d, 0): Fraction(1)}, 1)
        return ExactScalar({(1, -d, 0): Fraction(1)}, 1)

    @staticmethod
    def i():
        return ExactScalar({(1, 1, 0): Fraction(1)}, 1)

    @staticmethod
    def zeta(n, j=1):
        n = int(n)
        if n <= 0:
            raise ExactnumError("cyclotomic level must be positive")
        if n == 1:
            return ExactScalar.one()
        if n % 2 == 0:
            raise ExactnumError("even cyclotomic levels unsupported; "
                                "use i and sqrt(2) for 4th/8th roots")
        ph, red = _cyclo_table(n)
        j = j % n
        row = red[j] if j < 2 * ph else _zpow_row(j, red, ph)
        terms = {(0, 1, jj): Fraction(c) for jj, c in row.items() if c}
        return ExactScalar(terms, n)

    @staticmethod
    def one():
        return ExactScalar({(0, 1, 0): Fraction(1)}, 1)

    @staticmethod
    def zero():
        return ExactScalar({}, 1)

    # -- canonical form ----------------------------------------------------

    def _check_level(self, n):
        if n == 1:
            return
        if n % 2 == 0:
            raise ExactnumError("even cyclotomic level")
        for key in self.terms:
            r = key[1]
            if r > 1 and gcd(r, n) != 1:
                raise ExactnumError(
                    f"radicand {r} entangled with cyclotomic level {n}")

    def _lift_level(self, n):
        """Re-express at cyclotomic level n (self.level | n)."""
        if n == self.level:
            return self
        if n % self.level:
            raise ExactnumError("level lift must be a multiple")
        self._check_level(n)
        scale = n // self.level
        ph, red = _cyclo_table(n)
        out = {}
        for (ip, r, z), c in self.terms.items():
            zz = (z * scale) % n
            row = red[zz] if zz < 2 * ph else _zpow_row(zz, red, ph)
            for jj, m in row.items():
                key = (ip, r, jj)
                v = out.get(key, Fraction(0)) + c * m
                if v:
                    out[key] = v
                elif key in out:
                    del out[key]
        return ExactScalar(out, n)

    @staticmethod
    def _common(a, b):
        if a.level == b.level:
            return a, b, a.level
        lv = a.level * b.level // gcd(a.level, b.level)
        return a._lift_level(lv), b._lift_level(lv), lv

    # -- ring operations ---------------------------------------------------

    def __add__(self, other):
        other = _coerce(other)
        a, b, lv = ExactScalar._common(self, other)
        out = dict(a.terms)
        for k, c in b.terms.items():
            v = out.get(k, Fraction(0)) + c
            if v:
                out[k] = v
            elif k in out:
                del out[k]
        return ExactScalar(out, lv)

    __radd__ = __add__

    def __neg__(self):
        return ExactScalar({k: -c for k, c in self.terms.items()}, self.level)

    def __sub__(self, other):
        return self + (-_coerce(other))

    def __rsub__(self, other):
        return _coerce(other) + (-self)

    def __mul__(self, other):
        other = _coerce(other)
        a, b, lv = ExactScalar._common(self, other)
        ph, red = _cyclo_table(lv) if lv > 1 else (1, [{0: 1}])
        out = {}
        for (i1, r1, z1), c1 in a.terms.items():
            for (i2, r2, z2), c2 in b.terms.items():
                c = c1 * c2
                ip = i1 + i2
                if ip >= 2:
                    ip -= 2
                    c = -c
                g, r = _merge_rad(r1, r2)
                c *= g
                zrow = red[z1 + z2] if lv > 1 else {0: 1}
                for jj, m in zrow.items():
                    key = (ip, r, jj)
                    v = out.get(key, Fraction(0)) + c * m
                    if v:
                        out[key] = v
                    elif key in out:
                        del out[key]
        return ExactScalar(out, lv)

    __rmul__ = __mul__

    def __pow__(self, n):
        n = int(n)
        if n < 0:
            return self.inv() ** (-n)
        out = ExactScalar.one()
        base = self
        while n:
            if n & 1:
                out = out * base
            base = base * base
            n >>= 1
        return out

    def __truediv__(self, other):
        return self * _coerce(other).inv()

    def __rtruediv__(self, other):
        return _coerce(other) * self.inv()

    def __eq__(self, other):
        try:
            other = _coerce(other)
        except Exception:
            return NotImplemented
        return (self - other).is_zero()

    def __hash__(self):
        if self.is_rational():
            return hash(self.as_fraction())
        a = self if self.level == 1 else self
        return hash(frozenset(a.terms.items()))

    def __bool__(self):
        return not self.is_zero()

    def is_zero(self):
        return not self.terms

    def is_rational(self):
        return all(k == (0, 1, 0) for k in self.terms)

    def as_fraction(self):
        if not self.is_rational():
            raise ExactnumError(f"not rational: {self}")
        return self.terms.get((0, 1, 0), Fraction(0))

    # -- Galois machinery and inversion -------------------------------------

    def _radical_primes(self):
        out = set()
        for (ip, r, _z) in self.terms:
            out |= set(factorize(r)) if r > 1 else set()
        return out

    def _has_i(self):
        return any(ip == 1 for (ip, _r, _z) in self.terms)

    def conj_radical(self, p):
        """Flip the sign of sqrt(p) (p a prime radicand) or of i (p == -1)."""
        out = {}
        for (ip, r, z), c in self.terms.items():
            s = 1
            if p == -1:
                if ip:
                    s = -1
            elif r % p == 0:
                s = -1
            out[(ip, r, z)] = s * c
        return ExactScalar({k: c for k, c in out.items() if c}, self.level)

    def conj_zeta(self, a):
        """Galois map zeta_N -> zeta_N^a, a coprime to level."""
        if self.level == 1:
            return self
        n = self.level
        ph, red = _cyclo_table(n)
        out = {}
        for (ip, r, z), c in self.terms.items():
            zz = (z * a) % n
            row = red[zz] if zz < 2 * ph else _zpow_row(zz, red, ph)
            for jj, m in row.items():
                key = (ip, r, jj)
                v = out.get(key, Fraction(0)) + c * m
                if v:
                    out[key] = v
                elif key in out:
                    del out[key]
        return ExactScalar(out, n)

    def complex_conjugate(self):
        out = self.conj_radical(-1)
        if self.level > 1:
            out = out.conj_zeta(self.level - 1)
        return out

    def inv(self):
        if self.is_zero():
            raise ZeroDivisionError("inverse of zero ExactScalar")
        # stage 1: clear radicals and i by multiplying all nontrivial
        # radical-flip conjugates
        gens = sorted(self._radical_primes())
        if self._has_i():
            gens.append(-1)
        num = ExactScalar.one()
        nrm = self
        for g in gens:
            cg = nrm.conj_radical(g)
            num = num * cg
            nrm = nrm * cg
        # nrm now has no radicals (is in Q(zeta_level))
        if any(k[0] or k[1] != 1 for k in nrm.terms):
            raise ExactnumError("radical norm failed to rationalize")
        # stage 2: cyclotomic norm
        if nrm.level > 1:
            n = nrm.level
            for a in range(2, n):
                if gcd(a, n) == 1:
                    ca = nrm.conj_zeta(a)
                    num = num * ca
            full = nrm
            for a in range(2, n):
                if gcd(a, n) == 1:
                    full = full * nrm.conj_zeta(a)
            nrm = full
        q = nrm.as_fraction()
        if q == 0:
            raise ZeroDivisionError("norm vanished; representation degenerate")
        return num * ExactScalar.rational(Fraction(1, 1) / q)

    # -- misc ----------------------------------------------------------------

    def scale(self, q):
        q = Fraction(q)
        if not q:
            return ExactScalar.zero()
        return ExactScalar({k: c * q for k, c in self.terms.items()}, self.level)

    def radicands(self):
        return sorted({r for (_i, r, _z) in self.terms if r > 1})

    def __repr__(self):
        if self.is_zero():
            return "0"
        bits = []
        for (ip, r, z), c in sorted(self.terms.items()):
            s = str(c)
            if ip:
                s += "*i"
            if r > 1:
                s += f"*sqrt({r})"
            if z:
                s += f"*z{self.level}^{z}"
        # keep repr short but exact
            bits.append(s)
        return " + ".join(bits)

    def to_json(self):
        return {
            "cyclo_level": self.level,
            "terms": [
                {"ipow": ip, "rad": r, "zeta_pow": z,
                 "num": str(c.numerator), "den": str(c.denominator)}
                for (ip, r, z), c in sorted(self.terms.items())
            ],
        }

    @staticmethod
    def from_json(obj):
        terms = {}
        for t in obj["terms"]:
            terms[(t["ipow"], t["rad"], t["zeta_pow"])] = Fraction(
                int(t["num"]), int(t["den"]))
        return ExactScalar(terms, obj["cyclo_level"])


def _zpow_row(z, red, ph):
    # generic fold for exponents beyond the table (rare)
    row = {0: 1}
    one_step = red[1]
    for _ in range(z):
        row = _zmul_rows(row, one_step, red, ph)
    return row


def _zmul_rows(r1, r2, red, ph):
    out = {}
    for a, ca in r1.items():
        for b, cb in r2.items():
            for j, m in red[a + b].items():
                out[j] = out.get(j, 0) + ca * cb * m
    return {j: c for j, c in out.items() if c}


def _coerce(x):
    if isinstance(x, ExactScalar):
        return x
    if isinstance(x, (int, Fraction)):
        return ExactScalar.rational(x)
    raise TypeError(f"cannot coerce {type(x)} to ExactScalar")


def scalar_arith(a, b, op):
    """Spec-level dispatcher: one of add, mul, neg, inv."""
    a = _coerce(a)
    if op == "neg":
        return -a
    if op == "inv":
        return a.inv()
    b = _coerce(b)
    if op == "add":
        return a + b
    if op == "mul":
        return a * b
    raise ExactnumError(f"unknown op {op}")


# ---------------------------------------------------------------------------
# finite fields F_{p^f} as a two-step tower


class FiniteField:
    """F_p[y]/(g0) [x]/(h): base degree d0 in {1, 2}, extension by a factor
    of a cyclotomic polynomial.  Elements are tuples of tuples of ints."""

    def __init__(self, p, d0=1, u=None, hpoly=None, zeta_order=1):
        self.p = p
        self.d0 = d0
        self.u = u  # base: y^2 = u when d0 == 2
        # ext: low coefficients of the monic minimal polynomial (length e)
        self.h = hpoly
        self.e = len(hpoly) if hpoly else 1
        self.f = d0 * self.e
        self.zeta_order = zeta_order

    # base field elements: tuple of d0 ints mod p
    def bzero(self):
        return (0,) * self.d0

    def bone(self):
        return (1,) + (0,) * (self.d0 - 1)

    def bfrom_int(self, n):
        return (n % self.p,) + (0,) * (self.d0 - 1)

    def badd(self, a, b):
        return tuple((x + y) % self.p for x, y in zip(a, b))

    def bneg(self, a):
        return tuple((-x) % self.p for x in a)

    def bmul(self, a, b):
        p = self.p
        if self.d0 == 1:
            return ((a[0] * b[0]) % p,)
        c0 = (a[0] * b[0] + a[1] * b[1] * self.u) % p
        c1 = (a[0] * b[1] + a[1] * b[0]) % p
        return (c0, c1)

    def binv(self, a):
        p = self.p
        if self.d0 == 1:
            return (pow(a[0], -1, p),)
        n = (a[0] * a[0] - a[1] * a[1] * self.u) % p
        ni = pow(n, -1, p)
        return ((a[0] * ni) % p, (-a[1] * ni) % p)

    def bpow(self, a, n):
        out = self.bone()
        base = a
        n = int(n)
        if n < 0:
            base = self.binv(a)
            n = -n
        while n:
            if n & 1:
                out = self.bmul(out, base)
            base = self.bmul(base, base)
            n >>= 1
        return out

    # full field elements: tuple of e base elements
    def zero(self):
        return (self.bzero(),) * self.e

    def one(self):
        return (self.bone(),) + (self.bzero(),) * (self.e - 1)

    def from_base(self, b):
        return (b,) + (self.bzero(),) * (self.e - 1)

    def from_int(self, n):
        return self.from_base(self.bfrom_int(n))

    def add(self, a, b):
        return tuple(self.badd(x, y) for x, y in zip(a, b))

    def neg(self, a):
        return tuple(self.bneg(x) for x in a)

    def sub(self, a, b):
        return self.add(a, self.neg(b))

    def mul(self, a, b):
        e = self.e
        if e == 1:
            return (self.bmul(a[0], b[0]),)
        raw = [self.bzero()] * (2 * e - 1)
        for i, x in enumerate(a):
            if x == self.bzero():
                continue
            for j, y in enumerate(b):
                if y == self.bzero():
                    continue
                raw[i + j] = self.badd(raw[i + j], self.bmul(x, y))
        # reduce by monic h
        for k in range(2 * e - 2, e - 1, -1):
            c = raw[k]
            if c == self.bzero():
                continue
            raw[k] = self.bzero()
            for j in range(e):
                t = self.bmul(c, self.h[j])
                raw[k - e + j] = self.badd(raw[k - e + j], self.bneg(t))
        return tuple(raw[:e])

    def pow(self, a, n):
        n = int(n)
        out = self.one()
        base = a
        if n < 0:
            base = self.inv(a)
            n = -n
        while n:
            if n & 1:
                out = self.mul(out, base)
            base = self.mul(base, base)
            n >>= 1
        return out

    def inv(self, a):
        if a == self.zero():
            raise ZeroDivisionError("inverse of 0 in finite field")
        # a^(q^e - 2) with q = p^d0
        q = self.p ** self.d0
        return self.pow(a, q ** self.e - 2)

    def is_zero(self, a):
        return all(x == self.bzero() for x in a)

    def zeta(self):
        """The distinguished root of unity (the class of x) when e > 1."""
        if self.e == 1:
            raise ExactnumError("no cyclotomic generator in base-only field")
        return (self.bzero(), self.bone()) + (self.bzero(),) * (self.e - 2)

    def coords(self, a):
        """Flat list of ints (length f) for reporting."""
        out = []
        for b in a:
            out.extend(b)
        return out


def _tonelli_shanks_base(field, a):
    """Square root of base element a in F_{p^{d0}} (a assumed a square)."""
    q = field.p ** field.d0
    if a == field.bzero():
        return field.bzero()
    # write q - 1 = 2^s * t
    t, s = q - 1, 0
    while t % 2 == 0:
        t //= 2
        s += 1
    # find a non-residue deterministically
    z = None
    k = 2
    while z is None:
        cand = field.bfrom_int(k) if k < field.p else None
        if cand is None:
            # search elements y + c
            c = k - field.p
            cand = (c % field.p, 1) if field.d0 == 2 else None
            if cand is None:
                raise ExactnumError("no nonresidue found")
        if field.bpow(cand, (q - 1) // 2) != field.bone():
            z = cand
        k += 1
    m = s
    c = field.bpow(z, t)
    r = field.bpow(a, (t + 1) // 2)
    tt = field.bpow(a, t)
    while tt != field.bone():
        # find least i with tt^(2^i) = 1
        i, tmp = 0, tt
        while tmp != field.bone():
            tmp = field.bmul(tmp, tmp)
            i += 1
        b = c
        for _ in range(m - i - 1):
            b = field.bmul(b, b)
        m = i
        c = field.bmul(b, b)
        tt = field.bmul(tt, c)
        r = field.bmul(r, b)
    return r


# ---------------------------------------------------------------------------
# Witt-style exact p-adic arithmetic: Z[y]/(y^2-u)[x]/(H
#   (x)) mod p^k, coefficients as plain ints


class _WittRing:
    """Unramified Z_p-algebra truncated mod p^k, mirroring a FiniteField."""

    def __init__(self, field: FiniteField, k):
        self.F = field
        self.k = k
        self.pk = field.p ** k
        # lift h coefficients naively (ints in [0, p))
        self.h = [tuple(int(c) for c in b) for b in field.h] if field.e > 1 else None

    def from_int(self, n):
        b = (n % self.pk,) + (0,) * (self.F.d0 - 1)
        return (b,) + ((0,) * self.F.d0,) * (self.F.e - 1)

    def badd(self, a, b):
        return tuple((x + y) % self.pk for x, y in zip(a, b))

    def bneg(self, a):
        return tuple((-x) % self.pk for x in a)

    def bmul(self, a, b):
        if self.F.d0 == 1:
            return ((a[0] * b[0]) % self.pk,)
        u = self.F.u
        return ((a[0] * b[0] + a[1] * b[1] * u) % self.pk,
                (a[0] * b[1] + a[1] * b[0]) % self.pk)

    def add(self, a, b):
        return tuple(self.badd(x, y) for x, y in zip(a, b))

    def neg(self, a):
        return tuple(self.bneg(x) for x in a)

    def mul(self, a, b):
        e = self.F.e
        z = (0,) * self.F.d0
        if e == 1:
            return (self.bmul(a[0], b[0]),)
        raw = [z] * (2 * e - 1)
        for i, x in enumerate(a):
            if x == z:
                continue
            for j, y in enumerate(b):
                if y == z:
                    continue
                raw[i + j] = self.badd(raw[i + j], self.bmul(x, y))
        for kk in range(2 * e - 2, e - 1, -1):
            c = raw[kk]
            if c == z:
                continue
            raw[kk] = z
            for j in range(e):
                t = self.bmul(c, self.h[j])
                raw[kk - e + j] = self.badd(raw[kk - e + j], self.bneg(t))
        return tuple(raw[:e])

    def pow(self, a, n):
        out = self.from_int(1)
        base = a
        while n:
            if n & 1:
                out = self.mul(out, base)
            base = self.mul(base, base)
            n >>= 1
        return out

    def scalar(self, a, n):
        n %= self.pk
        return tuple(tuple((x * n) % self.pk for x in b) for b in a)

    def valuation(self, a):
        """min p-adic valuation over coordinates; None if a == 0 mod p^k."""
        v = None
        for b in a:
            for x in b:
                if x % self.pk:
                    w = valp_int(x, self.F.p)
                    v = w if v is None else min(v, w)
        return v

    def unit_inverse(self, a):
        """Inverse of a unit via Newton iteration from the residue field."""
        F = self.F
        res = tuple(tuple(x % F.p for x in b) for b in a)
        x0 = F.inv(res)
        x = tuple(tuple(int(c) for c in b) for b in x0)
        two = self.from_int(2)
        prec = 1
        while prec < self.k:
            # x <- x * (2 - a x)
            t = self.sub(two, self.mul(a, x))
            x = self.mul(x, t)
            prec *= 2
        return x

    def sub(self, a, b):
        return self.add(a, self.neg(b))


# ---------------------------------------------------------------------------
# the reduction context


class PadicReductionContext:
    """Embedding of the scalar field into an unramified extension of Z_p.

    The context fixes a square-root image for each radicand and a primitive
    root-of-unity image for the cyclotomic level; those choices pin the
    restriction of the abstract embedding iota_p actually used.
    """

    PREC_CAP = 2 ** 14

    def __init__(self, p, radicands=(), zeta_level=1, prec=32):
        p = int(p)
        if p == 2 or not _is_prime(p):
            raise ExactnumError("p must be an odd prime")
        self.p = p
        self.zeta_level = int(zeta_level)
        self.prec = int(prec)
        rads = set()
        for r in radicands:
            r = int(r)
            if r == -1:
                rads.add(-1)
                continue
            if r <= 0 or not is_squarefree(r):
                raise ExactnumError(f"bad radicand {r}")
            for q in factorize(r):
                rads.add(q)
        self.radicands = frozenset(rads)
        for r in self.radicands:
            if r > 0 and p % r == 0 or (r > 0 and r % p == 0):
                raise ExactnumError(f"p={p} divides radicand {r}")
        if self.zeta_level > 1 and self.zeta_level % p == 0:
            raise ExactnumError("p divides the cyclotomic level")

        # residue degree bookkeeping
        d0 = 1
        need_i = -1 in self.radicands
        if need_i and legendre(-1, p) == -1:
            d0 = 2
        for r in self.radicands:
            if r > 0 and legendre(r, p) == -1:
                d0 = 2
        self.d0 = d0
        q = p ** d0
        if self.zeta_level > 1:
            self.e = multiplicative_order(q % self.zeta_level, self.zeta_level)
        else:
            self.e = 1
        self.fdeg = d0 * self.e

        self.field = _build_field(p, d0, self.zeta_level, self.e)
        self._witt_cache = {}
        self._res_images = self._residue_images()
        self._witt_images_cache = {}

    # -- residue-field images ------------------------------------------------

    def _residue_images(self):
        F = self.field
        p = self.p
        img = {}
        if -1 in self.radicands:
            if legendre(-1, p) == 1:
                r = _tonelli_shanks_base(F, F.bfrom_int(-1))
            else:
                r = _sqrt_in_quadratic(F, -1)
            img[-1] = F.from_base(r)
        for rad in sorted(self.radicands):
            if rad == -1:
                continue
            if legendre(rad, p) == 1:
                r = _tonelli_shanks_base(F, F.bfrom_int(rad))
            else:
                r = _sqrt_in_quadratic(F, rad)
            img[rad] = F.from_base(r)
        if self.zeta_level > 1:
            if F.e > 1:
                img["zeta"] = F.zeta()
            else:
                img["zeta"] = F.from_base(F._base_zeta)
        return img

    def witt(self, k):
        if k not in self._witt_cache:
            self._witt_cache[k] = _WittRing(self.field, k)
        return self._witt_cache[k]

    def _witt_images(self, k):
        """Hensel-lift all residue images to precision p^k."""
        if k in self._witt_images_cache:
            return self._witt_images_cache[k]
        W = self.witt(k)
        out = {}
        for rad, res in self._res_images.items():
            if rad == "zeta":
                continue
            target = W.from_int(rad if rad != -1 else -1)
            x = tuple(tuple(int(c) for c in b) for b in res)
            prec = 1
            while prec < k:
                # x <- x - (x^2 - rad) / (2x)
                num = W.sub(W.mul(x, x), target)
                den = W.scalar(x, 2)
                x = W.sub(x, W.mul(num, W.unit_inverse(den)))
                prec *= 2
            out[rad] = x
        if self.zeta_level > 1:
            n = self.zeta_level
            x = tuple(tuple(int(c) for c in b) for b in self._res_images["zeta"])
            one = W.from_int(1)
            prec = 1
            while prec < k:
                # Newton for x^n - 1
                num = W.sub(W.pow(x, n), one)
                den = W.scalar(W.pow(x, n - 1), n)
                x = W.sub(x, W.mul(num, W.unit_inverse(den)))
                prec *= 2
            out["zeta"] = x
        self._witt_images_cache[k] = out
        return out

    # -- public API -----------------------------------------------------------

    def _check_scalar(self, a: ExactScalar):
        for r in a.radicands():
            for q in factorize(r):
                if q not in self.radicands:
                    raise ContextMismatch(f"radicand prime {q} missing from context")
        if a._has_i() and -1 not in self.radicands:
            raise ContextMismatch("context lacks an image for sqrt(-1)")
        if a.level > 1:
            if self.zeta_level % a.level:
                raise ContextMismatch(
                    f"cyclotomic level {a.level} not within context level "
                    f"{self.zeta_level}")

    def _embed(self, a: ExactScalar, k):
        """Return (v0, element in Witt ring at precision k) with a = p^v0 * elt,
        up to p^k; elt need not be a unit."""
        self._check_scalar(a)
        if a.level > 1 and self.zeta_level % a.level == 0 and a.level != self.zeta_level:
            a = a._lift_level(self.zeta_level)
        W = self.witt(k)
        img = self._witt_images(k)
        p = self.p
        v0 = None
        parts = []
        for (ip, r, z), c in a.terms.items():
            vc = valp_fraction(c, p)
            v0 = vc if v0 is None else min(v0, vc)
        for (ip, r, z), c in a.terms.items():
            vc = valp_fraction(c, p)
            num = c.numerator
            den = c.denominator
            vn = valp_int(num, p)
            vd = valp_int(den, p)
            num //= p ** vn
            den //= p ** vd
            unit = (num * pow(den, -1, W.pk)) % W.pk
            x = W.from_int(unit)
            if ip:
                x = W.mul(x, img[-1])
            if r > 1:
                for q, _e in factorize(r).items():
                    x = W.mul(x, img[q])
            if z:
                x = W.mul(x, W.pow(img["zeta"], z))
            x = W.scalar(x, p ** (vc - v0))
            parts.append(x)
        total = W.from_int(0)
        for x in parts:
            total = W.add(total, x)
        return v0, total

    def padic_valuation(self, a: ExactScalar):
        """p-adic valuation of a (an integer under the context invariants)."""
        a = _coerce(a)
        if a.is_zero():
            raise ExactnumError("valuation of zero")
        k = self.prec
        while True:
            v0, x = self._embed(a, k)
            W = self.witt(k)
            v = W.valuation(x)
            if v is not None and v < k - 1:
                return v0 + v
            if k >= self.PREC_CAP:
                raise PrecisionExhausted(
                    f"element vanishes mod p^{k}; raise precision cap")
            k = min(k * 2, self.PREC_CAP)

    def reduce_mod_P(self, a: ExactScalar):
        """Image in F_{p^fdeg}; requires valuation >= 0."""
        a = _coerce(a)
        if a.is_zero():
            return self.field.zero()
        v = self.padic_valuation(a)
        if v < 0:
            raise ExactnumError(f"negative valuation {v}: not p-integral")
        v0, x = self._embed(a, self.prec)
        return self._reduce_shift(x, v0)

    def _reduce_shift(self, x, v0):
        # value = p^{v0} * x ; reduce mod p taking the shift into account
        p = self.p
        if v0 > 0:
            return self.field.zero()
        if v0 < 0:
            # divide x by p^{-v0} exactly (valuation guarantees divisibility)
            d = p ** (-v0)
            x = tuple(tuple(c // d for c in b) for b in x)
        return tuple(tuple(c % p for c in b) for b in x)

    def describe(self):
        out = {
            "p": self.p,
            "fdeg": self.fdeg,
            "zeta_level": self.zeta_level,
            "precision": self.prec,
            "roots": {},
        }
        for rad, res in sorted(self._res_images.items(), key=str):
            out["roots"][str(rad)] = self.field.coords(res) if rad != "zeta" \
                else self.field.coords(res)
        return out


def _is_prime(n):
    if n < 2:
        return False
    return factorize(n) == {n: 1}


def _sqrt_in_quadratic(field: FiniteField, a):
    """Square root of the rational nonresidue a inside the base F_{p^2}."""
    if field.d0 != 2:
        raise ExactnumError("base field too small for this square root")
    p = field.p
    u = field.u
    # a = u * (a/u), a/u is a residue mod p; sqrt(a) = sqrt(a/u) * y
    t = (a * pow(u, -1, p)) % p
    assert legendre(t, p) == 1
    s = _tonelli_shanks_mod_p(t, p)
    return (0, s % p)


def _tonelli_shanks_mod_p(a, p):
    a %= p
    if a == 0:
        return 0
    assert legendre(a, p) == 1
    if p % 4 == 3:
        return pow(a, (p + 1) // 4, p)
    t, s = p - 1, 0
    while t % 2 == 0:
        t //= 2
        s += 1
    z = 2
    while legendre(z, p) != -1:
        z += 1
    m, c, r, tt = s, pow(z, t, p), pow(a, (t + 1) // 2, p), pow(a, t, p)
    while tt != 1:
        i, tmp = 0, tt
        while tmp != 1:
            tmp = (tmp * tmp) % p
            i += 1
        b = pow(c, 1 << (m - i - 1), p)
        m, c = i, (b * b) % p
        tt, r = (tt * c) % p, (r * b) % p
    return r


def _build_field(p, d0, zeta_level, e):
    """Construct F_{p^{d0*e}} with a distinguished zeta of order zeta_level."""
    u = None
    if d0 == 2:
        u = 2
        while legendre(u, p) != -1:
            u += 1
    base = FiniteField(p, d0, u)
    if zeta_level == 1 or e == 1:
        fld = FiniteField(p, d0, u, None, zeta_level)
        if zeta_level > 1:
            # zeta sits in the base field itself: find a base element of
            # exact order zeta_level and expose it through from_base
            q = p ** d0
            assert (q - 1) % zeta_level == 0
            g = _base_generator(base, q)
            z = base.bpow(g, (q - 1) // zeta_level)
            fld._base_zeta = z
        return fld
    # need a degree-e extension: take the minimal polynomial of an
    # element of order zeta_level in F_{q^e}
    q = p ** d0
    big = _ext_field_random(base, e)
    w = _ext_generator(big, q ** e, zeta_level)
    # minimal polynomial over F_q: prod (x - w^{q^i})
    conjs = []
    x = w
    for _ in range(e):
        conjs.append(x)
        x = big.pow(x, q)
    # poly with coefficients in the big field; they must lie in the base
    coeffs = [big.one()]
    for c in conjs:
        new = [big.zero()] * (len(coeffs) + 1)
        for i, a in enumerate(coeffs):
            new[i + 1] = big.add(new[i + 1], a)
            new[i] = big.sub(new[i], big.mul(a, c))
        coeffs = new
    h = []
    for a in coeffs[:-1]:
        # constant coefficient of a in the big ext must be the only one
        assert all(b == base.bzero() for b in a[1:]), "minimal poly not rational"
        h.append(a[0])
    fld = FiniteField(p, d0, u, h, zeta_level)
    return fld


def _base_generator(base: FiniteField, q):
    for k in range(2, 200):
        cand = base.bfrom_int(k) if k < base.p or base.d0 == 1 else (
            (k - base.p) % base.p, 1)
        if cand == base.bzero():
            continue
        if _is_generator(base, cand, q):
            return cand
    raise ExactnumError("no base generator found")


def _is_generator(base, g, q):
    n = q - 1
    for pr in factorize(n):
        if base.bpow(g, n // pr) == base.bone():
            return False
    return True


def _ext_field_random(base: FiniteField, e):
    """F_{q^e} as base[t]/(g), deterministic search for irreducible g."""
    p, d0, u = base.p, base.d0, base.u
    q = p ** d0
    # iterate candidate monic polynomials g = t^e + sum c_i t^i with small c
    import itertools
    for tail in itertools.product(range(min(q, 50)), repeat=min(e, 3)):
        coeffs = [base.bzero()] * e
        coeffs[0] = _int_to_base(base, tail[0])
        if e > 1 and len(tail) > 1:
            coeffs[1] = _int_to_base(base, tail[1])
        if e > 2 and len(tail) > 2:
            coeffs[2] = _int_to_base(base, tail[2])
        cand = FiniteField(p, d0, u, coeffs, 1)
        if _is_irreducible(cand, q, e):
            return cand
    raise ExactnumError("no irreducible polynomial found")


def _int_to_base(base, n):
    if base.d0 == 1:
        return (n % base.p,)
    return (n % base.p, (n // base.p) % base.p)


def _is_irreducible(fld: FiniteField, q, e):
    """Rabin test: t^(q^e) == t and gcd(t^(q^(e/l)) - t, g) == 1 for l | e."""
    if e == 1:
        return True
    t = (fld.bzero(), fld.bone()) + (fld.bzero(),) * (e - 2)
    gpoly = list(fld.h) + [fld.bone()]  # monic coefficient list of g
    for l in factorize(e):
        y = t
        for _ in range(e // l):
            y = fld.pow(y, q)
        diff = list(fld.sub(y, t))
        if _poly_gcd_degree(fld, diff, gpoly) != 0:
            return False
    y = t
    for _ in range(e):
        y = fld.pow(y, q)
    return y == t


def _poly_gcd_degree(base: FiniteField, A, B):
    """Degree of gcd of coefficient lists A, B over the base field."""
    def deg(P):
        d = len(P) - 1
        while d >= 0 and P[d] == base.bzero():
            d -= 1
        return d

    A, B = list(A), list(B)
    while deg(B) >= 0:
        da, db = deg(A), deg(B)
        if da < db:
            A, B = B, A
            continue
        f = base.bmul(A[da], base.binv(B[db]))
        for j in range(db + 1):
            A[da - db + j] = base.badd(A[da - db + j],
                                       base.bneg(base.bmul(f, B[j])))
        A, B = B, A[:deg(A) + 1] if deg(A) >= 0 else []
    return max(deg(A), 0)


def _ext_generator(big: FiniteField, order, zeta_level):
    """Element of exact multiplicative order zeta_level in big."""
    n = order - 1
    assert n % zeta_level == 0
    k = 0
    while True:
        k += 1
        cand = _pseudo_element(big, k)
        if big.is_zero(cand):
            continue
        z = big.pow(cand, n // zeta_level)
        if big.is_zero(big.sub(z, big.one())):
            continue
        good = True
        for pr in factorize(zeta_level):
            if big.is_zero(big.sub(big.pow(z, zeta_level // pr), big.one())):
                good = False
                break
        if good:
            return z


def _pseudo_element(big: FiniteField, k):
    """Deterministic scan of field elements."""
    e = big.e
    coords = []
    kk = k
    for _ in range(e):
        coords.append(_int_to_base(big, kk % (big.p + 3) + 1))
        kk //= (big.p + 3)
    return tuple(coords)
