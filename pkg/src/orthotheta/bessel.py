"""Torus structures at the auxiliary prime, character groups, unipotent
shifts, toric sums, strong-approximation factorization, and the Bessel
period routes.

Everything adelic is reduced to exact data: coset representatives of the
torus quotient are carried by their unit coordinates modulo l-powers,
shifted unipotents are exact matrices over the multiquadratic field that
are l-adically integral through the chosen square roots, and evaluation of
the input form at an adelic point goes through a deterministic
rationalization: a Hermite-normal-form model of the shifted lattice at l,
followed by an exact isometry completion (class number one makes this
total).  Bessel periods are computed both as toric sums and as
character-weighted sums of Fourier coefficients at twisted Gram targets;
their ratio is a single measured instance constant.
"""

from __future__ import annotations

import itertools
from fractions import Fraction

from .exactnum import (ExactScalar, PadicReductionContext, legendre,
                       factorize, multiplicative_order, ExactnumError)
from . import linalg
from .quadspace import (OrthogonalSpace, GramTarget, split_unipotent,
                        special_z)
from .reps import (TensorVector, group_act, pair_U, pair_V,
                   v_tau_dual_vector, AlgebraicModularForm)
from .theta import HarmonicKernel, fourier_coefficient_adelic
from .clifford import CliffordAlgebra, e_pm, spin_norm_and_s


class BesselError(ValueError):
    pass


# ---------------------------------------------------------------------------
# the auxiliary prime


class AuxPrimeData:
    """The auxiliary split prime l with its square-root choices.

    Validation covers the source's three bullets; the squareness of 2 is
    recorded as a flag only, since after reparametrizing the unipotent
    families no computed quantity needs sqrt(2) at l."""

    def __init__(self, space: OrthogonalSpace, ell, p, prec=64,
                 class_number_one_torus=True):
        ell = int(ell)
        self.space = space
        self.ell = ell
        self.p = int(p)
        diags = []
        prod = 1
        for d in space.deltas:
            prod *= d
        if ell == 2 or not _is_prime(ell):
            diags.append("l must be an odd prime")
        if ell != 2 and (2 * self.p * prod) % ell == 0:
            diags.append(f"l={ell} divides 2 p prod(delta)")
        if self.p != 0 and (ell - 1) % self.p == 0:
            diags.append(f"p={self.p} divides #F_l^* = {ell - 1}")
        self.sqrt2_flag = (legendre(2, ell) == 1) if ell > 2 else False
        rads = {-1}
        for q in factorize(prod):
            rads.add(q)
        for r in sorted(rads):
            if ell > 2 and legendre(r, ell) != 1:
                diags.append(f"{r} is not a square mod l={ell}")
        if diags:
            raise BesselError("; ".join(diags))
        self.class_number_one_torus = bool(class_number_one_torus)
        # context giving exact l-adic images of every scalar we meet; the
        # matrices at l never involve sqrt(2) after the reparametrization,
        # so the residue degree is 1
        self.ctx = PadicReductionContext(ell, radicands=sorted(rads),
                                         prec=prec)
        if self.ctx.fdeg != 1:
            raise BesselError("internal: residue degree should be 1")

    # -- exact l-adic plumbing -------------------------------------------------

    def int_image(self, x: ExactScalar, k):
        """Integer representative mod l^k of an l-integral scalar."""
        if x.is_zero():
            return 0
        v0, w = self.ctx._embed(x, max(k, 2))
        val = w[0][0] * self.ell ** v0 if v0 >= 0 else None
        if val is None:
            if w[0][0] % self.ell ** (-v0):
                raise BesselError("scalar not l-integral")
            val = w[0][0] // self.ell ** (-v0)
        return val % self.ell ** k

    def valuation(self, x: ExactScalar):
        return self.ctx.padic_valuation(x)

    def matrix_images(self, M, k):
        return [[self.int_image(x, k) for x in row] for row in M]

    def describe(self):
        return {"ell": self.ell, "sqrt2_square_at_ell": self.sqrt2_flag,
                "roots": self.ctx.describe()["roots"]}


def _is_prime(n):
    return n >= 2 and factorize(n) == {n: 1}


# ---------------------------------------------------------------------------
# unipotent shifts


class UnipotentShift:
    """The shifted unipotent product and its building blocks at l."""

    def __init__(self, space: OrthogonalSpace, aux: AuxPrimeData, rbar):
        self.space = space
        self.aux = aux
        self.rbar = tuple(int(r) for r in rbar)
        n0 = space.n0
        if len(self.rbar) != n0 or any(r < 1 for r in self.rbar):
            raise BesselError("conductor exponents must be positive, one "
                              "per torus coordinate")
        self._odd_gen = None
        if n0 == 1:
            if space.n % 2 == 0:
                raise BesselError("rank-one split part requires odd rank")
            self._odd_gen = _odd_unipotent_builder(space)
        self.sigma = self.matrix(tuple(Fraction(-1, aux.ell ** r)
                                       for r in self.rbar))

    def matrix(self, params):
        """H-matrix (standard basis, ExactScalar) of prod u_i(c_i)."""
        space = self.space
        n0 = space.n0
        if n0 == 1:
            return self._odd_gen(params[0])
        out = None
        for i, c in enumerate(params, start=1):
            S = [[ExactScalar.rational(x) for x in row]
                 for row in split_unipotent(space, i, Fraction(c))]
            M = linalg.mat_mul(linalg.mat_mul(space.tdual_inv(), S),
                               space.tdual())
            out = M if out is None else linalg.mat_mul(out, M)
        return out

    def split_block(self, params):
        """The 2n0 x 2n0 standard-basis block (n0 >= 2 only)."""
        M = self.matrix(params)
        m = 2 * self.space.n0
        return [row[:m] for row in M[:m]]


def _odd_unipotent_builder(space: OrthogonalSpace):
    """One-parameter unipotent for n0 = 1 from the odd spin generator
    1 + t e^+_{1,2,n}; rational parameter, entries in Q(i, sqrt(deltas))."""
    alg = CliffordAlgebra(space.deltas)
    n = space.n
    basegen = e_pm(alg, 0, 1, n - 1, +1)

    def build(t):
        t = Fraction(t)
        g = alg.scalar(1) + basegen.scale(t)
        ginv = alg.scalar(1) - basegen.scale(t)
        _gi, M = spin_norm_and_s(g, space, ginv)
        return M

    return build


def build_unipotents(space, aux, rbar):
    return UnipotentShift(space, aux, rbar)


def torus_element(space: OrthogonalSpace, j, m):
    """Exact torus matrix of the j-th rotation pair with slot eigenvalue m
    (a nonzero rational unit lift); entries in Q(i, sqrt deltas)."""
    n, n0 = space.n, space.n0
    m = Fraction(m)
    z, o = ExactScalar.zero(), ExactScalar.one()
    D = [[o if a == b else z for b in range(n)] for a in range(n)]
    D[j - 1][j - 1] = ExactScalar.rational(m)
    D[n0 + j - 1][n0 + j - 1] = ExactScalar.rational(Fraction(1, 1) / m)
    return linalg.mat_mul(linalg.mat_mul(space.tdual_inv(), D), space.tdual())


def torus_conjugation_check(space, aux, shift: UnipotentShift, mu_tuple):
    """Exact check that sigma^{-1} t sigma is integral at l for the torus
    element with the given slot eigenvalue lifts."""
    t = None
    for j, m in enumerate(mu_tuple, start=1):
        tj = torus_element(space, j, m)
        t = tj if t is None else linalg.mat_mul(t, tj)
    sig = shift.sigma
    sig_inv = shift.matrix(tuple(Fraction(1, shift.aux.ell ** r)
                                 for r in shift.rbar))
    y = linalg.mat_mul(linalg.mat_mul(sig_inv, t), sig)
    try:
        for row in y:
            for x in row:
                if x and aux_val(shift.aux, x) < 0:
                    return False
    except ExactnumError:
        return False
    return True


def aux_val(aux: AuxPrimeData, x: ExactScalar):
    return aux.valuation(x)


# ---------------------------------------------------------------------------
# characters


def dlog_one_units(m, ell, r):
    """Discrete log of m in (1+l Z_l)/(1+l^r Z_l) base (1+l), via the
    truncated l-adic logarithm."""
    m = int(m) % ell ** r
    if m % ell == 0 or (m - 1) % ell:
        raise BesselError(f"{m} is not a principal unit mod {ell}^{r}")
    if r == 1:
        return 0
    modulus = ell ** (r + 2)

    def log1p(x):  # x divisible by l
        total, term, k = 0, 1, 0
        # sum (-1)^{k+1} x^k / k with enough terms mod l^{r+2}
        xk = 1
        for k in range(1, 3 * r + 6):
            xk = (xk * x) % (modulus * ell ** 3)
            vk = 0
            kk = k
            while kk % ell == 0:
                kk //= ell
                vk += 1
            inv = pow(kk, -1, modulus)
            t = xk // ell ** vk if vk else xk
            t = (t * inv) % modulus
            if k % 2 == 0:
                t = -t
            total = (total + t) % modulus
        return total

    la = log1p(m - 1)
    lb = log1p(ell)
    # both are divisible by l exactly once (for b), a at least once
    va = _valint(la, ell)
    vb = _valint(lb, ell)
    if va < vb:
        raise BesselError("dlog: argument not in the cyclic group")
    a = (la // ell ** vb) % ell ** (r - 1)
    b = (lb // ell ** vb) % ell ** (r - 1)
    return (a * pow(b, -1, ell ** (r - 1))) % ell ** (r - 1)


def _valint(x, ell):
    if x % ell ** 20 == 0:
        return 20
    v = 0
    while x % ell == 0:
        x //= ell
        v += 1
    return v


class TorusCharacter:
    """Product of coordinate characters of conductor l^{r_i}, given by
    exponents alpha_i against the fixed primitive characters psi_{i, r_i}
    (value zeta^{dlog} on the principal-unit coordinate)."""

    def __init__(self, aux: AuxPrimeData, rbar, alphas):
        self.aux = aux
        self.rbar = tuple(int(r) for r in rbar)
        self.alphas = tuple(int(a) for a in alphas)
        if len(self.alphas) != len(self.rbar):
            raise BesselError("one exponent per coordinate")
        self.orders = tuple(aux.ell ** (r - 1) for r in self.rbar)

    def is_primitive(self):
        ell = self.aux.ell
        return all(r == 1 or a % ell for r, a in zip(self.rbar, self.alphas))

    def dlogs(self, mu_tuple):
        return tuple(dlog_one_units(m, self.aux.ell, r)
                     for m, r in zip(mu_tuple, self.rbar))

    def zeta_exponents(self, mu_tuple):
        """Per-coordinate exponents of zeta_{l^{r_i - 1}}."""
        out = []
        for a, d, o in zip(self.alphas, self.dlogs(mu_tuple), self.orders):
            out.append((a * d) % o if o > 1 else 0)
        return tuple(out)

    def value_exact(self, mu_tuple):
        val = ExactScalar.one()
        for e, o in zip(self.zeta_exponents(mu_tuple), self.orders):
            if o > 1:
                val = val * ExactScalar.zeta(o, e)
        return val

    def value_ff(self, mu_tuple, pctx):
        """Value in F_{p^f} through the fixed root of unity of the context."""
        F = pctx.field
        out = F.one()
        N = pctx.zeta_level
        zeta = pctx._res_images.get("zeta")
        if zeta is None:
            raise BesselError("context lacks a root of unity")
        for e, o in zip(self.zeta_exponents(mu_tuple), self.orders):
            if o == 1:
                continue
            if N % o:
                raise BesselError("context root order incompatible")
            out = F.mul(out, F.pow(zeta, (N // o) * e))
        return out


def enumerate_characters(aux, rbar, which="primitive", rprime=None,
                         alpha_prime=None):
    """Primitive tuples, or the cone alpha' + l^{r'} over each coordinate."""
    ell = aux.ell
    rbar = tuple(int(r) for r in rbar)
    if which == "primitive":
        ranges = []
        for r in rbar:
            o = ell ** (r - 1)
            if o == 1:
                ranges.append([0])
            else:
                ranges.append([a for a in range(o) if a % ell])
        return [TorusCharacter(aux, rbar, al)
                for al in itertools.product(*ranges)]
    if which == "cone":
        if rprime is None or alpha_prime is None:
            raise BesselError("cone mode needs rprime and alpha_prime")
        rprime = tuple(int(x) for x in rprime)
        for rp, r in zip(rprime, rbar):
            if not (0 < 2 * rp < r):
                raise BesselError("cone mode requires 0 < 2 r' < r")
        ranges = []
        for ap, rp, r in zip(alpha_prime, rprime, rbar):
            base = int(ap) % ell ** r
            step = ell ** rp
            ranges.append([(base + step * k) % ell ** r
                           for k in range(ell ** (r - rp))])
        return [TorusCharacter(aux, rbar, al)
                for al in itertools.product(*ranges)]
    raise BesselError(f"unknown mode {which}")


# ---------------------------------------------------------------------------
# rationalization (the Hermite-style normal form at l)


class Rationalizer:
    """gamma in O(Q)(Z[1/l]) with gamma^{-1} x integral at l, for x an
    exact matrix of an l-adic isometry.  Deterministic; verified exactly."""

    def __init__(self, space: OrthogonalSpace, aux: AuxPrimeData):
        self.space = space
        self.aux = aux
        self.Q = space.gram()
        self._cache = {}

    def __call__(self, x, denom_bound=None):
        key = tuple(tuple(hashable_scalar(e) for e in row) for row in x)
        if key in self._cache:
            return self._cache[key]
        gamma = self._rationalize(x, denom_bound)
        self._cache[key] = gamma
        return gamma

    def _rationalize(self, x, denom_bound):
        space, aux = self.space, self.aux
        n = space.n
        ell = aux.ell
        xinv = linalg.mat_inv(x)
        R = 0
        for M in (x, xinv):
            for row in M:
                for e in row:
                    if e:
                        R = max(R, -aux.valuation(e))
        if denom_bound is not None:
            R = max(R, denom_bound)
        K = 2 * R + 2
        while True:
            scaled = [[_scale_entry(e, ell ** R) for e in row] for row in x]
            A = aux.matrix_images(scaled, K)
            aug = [row[:] + [ell ** K if i == j else 0 for j in range(n)]
                   for i, row in enumerate(A)]
            H = linalg.hnf_columns(aug)
            red = linalg.lll_reduce(H, self.Q)
            gamma = self._complete_isometry(red, R)
            if gamma is None:
                K += 2
                if K > 8 * R + 40:
                    raise BesselError("rationalization failed to stabilize")
                continue
            # exact verification
            q = self.Q
            gt_q_g = linalg.mat_mul(linalg.mat_mul(linalg.transpose(gamma),
                                                   q), gamma)
            if not all(gt_q_g[i][j] == q[i][j] for i in range(n)
                       for j in range(n)):
                K += 2
                continue
            gexact = [[ExactScalar.rational(v) for v in row] for row in gamma]
            y = linalg.mat_mul(linalg.mat_inv(gexact),
                               [[e if isinstance(e, ExactScalar)
                                 else ExactScalar.rational(e) for e in row]
                                for row in x])
            yinv = linalg.mat_inv(y)
            ok = True
            for M2 in (y, yinv):
                for row in M2:
                    for e in row:
                        if e and aux.valuation(e) < 0:
                            ok = False
            if ok:
                return gamma
            K += 2
            if K > 8 * R + 40:
                raise BesselError("rationalization failed verification")

    def _complete_isometry(self, latt_cols, R):
        """Columns v_i of the lattice with <v_i, v_j>_Q = l^{2R} Q_{ij},
        scaled back by l^{-R}; None if not found (precision too low)."""
        space, aux = self.space, self.aux
        n = space.n
        ell = aux.ell
        Q = self.Q
        target_scale = Fraction(ell) ** (2 * R)
        chosen = []

        def ip(u, v):
            return sum(Q[a][a] * u[a] * v[a] for a in range(n))

        def rec(j):
            if j == n:
                return True
            want = target_scale * space.deltas[j]
            for v in linalg.enumerate_by_norm(latt_cols, Q, want):
                if all(ip(v, w) == 0 for w in chosen):
                    chosen.append(v)
                    if rec(j + 1):
                        return True
                    chosen.pop()
            return False

        if not rec(0):
            return None
        return [[Fraction(chosen[j][i], ell ** R) for j in range(n)]
                for i in range(n)]


def hashable_scalar(e):
    if isinstance(e, ExactScalar):
        return (e.level, tuple(sorted(e.terms.items())))
    return Fraction(e)


def _scale_entry(e, s):
    if isinstance(e, ExactScalar):
        return e.scale(Fraction(s))
    return ExactScalar.rational(Fraction(e) * s)


# ---------------------------------------------------------------------------
# F* evaluation and toric sums


class FStar:
    """F*(g) = <u_z, rho(gamma(g)) f(1)>_U with u_z the dual-projected
    kernel value at the distinguished z and gamma the rationalization of
    the l-supported adelic point g."""

    def __init__(self, f: AlgebraicModularForm, kern: HarmonicKernel,
                 aux: AuxPrimeData, shift: UnipotentShift):
        self.f = f
        self.kern = kern
        self.aux = aux
        self.shift = shift
        self.space = kern.space
        self.rat = Rationalizer(self.space, aux)
        zz = special_z(self.space)
        self.u_z = kern.u_z_tensor(zz)
        self._gamma_cache = {}
        self._val_cache = {}

    def value_of_gamma(self, gamma):
        G = [[ExactScalar.rational(x) for x in row] for row in gamma]
        M = self.space.act_split(G)
        moved = group_act({"W": M}, self.f.f1)
        return pair_U(self.space, self.u_z, moved)

    def shift_value(self, mu_tuple):
        """F* at (prod_i u_i(-pi^{-r_i} mu_i)) for principal-unit lifts."""
        ell = self.aux.ell
        key = tuple(int(m) % ell ** r for m, r in zip(mu_tuple, self.shift.rbar))
        if key in self._val_cache:
            return self._val_cache[key]
        params = tuple(Fraction(-int(m), ell ** r)
                       for m, r in zip(key, self.shift.rbar))
        x = self.shift.matrix(params)
        gamma = self.rat(x, denom_bound=max(self.shift.rbar))
        val = self.value_of_gamma(gamma)
        self._val_cache[key] = val
        return val

    def adelic_value(self, x):
        """F* at an arbitrary exact l-adic isometry matrix."""
        gamma = self.rat(x)
        return self.value_of_gamma(gamma)


def gamma_group_elements(aux, rbar):
    """Representatives of Gamma(rbar) = prod (1+l)/(1+l^{r_i}) as tuples of
    integer principal-unit lifts."""
    ell = aux.ell
    coords = []
    for r in rbar:
        coords.append([(1 + ell * k) % ell ** r for k in range(ell ** (r - 1))])
    return list(itertools.product(*coords))


def toric_sum(fstar: FStar, psi: TorusCharacter, pctx=None, exact=None):
    """P*(f, psi, sigma_xi) = sum over Gamma(rbar) of F* at the conjugated
    shift times the character value.

    Returns a dict with the mod-P value (and the exact cyclotomic value
    when `exact` is true, feasible for small conductors)."""
    aux = fstar.aux
    rbar = fstar.shift.rbar
    if exact is None:
        exact = max(aux.ell ** (r - 1) for r in rbar) <= 64
    total_ff = None
    total_exact = ExactScalar.zero() if exact else None
    F = pctx.field if pctx is not None else None
    for mu in gamma_group_elements(aux, rbar):
        v = fstar.shift_value(mu)
        if pctx is not None:
            vf = pctx.reduce_mod_P(v)
            cf = psi.value_ff(mu, pctx)
            term = F.mul(vf, cf)
            total_ff = term if total_ff is None else F.add(total_ff, term)
        if exact:
            total_exact = total_exact + v * psi.value_exact(mu)
    out = {}
    if pctx is not None:
        out["mod_P"] = total_ff
    if exact:
        out["exact"] = total_exact
    return out


# ---------------------------------------------------------------------------
# strong approximation factorization


def strong_approx_factor(a, ell, p=None, aux=None):
    """a in SL_m at l (l-power denominators, integral elsewhere): returns
    (r, u) with r rational, det +-1 with only l-power denominators, and
    u = r^{-1} a integral with integral inverse at l.

    Rational input is factored exactly; exact-scalar input goes through
    the l-adic images of the provided aux context."""
    m = len(a)
    rational = all(not isinstance(x, ExactScalar) for row in a for x in row)
    if rational:
        A = [[Fraction(x) for x in row] for row in a]
        d = linalg.det(A)
        if d * d != 1:
            raise BesselError("determinant must be +-1")
        R = 0
        for row in A:
            for x in row:
                R = max(R, _ell_denom(x, ell))
        for row in linalg.mat_inv(A):
            for x in row:
                R = max(R, _ell_denom(x, ell))
        scaled = [[x * ell ** R for x in row] for row in A]
        for row in scaled:
            for x in row:
                if x.denominator != 1:
                    raise BesselError("denominators outside l")
        K = 2 * R + 2
        red = [[int(x) % ell ** K for x in row] for row in scaled]
        aug = [row[:] + [ell ** K if i == j else 0 for j in range(m)]
               for i, row in enumerate(red)]
        H = linalg.hnf_columns(aug)
        r = [[Fraction(H[i][j], ell ** R) for j in range(m)] for i in range(m)]
        dr = linalg.det(r)
        if dr not in (1, -1):
            raise BesselError("lattice basis not unimodular")
        if dr == -1:
            for i in range(m):
                r[i][0] = -r[i][0]
        u = linalg.mat_mul(linalg.mat_inv(r), A)
        for row in u:
            for v in row:
                if Fraction(v).denominator != 1:
                    raise BesselError("cofactor matrix not integral; "
                                      "raise precision")
        return r, u
    if aux is None:
        raise BesselError("exact-scalar input needs the aux context")
    X = [[x if isinstance(x, ExactScalar) else ExactScalar.rational(x)
          for x in row] for row in a]
    Xi = linalg.mat_inv(X)
    R = 0
    for M in (X, Xi):
        for row in M:
            for e in row:
                if e:
                    R = max(R, -aux.valuation(e))
    K = 2 * R + 4
    scaled = [[_scale_entry(e, ell ** R) for e in row] for row in X]
    A = aux.matrix_images(scaled, K)
    aug = [row[:] + [ell ** K if i == j else 0 for j in range(m)]
           for i, row in enumerate(A)]
    H = linalg.hnf_columns(aug)
    r = [[Fraction(H[i][j], ell ** R) for j in range(m)] for i in range(m)]
    if linalg.det(r) < 0:
        for i in range(m):
            r[i][0] = -r[i][0]
    rex = [[ExactScalar.rational(x) for x in row] for row in r]
    u = linalg.mat_mul(linalg.mat_inv(rex), X)
    for M in (u, linalg.mat_inv(u)):
        for row in M:
            for e in row:
                if e and aux.valuation(e) < 0:
                    raise BesselError("factorization not integral; raise "
                                      "precision")
    return r, u


def _ell_denom(x: Fraction, ell):
    d = x.denominator
    v = 0
    while d % ell == 0:
        d //= ell
        v += 1
    if d != 1:
        raise BesselError("denominators outside l")
    return v


def _check_l_integral_rational(M, ell):
    for row in M:
        for x in row:
            d = Fraction(x).denominator
            while d % ell == 0:
                d //= ell
            if d != 1:
                raise BesselError("denominators outside l")
            if Fraction(x).denominator % ell == 0:
                raise BesselError("matrix not integral at l")


# ---------------------------------------------------------------------------
# Bessel periods: the two routes


class BesselMachine:
    """Shared data for the period routes on one instance."""

    def __init__(self, f: AlgebraicModularForm, kern: HarmonicKernel,
                 aux: AuxPrimeData, rbar, pctx):
        self.f = f
        self.kern = kern
        self.aux = aux
        self.rbar = tuple(int(r) for r in rbar)
        self.pctx = pctx
        self.space = kern.space
        self.shift = UnipotentShift(self.space, aux, self.rbar)
        self.fstar = FStar(f, kern, aux, self.shift)
        self.m = kern.m
        if self.m != 2 * self.space.n0:
            raise BesselError("Bessel periods require m = 2 n0")
        self.zmat = special_z(self.space)
        two_sz = _gram_of_matrix(self.space, self.zmat)
        self.two_sz = two_sz
        self._xi = None
        self._fourier_cache = {}
        self.vtd = v_tau_dual_vector(kern.tau, self.m)

    # -- route (i): toric ------------------------------------------------------

    def period_toric(self, psi: TorusCharacter, want_exact=None):
        return toric_sum(self.fstar, psi, pctx=self.pctx, exact=want_exact)

    # -- the xi matrix ----------------------------------------------------------

    def xi_matrix(self):
        """xi with (z xi)_l = sigma_xi . w0, w0 integral, bottom rows zero."""
        if self._xi is not None:
            return self._xi
        space, aux = self.space, self.aux
        n, n0 = space.n, space.n0
        sig = self.shift.sigma
        if n0 >= 2:
            zp = [row[: 2 * n0] for row in self.zmat[: 2 * n0]]
            zpx = [[ExactScalar.rational(x) for x in row] for row in zp]
            blk = [row[: 2 * n0] for row in sig[: 2 * n0]]
            xi = linalg.mat_mul(linalg.mat_mul(linalg.mat_inv(zpx), blk), zpx)
            self._xi = xi
            return xi
        # n0 == 1: w0 spans the Z_l-kernel of the last row of sigma; then
        # xi is the top block of sigma w0 and sigma^{-1} [xi; 0] is exactly
        # integral (verified below)
        ell = aux.ell
        R = max(self.rbar) + 1
        K = 3 * R + 6
        last = sig[n - 1]
        scaled = [_scale_entry(e, ell ** R) for e in last]
        ints = [aux.int_image(e, K) for e in scaled]
        basis = _kernel_lattice(ints, ell ** K)
        basis = linalg.lll_reduce(basis, self.space.gram())
        w0 = [[basis[i][j] for j in range(2)] for i in range(n)]
        w0x = [[ExactScalar.rational(x) for x in row] for row in w0]
        zxi = linalg.mat_mul(sig, w0x)
        xi = [[zxi[i][j] for j in range(2)] for i in range(2)]
        # exact integrality of sigma^{-1} (z xi): the defect from zeroing
        # the bottom row is l-adically deep enough to stay integral
        sig_inv = self.shift.matrix(tuple(Fraction(1, ell ** r)
                                          for r in self.rbar))
        zxi_full = [[xi[0][0], xi[0][1]], [xi[1][0], xi[1][1]]]
        zxi_full += [[ExactScalar.zero(), ExactScalar.zero()]
                     for _ in range(n - 2)]
        w0p = linalg.mat_mul(sig_inv, zxi_full)
        for row in w0p:
            for e in row:
                if e and aux.valuation(e) < 0:
                    raise BesselError("xi construction lost precision; "
                                      "raise K")
        det = linalg.det([[xi[0][0], xi[0][1]], [xi[1][0], xi[1][1]]])
        if det.is_zero():
            raise BesselError("degenerate xi")
        self._xi = xi
        return xi

    # -- route (ii): fourier ----------------------------------------------------

    def period_fourier(self, psi: TorusCharacter):
        """Sum over torus cosets of the paired Fourier coefficients at the
        twisted Gram targets;值 mod P."""
        aux, space = self.aux, self.space
        ell = aux.ell
        F = self.pctx.field
        total = None
        for mu in gamma_group_elements(aux, self.rbar):
            val = self._fourier_term(mu)
            cf = psi.value_ff(mu, self.pctx)
            term = F.mul(val, cf)
            total = term if total is None else F.add(total, term)
        return total

    def z_xi_matrix(self):
        """The exact n x m matrix (z xi)_l."""
        if getattr(self, "_z_xi", None) is not None:
            return self._z_xi
        space = self.space
        n, n0 = space.n, space.n0
        if n0 >= 2:
            zx = [[ExactScalar.rational(x) for x in row] for row in self.zmat]
            out = linalg.mat_mul(self.shift.sigma, zx)
        else:
            xi = self.xi_matrix()
            out = [[xi[0][0], xi[0][1]], [xi[1][0], xi[1][1]]]
            out += [[ExactScalar.zero()] * 2 for _ in range(n - 2)]
        self._z_xi = out
        return out

    def _fourier_term(self, mu):
        """One torus-coset term of the Fourier route.

        The coefficient contribution is restricted to the integral orbit
        actually supported by the Bessel unfolding (the one containing
        gamma^{-1} t (z xi) u_t^{-1}); the twisted targets can carry
        further orbits, for which the blanket singleton claim of the
        source fails -- see the tests for a stored counterexample."""
        key = tuple(int(m) % self.aux.ell ** r
                    for m, r in zip(mu, self.rbar))
        if key in self._fourier_cache:
            return self._fourier_cache[key]
        space, aux = self.space, self.aux
        n0 = space.n0
        xi = self.xi_matrix()
        tmat = None
        for j, m in enumerate(key, start=1):
            tj = torus_element(space, j, Fraction(m))
            tmat = tj if tmat is None else linalg.mat_mul(tmat, tj)
        tblk = [row[: 2 * n0] for row in tmat[: 2 * n0]]
        if n0 >= 2:
            zp = [row[: 2 * n0] for row in self.zmat[: 2 * n0]]
            zpx = [[ExactScalar.rational(x) for x in row] for row in zp]
            j1 = linalg.mat_mul(linalg.mat_mul(linalg.mat_inv(zpx), tblk), zpx)
        else:
            j1 = tblk
        j1xi = linalg.mat_mul(j1, xi)
        r_t, _u_t = strong_approx_factor(j1xi, aux.ell, aux=aux)
        # the coset r_t GL_m(Z) is what matters; reduce the basis against
        # the base Gram so the twisted target stays enumerable
        sz = [[Fraction(x) for x in row] for row in self.two_sz]
        r_t = linalg.lll_reduce(r_t, sz)
        two_s = _symm_int_matrix(
            linalg.mat_mul(linalg.mat_mul(linalg.transpose(r_t), sz), r_t))
        # the lattice point hit by the unfolding
        rex = [[ExactScalar.rational(x) for x in row] for row in r_t]
        u_t = linalg.mat_mul(linalg.mat_inv(rex), j1xi)
        gamma = self.fstar.rat(self.shift.matrix(
            tuple(Fraction(-m, aux.ell ** r)
                  for m, r in zip(key, self.rbar))))
        gex = [[ExactScalar.rational(x) for x in row] for row in gamma]
        x0 = linalg.mat_mul(
            linalg.mat_mul(linalg.mat_inv(gex),
                           linalg.mat_mul(tmat, self.z_xi_matrix())),
            linalg.mat_inv(u_t))
        x0int = []
        for row in x0:
            r = []
            for e in row:
                q = e.as_fraction() if e else Fraction(0)
                if q.denominator != 1:
                    raise BesselError("unfolding point is not integral")
                r.append(int(q))
            x0int.append(r)
        x0t = tuple(tuple(r) for r in x0int)
        coeff = _orbit_coefficient(self.f, self.kern, GramTarget(two_s), x0t)
        twist = _act_vminus(self.vtd, r_t)
        val = pair_V(coeff, twist)
        out = self.pctx.reduce_mod_P(val)
        self._fourier_cache[key] = out
        return out

    def route_ratio_report(self, characters):
        """Both routes for each character; the measured ratio constant."""
        F = self.pctx.field
        rows = []
        ratios = set()
        for psi in characters:
            tv = self.period_toric(psi)["mod_P"]
            fv = self.period_fourier(psi)
            ratio = None
            if not F.is_zero(fv):
                ratio = F.mul(tv, F.inv(fv))
            rows.append({"alphas": psi.alphas, "toric": F.coords(tv),
                         "fourier": F.coords(fv),
                         "ratio": F.coords(ratio) if ratio else None})
            if ratio is not None:
                ratios.add(ratio)
        const = None
        if len(ratios) == 1:
            const = next(iter(ratios))
        return {"rows": rows,
                "ratio_constant": F.coords(const) if const else None,
                "ratio_is_constant": len(ratios) <= 1}


def _orbit_coefficient(f, kern, target, x0):
    """Contribution to the Fourier coefficient of the single H(Z)-orbit
    containing x0 (one stabilizer-weighted kernel pairing)."""
    from .quadspace import enumerate_gram
    from .theta import orbit_decomposition, _paired_value
    sols = enumerate_gram(kern.space, target)
    if x0 not in set(sols):
        raise BesselError("unfolding point misses the solution list")
    for rep, _size, stab in orbit_decomposition(kern.space, sols):
        orbit = {rep}
        # cheap membership: x0 is in this orbit iff min of its orbit == rep
        auts = kern.space.automorphisms()
        x0rep = min(_matmul_int_b(g, x0) for g in auts)
        if x0rep == rep:
            return _paired_value(kern, f, rep).scale(Fraction(1, stab))
    raise BesselError("orbit identification failed")


def _matmul_int_b(g, z):
    n = len(g)
    m = len(z[0])
    return tuple(tuple(sum(g[i][k] * z[k][j] for k in range(n))
                       for j in range(m)) for i in range(n))


def _gram_of_matrix(space, z):
    n = space.n
    m = len(z[0])
    out = [[0] * m for _ in range(m)]
    for i in range(m):
        for j in range(m):
            out[i][j] = sum(space.deltas[a] * z[a][i] * z[a][j]
                            for a in range(n))
    return out


def _symm_int_matrix(M):
    out = []
    for row in M:
        r = []
        for x in row:
            fx = Fraction(x)
            if fx.denominator != 1:
                raise BesselError("twisted Gram target is not integral")
            r.append(int(fx))
        out.append(r)
    return out


def _act_vminus(vtd: TensorVector, r):
    """The V- twist dual to the minor-label action of r: plain action by
    r^{-1} on the e^- basis (so that the V pairing against the kernel of
    z r collapses to the pairing at z)."""
    m = len(r)
    ri = linalg.mat_inv([[Fraction(x) for x in row] for row in r])
    M = [[ExactScalar.rational(ri[i][j]) for j in range(m)] for i in range(m)]
    return group_act({"V-": M}, vtd)


# ---------------------------------------------------------------------------
# spin-invariance falsifier


def spin_invariance_falsifier(f: AlgebraicModularForm, kern: HarmonicKernel,
                              aux: AuxPrimeData, pctx, samples=8):
    """Evaluate the reduced map at pairs (g, g s) with s running over
    covering images of unipotent one-parameter elements at l; returns a
    witness pair with unequal values if found."""
    space = kern.space
    n0 = space.n0
    rbar = tuple([1] * n0)
    shift = UnipotentShift(space, aux, rbar)
    fstar = FStar(f, kern, aux, shift)
    F = pctx.field
    if samples <= 0:
        return {"falsified": False, "witness": None, "inconclusive": True}
    tested = 0
    params = [Fraction(1), Fraction(-1), Fraction(2), Fraction(1, aux.ell),
              Fraction(3), Fraction(-2), Fraction(5), Fraction(7)]
    base_points = [None] + params[:3]
    for base in base_points:
        for t in params:
            if tested >= samples:
                break
            tested += 1
            sarg = tuple([t] + [Fraction(0)] * (n0 - 1))
            smat = shift.matrix(sarg)
            if base is None:
                g = identity_exact(space.n)
            else:
                barg = tuple([base] + [Fraction(0)] * (n0 - 1))
                g = shift.matrix(tuple(Fraction(b) * -1 for b in barg))
            gs = linalg.mat_mul(g, smat)
            v1 = pctx.reduce_mod_P(fstar.adelic_value(g))
            v2 = pctx.reduce_mod_P(fstar.adelic_value(gs))
            if v1 != v2:
                return {"falsified": True, "inconclusive": False,
                        "witness": {"base": str(base), "t": str(t),
                                    "value_g": F.coords(v1),
                                    "value_gs": F.coords(v2)}}
    return {"falsified": False, "witness": None, "inconclusive": False,
            "samples": tested}


def identity_exact(n):
    z, o = ExactScalar.zero(), ExactScalar.one()
    return [[o if i == j else z for j in range(n)] for i in range(n)]


# ---------------------------------------------------------------------------
# the layered maps and the non-vanishing search


class LayeredMaps:
    """F-tilde layers: partial character-smoothed shifts of the reduced
    toric evaluations, all in F_{p^f}."""

    def __init__(self, machine: BesselMachine, rprime, alpha_prime):
        self.mac = machine
        self.rprime = tuple(int(x) for x in rprime)
        self.alpha_prime = tuple(int(x) for x in alpha_prime)
        for rp, r in zip(self.rprime, machine.rbar):
            if not (0 < 2 * rp < r):
                raise BesselError("layers need 0 < 2 r' < r")
        self.F = machine.pctx.field

    def _fbar(self, shifts):
        """Reduced F* at  prod u_i(-pi^{-r_i} m_i + extra_i)  given total
        parameters (exact Fractions)."""
        mac = self.mac
        x = mac.shift.matrix(tuple(shifts))
        val = mac.fstar.adelic_value(x)
        return mac.pctx.reduce_mod_P(val)

    def gamma_prime_elements(self, i):
        """Gamma'_i(r'_i): classes 1 + l^{r_i - r'_i} k mod l^{r_i}."""
        ell = self.mac.aux.ell
        r = self.mac.rbar[i]
        rp = self.rprime[i]
        step = ell ** (r - rp)
        return [(1 + step * k) % ell ** r for k in range(ell ** rp)]

    def mu_prime(self, i, t):
        """The bijection Gamma'_i(r') -> Z/l^{r'}: (t-1)/l^{r-r'}."""
        ell = self.mac.aux.ell
        r, rp = self.mac.rbar[i], self.rprime[i]
        return ((t - 1) // ell ** (r - rp)) % ell ** rp

    def psi_prime_value(self, i, t):
        """Primitive character of Gamma'_i(r'_i) via the level-r character:
        zeta_{l^{r-1}}^{alpha'_i dlog(t)} restricted to the deep subgroup."""
        mac = self.mac
        ell = mac.aux.ell
        r = mac.rbar[i]
        d = dlog_one_units(t, ell, r)
        N = mac.pctx.zeta_level
        o = ell ** (r - 1)
        zeta = mac.pctx._res_images["zeta"]
        e = (self.alpha_prime[i] * d) % o
        return self.F.pow(zeta, (N // o) * e)

    def f_tilde_layer(self, g_params, upto):
        """F~ with the first `upto` coordinates smoothed, evaluated at the
        shift with base parameters g_params (a tuple of Fractions)."""
        F = self.F
        mac = self.mac
        ell = mac.aux.ell
        if upto == 0:
            return self._fbar(g_params)
        coords = [self.gamma_prime_elements(i) for i in range(upto)]
        total = None
        for tup in itertools.product(*coords):
            shifts = list(g_params)
            cf = F.one()
            for i, t in enumerate(tup):
                r, rp = mac.rbar[i], self.rprime[i]
                mp = self.mu_prime(i, t)
                shifts[i] = shifts[i] + Fraction(-mp, ell ** rp)
                cf = F.mul(cf, self.psi_prime_value(i, t))
            term = F.mul(self._fbar(tuple(shifts)), cf)
            total = term if total is None else F.add(total, term)
        return total

    def f_tilde_direct(self):
        """The double-sum definition: cone average over alpha of the full
        character sums, scaled by l^{-sum(r - r')}."""
        F = self.F
        mac = self.mac
        ell = mac.aux.ell
        cone = enumerate_characters(mac.aux, mac.rbar, "cone",
                                    rprime=self.rprime,
                                    alpha_prime=self.alpha_prime)
        total = None
        for psi in cone:
            v = mac.period_toric(psi, want_exact=False)["mod_P"]
            total = v if total is None else F.add(total, v)
        scale = F.inv(F.from_int(ell ** sum(r - rp for r, rp in
                                            zip(mac.rbar, self.rprime))))
        return F.mul(scale, total) if total is not None else F.zero()

    def base_shift_params(self):
        ell = self.mac.aux.ell
        return tuple(Fraction(-1, ell ** r) for r in self.mac.rbar)


def nonvanishing_search(f, kern, aux, pctx, rbar, rprime):
    """Full search report: the table of periods over the character cones,
    the orthogonality collapse, the layered-map identity, and the witness
    flags.  An all-zero table at small conductor is a valid outcome and is
    reported as such."""
    mac = BesselMachine(f, kern, aux, rbar, pctx)
    F = pctx.field
    ell = aux.ell
    n0 = mac.space.n0
    report = {"ell": ell, "rbar": list(mac.rbar), "rprime": list(rprime)}

    # full primitive table
    prim = enumerate_characters(aux, mac.rbar, "primitive")
    table = []
    nonzero = []
    for psi in prim:
        v = mac.period_toric(psi, want_exact=False)["mod_P"]
        row = {"alphas": list(psi.alphas), "value": F.coords(v),
               "nonzero": not F.is_zero(v)}
        if row["nonzero"]:
            nonzero.append(row["alphas"])
        table.append(row)
    report["table"] = table
    report["nonzero_witnesses"] = nonzero
    report["all_zero"] = not nonzero
    if not nonzero:
        report["note"] = ("no nonzero primitive witness at this conductor; "
                          "the asymptotic statement concerns large "
                          "conductors, so this is a valid outcome")

    # orthogonality collapse: summing over all characters of the full group
    # leaves l^{sum(r-1)} times the trivial-coordinate term
    allchars = []
    ranges = [range(ell ** (r - 1)) for r in mac.rbar]
    for al in itertools.product(*ranges):
        allchars.append(TorusCharacter(aux, mac.rbar, al))
    s = None
    for psi in allchars:
        v = mac.period_toric(psi, want_exact=False)["mod_P"]
        s = v if s is None else F.add(s, v)
    single = pctx.reduce_mod_P(
        mac.fstar.shift_value(tuple([1] * n0)))
    scale = F.from_int(ell ** sum(r - 1 for r in mac.rbar))
    report["orthogonality_collapse"] = (s == F.mul(scale, single))

    # layered identity (Eq. p=f) and the recursion, on one cone
    alpha_prime = tuple([1] * n0)
    layers = LayeredMaps(mac, rprime, alpha_prime)
    lhs = None
    cone = enumerate_characters(aux, mac.rbar, "cone", rprime=rprime,
                                alpha_prime=alpha_prime)
    for psi in cone:
        v = mac.period_toric(psi, want_exact=False)["mod_P"]
        lhs = v if lhs is None else F.add(lhs, v)
    base = layers.base_shift_params()
    rhs = layers.f_tilde_layer(base, n0)
    scale = F.from_int(ell ** sum(r - rp for r, rp in zip(mac.rbar, rprime)))
    report["p_equals_f_identity"] = (lhs == F.mul(scale, rhs))

    # recursion: layer i from layer i-1 (checked at the base point)
    rec_ok = True
    for i in range(1, n0 + 1):
        lhs_i = layers.f_tilde_layer(base, i)
        total = None
        for t in layers.gamma_prime_elements(i - 1):
            shifts = list(base)
            mp = layers.mu_prime(i - 1, t)
            shifts[i - 1] = shifts[i - 1] + Fraction(-mp,
                                                     ell ** rprime[i - 1])
            sub = layers.f_tilde_layer(tuple(shifts), i - 1)
            cf = layers.psi_prime_value(i - 1, t)
            term = F.mul(sub, cf)
            total = term if total is None else F.add(total, term)
        if lhs_i != total:
            rec_ok = False
    report["recursion_identity"] = rec_ok
    # direct double-sum form agrees with the collapsed layer
    direct = layers.f_tilde_direct()
    report["f_tilde_direct_matches"] = (direct == rhs)
    return report


def _kernel_lattice(ints, modulus):
    """Basis (columns) of {v in Z^n : sum ints[a] v[a] = 0 mod modulus}."""
    from math import gcd
    n = len(ints)
    unit_idx = None
    for a, c in enumerate(ints):
        if gcd(c, modulus) == 1:
            unit_idx = a
            break
    if unit_idx is None:
        g = modulus
        for c in ints:
            g = gcd(g, c)
        if g == 1 or g == modulus:
            raise BesselError("degenerate kernel functional")
        return _kernel_lattice([c // g for c in ints], modulus // g)
    cinv = pow(ints[unit_idx], -1, modulus)
    cols = []
    for a in range(n):
        if a == unit_idx:
            continue
        v = [0] * n
        v[a] = 1
        v[unit_idx] = (-ints[a] * cinv) % modulus
        cols.append(v)
    v = [0] * n
    v[unit_idx] = modulus
    cols.append(v)
    M = [[c[i] for c in cols] for i in range(n)]
    return linalg.hnf_columns(M)
