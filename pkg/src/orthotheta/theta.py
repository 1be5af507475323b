"""Theta kernel, Fourier coefficients by two routes, q-expansions, and the
p-integrality / p-primitivity predicates.

The kernel value at an integral matrix z is the symmetric product of the
columns of T z tensored against the fixed V+ slot pattern of the weight;
its projection against the dual tau-generator recovers the displayed
scalar polynomial (products of upper-left minors).  Fourier coefficients
pair kernel values against the single class value of the input form; the
adelic route sums orbit representatives with stabilizer weights, the
classical route sums every lattice solution divided by the automorphism
count, and their exact equality is an acceptance property.
"""

from __future__ import annotations

import itertools
from fractions import Fraction
from math import isqrt

from .exactnum import ExactScalar
from . import linalg
from .quadspace import OrthogonalSpace, GramTarget, enumerate_gram, special_z
from .reps import (TensorVector, Weight, AlgebraicModularForm, group_act,
                   pair_WU, pair_WV, pair_V, v_tau_dual_vector, RepsError)


class ThetaError(ValueError):
    pass


# ---------------------------------------------------------------------------
# sparse polynomials over ExactScalar (for pluri-harmonicity)


class Poly:
    """Multivariate polynomial, terms: exponent tuple -> ExactScalar."""

    def __init__(self, nvars, terms=None):
        self.nvars = nvars
        self.terms = terms or {}

    @staticmethod
    def zero(nvars):
        return Poly(nvars, {})

    @staticmethod
    def const(nvars, c):
        c = c if isinstance(c, ExactScalar) else ExactScalar.rational(c)
        e = (0,) * nvars
        return Poly(nvars, {e: c} if c else {})

    @staticmethod
    def linear(nvars, coeffs):
        terms = {}
        for a, c in coeffs.items():
            if c:
                e = [0] * nvars
                e[a] = 1
                terms[tuple(e)] = c
        return Poly(nvars, terms)

    def __add__(self, other):
        out = dict(self.terms)
        for e, c in other.terms.items():
            v = out.get(e)
            v = c if v is None else v + c
            if v:
                out[e] = v
            elif e in out:
                del out[e]
        return Poly(self.nvars, out)

    def __sub__(self, other):
        return self + other.scale(ExactScalar.rational(-1))

    def __mul__(self, other):
        out = {}
        for e1, c1 in self.terms.items():
            for e2, c2 in other.terms.items():
                e = tuple(a + b for a, b in zip(e1, e2))
                c = c1 * c2
                v = out.get(e)
                v = c if v is None else v + c
                if v:
                    out[e] = v
                elif e in out:
                    del out[e]
        return Poly(self.nvars, out)

    def scale(self, c):
        if not c:
            return Poly.zero(self.nvars)
        return Poly(self.nvars, {e: c * v for e, v in self.terms.items()})

    def diff(self, var):
        out = {}
        for e, c in self.terms.items():
            k = e[var]
            if k:
                e2 = list(e)
                e2[var] = k - 1
                out[tuple(e2)] = c.scale(k)
        return Poly(self.nvars, out)

    def is_zero(self):
        return not self.terms

    def eval(self, values):
        tot = ExactScalar.zero()
        for e, c in self.terms.items():
            term = c
            for var, k in enumerate(e):
                for _ in range(k):
                    term = term * values[var]
            tot = tot + term
        return tot


def poly_det(rows):
    """Leibniz determinant of a square matrix of Poly's."""
    r = len(rows)
    nv = rows[0][0].nvars
    out = Poly.zero(nv)
    for perm in itertools.permutations(range(r)):
        sgn = _perm_sign(perm)
        prod = Poly.const(nv, 1)
        for i in range(r):
            prod = prod * rows[i][perm[i]]
        out = out + (prod if sgn == 1 else prod.scale(ExactScalar.rational(-1)))
    return out


def _perm_sign(perm):
    sign, seen = 1, [False] * len(perm)
    for i in range(len(perm)):
        if seen[i]:
            continue
        j, c = i, 0
        while not seen[j]:
            seen[j] = True
            j = perm[j]
            c += 1
        if c % 2 == 0:
            sign = -sign
    return sign


def _sort_sign(idx):
    """Sorted tuple and permutation sign; None if a repeat occurs."""
    idx = list(idx)
    sign = 1
    for i in range(len(idx)):
        for j in range(len(idx) - 1 - i):
            if idx[j] > idx[j + 1]:
                idx[j], idx[j + 1] = idx[j + 1], idx[j]
                sign = -sign
    for i in range(len(idx) - 1):
        if idx[i] == idx[i + 1]:
            return None, 0
    return tuple(idx), sign


# ---------------------------------------------------------------------------
# the kernel


class HarmonicKernel:
    """Kernel data for a weight and a pluri-harmonic slot pattern."""

    def __init__(self, space: OrthogonalSpace, weight: Weight, m):
        self.space = space
        self.weight = weight
        self.m = int(m)
        n = space.n
        self.case = weight.case_tag(n)
        self.tau = weight.tau(self.m, n)
        self.tau_circ = weight.tau_circ(self.m, n)
        # factor structure (mult, wedge size): Sym^{mult}(wedge^r W+)
        if self.case == "case2":
            self.factors = [(1, n)]
        else:
            parts = list(weight.parts) + [0]
            self.factors = [(parts[r - 1] - parts[r], r)
                            for r in range(1, weight.j + 1)
                            if parts[r - 1] - parts[r] > 0]
        self.N = sum(mult * r for (mult, r) in self.factors)
        if any(r > self.m for (_mult, r) in self.factors):
            raise ThetaError("m too small for the weight pattern")
        self.dims = {"W+": space.n * self.m, "W": space.n, "V+": self.m,
                     "V-": self.m}
        self._vtau_dual = v_tau_dual_vector(self.tau, self.m)
        self._uz_cache = {}

    # -- evaluation -----------------------------------------------------------

    def _wmatrix(self, z):
        """Column matrix w = T^{-T} z over ExactScalar: the split-basis
        Gram of the columns of w is exactly z^T Q z."""
        T = self.space.tdual()
        Z = [[x if isinstance(x, ExactScalar) else ExactScalar.rational(x)
              for x in row] for row in z]
        return linalg.mat_mul(T, Z)

    def eval_tensor(self, z):
        """Kernel tensor: per weight gap r, the Sym-power of the wedge of
        the first r columns of the slot matrix (columns carry their V+
        labels, so the value is functorial in both group actions)."""
        w = self._wmatrix(z)
        return self._tensor_from_w(w)

    def _tensor_from_w(self, w):
        """Cauchy-component kernel: per weight gap r, the Sym power of the
        bi-minor vector C_r(w) = sum_{I,J} det(w[I,J]) wedge_I (x) wedge_J."""
        n, m = self.space.n, self.m
        if self.N == 0:
            return TensorVector((), self.dims, {(): ExactScalar.one()})
        shape = tuple((mult, 1, f"WV{r}") for (mult, r) in self.factors)
        dims = dict(self.dims)
        factor_terms = []
        for (mult, r) in self.factors:
            En = list(itertools.combinations(range(n), r))
            Em = list(itertools.combinations(range(m), r))
            dims[f"WV{r}"] = len(En) * len(Em)
            group = {}
            for a, I in enumerate(En):
                for b, J in enumerate(Em):
                    sub = [[w[i][j] for j in J] for i in I]
                    d = linalg.det(sub) if r > 1 else sub[0][0]
                    if d:
                        group[a * len(Em) + b] = d
            # Sym power over composite codes
            fac = {(): ExactScalar.one()}
            for _ in range(mult):
                new = {}
                for pref, c0 in fac.items():
                    for code, c1 in group.items():
                        key = tuple(sorted(pref + ((code,),)))
                        c = c0 * c1
                        v = new.get(key)
                        v = c if v is None else v + c
                        if v:
                            new[key] = v
                        elif key in new:
                            del new[key]
                fac = new
            factor_terms.append(fac)
        terms = {(): ExactScalar.one()}
        for fac in factor_terms:
            new = {}
            for pref, c0 in terms.items():
                for key, c1 in fac.items():
                    k = pref + (key,)
                    c = c0 * c1
                    v = new.get(k)
                    v = c if v is None else v + c
                    if v:
                        new[k] = v
            terms = new
        self.dims = dims
        return TensorVector(shape, dims,
                            {k: c for k, c in terms.items() if c})

    def eval_scalar(self, z):
        """The displayed polynomial z_{lambda,tau}(T z) (paper minors, with
        the paper's unnormalized odd slot)."""
        T = self.space.tmatrix(normalize_odd_slot=False)
        Z = [[x if isinstance(x, ExactScalar) else ExactScalar.rational(x)
              for x in row] for row in z]
        w = linalg.mat_mul(T, Z)
        return self._scalar_from_w(w)

    def _scalar_from_w(self, w):
        n0, nr, n = self.space.n0, self.space.nr, self.space.n
        out = ExactScalar.one()
        if self.case == "case2":
            rows = [w[a] for a in range(n)]
            sub = [[rows[a][b] for b in range(n)] for a in range(n)]
            return linalg.det(sub)
        parts = list(self.weight.parts) + [0]
        for r in range(1, self.weight.j + 1):
            e = parts[r - 1] - parts[r]
            if e == 0:
                continue
            sub = [[w[a][b] for b in range(r)] for a in range(r)]
            out = out * (linalg.det(sub) ** e)
        return out

    def u_z_tensor(self, zmat):
        """<Delta(T z), v_{tau dual}>_{W,V}: a plain W-slot tensor."""
        key = tuple(tuple(row) for row in zmat)
        if key not in self._uz_cache:
            t = self.eval_tensor(zmat)
            self._uz_cache[key] = pair_WV(self.space, t, self._vtau_dual)
        return self._uz_cache[key]

    def special_z(self):
        return special_z(self.space)

    # -- polynomial for pluri-harmonicity ---------------------------------------

    def polynomial(self):
        """z_{lambda,tau}(T z) as a Poly in the n*m entries of z."""
        n, m = self.space.n, self.m
        nv = n * m
        T = self.space.tmatrix(normalize_odd_slot=False)
        W = [[Poly.linear(nv, {a * m + i: T[k][a] for a in range(n)})
              for i in range(m)] for k in range(n)]
        n0, nr = self.space.n0, self.space.nr
        if self.case == "case2":
            return poly_det([[W[a][b] for b in range(n)] for a in range(n)])
        out = Poly.const(nv, 1)
        parts = list(self.weight.parts) + [0]
        for r in range(1, self.weight.j + 1):
            e = parts[r - 1] - parts[r]
            if e == 0:
                continue
            d = poly_det([[W[a][b] for b in range(r)] for a in range(r)])
            for _ in range(e):
                out = out * d
        return out


def pluriharmonicity_defects(space, weight, m):
    """Apply every mixed Laplacian to the kernel polynomial; list of
    (i, j, defect_poly) for nonzero defects (empty list = pluri-harmonic)."""
    kern = HarmonicKernel(space, weight, m)
    P = kern.polynomial()
    n = space.n
    nv = n * m
    qinv = [Fraction(1, space.deltas[a]) for a in range(n)]
    bad = []
    for i in range(m):
        for j in range(i, m):
            acc = Poly.zero(nv)
            for a in range(n):
                d = P.diff(a * m + i).diff(a * m + j)
                acc = acc + d.scale(ExactScalar.rational(qinv[a]))
            if not acc.is_zero():
                bad.append((i, j, acc))
    return bad


# ---------------------------------------------------------------------------
# Fourier coefficients


def orbit_decomposition(space: OrthogonalSpace, zlist):
    """H(Z)-orbits of a list of integer matrices (tuples of row tuples).

    Returns list of (representative, orbit_size, stabilizer_order)."""
    auts = space.automorphisms()
    zset = set(zlist)
    seen = set()
    out = []
    for z in sorted(zset):
        if z in seen:
            continue
        orbit = set()
        stab = 0
        for g in auts:
            gz = _matmul_int(g, z)
            orbit.add(gz)
            if gz == z:
                stab += 1
        if not orbit <= zset:
            raise ThetaError("orbit leaves the solution list (bad input)")
        seen |= orbit
        out.append((min(orbit), len(orbit), stab))
    return out


def _matmul_int(g, z):
    n = len(g)
    m = len(z[0])
    return tuple(tuple(sum(g[i][k] * z[k][j] for k in range(n))
                       for j in range(m)) for i in range(n))


def _paired_value(kern: HarmonicKernel, f: AlgebraicModularForm, z):
    t = kern.eval_tensor(z)
    return pair_WU(kern.space, t, f.f1)


def _zero_coefficient(kern):
    shape = tuple((mult, r, "V+") for (mult, r) in kern.factors)
    return TensorVector(shape, {"V+": kern.m}, {})


def fourier_coefficient_classical(f: AlgebraicModularForm, kern: HarmonicKernel,
                                  target: GramTarget, convention="half"):
    """Direct lattice sum over all solutions divided by the automorphism
    order (the independent oracle route)."""
    zlist = _solutions(kern, target, convention)
    total = _zero_coefficient(kern)
    for z in zlist:
        total = total + _paired_value(kern, f, z)
    return total.scale(Fraction(1, kern.space.automorphism_order()))


def fourier_coefficient_adelic(f: AlgebraicModularForm, kern: HarmonicKernel,
                               target: GramTarget, convention="half"):
    """Orbit-representative sum with stabilizer weights (the coset route)."""
    zlist = _solutions(kern, target, convention)
    total = _zero_coefficient(kern)
    for rep, _size, stab in orbit_decomposition(kern.space, zlist):
        total = total + _paired_value(kern, f, rep).scale(Fraction(1, stab))
    return total


def _solutions(kern, target: GramTarget, convention):
    if convention == "half":
        tgt = target
    elif convention == "whole":
        tgt = GramTarget([[2 * x for x in row] for row in target.two_s])
    else:
        raise ThetaError(f"unknown convention {convention}")
    return enumerate_gram(kern.space, tgt)


# ---------------------------------------------------------------------------
# q-expansions


class QExpansion:
    """Map from integral key matrices (the stored 2S) to coefficients."""

    def __init__(self, kern: HarmonicKernel, convention="half"):
        self.kern = kern
        self.convention = convention
        self.coeffs = {}

    def keys_sorted(self):
        return sorted(self.coeffs, key=lambda k: (sum(k[i][i] for i in
                                                      range(len(k))), k))

    def to_json(self):
        out = []
        for k in self.keys_sorted():
            c = self.coeffs[k]
            out.append({
                "two_S": [list(r) for r in k],
                "in_sym_circ": GramTarget(k).in_sym_circ(),
                "coefficient": {
                    str(idx): v.to_json() for idx, v in
                    sorted(c.texpand().items())
                },
            })
        return out


def sweep_targets(m, bound):
    """All psd integral symmetric m x m matrices with trace <= bound."""
    if bound < 0:
        raise ThetaError("bound must be >= 0")
    out = []
    if m == 1:
        for k in range(bound + 1):
            out.append(GramTarget([[k]]))
        return out
    diags = []

    def diag_rec(i, left, cur):
        if i == m:
            diags.append(tuple(cur))
            return
        for d in range(left + 1):
            diag_rec(i + 1, left - d, cur + [d])

    diag_rec(0, bound, [])
    for dg in diags:
        pairs = list(itertools.combinations(range(m), 2))
        ranges = []
        for (i, j) in pairs:
            b = isqrt(dg[i] * dg[j])
            ranges.append(range(-b, b + 1))
        for offs in itertools.product(*ranges):
            M = [[0] * m for _ in range(m)]
            for i in range(m):
                M[i][i] = dg[i]
            for (i, j), v in zip(pairs, offs):
                M[i][j] = M[j][i] = v
            t = GramTarget(M)
            if t.is_positive_semidefinite():
                out.append(t)
    out.sort(key=lambda t: (t.trace(), t.two_s))
    return out


def expand_qexpansion(f: AlgebraicModularForm, kern: HarmonicKernel, bound,
                      convention="half"):
    q = QExpansion(kern, convention)
    for t in sweep_targets(kern.m, bound):
        q.coeffs[t.two_s] = fourier_coefficient_adelic(f, kern, t, convention)
    return q


# ---------------------------------------------------------------------------
# integrality report


def check_p_integral(q: QExpansion, ctx, hypothesis_order=None):
    """Valuation scan over every stored coefficient.

    Returns a report dict with the integrality flag, a primitivity flag via
    the v_{tau dual} pairing, and witnesses."""
    kern = q.kern
    warnings = []
    if hypothesis_order is None:
        hypothesis_order = kern.space.automorphism_order()
    if hypothesis_order % ctx.p == 0:
        warnings.append(f"hypothesis violated: p={ctx.p} divides |H(Z)| ="
                        f" {hypothesis_order}")
    vtd = v_tau_dual_vector(kern.tau, kern.m)
    all_integral = True
    primitive = False
    bad = []
    unit_keys = []
    min_val = None
    for key, coeff in q.coeffs.items():
        for idx, c in coeff.texpand().items():
            v = ctx.padic_valuation(c)
            min_val = v if min_val is None else min(min_val, v)
            if v < 0:
                all_integral = False
                bad.append({"two_S": key, "slot": idx, "valuation": v})
        pv = pair_V(coeff, vtd)
        if not pv.is_zero() and ctx.padic_valuation(pv) == 0:
            primitive = True
            unit_keys.append(key)
    return {
        "all_integral": all_integral,
        "p_primitive": primitive,
        "min_valuation": min_val,
        "witnesses": bad[:10],
        "unit_pairing_keys": unit_keys[:10],
        "warnings": warnings,
    }


# ---------------------------------------------------------------------------
# equivariance helper (used by tests and the self-test verb)


def kernel_equivariance_pair(kern: HarmonicKernel, h, g, z):
    """LHS = Delta(T h z g); RHS = (rho_lambda(h) (x) Lambda(g^T) on the
    minor labels) applied to Delta(T z).  Both returned for comparison."""
    n, m = kern.space.n, kern.m
    hz = [[sum(h[i][k] * z[k][j] for k in range(n)) for j in range(m)]
          for i in range(n)]
    hzg = [[sum(Fraction(hz[i][k]) * Fraction(g[k][j]) for k in range(m))
            for j in range(m)] for i in range(n)]
    hzg = [[ExactScalar.rational(x) for x in row] for row in hzg]
    lhs = kern.eval_tensor(hzg)
    M = kern.space.act_split(h)
    C = [[ExactScalar.rational(Fraction(g[j][i])) for j in range(m)]
         for i in range(m)]
    rhs = group_act({"W": M, "V+": C}, kern.eval_tensor(z))
    return lhs, rhs
