"""Tensor realizations of the weight-lambda spaces, pairings, and forms.

Vectors on the orthogonal side are written in the split slot basis
(E~_1^+..E~_n0^+, E~_1^-..E~_n0^-, and for odd rank E_n/sqrt(delta_n)); in
that basis the bilinear form is the permutation "partner" pairing, which
keeps all four pairings sparse.  Symmetric and wedge products carry the
1/k! normalizations v1 v2 = (v1 (x) v2 + v2 (x) v1)/2! etc., realized by
expanding canonical monomials to plain tensor level with those weights.
"""

from __future__ import annotations

import itertools
from fractions import Fraction

from .exactnum import ExactScalar
from . import linalg
from .quadspace import OrthogonalSpace


class RepsError(ValueError):
    pass


# ---------------------------------------------------------------------------
# weights


class Weight:
    """Highest weight (lambda_1 >= ... >= lambda_{n0} >= 0; epsilon)."""

    def __init__(self, parts, epsilon=1, n0=None):
        parts = [int(x) for x in parts]
        if n0 is not None:
            parts = parts + [0] * (n0 - len(parts))
        if any(parts[i] < parts[i + 1] for i in range(len(parts) - 1)) or \
                (parts and parts[-1] < 0):
            raise RepsError("weight must be a decreasing list of nonnegatives")
        self.parts = tuple(parts)
        self.epsilon = int(epsilon)
        if self.epsilon not in (1, -1):
            raise RepsError("epsilon must be +-1")

    @property
    def n0(self):
        return len(self.parts)

    @property
    def j(self):
        j = 0
        for k, v in enumerate(self.parts):
            if v > 0:
                j = k + 1
        return j

    def total(self):
        return sum(self.parts)

    def case_tag(self, n):
        """'case1' or 'case2' per the rearranged large-p assumption."""
        sgn = (-1) ** self.total()
        if self.epsilon == sgn:
            return "case1"
        if n % 2 == 0 and self.j in (0, self.n0):
            return "case2" if self.j == 0 else "case1"
        raise RepsError("epsilon incompatible with weight/parity")

    def p_bound(self, n):
        j = self.j
        gaps = [self.parts[i] - self.parts[i + 1] for i in range(j - 1)]
        tail = [self.parts[j - 1]] if j else []
        base = [j] if self.case_tag(n) == "case1" else [n]
        vals = base + gaps + tail
        return max(vals) if vals else 0

    def validate_assumption(self, p, space: OrthogonalSpace):
        """Diagnostics list for the large-p assumption; empty means ok."""
        out = []
        prod = 1
        for d in space.deltas:
            prod *= d
        if prod % p == 0:
            out.append(f"p={p} divides prod(delta)")
        try:
            tag = self.case_tag(space.n)
        except RepsError as e:
            out.append(str(e))
            return out
        if p <= self.p_bound(space.n):
            out.append(f"p={p} <= case bound {self.p_bound(space.n)} ({tag})")
        return out

    def shape(self, n):
        """W~_lambda factor list [(r, s)] with r = Sym power, s = wedge size."""
        tag = self.case_tag(n)
        if tag == "case2":
            return [(1, n)]
        parts = list(self.parts) + [0]
        out = []
        for i in range(1, self.j + 1):
            r = parts[i - 1] - parts[i]
            if r > 0:
                out.append((r, i))
        return out

    def tau(self, m, n):
        tag = self.case_tag(n)
        if tag == "case2":
            if m != 2 * (n // 2):
                raise RepsError("case2 requires m = 2 n0")
            return tuple([1] * n + [0] * (m - n)) if n <= m else tuple([1] * m)
        if not (self.j <= m <= 2 * (n // 2)):
            raise RepsError(f"m={m} outside the admissible range")
        return tuple(list(self.parts[: self.j]) + [0] * (m - self.j))

    def tau_circ(self, m, n):
        n0 = n // 2
        return tuple(t + n0 for t in self.tau(m, n))

    def __repr__(self):
        return f"Weight({list(self.parts)}; {self.epsilon:+d})"


# ---------------------------------------------------------------------------
# tensors


def _canon_factor(slots, s):
    """Canonicalize one factor: list of wedge tuples -> (key, sign) or None."""
    sign = 1
    canon = []
    for w in slots:
        if s == 1:
            canon.append((w[0],))
            continue
        idx = list(w)
        perm_sign = 1
        for i in range(len(idx)):
            for j in range(len(idx) - 1 - i):
                if idx[j] > idx[j + 1]:
                    idx[j], idx[j + 1] = idx[j + 1], idx[j]
                    perm_sign = -perm_sign
        if any(idx[i] == idx[i + 1] for i in range(len(idx) - 1)):
            return None
        sign *= perm_sign
        canon.append(tuple(idx))
    canon.sort()
    return tuple(canon), sign


class TensorVector:
    """Sparse element of (x)_k Sym^{r_k}(wedge^{s_k}(base_k)).

    shape: tuple of (r, s, base) with base in {"W", "V+", "V-", "W+"};
    terms: canonical multi-index -> ExactScalar."""

    def __init__(self, shape, dims, terms=None):
        self.shape = tuple((int(r), int(s), b) for (r, s, b) in shape)
        self.dims = dict(dims)
        self.terms = terms or {}
        self._expansion = None

    # -- constructors --------------------------------------------------------

    @staticmethod
    def zero(shape, dims):
        return TensorVector(shape, dims, {})

    @staticmethod
    def monomial(shape, dims, slots, coeff=None):
        """slots: per factor a list of r wedge index-tuples."""
        coeff = coeff if coeff is not None else ExactScalar.one()
        key = []
        sign = 1
        for (r, s, b), fac in zip(shape, slots):
            if len(fac) != r:
                raise RepsError("wrong number of Sym slots")
            cf = _canon_factor([tuple(w) for w in fac], s)
            if cf is None:
                return TensorVector(shape, dims, {})
            k, sg = cf
            sign *= sg
            key.append(k)
        c = coeff if sign == 1 else -coeff
        return TensorVector(shape, dims, {tuple(key): c} if c else {})

    def copy(self):
        return TensorVector(self.shape, self.dims, dict(self.terms))

    # -- ring-module ops -------------------------------------------------------

    def __add__(self, other):
        if self.shape != other.shape:
            raise RepsError("shape mismatch in add")
        out = dict(self.terms)
        for k, c in other.terms.items():
            v = out.get(k)
            v = c if v is None else v + c
            if v:
                out[k] = v
            elif k in out:
                del out[k]
        return TensorVector(self.shape, self.dims, out)

    def __sub__(self, other):
        return self + other.scale(ExactScalar.rational(-1))

    def scale(self, c):
        if isinstance(c, (int, Fraction)):
            c = ExactScalar.rational(c)
        if not c:
            return TensorVector(self.shape, self.dims, {})
        return TensorVector(self.shape, self.dims,
                            {k: c * v for k, v in self.terms.items()})

    def is_zero(self):
        return not self.terms

    def __eq__(self, other):
        if not isinstance(other, TensorVector):
            return NotImplemented
        if self.shape == other.shape:
            return (self - other).is_zero()
        return self.texpand() == other.texpand()

    def __repr__(self):
        return f"TensorVector({self.shape}, {len(self.terms)} terms)"

    # -- expansion to plain tensor level ---------------------------------------

    def texpand(self):
        """dict: flat tuple of slot indices (wedge-1 level) -> ExactScalar.

        A canonical monomial expands with the 1/r! and 1/s! normalizations;
        flat keys concatenate the factors in order."""
        if self._expansion is not None:
            return self._expansion
        out = {}
        for key, c in self.terms.items():
            for flat, w in _expand_monomial(self.shape, key):
                v = out.get(flat)
                t = c.scale(w)
                v = t if v is None else v + t
                if v:
                    out[flat] = v
                elif flat in out:
                    del out[flat]
        self._expansion = out
        return out


def _expand_monomial(shape, key):
    """Yield (flat_index_tuple, Fraction weight) for one canonical monomial."""
    per_factor = []
    for (r, s, b), fac in zip(shape, key):
        # expand each wedge slot: (1/s!) sum over perms with sign
        slot_exps = []
        for w in fac:
            slot = {}
            for perm in itertools.permutations(range(s)):
                sg = _perm_sign(perm)
                idx = tuple(w[p] for p in perm)
                slot[idx] = slot.get(idx, Fraction(0)) + Fraction(sg, _fact(s))
            slot_exps.append(slot)
        # symmetrize the r slots: (1/r!) sum over orderings
        fac_exp = {}
        for order in itertools.permutations(range(r)):
            # product over ordered slots
            partial = [((), Fraction(1, _fact(r)))]
            for t in order:
                new = []
                for (acc, wgt) in partial:
                    for idx, sw in slot_exps[t].items():
                        new.append((acc + idx, wgt * sw))
                partial = new
            for acc, wgt in partial:
                fac_exp[acc] = fac_exp.get(acc, Fraction(0)) + wgt
        per_factor.append({k: v for k, v in fac_exp.items() if v})
    # product across factors
    items = [((), Fraction(1))]
    for fexp in per_factor:
        new = []
        for acc, wgt in items:
            for k, v in fexp.items():
                new.append((acc + k, wgt * v))
        items = new
    return items


_FACT = [1, 1, 2, 6, 24, 120, 720, 5040, 40320]


def _fact(n):
    while len(_FACT) <= n:
        _FACT.append(_FACT[-1] * len(_FACT))
    return _FACT[n]


def _perm_sign(perm):
    sign = 1
    seen = [False] * len(perm)
    for i in range(len(perm)):
        if seen[i]:
            continue
        j, clen = i, 0
        while not seen[j]:
            seen[j] = True
            j = perm[j]
            clen += 1
        if clen % 2 == 0:
            sign = -sign
    return sign


# ---------------------------------------------------------------------------
# functorial group action


def group_act(actions, t: TensorVector):
    """Apply base-indexed matrices functorially.

    actions: dict base -> square matrix over ExactScalar acting on basis
    vectors by columns (b_i -> sum_j M[j][i] b_j).  For base "W+" either
    provide a dict entry "W+" directly, or entries "W" and "V+" whose
    Kronecker product is used."""
    out_terms = {}
    minors_cache = {}

    def wedge_image(M, w, s, dim):
        keyc = (id(M), w)
        if keyc in minors_cache:
            return minors_cache[keyc]
        img = {}
        for target in itertools.combinations(range(dim), s):
            sub = [[M[target[a]][w[b]] for b in range(s)] for a in range(s)]
            d = linalg.det(sub) if s > 1 else sub[0][0]
            if d:
                img[target] = d
        minors_cache[keyc] = img
        return img

    for key, c in t.terms.items():
        partial = [((), c)]
        for (r, s, b), fac in zip(t.shape, key):
            M = _action_for(actions, b, t.dims)
            dim = t.dims[b]
            for w in fac:
                img = wedge_image(M, w, s, dim)
                new = []
                for acc, coeff in partial:
                    for tw, d in img.items():
                        new.append((acc + (tw,), coeff * d))
                partial = new
            # close the factor: regroup the last r slots canonically
        # now rebuild canonical monomials factor by factor
        for slots_flat, coeff in partial:
            pos = 0
            keyparts = []
            sign = 1
            dead = False
            for (r, s, b) in t.shape:
                fac = slots_flat[pos: pos + r]
                pos += r
                cf = _canon_factor(list(fac), s)
                if cf is None:
                    dead = True
                    break
                k, sg = cf
                sign *= sg
                keyparts.append(k)
            if dead:
                continue
            k = tuple(keyparts)
            cc = coeff if sign == 1 else -coeff
            v = out_terms.get(k)
            v = cc if v is None else v + cc
            if v:
                out_terms[k] = v
            elif k in out_terms:
                del out_terms[k]
    return TensorVector(t.shape, t.dims, out_terms)


def _action_for(actions, base, dims):
    if base in actions:
        return actions[base]
    if base.startswith("WV") and "W" in actions:
        r = int(base[2:])
        A = actions["W"]
        C = actions.get("V+")
        n = len(A)
        if C is None:
            raise RepsError("composite base needs the V+ action")
        m = len(C)
        from itertools import combinations
        En = list(combinations(range(n), r))
        Em = list(combinations(range(m), r))
        dim = len(En) * len(Em)
        M = [[ExactScalar.zero()] * dim for _ in range(dim)]
        detA = {}
        detC = {}
        for a, I in enumerate(En):
            for b, J in enumerate(En):
                sub = [[A[I[x]][J[y]] for y in range(r)] for x in range(r)]
                d = linalg.det(sub) if r > 1 else sub[0][0]
                if d:
                    detA[(a, b)] = d
        for a, I in enumerate(Em):
            for b, J in enumerate(Em):
                sub = [[C[I[x]][J[y]] for y in range(r)] for x in range(r)]
                d = linalg.det(sub) if r > 1 else sub[0][0]
                if d:
                    detC[(a, b)] = d
        for (ia, ib), da in detA.items():
            for (ja, jb), dc in detC.items():
                M[ia * len(Em) + ja][ib * len(Em) + jb] = da * dc
        return M
    if base == "W+" and "W" in actions:
        A = actions["W"]
        C = actions.get("V+")
        n = len(A)
        m = dims["W+"] // n
        if C is None:
            C = identity_exact(m)
        M = [[ExactScalar.zero()] * (n * m) for _ in range(n * m)]
        for a in range(n):
            for ap in range(n):
                if not A[ap][a]:
                    continue
                for b in range(m):
                    for bp in range(m):
                        if C[bp][b]:
                            M[ap * m + bp][a * m + b] = A[ap][a] * C[bp][b]
        return M
    raise RepsError(f"no action supplied for base {base}")


def identity_exact(n):
    z, o = ExactScalar.zero(), ExactScalar.one()
    return [[o if i == j else z for j in range(n)] for i in range(n)]


# ---------------------------------------------------------------------------
# pairings


def partner_permutation(space: OrthogonalSpace):
    """Slot pairing of the normalized split basis: i <-> n0+i, odd slot fixed."""
    n, n0 = space.n, space.n0
    out = list(range(n))
    for i in range(n0):
        out[i], out[n0 + i] = n0 + i, i
    return out


def pair_U(space, a: TensorVector, b: TensorVector):
    """Full contraction of two W-shaped tensors under <.,.>_U."""
    pa, ea, eb = partner_permutation(space), a.texpand(), b.texpand()
    total = ExactScalar.zero()
    for k, c in ea.items():
        pk = tuple(pa[i] for i in k)
        d = eb.get(pk)
        if d is not None:
            total = total + c * d
    return total


def pair_V(a: TensorVector, b: TensorVector):
    """Contraction of a V+-shaped tensor with a V--shaped tensor."""
    ea, eb = a.texpand(), b.texpand()
    total = ExactScalar.zero()
    for k, c in ea.items():
        d = eb.get(k)
        if d is not None:
            total = total + c * d
    return total


def _composite_tables(n, m, r):
    En = list(itertools.combinations(range(n), r))
    Em = list(itertools.combinations(range(m), r))
    return En, Em


def _sym_orderings(fac):
    """All mult! orderings of the Sym-slot tuple, each with weight 1/mult!."""
    mult = len(fac)
    if mult == 1:
        return [(tuple(fac), Fraction(1))]
    w = Fraction(1, _fact(mult))
    return [(perm, w) for perm in itertools.permutations(fac)]


def _wedge_vs_seq(I, seq, perm_map=None):
    """<wedge_I (normalized), tensor sequence seq> against a permutation
    pairing: (1/r!) * sign if sorted(mapped seq) == I, else 0."""
    r = len(I)
    mapped = [perm_map[i] for i in seq] if perm_map is not None else list(seq)
    srt = sorted(mapped)
    if tuple(srt) != tuple(I):
        return None
    # sign of the permutation sorting `mapped`
    sign = 1
    arr = list(mapped)
    for i in range(r):
        for j in range(r - 1 - i):
            if arr[j] > arr[j + 1]:
                arr[j], arr[j + 1] = arr[j + 1], arr[j]
                sign = -sign
    if len(set(arr)) != r:
        return None
    return Fraction(sign, _fact(r))


def pair_WU(space, w: TensorVector, u: TensorVector):
    """<w, u>_{W,U} for a Cauchy-component kernel tensor w (composite WVr
    factors) against a W-shaped tensor, leaving a canonical W~_tau tensor."""
    n = space.n
    m = w.dims["V+"]
    pa = partner_permutation(space)
    eu = u.texpand()
    factors = [(mult, int(b[2:])) for (mult, _s, b) in w.shape]
    tables = {r: _composite_tables(n, m, r) for (_mu, r) in factors}
    out = {}
    out_shape = tuple((mult, r, "V+") for (mult, r) in factors)
    for dkey, dc in w.terms.items():
        # dkey: per factor a sym-sorted tuple of wedge-1 tuples (code,)
        fac_orderings = []
        for fac in dkey:
            codes = tuple(wd[0] for wd in fac)
            fac_orderings.append(_sym_orderings(codes))
        for combo in itertools.product(*fac_orderings):
            weight = Fraction(1)
            orderings = []
            for perm, wgt in combo:
                weight *= wgt
                orderings.append(perm)
            for fkey, fc in eu.items():
                val = dc.scale(weight) * fc
                pos = 0
                vkey = []
                dead = False
                for (mult, r), order in zip(factors, orderings):
                    En, Em = tables[r]
                    jslots = []
                    for code in order:
                        I = En[code // len(Em)]
                        J = Em[code % len(Em)]
                        block = fkey[pos: pos + r]
                        pos += r
                        cf = _wedge_vs_seq(I, block, perm_map=pa)
                        if cf is None:
                            dead = True
                            break
                        if cf != Fraction(1, _fact(r)):
                            val = val.scale(cf * _fact(r))
                        jslots.append(J)
                    if dead:
                        break
                    val = val.scale(Fraction(1, _fact(r) ** mult))
                    vkey.append(tuple(sorted(jslots)))
                if dead or not val:
                    continue
                k = tuple(vkey)
                x = out.get(k)
                x = val if x is None else x + val
                if x:
                    out[k] = x
                elif k in out:
                    del out[k]
    return TensorVector(out_shape, {"V+": m}, out)


def pair_WV(space, w: TensorVector, v: TensorVector):
    """<w, v>_{W,V} for a Cauchy-component kernel tensor against a V--shaped
    tensor, leaving a canonical W~_lambda tensor."""
    n = space.n
    m = w.dims["V+"]
    ev = v.texpand()
    factors = [(mult, int(b[2:])) for (mult, _s, b) in w.shape]
    tables = {r: _composite_tables(n, m, r) for (_mu, r) in factors}
    out = {}
    out_shape = tuple((mult, r, "W") for (mult, r) in factors)
    for dkey, dc in w.terms.items():
        fac_orderings = []
        for fac in dkey:
            codes = tuple(wd[0] for wd in fac)
            fac_orderings.append(_sym_orderings(codes))
        for combo in itertools.product(*fac_orderings):
            weight = Fraction(1)
            orderings = []
            for perm, wgt in combo:
                weight *= wgt
                orderings.append(perm)
            for fkey, fc in ev.items():
                val = dc.scale(weight) * fc
                pos = 0
                ikey = []
                dead = False
                for (mult, r), order in zip(factors, orderings):
                    En, Em = tables[r]
                    islots = []
                    for code in order:
                        I = En[code // len(Em)]
                        J = Em[code % len(Em)]
                        block = fkey[pos: pos + r]
                        pos += r
                        cf = _wedge_vs_seq(J, block)
                        if cf is None:
                            dead = True
                            break
                        if cf != Fraction(1, _fact(r)):
                            val = val.scale(cf * _fact(r))
                        islots.append(I)
                    if dead:
                        break
                    val = val.scale(Fraction(1, _fact(r) ** mult))
                    ikey.append(tuple(sorted(islots)))
                if dead or not val:
                    continue
                k = tuple(ikey)
                x = out.get(k)
                x = val if x is None else x + val
                if x:
                    out[k] = x
                elif k in out:
                    del out[k]
    return TensorVector(out_shape, {"W": n}, out)


def pairing(kind, space, a, b):
    """Spec-level dispatcher for the four pairings."""
    if kind == "U":
        return pair_U(space, a, b)
    if kind == "V":
        return pair_V(a, b)
    if kind == "WU":
        return pair_WU(space, a, b)
    if kind == "WV":
        return pair_WV(space, a, b)
    raise RepsError(f"unknown pairing kind {kind}")


# ---------------------------------------------------------------------------
# distinguished vectors


def highest_weight_vector(w: Weight, space: OrthogonalSpace):
    n = space.n
    tag = w.case_tag(n)
    shape = tuple((r, s, "W") for (r, s) in w.shape(n))
    dims = {"W": n}
    if not shape:
        return TensorVector((), dims, {(): ExactScalar.one()})
    slots = []
    if tag == "case2":
        slots.append([tuple(range(n))])
    else:
        for (r, s, _b) in shape:
            slots.append([tuple(range(s))] * r)
    return TensorVector.monomial(shape, dims, slots)


def v_tau_vector(tau, m):
    parts = list(tau) + [0]
    shape = []
    slots = []
    for i in range(1, len(tau) + 1):
        r = parts[i - 1] - parts[i]
        if r > 0:
            shape.append((r, i, "V+"))
            slots.append([tuple(range(i))] * r)
    if not shape:
        return TensorVector((), {"V+": m}, {(): ExactScalar.one()})
    return TensorVector.monomial(tuple(shape), {"V+": m}, slots)


def v_tau_dual_vector(tau, m):
    """Dual generator, scaled so that <v_tau, v_tau_dual>_V == 1 exactly.

    The scaling is a product of factorials of wedge sizes, a p-unit for
    every admissible p."""
    parts = list(tau) + [0]
    shape = []
    slots = []
    for i in range(1, len(tau) + 1):
        r = parts[i - 1] - parts[i]
        if r > 0:
            shape.append((r, i, "V-"))
            slots.append([tuple(range(i))] * r)
    if not shape:
        return TensorVector((), {"V-": m}, {(): ExactScalar.one()})
    raw = TensorVector.monomial(tuple(shape), {"V-": m}, slots)
    vt = v_tau_vector(tau, m)
    val = pair_V(vt, raw).as_fraction()
    return raw.scale(Fraction(1, 1) / val)


def wlambda_basis(w: Weight, space: OrthogonalSpace):
    """Canonical basis monomial keys of the ambient W~_lambda shape."""
    n = space.n
    shape = tuple((r, s, "W") for (r, s) in w.shape(n))
    keys = [()]
    for (r, s, _b) in shape:
        wedges = list(itertools.combinations(range(n), s))
        packs = list(itertools.combinations_with_replacement(wedges, r))
        keys = [k + (p,) for k in keys for p in packs]
    return shape, keys


def gram_of_lattice_pairing(w: Weight, space: OrthogonalSpace, ctx):
    """Valuation of det of the U-pairing Gram on the canonical ambient basis.

    Returns (valuation, diagnostics); diagnostics flag a violated large-p
    assumption but the determinant is still computed."""
    diags = w.validate_assumption(ctx.p, space)
    shape, keys = wlambda_basis(w, space)
    dims = {"W": space.n}
    basis = []
    for k in keys:
        t = TensorVector(shape, dims, {k: ExactScalar.one()})
        if space.nr:
            # express in the paper's basis: the odd slot is E_n, which is
            # sqrt(delta_n) times the normalized slot vector
            cnt = sum(list(wdg).count(space.n - 1) for fac in k for wdg in fac)
            if cnt:
                t = t.scale(ExactScalar.sqrt(space.deltas[-1]) ** cnt)
        basis.append(t)
    G = [[pair_U(space, x, y) for y in basis] for x in basis]
    d = linalg.det(G) if basis else ExactScalar.one()
    if d.is_zero():
        raise RepsError("degenerate ambient Gram")
    return ctx.padic_valuation(d), diags


# ---------------------------------------------------------------------------
# algebraic modular forms (class number one)


class AlgebraicModularForm:
    """A weight-lambda form determined by its single class value f(1)."""

    def __init__(self, space: OrthogonalSpace, weight: Weight, f1: TensorVector,
                 check=True):
        self.space = space
        self.weight = weight
        self.f1 = f1
        if check and not f1.is_zero():
            for g in space.automorphisms():
                M = space.act_split(g)
                if group_act({"W": M}, f1) != f1:
                    raise RepsError("value not invariant under H(Z)")

    @staticmethod
    def average(space: OrthogonalSpace, weight: Weight, seed: TensorVector):
        """H(Z)-average of a seed tensor (zero average is possible)."""
        total = None
        for g in space.automorphisms():
            M = space.act_split(g)
            img = group_act({"W": M}, seed)
            total = img if total is None else total + img
        return AlgebraicModularForm(space, weight, total, check=True)

    @staticmethod
    def spanning_invariant(space, weight, normalize_primitive_at=None):
        """First nonzero H(Z)-average over the canonical basis monomials,
        optionally scaled to make the value p-primitive."""
        shape, keys = wlambda_basis(weight, space)
        dims = {"W": space.n}
        hw = highest_weight_vector(weight, space)
        candidates = [hw] + [TensorVector(shape, dims, {k: ExactScalar.one()})
                             for k in keys]
        for seed in candidates:
            f = AlgebraicModularForm.average(space, weight, seed)
            if not f.f1.is_zero():
                if normalize_primitive_at is not None:
                    f = f.normalized_primitive(normalize_primitive_at)
                return f
        raise RepsError("no nonzero invariant vector in the ambient space")

    def normalized_primitive(self, ctx):
        vals = [ctx.padic_valuation(c) for c in self.f1.terms.values()]
        vmin = min(vals)
        scale = ExactScalar.rational(Fraction(1, ctx.p ** vmin)) if vmin >= 0 \
            else ExactScalar.rational(ctx.p ** (-vmin))
        return AlgebraicModularForm(self.space, self.weight,
                                    self.f1.scale(scale), check=False)

    def is_p_integral(self, ctx):
        return all(ctx.padic_valuation(c) >= 0 for c in self.f1.terms.values())

    def scale(self, c):
        return AlgebraicModularForm(self.space, self.weight, self.f1.scale(c),
                                    check=False)
