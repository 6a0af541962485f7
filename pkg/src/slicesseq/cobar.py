"""Ext over the Brown-Peterson Hopf algebroid via the reduced cobar complex.

Everything is computed exactly, per prime, in a truncation window: Hazewinkel
generators v_i, cobar variables t_i, the right unit and the diagonal are
produced from the usual logarithm recursions with rational coefficients and
asserted p-integral.  Homology of the integer differentials is taken by Smith
normal form and only p-primary parts are reported.

Degrees are halved throughout: Ext^{s,2T} is indexed here by (s, T), and
|v_i| = |t_i| = p^i - 1 in half-degrees.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from math import gcd

from .abelian import FinAbGroup, GroupMap, IntMatrix, homology_at
from .errors import MissingPrime, OutOfWindow, WindowTooSmall

DEFAULT_PRIMES = (2, 3, 5, 7)
DEFAULT_TMAX = 8
DEFAULT_SMAX = 10
CACHE_VERSION = "slicesseq ext-cache v1 (hazewinkel, appendix-naming v1)"


def _is_prime(n):
    if n < 2:
        return False
    d = 2
    while d * d <= n:
        if n % d == 0:
            return False
        d += 1
    return True


@dataclass(frozen=True)
class TruncationWindow:
    """Computation window: Ext^{s,2t} for t <= t_max, s <= s_max."""

    p: int
    t_max: int = DEFAULT_TMAX
    s_max: int = DEFAULT_SMAX

    def __post_init__(self):
        if not _is_prime(self.p):
            raise ValueError(f"{self.p} is not prime")
        if self.t_max < 0 or self.s_max < self.t_max:
            raise ValueError("need s_max >= t_max >= 0 to see the vanishing line")

    @property
    def ngens(self):
        """Number of v/t generators with half-degree p^i - 1 inside the window."""
        n = 0
        while self.p ** (n + 1) - 1 <= self.t_max:
            n += 1
        return n


# ---------------------------------------------------------------------------
# polynomial scratchpads: keys are exponent tuples, values Fractions


def _trim(t):
    i = len(t)
    while i and t[i - 1] == 0:
        i -= 1
    return tuple(t[:i])


def _mono_mul(a, b):
    if len(a) < len(b):
        a, b = b, a
    out = list(a)
    for i, e in enumerate(b):
        out[i] += e
    return _trim(out)


def _halfdeg(mono, p):
    return sum(e * (p ** (i + 1) - 1) for i, e in enumerate(mono))


class BPPoly:
    """Truncated polynomial in v_1.. and t_1.. with exact coefficients.

    Monomial keys are pairs (v_exponents, t_exponents); coefficients are
    Fractions during structure-map construction and plain ints afterwards.
    Monomials above half-degree `cap` are dropped (never wrapped)."""

    __slots__ = ("p", "cap", "terms")

    def __init__(self, p, cap, terms=None):
        self.p = p
        self.cap = cap
        self.terms = dict(terms or {})

    @classmethod
    def zero(cls, p, cap):
        return cls(p, cap)

    @classmethod
    def const(cls, p, cap, c=1):
        return cls(p, cap, {((), ()): Fraction(c)})

    @classmethod
    def var_v(cls, p, cap, i):
        key = (_trim([0] * (i - 1) + [1]), ())
        return cls(p, cap, {key: Fraction(1)}) if p ** i - 1 <= cap else cls(p, cap)

    @classmethod
    def var_t(cls, p, cap, i):
        key = ((), _trim([0] * (i - 1) + [1]))
        return cls(p, cap, {key: Fraction(1)}) if p ** i - 1 <= cap else cls(p, cap)

    def degree_of(self, key):
        vm, tm = key
        return _halfdeg(vm, self.p) + _halfdeg(tm, self.p)

    def add(self, other):
        out = dict(self.terms)
        for k, c in other.terms.items():
            c2 = out.get(k, 0) + c
            if c2:
                out[k] = c2
            else:
                out.pop(k, None)
        return BPPoly(self.p, self.cap, out)

    def scale(self, c):
        if not c:
            return BPPoly(self.p, self.cap)
        return BPPoly(self.p, self.cap, {k: v * c for k, v in self.terms.items()})

    def mul(self, other):
        out = {}
        for (va, ta), ca in self.terms.items():
            da = _halfdeg(va, self.p) + _halfdeg(ta, self.p)
            for (vb, tb), cb in other.terms.items():
                if da + _halfdeg(vb, self.p) + _halfdeg(tb, self.p) > self.cap:
                    continue
                k = (_mono_mul(va, vb), _mono_mul(ta, tb))
                c = out.get(k, 0) + ca * cb
                if c:
                    out[k] = c
                else:
                    out.pop(k, None)
        return BPPoly(self.p, self.cap, out)

    def pow(self, e):
        out = BPPoly.const(self.p, self.cap)
        for _ in range(e):
            out = out.mul(self)
        return out

    def t_free_part(self):
        return BPPoly(
            self.p, self.cap, {k: c for k, c in self.terms.items() if not k[1]}
        )

    def sub(self, other):
        return self.add(other.scale(-1))

    def is_zero(self):
        return not self.terms

    def __eq__(self, other):
        return self.terms == other.terms

    def __repr__(self):
        def name(k):
            vm, tm = k
            parts = [f"v{i+1}^{e}" if e > 1 else f"v{i+1}" for i, e in enumerate(vm) if e]
            parts += [f"t{i+1}^{e}" if e > 1 else f"t{i+1}" for i, e in enumerate(tm) if e]
            return "*".join(parts) or "1"

        return " + ".join(f"{c}*{name(k)}" for k, c in sorted(self.terms.items())) or "0"


class _Tensor2:
    """Left-normalized element of (BP_*BP tensor BP_*BP) x Q:
    keys (v_mono, tL_mono, tR_mono), all coefficients at the far left."""

    __slots__ = ("p", "cap", "terms")

    def __init__(self, p, cap, terms=None):
        self.p = p
        self.cap = cap
        self.terms = dict(terms or {})

    def _deg(self, key):
        vm, tl, tr = key
        return _halfdeg(vm, self.p) + _halfdeg(tl, self.p) + _halfdeg(tr, self.p)

    def add_term(self, key, c):
        if not c:
            return
        c2 = self.terms.get(key, 0) + c
        if c2:
            self.terms[key] = c2
        else:
            self.terms.pop(key, None)

    def add(self, other):
        out = _Tensor2(self.p, self.cap, self.terms)
        out.terms = dict(self.terms)
        for k, c in other.terms.items():
            out.add_term(k, c)
        return out

    def scale_poly(self, poly):
        """Left multiplication by a v-only BPPoly."""
        out = _Tensor2(self.p, self.cap)
        for (vm, tm), c in poly.terms.items():
            assert not tm
            for (v2, tl, tr), c2 in self.terms.items():
                key = (_mono_mul(vm, v2), tl, tr)
                if self._deg(key) <= self.cap:
                    out.add_term(key, c * c2)
        return out

    def mul(self, other):
        out = _Tensor2(self.p, self.cap)
        for ka, ca in self.terms.items():
            for kb, cb in other.terms.items():
                key = tuple(_mono_mul(x, y) for x, y in zip(ka, kb))
                if self._deg(key) <= self.cap:
                    out.add_term(key, ca * cb)
        return out

    def pow(self, e):
        out = _Tensor2(self.p, self.cap, {((), (), ()): Fraction(1)})
        for _ in range(e):
            out = out.mul(self)
        return out


class BPStructure:
    """Structure maps of (BP_*, BP_*BP) for one prime in one window."""

    def __init__(self, window: TruncationWindow):
        self.window = window
        self.p = window.p
        self.cap = window.t_max
        self.n = window.ngens
        self._m_as_v = self._hazewinkel_m()
        self._eta_r_v = self._right_units()
        self._delta_t = self._diagonals()
        self._eta_r_cache = {}
        self._delta_cache = {}

    # -- logarithm bookkeeping -------------------------------------------
    def _hazewinkel_m(self):
        """m_n expressed as a Q-polynomial in the v_i (p*m_n = sum m_i v_{n-i}^{p^i})."""
        p, cap = self.p, self.cap
        ms = [BPPoly.const(p, cap)]
        for n in range(1, self.n + 1):
            acc = BPPoly.zero(p, cap)
            for i in range(0, n):
                acc = acc.add(ms[i].mul(BPPoly.var_v(p, cap, n - i).pow(p ** i)))
            ms.append(acc.scale(Fraction(1, p)))
        return ms

    def _right_units(self):
        """eta_R(v_n) in the v/t basis, asserted p-integral."""
        p, cap = self.p, self.cap
        eta_m = [BPPoly.const(p, cap)]
        for n in range(1, self.n + 1):
            acc = BPPoly.zero(p, cap)
            for i in range(0, n + 1):
                # m_i t_{n-i}^{p^i}; t_0 = 1
                mi = self._m_as_v[i]
                if n - i == 0:
                    acc = acc.add(mi)
                else:
                    acc = acc.add(mi.mul(BPPoly.var_t(p, cap, n - i).pow(p ** i)))
            eta_m.append(acc)
        out = [None]
        for n in range(1, self.n + 1):
            # p*eta(m_n) = sum_{i<n} eta(m_i) * eta(v_{n-i})^{p^i}
            acc = eta_m[n].scale(p)
            for i in range(1, n):
                acc = acc.sub(eta_m[i].mul(out[n - i].pow(p ** i)))
            out.append(acc)
            self._assert_p_integral(acc, f"eta_R(v_{n})")
        return out

    def _diagonals(self):
        """Delta(t_n) as left-normalized two-tensors, asserted p-integral."""
        p, cap = self.p, self.cap
        unit = _Tensor2(p, cap, {((), (), ()): Fraction(1)})
        out = [unit]
        for n in range(1, self.n + 1):
            acc = _Tensor2(p, cap)
            for a in range(0, n + 1):
                ma = self._m_as_v[a]
                for b in range(0, n - a + 1):
                    c = n - a - b
                    tl = _trim([0] * (b - 1) + [p ** a]) if b else ()
                    tr = _trim([0] * (c - 1) + [p ** (a + b)]) if c else ()
                    for (vm, tm), q in ma.terms.items():
                        key = (vm, tl, tr)
                        if acc._deg(key) <= cap:
                            acc.add_term(key, q)
            for i in range(1, n + 1):
                sub = out[n - i].pow(p ** i).scale_poly(self._m_as_v[i])
                acc = acc.add(_Tensor2(p, cap, {k: -c for k, c in sub.terms.items()}))
            out.append(acc)
            for k, c in acc.terms.items():
                self._assert_frac(c, f"Delta(t_{n})")
        return out

    def _assert_p_integral(self, poly, what):
        for c in poly.terms.values():
            self._assert_frac(c, what)

    def _assert_frac(self, c, what):
        if c.denominator % self.p == 0:
            raise WindowTooSmall(f"{what} failed p-integrality in the window")

    # -- cached monomial-level maps --------------------------------------
    def eta_r(self, vmono):
        """eta_R(v^vmono) as a BPPoly (left coefficients in v, content in t)."""
        if vmono in self._eta_r_cache:
            return self._eta_r_cache[vmono]
        out = BPPoly.const(self.p, self.cap)
        for i, e in enumerate(vmono):
            for _ in range(e):
                out = out.mul(self._eta_r_v[i + 1])
        self._eta_r_cache[vmono] = out
        return out

    def delta(self, tmono):
        """Delta(t^tmono) as a left-normalized two-tensor."""
        if tmono in self._delta_cache:
            return self._delta_cache[tmono]
        out = _Tensor2(self.p, self.cap, {((), (), ()): Fraction(1)})
        for i, e in enumerate(tmono):
            if e:
                out = out.mul(self._delta_t[i + 1].pow(e))
        self._delta_cache[tmono] = out
        return out

    def delta_reduced(self, tmono):
        """Terms of Delta with both tensor slots nontrivial."""
        out = {}
        for (vm, tl, tr), c in self.delta(tmono).terms.items():
            if tl and tr:
                out[(vm, tl, tr)] = c
        return out

    def check_coassociativity(self):
        """(Delta x 1)Delta = (1 x Delta)Delta on every t_i in the window."""
        for i in range(1, self.n + 1):
            left = {}
            right = {}
            for (vm, tl, tr), c in self.delta_of_var(i).items():
                # (Delta x 1): expand the left slot; coefficients stay far left
                for (vm2, a, b), c2 in self.delta(tl).terms.items():
                    key = (_mono_mul(vm, vm2), a, b, tr)
                    if self._deg3(key) <= self.cap:
                        left[key] = left.get(key, 0) + c * c2
                # (1 x Delta): expand the right slot; its coefficient crosses tl
                for (vm2, a, b), c2 in self.delta(tr).terms.items():
                    crossed = self.eta_r(vm2).mul(
                        BPPoly(self.p, self.cap, {((), tl): Fraction(1)})
                    )
                    for (vm3, tl3), c3 in crossed.terms.items():
                        key = (_mono_mul(vm, vm3), tl3, a, b)
                        if self._deg3(key) <= self.cap:
                            right[key] = right.get(key, 0) + c * c2 * c3
            left = {k: c for k, c in left.items() if c}
            right = {k: c for k, c in right.items() if c}
            if left != right:
                raise WindowTooSmall(f"coassociativity fails for t_{i} in window")
        return True

    def delta_of_var(self, i):
        return dict(self._delta_t[i].terms)

    def _deg3(self, key):
        vm = key[0]
        return _halfdeg(vm, self.p) + sum(_halfdeg(t, self.p) for t in key[1:])


def right_unit(p, window: TruncationWindow = None):
    """eta_R on the Hazewinkel generators: {i: eta_R(v_i)} as BPPoly."""
    window = window or TruncationWindow(p)
    st = _structure(window)
    return {i: st._eta_r_v[i] for i in range(1, st.n + 1)}


@lru_cache(maxsize=None)
def _structure(window: TruncationWindow):
    st = BPStructure(window)
    st.check_coassociativity()
    return st


# ---------------------------------------------------------------------------
# the reduced cobar complex


def _v_monomials(p, d, nvars):
    """All v-exponent tuples of half-degree exactly d."""
    out = []

    def rec(i, rem, cur):
        if i == nvars:
            if rem == 0:
                out.append(_trim(cur))
            return
        w = p ** (i + 1) - 1
        for e in range(rem // w + 1):
            rec(i + 1, rem - e * w, cur + [e])

    rec(0, d, [])
    return out


def _t_monomials(p, d, nvars):
    return [m for m in _v_monomials(p, d, nvars)] if d >= 0 else []


class CobarColumn:
    """The reduced cobar complex of BP in one internal degree 2T.

    bases[s]: ordered monomial basis of C^s; diff[s]: integer matrix of
    d: C^s -> C^{s+1} (rows = target basis) with denominators cleared."""

    def __init__(self, window: TruncationWindow, T):
        if T > window.t_max:
            raise OutOfWindow(f"T={T} above window t_max={window.t_max}")
        self.window = window
        self.T = T
        self.p = window.p
        self.st = _structure(window)
        self.smax = window.s_max + 1  # one extra column so H^{s_max} is honest
        self.bases = [self._basis(s) for s in range(self.smax + 1)]
        self.index = [
            {key: i for i, key in enumerate(basis)} for basis in self.bases
        ]
        self.diff = [self._matrix(s) for s in range(self.smax)]
        self._check_dd()

    def _basis(self, s):
        p, T, n = self.p, self.T, self.window.ngens
        out = []

        def rec(rem, slots):
            if len(slots) == s:
                if rem >= 0:
                    for vm in _v_monomials(p, rem, n):
                        out.append((vm, tuple(slots)))
                return
            for d in range(1, rem + 1):
                for tm in _t_monomials(p, d, n):
                    if tm:
                        rec(rem - d, slots + [tm])

        rec(T, [])
        out.sort()
        return out

    def _normalize(self, coef, vmono, slots):
        """Left-normalize a raw term: slots may carry v-coefficients as
        (v_mono, t_mono) pairs; returns {(vmono, slots): Fraction}."""
        terms = {(vmono, tuple(slots)): coef}
        # walk right to left moving v-content into the far-left coefficient
        s = len(slots)
        for i in range(s - 1, -1, -1):
            new_terms = {}
            for (vm, sl), c in terms.items():
                slot = sl[i]
                if isinstance(slot, tuple) and slot and isinstance(slot[0], tuple):
                    # (v_part, t_part) pending pair
                    vpart, tpart = slot
                else:
                    vpart, tpart = (), slot
                if not tpart:
                    continue  # a unit slot: degenerate, dies in the reduced complex
                if not vpart:
                    key = (vm, sl[:i] + (tpart,) + sl[i + 1:])
                    new_terms[key] = new_terms.get(key, 0) + c
                    continue
                if i == 0:
                    key = (_mono_mul(vm, vpart), (tpart,) + sl[1:])
                    if self._degkey(key) <= self.window.t_max:
                        new_terms[key] = new_terms.get(key, 0) + c
                    continue
                # multiply slot i-1 by eta_R(v^vpart), splitting into monomials
                prev = sl[i - 1]
                pv, pt = (prev if prev and isinstance(prev[0], tuple) else ((), prev))
                crossed = self.st.eta_r(vpart).mul(
                    BPPoly(self.p, self.window.t_max, {(pv, pt): Fraction(1)})
                )
                for (nv, nt), c2 in crossed.terms.items():
                    nsl = sl[:i - 1] + ((nv, nt), tpart) + sl[i + 1:]
                    key = (vm, nsl)
                    new_terms[key] = new_terms.get(key, 0) + c * c2
            terms = new_terms
        out = {}
        for (vm, sl), c in terms.items():
            if not c:
                continue
            key = (vm, sl)
            if self._degkey(key) == self.T:
                out[key] = out.get(key, 0) + c
        return out

    def _degkey(self, key):
        vm, sl = key
        return _halfdeg(vm, self.p) + sum(_halfdeg(t, self.p) for t in sl)

    def _differential_of(self, key):
        """d of a basis element as {basis_key: Fraction}."""
        vm, slots = key
        s = len(slots)
        acc = {}

        def addall(d, sign=1):
            for k, c in d.items():
                c2 = acc.get(k, 0) + sign * c
                if c2:
                    acc[k] = c2
                else:
                    acc.pop(k, None)

        # face 0: the reduced right unit lands in slot 0
        eta = self.st.eta_r(vm).sub(BPPoly(self.p, self.window.t_max,
                                           {(vm, ()): Fraction(1)}))
        for (nv, nt), c in eta.terms.items():
            if not nt:
                continue
            key0 = (nv, (nt,) + slots)
            if self._degkey(key0) == self.T:
                acc[key0] = acc.get(key0, 0) + c
        # middle faces: reduced diagonal in slot i (1-based sign convention)
        for i in range(s):
            sign = -1 if (i + 1) % 2 else 1
            for (cv, tl, tr), c in self.st.delta_reduced(slots[i]).items():
                raw_slots = slots[:i] + ((cv, tl), tr) + slots[i + 1:]
                addall(self._normalize(c, vm, raw_slots), sign)
        return acc

    def _matrix(self, s):
        src = self.bases[s]
        tgt_index = self.index[s + 1]
        rows = len(self.bases[s + 1])
        cols = len(src)
        m = [[Fraction(0)] * cols for _ in range(rows)]
        for j, key in enumerate(src):
            for k2, c in self._differential_of(key).items():
                m[tgt_index[k2]][j] = c
        # clear the (p-coprime) common denominator; p-parts are unaffected
        den = 1
        for row in m:
            for c in row:
                den = den * c.denominator // gcd(den, c.denominator)
        if den % self.p == 0:
            raise WindowTooSmall("differential not p-integral")
        return [[int(c * den) for c in row] for row in m]

    def _check_dd(self):
        from .abelian import _mat_mul

        for s in range(self.smax - 1):
            prod = _mat_mul(self.diff[s + 1], self.diff[s])
            if any(any(row) for row in prod):
                raise AssertionError(f"cobar d.d != 0 at (s={s}, T={self.T})")

    def _diag(self, s):
        """Cached invariant-factor diagonal of d_s."""
        if not hasattr(self, "_diag_cache"):
            self._diag_cache = {}
        if s not in self._diag_cache:
            from ._snf import snf_diagonal

            m = self.diff[s]
            if not m or not m[0]:
                self._diag_cache[s] = []
            else:
                self._diag_cache[s] = snf_diagonal(m)
        return self._diag_cache[s]

    def group_at(self, s):
        """(free_rank, torsion) of H^s: the complex is free, so the torsion
        is read off the invariant factors of the incoming differential."""
        n = len(self.bases[s])
        if n == 0:
            return 0, []
        rank_out = sum(1 for d in self._diag(s) if d) if s < self.smax else 0
        rank_in = sum(1 for d in self._diag(s - 1) if d) if s >= 1 else 0
        free = n - rank_out - rank_in
        torsion = [d for d in (self._diag(s - 1) if s >= 1 else []) if d not in (0, 1)]
        return free, torsion

    def homology(self, s):
        """HomologyResult of ker(d_s)/im(d_{s-1}) over Z (before p-localizing)."""
        dim = len(self.bases[s])
        free = FinAbGroup(dim) if dim else FinAbGroup.zero()
        prev = FinAbGroup(len(self.bases[s - 1])) if s else FinAbGroup.zero()
        nxt = FinAbGroup(len(self.bases[s + 1])) if s < self.smax else FinAbGroup.zero()
        d_in = (
            GroupMap(prev, free, IntMatrix(self.diff[s - 1], ncols=prev.ngens))
            if s
            else GroupMap.zero(FinAbGroup.zero(), free)
        )
        d_out = (
            GroupMap(free, nxt, IntMatrix(self.diff[s], ncols=dim))
            if s < self.smax
            else GroupMap.zero(free, FinAbGroup.zero())
        )
        return homology_at(d_in, d_out)


def cobar_complex(p, window: TruncationWindow = None):
    """All columns T = 0..t_max as CobarColumn objects, keyed by T."""
    window = window or TruncationWindow(p)
    return {T: CobarColumn(window, T) for T in range(window.t_max + 1)}


# ---------------------------------------------------------------------------
# Ext groups, names, products


def _p_part(n, p):
    out = 1
    while n % p == 0:
        n //= p
        out *= p
    return out


@dataclass
class ExtGroup:
    p: int
    s: int
    t: int
    group: FinAbGroup
    names: tuple


def _appendix_name(p, s, t, order_list):
    """Generator names following the alpha-family conventions; systematic
    g_{s,t,i} labels wherever no formula applies."""
    if s == 0 and t == 0:
        return ("1",)
    if p == 2:
        if s == 1:
            if t % 4 in (1, 3):
                return (f"alpha_{t}",)
            if t == 2:
                return ("alpha_{2/2}",)
            n = 2
            tt = t
            while tt % 2 == 0:
                tt //= 2
                n += 1
            return (f"alpha_{{{t}/{n}}}",)
        if s >= 1 and t == s:
            return (f"alpha_1^{s}",)
        if (s, t) == (2, 4) and len(order_list) == 2:
            return ("alpha_1 alpha_3", "beta_{2/2}")
        u = t - s
        if 2 <= u <= 6 and len(order_list) == 1 and order_list[0] == 2:
            base = _appendix_name(p, 1, u + 1, [0])[0]
            return (f"alpha_1^{s-1} {base}",) if s > 1 else (base,)
    else:
        if s == 1 and t % (p - 1) == 0:
            k = t // (p - 1)
            n = 0
            kk = k
            while kk % p == 0:
                kk //= p
                n += 1
            return (f"alpha_{{{k}/{n}}}" if n else f"alpha_{k}",)
        if s >= 1 and t == s * (p - 1) and len(order_list) == 1:
            return (f"alpha_1^{s}",)
    return tuple(f"g_{{{s},{t},{i}}}" for i in range(len(order_list)))


class ExtTable:
    """Cache of Ext^{s,2t} per prime plus alpha_1 multiplication data at p=2."""

    def __init__(self, windows):
        self.windows = {w.p: w for w in windows}
        self._columns = {}
        self._groups = {}
        self._alpha1 = {}

    @classmethod
    def default(cls, primes=DEFAULT_PRIMES, t_max=DEFAULT_TMAX, s_max=DEFAULT_SMAX):
        return cls([TruncationWindow(p, t_max, s_max) for p in primes])

    def column(self, p, T):
        if p not in self.windows:
            raise MissingPrime(f"no window for prime {p}")
        key = (p, T)
        if key not in self._columns:
            self._columns[key] = CobarColumn(self.windows[p], T)
        return self._columns[key]

    def ext_bp(self, p, s, t):
        """Ext^{s,2t} over BP at p, as an ExtGroup with named generators."""
        if p not in self.windows:
            raise MissingPrime(f"no window for prime {p}")
        w = self.windows[p]
        if t > w.t_max or s > w.s_max or s < 0 or t < 0:
            raise OutOfWindow(f"(s={s}, t={t}) outside window of p={p}")
        key = (p, s, t)
        if key in self._groups:
            return self._groups[key]
        if t == 0:
            grp = FinAbGroup(1, (), ("1",)) if s == 0 else FinAbGroup.zero()
            eg = ExtGroup(p, s, t, grp, ("1",) if s == 0 else ())
            self._groups[key] = eg
            return eg
        free, torsion = self.column(p, t).group_at(s)
        if free:
            raise AssertionError(f"Ext^{s},{2*t} at p={p} has free part")
        orders = [_p_part(f, p) for f in torsion]
        orders = [o for o in orders if o > 1]
        names = _appendix_name(p, s, t, orders)
        grp = FinAbGroup.from_orders(orders, list(names))
        eg = ExtGroup(p, s, t, grp, names)
        self._groups[key] = eg
        return eg

    def ext_mu(self, s, t):
        """Ext^{s,2t} over MU_*MU: direct sum of the per-prime groups."""
        if t == 0:
            grp = FinAbGroup(1, (), ("1",)) if s == 0 else FinAbGroup.zero()
            return ExtGroup(0, s, t, grp, grp.generators if s == 0 else ())
        needed = [p for p in range(2, t + 2) if _is_prime(p) and t % (p - 1) == 0]
        for p in needed:
            if p not in self.windows:
                raise MissingPrime(
                    f"prime {p} contributes in degree 2t={2*t} but has no window"
                )
        total = FinAbGroup.zero()
        names = []
        for p in needed:
            eg = self.ext_bp(p, s, t)
            if not eg.group.is_zero():
                total = total.direct_sum(eg.group)
                names.extend(f"{nm}[p={p}]" if len(needed) > 1 else nm for nm in eg.names)
        if len(total.torsion) == 1 and len(names) > 1:
            # per-prime cyclic parts merged into one cyclic group
            names = [" + ".join(names)]
        grp = FinAbGroup.from_orders(total.gen_orders(), names)
        return ExtGroup(0, s, t, grp, tuple(names))

    # -- alpha_1 products at p = 2 ---------------------------------------
    def _alpha1_raw_cols(self, s, t):
        """alpha_1 product in raw homology coordinates (2-primary parts),
        one column per raw generator of Ext^{s,2t}."""
        w = self.windows.get(2)
        if w is None:
            raise MissingPrime("no window for prime 2")
        if t + 1 > w.t_max or s + 1 > w.s_max:
            raise OutOfWindow("alpha_1 product lands outside the window")
        src = self.ext_bp(2, s, t)
        tgt = self.ext_bp(2, s + 1, t + 1)
        if src.group.is_zero() or tgt.group.is_zero():
            return [[0] * tgt.group.ngens for _ in range(src.group.ngens)]
        col_src = self.column(2, t)
        col_tgt = self.column(2, t + 1)
        hsrc = col_src.homology(s)
        htgt = col_tgt.homology(s + 1)
        st = _structure(w)
        cols = []
        for k in range(src.group.ngens):
            cyc = hsrc.generator_cycle(k)
            out = {}
            for j, c in enumerate(cyc):
                if not c:
                    continue
                vm, slots = col_src.bases[s][j]
                # [t_1] | (v^vm g_1 | ... ): the coefficient crosses one slot
                crossed = st.eta_r(vm).mul(
                    BPPoly(2, w.t_max, {((), (1,)): Fraction(1)})
                )
                for (nv, nt), c2 in crossed.terms.items():
                    if not nt:
                        continue
                    key2 = (nv, (nt,) + slots)
                    if col_tgt._degkey(key2) == t + 1:
                        out[key2] = out.get(key2, 0) + c * c2
            vec = [0] * len(col_tgt.bases[s + 1])
            den = 1
            for c in out.values():
                den = den * c.denominator // gcd(den, c.denominator)
            if den % 2 == 0:
                raise WindowTooSmall("alpha_1 product not 2-integral")
            for key2, c in out.items():
                vec[col_tgt.index[s + 1][key2]] = int(c * den)
            coords = htgt.reduce_cycle(vec)
            # den is odd, hence a unit on 2-primary parts: divide it back out
            coords = _unscale_odd(coords, den, htgt.group)
            cols.append(self._project_p_part(coords, htgt.group, tgt.group))
        return cols

    def _rebase(self, s, t):
        """Reported-basis change at (2, s, 2t): T maps raw coordinates to
        reported ones.  Only Ext^{2,8} is rebased, so that its first
        generator is literally alpha_1 * alpha_3."""
        if (s, t) != (2, 4):
            return None
        key = ("rebase", s, t)
        if key in self._alpha1:
            return self._alpha1[key]
        raw = self._alpha1_raw_cols(1, 3)  # image of alpha_3
        v = [c % 2 for c in raw[0]]
        if v == [0, 0]:
            raise AssertionError("alpha_1 * alpha_3 vanished in Ext^{2,8}")
        # complete v to a basis of (Z/2)^2
        wvec = [1, 0] if v != [1, 0] else [0, 1]
        tinv = [[v[0], wvec[0]], [v[1], wvec[1]]]
        det = (tinv[0][0] * tinv[1][1] - tinv[0][1] * tinv[1][0]) % 2
        assert det == 1
        tmat = [[tinv[1][1] % 2, tinv[0][1] % 2], [tinv[1][0] % 2, tinv[0][0] % 2]]
        self._alpha1[key] = (tmat, tinv)
        return tmat, tinv

    def alpha1_matrix(self, s, t):
        """Matrix of alpha_1 * (-): Ext^{s,2t} -> Ext^{s+1,2t+2} at p=2, in
        the reported generator bases."""
        key = (s, t)
        if key in self._alpha1:
            return self._alpha1[key]
        src = self.ext_bp(2, s, t)
        tgt = self.ext_bp(2, s + 1, t + 1)
        cols = self._alpha1_raw_cols(s, t)
        reb_src = self._rebase(s, t)
        reb_tgt = self._rebase(s + 1, t + 1)
        if reb_src is not None:
            tinv = reb_src[1]
            n = src.group.ngens
            cols = [
                [sum(tinv[i][j] * cols[i][r] for i in range(n)) % 2 for r in range(tgt.group.ngens)]
                for j in range(n)
            ]
        if reb_tgt is not None:
            tmat = reb_tgt[0]
            n = tgt.group.ngens
            cols = [
                [sum(tmat[r][i] * col[i] for i in range(n)) % 2 for r in range(n)]
                for col in cols
            ]
        gm = GroupMap(
            src.group,
            tgt.group,
            IntMatrix(
                [[cols[j][i] for j in range(src.group.ngens)] for i in range(tgt.group.ngens)],
                ncols=src.group.ngens,
            ),
        )
        self._alpha1[key] = gm
        return gm

    def _project_p_part(self, coords, full, ppart, p=2):
        """Rewrite homology coordinates in the p-primary quotient."""
        out = []
        keepers = [i for i, f in enumerate(full.torsion) if _p_part(f, p) > 1]
        assert len(keepers) == ppart.ngens, "p-part projection mismatch"
        for i in keepers:
            pp = _p_part(full.torsion[i], p)
            out.append(coords[i] % pp)
        return out

    def alpha1_multiply(self, s, t, coords):
        """alpha_1 * x for x given in Ext^{s,2t}(p=2) generator coordinates."""
        gm = self.alpha1_matrix(s, t)
        return gm.apply(list(coords))


def _unscale_odd(coords, den, group):
    if den == 1:
        return coords
    out = []
    for c, f in zip(coords, group.torsion + (0,) * group.free_rank):
        if f:
            pp = _p_part(f, 2)
            odd = f // pp
            # invert den modulo the full factor is enough on the 2-part
            inv = pow(den % f, -1, f) if gcd(den, f) == 1 else None
            if inv is None:
                # den odd by construction: gcd with 2-part is 1; reduce there
                out.append((c * pow(den % pp, -1, pp)) % pp if pp > 1 else 0)
            else:
                out.append((c * inv) % f)
        else:
            if c % den:
                raise AssertionError("free coordinate not divisible by denominator")
            out.append(c // den)
    return out


def stable_tower_profile(u, table: ExtTable, p=2):
    """Observed alpha_1-tower behaviour of Ext^{s,2(s+u)} across the window.

    Returns (stable_value, onset, checked) where stable_value is the constant
    FinAbGroup observed from s = onset to the window top; raises Unstabilized
    when the top of the window still fluctuates."""
    from .errors import Unstabilized

    w = table.windows[p]
    rows = []
    for s in range(1, w.s_max + 1):
        t = s + u
        if t > w.t_max:
            break
        rows.append((s, table.ext_bp(p, s, t).group))
    if len(rows) < 2:
        raise Unstabilized(f"window too small to see the tower at u={u}")
    last = rows[-1][1]
    onset = None
    for s, g in rows:
        if (g.free_rank, g.torsion) == (last.free_rank, last.torsion):
            if onset is None:
                onset = s
        else:
            onset = None
    if onset is None or onset == rows[-1][0]:
        raise Unstabilized(f"tower at u={u} fluctuates at the window top")
    return last, onset, [s for s, _ in rows]


# ---------------------------------------------------------------------------
# cache persistence


def cache_path(cache_dir, primes, t_max, s_max):
    tag = "-".join(str(p) for p in primes)
    return os.path.join(cache_dir, f"ext_p{tag}_t{t_max}_s{s_max}.txt")


def save_table(table: ExtTable, path):
    lines = [f"# {CACHE_VERSION}"]
    for p, w in sorted(table.windows.items()):
        lines.append(f"window p={p} tmax={w.t_max} smax={w.s_max}")
    for p, w in sorted(table.windows.items()):
        for t in range(w.t_max + 1):
            for s in range(w.s_max + 1):
                eg = table.ext_bp(p, s, t)
                inv = ",".join(
                    ["0"] * eg.group.free_rank + [str(x) for x in eg.group.torsion]
                ) or "-"
                nm = ";".join(eg.names) or "-"
                lines.append(f"group p={p} s={s} t={t} inv={inv} gens={nm}")
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def load_table(path):
    """Load a cached table; returns None on version mismatch or absence."""
    if not os.path.exists(path):
        return None
    with open(path) as fh:
        lines = [ln.rstrip("\n") for ln in fh]
    if not lines or lines[0] != f"# {CACHE_VERSION}":
        return None
    windows = []
    groups = {}
    for ln in lines[1:]:
        if ln.startswith("window "):
            kv = dict(part.split("=") for part in ln.split()[1:])
            windows.append(
                TruncationWindow(int(kv["p"]), int(kv["tmax"]), int(kv["smax"]))
            )
        elif ln.startswith("group "):
            kv = dict(part.split("=", 1) for part in ln.split()[1:])
            p, s, t = int(kv["p"]), int(kv["s"]), int(kv["t"])
            orders = [] if kv["inv"] == "-" else [int(x) for x in kv["inv"].split(",")]
            names = () if kv["gens"] == "-" else tuple(kv["gens"].split(";"))
            grp = FinAbGroup.from_orders(orders, list(names))
            groups[(p, s, t)] = ExtGroup(p, s, t, grp, names)
    table = ExtTable(windows)
    table._groups.update(groups)
    return table
