"""Motivic cohomology groups of a base field and the operations between them.

Mod-2 groups live in the Milnor K-theory model: h^{p,q} = K^M_p/2 * tau^{q-p}
for 0 <= p <= q.  Squares act by the twisted Cartan rules
    Sq^1(x tau^k) = k rho x tau^{k-1},
    Sq^2(x tau^k) = C(k,2) rho^2 x tau^{k-1},      Sq^3 = Sq^1 Sq^2,
with Sq^2 vanishing on diagonal classes.  Mod-m groups (m != 2) are assembled
from the profile's integral components through the universal-coefficient
extension 0 -> H^{p,q}/m -> h_m^{p,q} -> (m-torsion of H^{p+1,q}) -> 0, and
the coefficient maps pr/inc/connecting act componentwise.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import gcd, prod

from .abelian import FinAbGroup
from .errors import ExactnessFailure, InsufficientProfileData
from .fields import FieldProfile


@dataclass(frozen=True)
class MotCohGroup:
    """One bidegree of motivic cohomology with Z/m (or integral) coefficients.

    basis: per cyclic piece a descriptor -
      ("km", label)        mod-2 Milnor class (x tau^{q-p} implicit)
      ("comp", i)          integral component i of H^{p,q}
      ("quo", i)           H^{p,q}/m image of component i
      ("tor", i)           m-torsion of component i of H^{p+1,q}
    orders: matching cyclic orders (0 = not finitely generated / free)."""

    profile: FieldProfile
    p: int
    q: int
    m: int
    basis: tuple
    orders: tuple
    names: tuple
    complete: bool = True

    @property
    def nbasis(self):
        return len(self.basis)

    def is_zero(self):
        return self.nbasis == 0

    def group(self):
        if not self.complete:
            raise InsufficientProfileData(
                f"H^({self.p},{self.q}) of {self.profile.name} is not finitely presented"
            )
        return FinAbGroup.from_orders(self.orders, list(self.names))

    def describe(self):
        if self.is_zero():
            return "0"
        if self.complete:
            return str(self.group())
        parts = [("Z" if o == 0 else f"Z/{o}") for o in self.orders]
        return " + ".join(parts) + " (+ divisible)"

    def zero_vector(self):
        return [0] * self.nbasis

    def reduce(self, vec):
        return [c % o if o else c for c, o in zip(vec, self.orders)]


def group(profile, p, q, m):
    """h_m^{p,q} (m >= 2), H^{p,q} (m = 0); zero outside 0 <= p <= q."""
    if p < 0 or q < 0 or p > q:
        return MotCohGroup(profile, p, q, m, (), (), ())
    if m == 2:
        labels = profile.km2_gens(p)
        names = tuple(lab if q == p else f"{lab}*tau^{q-p}" for lab in labels)
        return MotCohGroup(
            profile, p, q, 2, tuple(("km", lab) for lab in labels),
            (2,) * len(labels), names,
        )
    if m == 0:
        comps = profile.components_or_raise(p, q)
        basis, orders, names = [], [], []
        complete = True
        for i, c in enumerate(comps):
            basis.append(("comp", i))
            if c.kind == "Z":
                orders.append(0)
            elif c.kind == "ZN":
                orders.append(c.N)
            else:
                orders.append(0)
                complete = False
            names.append(c.label)
        return MotCohGroup(
            profile, p, q, 0, tuple(basis), tuple(orders), tuple(names), complete
        )
    comps = profile.components_or_raise(p, q)
    comps_up = profile.components_or_raise(p + 1, q)
    basis, orders, names = [], [], []
    for i, c in enumerate(comps):
        o = c.quo_order(m)
        if o > 1:
            basis.append(("quo", i))
            orders.append(o)
            names.append(f"{c.label}/{m}")
    for i, c in enumerate(comps_up):
        o = c.tor_order(m)
        if o > 1:
            basis.append(("tor", i))
            orders.append(o)
            names.append(f"{m}-tors({c.label})")
    return MotCohGroup(
        profile, p, q, m, tuple(basis), tuple(orders), tuple(names)
    )


def _decompose2(profile, p, q):
    """Identify the K^M/2 basis of h^{p,q} with its universal-coefficient
    parts: returns {label: descriptor} with descriptors as in MotCohGroup."""
    comps = profile.components_or_raise(p, q)
    comps_up = profile.components_or_raise(p + 1, q)
    out = {}
    for i, c in enumerate(comps):
        if c.quo_order(2) == 2:
            if c.quo2 is None:
                raise ExactnessFailure(
                    f"{profile.name}: component {c.label} at ({p},{q}) has mod-2 "
                    "reduction but no quo2 label"
                )
            if c.quo2 in out:
                raise ExactnessFailure(f"duplicate mod-2 label {c.quo2} at ({p},{q})")
            out[c.quo2] = ("quo", i)
    for i, c in enumerate(comps_up):
        if c.tor_order(2) == 2:
            if c.tor2 is None:
                raise ExactnessFailure(
                    f"{profile.name}: component {c.label} at ({p+1},{q}) has "
                    "2-torsion but no tor2 label"
                )
            if c.tor2 in out:
                raise ExactnessFailure(f"duplicate mod-2 label {c.tor2} at ({p},{q})")
            out[c.tor2] = ("tor", i)
    labels = set(profile.km2_gens(p)) if p <= q else set()
    if set(out) != labels:
        raise ExactnessFailure(
            f"{profile.name}: universal-coefficient parts at ({p},{q}) do not "
            f"match the K^M/2 basis ({sorted(out)} vs {sorted(labels)})"
        )
    return out


# ---------------------------------------------------------------------------
# operation expressions


ATOM_SHIFT = {
    "Sq1": (1, 0), "Sq2": (2, 1), "Sq3": (3, 1),
    "tau": (0, 1), "rho": (1, 1),
    "pr": (0, 0), "inc": (0, 0), "bock": (1, 0), "delta": (1, 0),
    "id": (0, 0),
}


@dataclass(frozen=True)
class OpExpr:
    """Formal integer combination of composable operation chains.

    terms: tuple of (coefficient, chain); a chain is a tuple of atoms applied
    right to left, each atom ("Sq2",), ("pr", m), ("inc", m), ("bock", m),
    ("tau",), ("rho",), ("delta",), ("id",)."""

    terms: tuple

    @classmethod
    def chain(cls, *atoms, coeff=1):
        return cls(((coeff, tuple(atoms)),))

    @classmethod
    def zero(cls):
        return cls(())

    def plus(self, other):
        return OpExpr(self.terms + other.terms)

    def scaled(self, c):
        if c == 0:
            return OpExpr.zero()
        return OpExpr(tuple((c * c0, ch) for c0, ch in self.terms))

    def describe(self):
        def at(a):
            if a[0] in ("pr", "inc", "bock"):
                return f"{a[0]}_{a[1]}"
            return a[0]

        parts = []
        for c, ch in self.terms:
            s = " ".join(at(a) for a in ch) or "id"
            parts.append(s if c == 1 else f"{c}*({s})")
        return " + ".join(parts) if parts else "0"


def atom_state(atom, state):
    """(p, q, m) after applying one atom to a group in the given state."""
    p, q, m = state
    kind = atom[0]
    dp, dq = ATOM_SHIFT[kind]
    if kind in ("Sq1", "Sq2", "Sq3", "tau", "rho"):
        if m != 2:
            raise ValueError(f"{kind} needs mod-2 coefficients, got m={m}")
        return (p + dp, q + dq, 2)
    if kind == "id":
        return state
    if kind == "pr":
        m2 = atom[1]
        if m != 0 and (m2 == 0 or m % m2):
            raise ValueError(f"pr_{m2} undefined from modulus {m}")
        return (p, q, m2)
    if kind == "inc":
        m2 = atom[1]
        if m == 0 or m2 % m:
            raise ValueError(f"inc_{m2} undefined from modulus {m}")
        return (p, q, m2)
    if kind == "bock":
        if m == 0:
            raise ValueError("connecting map needs finite coefficients")
        return (p + 1, q, atom[1])
    if kind == "delta":
        if m == 0:
            raise ValueError("delta needs finite coefficients")
        return (p + 1, q, 0)
    raise ValueError(f"unknown atom {atom!r}")


class RealizedMap:
    """A realized operation: columns over the source basis, entries over the
    target basis."""

    def __init__(self, src: MotCohGroup, tgt: MotCohGroup, cols=None):
        self.src = src
        self.tgt = tgt
        self.cols = cols if cols is not None else [tgt.zero_vector() for _ in range(src.nbasis)]

    def rows(self):
        return [
            [self.cols[j][i] for j in range(self.src.nbasis)]
            for i in range(self.tgt.nbasis)
        ]

    def is_zero(self):
        for col in self.cols:
            for c, o in zip(col, self.tgt.orders):
                if (o and c % o) or (not o and c):
                    return False
        return True

    def compose(self, first):
        out = RealizedMap(first.src, self.tgt)
        for j, col in enumerate(first.cols):
            acc = self.tgt.zero_vector()
            for t, c in enumerate(col):
                if c:
                    for i, c2 in enumerate(self.cols[t]):
                        acc[i] += c * c2
            out.cols[j] = self.tgt.reduce(acc)
        return out

    def add(self, other):
        out = RealizedMap(self.src, self.tgt)
        out.cols = [
            self.tgt.reduce([a + b for a, b in zip(c1, c2)])
            for c1, c2 in zip(self.cols, other.cols)
        ]
        return out

    def scale(self, c):
        out = RealizedMap(self.src, self.tgt)
        out.cols = [self.tgt.reduce([c * a for a in col]) for col in self.cols]
        return out

    def equal(self, other):
        if self.src.basis != other.src.basis or self.tgt.basis != other.tgt.basis:
            return False
        return self.add(other.scale(-1)).is_zero()


def _apply_atom(profile, atom, src: MotCohGroup) -> RealizedMap:
    kind = atom[0]
    p, q, m = src.p, src.q, src.m
    np_, nq, nm = atom_state(atom, (p, q, m))
    tgt = group(profile, np_, nq, nm)
    out = RealizedMap(src, tgt)
    if src.is_zero() or (kind != "delta" and tgt.is_zero()):
        return out
    tpos = {b: i for i, b in enumerate(tgt.basis)}

    def put(j, key, c):
        if key in tpos and c:
            out.cols[j][tpos[key]] += c

    if kind == "id":
        for j in range(src.nbasis):
            out.cols[j][j] = 1
        return out

    if kind in ("Sq1", "Sq2", "Sq3", "tau", "rho"):
        k = q - p
        for j, (_, lab) in enumerate(src.basis):
            if kind == "tau":
                put(j, ("km", lab), 1)
                continue
            if kind == "rho":
                for lab2, c in profile.rho_times(p, {lab: 1}).items():
                    put(j, ("km", lab2), c)
                continue
            if kind == "Sq1":
                if k % 2:
                    for lab2, c in profile.rho_times(p, {lab: 1}).items():
                        put(j, ("km", lab2), c)
                continue
            if kind == "Sq2":
                if (k * (k - 1) // 2) % 2:
                    once = profile.rho_times(p, {lab: 1})
                    for lab2, c in profile.rho_times(p + 1, once).items():
                        put(j, ("km", lab2), c)
                continue
            # Sq3 = Sq1 Sq2
            if (k * (k - 1) // 2) % 2 and (k - 1) % 2:
                once = profile.rho_times(p, {lab: 1})
                twice = profile.rho_times(p + 1, once)
                for lab2, c in profile.rho_times(p + 2, twice).items():
                    put(j, ("km", lab2), c)
        for j in range(src.nbasis):
            out.cols[j] = tgt.reduce(out.cols[j])
        return out

    comps = profile.components_or_raise(p, q) if m != 2 else None
    comps_up = profile.components_or_raise(p + 1, q) if m != 2 else None

    if kind == "pr":
        m2 = atom[1]
        if m == 0:
            for j, (_, i) in enumerate(src.basis):
                c = profile.components_or_raise(p, q)[i]
                if m2 == 2:
                    if c.quo_order(2) == 2 and c.quo2:
                        put(j, ("km", c.quo2), 1)
                elif c.quo_order(m2) > 1:
                    put(j, ("quo", i), 1)
        else:
            for j, b in enumerate(src.basis):
                part, i = b
                if part == "quo":
                    c = comps[i]
                    if m2 == 2:
                        if c.quo_order(2) == 2 and c.quo2:
                            put(j, ("km", c.quo2), 1)
                    elif c.quo_order(m2) > 1:
                        put(j, ("quo", i), 1)
                else:
                    c = comps_up[i]
                    g, g2 = c.tor_order(m), c.tor_order(m2)
                    coeff = (m * g2) // (m2 * g)
                    if m2 == 2:
                        if coeff % 2 and g2 == 2:
                            if c.tor2 is None:
                                raise ExactnessFailure(
                                    f"missing tor2 label on {c.label}"
                                )
                            put(j, ("km", c.tor2), 1)
                    elif g2 > 1:
                        put(j, ("tor", i), coeff % g2)
        for j in range(src.nbasis):
            out.cols[j] = tgt.reduce(out.cols[j])
        return out

    if kind == "inc":
        m2 = atom[1]
        if m == 2:
            dec = _decompose2(profile, p, q)
            comps0 = profile.components_or_raise(p, q)
            comps0_up = profile.components_or_raise(p + 1, q)
            for j, (_, lab) in enumerate(src.basis):
                part, i = dec[lab]
                if part == "quo":
                    g2 = comps0[i].quo_order(m2)
                    if g2 > 1:
                        put(j, ("quo", i), (m2 // 2) % g2)
                else:
                    g2 = comps0_up[i].tor_order(m2)
                    if g2 > 1:
                        put(j, ("tor", i), g2 // 2)
        else:
            for j, b in enumerate(src.basis):
                part, i = b
                if part == "quo":
                    c = comps[i]
                    g, g2 = c.quo_order(m), c.quo_order(m2)
                    if g2 > 1:
                        put(j, ("quo", i), (m2 // m) % g2)
                else:
                    c = comps_up[i]
                    g, g2 = c.tor_order(m), c.tor_order(m2)
                    if g2 > 1:
                        put(j, ("tor", i), g2 // g)
        for j in range(src.nbasis):
            out.cols[j] = tgt.reduce(out.cols[j])
        return out

    if kind in ("bock", "delta"):
        m2 = atom[1] if kind == "bock" else 0
        if m == 2:
            dec = _decompose2(profile, p, q)
            items = []
            for j, (_, lab) in enumerate(src.basis):
                part, i = dec[lab]
                items.append((j, part, i))
            comps_src_up = profile.components_or_raise(p + 1, q)
        else:
            items = [(j, b[0], b[1]) for j, b in enumerate(src.basis)]
            comps_src_up = comps_up
        tor_modulus = 2 if m == 2 else m
        for j, part, i in items:
            if part != "tor":
                continue
            c = comps_src_up[i]
            if kind == "delta":
                if c.kind == "ZN":
                    g = c.tor_order(tor_modulus)
                    put(j, ("comp", i), c.N // g)
                elif c.tor_order(tor_modulus) > 1:
                    raise InsufficientProfileData(
                        f"delta image of divisible component {c.label} is not "
                        "finitely presented"
                    )
                continue
            if c.kind != "ZN":
                continue  # divisible components have trivial /m2 image
            g = c.tor_order(tor_modulus)
            coeff = c.N // g
            if m2 == 2:
                if coeff % 2 and c.quo_order(2) == 2:
                    if c.quo2 is None:
                        raise ExactnessFailure(f"missing quo2 label on {c.label}")
                    put(j, ("km", c.quo2), 1)
            else:
                g2 = c.quo_order(m2)
                if g2 > 1:
                    put(j, ("quo", i), coeff % g2)
        for j in range(src.nbasis):
            out.cols[j] = tgt.reduce(out.cols[j])
        return out

    raise ValueError(f"unknown atom {atom!r}")


def realize_op(profile, expr: OpExpr, src: MotCohGroup) -> RealizedMap:
    """Evaluate an operation expression into a RealizedMap.

    All chains must share the same target state; the empty expression is the
    zero map to the source itself."""
    if not expr.terms:
        return RealizedMap(src, src)
    total = None
    for coeff, chain in expr.terms:
        cur = RealizedMap(src, src)
        for j in range(src.nbasis):
            cur.cols[j][j] = 1
        g = src
        for atom in reversed(chain):
            step = _apply_atom(profile, atom, g)
            cur = step.compose(cur)
            g = step.tgt
        cur = cur.scale(coeff)
        if total is None:
            total = cur
        else:
            if (g.p, g.q, g.m) != (total.tgt.p, total.tgt.q, total.tgt.m):
                raise ValueError("operation summands have different targets")
            total = total.add(cur)
    return total


def op_target_state(expr: OpExpr, state):
    out = None
    for _, chain in expr.terms:
        st = state
        for atom in reversed(chain):
            st = atom_state(atom, st)
        if out is None:
            out = st
        elif out != st:
            raise ValueError("operation summands have different targets")
    return out if out is not None else state


# ---------------------------------------------------------------------------
# exactness certificates for coefficient towers


def _order(g: MotCohGroup):
    return prod(o for o in g.orders) if all(g.orders) else None


def _image_order(f: RealizedMap):
    """Order of the image subgroup (all groups finite here)."""
    from .abelian import _Quotient

    tgt = f.tgt
    dim = tgt.nbasis
    rels = []
    for i, o in enumerate(tgt.orders):
        col = [0] * dim
        col[i] = o
        rels.append(col)
    sub = [list(col) for col in f.cols] + rels
    quo = _Quotient([[1 if i == j else 0 for i in range(dim)] for j in range(dim)],
                    sub, dim)
    coker = quo.group.order()
    return _order(tgt) // coker


def coeff_sequence(profile, p, q, m_sub, m_total):
    """Exactness certificate for 0 -> Z/m_sub -> Z/m_total -> Z/k -> 0 around
    bidegree (p, q); returns the three realized maps (inc, pr, connecting).

    Raises ExactnessFailure when the six-term window is not exact."""
    if m_total % m_sub:
        raise ValueError("m_sub must divide m_total")
    k = m_total // m_sub
    inc = OpExpr.chain(("inc", m_total))
    pr = OpExpr.chain(("pr", k))
    bo = OpExpr.chain(("bock", m_sub))
    maps = []
    # window: B1 -inc-> C1 -pr-> A1 -bock-> B2 -inc-> C2 -pr-> A2
    gB1 = group(profile, p, q, m_sub)
    f_inc1 = realize_op(profile, inc, gB1)
    f_pr1 = realize_op(profile, pr, f_inc1.tgt)
    f_bo1 = realize_op(profile, bo, f_pr1.tgt)
    f_inc2 = realize_op(profile, inc, f_bo1.tgt)
    f_pr2 = realize_op(profile, pr, f_inc2.tgt)
    prev_bock = realize_op(profile, bo, group(profile, p - 1, q, k))
    chain = [
        ("into B1", prev_bock, f_inc1),
        ("at C1", f_inc1, f_pr1),
        ("at A1", f_pr1, f_bo1),
        ("at B2", f_bo1, f_inc2),
        ("at C2", f_inc2, f_pr2),
    ]
    for where, f, g in chain:
        comp = g.compose(f)
        if not comp.is_zero():
            raise ExactnessFailure(
                f"{profile.name}: tower {m_sub}|{m_total} not a complex {where} "
                f"at ({p},{q})"
            )
        im = _image_order(f)
        ker = _order(g.src) // _image_order(g)
        if im != ker:
            raise ExactnessFailure(
                f"{profile.name}: tower {m_sub}|{m_total} inexact {where} at "
                f"({p},{q}): |im|={im}, |ker|={ker}"
            )
        maps.append((where, f, g))
    return f_inc1, f_pr1, f_bo1
