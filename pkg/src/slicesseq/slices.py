"""Slice descriptors for the sphere, KQ, KGL, f0KQ and the eta-inverted
sphere, plus the table of first-differential entries between sphere slice
summands.

Summands are keyed by (slice degree, simplicial shift); the sphere summand at
(q, 2q - s) carries Ext^{s,2q} over MU_*MU.  Differential entries are stated
per generator; everything the known formulas and the summary chart determine
is recorded with its provenance, explicit zeroes included, so that absent
knowledge is an error rather than a silent zero.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .abelian import FinAbGroup
from .cobar import ExtTable
from .errors import OutOfWindow, UnknownDifferential
from .motcoh import OpExpr


@dataclass(frozen=True)
class SliceSummand:
    spectrum: str
    q: int
    shift: int
    coeff: FinAbGroup
    names: tuple
    tower_index: int = None

    @property
    def key(self):
        return (self.q, self.shift)

    def describe(self):
        c = self.coeff
        if c.free_rank == 1 and not c.torsion:
            body = "Z"
        elif len(c.torsion) == 1:
            body = f"Z/{c.torsion[0]}"
        elif c.torsion and all(t == c.torsion[0] for t in c.torsion):
            body = f"(Z/{c.torsion[0]})^{len(c.torsion)}"
        else:
            body = str(c)
        return f"S^({self.shift},{self.q}) M({body})"


@dataclass(frozen=True)
class SliceDescriptor:
    spectrum: str
    q: int
    summands: tuple
    truncated: bool = False

    def describe(self):
        if not self.summands:
            return "0"
        body = " v ".join(s.describe() for s in self.summands)
        return body + (" v ..." if self.truncated else "")


def sphere_slice(q, table: ExtTable) -> SliceDescriptor:
    """s_q of the sphere: wedge over s of S^(2q-s,q) M(Ext^{s,2q})."""
    if q < 0:
        return SliceDescriptor("sphere", q, ())
    w2 = table.windows.get(2)
    if w2 is None or q > w2.t_max:
        raise OutOfWindow(f"sphere slice q={q} outside the Ext window")
    if q == 0:
        summand = SliceSummand("sphere", 0, 0, FinAbGroup(1, (), ("iota",)), ("iota",))
        return SliceDescriptor("sphere", 0, (summand,))
    out = []
    for s in range(min(2 * q, max(w.s_max for w in table.windows.values())) + 1):
        try:
            eg = table.ext_mu(s, q)
        except OutOfWindow:
            break
        if eg.group.is_zero():
            continue
        out.append(SliceSummand("sphere", q, 2 * q - s, eg.group, eg.names))
    out.sort(key=lambda sm: sm.shift)
    return SliceDescriptor("sphere", q, tuple(out))


def kq_slice(q, i_min=-3) -> SliceDescriptor:
    """s_q(KQ): an integral summand at top degree for q even plus the tower
    of mod-2 summands at shifts 2i+q, i < q/2 (truncated at i_min)."""
    out = []
    if q % 2 == 0:
        out.append(
            SliceSummand("KQ", q, 2 * q, FinAbGroup(1, (), (f"b^{q//2}",)), (f"b^{q//2}",), None)
        )
        top = q // 2
    else:
        top = (q + 1) // 2
    truncated = False
    for i in range(top - 1, i_min - 1, -1):
        out.append(
            SliceSummand(
                "KQ", q, 2 * i + q, FinAbGroup.cyclic(2, f"kq[{i}]"), (f"kq[{i}]",), i
            )
        )
    truncated = True  # the tower continues to i = -infinity
    out.sort(key=lambda sm: sm.shift)
    return SliceDescriptor("KQ", q, tuple(out), truncated)


def kgl_slice(q) -> SliceDescriptor:
    return SliceDescriptor(
        "KGL", q,
        (SliceSummand("KGL", q, 2 * q, FinAbGroup(1, (), (f"beta^{q}",)), (f"beta^{q}",)),),
    )


def f0kq_slice(q, i_min=-3) -> SliceDescriptor:
    """Effective cover of KQ: the KQ slices in non-negative degrees, nothing
    below."""
    if q < 0:
        return SliceDescriptor("f0KQ", q, ())
    d = kq_slice(q, i_min)
    return SliceDescriptor("f0KQ", q, d.summands, d.truncated)


def eta_inv_slice(q, truncation=8) -> SliceDescriptor:
    """s_q of the eta-inverted sphere: S^(q,q) M(Z/2) v wedge of S^(n+q,q)
    M(Z/2) for n >= 2, truncated at the given shift offset."""
    out = [SliceSummand("sphere-eta-inverted", q, q, FinAbGroup.cyclic(2, "a0"), ("a0",))]
    for n in range(2, truncation + 1):
        out.append(
            SliceSummand("sphere-eta-inverted", q, q + n, FinAbGroup.cyclic(2, f"a{n}"), (f"a{n}",))
        )
    return SliceDescriptor("sphere-eta-inverted", q, tuple(out), truncated=True)


# ---------------------------------------------------------------------------
# the d1 schema for the sphere


@dataclass(frozen=True)
class D1Entry:
    src_q: int
    src_shift: int
    src_gen: int
    tgt_shift: int
    tgt_gen: int
    op: OpExpr
    provenance: str

    def is_zero_entry(self):
        return not self.op.terms


@dataclass
class D1Schema:
    """All certified d1 entries out of s_q; komplete: True when every entry
    out of this slice is known (explicit zeroes included)."""

    spectrum: str
    q: int
    entries: list = field(default_factory=list)
    complete: bool = False

    def find(self, src_shift, src_gen, tgt_shift, tgt_gen):
        for e in self.entries:
            if (e.src_shift, e.src_gen, e.tgt_shift, e.tgt_gen) == (
                src_shift, src_gen, tgt_shift, tgt_gen,
            ):
                return e
        if self.complete:
            return D1Entry(self.q, src_shift, src_gen, tgt_shift, tgt_gen,
                           OpExpr.zero(), "chart-absent")
        return None


def _gen_index(desc: SliceDescriptor, shift, name_contains=None):
    for sm in desc.summands:
        if sm.shift != shift:
            continue
        if name_contains is None:
            return 0
        for i, nm in enumerate(sm.names):
            if name_contains in nm:
                return i
    return 0


def d1_schema(spectrum, q, table: ExtTable, c2q=None) -> D1Schema:
    """Certified first-differential entries d1(q): s_q -> s_{q+1}.

    Sphere only; the undetermined scalars c_{2q} (q >= 2) enter through the
    optional {2q: value} dict and default to 0."""
    if spectrum != "sphere":
        raise UnknownDifferential(f"no d1 table for spectrum {spectrum!r}")
    c2q = dict(c2q or {})
    here = sphere_slice(q, table)
    there = sphere_slice(q + 1, table)
    shifts_next = {sm.shift for sm in there.summands}
    sch = D1Schema("sphere", q)

    def add(src_shift, tgt_shift, op, prov, src_gen=0, tgt_gen=0):
        if tgt_shift not in shifts_next:
            return
        sch.entries.append(
            D1Entry(q, src_shift, src_gen, tgt_shift, tgt_gen, op, prov)
        )

    Sq2 = OpExpr.chain(("Sq2",))
    Sq3Sq1 = OpExpr.chain(("Sq3",), ("Sq1",))
    tau = OpExpr.chain(("tau",))
    sq2_rho_sq1 = OpExpr.chain(("Sq2",)).plus(OpExpr.chain(("rho",), ("Sq1",)))

    if q == 0:
        add(0, 1, OpExpr.chain(("Sq2",), ("pr", 2)), "lemma1")
        sch.complete = True
        return sch

    a_next = None
    if (q + 1) % 2 == 0:
        a_next = table.ext_mu(1, q + 1).group.torsion
        a_next = a_next[0] if a_next else None

    # bottom summand (alpha_1^q)
    add(q, q + 1, Sq2, "lemma1")
    if q >= 2:
        add(q, q + 3, Sq3Sq1, "lemma1")
    if q == 1:
        # inc_12 Sq^2 Sq^1 with the proven c_2 = 0
        add(1, 3, OpExpr.chain(("inc", 12), ("Sq2",), ("Sq1",)), "lemma1")

    # rel-2 summand (alpha_1^{q-3} alpha_3) for q >= 3
    if q >= 3:
        g = _gen_index(here, q + 2, "alpha_3")
        add(q + 2, q + 1, tau, "lemma1", src_gen=g)
        add(q + 2, q + 3, sq2_rho_sq1, "lemma1", src_gen=g,
            tgt_gen=_gen_index(there, q + 3, "alpha_3"))
        if q == 4:
            # beta_{2/2} shares the shift-6 summand; its entries into the
            # bottom and rel-2 summands vanish by the KQ comparison
            b = _gen_index(here, 6, "beta")
            add(6, 5, OpExpr.zero(), "derived-zero", src_gen=b)
            add(6, 7, OpExpr.zero(), "derived-zero", src_gen=b)

    # alpha_{q} -> Z/a_{q+1}: inc Sq^2 Sq^1 + c * partial Sq^2 (q odd)
    if q % 2 == 1 and q >= 3 and a_next:
        op = OpExpr.chain(("inc", a_next), ("Sq2",), ("Sq1",))
        c = c2q.get(q + 1, 0)
        if c:
            op = op.plus(OpExpr.chain(("bock", a_next), ("Sq2",), coeff=c))
        add(2 * q - 1, 2 * q + 1, op, "lemma1",
            src_gen=_gen_index(here, 2 * q - 1, f"alpha_{q}"))

    # Z/a_{2k} summand at shift 4k-1 of s_{2k}
    if q % 2 == 0 and q >= 2:
        k = q // 2
        src_shift = 2 * q - 1
        add(src_shift, 2 * q + 1, OpExpr.chain(("Sq2",), ("bock", 2)), "lemma1")
        if k % 2 == 1:
            add(src_shift, src_shift, OpExpr.chain(("tau",), ("bock", 2)), "lemma1")
        else:
            add(src_shift, src_shift, OpExpr.zero(), "lemma1-zero")
        if q == 6:
            # tau pr: S^(11,6) M(Z/504) -> S^(10,7) M(Z/2)
            add(11, 10, OpExpr.chain(("tau",), ("pr", 2)), "lemma2")

    # first-diff-unit-2 tau entries out of the alpha_1^{j-3} alpha_{6/3} and
    # alpha_1^{j-3} alpha_7 towers
    if q >= 7:
        j = q - 3  # source shift j+8 generated by alpha_1^{j-3} alpha_{6/3}
        if j > 3:
            add(j + 8, j + 7, tau, "lemma2")
        jj = q - 4  # source shift jj+10 generated by alpha_1^{jj-3} alpha_7
        if jj >= 3:
            add(jj + 10, jj + 9, tau, "lemma2")

    # chart-sourced entries around the Z/6 summand of s_6 and the top of s_7
    if q == 5:
        add(9, 10, OpExpr.chain(("inc", 6), ("Sq2",)), "chart")
        add(7, 10, OpExpr.chain(("inc", 6), ("Sq3",), ("Sq1",)), "chart",
            src_gen=_gen_index(here, 7, "alpha_3"))
    if q == 6:
        add(10, 11, OpExpr.chain(("Sq2",), ("pr", 2)), "chart")
        add(10, 13, OpExpr.chain(("Sq3",), ("Sq1",), ("pr", 2)), "chart")
    if q == 7:
        add(11, 12, Sq2, "chart")

    sch.complete = q <= 7
    return sch
