"""Base-field oracles: Milnor K-theory mod m and the integral cohomology
components the universal-coefficient assembly needs.

A profile stores only finite data.  Integral groups are lists of Component
records; each component answers /m and m-torsion queries for any modulus and
carries the labels identifying its mod-2 reduction inside the Milnor K-theory
basis (quo2 at its own bidegree, tor2 one column down).  Divisible parts that
contribute nothing are never stored.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import gcd

from .errors import InsufficientProfileData

SUPPORTED_MODULI = (2, 3, 4, 8, 12, 24)


def _v_l(n, l):
    v = 0
    while n % l == 0:
        n //= l
        v += 1
    return v


@dataclass(frozen=True)
class Component:
    """One building block of an integral motivic cohomology group.

    kind: "Z" (infinite cyclic), "ZN" (cyclic of order N), "DIVQ" (Q/Z),
    "DIVL" (Q_l/Z_l with N = l), "ZP" (Z_l with N = l).
    quo2/tor2: names of the Milnor K/2 classes hit by the component's mod-2
    reduction and by its 2-torsion (one cohomological degree down)."""

    kind: str
    N: int = 0
    label: str = "c"
    quo2: str = None
    tor2: str = None

    def quo_order(self, m):
        """Order of the component's contribution to H/m."""
        if self.kind == "Z":
            return m
        if self.kind == "ZN":
            return gcd(m, self.N)
        if self.kind == "ZP":
            return self.N ** _v_l(m, self.N)
        return 1  # DIVQ, DIVL

    def tor_order(self, m):
        """Order of the component's contribution to the m-torsion."""
        if self.kind == "ZN":
            return gcd(m, self.N)
        if self.kind == "DIVQ":
            return m
        if self.kind == "DIVL":
            return self.N ** _v_l(m, self.N)
        return 1  # Z, ZP

    def finite(self):
        return self.kind == "ZN"


class FieldProfile:
    """Interface every base-field oracle implements."""

    name = "?"
    characteristic = 0
    moduli = SUPPORTED_MODULI

    def km2_gens(self, n):
        """Generator labels of K^M_n/2 (empty tuple when the group vanishes)."""
        raise NotImplementedError

    def rho(self):
        """Label of the class of -1 in K^M_1/2, or None when it vanishes."""
        raise NotImplementedError

    def product2(self, a, xlabel, b, ylabel):
        """x*y in K^M_{a+b}/2 as a dict {label: coefficient mod 2}."""
        raise NotImplementedError

    def int_components(self, p, q):
        """Components of H^{p,q}, [] for zero, or None when unknown."""
        raise NotImplementedError

    def int_complete(self, p, q):
        """True when the stored components are the whole group."""
        comps = self.int_components(p, q)
        return comps is not None and all(c.kind in ("Z", "ZN") for c in comps)

    # -- shared helpers ---------------------------------------------------
    def rho_times(self, n, vec):
        """Multiply a K^M_n/2 vector by rho; returns a K^M_{n+1}/2 vector."""
        r = self.rho()
        out = {}
        if r is None:
            return out
        for lab, c in vec.items():
            if c % 2 == 0:
                continue
            for lab2, c2 in self.product2(1, r, n, lab).items():
                out[lab2] = (out.get(lab2, 0) + c * c2) % 2
        return {k: v for k, v in out.items() if v}

    def components_or_raise(self, p, q):
        comps = self.int_components(p, q)
        if comps is None:
            raise InsufficientProfileData(
                f"profile {self.name} has no integral data at H^({p},{q})",
                datum=(p, q),
            )
        return comps


def _km_label(n):
    return "1" if n == 0 else f"rho^{n}"


class ComplexField(FieldProfile):
    """Algebraically closed field of characteristic != 2 (e.g. the complexes):
    Milnor K-theory is divisible above degree 0; torsion is a full Q/Z in
    cohomological degree 1."""

    def __init__(self, name="C", characteristic=0):
        self.name = name
        self.characteristic = characteristic

    def km2_gens(self, n):
        return ("1",) if n == 0 else ()

    def rho(self):
        return None

    def product2(self, a, x, b, y):
        if a == 0 and b == 0:
            return {"1": 1}
        return {}

    def int_components(self, p, q):
        if p < 0 or q < 0 or p > q:
            return []
        if (p, q) == (0, 0):
            return [Component("Z", 0, "1", quo2="1")]
        if p == 1:
            return [Component("DIVQ", 0, "w", tor2="1")]
        return []


class RealField(FieldProfile):
    """The real numbers: K^M_*/2 = F_2[rho], torsion Z/2 throughout plus a
    full Q/Z of roots-of-unity torsion in H^{1,even}."""

    name = "R"
    characteristic = 0

    def km2_gens(self, n):
        return (_km_label(n),) if n >= 0 else ()

    def rho(self):
        return "rho^1"

    def product2(self, a, x, b, y):
        return {_km_label(a + b): 1}

    def int_components(self, p, q):
        if p < 0 or q < 0 or p > q:
            return []
        if (p, q) == (0, 0):
            return [Component("Z", 0, "1", quo2="1")]
        if p == 0:
            return []
        if p == 1 and q % 2 == 0:
            return [Component("DIVQ", 0, "w", tor2="1")]
        if (q - p) % 2 == 0:
            return [
                Component("ZN", 2, f"r{p}", quo2=_km_label(p), tor2=_km_label(p - 1))
            ]
        return []


class FiniteField(FieldProfile):
    """F_q with q odd: K^M_1 = Z/(q-1), everything above degree 1 vanishes,
    H^{1,j} = Z/(q^j - 1) by the cohomology of the Frobenius."""

    def __init__(self, q):
        if q < 3 or q % 2 == 0:
            raise ValueError("finite-field profile needs odd q >= 3")
        d = 2
        qq = q
        base = None
        while d * d <= qq:
            if qq % d == 0:
                base = d
                while qq % d == 0:
                    qq //= d
                if qq != 1:
                    raise ValueError(f"{q} is not a prime power")
            d += 1
        self.q = q
        self.name = f"F{q}"
        self.characteristic = base if base else q

    def km2_gens(self, n):
        if n == 0:
            return ("1",)
        if n == 1:
            return ("u",)
        return ()

    def rho(self):
        return "u" if self.q % 4 == 3 else None

    def product2(self, a, x, b, y):
        if a + b == 0:
            return {"1": 1}
        if a + b == 1:
            return {"u": 1}
        return {}

    def int_components(self, p, q):
        if p < 0 or q < 0 or p > q:
            return []
        if (p, q) == (0, 0):
            return [Component("Z", 0, "1", quo2="1")]
        if p == 1:
            return [Component("ZN", self.q ** q - 1, f"u{q}", quo2="u", tor2="1")]
        return []


class LocalField(FieldProfile):
    """Q_p with p odd: units split as mu_(p-1) x Z_p, K_2 has mu-torsion,
    cohomological dimension 2 with cyclic torsion p^j - 1 in weight j."""

    def __init__(self, p):
        if p < 3 or p % 2 == 0:
            raise ValueError("local-field profile needs an odd prime")
        d = 2
        while d * d <= p:
            if p % d == 0:
                raise ValueError(f"{p} is not prime")
            d += 1
        self.p = p
        self.name = f"Q{p}"
        self.characteristic = 0

    def km2_gens(self, n):
        if n == 0:
            return ("1",)
        if n == 1:
            return ("u", "pi")
        if n == 2:
            return ("{u,pi}",)
        return ()

    def rho(self):
        return "u" if self.p % 4 == 3 else None

    def product2(self, a, x, b, y):
        if a == 0:
            return {y: 1}
        if b == 0:
            return {x: 1}
        if a == 1 and b == 1:
            if {x, y} == {"u", "pi"}:
                return {"{u,pi}": 1}
            if x == y == "pi":
                # {pi,pi} = {-1,pi}
                return {"{u,pi}": 1} if self.p % 4 == 3 else {}
            return {}
        return {}

    def int_components(self, p_, q):
        p = self.p
        if p_ < 0 or q < 0 or p_ > q:
            return []
        if (p_, q) == (0, 0):
            return [Component("Z", 0, "1", quo2="1")]
        if p_ == 0:
            return []
        if p_ == 1:
            if q == 1:
                return [
                    Component("Z", 0, "pi", quo2="pi"),
                    Component("ZN", p - 1, "u", quo2="u", tor2="1"),
                    Component("ZP", p, "u1"),
                ]
            comps = [
                Component("ZN", p ** q - 1, f"c{q}", quo2="u", tor2="1"),
                Component("ZP", p, f"d{q}"),
            ]
            if q % (p - 1) == 0:
                comps.append(Component("ZN", p ** (_v_l(q, p) + 1), f"w{q}"))
            return comps
        if p_ == 2:
            comps = [
                Component(
                    "ZN", p ** (q - 1) - 1, f"e{q}", quo2="{u,pi}", tor2="pi"
                )
            ]
            if q > 1 and (q - 1) % (p - 1) == 0:
                comps.append(Component("ZN", p ** (_v_l(q - 1, p) + 1), f"x{q}"))
            return comps
        return []


_BUILTINS = {}


def builtin_profile(spec):
    """Resolve a field spec: R, C, F<q>, Q<p>, or builtin:Fq?q=5 style."""
    key = spec.strip()
    if key in _BUILTINS:
        return _BUILTINS[key]
    name = key
    if name.startswith("builtin:"):
        name = name[len("builtin:"):]
    if "?" in name:
        kind, _, arg = name.partition("?")
        params = dict(kv.split("=") for kv in arg.split("&"))
        if kind.lower() == "fq":
            prof = FiniteField(int(params["q"]))
        elif kind.lower() == "qp":
            prof = LocalField(int(params["p"]))
        else:
            raise ValueError(f"unknown builtin field kind {kind!r}")
    elif name in ("C", "c"):
        prof = ComplexField()
    elif name in ("R", "r"):
        prof = RealField()
    elif name[0] in "Ff" and name[1:].isdigit():
        prof = FiniteField(int(name[1:]))
    elif name[0] in "Qq" and name[1:].isdigit():
        prof = LocalField(int(name[1:]))
    else:
        raise ValueError(f"unknown built-in field {spec!r}")
    _BUILTINS[key] = prof
    return prof


# ---------------------------------------------------------------------------
# config-file profiles


class TableProfile(FieldProfile):
    """Profile backed by explicit tables (parsed from a config file)."""

    def __init__(self, name, characteristic, km, rho_label, products, intdata,
                 int_range):
        self.name = name
        self.characteristic = characteristic
        self._km = km              # n -> tuple of labels
        self._rho = rho_label
        self._products = products  # (xlabel, ylabel) -> dict or implicit 0
        self._intdata = intdata    # (p, q) -> [Component]
        self._range = int_range    # (p_max, q_max) covered by the table

    def km2_gens(self, n):
        return self._km.get(n, ())

    def rho(self):
        return self._rho

    def product2(self, a, x, b, y):
        if a == 0 and x == "1":
            return {y: 1}
        if b == 0 and y == "1":
            return {x: 1}
        return dict(self._products.get((x, y), self._products.get((y, x), {})))

    def int_components(self, p, q):
        if p < 0 or q < 0 or p > q:
            return []
        if (p, q) in self._intdata:
            return self._intdata[(p, q)]
        pmax, qmax = self._range
        if p > pmax or q > qmax:
            return None
        return []


def parse_profile(text, name="config"):
    """Parse the field-profile config format (see docs/field-profiles.md)."""
    km = {}
    products = {}
    intdata = {}
    rho_label = None
    characteristic = 0
    pmax = qmax = 0
    pname = name
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        head = parts[0]
        if head == "field":
            pname = parts[1]
        elif head == "characteristic":
            characteristic = int(parts[1])
        elif head == "rho":
            rho_label = None if parts[1] == "0" else parts[1]
        elif head == "km":
            n = int(parts[1])
            kv = dict(x.split("=", 1) for x in parts[2:])
            gens = () if kv.get("gens", "-") == "-" else tuple(kv["gens"].split(","))
            km[n] = gens
        elif head == "product":
            lhs, _, rhs = line[len("product"):].partition("=")
            x, y = [t.strip() for t in lhs.split("*")]
            rhs = rhs.strip()
            products[(x, y)] = {} if rhs == "0" else {rhs: 1}
        elif head == "int":
            p, q, kind = int(parts[1]), int(parts[2]), parts[3]
            rest = parts[4:]
            N = 0
            if kind in ("ZN", "DIVL", "ZP"):
                N = int(rest[0])
                rest = rest[1:]
            kv = dict(x.split("=", 1) for x in rest)
            comp = Component(
                kind, N, kv.get("label", "c"), kv.get("quo2"), kv.get("tor2")
            )
            intdata.setdefault((p, q), []).append(comp)
            pmax, qmax = max(pmax, p), max(qmax, q)
        elif head == "range":
            pmax, qmax = int(parts[1]), int(parts[2])
        else:
            raise ValueError(f"unknown directive {head!r} in profile")
    return TableProfile(pname, characteristic, km, rho_label, products, intdata,
                        (pmax, qmax))


def load_profile(path):
    with open(path) as fh:
        return parse_profile(fh.read(), name=path)


def dump_profile(profile, p_max=4, q_max=12):
    """Write a profile out in the config format (used for the docs and for
    round-trip tests of the parser)."""
    lines = [
        "# slicesseq field-profile v1",
        f"field {profile.name}",
        f"characteristic {profile.characteristic}",
        f"rho {profile.rho() or 0}",
        f"range {p_max} {q_max}",
    ]
    degs = [n for n in range(0, q_max + 1)]
    for n in degs:
        gens = profile.km2_gens(n)
        lines.append(f"km {n} gens={','.join(gens) if gens else '-'}")
    seen = set()
    for a in range(0, 3):
        for x in profile.km2_gens(a):
            for b in range(0, 3):
                for y in profile.km2_gens(b):
                    if a == 0 or b == 0 or (y, x, b, a) in seen:
                        continue
                    seen.add((x, y, a, b))
                    out = profile.product2(a, x, b, y)
                    rhs = next(iter(out)) if out else "0"
                    lines.append(f"product {x} * {y} = {rhs}")
    for q in range(0, q_max + 1):
        for p in range(0, min(p_max, q) + 1):
            comps = profile.int_components(p, q)
            if not comps:
                continue
            for c in comps:
                extra = f" {c.N}" if c.kind in ("ZN", "DIVL", "ZP") else ""
                kv = f" label={c.label}"
                if c.quo2:
                    kv += f" quo2={c.quo2}"
                if c.tor2:
                    kv += f" tor2={c.tor2}"
                lines.append(f"int {p} {q} {c.kind}{extra}{kv}")
    return "\n".join(lines) + "\n"
