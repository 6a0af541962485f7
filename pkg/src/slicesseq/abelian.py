"""Finitely generated abelian groups, integer matrices, homology, extensions.

Everything is exact over Z.  Torsion coefficients are carried as invariant
factor chains; all quotients reduce to Smith normal form of integer matrices
(see _snf for the accelerated kernel).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import gcd, prod

from ._snf import snf_diagonal, snf_transforms
from .errors import CompositionNonzero


def _mat_mul(A, B):
    n, k = len(A), len(B)
    m = len(B[0]) if k else 0
    out = [[0] * m for _ in range(n)]
    for i in range(n):
        Ai = A[i]
        Oi = out[i]
        for t in range(k):
            a = Ai[t]
            if a:
                Bt = B[t]
                for j in range(m):
                    Oi[j] += a * Bt[j]
    return out


def _identity(n):
    return [[1 if i == j else 0 for j in range(n)] for i in range(n)]


def _mat_vec(A, v):
    return [sum(a * x for a, x in zip(row, v)) for row in A]


@dataclass(frozen=True)
class FinAbGroup:
    """Z^free_rank + Z/t_1 + ... + Z/t_k with t_1 | t_2 | ... | t_k.

    Generators are named and ordered: free generators first, then one per
    invariant factor.  The zero group is (0, (), ())."""

    free_rank: int
    torsion: tuple[int, ...] = ()
    generators: tuple[str, ...] = ()

    def __post_init__(self):
        if self.free_rank < 0:
            raise ValueError("negative free rank")
        prev = 1
        for t in self.torsion:
            if t < 2:
                raise ValueError("invariant factors must be >= 2")
            if t % prev:
                raise ValueError("invariant factors must form a divisibility chain")
            prev = t
        gens = self.generators
        if not gens:
            gens = tuple(f"e{i}" for i in range(self.ngens))
            object.__setattr__(self, "generators", gens)
        if len(gens) != self.ngens:
            raise ValueError("one generator label per cyclic summand")

    @property
    def ngens(self):
        return self.free_rank + len(self.torsion)

    @classmethod
    def zero(cls):
        return cls(0, (), ())

    @classmethod
    def cyclic(cls, n, name="g"):
        """Z for n = 0, else Z/n (trivial for n = 1)."""
        if n == 0:
            return cls(1, (), (name,))
        if n == 1:
            return cls.zero()
        return cls(0, (abs(n),), (name,))

    @classmethod
    def from_orders(cls, orders, names=None):
        """Group with one cyclic factor per order (0 means Z); the orders are
        renormalized into an invariant factor chain, so generator names are
        only kept when the orders already form a chain."""
        orders = [o for o in orders if o != 1]
        frees = sum(1 for o in orders if o == 0)
        tors = sorted(o for o in orders if o)
        chain = True
        for a, b in zip(tors, tors[1:]):
            if b % a:
                chain = False
                break
        if not chain:
            tors = _to_invariant_factors(tors)
            names = None
        if names is not None and len(names) == frees + len(tors):
            return cls(frees, tuple(tors), tuple(names))
        return cls(frees, tuple(tors))

    def gen_orders(self):
        return [0] * self.free_rank + list(self.torsion)

    def order(self):
        """Group order; None when infinite."""
        if self.free_rank:
            return None
        return prod(self.torsion) if self.torsion else 1

    def is_zero(self):
        return self.free_rank == 0 and not self.torsion

    def direct_sum(self, other):
        orders = self.gen_orders() + other.gen_orders()
        return FinAbGroup.from_orders(
            orders, list(self.generators) + list(other.generators)
        )

    def relation_columns(self):
        """Columns spanning the relation lattice of the presentation Z^n -> G."""
        cols = []
        n = self.ngens
        for i, t in enumerate(self.torsion):
            col = [0] * n
            col[self.free_rank + i] = t
            cols.append(col)
        return cols

    def reduce_vector(self, v):
        out = list(v)
        for i, t in enumerate(self.torsion):
            out[self.free_rank + i] %= t
        return out

    def describe(self):
        if self.is_zero():
            return "0"
        parts = ["Z"] * self.free_rank + [f"Z/{t}" for t in self.torsion]
        return " + ".join(parts)

    def __str__(self):
        return self.describe()


def _to_invariant_factors(orders):
    """Renormalize a list of cyclic orders (> 1) into a divisibility chain."""
    primary = {}
    for o in orders:
        d, p = o, 2
        while p * p <= d:
            if d % p == 0:
                e = 0
                while d % p == 0:
                    d //= p
                    e += 1
                primary.setdefault(p, []).append(e)
            p += 1
        if d > 1:
            primary.setdefault(d, []).append(1)
    for p in primary:
        primary[p].sort(reverse=True)
    k = max((len(v) for v in primary.values()), default=0)
    chain = []
    for i in range(k - 1, -1, -1):
        f = 1
        for p, exps in primary.items():
            if i < len(exps):
                f *= p ** exps[i]
        chain.append(f)
    return chain


@dataclass
class IntMatrix:
    """Dense integer matrix with optional row/column labels.

    The column count is carried explicitly so 0 x n and n x 0 matrices keep
    their shape through compositions."""

    entries: list
    row_labels: tuple = ()
    col_labels: tuple = ()
    ncols: int = None

    def __post_init__(self):
        if self.ncols is None:
            self.ncols = len(self.entries[0]) if self.entries else 0
        for row in self.entries:
            if len(row) != self.ncols:
                raise ValueError("ragged matrix")

    @property
    def rows(self):
        return len(self.entries)

    @property
    def cols(self):
        return self.ncols

    @classmethod
    def zero(cls, rows, cols):
        return cls([[0] * cols for _ in range(rows)], ncols=cols)

    @classmethod
    def identity(cls, n):
        return cls(_identity(n), ncols=n)

    def mul(self, other):
        if self.cols != other.rows:
            raise ValueError("shape mismatch in matrix product")
        return IntMatrix(_mat_mul(self.entries, other.entries), ncols=other.cols)

    def __eq__(self, other):
        return isinstance(other, IntMatrix) and self.entries == other.entries


def smith_normal_form(m: IntMatrix):
    """U*m*V = D with U, V unimodular and D a diagonal divisibility chain.

    Deterministic: pivots are chosen by smallest absolute value, then lowest
    row index, then lowest column index."""
    if m.rows == 0 or m.cols == 0:
        return (
            IntMatrix(_identity(m.rows)),
            IntMatrix([[0] * m.cols for _ in range(m.rows)]),
            IntMatrix(_identity(m.cols)),
        )
    U, D, V = snf_transforms(m.entries)
    return IntMatrix(U), IntMatrix(D), IntMatrix(V)


def _unimodular_inverse(U):
    """Inverse of a unimodular matrix, exactly."""
    u2, d, v = snf_transforms(U)
    n = len(U)
    # u2*U*v = I  =>  U^-1 = v*u2
    if any(d[i][i] != 1 for i in range(n)):
        raise ValueError("matrix is not unimodular")
    return _mat_mul(v, u2)


class Echelon:
    """Column echelon form of an integer lattice: a basis whose columns have
    strictly increasing pivot rows.  Supports exact membership solves by
    forward substitution; much cheaper than Smith form with transforms."""

    def __init__(self, dim):
        self.dim = dim
        self.pivots = []   # increasing pivot rows
        self.basis = []    # matching columns

    def _first_nonzero(self, col):
        for i, a in enumerate(col):
            if a:
                return i
        return -1

    def insert(self, col):
        col = list(col)
        while True:
            r = self._first_nonzero(col)
            if r < 0:
                return
            import bisect

            k = bisect.bisect_left(self.pivots, r)
            if k == len(self.pivots) or self.pivots[k] != r:
                if col[r] < 0:
                    col = [-a for a in col]
                self.pivots.insert(k, r)
                self.basis.insert(k, col)
                self._backreduce(k)
                return
            e = self.basis[k]
            a, b = e[r], col[r]
            if b % a == 0:
                q = b // a
                col = [x - q * y for x, y in zip(col, e)]
            else:
                g, x, y = _xgcd_pair(a, b)
                ee = [x * u + y * v for u, v in zip(e, col)]
                col = [(-(b // g)) * u + (a // g) * v for u, v in zip(e, col)]
                self.basis[k] = ee
                self._backreduce(k)

    def _backreduce(self, k):
        # keep entries above later pivots reduced to curb growth
        e = self.basis[k]
        r = self.pivots[k]
        for j in range(k):
            ej = self.basis[j]
            q = ej[r] // e[r]
            if q:
                self.basis[j] = [x - q * y for x, y in zip(ej, e)]

    def solve(self, vec):
        """Coordinates of vec in the basis, or None if not in the lattice."""
        v = list(vec)
        out = [0] * len(self.basis)
        for k, r in enumerate(self.pivots):
            a = v[r]
            if a == 0:
                continue
            q, rem = divmod(a, self.basis[k][r])
            if rem:
                return None
            out[k] = q
            bk = self.basis[k]
            v = [x - q * y for x, y in zip(v, bk)]
        return out if not any(v) else None


def _xgcd_pair(a, b):
    x, nx = 1, 0
    y, ny = 0, 1
    g, ng = a, b
    while ng:
        q = g // ng
        x, nx = nx, x - q * nx
        y, ny = ny, y - q * ny
        g, ng = ng, g - q * ng
    if g < 0:
        x, y, g = -x, -y, -g
    return g, x, y


def echelon_of(cols, dim):
    ech = Echelon(dim)
    for c in cols:
        ech.insert(c)
    return ech


def column_lattice_basis(cols, dim):
    """Basis (as list of columns) of the lattice spanned by `cols` in Z^dim."""
    return echelon_of(cols, dim).basis


def solve_columns(M, B):
    """Integer X with M*X = B (column-wise), or None when no solution.

    Works off the column echelon of [M; I]: eliminating the M-part of
    [B_j; 0] leaves [0; -x] with M x = B_j."""
    rows = len(M)
    cols = len(M[0]) if rows else 0
    nb = len(B[0]) if B else 0
    if rows == 0:
        return [[0] * nb for _ in range(cols)]
    if cols == 0:
        return None if any(any(r) for r in B) else [[0] * nb for _ in range(cols)]
    ech = Echelon(rows + cols)
    for j in range(cols):
        ech.insert([M[i][j] for i in range(rows)] + [1 if i == j else 0 for i in range(cols)])
    X = [[0] * nb for _ in range(cols)]
    for j in range(nb):
        w = [B[i][j] for i in range(rows)] + [0] * cols
        for k, r in enumerate(ech.pivots):
            if r >= rows:
                break
            if w[r] == 0:
                continue
            q, rem = divmod(w[r], ech.basis[k][r])
            if rem:
                return None
            bk = ech.basis[k]
            w = [x - q * y for x, y in zip(w, bk)]
        if any(w[:rows]):
            return None
        for i in range(cols):
            X[i][j] = -w[rows + i]
    return X


def kernel_columns(M, dim_domain):
    """Basis columns of ker(M) as a saturated sublattice of Z^dim_domain."""
    rows = len(M)
    if rows == 0 or dim_domain == 0:
        return [[1 if i == j else 0 for i in range(dim_domain)] for j in range(dim_domain)]
    ech = Echelon(rows + dim_domain)
    for j in range(dim_domain):
        ech.insert([M[i][j] for i in range(rows)] + [1 if i == j else 0 for i in range(dim_domain)])
    out = []
    for k, r in enumerate(ech.pivots):
        if r >= rows:
            out.append([-x for x in ech.basis[k][rows:]])
    return out


@dataclass
class GroupMap:
    """Homomorphism: column j of `matrix` is the image of source generator j
    written in target generators.

    `check=False` skips the torsion-respect validation; generator-level
    sections of projections need this (they are not homomorphisms)."""

    source: FinAbGroup
    target: FinAbGroup
    matrix: IntMatrix
    check: bool = True

    def __post_init__(self):
        if self.matrix.rows != self.target.ngens or self.matrix.cols != self.source.ngens:
            raise ValueError("matrix shape does not match source/target presentations")
        if not self.check:
            return
        tgt_orders = self.target.gen_orders()
        for j, k in enumerate(self.source.gen_orders()):
            if k == 0:
                continue
            for i, t in enumerate(tgt_orders):
                v = k * self.matrix.entries[i][j]
                if (t == 0 and v != 0) or (t != 0 and v % t):
                    raise ValueError(
                        f"map does not respect torsion at source generator {j}"
                    )

    @classmethod
    def zero(cls, source, target):
        return cls(source, target, IntMatrix.zero(target.ngens, source.ngens))

    @classmethod
    def identity(cls, group):
        return cls(group, group, IntMatrix.identity(group.ngens))

    def apply(self, v):
        return self.target.reduce_vector(_mat_vec(self.matrix.entries, v))

    def compose(self, first):
        """self o first."""
        if first.target is not self.source and first.target != self.source:
            raise ValueError("composition mismatch")
        return GroupMap(first.source, self.target, self.matrix.mul(first.matrix))

    def add(self, other):
        ent = [
            [a + b for a, b in zip(r1, r2)]
            for r1, r2 in zip(self.matrix.entries, other.matrix.entries)
        ]
        return GroupMap(self.source, self.target, IntMatrix(ent))

    def scale(self, c):
        ent = [[c * a for a in row] for row in self.matrix.entries]
        return GroupMap(self.source, self.target, IntMatrix(ent))

    def is_zero(self):
        tgt = self.target.gen_orders()
        for i, t in enumerate(tgt):
            for a in self.matrix.entries[i]:
                if t == 0:
                    if a != 0:
                        return False
                elif a % t:
                    return False
        return True

    def image_columns(self):
        return [
            [self.matrix.entries[i][j] for i in range(self.target.ngens)]
            for j in range(self.source.ngens)
        ]

    def is_surjective(self):
        return cokernel(self).is_zero()


class _Quotient:
    """L1 / L2 for lattices L2 <= L1 <= Z^dim given by generating columns."""

    def __init__(self, gens1, gens2, dim, names=None):
        self.dim = dim
        self._ech = echelon_of(gens1, dim)
        basis = self._ech.basis
        self.basis = basis  # dim x r, as list of columns
        r = len(basis)
        if gens2:
            X = []
            for c in gens2:
                y = self._ech.solve(c)
                if y is None:
                    raise CompositionNonzero(
                        "relations do not lie in the ambient lattice"
                    )
                X.append(y)
            X = [[X[j][i] for j in range(len(X))] for i in range(r)]  # r x k
        else:
            X = [[0] * 0 for _ in range(r)]
        self._X = X
        if r == 0:
            self.group = FinAbGroup.zero()
            self._keep = []
            self._orders = []
            return
        if not X or not X[0]:
            diag = []
        else:
            diag = snf_diagonal(X)
        orders = [abs(diag[i]) if i < len(diag) else 0 for i in range(r)]
        self.__U = None
        self.__Uinv = None
        self._orders = orders
        keep = [i for i, d in enumerate(orders) if d != 1]
        self._keep = keep
        out_orders = [orders[i] for i in keep]
        nm = None
        if names is not None and len(names) >= len(keep):
            nm = [names[t] for t in range(len(keep))]
        self.group = FinAbGroup.from_orders(out_orders, nm)

    @property
    def _U(self):
        if self.__U is None:
            r = len(self.basis)
            X = self._X
            if not X or not X[0]:
                self.__U = _identity(r)
            else:
                U, D, V = snf_transforms(X)
                check = [abs(D[i][i]) if i < min(r, len(X[0])) else 0 for i in range(r)]
                assert check == self._orders, "transform SNF disagrees with diagonal SNF"
                self.__U = U
        return self.__U

    @property
    def _Uinv(self):
        if self.__Uinv is None:
            self.__Uinv = _unimodular_inverse(self._U)
        return self.__Uinv

    def reduce(self, vec):
        """Coordinates in the quotient group of a vector of L1 (in Z^dim)."""
        if not self._keep:
            return []
        y = self._ech.solve(list(vec))
        if y is None:
            raise ValueError("vector not in the ambient lattice")
        z = _mat_vec(self._U, y)
        out = []
        for i in self._keep:
            d = self._orders[i]
            out.append(z[i] % d if d else z[i])
        return out

    def lift(self, k):
        """A vector of Z^dim representing the k-th group generator."""
        i = self._keep[k]
        r = len(self.basis)
        col = [self._Uinv[t][i] for t in range(r)]
        return [sum(self.basis[j][t] * col[j] for j in range(r)) for t in range(self.dim)]


def homology_at(d_in: GroupMap, d_out: GroupMap):
    """ker(d_out)/im(d_in) at the middle group, with a projection from the
    kernel subgroup and a section on homology generators.

    Raises CompositionNonzero unless d_out o d_in = 0."""
    if not d_out.compose(d_in).is_zero():
        raise CompositionNonzero("d_out o d_in != 0")
    B = d_in.target
    dim = B.ngens
    rel_B = B.relation_columns()
    # preimage lattice of 0 under d_out, inside Z^dim
    M = d_out.matrix.entries
    rel_C = d_out.target.relation_columns()
    block = [row[:] + [c[i] for c in rel_C] for i, row in enumerate(M)]
    kc = kernel_columns(block, dim + len(rel_C))
    ker_gens = [col[:dim] for col in kc] + rel_B
    im_gens = d_in.image_columns() + rel_B
    H = _Quotient(ker_gens, im_gens, dim)
    return HomologyResult(H.group, _quot=H, _ker_data=(ker_gens, rel_B, dim))


class HomologyResult:
    """Homology group plus (lazily built) projection from the kernel subgroup
    and a generator-level section back into it."""

    def __init__(self, group, _quot=None, _ker_data=None):
        self.group = group
        self._quot = _quot
        self._ker_data = _ker_data
        self._kerq = None

    def _kernel_quotient(self):
        if self._kerq is None:
            ker_gens, rel_B, dim = self._ker_data
            self._kerq = _Quotient(ker_gens, rel_B, dim)
        return self._kerq

    @property
    def kernel_group(self):
        return self._kernel_quotient().group

    @property
    def project(self):
        K = self._kernel_quotient()
        H = self._quot
        pcols = [H.reduce(K.lift(k)) for k in range(K.group.ngens)]
        return GroupMap(
            K.group,
            H.group,
            IntMatrix(
                [[pcols[j][i] for j in range(K.group.ngens)] for i in range(H.group.ngens)],
                ncols=K.group.ngens,
            ),
        )

    @property
    def lift_sample(self):
        K = self._kernel_quotient()
        H = self._quot
        lcols = [K.reduce(H.lift(k)) for k in range(H.group.ngens)]
        return GroupMap(
            H.group,
            K.group,
            IntMatrix(
                [[lcols[j][i] for j in range(H.group.ngens)] for i in range(K.group.ngens)],
                ncols=H.group.ngens,
            ),
            check=False,
        )

    def reduce_cycle(self, vec):
        """Homology coordinates of a cycle given in middle-group coordinates."""
        return self._quot.reduce(vec)

    def generator_cycle(self, k):
        """A representing cycle (middle-group coordinates) of generator k."""
        return self._quot.lift(k)


def cokernel(f: GroupMap):
    """coker(f) = target/im(f) as a _Quotient-backed result."""
    dim = f.target.ngens
    amb = [[1 if i == j else 0 for i in range(dim)] for j in range(dim)]
    rel = f.image_columns() + f.target.relation_columns()
    return _Quotient(amb, rel, dim)


def quotient_group(f: GroupMap):
    return cokernel(f).group


def kernel_group(f: GroupMap):
    """ker(f) as an abstract group (subgroup of the source)."""
    zero = GroupMap.zero(FinAbGroup.zero(), f.source)
    return homology_at(zero, f).group


@dataclass(frozen=True)
class ExtensionClass:
    """Element of Ext^1(quot, sub) as a residue matrix: entry (i, j) is the
    coefficient of sub generator i in n_j * (lift of quot generator j)."""

    sub: FinAbGroup
    quot: FinAbGroup
    klass: tuple

    def __post_init__(self):
        rows = self.sub.ngens
        cols = self.quot.ngens
        if len(self.klass) != rows or any(len(r) != cols for r in self.klass):
            raise ValueError("class matrix shape mismatch")


def solve_extension(e: ExtensionClass):
    """Middle group of 0 -> sub -> E -> quot -> 0 for the given class.

    Returns (group, provenance) where provenance maps each generator of the
    middle group to its expression in the x_i (sub) / y_j (quot lift) basis."""
    sub, quot = e.sub, e.quot
    ns, nq = sub.ngens, quot.ngens
    dim = ns + nq
    rels = []
    for i, t in enumerate(sub.gen_orders()):
        if t:
            col = [0] * dim
            col[i] = t
            rels.append(col)
    for j, n in enumerate(quot.gen_orders()):
        if n:
            col = [0] * dim
            col[ns + j] = n
            for i in range(ns):
                col[i] = -e.klass[i][j]
            rels.append(col)
    amb = [[1 if i == j else 0 for i in range(dim)] for j in range(dim)]
    Q = _Quotient(amb, rels, dim)
    names = [f"x:{g}" for g in sub.generators] + [f"y:{g}" for g in quot.generators]
    prov = {}
    for k in range(Q.group.ngens):
        vec = Q.lift(k)
        terms = [f"{c}*{names[t]}" for t, c in enumerate(vec) if c]
        prov[Q.group.generators[k]] = " + ".join(terms) if terms else "0"
    return Q.group, prov
