"""Matrices over truncated local rings and the p-subgroup toolkit.

``Mat`` is an immutable matrix over a ``ring.Ring``; ``GroupDesc``
names one of the groups GL_n(O_r) or SL_n(O_r).  On top of the plain
matrix operations this module provides the number-theoretic helpers
the rest of the package is built on: exact element orders, the
closed-form expansion of powers of A(I + pi X) over length-2 rings,
the binomial double sum controlling when that expansion collapses,
and exhaustive or sampled computation of the p-exponent via a Sylow
p-subgroup stream.

Matrix literals use ';' between rows and ',' between entries, each
entry a ring-element expression: ``"1,1,0;t,1,1;t,0,1"``.  Witt-kind
entries are plain integers (f = 1) or x-polynomials.
"""

from __future__ import annotations

import itertools
import math
import random
from dataclasses import dataclass

import numpy as np

from . import batch as batchmod
from . import ring as ringmod
from .errors import CapExceededError, MembershipError, NonUnitError, ParseError

SYLOW_CAP = 20_000_000

_ORDER_CHUNK = 16384


class Mat:
    """Immutable n x n matrix over a truncated local ring."""

    __slots__ = ("ring", "rows", "_hash")

    def __init__(self, ring, rows):
        rows = tuple(tuple(row) for row in rows)
        n = len(rows)
        if n == 0 or any(len(row) != n for row in rows):
            raise ValueError("matrix must be square and nonempty")
        object.__setattr__(self, "ring", ring)
        object.__setattr__(self, "rows", rows)
        object.__setattr__(self, "_hash", None)

    def __setattr__(self, *a):
        raise AttributeError("Mat is immutable")

    @property
    def n(self):
        return len(self.rows)

    @staticmethod
    def identity(ring, n):
        z, o = ring.zero, ring.one
        return Mat(ring, tuple(tuple(o if i == j else z for j in range(n)) for i in range(n)))

    @staticmethod
    def zero(ring, n):
        z = ring.zero
        return Mat(ring, ((z,) * n,) * n)

    def entry(self, i, j):
        return self.rows[i][j]

    def with_entry(self, i, j, value):
        rows = [list(row) for row in self.rows]
        rows[i][j] = value
        return Mat(self.ring, rows)

    def __eq__(self, other):
        return isinstance(other, Mat) and self.ring == other.ring and self.rows == other.rows

    def __hash__(self):
        h = self._hash
        if h is None:
            h = hash((self.ring, self.rows))
            object.__setattr__(self, "_hash", h)
        return h

    def __add__(self, other):
        R = self.ring
        return Mat(R, tuple(tuple(R.add(a, b) for a, b in zip(ra, rb))
                            for ra, rb in zip(self.rows, other.rows)))

    def __sub__(self, other):
        R = self.ring
        return Mat(R, tuple(tuple(R.sub(a, b) for a, b in zip(ra, rb))
                            for ra, rb in zip(self.rows, other.rows)))

    def __mul__(self, other):
        if not isinstance(other, Mat):
            return NotImplemented
        R = self.ring
        if R != other.ring or self.n != other.n:
            raise ValueError("matrix shape or base ring mismatch")
        n = self.n
        add, mul, zero = R.add, R.mul, R.zero
        bcols = tuple(zip(*other.rows))
        out = []
        for row in self.rows:
            orow = []
            for col in bcols:
                acc = zero
                for a, b in zip(row, col):
                    if a != zero and b != zero:
                        acc = add(acc, mul(a, b))
                orow.append(acc)
            out.append(tuple(orow))
        return Mat(R, tuple(out))

    def __pow__(self, e: int):
        if e < 0:
            return self.inverse() ** (-e)
        result = Mat.identity(self.ring, self.n)
        base = self
        while e:
            if e & 1:
                result = result * base
            base = base * base
            e >>= 1
        return result

    def scale(self, u):
        R = self.ring
        return Mat(R, tuple(tuple(R.mul(u, a) for a in row) for row in self.rows))

    def is_identity(self):
        return self == Mat.identity(self.ring, self.n)

    def is_zero(self):
        z = self.ring.zero
        return all(a == z for row in self.rows for a in row)

    def is_unitriangular(self):
        R = self.ring
        for i, row in enumerate(self.rows):
            if row[i] != R.one:
                return False
            for j in range(i):
                if row[j] != R.zero:
                    return False
        return True

    def det(self):
        """Exact determinant: Leibniz for n <= 4, unit-pivot elimination above.

        Pivots are taken among valuation-0 entries (always available while
        the remaining block is invertible); if none remains, the leftover
        block is expanded division-free.
        """
        n = self.n
        if n <= 4:
            return _det_leibniz(self.ring, self.rows)
        R = self.ring
        a = [list(row) for row in self.rows]
        detv = R.one
        sign = 1
        for k in range(n):
            piv = None
            for i in range(k, n):
                for j in range(k, n):
                    if R.is_unit(a[i][j]):
                        piv = (i, j)
                        break
                if piv:
                    break
            if piv is None:
                rest = tuple(tuple(a[i][j] for j in range(k, n)) for i in range(k, n))
                tail = _det_leibniz(R, rest)
                prod = R.mul(detv, tail)
                return prod if sign == 1 else R.neg(prod)
            pi_, pj = piv
            if pi_ != k:
                a[pi_], a[k] = a[k], a[pi_]
                sign = -sign
            if pj != k:
                for row in a:
                    row[pj], row[k] = row[k], row[pj]
                sign = -sign
            pivot = a[k][k]
            detv = R.mul(detv, pivot)
            pinv = R.inv(pivot)
            for i in range(k + 1, n):
                factor = R.mul(a[i][k], pinv)
                if factor == R.zero:
                    continue
                for j in range(k, n):
                    a[i][j] = R.sub(a[i][j], R.mul(factor, a[k][j]))
        return detv if sign == 1 else R.neg(detv)

    def inverse(self):
        """Invert the residue matrix over F_q, then Newton-lift the result."""
        R = self.ring
        n = self.n
        res_inv = _field_inverse(R, self.rows)
        x = Mat(R, tuple(tuple(_lift_field_elem(R, e) for e in row) for row in res_inv))
        two_i = Mat.identity(R, n) + Mat.identity(R, n)
        steps = max(0, (R.r - 1).bit_length())
        for _ in range(steps):
            x = x * (two_i - self * x)
        if not (self * x).is_identity():
            raise ArithmeticError("inverse lift failed")
        return x

    def reduce_to(self, s: int):
        R = self.ring
        target = R.truncate(s)
        return Mat(target, tuple(tuple(R.reduce_to(a, s) for a in row) for row in self.rows))

    def render(self):
        R = self.ring
        return ";".join(",".join(R.render(a) for a in row) for row in self.rows)

    def __str__(self):
        return self.render()

    def __repr__(self):
        return f"Mat({self.ring.label}, {self.render()!r})"


def _det_leibniz(R, rows):
    n = len(rows)
    total = R.zero
    for perm in itertools.permutations(range(n)):
        inv = sum(1 for i in range(n) for j in range(i + 1, n) if perm[i] > perm[j])
        term = R.one
        for i in range(n):
            term = R.mul(term, rows[i][perm[i]])
        total = R.add(total, R.neg(term) if inv & 1 else term)
    return total


def _field_inverse(R, rows):
    """Gauss-Jordan inverse of the residue matrix, entries in F_q."""
    F = R.field
    n = len(rows)
    aug = [[R.residue(rows[i][j]) for j in range(n)]
           + [F.one if i == j else F.zero for j in range(n)] for i in range(n)]
    for c in range(n):
        piv = next((i for i in range(c, n) if aug[i][c] != F.zero), None)
        if piv is None:
            raise NonUnitError("matrix is not invertible over the ring "
                               "(residue matrix is singular)")
        aug[c], aug[piv] = aug[piv], aug[c]
        inv = F.inv(aug[c][c])
        aug[c] = [F.mul(inv, e) for e in aug[c]]
        for i in range(n):
            if i != c and aug[i][c] != F.zero:
                factor = aug[i][c]
                aug[i] = [F.sub(e, F.mul(factor, pe)) for e, pe in zip(aug[i], aug[c])]
    return [row[n:] for row in aug]


def _lift_field_elem(R, a):
    if R.kind == ringmod.WITT:
        return tuple(a)
    return (a,) + (R.field.zero,) * (R.r - 1)


def transvection(ring, n, i, j, u):
    """I + u E_ij (i != j)."""
    if i == j:
        raise ValueError("transvections live off the diagonal")
    return Mat.identity(ring, n).with_entry(i, j, u)


def diagonal(ring, entries):
    entries = tuple(entries)
    n = len(entries)
    m = Mat.identity(ring, n)
    for i, e in enumerate(entries):
        m = m.with_entry(i, i, e)
    return m


# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GroupDesc:
    """GL_n or SL_n over a truncated local ring."""

    family: str
    n: int
    ring: ringmod.Ring

    def __post_init__(self):
        if self.family not in ("GL", "SL"):
            raise ValueError("family must be 'GL' or 'SL'")
        if self.n < 1:
            raise ValueError("n must be >= 1")

    @property
    def label(self):
        return f"{self.family}_{self.n}({self.ring.label})"

    @property
    def kernel_dim(self):
        return self.n * self.n if self.family == "GL" else self.n * self.n - 1

    def residue_order(self) -> int:
        q, n = self.ring.q, self.n
        order = 1
        for i in range(n):
            order *= q ** n - q ** i
        if self.family == "SL":
            order //= q - 1
        return order

    def order(self) -> int:
        return self.residue_order() * self.ring.q ** ((self.ring.r - 1) * self.kernel_dim)

    def sylow_size(self) -> int:
        q, n, r = self.ring.q, self.n, self.ring.r
        return q ** (n * (n - 1) // 2) * q ** ((r - 1) * self.kernel_dim)

    def identity_mat(self) -> Mat:
        return Mat.identity(self.ring, self.n)

    def contains(self, mat: Mat) -> bool:
        if not isinstance(mat, Mat) or mat.ring != self.ring or mat.n != self.n:
            return False
        d = mat.det()
        if self.family == "SL":
            return d == self.ring.one
        return self.ring.is_unit(d)


def is_member(mat: Mat, group: GroupDesc) -> bool:
    return group.contains(mat)


def _ceil_log(p: int, n: int) -> int:
    k, v = 0, 1
    while v < n:
        v *= p
        k += 1
    return k


def exponent_multiple(group: GroupDesc) -> dict:
    """A factored multiple of the exponent of GL_n(O_r).

    lcm of q^d - 1 for d <= n covers semisimple parts over the residue
    field; the p-part p^(ceil(log_p n) + r - 1) covers unipotents and
    the congruence kernel (one factor of p per extra length step).
    """
    from sympy import factorint

    R = group.ring
    factors = {R.p: _ceil_log(R.p, group.n) + R.r - 1}
    for d in range(1, group.n + 1):
        for ell, e in factorint(R.q ** d - 1).items():
            factors[ell] = max(factors.get(ell, 0), e)
    return factors


def element_order(mat: Mat, group: GroupDesc) -> int:
    """Exact multiplicative order, via a factored exponent multiple."""
    if not group.contains(mat):
        raise MembershipError(f"matrix is not in {group.label}")
    factors = exponent_multiple(group)
    m = 1
    for ell, e in factors.items():
        m *= ell ** e
    if not (mat ** m).is_identity():
        raise ArithmeticError("exponent multiple failed; arithmetic bug")
    order = m
    for ell in sorted(factors):
        while order % ell == 0 and (mat ** (order // ell)).is_identity():
            order //= ell
    return order


# ---------------------------------------------------------------------------
# length-2 power expansion helpers

def unitriangular_power(A: Mat, X: Mat, m: int) -> Mat:
    """A^m + pi * sum_{i=0}^{m-1} A^(m-i) X A^i, over a length-2 ring.

    Equals (A (I + pi X))^m there, because pi^2 = 0 makes the expansion
    of the product collapse to the linear terms.
    """
    R = A.ring
    if R.r != 2:
        raise ValueError("the closed-form expansion needs a length-2 ring")
    if X.ring != R or X.n != A.n:
        raise ValueError("A and X must match")
    if not A.is_unitriangular():
        raise ValueError("A must be upper unitriangular")
    if m < 0:
        raise ValueError("m must be >= 0")
    pows = [Mat.identity(R, A.n)]
    for _ in range(m):
        pows.append(pows[-1] * A)
    total = Mat.zero(R, A.n)
    for i in range(m):
        total = total + pows[m - i] * X * pows[i]
    return pows[m] + total.scale(R.pi)


def chu_sum(p: int, k: int, ell: int) -> int:
    """sum_{i=0}^{p-1} C(p-i, k) C(i, ell) mod p.

    Vanishes whenever k, ell < n and p >= 2n (the tail of the
    Vandermonde convolution C(p+1, k+ell+1) is divisible by p there).
    """
    if k < 0 or ell < 0:
        raise ValueError("binomial indices must be nonnegative")
    total = sum(math.comb(p - i, k) * math.comb(i, ell) for i in range(p))
    return total % p


def b_matrix(A: Mat, X: Mat, p: int | None = None) -> Mat:
    """B = sum_{i=0}^{p-1} A^(p-i) X A^i over a length-2 ring.

    g = A(I + pi X) has g^p = A^p + pi B, so B mod pi decides whether
    p-th powers leave the congruence kernel pattern; it vanishes mod pi
    whenever p >= 2n.
    """
    R = A.ring
    if R.r != 2:
        raise ValueError("B is defined over length-2 rings")
    if p is None:
        p = R.p
    elif p != R.p:
        raise ValueError("p must be the residue characteristic of the ring")
    if not A.is_unitriangular():
        raise ValueError("A must be upper unitriangular")
    pows = [Mat.identity(R, A.n)]
    for _ in range(p):
        pows.append(pows[-1] * A)
    total = Mat.zero(R, A.n)
    for i in range(p):
        total = total + pows[p - i] * X * pows[i]
    return total


# ---------------------------------------------------------------------------
# Sylow p-subgroup stream and p-exponent

def _unitriangular_lifts(group: GroupDesc):
    """Entrywise lifts of the upper unitriangular subgroup of G(F_q)."""
    R, n = group.ring, group.n
    F = R.field
    positions = [(i, j) for i in range(n) for j in range(i + 1, n)]
    ident = Mat.identity(R, n)
    for combo in itertools.product(list(F.elements()), repeat=len(positions)):
        m = ident
        for (i, j), a in zip(positions, combo):
            if a != F.zero:
                m = m.with_entry(i, j, _lift_field_elem(R, a))
        yield m


def _pi_multiples(R):
    """All elements of pi * O_r, in canonical digit order."""
    F = R.field
    for combo in itertools.product(list(F.elements()), repeat=R.r - 1):
        yield R.from_digits((F.zero,) + combo)


def _solve_sl_corner(group: GroupDesc, m: Mat) -> Mat:
    """Adjust the last diagonal entry of m (= I + Z pattern) so det = 1."""
    R, n = group.ring, group.n
    if n == 1:
        return Mat(R, ((R.one,),))
    c = n - 1
    d1 = m.det()  # corner entry currently 1
    minor = Mat(R, tuple(tuple(m.entry(i, j) for j in range(c)) for i in range(c)))
    cof = minor.det()  # det is affine in the corner entry with this cofactor
    e_star = R.mul(R.add(R.sub(R.one, d1), cof), R.inv(cof))
    out = m.with_entry(c, c, e_star)
    if out.det() != R.one:
        raise ArithmeticError("corner solve failed")
    return out


def _kernel_elements(group: GroupDesc):
    """The congruence kernel: matrices = I mod pi (det 1 for SL)."""
    R, n = group.ring, group.n
    entries = [(i, j) for i in range(n) for j in range(n)]
    if group.family == "SL":
        entries.remove((n - 1, n - 1))
    pim = list(_pi_multiples(R))
    ident = Mat.identity(R, n)
    for combo in itertools.product(pim, repeat=len(entries)):
        m = ident
        for (i, j), z in zip(entries, combo):
            if z != R.zero:
                m = m.with_entry(i, j, R.add(m.entry(i, j), z))
        if group.family == "SL":
            m = _solve_sl_corner(group, m)
        yield m


def sylow_p_elements(group: GroupDesc, cap: int = SYLOW_CAP):
    """Stream the preimage of the unitriangular subgroup under reduction.

    This preimage is a Sylow p-subgroup of the group, of size
    q^(n(n-1)/2) * q^((r-1) d); every element is a p-element.
    """
    size = group.sylow_size()
    if size > cap:
        raise CapExceededError(f"Sylow subgroup of {group.label} has {size} elements, cap {cap}")
    kernel = list(_kernel_elements(group))
    for u in _unitriangular_lifts(group):
        for k in kernel:
            yield u * k


@dataclass
class ExponentResult:
    value: int
    method: str  # "exhaustive" or "sampled"
    witness: Mat
    upper_bound: int
    note: str

    def payload(self):
        return {
            "value": self.value,
            "method": self.method,
            "witness": self.witness.render(),
            "upper_bound": self.upper_bound,
            "note": self.note,
        }


def mat_coords(mat: Mat) -> np.ndarray:
    R = mat.ring
    n = mat.n
    out = np.empty((n, n, R.w), dtype=np.int64)
    for i in range(n):
        for j in range(n):
            out[i, j] = R.coords(mat.entry(i, j))
    return out


def mat_from_coords(ring, arr) -> Mat:
    arr = np.asarray(arr)
    n = arr.shape[0]
    return Mat(ring, tuple(tuple(ring.from_coords(tuple(int(c) for c in arr[i, j]))
                                 for j in range(n)) for i in range(n)))


def _batch_orders(group: GroupDesc, coords: np.ndarray, max_steps: int):
    """Orders (as powers of p) of a batch of Sylow elements."""
    br = batchmod.BatchRing.get(group.ring)
    p = group.ring.p
    blocks = br.block(coords)
    steps = np.zeros(len(coords), dtype=np.int64)
    alive = ~br.is_identity(blocks)
    rounds = 0
    while alive.any():
        if rounds > max_steps:
            raise ArithmeticError("Sylow element order exceeds the proven bound")
        blocks[alive] = br.matpow(blocks[alive], p)
        steps[alive] += 1
        alive[alive] = ~br.is_identity(blocks[alive])
        rounds += 1
    return steps


def p_exponent(group: GroupDesc, strategy: str = "exhaustive", trials: int = 1000,
               seed: int = 0, cap: int = SYLOW_CAP) -> ExponentResult:
    """Largest order of a p-element (= exponent of a Sylow p-subgroup).

    Exhaustive mode walks the whole Sylow stream; sampled mode draws
    seeded random stream elements and reports a lower bound.
    """
    R = group.ring
    p = R.p
    nil_exp = _ceil_log(p, group.n)
    if R.kind == ringmod.POLY:
        # in characteristic p the binomial theorem gives (1 + t*m)^p =
        # 1 + t^p m^p, so the kernel of reduction mod t has exponent
        # p^ceil(log_p r); reduction mod t of a p-element is unipotent
        bound_exp = _ceil_log(p, R.r) + nil_exp
        upper = p ** bound_exp
        note = (f"upper bound p^(ceil(log_p r)+ceil(log_p n)) = {upper}: congruence "
                f"kernel exponent collapses under the characteristic-p Frobenius")
    else:
        bound_exp = R.r - 1 + nil_exp
        upper = p ** bound_exp
        note = (f"upper bound p^(r-1+ceil(log_p n)) = {upper}: unipotent exponent over the "
                f"residue field times one factor of p per extra length step")
    if strategy == "exhaustive":
        best_k = -1
        best_mat = None
        stream = sylow_p_elements(group, cap=cap)
        while True:
            chunk = list(itertools.islice(stream, _ORDER_CHUNK))
            if not chunk:
                break
            coords = np.stack([mat_coords(m) for m in chunk])
            steps = _batch_orders(group, coords, bound_exp)
            k = int(steps.max())
            if k > best_k:
                best_k = k
                best_mat = chunk[int(np.argmax(steps))]
        value = p ** best_k
        if element_order(best_mat, group) != value:
            raise ArithmeticError("batch order disagrees with scalar order")
        return ExponentResult(value, "exhaustive", best_mat, upper, note)
    if strategy == "sampled":
        rng = random.Random(seed)
        F = R.field
        n = group.n
        mats = []
        for _ in range(trials):
            u = Mat.identity(R, n)
            for i in range(n):
                for j in range(i + 1, n):
                    u = u.with_entry(i, j, _lift_field_elem(R, F.rand(rng)))
            k = Mat.identity(R, n)
            entries = [(i, j) for i in range(n) for j in range(n)]
            if group.family == "SL":
                entries.remove((n - 1, n - 1))
            for (i, j) in entries:
                z = R.rand_pi_multiple(rng)
                if z != R.zero:
                    k = k.with_entry(i, j, R.add(k.entry(i, j), z))
            if group.family == "SL":
                k = _solve_sl_corner(group, k)
            mats.append(u * k)
        coords = np.stack([mat_coords(m) for m in mats])
        steps = _batch_orders(group, coords, bound_exp)
        kbest = int(steps.max())
        witness = mats[int(np.argmax(steps))]
        value = p ** kbest
        if element_order(witness, group) != value:
            raise ArithmeticError("batch order disagrees with scalar order")
        return ExponentResult(value, "sampled", witness, upper,
                              note + f"; lower bound from {trials} samples")
    raise ValueError(f"unknown strategy {strategy!r}")


# ---------------------------------------------------------------------------
# matrix literals

def parse_matrix(ring, text: str) -> Mat:
    """Parse ';'-separated rows of ','-separated ring-element expressions."""
    rows = []
    row = []
    pos = 0
    for piece, sep in _split_with_seps(text):
        if not piece.strip():
            raise ParseError("empty matrix entry", pos)
        row.append(ringmod.parse_element(ring, piece, pos))
        pos += len(piece) + 1
        if sep in (";", None):
            rows.append(row)
            row = []
    n = len(rows)
    if n == 0 or any(len(r) != n for r in rows):
        raise ParseError("matrix must be square (rows ';', entries ',')", 0)
    return Mat(ring, rows)


def _split_with_seps(text: str):
    start = 0
    for i, ch in enumerate(text):
        if ch in ",;":
            yield text[start:i], ch
            start = i + 1
    yield text[start:], None
