"""Exact linear algebra over Z/l^n: valuations, units, matrices, Smith form.

Everything in this module is immutable and pure.  Residues are stored as
canonical least non-negative representatives and every operation reduces
eagerly, so equality and hashing are structural; the group-enumeration
layers rely on this to dedupe matrices by value.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Sequence

# Witness set making Miller-Rabin deterministic for all n < 3.3e24.
_MR_WITNESSES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37)

# Moduli must fit a 64-bit word so that numpy batch kernels stay exact.
_WORD_CAP = 1 << 63


class NotInvertible(ValueError):
    """Scalar or matrix has no inverse over the ring."""


def is_prime(n: int) -> bool:
    """Deterministic primality check (trial division + Miller-Rabin)."""
    if n < 2:
        return False
    for p in (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37):
        if n % p == 0:
            return n == p
    d, s = n - 1, 0
    while d % 2 == 0:
        d //= 2
        s += 1
    for a in _MR_WITNESSES:
        x = pow(a, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(s - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


def unit_group_order(ell: int, level: int) -> int:
    """Order of (Z/l^level)^*, i.e. Euler phi of a prime power."""
    if level == 0:
        return 1
    return ell ** level - ell ** (level - 1)


@dataclass(frozen=True)
class ResidueRing:
    """The ring Z/l^n for a prime l and level n >= 1."""

    ell: int
    level: int
    modulus: int = field(init=False, compare=False, repr=False)

    def __post_init__(self) -> None:
        if not isinstance(self.ell, int) or not is_prime(self.ell):
            raise ValueError(f"ell must be prime, got {self.ell}")
        if self.level < 1:
            raise ValueError(f"level must be >= 1, got {self.level}")
        m = self.ell ** self.level
        if m >= _WORD_CAP:
            raise ValueError("modulus l^n must fit in a 64-bit word")
        object.__setattr__(self, "modulus", m)

    def reduce(self, x: int) -> int:
        return x % self.modulus

    def valuation(self, x: int) -> int:
        """Largest v <= level with l^v | x; by convention valuation(0) = level."""
        x %= self.modulus
        if x == 0:
            return self.level
        v = 0
        while x % self.ell == 0:
            x //= self.ell
            v += 1
        return v

    def is_unit(self, x: int) -> bool:
        return x % self.ell != 0

    def inverse(self, x: int) -> int:
        try:
            return pow(x, -1, self.modulus)
        except ValueError:
            raise NotInvertible(f"{x} is not a unit mod {self.ell}^{self.level}") from None

    def units(self) -> Iterator[int]:
        """Units in ascending canonical order."""
        for x in range(1, self.modulus):
            if x % self.ell != 0:
                yield x

    @property
    def unit_count(self) -> int:
        return unit_group_order(self.ell, self.level)

    def elem(self, x: int) -> "ResidueElem":
        return ResidueElem(x, self)

    def at_level(self, level: int) -> "ResidueRing":
        return ResidueRing(self.ell, level)


@dataclass(frozen=True)
class ResidueElem:
    """A canonical residue together with its ring."""

    value: int
    ring: ResidueRing

    def __post_init__(self) -> None:
        object.__setattr__(self, "value", self.ring.reduce(self.value))

    @property
    def valuation(self) -> int:
        return self.ring.valuation(self.value)

    @property
    def is_unit(self) -> bool:
        return self.ring.is_unit(self.value)

    def inverse(self) -> "ResidueElem":
        return ResidueElem(self.ring.inverse(self.value), self.ring)

    def _coerce(self, other) -> int:
        if isinstance(other, ResidueElem):
            if other.ring != self.ring:
                raise ValueError("mixed rings")
            return other.value
        return int(other)

    def __add__(self, other) -> "ResidueElem":
        return ResidueElem(self.value + self._coerce(other), self.ring)

    def __sub__(self, other) -> "ResidueElem":
        return ResidueElem(self.value - self._coerce(other), self.ring)

    def __mul__(self, other) -> "ResidueElem":
        return ResidueElem(self.value * self._coerce(other), self.ring)

    __rmul__ = __mul__

    def __neg__(self) -> "ResidueElem":
        return ResidueElem(-self.value, self.ring)


def valuation(x: ResidueElem) -> int:
    """l-adic valuation of a residue, with valuation(0) = level."""
    return x.valuation


class MatrixMod:
    """A square matrix over a ResidueRing, stored canonically reduced.

    Instances are immutable, hashable and comparable by value, which is what
    lets group closures use plain sets for dedup.
    """

    __slots__ = ("ring", "rows", "_hash")

    def __init__(self, ring: ResidueRing, rows: Sequence[Sequence[int]]):
        m = ring.modulus
        self.ring = ring
        self.rows = tuple(tuple(int(x) % m for x in row) for row in rows)
        n = len(self.rows)
        if any(len(r) != n for r in self.rows):
            raise ValueError("matrix must be square")
        self._hash = None

    # -- construction -----------------------------------------------------

    @classmethod
    def identity(cls, ring: ResidueRing, dim: int) -> "MatrixMod":
        return cls(ring, [[1 if i == j else 0 for j in range(dim)] for i in range(dim)])

    @classmethod
    def diagonal(cls, ring: ResidueRing, entries: Sequence[int]) -> "MatrixMod":
        n = len(entries)
        return cls(ring, [[entries[i] if i == j else 0 for j in range(n)] for i in range(n)])

    @classmethod
    def from_flat(cls, ring: ResidueRing, dim: int, flat: Sequence[int]) -> "MatrixMod":
        it = iter(flat)
        return cls(ring, [[next(it) for _ in range(dim)] for _ in range(dim)])

    # -- value semantics ---------------------------------------------------

    @property
    def dim(self) -> int:
        return len(self.rows)

    def flat(self) -> tuple[int, ...]:
        return tuple(x for row in self.rows for x in row)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, MatrixMod)
            and self.ring == other.ring
            and self.rows == other.rows
        )

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash((self.ring.ell, self.ring.level, self.rows))
        return self._hash

    def __repr__(self) -> str:
        return f"MatrixMod({self.ring.ell}^{self.ring.level}, {list(map(list, self.rows))})"

    # -- arithmetic ---------------------------------------------------------

    def __matmul__(self, other: "MatrixMod") -> "MatrixMod":
        if self.ring != other.ring:
            raise ValueError("mixed rings")
        m = self.ring.modulus
        brows = other.rows
        n = self.dim
        out = [
            [sum(arow[k] * brows[k][j] for k in range(n)) % m for j in range(n)]
            for arow in self.rows
        ]
        return MatrixMod(self.ring, out)

    def __add__(self, other: "MatrixMod") -> "MatrixMod":
        return MatrixMod(
            self.ring,
            [[a + b for a, b in zip(ra, rb)] for ra, rb in zip(self.rows, other.rows)],
        )

    def __sub__(self, other: "MatrixMod") -> "MatrixMod":
        return MatrixMod(
            self.ring,
            [[a - b for a, b in zip(ra, rb)] for ra, rb in zip(self.rows, other.rows)],
        )

    def __neg__(self) -> "MatrixMod":
        return MatrixMod(self.ring, [[-a for a in row] for row in self.rows])

    def scale(self, c: int) -> "MatrixMod":
        return MatrixMod(self.ring, [[c * a for a in row] for row in self.rows])

    def transpose(self) -> "MatrixMod":
        return MatrixMod(self.ring, list(zip(*self.rows)))

    def apply(self, vec: Sequence[int]) -> tuple[int, ...]:
        """Matrix-vector product, canonical output."""
        m = self.ring.modulus
        return tuple(sum(row[k] * vec[k] for k in range(self.dim)) % m for row in self.rows)

    # -- invertibility ------------------------------------------------------

    def det(self) -> int:
        """Determinant, computed exactly on integer lifts then reduced."""
        return self.ring.reduce(_int_det([list(r) for r in self.rows]))

    @property
    def is_invertible(self) -> bool:
        # Over the local ring Z/l^n a matrix is invertible iff det is a unit.
        return self.ring.is_unit(self.det())

    def inverse(self) -> "MatrixMod":
        return mat_invert(self)

    def reduce_level(self, level: int) -> "MatrixMod":
        return MatrixMod(self.ring.at_level(level), self.rows)

    def is_identity(self) -> bool:
        return all(
            x == (1 if i == j else 0)
            for i, row in enumerate(self.rows)
            for j, x in enumerate(row)
        )


def _int_det(a: list[list[int]]) -> int:
    """Fraction-free Bareiss determinant over the integers."""
    n = len(a)
    if n == 0:
        return 1
    sign = 1
    prev = 1
    for k in range(n - 1):
        if a[k][k] == 0:
            piv = next((i for i in range(k + 1, n) if a[i][k] != 0), None)
            if piv is None:
                return 0
            a[k], a[piv] = a[piv], a[k]
            sign = -sign
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]) // prev
        prev = a[k][k]
    return sign * a[n - 1][n - 1]


def mat_invert(M: MatrixMod) -> MatrixMod:
    """Inverse of M over Z/l^n via Gauss-Jordan with unit pivoting.

    Over a local ring elimination succeeds exactly when the matrix is
    invertible: at every step the remaining block must contain a unit in its
    first column, otherwise the reduction mod l is singular.
    """
    ring = M.ring
    n = M.dim
    m = ring.modulus
    ell = ring.ell
    a = [list(row) for row in M.rows]
    inv = [[1 if i == j else 0 for j in range(n)] for i in range(n)]
    for col in range(n):
        piv = next((r for r in range(col, n) if a[r][col] % ell != 0), None)
        if piv is None:
            raise NotInvertible("determinant is not a unit")
        if piv != col:
            a[col], a[piv] = a[piv], a[col]
            inv[col], inv[piv] = inv[piv], inv[col]
        s = pow(a[col][col], -1, m)
        a[col] = [x * s % m for x in a[col]]
        inv[col] = [x * s % m for x in inv[col]]
        for r in range(n):
            if r != col and a[r][col]:
                f = a[r][col]
                a[r] = [(x - f * y) % m for x, y in zip(a[r], a[col])]
                inv[r] = [(x - f * y) % m for x, y in zip(inv[r], inv[col])]
    return MatrixMod(ring, inv)


def _smith_rect(ring: ResidueRing, mat: list[list[int]]):
    """Smith form of a rectangular matrix over Z/l^n by valuation pivoting.

    Returns row and column transforms U, V (as lists) and the diagonal D with
    U*mat*V = D.  The pivot is always an entry of globally minimal valuation
    (ties broken row-major), so the diagonal valuations come out
    non-decreasing; unit parts of pivots are absorbed into U, leaving pure
    powers of l (or 0) on the diagonal.
    """
    nr = len(mat)
    nc = len(mat[0]) if nr else 0
    m = ring.modulus
    ell = ring.ell
    level = ring.level
    a = [[x % m for x in row] for row in mat]
    U = [[1 if i == j else 0 for j in range(nr)] for i in range(nr)]
    V = [[1 if i == j else 0 for j in range(nc)] for i in range(nc)]
    for k in range(min(nr, nc)):
        best = None
        bestv = level
        for i in range(k, nr):
            for j in range(k, nc):
                v = ring.valuation(a[i][j])
                if v < bestv:
                    bestv, best = v, (i, j)
        if best is None:
            break  # remaining block is identically zero
        bi, bj = best
        if bi != k:
            a[k], a[bi] = a[bi], a[k]
            U[k], U[bi] = U[bi], U[k]
        if bj != k:
            for row in a:
                row[k], row[bj] = row[bj], row[k]
            for row in V:
                row[k], row[bj] = row[bj], row[k]
        pe = ell ** bestv
        u = a[k][k] // pe
        s = pow(u, -1, m)
        a[k] = [x * s % m for x in a[k]]
        U[k] = [x * s % m for x in U[k]]
        for r in range(k + 1, nr):
            if a[r][k]:
                f = a[r][k] // pe  # exact: every entry has valuation >= bestv
                a[r] = [(x - f * y) % m for x, y in zip(a[r], a[k])]
                U[r] = [(x - f * y) % m for x, y in zip(U[r], U[k])]
        for c in range(k + 1, nc):
            if a[k][c]:
                f = a[k][c] // pe
                for row in a:
                    row[c] = (row[c] - f * row[k]) % m
                for row in V:
                    row[c] = (row[c] - f * row[k]) % m
    return U, a, V


def smith_normal_form(M: MatrixMod) -> tuple[MatrixMod, MatrixMod, MatrixMod]:
    """Decompose M as U M V = D with U, V invertible and D diagonal.

    Diagonal entries are 0 or pure powers of l, in non-decreasing valuation
    order.
    """
    U, D, V = _smith_rect(M.ring, [list(r) for r in M.rows])
    return MatrixMod(M.ring, U), MatrixMod(M.ring, D), MatrixMod(M.ring, V)
