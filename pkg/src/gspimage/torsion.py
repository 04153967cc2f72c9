"""Finite subgroups of (Z/l^N)^d in Smith-basis normal form.

A subgroup is carried by an invariant-factor basis e_1, .., e_r with exact
orders l^{m_1} >= .. >= l^{m_r}, together with the row transform that makes
membership a divisibility check.
"""

from __future__ import annotations

from typing import Iterator, Sequence

import numpy as np

from .modring import MatrixMod, ResidueRing, _smith_rect, mat_invert

_ENUM_CAP = 2_000_000


class TorsionSubgroup:
    """Immutable subgroup of (Z/l^N)^d; build via subgroup_from_generators."""

    __slots__ = ("ring", "ambient_dim", "basis", "orders", "_transform", "_divisors")

    def __init__(self, ring, ambient_dim, basis, orders, transform, divisors):
        self.ring = ring
        self.ambient_dim = ambient_dim
        self.basis = tuple(tuple(x % ring.modulus for x in b) for b in basis)
        self.orders = tuple(orders)
        self._transform = transform  # U with U*v divisible by l^{s_i} iff v in H
        self._divisors = tuple(divisors)
        if any(m <= 0 for m in self.orders):
            raise ValueError("orders must be positive")
        if list(self.orders) != sorted(self.orders, reverse=True):
            raise ValueError("orders must be non-increasing")

    @property
    def order(self) -> int:
        return self.ring.ell ** sum(self.orders)

    @property
    def exponent(self) -> int:
        """e with l^e the exponent of the group (0 for the trivial group)."""
        return self.orders[0] if self.orders else 0

    def is_trivial(self) -> bool:
        return not self.orders

    def contains(self, v: Sequence[int]) -> bool:
        if len(v) != self.ambient_dim:
            raise ValueError("vector dimension mismatch")
        ell = self.ring.ell
        w = self._transform.apply(v)
        return all(x % ell ** s == 0 for x, s in zip(w, self._divisors))

    def slice(self, m: int) -> "TorsionSubgroup":
        """The subgroup H[l^m] of elements killed by l^m."""
        if m < 0:
            raise ValueError("m must be >= 0")
        ell = self.ring.ell
        gens = [
            tuple(x * ell ** max(mi - m, 0) for x in b)
            for b, mi in zip(self.basis, self.orders)
            if min(mi, m) > 0
        ]
        return subgroup_from_generators(gens, self.ring, ambient_dim=self.ambient_dim)

    def lifted(self, level: int) -> "TorsionSubgroup":
        """Image under the injection (Z/l^N)^d -> (Z/l^M)^d, x -> l^(M-N) x."""
        if level < self.ring.level:
            raise ValueError("can only lift to a higher level")
        shift = self.ring.ell ** (level - self.ring.level)
        gens = [tuple(x * shift for x in b) for b in self.basis]
        return subgroup_from_generators(
            gens, self.ring.at_level(level), ambient_dim=self.ambient_dim
        )

    def iter_elements(self) -> Iterator[tuple[int, ...]]:
        """All elements, in deterministic coefficient order."""
        mod = self.ring.modulus
        ell = self.ring.ell
        elems = [(0,) * self.ambient_dim]
        for b, m in zip(self.basis, self.orders):
            nxt = []
            for c in range(ell ** m):
                for e in elems:
                    nxt.append(tuple((x + c * y) % mod for x, y in zip(e, b)))
            elems = nxt
        yield from elems

    def element_array(self) -> np.ndarray:
        """All elements as an (|H|, d) int64 array."""
        if self.order > _ENUM_CAP:
            raise ValueError(f"refusing to enumerate {self.order} elements")
        mod = self.ring.modulus
        ell = self.ring.ell
        out = np.zeros((1, self.ambient_dim), dtype=np.int64)
        for b, m in zip(self.basis, self.orders):
            coeffs = np.arange(ell**m, dtype=np.int64)
            bvec = np.array(b, dtype=np.int64)
            out = (coeffs[:, None, None] * bvec[None, None, :] + out[None, :, :]) % mod
            out = out.reshape(-1, self.ambient_dim)
        return out

    def same_subgroup(self, other: "TorsionSubgroup") -> bool:
        """Equality as subgroups (Smith bases are not unique)."""
        if self.ring != other.ring or self.ambient_dim != other.ambient_dim:
            return False
        if self.orders != other.orders:
            return False
        return all(other.contains(b) for b in self.basis) and all(
            self.contains(b) for b in other.basis
        )

    def __repr__(self) -> str:
        return (
            f"TorsionSubgroup(l={self.ring.ell}, N={self.ring.level}, "
            f"dim={self.ambient_dim}, orders={list(self.orders)})"
        )


def subgroup_from_generators(
    vectors: Sequence[Sequence[int]],
    ring: ResidueRing,
    *,
    ambient_dim: int | None = None,
) -> TorsionSubgroup:
    """Smith-normalize a generating set into an invariant-factor basis.

    Writes the generator matrix A (columns = generators) as U^-1 D V^-1; the
    subgroup is then the direct sum of cyclic factors l^{s_i} * col_i(U^-1)
    of order l^{N - s_i}.
    """
    vectors = [tuple(v) for v in vectors]
    if ambient_dim is None:
        if not vectors:
            raise ValueError("ambient_dim required for an empty generating set")
        ambient_dim = len(vectors[0])
    if any(len(v) != ambient_dim for v in vectors):
        raise ValueError("generators must share the ambient dimension")
    d = ambient_dim
    N = ring.level
    if not vectors:
        return TorsionSubgroup(
            ring, d, [], [], MatrixMod.identity(ring, d), [N] * d
        )
    cols = [[v[i] for v in vectors] for i in range(d)]  # d x k
    U, D, V = _smith_rect(ring, cols)
    Umat = MatrixMod(ring, U)
    Uinv = mat_invert(Umat)
    k = len(vectors)
    basis = []
    orders = []
    divisors = []
    for i in range(d):
        if i < min(d, k):
            s = ring.valuation(D[i][i])
        else:
            s = N
        divisors.append(s)
        if s < N:
            col = tuple(Uinv.rows[r][i] * ring.ell**s % ring.modulus for r in range(d))
            basis.append(col)
            orders.append(N - s)
    return TorsionSubgroup(ring, d, basis, orders, Umat, divisors)


def trivial_subgroup(ring: ResidueRing, ambient_dim: int) -> TorsionSubgroup:
    return subgroup_from_generators([], ring, ambient_dim=ambient_dim)


def full_subgroup(ring: ResidueRing, ambient_dim: int) -> TorsionSubgroup:
    gens = [tuple(1 if i == j else 0 for j in range(ambient_dim)) for i in range(ambient_dim)]
    return subgroup_from_generators(gens, ring, ambient_dim=ambient_dim)


def contains(H: TorsionSubgroup, v: Sequence[int]) -> bool:
    """Membership test via the Smith transform."""
    return H.contains(v)


def slice_subgroup(H: TorsionSubgroup, m: int) -> TorsionSubgroup:
    """The l^m-torsion slice H[l^m]."""
    return H.slice(m)


def parse_generator_rows(text: str) -> list[tuple[int, ...]]:
    """Parse the row-per-generator text format `[[c11,..,c1d],..]`."""
    import json

    data = json.loads(text)
    if not isinstance(data, list) or not all(isinstance(r, list) for r in data):
        raise ValueError("expected a list of generator rows")
    return [tuple(int(x) for x in row) for row in data]
