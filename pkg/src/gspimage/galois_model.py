"""Finite Galois-image engine.

Matrix groups inside GSp_2g(Z/l^n) with materialized closures, pointwise
stabilizers, the field-degree bookkeeping built on the multiplier character,
congruence-filtered subgroups, and the diagonal-torus / self-product
scenario builders.

Degrees are modeled exactly: [K(H):K] is the index of the pointwise
stabilizer, the cyclotomic degree at level m is the size of the multiplier
image mod l^m, and the degree of the cyclotomic intersection is
|lambda(G)| / |lambda(T)| for T the stabilizer.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product
from typing import Iterator, Optional, Sequence

import numpy as np

from .modring import (
    MatrixMod,
    ResidueRing,
    _smith_rect,
    unit_group_order,
)
from .symplectic import (
    SymplecticSpace,
    m1,
    multiplier,
    standard_form,
)
from .torsion import TorsionSubgroup, subgroup_from_generators

DEFAULT_CAP = 10_000_000


class CapExceeded(RuntimeError):
    """A group or search is too large to materialize under the given cap."""


class ChainNotIncreasing(ValueError):
    """Congruence-filter chain is not increasing."""


def _np_batch_ok(mod: int, dim: int) -> bool:
    # intermediate sums stay below 2^62 in int64 kernels
    return dim * mod * mod < (1 << 62)


def _mul_flat(x: tuple, y: tuple, n: int, m: int) -> tuple:
    out = []
    for i in range(n):
        row = x[i * n : (i + 1) * n]
        for j in range(n):
            s = 0
            for k in range(n):
                s += row[k] * y[k * n + j]
            out.append(s % m)
    return tuple(out)


class MatrixGroup:
    """A finite group of similitudes, materialized as an ordered element set.

    Elements are stored row-major as flat integer tuples in a deterministic
    insertion order; numpy views are cached for the batch kernels.
    """

    __slots__ = ("space", "generators", "_flats", "_index", "_arr", "_mults")

    def __init__(self, space: SymplecticSpace, generators, flats):
        self.space = space
        self.generators = tuple(generators)
        for g in self.generators:
            multiplier(g, space)  # raises NotSimilitude on a bad generator
        self._flats = list(flats)
        self._index = frozenset(self._flats)
        if len(self._index) != len(self._flats):
            raise ValueError("duplicate elements")
        self._arr = None
        self._mults = None

    @classmethod
    def from_elements(cls, space, elements, generators=()) -> "MatrixGroup":
        flats = [e.flat() if isinstance(e, MatrixMod) else tuple(e) for e in elements]
        return cls(space, generators, flats)

    @property
    def ring(self) -> ResidueRing:
        return self.space.ring

    @property
    def dim(self) -> int:
        return self.space.dim

    @property
    def order(self) -> int:
        return len(self._flats)

    def element(self, i: int) -> MatrixMod:
        return MatrixMod.from_flat(self.ring, self.dim, self._flats[i])

    def __iter__(self) -> Iterator[MatrixMod]:
        for f in self._flats:
            yield MatrixMod.from_flat(self.ring, self.dim, f)

    def __contains__(self, M: MatrixMod) -> bool:
        return M.flat() in self._index

    def contains_group(self, other: "MatrixGroup") -> bool:
        return other._index <= self._index

    def as_array(self) -> np.ndarray:
        if self._arr is None:
            d = self.dim
            self._arr = np.array(self._flats, dtype=np.int64).reshape(-1, d, d)
        return self._arr

    def multipliers(self) -> tuple[int, ...]:
        """Multiplier of every element, in element order."""
        if self._mults is None:
            mod = self.ring.modulus
            form = self.space.form
            if _np_batch_ok(mod, self.dim):
                arr = self.as_array()
                psi = np.array(form.rows, dtype=np.int64) % mod
                pos = next(
                    (i, j)
                    for i, row in enumerate(form.rows)
                    for j, x in enumerate(row)
                    if self.ring.is_unit(x)
                )
                i, j = pos
                # (M^T psi M)[i,j] = col_i(M)^T psi col_j(M)
                left = (arr[:, :, i] @ psi) % mod
                lam = np.einsum("nb,nb->n", left, arr[:, :, j]) % mod
                lam = lam * self.ring.inverse(form.rows[i][j]) % mod
                self._mults = tuple(int(x) for x in lam)
            else:
                self._mults = tuple(multiplier(M, self.space).value for M in self)
        return self._mults

    def reduce_level(self, level: int) -> "MatrixGroup":
        """Image under reduction mod l^level, insertion order preserved."""
        if level > self.ring.level:
            raise ValueError("can only reduce to a lower level")
        p = self.ring.ell ** level
        seen = set()
        flats = []
        for f in self._flats:
            r = tuple(x % p for x in f)
            if r not in seen:
                seen.add(r)
                flats.append(r)
        ring = self.ring.at_level(level)
        space = SymplecticSpace(self.space.g, self.space.form.reduce_level(level), ring)
        gens = tuple(g.reduce_level(level) for g in self.generators)
        return MatrixGroup(space, gens, flats)


def close(space: SymplecticSpace, generators: Sequence[MatrixMod], cap: int = DEFAULT_CAP) -> MatrixGroup:
    """Breadth-first closure of a generating set under multiplication.

    The generated semigroup equals the generated group because every element
    of a finite matrix group has finite order.  Raises CapExceeded when the
    element count would pass the cap.
    """
    for g in generators:
        multiplier(g, space)
    n = space.dim
    m = space.ring.modulus
    gen_flats = [g.flat() for g in generators]
    ident = MatrixMod.identity(space.ring, n).flat()
    seen = {ident}
    ordered = [ident]
    frontier = [ident]
    while frontier:
        nxt = []
        for x in frontier:
            for gf in gen_flats:
                y = _mul_flat(x, gf, n, m)
                if y not in seen:
                    if len(seen) >= cap:
                        raise CapExceeded(f"closure exceeds cap={cap}")
                    seen.add(y)
                    ordered.append(y)
                    nxt.append(y)
        frontier = nxt
    return MatrixGroup(space, generators, ordered)


def stabilizer(G: MatrixGroup, H: TorsionSubgroup) -> MatrixGroup:
    """Pointwise fixer {M in G : M e = e for every Smith-basis generator e}.

    Fixing a generating set fixes all of H by linearity.
    """
    if not isinstance(G, MatrixGroup):
        raise TypeError("stabilizer enumeration needs a materialized group")
    if H.ring != G.ring:
        raise ValueError("group and subgroup live over different rings")
    if H.ambient_dim != G.dim:
        raise ValueError("ambient dimension mismatch")
    if H.is_trivial():
        return G
    mod = G.ring.modulus
    if _np_batch_ok(mod, G.dim):
        B = np.array(H.basis, dtype=np.int64).T  # d x r
        arr = G.as_array()
        prod = np.einsum("nij,jr->nir", arr, B) % mod
        mask = (prod == B[None, :, :]).all(axis=(1, 2))
        flats = [G._flats[i] for i in np.nonzero(mask)[0]]
    else:
        flats = []
        for f, M in zip(G._flats, G):
            if all(M.apply(v) == v for v in H.basis):
                flats.append(f)
    return MatrixGroup(G.space, (), flats)


class FullGL2Group:
    """GL2(Z/l^m) as a structured group, never materialized.

    Groups past the closure cap are handled by structure instead of
    enumeration; this one supplies the closed-form order and a stabilizer
    counter based on solving the fixing conditions row by row.
    """

    def __init__(self, ring: ResidueRing):
        self.ring = ring
        self.space = standard_form(1, ring)

    @property
    def dim(self) -> int:
        return 2

    @property
    def order(self) -> int:
        ell, n = self.ring.ell, self.ring.level
        return ell ** (4 * (n - 1)) * (ell * ell - 1) * (ell * ell - ell)

    def stabilizer_order(self, H: TorsionSubgroup) -> int:
        """|{M : Mv = v for all v in H}| by counting solutions of (M-I)v = 0.

        Each row r of X = M - I independently satisfies r.v = 0 for every
        basis vector v; the solution module S is read off a Smith form of the
        constraint matrix.  det(I+X) being a unit only depends on X mod l, so
        the unit filter is applied on the (at most l^2-point) reduction of S
        and scaled by the uniform fiber size.
        """
        ring = self.ring
        if H.ring != ring or H.ambient_dim != 2:
            raise ValueError("subgroup does not live in this group's space")
        if H.is_trivial():
            return self.order
        ell, level = ring.ell, ring.level
        A = [list(v) for v in H.basis]  # k x 2 constraint rows
        _, D, V = _smith_rect(ring, A)
        k = len(A)
        svals = []
        for i in range(2):
            svals.append(ring.valuation(D[i][i]) if i < min(2, k) else level)
        s_size = ell ** sum(svals)
        span_gens = [
            (V[0][i] % ell, V[1][i] % ell) for i in range(2) if svals[i] == level
        ]
        sbar = {(0, 0)}
        for gv in span_gens:
            sbar = {
                ((x + c * gv[0]) % ell, (x1 + c * gv[1]) % ell)
                for (x, x1) in sbar
                for c in range(ell)
            }
        per_class = s_size // len(sbar)
        valid = 0
        for r1 in sbar:
            for r2 in sbar:
                if ((1 + r1[0]) * (1 + r2[1]) - r1[1] * r2[0]) % ell != 0:
                    valid += 1
        return valid * per_class * per_class


def stabilizer_order(G, H: TorsionSubgroup) -> int:
    if isinstance(G, FullGL2Group):
        return G.stabilizer_order(H)
    return stabilizer(G, H).order


def degree_KH(G, H: TorsionSubgroup) -> int:
    """Model of [K(H):K]: the index of the pointwise stabilizer in G."""
    s = stabilizer_order(G, H)
    if G.order % s != 0:
        raise AssertionError("stabilizer order must divide the group order")
    return G.order // s


def cyclo_degree(G, m: int) -> int:
    """Model of [K(mu_{l^m}):K]: the size of the multiplier image mod l^m."""
    if m < 0 or m > G.ring.level:
        raise ValueError("m out of range")
    if m == 0:
        return 1
    if isinstance(G, FullGL2Group):
        # det is onto the units: diag(u, 1) realizes every unit u
        return unit_group_order(G.ring.ell, m)
    p = G.ring.ell ** m
    return len({x % p for x in G.multipliers()})


def _cyclo_intersection(G: MatrixGroup, T: MatrixGroup, m: int) -> int:
    if m == 0:
        return 1
    p = G.ring.ell ** m
    g_im = {x % p for x in G.multipliers()}
    t_im = {x % p for x in T.multipliers()}
    if len(g_im) % len(t_im) != 0:
        raise AssertionError("multiplier image of a subgroup must divide")
    return len(g_im) // len(t_im)


def cyclo_intersection_degree(G: MatrixGroup, H: TorsionSubgroup, m: int) -> int:
    """Model of [K(H) cap K(mu_{l^m}) : K], namely |lambda(G)| / |lambda(T)|
    with multipliers reduced mod l^m."""
    return _cyclo_intersection(G, stabilizer(G, H), m)


def mu_s_ratio(G: MatrixGroup, H: TorsionSubgroup) -> Fraction:
    """Intersection degree at full level over the cyclotomic degree at m1(H)."""
    inter = cyclo_intersection_degree(G, H, G.ring.level)
    return Fraction(inter, cyclo_degree(G, m1(H, G.space)))


def mu_w_witness(G: MatrixGroup, H: TorsionSubgroup, C) -> Optional[int]:
    """Smallest n in [0, level] with deg(mu_{l^n}) within a factor C of the
    intersection degree (both inequalities non-strict), or None."""
    C = Fraction(C)
    if C < 1:
        raise ValueError("C must be >= 1")
    inter = cyclo_intersection_degree(G, H, G.ring.level)
    for n in range(G.ring.level + 1):
        c_n = cyclo_degree(G, n)
        if c_n <= C * inter and inter <= C * c_n:
            return n
    return None


def filtered_subgroup(
    Gfull: MatrixGroup,
    fixers: Sequence[TorsionSubgroup],
    cutoffs: Sequence[int],
) -> MatrixGroup:
    """Congruence-filtered subgroup: elements of Gfull that fix the i-th
    vector list mod l^min(level, n_i).

    An empty chain returns Gfull itself.  The fixed subgroups must decrease
    along the chain (so the fixers increase) and the cutoffs must be strictly
    increasing, else ChainNotIncreasing.
    """
    if len(fixers) != len(cutoffs):
        raise ValueError("fixers and cutoffs must have equal length")
    if not fixers:
        return Gfull
    if any(n < 1 for n in cutoffs) or any(
        a >= b for a, b in zip(cutoffs, cutoffs[1:])
    ):
        raise ChainNotIncreasing("cutoffs must be strictly increasing and >= 1")
    for a, b in zip(fixers, fixers[1:]):
        if a.ring != b.ring or not all(a.contains(v) for v in b.basis):
            raise ChainNotIncreasing("fixed subgroups must form a decreasing chain")
    level = Gfull.ring.level
    for Hf in fixers:
        if Hf.ring != Gfull.ring or Hf.ambient_dim != Gfull.dim:
            raise ValueError("fixer does not live in the group's ambient space")
    conditions = []
    for Hf, cut in zip(fixers, cutoffs):
        if not Hf.is_trivial():
            conditions.append((Gfull.ring.ell ** min(level, cut), Hf.basis))
    if _np_batch_ok(Gfull.ring.modulus, Gfull.dim):
        arr = Gfull.as_array()
        mask = np.ones(len(arr), dtype=bool)
        for p, basis in conditions:
            B = np.array(basis, dtype=np.int64).T % p
            prod = np.einsum("nij,jr->nir", arr, B) % p
            mask &= (prod == B[None, :, :]).all(axis=(1, 2))
        flats = [Gfull._flats[i] for i in np.nonzero(mask)[0]]
    else:
        flats = [
            f
            for f, M in zip(Gfull._flats, Gfull)
            if all(
                all(x % p == v % p for x, v in zip(M.apply(vec), vec))
                for p, basis in conditions
                for vec in basis
            )
        ]
    return MatrixGroup(Gfull.space, (), flats)


# -- scenario builders ------------------------------------------------------


def scenario_cm(g: int, ell: int, level: int = 1, cap: int = DEFAULT_CAP):
    """Diagonal-torus image with H generated by the all-ones vector.

    G is the group of all diagonal similitudes diag(d_1..d_2g) of the
    standard form, i.e. d_i d_{2g+1-i} all equal; its order is phi(l^n)^(g+1).
    """
    if ell == 2:
        raise ValueError("ell must be odd")
    ring = ResidueRing(ell, level)
    count = ring.unit_count ** (g + 1)
    if count > cap:
        raise CapExceeded(f"diagonal torus has {count} elements, cap={cap}")
    space = standard_form(g, ring)
    units = list(ring.units())
    inv = {u: ring.inverse(u) for u in units}
    n2 = 2 * g
    flats = []
    for lam in units:
        for d in product(units, repeat=g):
            diag = list(d) + [lam * inv[d[n2 - 1 - j]] % ring.modulus for j in range(g, n2)]
            flat = [0] * (n2 * n2)
            for j in range(n2):
                flat[j * n2 + j] = diag[j]
            flats.append(tuple(flat))
    G = MatrixGroup(space, (), flats)
    H = subgroup_from_generators([(1,) * n2], ring)
    return G, H


def gl2_standard_generators(ring: ResidueRing) -> list[MatrixMod]:
    """Elementary transvections plus diag(r,1) for a primitive root r (odd l)."""
    if ring.ell == 2:
        raise ValueError("primitive-root generator needs odd ell")
    target = ring.unit_count
    r = next(u for u in ring.units() if _mult_order(u, ring) == target)
    return [
        MatrixMod(ring, [[1, 1], [0, 1]]),
        MatrixMod(ring, [[1, 0], [1, 1]]),
        MatrixMod(ring, [[r, 0], [0, 1]]),
    ]


def _mult_order(u: int, ring: ResidueRing) -> int:
    k, x = 1, u
    while x != 1:
        x = x * u % ring.modulus
        k += 1
    return k


def gl2_group(ring: ResidueRing, cap: int = DEFAULT_CAP) -> MatrixGroup:
    """All of GL2(Z/l^n), enumerated by direct scan in lexicographic order."""
    ell, n, mod = ring.ell, ring.level, ring.modulus
    count = ell ** (4 * (n - 1)) * (ell * ell - 1) * (ell * ell - ell)
    if count > cap:
        raise CapExceeded(f"GL2(Z/{ell}^{n}) has {count} elements, cap={cap}")
    space = standard_form(1, ring)
    idx = np.arange(mod**4, dtype=np.int64)
    a = idx // mod**3 % mod
    b = idx // mod**2 % mod
    c = idx // mod % mod
    d = idx % mod
    mask = (a * d - b * c) % mod % ell != 0
    flats = np.stack([a[mask], b[mask], c[mask], d[mask]], axis=1)
    gens = gl2_standard_generators(ring) if ell != 2 else ()
    return MatrixGroup(space, gens, [tuple(map(int, row)) for row in flats])


def scenario_selfproduct(ell: int, level: int = 1, cap: int = DEFAULT_CAP):
    """Self-product image {diag-block(g, g)} inside GSp4 with form psi + psi,
    and H generated by (P, Q) = (1,0,0,1), whose pairing value is primitive."""
    if ell == 2:
        raise ValueError("ell must be odd")
    ring = ResidueRing(ell, level)
    gl2 = gl2_group(ring, cap)
    m = ring.modulus
    rows = [
        [0, 1, 0, 0],
        [-1 % m, 0, 0, 0],
        [0, 0, 0, 1],
        [0, 0, -1 % m, 0],
    ]
    space = SymplecticSpace(2, MatrixMod(ring, rows), ring)
    flats = [
        (a, b, 0, 0, c, d, 0, 0, 0, 0, a, b, 0, 0, c, d)
        for (a, b, c, d) in gl2._flats
    ]
    G = MatrixGroup(space, (), flats)
    H = subgroup_from_generators([(1, 0, 0, 1)], ring)
    return G, H


# -- reporting ---------------------------------------------------------------


_REPORT_KEYS = (
    "ell",
    "level",
    "m1",
    "deg_KH",
    "deg_cyclo_intersection",
    "deg_cyclo_at_m1",
    "ratio",
    "mu_w_witness_n",
)


@dataclass(frozen=True)
class DegreeReport:
    """Exact degree bookkeeping for one (scenario, l) pair.

    ramified_type marks scenarios whose multiplier image is a proper
    subgroup of the units (the analogue of l ramifying); it shows up in the
    table output only, never in the JSON schema.
    """

    ell: int
    level: int
    m1: int
    deg_KH: int
    deg_cyclo_intersection: int
    deg_cyclo_at_m1: int
    ratio: Fraction
    mu_w_witness_n: Optional[int]
    ramified_type: bool = field(default=False, kw_only=True)

    def to_json_dict(self) -> dict:
        d = {}
        for key in _REPORT_KEYS:
            val = getattr(self, key)
            d[key] = str(val) if isinstance(val, Fraction) else val
        return d


def build_degree_report(G: MatrixGroup, H: TorsionSubgroup, mu_c=Fraction(1)) -> DegreeReport:
    """Run the full degree battery for one scenario instance."""
    level = G.ring.level
    T = stabilizer(G, H)
    if G.order % T.order != 0:
        raise AssertionError("stabilizer order must divide the group order")
    m1v = m1(H, G.space)
    inter = _cyclo_intersection(G, T, level)
    at_m1 = cyclo_degree(G, m1v)
    C = Fraction(mu_c)
    witness = None
    for n in range(level + 1):
        c_n = cyclo_degree(G, n)
        if c_n <= C * inter and inter <= C * c_n:
            witness = n
            break
    return DegreeReport(
        ell=G.ring.ell,
        level=level,
        m1=m1v,
        deg_KH=G.order // T.order,
        deg_cyclo_intersection=inter,
        deg_cyclo_at_m1=at_m1,
        ratio=Fraction(inter, at_m1),
        mu_w_witness_n=witness,
        ramified_type=cyclo_degree(G, level) < unit_group_order(G.ring.ell, level),
    )


_SCENARIO_NAMES = ("cm", "selfproduct", "mumford", "custom")


def parse_scenario_text(text: str) -> dict:
    """Parse the key-value scenario format.

    Recognized keys: scenario, ell, level, g, generators, H.  Lines starting
    with '#' (or trailing comments) are ignored.
    """
    import json

    out: dict = {}
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"malformed scenario line: {raw!r}")
        key, val = (s.strip() for s in line.split("=", 1))
        if key == "scenario":
            if val not in _SCENARIO_NAMES:
                raise ValueError(f"unknown scenario {val!r}")
            out[key] = val
        elif key in ("ell", "level", "g"):
            out[key] = int(val)
        elif key in ("generators", "H"):
            out[key] = json.loads(val)
        else:
            raise ValueError(f"unknown scenario key {key!r}")
    if "scenario" not in out:
        raise ValueError("scenario file must set 'scenario'")
    return out
