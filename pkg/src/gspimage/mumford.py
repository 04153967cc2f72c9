"""The tensor-cube engine over F_l.

The representation (a, b, c) -> a (x) b (x) c of GL2^3 into GSp8, its image,
the block linear-dependence conditions cutting the image out, the special
Lagrangian subgroup spanned by e111, e122, e212, e221, and the two-element
pointwise stabilizer of that subgroup inside the image.

Everything runs at level 1: the construction lives over the prime field.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from .galois_model import CapExceeded, DegreeReport, DEFAULT_CAP, gl2_group
from .modring import MatrixMod, NotInvertible, ResidueRing
from .symplectic import SymplecticSpace, m1, multiplier, tensor_form
from .torsion import TorsionSubgroup, subgroup_from_generators

# 0-based positions of e111, e122, e212, e221 in the lexicographic basis
_LAGRANGIAN_INDICES = (0, 3, 5, 6)

# fixing conditions (i, j, k): rho(a,b,c) must send e_i (x) e_j (x) e_k to itself
_FIX_TARGETS = ((0, 0, 0), (0, 1, 1), (1, 0, 1), (1, 1, 0))


class ExpectationFailed(RuntimeError):
    """A value the construction guarantees came out different."""


def _ring(ell: int) -> ResidueRing:
    return ResidueRing(ell, 1)


def tensor_space(ell: int) -> SymplecticSpace:
    return tensor_form(3, _ring(ell))


def gl2_order(ell: int) -> int:
    return (ell * ell - 1) * (ell * ell - ell)


def rho(a: MatrixMod, b: MatrixMod, c: MatrixMod) -> MatrixMod:
    """Kronecker-product action on the rank-8 module, basis ordered e111..e222."""
    if not (a.ring == b.ring == c.ring):
        raise ValueError("factors must share a ring")
    for M in (a, b, c):
        if M.dim != 2:
            raise ValueError("factors must be 2x2")
        if not M.is_invertible:
            raise NotInvertible("tensor factors must be invertible")
    mod = a.ring.modulus
    A, B, C = (np.array(M.rows, dtype=np.int64) for M in (a, b, c))
    out = np.kron(np.kron(A, B), C) % mod
    return MatrixMod(a.ring, out.tolist())


@dataclass(frozen=True)
class TensorTriple:
    """A triple (a, b, c) of invertible 2x2 matrices.

    Canonical triples (a and b scaled so their first nonzero entry is 1, the
    scalars absorbed into c) biject with image elements: two triples have the
    same Kronecker product exactly when they differ by scalars (la, mu b, nu c)
    with la*mu*nu = 1, and canonicalization picks one member of each fiber.
    """

    a: MatrixMod
    b: MatrixMod
    c: MatrixMod

    @classmethod
    def canonical(cls, a: MatrixMod, b: MatrixMod, c: MatrixMod) -> "TensorTriple":
        ring = a.ring
        ua = next(x for x in a.flat() if x != 0)
        a2 = a.scale(ring.inverse(ua))
        c2 = c.scale(ua)
        ub = next(x for x in b.flat() if x != 0)
        b2 = b.scale(ring.inverse(ub))
        c2 = c2.scale(ub)
        return cls(a2, b2, c2)

    def is_canonical(self) -> bool:
        lead_a = next(x for x in self.a.flat() if x != 0)
        lead_b = next(x for x in self.b.flat() if x != 0)
        return lead_a == 1 and lead_b == 1

    def matrix(self) -> MatrixMod:
        return rho(self.a, self.b, self.c)


def lagrangian_H(ell: int) -> TorsionSubgroup:
    """The rank-4 subgroup on e111, e122, e212, e221; totally isotropic for
    the tensor form."""
    gens = []
    for idx in _LAGRANGIAN_INDICES:
        v = [0] * 8
        v[idx] = 1
        gens.append(tuple(v))
    return subgroup_from_generators(gens, _ring(ell))


def _pairwise_dependent(x: np.ndarray, y: np.ndarray, mod: int) -> bool:
    xf, yf = x.reshape(-1), y.reshape(-1)
    return bool((((np.outer(xf, yf) - np.outer(yf, xf)) % mod) == 0).all())


def block_dependence(M: MatrixMod) -> bool:
    """Necessary membership condition for the image: the four 4x4 quadrants
    are pairwise linearly dependent, and so are the four 2x2 sub-blocks inside
    each quadrant."""
    if M.dim != 8:
        raise ValueError("expected an 8x8 matrix")
    mod = M.ring.modulus
    arr = np.array(M.rows, dtype=np.int64)
    quads = [arr[i : i + 4, j : j + 4] for i in (0, 4) for j in (0, 4)]
    for s in range(4):
        for t in range(s + 1, 4):
            if not _pairwise_dependent(quads[s], quads[t], mod):
                return False
    for q in quads:
        subs = [q[i : i + 2, j : j + 2] for i in (0, 2) for j in (0, 2)]
        for s in range(4):
            for t in range(s + 1, 4):
                if not _pairwise_dependent(subs[s], subs[t], mod):
                    return False
    return True


def _gl2_array(ell: int) -> np.ndarray:
    return gl2_group(_ring(ell)).as_array()


def canonical_gl2_array(ell: int) -> np.ndarray:
    """Invertible 2x2 matrices whose first nonzero entry (row-major) is 1."""
    arr = _gl2_array(ell)
    a, b = arr[:, 0, 0], arr[:, 0, 1]
    mask = (a == 1) | ((a == 0) & (b == 1))
    return arr[mask]


def _solve_c_column(a: np.ndarray, B: np.ndarray, conds, ell: int, inv_table: np.ndarray):
    """Solve the fixing conditions for one column of c, batched over B.

    For fixed (a, b) each condition (i, j, k) is linear in the entries of c:
    coordinate (p, q, r) of the fixed tensor reads a[p,i] b[q,j] w[r] with w
    the k-th column of c.  Returns a feasibility mask and the solved columns.
    """
    nb = len(B)
    ok = np.ones(nb, dtype=bool)
    w = np.full((nb, 2), -1, dtype=np.int64)
    for (i, j, k) in conds:
        u = a[:, i]
        v = B[:, :, j]
        for p in range(2):
            for q in range(2):
                coef = (int(u[p]) * v[:, q]) % ell
                nz = coef != 0
                cand = inv_table[coef]  # coef^{-1}, junk where coef == 0
                for r in range(2):
                    t = 1 if (p == i and q == j and r == k) else 0
                    if t == 0:
                        # coef * w_r = 0 forces w_r = 0 wherever coef != 0
                        sol = np.zeros(nb, dtype=np.int64)
                    else:
                        ok &= nz  # 0 * w_r = 1 is infeasible
                        sol = cand
                    unset = nz & (w[:, r] < 0)
                    w[unset, r] = sol[unset]
                    ok &= ~nz | (w[:, r] == sol)
    ok &= (w >= 0).all(axis=1)
    return ok, w


def pointwise_stabilizer_in_image(
    ell: int, cap: int = DEFAULT_CAP, threads: int = 1
) -> list[MatrixMod]:
    """All image elements rho(a,b,c) fixing e111, e122, e212, e221 pointwise.

    Enumerates canonical (a, b) pairs only; the fixing conditions are linear
    in c once (a, b) are fixed, so c is solved for directly instead of
    scanning GL2 a third time.  Found elements are re-verified against the
    fixed vectors and returned sorted by entries.
    """
    if not 1 <= threads <= 64:
        raise ValueError("threads out of range")
    ring = _ring(ell)
    A = canonical_gl2_array(ell)
    na = len(A)
    if na * na > cap:
        raise CapExceeded(f"{na * na} canonical pairs exceed cap={cap}")
    inv_table = np.zeros(ell, dtype=np.int64)
    for x in range(1, ell):
        inv_table[x] = pow(x, -1, ell)
    conds_col0 = [t for t in _FIX_TARGETS if t[2] == 0]
    conds_col1 = [t for t in _FIX_TARGETS if t[2] == 1]

    def scan(idx_range) -> list[tuple[int, ...]]:
        hits = []
        for ia in idx_range:
            a = A[ia]
            ok0, w0 = _solve_c_column(a, A, conds_col0, ell, inv_table)
            ok1, w1 = _solve_c_column(a, A, conds_col1, ell, inv_table)
            ok = ok0 & ok1
            if not ok.any():
                continue
            det = (w0[:, 0] * w1[:, 1] - w0[:, 1] * w1[:, 0]) % ell
            ok &= det != 0
            for ib in np.nonzero(ok)[0]:
                c = MatrixMod(ring, [[w0[ib, 0], w1[ib, 0]], [w0[ib, 1], w1[ib, 1]]])
                R = rho(MatrixMod(ring, A[ia].tolist()), MatrixMod(ring, A[ib].tolist()), c)
                hits.append(R.flat())
        return hits

    if threads == 1:
        found = scan(range(na))
    else:
        chunks = np.array_split(np.arange(na), threads * 4)
        found = []
        with ThreadPoolExecutor(max_workers=threads) as pool:
            for part in pool.map(scan, [list(c) for c in chunks]):
                found.extend(part)

    out = []
    for flat in sorted(set(found)):
        M = MatrixMod.from_flat(ring, 8, flat)
        for idx in _LAGRANGIAN_INDICES:
            e = tuple(1 if t == idx else 0 for t in range(8))
            if M.apply(e) != e:
                raise AssertionError("solver produced a non-fixing element")
        out.append(M)
    return out


def stabilizer_brute_force(ell: int, cap: int = 200_000_000) -> list[MatrixMod]:
    """Reference search: scan every canonical triple for the fixing property."""
    ring = _ring(ell)
    A = canonical_gl2_array(ell)
    C = _gl2_array(ell)
    if len(A) * len(A) * len(C) > cap:
        raise CapExceeded("brute-force scan too large")
    targets = []
    for (i, j, k) in _FIX_TARGETS:
        t = np.zeros((2, 2, 2), dtype=np.int64)
        t[i, j, k] = 1
        targets.append(((i, j, k), t))
    found = set()
    for a in A:
        for b in A:
            mask = np.ones(len(C), dtype=bool)
            for (i, j, k), t in targets:
                u, v, W = a[:, i], b[:, j], C[:, :, k]
                lhs = np.einsum("p,q,nr->npqr", u, v, W)
                mask &= (((lhs - t[None]) % ell) == 0).all(axis=(1, 2, 3))
                if not mask.any():
                    break
            for ic in np.nonzero(mask)[0]:
                R = rho(
                    MatrixMod(ring, a.tolist()),
                    MatrixMod(ring, b.tolist()),
                    MatrixMod(ring, C[ic].tolist()),
                )
                found.add(R.flat())
    return [MatrixMod.from_flat(ring, 8, f) for f in sorted(found)]


def image_order(ell: int, cap: Optional[int] = None) -> int:
    """|image| = (|GL2|/(l-1))^2 * |GL2| via the canonical-triple bijection."""
    n = gl2_order(ell)
    value = (n // (ell - 1)) ** 2 * n
    if cap is not None and value > cap:
        raise CapExceeded(f"image has {value} elements, cap={cap}")
    return value


def _all_triple_products(ell: int) -> tuple[np.ndarray, int]:
    G = _gl2_array(ell)
    n = len(G)
    AB = np.einsum("aij,bkl->abikjl", G, G).reshape(n * n, 4, 4) % ell
    ABC = np.einsum("xij,ckl->xcikjl", AB, G).reshape(n * n * n, 8, 8) % ell
    return ABC.astype(np.uint8).reshape(n * n * n, 64), n

def image_order_enumerated(ell: int, cap: int = 1_000_000) -> int:
    """Dedup enumeration over all |GL2|^3 triples; the oracle for image_order."""
    n = gl2_order(ell)
    if n**3 > cap:
        raise CapExceeded(f"{n**3} triples exceed cap={cap}")
    keys, _ = _all_triple_products(ell)
    view = np.ascontiguousarray(keys).view(np.dtype((np.void, 64)))
    return len(np.unique(view))


def verify_kernel_law(ell: int, cap: int = 1_000_000) -> None:
    """Exhaustively check the kernel of the tensor representation.

    Every fiber of (a,b,c) -> product must be exactly the scalar orbit
    {(la a, mu b, nu c) : la mu nu = 1}, of size (l-1)^2.  Raises on any
    mismatch.
    """
    n = gl2_order(ell)
    if n**3 > cap:
        raise CapExceeded(f"{n**3} triples exceed cap={cap}")
    G = _gl2_array(ell)
    index = {tuple(map(int, g.reshape(-1))): i for i, g in enumerate(G)}
    keys, _ = _all_triple_products(ell)
    view = np.ascontiguousarray(keys).view(np.dtype((np.void, 64))).reshape(-1)
    _, inverse, counts = np.unique(view, return_inverse=True, return_counts=True)
    expected = (ell - 1) ** 2
    if not (counts == expected).all():
        raise AssertionError("some fiber does not have size (l-1)^2")
    order = np.argsort(inverse, kind="stable")
    fibers = np.split(order, np.cumsum(counts)[:-1])
    for members in fibers:
        t0 = int(members[0])
        a0, b0, c0 = t0 // (n * n), t0 // n % n, t0 % n
        orbit = set()
        for la in range(1, ell):
            for mu in range(1, ell):
                nu = pow(la * mu, -1, ell)
                ia = index[tuple(map(int, (la * G[a0] % ell).reshape(-1)))]
                ib = index[tuple(map(int, (mu * G[b0] % ell).reshape(-1)))]
                ic = index[tuple(map(int, (nu * G[c0] % ell).reshape(-1)))]
                orbit.add(ia * n * n + ib * n + ic)
        if orbit != set(map(int, members)):
            raise AssertionError("fiber is not a scalar orbit")


def multiplier_image(ell: int) -> frozenset[int]:
    """Multipliers attained on the image: products of three GL2 determinants."""
    arr = _gl2_array(ell)
    dets = {int(x) for x in (arr[:, 0, 0] * arr[:, 1, 1] - arr[:, 0, 1] * arr[:, 1, 0]) % ell}
    out = set()
    for d1 in dets:
        for d2 in dets:
            for d3 in dets:
                out.add(d1 * d2 * d3 % ell)
    return frozenset(out)


@dataclass(frozen=True)
class MumfordReport(DegreeReport):
    """DegreeReport plus the stabilizer and image data specific to this model."""

    stabilizer_size: int
    stabilizer_elements: tuple[tuple[int, ...], ...]
    image_order: int

    def to_json_dict(self) -> dict:
        d = super().to_json_dict()
        d["stabilizer_size"] = self.stabilizer_size
        d["stabilizer_elements"] = [list(f) for f in self.stabilizer_elements]
        d["image_order"] = self.image_order
        return d


def _expect(cond: bool, message: str) -> None:
    if not cond:
        raise ExpectationFailed(message)


def verify_mu_s_failure(
    ells: Sequence[int],
    *,
    cap: int = DEFAULT_CAP,
    threads: int = 1,
    mu_c=Fraction(1),
) -> list[MumfordReport]:
    """Run the full counterexample battery for each odd prime in ells.

    Checks, for each l: the Lagrangian has m1 = 0, the pointwise stabilizer
    in the image is exactly {I, diag(1,-1,-1,1,-1,1,1,-1)}, its multipliers
    are {1, -1}, and the cyclotomic intersection degree in the full-image
    model is (l-1)/2.  The resulting ratios grow linearly in l, which is the
    unboundedness the reports document.
    """
    reports = []
    for ell in ells:
        if ell == 2:
            raise ValueError("ell must be odd")
        ring = _ring(ell)
        S = tensor_space(ell)
        H = lagrangian_H(ell)
        m1v = m1(H, S)
        _expect(m1v == 0, f"m1 of the Lagrangian is {m1v}, expected 0 (ell={ell})")
        stab = pointwise_stabilizer_in_image(ell, cap=cap, threads=threads)
        ident = MatrixMod.identity(ring, 8)
        flip = MatrixMod.diagonal(ring, [1, -1, -1, 1, -1, 1, 1, -1])
        _expect(
            set(stab) == {ident, flip},
            f"stabilizer is not {{I, diag(1,-1,-1,1,-1,1,1,-1)}} at ell={ell}",
        )
        lam_T = {multiplier(M, S).value for M in stab}
        _expect(lam_T == {1, ell - 1}, f"stabilizer multipliers {lam_T} != {{1,-1}}")
        lam_G = multiplier_image(ell)
        inter, rem = divmod(len(lam_G), len(lam_T))
        _expect(rem == 0, "multiplier image of the stabilizer must divide")
        _expect(inter == (ell - 1) // 2, f"intersection degree {inter} != (l-1)/2")
        img = image_order(ell)
        C = Fraction(mu_c)
        witness = None
        for nn in range(2):
            c_n = 1 if nn == 0 else len(lam_G)
            if c_n <= C * inter and inter <= C * c_n:
                witness = nn
                break
        reports.append(
            MumfordReport(
                ell=ell,
                level=1,
                m1=m1v,
                deg_KH=img // len(stab),
                deg_cyclo_intersection=inter,
                deg_cyclo_at_m1=1,
                ratio=Fraction(inter, 1),
                mu_w_witness_n=witness,
                stabilizer_size=len(stab),
                stabilizer_elements=tuple(M.flat() for M in stab),
                image_order=img,
            )
        )
    return reports
