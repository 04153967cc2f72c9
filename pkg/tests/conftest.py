import random

import pytest

from gspimage.modring import MatrixMod
from gspimage.symplectic import diagonal_similitude, symplectic_transvection
from gspimage.torsion import subgroup_from_generators


def random_matrix(ring, dim, rng):
    return MatrixMod(
        ring, [[rng.randrange(ring.modulus) for _ in range(dim)] for _ in range(dim)]
    )


def random_invertible(ring, dim, rng):
    while True:
        M = random_matrix(ring, dim, rng)
        if M.is_invertible:
            return M


def random_similitude(space, rng, transvections=4):
    """Random element of GSp for a standard-form space: a product of
    symplectic transvections times a diagonal similitude."""
    M = MatrixMod.identity(space.ring, space.dim)
    for _ in range(transvections):
        v = [rng.randrange(space.ring.modulus) for _ in range(space.dim)]
        M = M @ symplectic_transvection(space, v)
    lam = rng.choice(list(space.ring.units()))
    return M @ diagonal_similitude(space, lam)


def random_subgroup(ring, dim, rng, max_order=5000):
    while True:
        k = rng.randrange(1, dim + 1)
        gens = []
        for _ in range(k):
            shift = ring.ell ** rng.randrange(ring.level)
            gens.append(
                tuple(rng.randrange(ring.modulus) * shift % ring.modulus for _ in range(dim))
            )
        H = subgroup_from_generators(gens, ring, ambient_dim=dim)
        if H.order <= max_order:
            return H


@pytest.fixture
def rng():
    return random.Random(0x5EED)
