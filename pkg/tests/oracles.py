"""Independent brute-force oracles shared by the tests."""
import math

import numpy as np


def primitive_vectors(v1, v2, R):
    """Primitive vectors p*v1 + q*v2 of the lattice with length <= R."""
    v1, v2 = complex(v1), complex(v2)
    area = abs((v1.conjugate() * v2).imag)
    k = int(math.ceil(R * max(abs(v1), abs(v2)) / area)) + 2
    out = []
    for p in range(-k, k + 1):
        for q in range(-k, k + 1):
            if math.gcd(p, q) != 1:
                continue
            z = p * v1 + q * v2
            if abs(z) <= R * (1 + 1e-12):
                out.append(z)
    return out


def gauss_reduce(v1, v2):
    v1, v2 = complex(v1), complex(v2)
    while True:
        if abs(v2) < abs(v1):
            v1, v2 = v2, v1
        m = round((v1.conjugate() * v2).real / abs(v1) ** 2)
        if m == 0:
            return v1, v2
        v2 = v2 - m * v1


def sorted_holonomies(hols, ndigits=9):
    return sorted((round(z.real, ndigits) + 0.0, round(z.imag, ndigits) + 0.0) for z in hols)


def plateau(r, a, b, sm):
    """Reference smooth plateau, scalar version."""
    def psi(x):
        if x <= 0:
            return 0.0
        if x >= 1:
            return 1.0
        f = math.exp(-1 / x)
        g = math.exp(-1 / (1 - x))
        return f / (f + g)
    return psi((r - a) / sm) * psi((b - r) / sm)


def rng(seed=0):
    return np.random.default_rng(seed)
