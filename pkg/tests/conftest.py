import itertools

import numpy as np
import pytest

from matpress import FiniteMatrixMeasure
from matpress.linalg import phi


@pytest.fixture
def rng():
    return np.random.default_rng(20260817)


def word_products(mats, n):
    """All length-n products A_{i1} ... A_{in}, with their index words."""
    d = mats[0].shape[0]
    for word in itertools.product(range(len(mats)), repeat=n):
        prod = np.eye(d)
        for i in word:
            prod = prod @ mats[i]
        yield word, prod


def brute_norm_sum(weights, mats, n, s):
    """Reference weighted power sum of ||A_w||^s by direct enumeration."""
    total = 0.0
    for word, prod in word_products(mats, n):
        w = 1.0
        for i in word:
            w *= weights[i]
        total += w * np.linalg.norm(prod, 2) ** s
    return total


def brute_phi_sum(weights, mats, n, s):
    """Reference weighted power sum of phi^s(A_w) by direct enumeration."""
    total = 0.0
    for word, prod in word_products(mats, n):
        w = 1.0
        for i in word:
            w *= weights[i]
        total += w * phi(prod, s)
    return total


def random_measure(rng, n_atoms=2, d=2, scale=0.9, unit_weights=False):
    atoms = []
    for _ in range(n_atoms):
        w = 1.0 if unit_weights else float(rng.uniform(0.5, 1.5))
        atoms.append((w, rng.uniform(-scale, scale, (d, d))))
    return FiniteMatrixMeasure(atoms)
