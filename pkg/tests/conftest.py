import numpy as np
import pytest

from harnack_lab.solutions import make_solution

CATALOG = {
    "sphere2": ("shrinking_sphere", {"n": 2, "c0": 1.0}),
    "sphere3": ("shrinking_sphere", {"n": 3, "c0": 1.0}),
    "cigar_flow": ("cigar_flow", {}),
    "cigar_static": ("cigar_static", {}),
    "flat": ("flat", {"n": 2}),
    "flat_affine": ("flat", {"n": 2, "a": [0.3, -0.7]}),
}


def solution(key):
    name, params = CATALOG[key]
    return make_solution(name, **params)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
