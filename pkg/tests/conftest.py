import json

import numpy as np
import pytest

from glue_regularity.chain import Similarity, k_matrix, standard_chain
from glue_regularity.registry import get_scheme

SCHEME_IDS = ["chaikin", "fps", "cps2d", "bspline_tau:0", "bspline_tau:0.25", "spoiler"]


def centred_perturbation(rng, n, dim, radius):
    """Random chain orthogonal to the linear chains with |d|_2 equal to radius"""
    u = rng.standard_normal((n - 2, dim))
    u *= radius / np.max(np.linalg.norm(u, axis=1))
    return k_matrix(n) @ u


def random_similarity(rng, dim):
    """Random similarity of R^dim, possibly orientation reversing"""
    rotation, _ = np.linalg.qr(rng.standard_normal((dim, dim)))
    return Similarity(float(rng.uniform(0.1, 10.0)), rotation, rng.standard_normal(dim))


def circle_points(count, radius=1.0, centre=(0.0, 0.0), start=0.0, step=None):
    """Points on a circle at equal angular steps"""
    step = 2 * np.pi / count if step is None else step
    angles = start + step * np.arange(count)
    return np.column_stack([
        centre[0] + radius * np.cos(angles),
        centre[1] + radius * np.sin(angles),
    ])


@pytest.fixture
def rng():
    """Seeded random generator"""
    return np.random.default_rng(20261019)


@pytest.fixture
def line_chain():
    """Equispaced collinear chain of ten points in the plane"""
    return standard_chain(10, 2)


@pytest.fixture
def heptagon():
    """Two turns around the regular heptagon inscribed in the unit circle"""
    return circle_points(7, step=2 * np.pi / 7)[np.arange(14) % 7]


@pytest.fixture
def square():
    """Four corners of the unit square"""
    return np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])


@pytest.fixture
def chaikin():
    return get_scheme("chaikin")


@pytest.fixture
def fps():
    return get_scheme("fps")


@pytest.fixture
def cps():
    return get_scheme("cps2d")


@pytest.fixture
def spoiler():
    return get_scheme("spoiler")


@pytest.fixture
def cubic():
    """Cubic B-spline scheme (shift 0)"""
    return get_scheme("bspline_tau:0")


@pytest.fixture
def quartic():
    """Quartic B-spline scheme (shift 1/2)"""
    return get_scheme("bspline_tau:0.5")


@pytest.fixture
def write_chain(tmp_path):
    """Write a chain to a JSON file and return its path"""
    def _write(points, name="chain.json"):
        points = np.asarray(points, dtype=float)
        path = tmp_path / name
        path.write_text(json.dumps({"dim": int(points.shape[1]), "points": points.tolist()}))
        return str(path)
    return _write
