from pathlib import Path

import numpy as np
import pytest

from troprelu import AffineLayer, Box, Network, TropInternal

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


@pytest.fixture
def unit_box2():
    return Box([-1, -1], [1, 1])


@pytest.fixture
def running_layer(unit_box2):
    """h1 = x1 - x2 - 1, h2 = x1 + x2 + 1 on [-1,1]^2."""
    return AffineLayer([[1, -1], [1, 1]], [-1, 1], unit_box2)


@pytest.fixture
def running_net():
    return Network(([[1, -1], [1, 1]],), ([-1, 1],), final_relu=True)


@pytest.fixture
def running2_net():
    """Running net plus u1 = y2 - y1 - 1, u2 = y1 - y2 + 1, clamped."""
    return Network(
        ([[1, -1], [1, 1]], [[-1, 1], [1, -1]]),
        ([-1, 1], [-1, 1]),
        final_relu=True,
    )


@pytest.fixture
def multi_net():
    w1 = [[1, 1], [1, -1], [-1, -1]]
    w2 = [
        [1, 1, 1],
        [1, 1, -1],
        [1, -1, 1],
        [1, -1, -1],
        [-1, 1, 1],
        [-1, 1, -1],
        [-1, -1, 1],
        [-1, -1, -1],
    ]
    return Network((w1, w2), ([0, 0, 0], [0] * 8), final_relu=True)


def sample_hull(rng, poly: TropInternal, count: int) -> np.ndarray:
    """Random tropical affine combinations of the generators."""
    g = poly.generators
    lam = -rng.exponential(1.0, size=(count, g.shape[0]))
    lam[np.arange(count), rng.integers(0, g.shape[0], size=count)] = 0.0
    return (g[None, :, :] + lam[:, :, None]).max(axis=1)


def random_layer(rng, max_in=4, max_out=4, scale=2.0) -> AffineLayer:
    m = int(rng.integers(1, max_in + 1))
    n = int(rng.integers(1, max_out + 1))
    w = rng.uniform(-scale, scale, size=(n, m))
    b = rng.uniform(-1, 1, size=n)
    lo = rng.uniform(-2, 0, size=m)
    hi = lo + rng.uniform(0.1, 3.0, size=m)
    return AffineLayer(w, b, Box(lo, hi))


def random_network(rng, max_layers=4, max_width=32, final_relu=True) -> Network:
    n_layers = int(rng.integers(1, max_layers + 1))
    sizes = [int(rng.integers(1, max_width + 1)) for _ in range(n_layers + 1)]
    weights = []
    biases = []
    for a, b in zip(sizes, sizes[1:]):
        weights.append(rng.uniform(-2, 2, size=(b, a)))
        biases.append(rng.uniform(-1, 1, size=b))
    return Network(tuple(weights), tuple(biases), final_relu=final_relu)


def random_box(rng, dim, width=2.0) -> Box:
    lo = rng.uniform(-1.5, 0.5, size=dim)
    return Box(lo, lo + rng.uniform(0.2, width, size=dim))


def assert_gen_set(poly: TropInternal, expected, tol=1e-9):
    got = sorted(map(tuple, np.round(poly.generators, 12)))
    want = sorted(map(tuple, np.round(np.asarray(expected, dtype=float), 12)))
    assert len(got) == len(want), f"generator count {len(got)} != {len(want)}: {got}"
    for g, w in zip(got, want):
        assert np.allclose(g, w, atol=tol), f"{got} != {want}"
