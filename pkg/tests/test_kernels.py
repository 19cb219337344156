import math

import numpy as np
import pytest
from numpy.testing import assert_allclose
from scipy import integrate

from frontier_moments import KernelSpec, kernel_from_name


def test_epanechnikov_1d_values():
    k = KernelSpec(profile="epanechnikov_ball", dimension=1)
    assert_allclose(k.density(np.array([0.0])), 0.75, rtol=1e-13)
    assert_allclose(k.density(np.array([0.5])), 0.5625, rtol=1e-13)  # (3/4)(1 - 0.25)


@pytest.mark.parametrize("profile", ["epanechnikov_ball", "biweight_ball", "uniform_ball"])
def test_vanishes_outside_unit_ball(profile):
    k = KernelSpec(profile=profile, dimension=2)
    assert k.density(np.array([1.5, 0.0])) == 0.0
    assert k.density(np.array([0.9, 0.9])) == 0.0
    rng = np.random.default_rng(0)
    u = rng.normal(size=(200, 2))
    u = u / np.linalg.norm(u, axis=1, keepdims=True) * (1.0 + rng.random((200, 1)))
    assert np.all(k.density(u) == 0.0)


def test_known_normalization_constants():
    # classical 1-d constants and the 2-d Epanechnikov 2/pi
    assert_allclose(KernelSpec("epanechnikov_ball", 1).normalization, 0.75, rtol=1e-13)
    assert_allclose(KernelSpec("biweight_ball", 1).normalization, 15.0 / 16.0, rtol=1e-13)
    assert_allclose(KernelSpec("uniform_ball", 1).normalization, 0.5, rtol=1e-13)
    assert_allclose(KernelSpec("epanechnikov_ball", 2).normalization, 2.0 / math.pi, rtol=1e-13)


@pytest.mark.parametrize("profile", ["epanechnikov_ball", "biweight_ball", "uniform_ball"])
@pytest.mark.parametrize("d", [1, 2, 3])
def test_integrates_to_one(profile, d):
    k = KernelSpec(profile=profile, dimension=d)
    if d == 1:
        total, _ = integrate.quad(lambda u: k.density(np.array([u])), -1, 1)
    elif d == 2:
        total, _ = integrate.dblquad(
            lambda y, x: k.density(np.array([x, y])),
            -1,
            1,
            lambda x: -math.sqrt(max(0.0, 1 - x * x)),
            lambda x: math.sqrt(max(0.0, 1 - x * x)),
        )
    else:
        total, _ = integrate.tplquad(
            lambda z, y, x: k.density(np.array([x, y, z])),
            -1,
            1,
            lambda x: -math.sqrt(max(0.0, 1 - x * x)),
            lambda x: math.sqrt(max(0.0, 1 - x * x)),
            lambda x, y: -math.sqrt(max(0.0, 1 - x * x - y * y)),
            lambda x, y: math.sqrt(max(0.0, 1 - x * x - y * y)),
        )
    assert abs(total - 1.0) <= 1e-8


def test_scaled_density_values():
    k1 = KernelSpec(dimension=1)
    x = np.array([0.4])
    assert_allclose(k1.scaled_density(x, x, 0.5), 1.5, rtol=1e-13)  # 0.75 / 0.5
    assert k1.scaled_density(x, np.array([0.9]), 0.5) == 0.0
    assert k1.scaled_density(x, np.array([[0.4], [0.95]]), 0.5)[1] == 0.0
    k2 = KernelSpec(dimension=2)
    x2 = np.array([0.4, 0.6])
    assert_allclose(k2.scaled_density(x2, x2, 0.1), (2.0 / math.pi) / 0.01, rtol=1e-13)


def test_scaled_density_rejects_bad_bandwidth():
    k = KernelSpec(dimension=1)
    with pytest.raises(ValueError):
        k.scaled_density(np.array([0.0]), np.array([0.0]), 0.0)
    with pytest.raises(ValueError):
        k.scaled_density(np.array([0.0]), np.array([0.0]), -0.2)


@pytest.mark.parametrize("profile", ["epanechnikov_ball", "biweight_ball"])
@pytest.mark.parametrize("d", [1, 2])
def test_lipschitz_bound_on_random_pairs(profile, d):
    k = KernelSpec(profile=profile, dimension=d)
    c = k.lipschitz_constant
    rng = np.random.default_rng(7)
    u = rng.uniform(-1.2, 1.2, size=(500, d))
    v = rng.uniform(-1.2, 1.2, size=(500, d))
    gaps = np.abs(k.density(u) - k.density(v))
    dists = np.linalg.norm(u - v, axis=1)
    assert np.all(gaps <= c * dists * (1 + 1e-12))


def test_uniform_profile_flagged_as_nonsmooth():
    k = KernelSpec(profile="uniform_ball", dimension=1)
    assert not k.is_smooth
    assert math.isinf(k.lipschitz_constant)
    assert KernelSpec(dimension=1).is_smooth


def test_kernel_from_name_aliases():
    assert kernel_from_name("epanechnikov", 2).profile == "epanechnikov_ball"
    assert kernel_from_name("biweight", 1).profile == "biweight_ball"
    assert kernel_from_name("uniform_ball", 1).profile == "uniform_ball"
    with pytest.raises(ValueError):
        kernel_from_name("gaussian", 1)


def test_dimension_mismatch_rejected():
    k = KernelSpec(dimension=2)
    with pytest.raises(ValueError):
        k.density(np.array([0.5]))
    with pytest.raises(ValueError):
        k.scaled_density(np.array([0.5, 0.5, 0.5]), np.zeros((4, 3)), 0.1)
