import math

import numpy as np
import pytest

from barron_kit.calculus1d import Profile1D, norm_1d, reconstruct
from barron_kit.constructions import (
    DecayRecipe,
    DecayRecipeError,
    decay_constraints,
    euclidean_norm,
    gaussian_decay,
    gaussian_profile,
    higher_decay,
    partial_norm,
    piecewise_linear_profile,
    solve_decay_kernel,
    sphere_nodes,
    square_fn,
)
from barron_kit.evaluation import evaluate
from barron_kit.measure import total_variation
from oracles import (
    gaussian_kernel_norm_quad,
    mean_relu_circle_quad,
    mean_relu_first_coordinate_mc,
    radial_decay_quad,
    random_rotation,
    random_unit,
)


def target_decay(x):
    return 1.0 / np.sqrt(np.sum(np.atleast_2d(x) ** 2, axis=1) + 1.0)


# sphere nodes ----------------------------------------------------------------------

@pytest.mark.parametrize("d", [1, 2, 3, 5])
def test_sphere_nodes_are_unit_and_deterministic(d):
    u = sphere_nodes(d, 64)
    np.testing.assert_allclose(np.linalg.norm(u, axis=1), 1.0, atol=1e-14)
    np.testing.assert_array_equal(u, sphere_nodes(d, 64))


@pytest.mark.parametrize("d", [2, 3, 5])
def test_sphere_nodes_are_balanced(d):
    u = sphere_nodes(d, 2000)
    assert np.max(np.abs(u.mean(axis=0))) < 2e-2
    np.testing.assert_allclose(u.T @ u / len(u), np.eye(d) / d, atol=2e-2)


# Euclidean norm -----------------------------------------------------------------------

def test_c1_exact():
    f, c = euclidean_norm(1)
    assert c == 2.0
    x = np.linspace(-3, 3, 61)[:, None]
    np.testing.assert_array_equal(evaluate(f, x), np.abs(x[:, 0]))


def test_c2_and_c3_against_oracles():
    _, c2 = euclidean_norm(2, 1000)
    assert abs(c2 - 1.0 / mean_relu_circle_quad()) <= 1e-3
    assert abs(c2 - math.pi) <= 1e-3
    _, c3 = euclidean_norm(3, 1000)
    assert abs(c3 - 1.0 / mean_relu_first_coordinate_mc(3)) <= 1e-2
    assert abs(c3 - 4.0) <= 1e-2


@pytest.mark.parametrize("d", [2, 3, 5])
def test_euclidean_norm_accuracy(d):
    rng = np.random.default_rng(d)
    x = rng.normal(size=(100, d))
    f, _ = euclidean_norm(d, 1000)
    r = np.linalg.norm(x, axis=1)
    assert np.max(np.abs(evaluate(f, x) - r) / r) <= 1e-2


@pytest.mark.parametrize("d", [2, 3, 5])
def test_euclidean_norm_error_decreases(d):
    rng = np.random.default_rng(10 + d)
    x = rng.normal(size=(100, d))
    r = np.linalg.norm(x, axis=1)
    errs = []
    for n in (64, 256):
        f, _ = euclidean_norm(d, n)
        errs.append(np.max(np.abs(evaluate(f, x) - r) / r))
    assert errs[1] < errs[0]


def test_euclidean_norm_validation():
    with pytest.raises(ValueError):
        euclidean_norm(0)
    with pytest.raises(ValueError):
        euclidean_norm(2, 8)


# partial norms ------------------------------------------------------------------------

def test_partial_norm_full_is_euclidean():
    f, _ = euclidean_norm(3, 200)
    g = partial_norm(3, 3, 200)
    np.testing.assert_array_equal(g.measure.dirs, f.measure.dirs)
    np.testing.assert_array_equal(g.measure.weights, f.measure.weights)


def test_partial_norm_k1_is_abs():
    f = partial_norm(3, 1)
    assert f.measure.n_atoms == 2 and len(f.measure.node_weights) == 0
    x = np.random.default_rng(0).normal(size=(50, 3))
    np.testing.assert_array_equal(evaluate(f, x), np.abs(x[:, 0]))


def test_partial_norm_k2():
    f = partial_norm(3, 2, 1000)
    assert abs(evaluate(f, [3.0, 4.0, 7.0]) - 5.0) <= 5e-2
    assert evaluate(f, [0.0, 0.0, 9.0]) == 0.0


def test_partial_norm_range():
    for k in (0, 4):
        with pytest.raises(ValueError):
            partial_norm(3, k)


# x^2 ------------------------------------------------------------------------------------

def test_square_examples():
    f = square_fn(1024)
    assert evaluate(f, [0.0]) == 0.0
    assert abs(evaluate(f, [1.0]) - 1.0) <= 1e-4
    assert abs(evaluate(f, [0.5]) - 0.25) <= 1e-4


def test_square_error_is_second_order():
    x = np.linspace(0, 1, 257)[:, None]
    errs = [np.max(np.abs(evaluate(square_fn(n), x) - x[:, 0] ** 2)) for n in (32, 128)]
    assert errs[1] < errs[0] / 8


def test_square_is_convex():
    x = np.linspace(0, 1, 401)[:, None]
    y = evaluate(square_fn(256), x)
    assert np.min(y[2:] - 2 * y[1:-1] + y[:-2]) >= -1e-15


def test_square_validation():
    with pytest.raises(ValueError):
        square_fn(1)


# Gaussian decay -------------------------------------------------------------------------

@pytest.mark.parametrize("d", [1, 2, 3])
def test_gaussian_decay_examples(d):
    f = gaussian_decay(d)
    rng = np.random.default_rng(d)
    for r in (0.0, 1.0, 3.0):
        x = r * random_unit(rng, d)
        assert abs(evaluate(f, x) - 1.0 / math.sqrt(r * r + 1)) <= 1e-3


def test_gaussian_decay_rotation_symmetry():
    f = gaussian_decay(3)
    rng = np.random.default_rng(1)
    x = rng.normal(size=(30, 3))
    q = random_rotation(rng, 3)
    assert np.max(np.abs(evaluate(f, x @ q.T) - evaluate(f, x))) <= 1e-3


def test_gaussian_decay_far_field_needs_more_directions():
    # at radius R the ridge profile seen by the direction average has width ~ 1/R
    x = np.array([[30.0, 40.0]])
    coarse = abs(evaluate(gaussian_decay(2), x)[0] - target_decay(x)[0])
    fine = abs(evaluate(gaussian_decay(2, n_dirs=256), x)[0] - target_decay(x)[0])
    assert fine <= 1e-3 < coarse


def test_gaussian_kernel_norm():
    # the d = 1 profile is the kernel itself averaged over the chi_1 radius
    norm_h = gaussian_kernel_norm_quad()
    assert norm_h == pytest.approx(5.0413, abs=1e-3)


@pytest.mark.parametrize("d", [1, 2, 3, 5])
def test_gaussian_decay_tv_bound(d):
    f = gaussian_decay(d, n_dirs=256 if d == 5 else None)
    assert total_variation(f.measure) <= 1.1 * math.sqrt(d) * gaussian_kernel_norm_quad()


def test_gaussian_profile_is_target_along_a_line():
    p = gaussian_profile(2)
    # E exp(-rho^2 t^2 / 2) over the chi_2 radius is 1 / (1 + t^2)
    t = np.array([-4.0, -1.0, 0.0, 0.5, 2.0])
    assert np.max(np.abs(reconstruct(p, t) - 1 / (1 + t**2))) <= 1e-4


# decay kernels --------------------------------------------------------------------------

def test_hat_recipe():
    hat = piecewise_linear_profile([-1.0, 0.0, 1.0], [0.0, 1.0, 0.0])
    assert (hat.f0, hat.df0) == (1.0, 1.0)
    recipe = DecayRecipe(0, hat)
    radial, f = higher_decay(recipe, 1)
    assert radial(0.0)[0] == 1.0
    rs = np.array([2.0, 4.0, 8.0])
    vals = radial(rs)
    for r, v in zip(rs, vals):
        assert v == pytest.approx(radial_decay_quad(lambda y: max(1 - abs(y), 0.0), r), rel=1e-10)
    scaled = rs * vals
    assert scaled.max() / scaled.min() <= 1.1
    np.testing.assert_allclose(evaluate(f, rs[:, None]), vals, atol=2e-5)


def test_solve_k0():
    recipe = solve_decay_kernel(0, 3)
    assert recipe.h_profile.f0 == 1.0
    y = np.linspace(-1, 1, 201)
    np.testing.assert_allclose(reconstruct(recipe.h_profile, y), np.maximum(1 - 2 * np.abs(y), 0), atol=1e-14)


def test_solve_k1_and_k2():
    r1 = solve_decay_kernel(1, 8)
    assert abs(decay_constraints(r1.h_profile, 1)[2]) <= 1e-12
    assert r1.h_profile.f0 != 0.0
    r2 = solve_decay_kernel(2, 12)
    assert np.max(np.abs(decay_constraints(r2.h_profile, 2)[2:])) <= 1e-12


def test_solve_validation():
    with pytest.raises(ValueError):
        solve_decay_kernel(-1, 5)
    with pytest.raises(ValueError):
        solve_decay_kernel(2, 4)


def test_no_kernel_element_fails():
    # the even moments only see the even part of h, which has ceil(n / 2)
    # degrees of freedom; k = 3 constraints on 6 hats leave it zero
    with pytest.raises(DecayRecipeError, match="h\\(0\\)") as info:
        solve_decay_kernel(3, 6)
    assert info.value.index == 5
    solve_decay_kernel(3, 7)


def test_bad_recipe_reports_index():
    hat = piecewise_linear_profile([-1.0, 0.0, 1.0], [0.0, 1.0, 0.0])
    with pytest.raises(DecayRecipeError) as info:
        higher_decay(DecayRecipe(1, hat), 1)
    assert info.value.index == 2
    wide = piecewise_linear_profile([-2.0, 0.0, 2.0], [0.0, 1.0, 0.0])
    with pytest.raises(DecayRecipeError) as info:
        higher_decay(DecayRecipe(0, wide), 1)
    assert info.value.index == 0


@pytest.mark.parametrize("k", [1, 2])
def test_higher_decay_rate(k):
    recipe = solve_decay_kernel(k, 4 * k + 8)
    radial, _ = higher_decay(recipe, 3, n_dirs=16)
    rs = np.array([2.0, 4.0, 8.0])
    scaled = rs ** (2 * k + 1) * np.abs(radial(rs))
    assert scaled.max() / scaled.min() <= 3.0
    h = lambda y: float(reconstruct(recipe.h_profile, y))  # noqa: E731
    # the values are small differences of O(1) integrals, hence the absolute tolerance
    np.testing.assert_allclose(radial(rs), [radial_decay_quad(h, r) for r in rs], rtol=1e-6, atol=1e-11)


def test_higher_decay_measure_matches_radial():
    recipe = solve_decay_kernel(1, 8)
    r = np.array([0.0, 0.5, 1.0, 2.0, 4.0])
    errs = []
    for n in (256, 4096):
        radial, f = higher_decay(recipe, 1, n_nodes=n)
        errs.append(np.max(np.abs(evaluate(f, r[:, None]) - radial(r))))
        np.testing.assert_allclose(evaluate(f, -r[:, None]), evaluate(f, r[:, None]), atol=1e-12)
    assert errs[0] <= 1e-4
    assert errs[1] <= 1e-6


def test_higher_decay_radial_is_dimension_free():
    recipe = solve_decay_kernel(1, 8)
    r = np.linspace(0.0, 10.0, 50)
    a, _ = higher_decay(recipe, 1)
    b, _ = higher_decay(recipe, 3, n_dirs=16)
    np.testing.assert_array_equal(a(r), b(r))


def test_recipe_profile_type():
    recipe = solve_decay_kernel(1, 8)
    assert isinstance(recipe.h_profile, Profile1D)
    assert norm_1d(recipe.h_profile) > 0
