import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from nsmorrey.errors import ConfigurationError, ContractError, DomainError
from nsmorrey.fields import (Grid4, ParabolicCylinder, ScalarField, VectorField,
                             divergence_residual, gradient, natural_rescale, sample_at,
                             slice_gradient)


def affine_field(grid, coef):
    X, Y, Z = grid.mesh()
    out = np.empty(grid.shape)
    for k, t in enumerate(grid.times):
        out[k] = coef[0] + coef[1] * X + coef[2] * Y + coef[3] * Z + coef[4] * t
    return ScalarField(grid, out)


def test_grid_geometry():
    g = Grid4.cube(5, 3, -1, 1, -1, 0)
    assert g.shape == (3, 5, 5, 5)
    assert g.spacing == (0.5, 0.5, 0.5)
    assert g.dt == 0.5
    assert g.cell_volume == 0.125
    np.testing.assert_array_equal(g.times, [-1.0, -0.5, 0.0])
    assert Grid4.from_dict(g.to_dict()) == g


@pytest.mark.parametrize("bad", [dict(nx=1), dict(xrange=(1.0, 0.0)), dict(nt=2.5)])
def test_grid_rejects_degenerate(bad):
    kw = dict(nx=4, ny=4, nz=4, nt=4)
    kw.update(bad)
    with pytest.raises(ConfigurationError):
        Grid4(**kw)


def test_cylinder_grid_is_tight():
    cyl = ParabolicCylinder((0.1, 0.2, -0.3), 0.5, 0.25)
    g = Grid4.for_cylinder(cyl, 9, 5)
    assert g.contains_cylinder(cyl)
    assert g.xrange == (0.1 - 0.25, 0.1 + 0.25)
    assert g.trange == (0.5 - 0.0625, 0.5)
    assert not g.contains_cylinder(cyl.with_radius(0.3))
    with pytest.raises(DomainError):
        g.check_cylinder(cyl.with_radius(0.3))


@given(st.lists(st.floats(-3, 3), min_size=5, max_size=5),
       st.tuples(st.floats(-1, 1), st.floats(-1, 1), st.floats(-1, 1)),
       st.floats(-1, 0))
def test_interpolation_reproduces_affine_functions(coef, x, t):
    g = Grid4.cube(6, 4)
    f = affine_field(g, coef)
    expect = coef[0] + coef[1] * x[0] + coef[2] * x[1] + coef[3] * x[2] + coef[4] * t
    assert sample_at(f, x, t) == pytest.approx(expect, abs=1e-11)


def test_interpolation_at_nodes_is_exact():
    g = Grid4.cube(5, 3)
    rng = np.random.default_rng(3)
    f = VectorField(g, rng.standard_normal(g.shape + (3,)))
    np.testing.assert_array_equal(sample_at(f, (-0.5, 0.0, 1.0), -0.5), f.samples[1, 4, 2, 1])


def test_sample_outside_grid_names_axis():
    g = Grid4.cube(4, 4)
    f = affine_field(g, [0, 1, 0, 0, 0])
    with pytest.raises(DomainError, match="y"):
        sample_at(f, (0.0, 1.5, 0.0), -0.5)


def test_samples_are_read_only_views():
    g = Grid4.cube(4, 4)
    arr = np.zeros(g.shape + (3,))
    v = VectorField(g, arr)
    assert np.shares_memory(v.samples, arr)
    with pytest.raises(ValueError):
        v.samples[0, 0, 0, 0, 0] = 1.0


def test_nonfinite_samples_need_a_declared_singular_point():
    g = Grid4.cube(5, 4)
    arr = np.zeros(g.shape + (3,))
    arr[:, 2, 2, 2] = np.nan
    with pytest.raises(ContractError):
        VectorField(g, arr)
    v = VectorField(g, arr, '{"singular": [[0.0, 0.0, 0.0]]}')
    assert v.singular_points == ((0.0, 0.0, 0.0),)
    arr[:, 0, 0, 0] = np.inf
    with pytest.raises(ContractError):
        VectorField(g, arr, '{"singular": [[0.0, 0.0, 0.0]]}')


def test_metadata_must_be_one_line():
    g = Grid4.cube(4, 4)
    with pytest.raises(ConfigurationError):
        ScalarField(g, np.zeros(g.shape), "a\nb")


def _sine_gradient_error(n):
    g = Grid4.cube(n, 2)
    X, Y, Z = g.mesh()
    sl = np.stack([np.sin(2 * X) * np.cos(Y), np.exp(0.5 * Z) * Y, np.sin(X * Y * Z)], axis=-1)
    grad = slice_gradient(sl, g.spacing)
    exact = np.zeros_like(grad)
    exact[..., 0, 0] = 2 * np.cos(2 * X) * np.cos(Y)
    exact[..., 0, 1] = -np.sin(2 * X) * np.sin(Y)
    exact[..., 1, 1] = np.exp(0.5 * Z)
    exact[..., 1, 2] = 0.5 * np.exp(0.5 * Z) * Y
    c = np.cos(X * Y * Z)
    exact[..., 2, 0], exact[..., 2, 1], exact[..., 2, 2] = Y * Z * c, X * Z * c, X * Y * c
    return float(np.abs(grad - exact).max())


def test_gradient_is_second_order():
    e1, e2 = _sine_gradient_error(17), _sine_gradient_error(33)
    assert math.log2(e1 / e2) >= 1.8


def test_gradient_shape_and_divergence_of_rotation():
    g = Grid4.cube(6, 3)
    X, Y, Z = g.mesh()
    arr = np.broadcast_to(np.stack([-Y, X, np.zeros_like(X)], -1), g.shape + (3,))
    v = VectorField(g, arr)
    assert gradient(v).shape == g.shape + (3, 3)
    assert divergence_residual(v) < 1e-13


def test_natural_rescale_of_linear_field():
    # v = (x2, 0, 0) is fixed by the scaling up to lam^2; p = t scales by lam^4
    g = Grid4.cube(9, 5)
    X, Y, Z = g.mesh()
    v = VectorField(g, np.broadcast_to(np.stack([Y, 0 * Y, 0 * Y], -1), g.shape + (3,)))
    p = ScalarField(g, np.broadcast_to(g.times[:, None, None, None], g.shape))
    lam = 0.5
    vl, pl = natural_rescale(v, p, lam)
    np.testing.assert_allclose(vl.samples, lam * lam * v.samples, atol=1e-14)
    np.testing.assert_allclose(pl.samples, lam ** 4 * p.samples, atol=1e-14)
    assert '"rescaled_lambda": 0.5' in vl.metadata


@pytest.mark.parametrize("lam", [0.0, -0.5, 1.5])
def test_natural_rescale_rejects_lambda(lam):
    g = Grid4.cube(4, 4)
    with pytest.raises(DomainError):
        natural_rescale(VectorField(g, np.zeros(g.shape + (3,))), None, lam)


def test_natural_rescale_moves_singular_points():
    g = Grid4.cube(5, 4)
    v = VectorField(g, np.zeros(g.shape + (3,)), '{"singular": [[0.5, 0.0, 0.0]]}')
    out = Grid4.cube(5, 4, -2, 2, -4, 0)
    vl, _ = natural_rescale(v, None, 0.5, out)
    assert vl.singular_points == ((1.0, 0.0, 0.0),)
