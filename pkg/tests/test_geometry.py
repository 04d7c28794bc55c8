import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import element_jacobians
from qttfem.errors import DegenerateElementError, ShapeError
from qttfem.geometry import (
    Quadrangle,
    bilinear_map,
    grid_coefficients,
    jacobian_parts,
    jacobian_qtt_fields,
    node_coordinates,
    shape_values,
)
from qttfem.tt import tt_to_dense
from qttfem.zorder import z_coords

UNIT = [[0, 0], [1, 0], [1, 1], [0, 1]]
SKEW = [[0, 0], [2, 0], [3, 2], [0, 1]]


def random_convex_quad(rng):
    # perturbed square corners stay convex and counterclockwise
    base = np.array(UNIT, dtype=float)
    return Quadrangle(base + rng.uniform(-0.2, 0.2, size=(4, 2)))


def test_partition_of_unity():
    xi, eta = np.meshgrid(np.linspace(-1, 1, 5), np.linspace(-1, 1, 5))
    assert np.allclose(shape_values(xi, eta).sum(axis=0), 1.0)


def test_skewed_center():
    q = Quadrangle(np.array(SKEW, dtype=float))
    assert np.allclose(bilinear_map(q, 0.0, 0.0), [1.25, 0.75])
    assert q.area() == pytest.approx(3.5)


def test_unit_square_parts():
    q = Quadrangle(np.array(UNIT, dtype=float))
    q0, qx, qy, qxy = grid_coefficients(q, 2)
    assert np.allclose(qx, [1 / 3, 0]) and np.allclose(qy, [0, 1 / 3]) and np.allclose(qxy, 0)
    f = jacobian_parts(q, 2)
    assert np.allclose(f.base, np.diag([1 / 6, 1 / 6]))
    assert f.det_base == pytest.approx(1 / 36)
    assert np.allclose(f.di, 0) and np.allclose(f.dj, 0)


def test_node_coordinates_corners():
    q = Quadrangle(np.array(SKEW, dtype=float))
    n = 7
    pts = node_coordinates(q, np.array([0, n, n, 0]), np.array([0, 0, n, n]), 3)
    assert np.allclose(pts.T, SKEW)


def test_invalid_quadrangles():
    with pytest.raises(DegenerateElementError):
        Quadrangle(np.array(UNIT[::-1], dtype=float))
    with pytest.raises(DegenerateElementError):
        Quadrangle(np.array([[0, 0], [1, 0], [2, 0], [0, 1]], dtype=float))
    with pytest.raises(ShapeError):
        Quadrangle(np.zeros((3, 2)))


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 10**6), d=st.sampled_from([2, 3, 4]))
def test_linear_jacobian_matches_elements(seed, d):
    q = random_convex_quad(np.random.default_rng(seed))
    f = jacobian_parts(q, d)
    for (i, j), jac in element_jacobians(q.vertices, d).items():
        assert np.allclose(f.jacobian(i, j), jac, atol=1e-12, rtol=0)
        assert f.det(i, j) == pytest.approx(np.linalg.det(jac), abs=1e-12)


@pytest.mark.parametrize("d", [2, 3, 4])
def test_qtt_fields_match_elements(d):
    q = Quadrangle(np.array(SKEW, dtype=float))
    fields = jacobian_qtt_fields(q, d, 1e-12)
    assert fields.det.max_rank <= 3
    i, j = z_coords(d)
    jac = element_jacobians(q.vertices, d)
    det = tt_to_dense(fields.det)
    jt11 = tt_to_dense(fields.jt11)
    jt12 = tt_to_dense(fields.jt12)
    for z, (a, b) in enumerate(zip(i, j)):
        if (a, b) not in jac:
            continue
        m = jac[a, b]
        adj = np.array([[m[1, 1], -m[0, 1]], [-m[1, 0], m[0, 0]]])
        k = adj @ adj.T / np.linalg.det(m)
        assert det[z] == pytest.approx(np.linalg.det(m), abs=1e-13)
        assert jt11[z] == pytest.approx(k[0, 0], rel=1e-9)
        assert jt12[z] == pytest.approx(k[0, 1], rel=1e-9, abs=1e-12)


def test_strongly_skewed_padding_falls_back():
    # the extrapolated padding determinant would vanish for this shape at d=1..2
    q = Quadrangle(np.array([[0, 0], [1, 0], [1, 0.1], [0, 1]], dtype=float))
    for d in (1, 2, 3):
        fields = jacobian_qtt_fields(q, d, 1e-12)
        assert np.all(np.isfinite(tt_to_dense(fields.jt11)))
