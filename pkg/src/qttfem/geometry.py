"""Bilinear quadrangles and Jacobian fields over their element grids."""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import DegenerateElementError, ShapeError
from .tt import (
    TTVector,
    elementwise_reciprocal,
    tt_add,
    tt_hadamard,
    tt_round,
    tt_scale,
)
from .zorder import z_affine

#: reference-square corners in vertex order
CORNERS = ((-1, -1), (1, -1), (1, 1), (-1, 1))


def shape_values(xi, eta) -> np.ndarray:
    """Bilinear Lagrange basis at ``(xi, eta)``, ordered as :data:`CORNERS`."""
    xi = np.asarray(xi, dtype=float)
    eta = np.asarray(eta, dtype=float)
    return np.stack([(1 + cx * xi) * (1 + cy * eta) / 4 for cx, cy in CORNERS])


def shape_gradients(xi, eta) -> np.ndarray:
    """``(4, 2)`` array of ``(d/dxi, d/deta)`` of each basis function."""
    return np.array(
        [[cx * (1 + cy * eta) / 4, cy * (1 + cx * xi) / 4] for cx, cy in CORNERS],
        dtype=float,
    )


def corner_gradient(corner, xi: float = 0.0, eta: float = 0.0) -> np.ndarray:
    cx, cy = corner
    return np.array([cx * (1 + cy * eta) / 4, cy * (1 + cx * xi) / 4])


@dataclass(frozen=True, eq=False)
class Quadrangle:
    """Convex quadrangle given by 4 counterclockwise vertices.

    Vertex ``k`` is the image of reference corner ``CORNERS[k]``.
    """

    vertices: np.ndarray

    def __post_init__(self):
        v = np.array(self.vertices, dtype=float)
        if v.shape != (4, 2):
            raise ShapeError(f"a quadrangle needs 4 (x, y) vertices, got shape {v.shape}")
        v.flags.writeable = False
        object.__setattr__(self, "vertices", v)
        dets = [np.linalg.det(self.jacobian(cx, cy)) for cx, cy in CORNERS]
        if min(dets) <= 0.0:
            raise DegenerateElementError(
                f"quadrangle {v.tolist()} is degenerate or not counterclockwise "
                f"(corner Jacobians {np.round(dets, 12).tolist()})"
            )

    def __eq__(self, other):
        return isinstance(other, Quadrangle) and np.array_equal(self.vertices, other.vertices)

    def __hash__(self):
        return hash(self.vertices.tobytes())

    def jacobian(self, xi: float, eta: float) -> np.ndarray:
        """``[[dx/dxi, dx/deta], [dy/dxi, dy/deta]]`` of the bilinear map."""
        return self.vertices.T @ shape_gradients(xi, eta)

    def area(self) -> float:
        x, y = self.vertices.T
        return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))


def bilinear_map(q: Quadrangle, xi, eta) -> np.ndarray:
    """Image of reference point(s) ``(xi, eta)``; shape ``(2,) + broadcast shape``."""
    phi = shape_values(xi, eta)
    return np.tensordot(q.vertices.T, phi, axes=(1, 0))


def grid_coefficients(q: Quadrangle, d: int):
    """``(q0, qx, qy, qxy)`` with node ``(i, j)`` at ``q0 + qx i + qy j + qxy i j``."""
    v = q.vertices
    s = 2.0 / ((1 << d) - 1)
    c1 = (-v[0] + v[1] + v[2] - v[3]) / 4
    c2 = (-v[0] - v[1] + v[2] + v[3]) / 4
    c3 = (v[0] - v[1] + v[2] - v[3]) / 4
    return v[0].copy(), s * (c1 - c3), s * (c2 - c3), s * s * c3


def node_coordinates(q: Quadrangle, i, j, d: int) -> np.ndarray:
    q0, qx, qy, qxy = grid_coefficients(q, d)
    i = np.asarray(i, dtype=float)
    j = np.asarray(j, dtype=float)
    return (
        q0[:, None] + np.outer(qx, i.ravel()) + np.outer(qy, j.ravel()) + np.outer(qxy, (i * j).ravel())
    ).reshape((2,) + i.shape)


@dataclass(frozen=True)
class JacobianField:
    """Element Jacobians as linear functions of the element index.

    Element ``(i, j)`` has ``J = base + i*di + j*dj`` and
    ``det J = det_base + i*det_di + j*det_dj``.
    """

    base: np.ndarray
    di: np.ndarray
    dj: np.ndarray
    det_base: float
    det_di: float
    det_dj: float

    def jacobian(self, i, j) -> np.ndarray:
        return self.base + i * self.di + j * self.dj

    def det(self, i, j):
        return self.det_base + i * self.det_di + j * self.det_dj


def _adj(a: np.ndarray) -> np.ndarray:
    return np.array([[a[1, 1], -a[0, 1]], [-a[1, 0], a[0, 0]]])


def jacobian_parts(q: Quadrangle, d: int, xi: float = 0.0, eta: float = 0.0) -> JacobianField:
    """Linear-in-index Jacobian of the element maps, at reference point ``(xi, eta)``."""
    _, qx, qy, qxy = grid_coefficients(q, d)
    dphi = shape_gradients(xi, eta)
    # columns: offsets of the 4 element vertices from vertex (i, j)
    base = np.column_stack([np.zeros(2), qx, qx + qy + qxy, qy]) @ dphi
    a = dphi[2] + dphi[3]
    b = dphi[1] + dphi[2]
    di = np.outer(qxy, a)
    dj = np.outer(qxy, b)
    # rank-1 updates: det(base + qxy w^T) = det(base) + w^T adj(base) qxy
    adj_q = _adj(base) @ qxy
    field = JacobianField(
        base=base,
        di=di,
        dj=dj,
        det_base=float(np.linalg.det(base)),
        det_di=float(a @ adj_q),
        det_dj=float(b @ adj_q),
    )
    m = (1 << d) - 2
    worst = min(field.det(i, j) for i in (0, m) for j in (0, m))
    if worst <= 0.0:
        raise DegenerateElementError(
            f"non-positive element Jacobian determinant ({worst:.3e}) at d={d}"
        )
    return field


class JacobianQTTFields(NamedTuple):
    """Per-element coefficient fields in z-order (padding elements included)."""

    jt11: TTVector
    jt22: TTVector
    jt12: TTVector
    det: TTVector


def _padding_is_safe(field: JacobianField, d: int) -> bool:
    n = (1 << d) - 1
    m = n - 1
    real_min = min(field.det(i, j) for i in (0, m) for j in (0, m))
    pad_min = min(field.det(n, 0), field.det(0, n), field.det(n, n))
    return pad_min >= 0.5 * real_min


def _clamped_index_field(d: int, a: float, b: float, c: float) -> TTVector:
    """``c + a*min(i, n-2) + b*min(j, n-2)`` over elements in z-order."""
    from .zorder import z_kron
    from .tt import tt_ones, tt_unit

    base = z_affine(d, a, b, c)
    last = [1] * d
    ones = tt_ones([2] * d)
    fix = tt_scale(z_kron(tt_unit([2] * d, last), ones), -a)
    fix = tt_add(fix, tt_scale(z_kron(ones, tt_unit([2] * d, last)), -b))
    return tt_round(tt_add(base, fix), 0.0)


def jacobian_qtt_fields(q: Quadrangle, d: int, tol: float, **reciprocal_kw) -> JacobianQTTFields:
    """QTT fields of ``adj(J) adj(J)^T / det J`` and ``det J`` at element centers.

    Padding elements take the values of the same linear formulas.  When that
    extrapolation would push the determinant close to zero (strongly skewed
    quadrangles at small ``d``), the padding row/column reuses the values of
    the adjacent real elements instead.
    """
    f = jacobian_parts(q, d)
    if _padding_is_safe(f, d):
        def lin(a, b, c):
            return z_affine(d, a, b, c)
    else:
        def lin(a, b, c):
            return _clamped_index_field(d, a, b, c)

    j = [[lin(f.di[r, c], f.dj[r, c], f.base[r, c]) for c in range(2)] for r in range(2)]
    det = lin(f.det_di, f.det_dj, f.det_base)

    def sq(x):
        return tt_hadamard(x, x)

    n11 = tt_round(tt_add(sq(j[1][1]), sq(j[0][1])), 0.0)
    n22 = tt_round(tt_add(sq(j[0][0]), sq(j[1][0])), 0.0)
    n12 = tt_round(
        tt_scale(tt_add(tt_hadamard(j[1][1], j[1][0]), tt_hadamard(j[0][1], j[0][0])), -1.0),
        0.0,
    )
    inv_det = elementwise_reciprocal(det, tol, **reciprocal_kw)
    return JacobianQTTFields(
        jt11=tt_round(tt_hadamard(n11, inv_det), tol),
        jt22=tt_round(tt_hadamard(n22, inv_det), tol),
        jt12=tt_round(tt_hadamard(n12, inv_det), tol),
        det=det,
    )
