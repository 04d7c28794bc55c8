"""Canonical and z-order node numbering, z-kron, and z-order meshgrids.

A node ``(i, j)`` of a ``2**d x 2**d`` grid has canonical index
``i + 2**d * j`` and z-order index obtained by interleaving the bits of
``i`` (even positions) and ``j`` (odd positions).  In QTT form the z-order
index has one base-4 digit ``z_k = i_k + 2 j_k`` per core.
"""

from __future__ import annotations

import numpy as np

from .errors import ShapeError
from .tt import TTMatrix, TTVector


def _check_node(i, j, d):
    n = 1 << d
    if not (0 <= i < n and 0 <= j < n):
        raise IndexError(f"node ({i}, {j}) outside the {n}x{n} grid")


def canonical_index(i: int, j: int, d: int) -> int:
    _check_node(i, j, d)
    return i + (j << d)


def z_index(i: int, j: int, d: int) -> int:
    _check_node(i, j, d)
    z = 0
    for k in range(d):
        z |= ((i >> k) & 1) << (2 * k)
        z |= ((j >> k) & 1) << (2 * k + 1)
    return z


def z_decode(z: int, d: int) -> tuple[int, int]:
    """Inverse of :func:`z_index`."""
    if not 0 <= z < 1 << (2 * d):
        raise IndexError(f"z-index {z} outside [0, 4**{d})")
    i = j = 0
    for k in range(d):
        i |= ((z >> (2 * k)) & 1) << k
        j |= ((z >> (2 * k + 1)) & 1) << k
    return i, j


def z_coords(d: int) -> tuple[np.ndarray, np.ndarray]:
    """Arrays ``(i, j)`` of node coordinates listed in z-order."""
    z = np.arange(1 << (2 * d))
    i = np.zeros_like(z)
    j = np.zeros_like(z)
    for k in range(d):
        i |= ((z >> (2 * k)) & 1) << k
        j |= ((z >> (2 * k + 1)) & 1) << k
    return i, j


def z_permutation(d: int) -> np.ndarray:
    """``perm[z_index(i, j)] = canonical_index(i, j)``.

    A dense vector ``x`` in canonical order is brought to z-order by
    ``x[perm]``; a matrix by ``a[np.ix_(perm, perm)]``.
    """
    i, j = z_coords(d)
    return i + (j << d)


def z_kron(k, l):
    """Kronecker product of two binary-mode QTT objects, indexed in z-order.

    ``k`` supplies the first (x, ``i``) coordinate and ``l`` the second
    (y, ``j``).  Core ``n`` of the result is ``kron`` of the operand cores,
    arranged so that its digit is ``a + 2 b`` with ``a`` from ``k`` and
    ``b`` from ``l``; rows and columns are interleaved independently.
    """
    if type(k) is not type(l):
        raise ShapeError("z_kron needs two vectors or two matrices")
    if k.d != l.d:
        raise ShapeError(f"z_kron operands have {k.d} and {l.d} cores")
    out = []
    if isinstance(k, TTVector):
        if any(m != 2 for m in k.mode_sizes + l.mode_sizes):
            raise ShapeError("z_kron expects binary modes")
        for x, y in zip(k.cores, l.cores):
            c = np.einsum("paq,rbs->prbaqs", x, y)
            out.append(c.reshape(x.shape[0] * y.shape[0], 4, x.shape[2] * y.shape[2]))
        return TTVector(out)
    if any(m != 2 for m in k.row_modes + k.col_modes + l.row_modes + l.col_modes):
        raise ShapeError("z_kron expects 2x2 modes")
    for x, y in zip(k.cores, l.cores):
        c = np.einsum("pabq,rces->prcaebqs", x, y)
        out.append(c.reshape(x.shape[0] * y.shape[0], 4, 4, x.shape[3] * y.shape[3]))
    return TTMatrix(out)


def range_vector(d: int) -> TTVector:
    """``(0, 1, ..., 2**d - 1)`` as an exact rank-2 QTT vector."""
    return affine_qtt([1 << k for k in range(d)], 0.0)


def affine_qtt(weights, offset: float) -> TTVector:
    """Vector ``offset + sum_k weights[k] * i_k`` over binary digits ``i_k`` (rank <= 2)."""
    return _affine(np.asarray(weights, dtype=float)[:, None] * np.array([0.0, 1.0]), offset)


def _affine(digit_values: np.ndarray, offset: float) -> TTVector:
    """Rank-2 TT of ``offset + sum_k digit_values[k, digit_k]``."""
    d, n = digit_values.shape
    if d == 1:
        return TTVector([(offset + digit_values[0]).reshape(1, n, 1)])
    cores = []
    for k in range(d):
        w = digit_values[k]
        if k == 0:
            c = np.zeros((1, n, 2))
            c[0, :, 0] = w + offset
            c[0, :, 1] = 1.0
        elif k == d - 1:
            c = np.zeros((2, n, 1))
            c[0, :, 0] = 1.0
            c[1, :, 0] = w
        else:
            c = np.zeros((2, n, 2))
            c[0, :, 0] = 1.0
            c[1, :, 0] = w
            c[1, :, 1] = 1.0
        cores.append(c)
    return TTVector(cores)


def z_affine(d: int, a: float, b: float, c: float) -> TTVector:
    """Field ``c + a*i + b*j`` over nodes in z-order, exactly rank <= 2."""
    vals = np.empty((d, 4))
    for k in range(d):
        for z in range(4):
            vals[k, z] = (1 << k) * (a * (z & 1) + b * (z >> 1))
    return _affine(vals, c)


def z_meshgrid(d: int) -> tuple[TTVector, TTVector]:
    """z-order meshgrid fields: ``i_field[z(i, j)] = i`` and ``j_field[z(i, j)] = j``."""
    if d < 1:
        raise ValueError("d must be >= 1")
    rng = range_vector(d)
    ones = TTVector([np.ones((1, 2, 1))] * d)
    return z_kron(rng, ones), z_kron(ones, rng)
