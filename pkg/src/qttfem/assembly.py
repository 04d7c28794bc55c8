"""Subdomain stiffness matrices and load vectors in z-ordered QTT format.

Elements and nodes of a ``2**d x 2**d`` grid share the same index space;
element ``(i, j)`` owns nodes ``(i, j) .. (i+1, j+1)``.  Elements in the last
row or column are padding and are dropped by the shift matrices.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, Mapping, NamedTuple

import numpy as np

from .errors import ConfigError, GuardError, ShapeError
from .geometry import (
    JacobianQTTFields,
    Quadrangle,
    corner_gradient,
    grid_coefficients,
    jacobian_qtt_fields,
)
from .tt import (
    TTMatrix,
    TTVector,
    tt_add,
    tt_from_bowtie_chain,
    tt_from_dense,
    tt_hadamard,
    tt_matvec,
    tt_ones,
    tt_round,
    tt_sandwich,
    tt_scale,
    tt_sum,
    tt_transpose,
    tt_zeros,
)
from .zorder import z_affine, z_coords, z_kron, z_meshgrid


class Corner(NamedTuple):
    """Reference-square corner; ``cx, cy`` are each -1 or 1."""

    cx: int
    cy: int


#: lexicographic order used when summing corner pairs
CORNER_ORDER = tuple(Corner(cx, cy) for cx in (-1, 1) for cy in (-1, 1))


_M0 = np.diag([1.0, 0.0])
_L0 = np.diag([0.0, 1.0])
_EYE = np.eye(2)
_UP = np.array([[0.0, 1.0], [0.0, 0.0]])
_DOWN = np.array([[0.0, 0.0], [1.0, 0.0]])


def _blocks(first, middle, last, single, d):
    """Bowtie chain for a block-bidiagonal pattern, most significant block first."""
    if d == 1:
        return [single[None, :, :, None]]
    def core(rows):
        return np.array([[blk for blk in row] for row in rows]).transpose(0, 2, 3, 1)

    return [core([first])] + [core(middle)] * (d - 2) + [core([[b] for b in last])]


def shift_blocks(kind: int, d: int) -> list[np.ndarray]:
    """Block cores (most significant first) of the 1D element-to-node matrix.

    ``kind=0`` gives ``W0[e, p] = 1`` iff ``p = e < 2**d - 1``;
    ``kind=1`` gives ``W1[e, p] = 1`` iff ``p = e + 1``.
    """
    z = np.zeros((2, 2))
    if kind == 0:
        return _blocks([_L0, _M0], [[_L0, _M0], [z, _EYE]], [_M0, _EYE], _M0, d)
    if kind == 1:
        # digits above the carry agree, the carry digit goes 0 -> 1, lower digits 1 -> 0
        return _blocks([_EYE, _UP], [[_EYE, _UP], [z, _DOWN]], [_UP, _DOWN], _UP, d)
    raise ValueError(f"shift kind must be 0 or 1, got {kind}")


def shift_matrix_1d(kind: int, d: int) -> TTMatrix:
    return tt_from_bowtie_chain(shift_blocks(kind, d))


def shift_matrix_2d(corner, d: int) -> TTMatrix:
    """``V_c`` with ``V_c[e, p] = 1`` iff node ``p`` is the ``c`` corner of element ``e``."""
    cx, cy = corner
    if cx not in (-1, 1) or cy not in (-1, 1):
        raise ValueError(f"corner components must be +-1, got {corner}")
    return z_kron(shift_matrix_1d((cx + 1) // 2, d), shift_matrix_1d((cy + 1) // 2, d))


def local_coupling_vector(c1, c2, fields: JacobianQTTFields, tol: float) -> TTVector:
    """Per-element stiffness coupling between the ``c1`` and ``c2`` basis functions."""
    g1 = corner_gradient(c1)
    g2 = corner_gradient(c2)
    coef = 4.0 * np.array(
        [g1[0] * g2[0], g1[1] * g2[1], g1[0] * g2[1] + g1[1] * g2[0]]
    )
    terms = [tt_scale(f, a) for f, a in zip((fields.jt11, fields.jt22, fields.jt12), coef) if a != 0.0]
    if not terms:
        return tt_zeros(fields.det.mode_sizes)
    return tt_round(tt_sum(terms), tol)


def stiffness_term(c1, c2, k: TTVector, d: int) -> TTMatrix:
    """``V_c1^T diag(k) V_c2`` (exact, unrounded)."""
    return tt_sandwich(shift_matrix_2d(c1, d), k, shift_matrix_2d(c2, d))


def subdomain_stiffness(
    q: Quadrangle, d: int, tol: float, fields: JacobianQTTFields | None = None
) -> TTMatrix:
    """Stiffness matrix of one quadrangle, summed over the 16 corner pairs."""
    if fields is None:
        fields = jacobian_qtt_fields(q, d, tol)
    acc = None
    for c1, c2 in itertools.product(CORNER_ORDER, repeat=2):
        term = stiffness_term(c1, c2, local_coupling_vector(c1, c2, fields, tol), d)
        acc = term if acc is None else tt_round(tt_add(acc, term), tol)
    return tt_round(acc, tol)


def mass_term_and_force(
    q: Quadrangle, d: int, fbar: TTVector, tol: float, fields: JacobianQTTFields | None = None
) -> TTVector:
    """Load vector ``sum_{c1,c2} V_c1^T diag(G) V_c2 fbar`` with ``G = det J / 4``.

    The double sum is evaluated as ``sum_c1 V_c1^T (G * sum_c2 V_c2 fbar)``.
    """
    if fields is None:
        fields = jacobian_qtt_fields(q, d, tol)
    g = tt_scale(fields.det, 0.25)
    s = tt_sum((tt_matvec(shift_matrix_2d(c, d), fbar) for c in CORNER_ORDER), tol)
    gs = tt_round(tt_hadamard(g, s), tol)
    terms = (tt_matvec(tt_transpose(shift_matrix_2d(c, d)), gs) for c in CORNER_ORDER)
    return tt_round(tt_sum(terms, tol), tol)


# --------------------------------------------------------------------------
# right-hand sides


@dataclass(frozen=True)
class Source:
    """Source term ``f(x, y)``.

    Either a polynomial given as ``{(px, py): coefficient}`` (exact in QTT
    form) or a vectorized callback ``f(x, y) -> array``.
    """

    poly: Mapping[tuple[int, int], float] | None = None
    func: Callable[[np.ndarray, np.ndarray], np.ndarray] | None = None

    def __post_init__(self):
        if (self.poly is None) == (self.func is None):
            raise ConfigError("a source needs exactly one of poly or func")

    @classmethod
    def constant(cls, value: float = 1.0) -> "Source":
        return cls(poly={(0, 0): float(value)})

    @classmethod
    def parse(cls, spec) -> "Source":
        """Build from a config value: a number, or ``{"poly": [[px, py, c], ...]}``."""
        if spec is None:
            return cls.constant(1.0)
        if isinstance(spec, (int, float)):
            return cls.constant(float(spec))
        if isinstance(spec, Mapping) and "poly" in spec:
            terms: dict[tuple[int, int], float] = {}
            try:
                for px, py, c in spec["poly"]:
                    key = (int(px), int(py))
                    terms[key] = terms.get(key, 0.0) + float(c)
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"bad polynomial source {spec!r}") from exc
            return cls(poly=terms)
        raise ConfigError(f"unsupported source {spec!r}")

    def __call__(self, x, y):
        if self.func is not None:
            return np.asarray(self.func(x, y), dtype=float)
        x = np.asarray(x, dtype=float)
        out = np.zeros(np.broadcast(x, y).shape)
        for (px, py), c in self.poly.items():
            out = out + c * x**px * np.asarray(y) ** py
        return out


def coordinate_fields(q: Quadrangle, d: int) -> tuple[TTVector, TTVector]:
    """Physical ``x`` and ``y`` of every node, in z-order (rank <= 6)."""
    q0, qx, qy, qxy = grid_coefficients(q, d)
    fi, fj = z_meshgrid(d)
    ij = tt_hadamard(fi, fj)
    out = []
    for k in range(2):
        f = z_affine(d, qx[k], qy[k], q0[k])
        if qxy[k] != 0.0:
            f = tt_add(f, tt_scale(ij, qxy[k]))
        out.append(tt_round(f, 0.0))
    return out[0], out[1]


_CALLBACK_DENSE_LIMIT = 1 << 20


def sample_rhs(q: Quadrangle, d: int, source: Source, tol: float) -> TTVector:
    """Nodal values of ``source`` on the grid of ``q``, in z-order."""
    if source.poly is not None:
        x, y = coordinate_fields(q, d)
        ones = tt_ones([4] * d)
        powers = {}

        def power(base, name, p):
            key = (name, p)
            if key not in powers:
                powers[key] = ones if p == 0 else tt_round(tt_hadamard(power(base, name, p - 1), base), 0.0)
            return powers[key]

        terms = []
        for (px, py), c in sorted(source.poly.items()):
            if c == 0.0:
                continue
            if px < 0 or py < 0:
                raise ConfigError(f"negative power in source term {(px, py)}")
            t = tt_hadamard(power(x, "x", px), power(y, "y", py))
            terms.append(tt_scale(tt_round(t, 0.0), c))
        if not terms:
            return tt_zeros([4] * d)
        return tt_round(tt_sum(terms, 0.0), tol)

    q0, qx, qy, qxy = grid_coefficients(q, d)

    def values(i, j):
        pts = q0[:, None] + np.outer(qx, i) + np.outer(qy, j) + np.outer(qxy, i * j)
        return source(pts[0], pts[1])

    if 4**d > _CALLBACK_DENSE_LIMIT:
        raise GuardError(
            f"callback sources are sampled densely; 4**{d} nodes exceed the limit {_CALLBACK_DENSE_LIMIT}"
        )
    i, j = z_coords(d)
    return tt_from_dense(values(i.astype(float), j.astype(float)), [4] * d, tol)


@dataclass
class SubdomainSystem:
    """Stiffness matrix and load vector of one subdomain."""

    quad: Quadrangle
    d: int
    A: TTMatrix
    f: TTVector
    fields: JacobianQTTFields = field(repr=False, default=None)


def build_subdomain_system(q: Quadrangle, d: int, tol: float, source: Source | None = None) -> SubdomainSystem:
    if d < 1:
        raise ShapeError("d must be >= 1")
    source = Source.constant(1.0) if source is None else source
    fields = jacobian_qtt_fields(q, d, tol)
    a = subdomain_stiffness(q, d, tol, fields)
    fbar = sample_rhs(q, d, source, tol)
    f = mass_term_and_force(q, d, fbar, tol, fields)
    return SubdomainSystem(quad=q, d=d, A=a, f=f, fields=fields)
