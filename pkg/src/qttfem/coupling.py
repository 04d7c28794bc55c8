"""Interface coupling of subdomain systems and Dirichlet masking.

Sides of a subdomain grid are named after the reference square:
``bottom`` (``j = 0``), ``right`` (``i = n-1``), ``top`` (``j = n-1``) and
``left`` (``i = 0``).  Each side is traversed counterclockwise, so side node
``s`` sits at ``(s, 0)``, ``(n-1, s)``, ``(n-1-s, n-1)`` and ``(0, n-1-s)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, ShapeError
from .tt import (
    TTMatrix,
    TTVector,
    tt_add,
    tt_diag,
    tt_diag_part,
    tt_dot,
    tt_eye,
    tt_hadamard,
    tt_kron,
    tt_matmul,
    tt_matvec,
    tt_ones,
    tt_round,
    tt_scale,
    tt_sum,
    tt_transpose,
    tt_unit,
)
from .zorder import z_kron

SIDES = ("bottom", "right", "top", "left")
VERTICES = ("LB", "RB", "LT", "RT")

# rows: side digit s_k in {0, 1}; columns: z-digit i_k + 2 j_k
_PSI_CORE = {
    "bottom": [[1, 0, 0, 0], [0, 1, 0, 0]],
    "right": [[0, 1, 0, 0], [0, 0, 0, 1]],
    "top": [[0, 0, 0, 1], [0, 0, 1, 0]],
    "left": [[0, 0, 1, 0], [1, 0, 0, 0]],
}
_VERTEX_DIGIT = {"LB": 0, "RB": 1, "LT": 2, "RT": 3}


def _check_side(side):
    if side not in _PSI_CORE:
        raise ConfigError(f"unknown side {side!r}; expected one of {SIDES}")


def psi_side(side: str, d: int) -> TTMatrix:
    """``2**d x 4**d`` selector of the nodes on one side, in traversal order."""
    _check_side(side)
    core = np.array(_PSI_CORE[side], dtype=float)[None, :, :, None]
    return TTMatrix([core] * d)


def swap_rows(psi: TTMatrix) -> TTMatrix:
    """Reverse the traversal order of a side selector (``S @ psi``)."""
    return TTMatrix([c[:, ::-1, :, :] for c in psi.cores])


def psi_vertex(corner: str, d: int) -> TTMatrix:
    """``1 x 4**d`` selector of one corner node."""
    if corner not in _VERTEX_DIGIT:
        raise ConfigError(f"unknown corner {corner!r}; expected one of {VERTICES}")
    row = np.zeros((1, 1, 4, 1))
    row[0, 0, _VERTEX_DIGIT[corner], 0] = 1.0
    return TTMatrix([row] * d)


@dataclass(frozen=True)
class InterfaceSpec:
    """A side-to-side or corner-to-corner link between subdomains ``m`` and ``p``."""

    m: int
    p: int
    kind: str
    side_m: str | None = None
    side_p: str | None = None
    corner_m: str | None = None
    corner_p: str | None = None
    reversed: bool = True

    def __post_init__(self):
        if self.m == self.p:
            raise ConfigError(f"interface links subdomain {self.m} to itself")
        if self.kind == "side":
            _check_side(self.side_m)
            _check_side(self.side_p)
        elif self.kind == "vertex":
            for c in (self.corner_m, self.corner_p):
                if c not in _VERTEX_DIGIT:
                    raise ConfigError(f"unknown corner {c!r}; expected one of {VERTICES}")
        else:
            raise ConfigError(f"interface kind must be 'side' or 'vertex', got {self.kind!r}")

    def mirrored(self) -> "InterfaceSpec":
        return InterfaceSpec(
            self.p, self.m, self.kind, self.side_p, self.side_m, self.corner_p, self.corner_m, self.reversed
        )

    def involves(self, k: int) -> bool:
        return k in (self.m, self.p)

    def oriented(self, k: int) -> "InterfaceSpec":
        """The same link seen from subdomain ``k``."""
        if k == self.m:
            return self
        if k == self.p:
            return self.mirrored()
        raise ValueError(f"subdomain {k} is not part of this interface")


def pi_offdiag(spec: InterfaceSpec, d: int) -> TTMatrix:
    """``Pi_mp``: copies interface values of subdomain ``p`` onto matching nodes of ``m``."""
    if spec.kind == "side":
        pm = psi_side(spec.side_m, d)
        pp = psi_side(spec.side_p, d)
        if spec.reversed:
            pp = swap_rows(pp)
        return tt_matmul(tt_transpose(pm), pp)
    return tt_matmul(tt_transpose(psi_vertex(spec.corner_m, d)), psi_vertex(spec.corner_p, d))


def pi_diag(m: int, interfaces, d: int) -> TTMatrix:
    """``Pi_mm = -sum_p Pi_mp Pi_pm`` over all interfaces touching ``m``."""
    terms = []
    for spec in interfaces:
        if spec.involves(m):
            s = spec.oriented(m)
            terms.append(tt_matmul(pi_offdiag(s, d), pi_offdiag(s.mirrored(), d)))
    if not terms:
        return tt_scale(tt_eye([4] * d), 0.0)
    return tt_scale(tt_sum(terms), -1.0)


def gamma_estimate(a: TTMatrix) -> float:
    """Mean of the diagonal of ``a``."""
    diag = tt_diag_part(a)
    return tt_dot(diag, tt_ones(diag.mode_sizes)) / diag.size


# --------------------------------------------------------------------------
# Dirichlet masks


def _edge_mask_1d(d: int, low: bool, high: bool) -> TTVector:
    v = tt_ones([2] * d)
    if low:
        v = tt_add(v, tt_scale(tt_unit([2] * d, [0] * d), -1.0))
    if high:
        v = tt_add(v, tt_scale(tt_unit([2] * d, [1] * d), -1.0))
    # exact 0/1 entries; the unrounded sum already has rank <= 3
    return v


def boundary_mask(sides, d: int) -> TTVector:
    """0 on nodes of the listed sides, 1 elsewhere, in z-order."""
    sides = set(sides)
    for s in sides:
        _check_side(s)
    xi = _edge_mask_1d(d, "left" in sides, "right" in sides)
    xj = _edge_mask_1d(d, "bottom" in sides, "top" in sides)
    return z_kron(xi, xj)


def apply_dirichlet(a: TTMatrix, f: TTVector, mask: TTVector, tol: float = 0.0):
    """Replace masked-out rows by identity rows and zero the matching load entries."""
    dm = tt_diag(mask)
    eye = tt_eye(mask.mode_sizes)
    a_out = tt_add(tt_matmul(dm, a), tt_add(eye, tt_scale(dm, -1.0)))
    return tt_round(a_out, tol), tt_round(tt_hadamard(mask, f), tol)


# --------------------------------------------------------------------------
# block system


@dataclass
class BlockSystem:
    """Coupled, masked blocks ``B[(m, p)]`` and right-hand sides ``g[m]``."""

    blocks: dict[tuple[int, int], TTMatrix]
    rhs: list[TTVector]
    gammas: list[float] = field(default_factory=list)


def build_blocks(systems, interfaces, dirichlet, d: int, tol: float) -> BlockSystem:
    """Couple subdomain systems across interfaces and impose Dirichlet sides.

    ``systems[m]`` has attributes ``A`` and ``f``; ``dirichlet[m]`` lists the
    sides of subdomain ``m`` with zero boundary values.  Each pair uses the
    mean of its two diagonal estimates as coupling weight, so every
    off-diagonal coupling term has a matching diagonal term.
    """
    q = len(systems)
    gam = [gamma_estimate(s.A) for s in systems]
    masks = [boundary_mask(dirichlet.get(m, ()), d) for m in range(q)]
    blocks: dict[tuple[int, int], TTMatrix] = {}
    rhs = []
    for m in range(q):
        diag_terms = [systems[m].A]
        g_terms = [systems[m].f]
        off: dict[int, list[TTMatrix]] = {}
        for spec in interfaces:
            if not spec.involves(m):
                continue
            s = spec.oriented(m)
            p = s.p
            if not 0 <= p < q:
                raise ConfigError(f"interface references missing subdomain {p}")
            gmp = 0.5 * (gam[m] + gam[p])
            pmp = pi_offdiag(s, d)
            ppm = pi_offdiag(s.mirrored(), d)
            diag_terms.append(tt_scale(tt_matmul(pmp, ppm), gmp))
            off.setdefault(p, []).append(tt_add(tt_matmul(pmp, systems[p].A), tt_scale(pmp, -gmp)))
            g_terms.append(tt_matvec(pmp, systems[p].f))
        dm = tt_diag(masks[m])
        eye_minus = tt_round(tt_add(tt_eye([4] * d), tt_scale(dm, -1.0)), 0.0)
        bmm = tt_round(tt_sum(diag_terms, tol), tol)
        blocks[(m, m)] = tt_round(tt_add(tt_matmul(dm, bmm), eye_minus), tol)
        for p, terms in sorted(off.items()):
            bmp = tt_round(tt_sum(terms, tol), tol)
            blocks[(m, p)] = tt_round(tt_matmul(dm, bmp), tol)
        g = tt_round(tt_sum(g_terms, tol), tol)
        rhs.append(tt_round(tt_hadamard(masks[m], g), tol))
    return BlockSystem(blocks=blocks, rhs=rhs, gammas=gam)


def global_assemble(block_system: BlockSystem, q: int, tol: float):
    """Global matrix ``sum E_mp (x) B_mp`` and vector ``sum e_m (x) g_m``.

    The subdomain index is the slowest mode, i.e. the last core.
    """
    mats = []
    for (m, p), b in sorted(block_system.blocks.items()):
        if m >= q or p >= q:
            raise ShapeError(f"block ({m}, {p}) outside {q} subdomains")
        e = np.zeros((1, q, q, 1))
        e[0, m, p, 0] = 1.0
        mats.append(tt_kron(TTMatrix([e]), b))
    vecs = []
    for m, g in enumerate(block_system.rhs):
        e = np.zeros((1, q, 1))
        e[0, m, 0] = 1.0
        vecs.append(tt_kron(TTVector([e]), g))
    return tt_round(tt_sum(mats, tol), tol), tt_round(tt_sum(vecs, tol), tol)
