"""Tensor-train vectors and matrices.

Index convention: the flat index of a TT object is little-endian in its
cores, i.e. core 0 carries the fastest-varying digit,

    i = i_0 + n_0 * (i_1 + n_1 * (i_2 + ...)).

For QTT objects with binary modes this is exactly ``i = sum 2**k i_k``.
All operations are exact unless they say otherwise; rank growth is left to
the caller, who rounds explicitly with :func:`tt_round`.
"""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np

from .errors import GuardError, ShapeError, SingularityError

#: default limit on the number of entries produced by ``tt_to_dense``
DENSE_GUARD = 2**24
#: reciprocal is computed through a dense round trip below this many entries
RECIPROCAL_DENSE_GUARD = 2**16

# singular values below this fraction of the largest one are treated as zero
_NUMERICAL_ZERO = 1e-14


class _TTBase:
    __slots__ = ("_cores",)

    @property
    def cores(self) -> tuple[np.ndarray, ...]:
        return self._cores

    @property
    def d(self) -> int:
        return len(self._cores)

    @property
    def ranks(self) -> list[int]:
        return [self._cores[0].shape[0]] + [c.shape[-1] for c in self._cores]

    @property
    def max_rank(self) -> int:
        return max(self.ranks)

    def storage(self) -> int:
        return sum(c.size for c in self._cores)

    def __add__(self, other):
        return tt_add(self, other)

    def __sub__(self, other):
        return tt_add(self, tt_scale(other, -1.0))

    def __neg__(self):
        return tt_scale(self, -1.0)

    def __mul__(self, alpha):
        if isinstance(alpha, _TTBase):
            return tt_hadamard(self, alpha)
        return tt_scale(self, alpha)

    __rmul__ = __mul__

    def round(self, tol: float = 0.0):
        return tt_round(self, tol)

    def full(self, max_entries: int = DENSE_GUARD) -> np.ndarray:
        return tt_to_dense(self, max_entries=max_entries)


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.flags.writeable = False
    return a


def _check_chain(cores, ndim):
    if len(cores) == 0:
        raise ShapeError("a tensor train needs at least one core")
    for k, c in enumerate(cores):
        if c.ndim != ndim:
            raise ShapeError(f"core {k} has {c.ndim} axes, expected {ndim}")
    if cores[0].shape[0] != 1 or cores[-1].shape[-1] != 1:
        raise ShapeError("boundary ranks must be 1")
    for k in range(len(cores) - 1):
        if cores[k].shape[-1] != cores[k + 1].shape[0]:
            raise ShapeError(
                f"rank mismatch between cores {k} and {k + 1}: "
                f"{cores[k].shape[-1]} != {cores[k + 1].shape[0]}"
            )


class TTVector(_TTBase):
    """Tensor train with cores of shape ``(r_{k-1}, n_k, r_k)``."""

    __slots__ = ()

    def __init__(self, cores: Sequence[np.ndarray]):
        cores = tuple(_frozen(c) for c in cores)
        _check_chain(cores, 3)
        self._cores = cores

    @property
    def mode_sizes(self) -> list[int]:
        return [c.shape[1] for c in self._cores]

    @property
    def size(self) -> int:
        return math.prod(self.mode_sizes)

    def __repr__(self):
        return f"TTVector(modes={self.mode_sizes}, ranks={self.ranks})"


class TTMatrix(_TTBase):
    """Tensor train with cores of shape ``(r_{k-1}, m_k, n_k, r_k)``.

    Rows are indexed by the ``m`` digits and columns by the ``n`` digits,
    each little-endian across the cores.
    """

    __slots__ = ()

    def __init__(self, cores: Sequence[np.ndarray]):
        cores = tuple(_frozen(c) for c in cores)
        _check_chain(cores, 4)
        self._cores = cores

    @property
    def row_modes(self) -> list[int]:
        return [c.shape[1] for c in self._cores]

    @property
    def col_modes(self) -> list[int]:
        return [c.shape[2] for c in self._cores]

    @property
    def shape(self) -> tuple[int, int]:
        return math.prod(self.row_modes), math.prod(self.col_modes)

    @property
    def T(self) -> "TTMatrix":
        return tt_transpose(self)

    def __matmul__(self, other):
        if isinstance(other, TTMatrix):
            return tt_matmul(self, other)
        return tt_matvec(self, other)

    def __repr__(self):
        return (
            f"TTMatrix(rows={self.row_modes}, cols={self.col_modes}, "
            f"ranks={self.ranks})"
        )


# --------------------------------------------------------------------------
# flat (3-axis) views shared by vector and matrix code paths


def _flat_cores(tt) -> list[np.ndarray]:
    if isinstance(tt, TTMatrix):
        return [c.reshape(c.shape[0], c.shape[1] * c.shape[2], c.shape[3]) for c in tt.cores]
    return list(tt.cores)


def _unflatten(template, cores):
    if isinstance(template, TTMatrix):
        out = []
        for c, t in zip(cores, template.cores):
            out.append(c.reshape(c.shape[0], t.shape[1], t.shape[2], c.shape[2]))
        return TTMatrix(out)
    return TTVector(cores)


def _same_kind(a, b):
    if type(a) is not type(b):
        raise ShapeError(f"cannot combine {type(a).__name__} with {type(b).__name__}")
    if isinstance(a, TTMatrix):
        if a.row_modes != b.row_modes or a.col_modes != b.col_modes:
            raise ShapeError(f"mode mismatch: {a!r} vs {b!r}")
    elif a.mode_sizes != b.mode_sizes:
        raise ShapeError(f"mode mismatch: {a.mode_sizes} vs {b.mode_sizes}")


def _trunc_rank(s: np.ndarray, delta: float) -> int:
    """Smallest rank whose discarded tail has Frobenius norm <= delta."""
    if s.size == 0 or s[0] == 0.0:
        return 1
    keep = int(np.count_nonzero(s > _NUMERICAL_ZERO * s[0]))
    # tail[r] = norm of s[r:]
    tail = np.sqrt(np.cumsum((s**2)[::-1]))[::-1]
    tail = np.append(tail, 0.0)
    r = int(np.argmax(tail <= delta))
    return max(1, min(r, keep))


def _svd(a):
    try:
        return np.linalg.svd(a, full_matrices=False)
    except np.linalg.LinAlgError:
        import scipy.linalg

        return scipy.linalg.svd(a, full_matrices=False, lapack_driver="gesvd")


# --------------------------------------------------------------------------
# construction


def tt_from_dense(data, mode_sizes, tol: float = 0.0):
    """Compress a dense vector or matrix with TT-SVD.

    ``mode_sizes`` is a list of ints for vectors, or a list of ``(rows, cols)``
    pairs for matrices.  The result reproduces ``data`` to relative Frobenius
    accuracy ``tol``.
    """
    if tol < 0:
        raise ValueError("tol must be non-negative")
    data = np.asarray(data, dtype=float)
    pairs = [tuple(m) if np.ndim(m) else (int(m),) for m in mode_sizes]
    is_matrix = all(len(p) == 2 for p in pairs)
    if not is_matrix and not all(len(p) == 1 for p in pairs):
        raise ShapeError("mode_sizes must be all ints or all (rows, cols) pairs")
    d = len(pairs)
    if is_matrix:
        rows = [p[0] for p in pairs]
        cols = [p[1] for p in pairs]
        if data.ndim != 2 or data.shape != (math.prod(rows), math.prod(cols)):
            raise ShapeError(
                f"matrix of shape {data.shape} does not match modes {pairs}"
            )
        t = data.reshape(rows + cols, order="F")
        perm = [ax for k in range(d) for ax in (k, d + k)]
        t = t.transpose(perm).reshape([r * c for r, c in pairs])
        dims = [r * c for r, c in pairs]
    else:
        dims = [p[0] for p in pairs]
        if data.size != math.prod(dims):
            raise ShapeError(f"{data.size} entries do not match modes {dims}")
        t = data.reshape(dims, order="F")

    cores = _tt_svd(t, dims, tol)
    if is_matrix:
        return TTMatrix(
            [c.reshape(c.shape[0], r, cc, c.shape[2]) for c, (r, cc) in zip(cores, pairs)]
        )
    return TTVector(cores)


def _tt_svd(t: np.ndarray, dims: list[int], tol: float) -> list[np.ndarray]:
    d = len(dims)
    norm = np.linalg.norm(t)
    if norm == 0.0:
        return [np.zeros((1, n, 1)) for n in dims]
    delta = tol * norm / math.sqrt(d - 1) if d > 1 else 0.0
    cores = []
    r = 1
    c = t
    for k in range(d - 1):
        c = c.reshape(r * dims[k], -1)
        u, s, vt = _svd(c)
        rk = _trunc_rank(s, delta)
        cores.append(u[:, :rk].reshape(r, dims[k], rk))
        c = s[:rk, None] * vt[:rk]
        r = rk
    cores.append(c.reshape(r, dims[-1], 1))
    return cores


def tt_to_dense(tt, max_entries: int = DENSE_GUARD) -> np.ndarray:
    """Materialize a TT object as a dense numpy vector or 2-D matrix."""
    if isinstance(tt, TTMatrix):
        rows, cols = tt.shape
        if rows * cols > max_entries:
            raise GuardError(f"{rows}x{cols} matrix exceeds dense guard {max_entries}")
    else:
        if tt.size > max_entries:
            raise GuardError(f"vector of size {tt.size} exceeds dense guard {max_entries}")
    flat = _flat_cores(tt)
    res = flat[0].reshape(flat[0].shape[1], flat[0].shape[2])
    dims = [flat[0].shape[1]]
    for c in flat[1:]:
        res = res @ c.reshape(c.shape[0], -1)
        dims.append(c.shape[1])
        res = res.reshape(-1, c.shape[2])
    # res is C-ordered over (i_0, ..., i_{d-1}); little-endian means F order
    t = res.reshape(dims)
    if isinstance(tt, TTMatrix):
        d = tt.d
        t = t.reshape([x for c in tt.cores for x in (c.shape[1], c.shape[2])])
        t = t.transpose(list(range(0, 2 * d, 2)) + list(range(1, 2 * d, 2)))
        rows, cols = tt.shape
        return t.reshape((rows, cols), order="F")
    return t.reshape(-1, order="F")


def tt_eval(tt: TTVector, indices) -> np.ndarray:
    """Evaluate a TT vector at an ``(N, d)`` array of per-core digits."""
    idx = np.asarray(indices, dtype=np.intp)
    if idx.ndim != 2 or idx.shape[1] != tt.d:
        raise ShapeError(f"expected an (N, {tt.d}) index array")
    vals = np.ones((idx.shape[0], 1))
    for k, c in enumerate(tt.cores):
        vals = np.einsum("na,anb->nb", vals, c[:, idx[:, k], :])
    return vals[:, 0]


def tt_ones(mode_sizes: Sequence[int]) -> TTVector:
    return TTVector([np.ones((1, n, 1)) for n in mode_sizes])


def tt_zeros(mode_sizes: Sequence[int]) -> TTVector:
    return TTVector([np.zeros((1, n, 1)) for n in mode_sizes])


def tt_unit(mode_sizes: Sequence[int], digits: Sequence[int]) -> TTVector:
    """One-hot vector with its single 1 at the given per-core digits."""
    cores = []
    for n, i in zip(mode_sizes, digits, strict=True):
        c = np.zeros((1, n, 1))
        c[0, i, 0] = 1.0
        cores.append(c)
    return TTVector(cores)


def tt_eye(mode_sizes: Sequence[int]) -> TTMatrix:
    return TTMatrix([np.eye(n).reshape(1, n, n, 1) for n in mode_sizes])


def tt_zeros_matrix(row_modes: Sequence[int], col_modes: Sequence[int]) -> TTMatrix:
    return TTMatrix([np.zeros((1, m, n, 1)) for m, n in zip(row_modes, col_modes)])


def tt_random(mode_sizes, ranks, rng: np.random.Generator):
    """Random TT with Gaussian cores; matrix if ``mode_sizes`` holds pairs."""
    ranks = list(ranks)
    if len(ranks) == len(mode_sizes) - 1:
        ranks = [1] + ranks + [1]
    cores = []
    for k, m in enumerate(mode_sizes):
        shape = (ranks[k],) + (tuple(m) if np.ndim(m) else (m,)) + (ranks[k + 1],)
        cores.append(rng.standard_normal(shape))
    if np.ndim(mode_sizes[0]):
        return TTMatrix(cores)
    return TTVector(cores)


# --------------------------------------------------------------------------
# rounding and norms


def _orthogonalize_rl(cores: list[np.ndarray]) -> list[np.ndarray]:
    """Right-orthogonalize cores 1..d-1 in place; the norm ends up in core 0."""
    for k in range(len(cores) - 1, 0, -1):
        c = cores[k]
        r0, n, r1 = c.shape
        q, r = np.linalg.qr(c.reshape(r0, n * r1).T)
        cores[k] = q.T.reshape(q.shape[1], n, r1)
        cores[k - 1] = np.tensordot(cores[k - 1], r.T, axes=(2, 0))
    return cores


def _orthogonalize_lr(cores: list[np.ndarray]) -> list[np.ndarray]:
    """Left-orthogonalize cores 0..d-2 in place; the norm ends up in the last core."""
    for k in range(len(cores) - 1):
        c = cores[k]
        r0, n, r1 = c.shape
        q, r = np.linalg.qr(c.reshape(r0 * n, r1))
        cores[k] = q.reshape(r0, n, q.shape[1])
        cores[k + 1] = np.tensordot(r, cores[k + 1], axes=(1, 0))
    return cores


def tt_norm(tt) -> float:
    """Frobenius norm, computed through orthogonalization (no cancellation)."""
    cores = _orthogonalize_lr(_flat_cores(tt))
    return float(np.linalg.norm(cores[-1]))


def tt_round(tt, tol: float = 0.0):
    """TT-rounding to relative Frobenius accuracy ``tol``.

    Each bond discards at most ``tol * ||tt|| / sqrt(d-1)``, so the total
    error is bounded by ``tol * ||tt||``.
    """
    if tol < 0:
        raise ValueError("tol must be non-negative")
    d = tt.d
    cores = _orthogonalize_rl(_flat_cores(tt))
    norm = np.linalg.norm(cores[0])
    if norm == 0.0:
        return _unflatten(tt, [np.zeros((1, c.shape[1], 1)) for c in cores])
    delta = tol * norm / math.sqrt(d - 1) if d > 1 else 0.0
    for k in range(d - 1):
        c = cores[k]
        r0, n, r1 = c.shape
        u, s, vt = _svd(c.reshape(r0 * n, r1))
        r = _trunc_rank(s, delta)
        cores[k] = u[:, :r].reshape(r0, n, r)
        cores[k + 1] = np.tensordot(s[:r, None] * vt[:r], cores[k + 1], axes=(1, 0))
    return _unflatten(tt, cores)


# --------------------------------------------------------------------------
# arithmetic


def tt_add(a, b):
    """Exact sum; ranks add."""
    _same_kind(a, b)
    fa, fb = _flat_cores(a), _flat_cores(b)
    d = len(fa)
    if d == 1:
        return _unflatten(a, [fa[0] + fb[0]])
    out = []
    for k, (x, y) in enumerate(zip(fa, fb)):
        n = x.shape[1]
        if k == 0:
            out.append(np.concatenate([x, y], axis=2))
        elif k == d - 1:
            out.append(np.concatenate([x, y], axis=0))
        else:
            c = np.zeros((x.shape[0] + y.shape[0], n, x.shape[2] + y.shape[2]))
            c[: x.shape[0], :, : x.shape[2]] = x
            c[x.shape[0] :, :, x.shape[2] :] = y
            out.append(c)
    return _unflatten(a, out)


def tt_scale(a, alpha: float):
    cores = _flat_cores(a)
    cores[0] = cores[0] * alpha
    return _unflatten(a, cores)


def tt_sum(terms, tol: float | None = None):
    """Add a sequence of TT objects, rounding after every addition if ``tol`` is given."""
    it = iter(terms)
    acc = next(it)
    for t in it:
        acc = tt_add(acc, t)
        if tol is not None:
            acc = tt_round(acc, tol)
    return acc


def tt_hadamard(a, b):
    """Elementwise product; ranks multiply."""
    _same_kind(a, b)
    out = []
    for x, y in zip(_flat_cores(a), _flat_cores(b)):
        c = np.einsum("aib,cid->acibd", x, y)
        out.append(c.reshape(x.shape[0] * y.shape[0], x.shape[1], x.shape[2] * y.shape[2]))
    return _unflatten(a, out)


def tt_dot(a, b) -> float:
    """Euclidean inner product of two TT objects of the same kind."""
    _same_kind(a, b)
    env = np.ones((1, 1))
    for x, y in zip(_flat_cores(a), _flat_cores(b)):
        env = np.einsum("ab,aic,bid->cd", env, x, y, optimize=True)
    return float(env[0, 0])


def tt_matvec(m: TTMatrix, v: TTVector) -> TTVector:
    if not isinstance(m, TTMatrix) or not isinstance(v, TTVector):
        raise ShapeError("tt_matvec expects (TTMatrix, TTVector)")
    if m.col_modes != v.mode_sizes:
        raise ShapeError(f"column modes {m.col_modes} do not match vector modes {v.mode_sizes}")
    out = []
    for x, y in zip(m.cores, v.cores):
        c = np.einsum("aijb,cjd->acibd", x, y, optimize=True)
        out.append(c.reshape(x.shape[0] * y.shape[0], x.shape[1], x.shape[3] * y.shape[2]))
    return TTVector(out)


def tt_matmul(a: TTMatrix, b: TTMatrix) -> TTMatrix:
    if not isinstance(a, TTMatrix) or not isinstance(b, TTMatrix):
        raise ShapeError("tt_matmul expects two TTMatrix operands")
    if a.col_modes != b.row_modes:
        raise ShapeError(f"column modes {a.col_modes} do not match row modes {b.row_modes}")
    out = []
    for x, y in zip(a.cores, b.cores):
        c = np.einsum("aijb,cjkd->acikbd", x, y, optimize=True)
        out.append(
            c.reshape(x.shape[0] * y.shape[0], x.shape[1], y.shape[2], x.shape[3] * y.shape[3])
        )
    return TTMatrix(out)


def tt_sandwich(left: TTMatrix, v: TTVector, right: TTMatrix) -> TTMatrix:
    """``left.T @ diag(v) @ right`` contracted core by core (ranks multiply)."""
    if left.row_modes != v.mode_sizes or right.row_modes != v.mode_sizes:
        raise ShapeError("row modes of both matrices must match the vector modes")
    out = []
    for x, y, z in zip(left.cores, v.cores, right.cores):
        c = np.einsum("aipA,biB,ciqC->abcpqABC", x, y, z, optimize=True)
        out.append(
            c.reshape(
                x.shape[0] * y.shape[0] * z.shape[0],
                x.shape[2],
                z.shape[2],
                x.shape[3] * y.shape[2] * z.shape[3],
            )
        )
    return TTMatrix(out)


def tt_quadratic_form(m: TTMatrix, v: TTVector, w: TTVector | None = None) -> float:
    """``v^T m w`` (``w`` defaults to ``v``) without forming ``m @ w``."""
    w = v if w is None else w
    if m.row_modes != v.mode_sizes or m.col_modes != w.mode_sizes:
        raise ShapeError("matrix modes do not match the vectors")
    env = np.ones((1, 1, 1))
    for x, a, y in zip(v.cores, m.cores, w.cores):
        t = np.einsum("abc,aiA->bciA", env, x)
        t = np.tensordot(t, a, axes=([0, 2], [0, 1]))  # c A j B
        env = np.tensordot(t, y, axes=([0, 2], [0, 1]))
    return float(env[0, 0, 0])


def tt_transpose(m: TTMatrix) -> TTMatrix:
    return TTMatrix([c.transpose(0, 2, 1, 3) for c in m.cores])


def tt_diag(v: TTVector) -> TTMatrix:
    """Square matrix with ``v`` on its diagonal."""
    out = []
    for c in v.cores:
        n = c.shape[1]
        out.append(np.einsum("aib,ij->aijb", c, np.eye(n)))
    return TTMatrix(out)


def tt_diag_part(m: TTMatrix) -> TTVector:
    """Diagonal of a square TT matrix as a TT vector."""
    if m.row_modes != m.col_modes:
        raise ShapeError("diagonal is only defined for square mode structure")
    return TTVector([np.einsum("aiib->aib", c) for c in m.cores])


def tt_kron(a, b):
    """Kronecker product ``a (x) b`` with ``a`` varying slowest.

    Under the little-endian convention the slow factor owns the trailing
    cores, so the core list of the result is ``b.cores + a.cores``.
    """
    if type(a) is not type(b):
        raise ShapeError("tt_kron needs two vectors or two matrices")
    return type(a)(list(b.cores) + list(a.cores))


def tt_fix_last(v: TTVector, index: int) -> TTVector:
    """Slice the slowest (last) mode of ``v`` at ``index``."""
    if v.d < 2:
        raise ShapeError("need at least two cores to slice the last one")
    cores = list(v.cores)
    last = cores.pop()[:, index, 0]
    cores[-1] = np.tensordot(cores[-1], last, axes=(2, 0))[:, :, None]
    return TTVector(cores)


# --------------------------------------------------------------------------
# block-core (bowtie) algebra


def bowtie(k: np.ndarray, l: np.ndarray) -> np.ndarray:
    """Block-matrix product whose block products are Kronecker products.

    Block cores are arrays of shape ``(r_left, rows, cols, r_right)``: an
    ``r_left x r_right`` block matrix with ``rows x cols`` blocks.  The
    result has blocks ``sum_b kron(k[a, :, :, b], l[b, :, :, c])``.
    """
    k = np.asarray(k, dtype=float)
    l = np.asarray(l, dtype=float)
    if k.ndim != 4 or l.ndim != 4:
        raise ShapeError("block cores must have 4 axes")
    if k.shape[3] != l.shape[0]:
        raise ShapeError(
            f"{k.shape[3]} block columns cannot multiply {l.shape[0]} block rows"
        )
    c = np.einsum("aijb,bklc->aikjlc", k, l)
    return c.reshape(k.shape[0], k.shape[1] * l.shape[1], k.shape[2] * l.shape[2], l.shape[3])


def bowtie_chain(blocks: Sequence[np.ndarray]) -> np.ndarray:
    """Dense matrix ``blocks[0] ⋈ blocks[1] ⋈ ...`` (first block most significant)."""
    acc = np.asarray(blocks[0], dtype=float)
    for b in blocks[1:]:
        acc = bowtie(acc, b)
    if acc.shape[0] != 1 or acc.shape[3] != 1:
        raise ShapeError("a bowtie chain must start with one block row and end with one block column")
    return acc[0, :, :, 0]


def tt_from_bowtie_chain(blocks: Sequence[np.ndarray]) -> TTMatrix:
    """TT matrix equal to ``bowtie_chain(blocks)`` under the little-endian convention."""
    return TTMatrix([np.asarray(b, dtype=float).transpose(3, 1, 2, 0) for b in reversed(blocks)])


# --------------------------------------------------------------------------
# diagnostics


def erank(tt) -> float:
    """Effective rank: the uniform rank of a binary QTT with the same storage.

    Solves ``S = 4 r + 2 r**2 (d - 2)`` for ``r``, where ``S`` is the number
    of stored core entries and ``d`` the number of cores.  The quadratic is
    used as is for every object, so matrices (4 entries per mode) and
    non-binary modes report a proportionally larger value.  For ``d <= 2``
    the linear part ``S = 4 r`` is used.
    """
    s = float(sum(c.size for c in tt.cores))
    d = tt.d
    if d <= 2:
        return s / 4.0
    quad = 2.0 * (d - 2)
    return (-4.0 + math.sqrt(16.0 + 4.0 * quad * s)) / (2.0 * quad)


# --------------------------------------------------------------------------
# elementwise reciprocal


def elementwise_reciprocal(
    v: TTVector,
    tol: float,
    floor: float = 1e-12,
    dense_guard: int = RECIPROCAL_DENSE_GUARD,
    max_sweeps: int = 20,
) -> TTVector:
    """TT approximation of ``1 / v`` to relative accuracy ``tol``.

    Small vectors go through a dense round trip; larger ones are sampled with
    a maxvol-based cross approximation, never forming the full vector.
    """
    if v.size <= dense_guard:
        x = tt_to_dense(v, max_entries=dense_guard)
        bad = np.abs(x) < floor
        if bad.any():
            raise SingularityError(
                f"{int(bad.sum())} entries below floor {floor:g} (min |v| = {np.abs(x).min():.3e})"
            )
        return tt_from_dense(1.0 / x, v.mode_sizes, tol)

    from .cross import tt_cross

    def func(idx):
        vals = tt_eval(v, idx)
        small = np.abs(vals) < floor
        if small.any():
            raise SingularityError(
                f"entry below floor {floor:g} at digits {idx[np.argmax(small)].tolist()}"
            )
        return 1.0 / vals

    return tt_cross(func, v.mode_sizes, tol, max_sweeps=max_sweeps, init_rank=max(2, v.max_rank))
