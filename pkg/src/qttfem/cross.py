"""Two-site (DMRG-style) TT cross approximation with maxvol pivoting.

Only used for elementwise maps of large TT vectors, where the full vector
must never be formed.
"""

from __future__ import annotations

import math
from typing import Callable, Sequence

import numpy as np
import scipy.linalg

from .tt import TTVector, _trunc_rank, _svd, tt_eval


def maxvol(a: np.ndarray, tol: float = 1.05, max_iters: int = 100) -> np.ndarray:
    """Row indices of a quasi-maximal-volume ``r x r`` submatrix of tall ``a``."""
    n, r = a.shape
    if n <= r:
        return np.arange(n)
    _, _, piv = scipy.linalg.qr(a.T, pivoting=True, mode="economic")
    idx = np.array(piv[:r])
    for _ in range(max_iters):
        try:
            b = np.linalg.solve(a[idx].T, a.T).T
        except np.linalg.LinAlgError:
            break
        i, j = np.unravel_index(np.argmax(np.abs(b)), b.shape)
        if abs(b[i, j]) <= tol:
            break
        idx[j] = i
    return idx


def _supercore_indices(left, n0, n1, right):
    """All digit tuples (left, i, j, right) in C order, as an (N, d) array."""
    rl, rr = left.shape[0], right.shape[0]
    a, i, j, b = np.meshgrid(np.arange(rl), np.arange(n0), np.arange(n1), np.arange(rr), indexing="ij")
    a, i, j, b = (x.ravel() for x in (a, i, j, b))
    return np.concatenate([left[a], i[:, None], j[:, None], right[b]], axis=1)


def tt_cross(
    func: Callable[[np.ndarray], np.ndarray],
    mode_sizes: Sequence[int],
    tol: float,
    max_sweeps: int = 20,
    init_rank: int = 2,
    max_rank: int = 256,
    n_check: int = 2000,
    seed: int = 0,
) -> TTVector:
    """Approximate the tensor ``func(digits)`` in TT format.

    ``func`` receives an ``(N, d)`` integer array of digits and returns
    ``N`` values.  Sweeps stop once the relative error on a fixed random
    check set drops below ``tol``.
    """
    n = list(mode_sizes)
    d = len(n)
    rng = np.random.default_rng(seed)
    if d == 1:
        vals = func(np.arange(n[0])[:, None])
        return TTVector([vals.reshape(1, n[0], 1)])

    left = [np.zeros((1, 0), dtype=np.intp)] + [None] * d
    right = [None] * d + [np.zeros((1, 0), dtype=np.intp)]
    for k in range(d - 1, 0, -1):
        cap = min(init_rank, math.prod(n[k:]), math.prod(n[:k]))
        rows = set()
        while len(rows) < cap:
            rows.add(tuple(int(rng.integers(0, m)) for m in n[k:]))
        right[k] = np.array(sorted(rows), dtype=np.intp)

    check = np.stack([rng.integers(0, m, size=n_check) for m in n], axis=1)
    fcheck = func(check)
    fnorm = np.linalg.norm(fcheck) or 1.0

    cores: list[np.ndarray | None] = [None] * d
    approx = None
    for _ in range(max_sweeps):
        # left-to-right: grow nested left index sets
        for k in range(d - 1):
            sc = func(_supercore_indices(left[k], n[k], n[k + 1], right[k + 2]))
            sc = sc.reshape(left[k].shape[0] * n[k], n[k + 1] * right[k + 2].shape[0])
            u, s, vt = _svd(sc)
            r = min(_trunc_rank(s, tol * np.linalg.norm(s) / math.sqrt(d - 1)), max_rank)
            u = u[:, :r]
            idx = maxvol(u)
            alpha, i = np.divmod(idx, n[k])
            left[k + 1] = np.concatenate([left[k][alpha], i[:, None]], axis=1)
        # right-to-left: rebuild nested right sets and the cores
        for k in range(d - 2, -1, -1):
            sc = func(_supercore_indices(left[k], n[k], n[k + 1], right[k + 2]))
            rl, rr = left[k].shape[0], right[k + 2].shape[0]
            sc = sc.reshape(rl * n[k], n[k + 1] * rr)
            u, s, vt = _svd(sc)
            r = min(_trunc_rank(s, tol * np.linalg.norm(s) / math.sqrt(d - 1)), max_rank)
            w = vt[:r].T
            idx = maxvol(w)
            j, beta = np.divmod(idx, rr)
            right[k + 1] = np.concatenate([j[:, None], right[k + 2][beta]], axis=1)
            interp = np.linalg.solve(w[idx].T, w.T)
            cores[k + 1] = interp.reshape(r, n[k + 1], rr)
            if k == 0:
                cores[0] = (u[:, :r] * s[:r] @ w[idx].T).reshape(1, n[0], r)
        approx = TTVector(cores)
        err = np.linalg.norm(tt_eval(approx, check) - fcheck) / fnorm
        if err <= tol:
            break
    return approx
