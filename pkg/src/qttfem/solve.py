"""Linear solvers for the global system, energy and Richardson extrapolation."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import scipy.sparse.linalg

from .errors import ConvergenceError, GuardError, ShapeError, SingularityError
from .tt import (
    TTMatrix,
    TTVector,
    _svd,
    _trunc_rank,
    erank,
    tt_add,
    tt_fix_last,
    tt_matvec,
    tt_norm,
    tt_quadratic_form,
    tt_random,
    tt_round,
    tt_scale,
)

DENSE_SOLVE_GUARD = 3 * 4**6
_LOCAL_DENSE_LIMIT = 6000


def dense_solve(b, g, guard: int = DENSE_SOLVE_GUARD, check: float = 1e-10) -> np.ndarray:
    """Direct LU solve of a dense system with a size guard."""
    b = np.asarray(b, dtype=float)
    g = np.asarray(g, dtype=float)
    if b.ndim != 2 or b.shape[0] != b.shape[1] or g.shape != (b.shape[0],):
        raise ShapeError(f"cannot solve a {b.shape} system with right-hand side {g.shape}")
    if b.shape[0] > guard:
        raise GuardError(f"{b.shape[0]} unknowns exceed the dense guard {guard}")
    try:
        with np.errstate(all="ignore"), warnings.catch_warnings():
            warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
            lu = scipy.linalg.lu_factor(b, check_finite=True)
            if np.any(np.abs(np.diag(lu[0])) <= np.finfo(float).eps * np.abs(b).max() * b.shape[0]):
                raise SingularityError("matrix is numerically singular")
            u = scipy.linalg.lu_solve(lu, g)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise SingularityError(str(exc)) from exc
    gn = np.linalg.norm(g)
    res = np.linalg.norm(b @ u - g) / (gn if gn > 0 else 1.0)
    if not np.isfinite(res) or res > check:
        raise SingularityError(f"dense solve residual {res:.3e} exceeds {check:g}")
    return u


def residual_norm(b: TTMatrix, u: TTVector, g: TTVector) -> float:
    """Relative residual ``||b u - g|| / ||g||`` computed without cancellation.

    Left-to-right QR of the cores of ``b u - g``; the product cores are never
    formed, only their contraction with the running triangular factor.
    """
    if b.col_modes != u.mode_sizes or b.row_modes != g.mode_sizes:
        raise ShapeError("residual operands do not match")
    rbx = np.ones((1, 1, 1))
    rg = -np.ones((1, 1))
    d = b.d
    for k, (bk, xk, gk) in enumerate(zip(b.cores, u.cores, g.cores)):
        t = np.einsum("pbc,cjC->pbjC", rbx, xk, optimize=True)
        t = np.einsum("pbjC,bijB->piBC", t, bk, optimize=True)
        tg = np.einsum("ps,siS->piS", rg, gk, optimize=True)
        p, n, nb, nc = t.shape
        if k == d - 1:
            r = np.linalg.norm(t.reshape(p * n) + tg.reshape(p * n))
            break
        mat = np.concatenate([t.reshape(p * n, nb * nc), tg.reshape(p * n, -1)], axis=1)
        rm = np.linalg.qr(mat, mode="r")
        rbx = rm[:, : nb * nc].reshape(-1, nb, nc)
        rg = rm[:, nb * nc :]
    gn = tt_norm(g)
    return float(r) / (gn if gn > 0 else 1.0)


@dataclass
class SolveReport:
    u: TTVector
    residual: float
    sweeps: int
    eranks: dict = field(default_factory=dict)
    energy: float | None = None
    history: list = field(default_factory=list)


# --------------------------------------------------------------------------
# local contractions


def _left_a(env, x, a, y):
    """Extend ``(test, op, trial)`` environment by one core from the left."""
    t = np.einsum("abc,aiA->bciA", env, x, optimize=True)
    t = np.einsum("bciA,bijB->cAjB", t, a, optimize=True)
    return np.einsum("cAjB,cjC->ABC", t, y, optimize=True)


def _right_a(x, a, y, env):
    t = np.einsum("aiA,ABC->aiBC", x, env, optimize=True)
    t = np.einsum("aiBC,bijB->abjC", t, a, optimize=True)
    return np.einsum("abjC,cjC->abc", t, y, optimize=True)


def _left_b(env, x, g):
    return np.einsum("as,aiA,siS->AS", env, x, g, optimize=True)


def _right_b(env, x, g):
    return np.einsum("aiA,siS,AS->as", x, g, env, optimize=True)


def _apply_local(left, a, right, u):
    t = np.einsum("abc,cjC->abjC", left, u, optimize=True)
    t = np.einsum("abjC,bijB->aiBC", t, a, optimize=True)
    return np.einsum("aiBC,ABC->aiA", t, right, optimize=True)


def _local_rhs(left, g, right):
    return np.einsum("as,siS,AS->aiA", left, g, right, optimize=True)


def _local_matrix(left, a, right):
    t = np.einsum("abc,bijB->aicjB", left, a, optimize=True)
    m = np.einsum("aicjB,ABC->aiAcjC", t, right, optimize=True)
    r0, n, r1 = left.shape[0], a.shape[1], right.shape[0]
    return m.reshape(r0 * n * r1, r0 * n * r1)


def _solve_local(left, a, right, rhs, x0):
    shape = rhs.shape
    size = rhs.size
    if size <= _LOCAL_DENSE_LIMIT:
        m = _local_matrix(left, a, right)
        try:
            sol = np.linalg.solve(m, rhs.ravel())
        except np.linalg.LinAlgError:
            sol = np.linalg.lstsq(m, rhs.ravel(), rcond=None)[0]
        return sol.reshape(shape), m

    def mv(v):
        return _apply_local(left, a, right, v.reshape(shape)).ravel()

    op = scipy.sparse.linalg.LinearOperator((size, size), matvec=mv, dtype=float)
    sol, _ = scipy.sparse.linalg.gmres(
        op, rhs.ravel(), x0=x0.ravel(), rtol=1e-12, atol=0.0, restart=60, maxiter=40
    )
    return sol.reshape(shape), None


def _local_residual(m, left, a, right, v, rhs):
    if m is not None:
        return np.linalg.norm(m @ v.ravel() - rhs.ravel())
    return np.linalg.norm(_apply_local(left, a, right, v) - rhs)


# --------------------------------------------------------------------------
# alternating solver


def tt_solve(
    b: TTMatrix,
    g: TTVector,
    tol: float,
    max_sweeps: int = 30,
    seed: int = 0,
    kickrank: int = 4,
    x0: TTVector | None = None,
    max_rank: int = 512,
) -> SolveReport:
    """Solve ``b u = g`` by alternating one-core updates with residual enrichment.

    Each core update solves the Galerkin-projected local system; the new core
    is truncated to the smallest rank that keeps both the solution change and
    the local residual below ``tol / sqrt(d)``, then enriched with up to
    ``kickrank`` directions of a low-rank residual approximation ``z``.
    Stops once the exact relative residual is at most ``tol``.
    """
    if not isinstance(b, TTMatrix) or not isinstance(g, TTVector):
        raise ShapeError("tt_solve expects a TTMatrix and a TTVector")
    if b.row_modes != b.col_modes or b.col_modes != g.mode_sizes:
        raise ShapeError(f"system {b!r} does not match right-hand side {g!r}")
    d = b.d
    n = g.mode_sizes
    gnorm = tt_norm(g)
    if gnorm == 0.0:
        u = tt_scale(g, 0.0)
        return SolveReport(u=u, residual=0.0, sweeps=0, eranks=_eranks(b, g, u))
    rng = np.random.default_rng(seed)
    x = tt_round(g, tol) if x0 is None else x0
    xc = [c.copy() for c in x.cores]
    gc = list(g.cores)
    bc = list(b.cores)
    zc = [c.copy() for c in tt_random(n, [1] + [kickrank] * (d - 1) + [1], rng).cores]

    sq = math.sqrt(max(d - 1, 1))
    trunc = tol / sq
    res_frac = 0.5 / math.sqrt(d)

    one3 = np.ones((1, 1, 1))
    one2 = np.ones((1, 1))
    la = [one3] + [None] * d
    lb = [one2] + [None] * d
    lza = [one3] + [None] * d
    lzb = [one2] + [None] * d
    ra = [None] * d + [one3]
    rb = [None] * d + [one2]
    rza = [None] * d + [one3]
    rzb = [None] * d + [one2]

    best = None
    history = []
    sweeps = 0
    for sweep in range(1, max_sweeps + 1):
        sweeps = sweep
        # right-to-left orthogonalization and environments
        for k in range(d - 1, 0, -1):
            r0, nk, r1 = xc[k].shape
            qm, rm = np.linalg.qr(xc[k].reshape(r0, nk * r1).T)
            xc[k] = qm.T.reshape(-1, nk, r1)
            xc[k - 1] = np.tensordot(xc[k - 1], rm.T, axes=(2, 0))
            t0, _, t1 = zc[k].shape
            qz, _ = np.linalg.qr(zc[k].reshape(t0, nk * t1).T)
            zc[k] = qz.T.reshape(-1, nk, t1)
            zc[k - 1] = zc[k - 1][:, :, : zc[k].shape[0]]
            if zc[k - 1].shape[2] < zc[k].shape[0]:
                pad = zc[k].shape[0] - zc[k - 1].shape[2]
                zc[k - 1] = np.concatenate(
                    [zc[k - 1], rng.standard_normal(zc[k - 1].shape[:2] + (pad,))], axis=2
                )
            ra[k] = _right_a(xc[k], bc[k], xc[k], ra[k + 1])
            rb[k] = _right_b(rb[k + 1], xc[k], gc[k])
            rza[k] = _right_a(zc[k], bc[k], xc[k], rza[k + 1])
            rzb[k] = _right_b(rzb[k + 1], zc[k], gc[k])

        max_dx = 0.0
        for k in range(d):
            rhs = _local_rhs(lb[k], gc[k], rb[k + 1])
            u, m = _solve_local(la[k], bc[k], ra[k + 1], rhs, xc[k])
            unorm = np.linalg.norm(u)
            if unorm > 0:
                max_dx = max(max_dx, np.linalg.norm(u - xc[k]) / unorm)
            if k == d - 1:
                xc[k] = u
                break
            r0, nk, r1 = u.shape
            uu, s, vt = _svd(u.reshape(r0 * nk, r1))
            r = _trunc_rank(s, trunc * np.linalg.norm(s))
            target = res_frac * tol * gnorm
            base = _local_residual(m, la[k], bc[k], ra[k + 1], u, rhs)
            target = max(target, 2.0 * base)
            while r < s.size:
                ur = (uu[:, :r] * s[:r]) @ vt[:r]
                if _local_residual(m, la[k], bc[k], ra[k + 1], ur.reshape(u.shape), rhs) <= target:
                    break
                r += 1
            r = min(r, max_rank)
            left = uu[:, :r]
            carry = s[:r, None] * vt[:r]
            ut = (left @ carry).reshape(u.shape)

            # residual approximation z and the enrichment of x
            zres = _local_rhs(lzb[k], gc[k], rzb[k + 1]) - _apply_local(lza[k], bc[k], rza[k + 1], ut)
            t0 = zres.shape[0]
            zu, _, _ = _svd(zres.reshape(t0 * nk, -1))
            zc[k] = zu[:, : min(kickrank, zu.shape[1])].reshape(t0, nk, -1)
            enr = _local_rhs(lb[k], gc[k], rzb[k + 1]) - _apply_local(la[k], bc[k], rza[k + 1], ut)
            cat = np.concatenate([left, enr.reshape(r0 * nk, -1)], axis=1)
            qm, rm = np.linalg.qr(cat)
            xc[k] = qm.reshape(r0, nk, -1)
            nxt = rm[:, :r] @ carry
            xc[k + 1] = np.tensordot(nxt, xc[k + 1], axes=(1, 0))
            # next z core must accept the new z rank
            zc[k + 1] = _fit_left_rank(zc[k + 1], zc[k].shape[2], rng)

            la[k + 1] = _left_a(la[k], xc[k], bc[k], xc[k])
            lb[k + 1] = _left_b(lb[k], xc[k], gc[k])
            lza[k + 1] = _left_a(lza[k], zc[k], bc[k], xc[k])
            lzb[k + 1] = _left_b(lzb[k], zc[k], gc[k])

        x = TTVector(xc)
        res = residual_norm(b, x, g) if max_dx <= tol or sweep == max_sweeps or sweep % 4 == 0 else None
        history.append((sweep, max_dx, res))
        if res is not None:
            if best is None or res < best[1]:
                best = (x, res)
            if res <= tol:
                u = tt_round(x, 0.1 * tol / sq)
                ures = residual_norm(b, u, g)
                if ures > tol:
                    u, ures = x, res
                return SolveReport(u=u, residual=ures, sweeps=sweep, eranks=_eranks(b, g, u), history=history)
            if max_dx <= tol:
                # stagnating above tol: tighten the local truncation
                trunc *= 0.25
                res_frac *= 0.25
    raise ConvergenceError(
        f"residual {best[1]:.3e} > {tol:g} after {sweeps} sweeps",
        best=SolveReport(u=best[0], residual=best[1], sweeps=sweeps, eranks=_eranks(b, g, best[0]), history=history),
    )


def _fit_left_rank(core, rank, rng):
    r0 = core.shape[0]
    if r0 == rank:
        return core
    if r0 > rank:
        return core[:rank]
    pad = rng.standard_normal((rank - r0,) + core.shape[1:])
    return np.concatenate([core, pad], axis=0)


def _eranks(b, g, u):
    return {"B": erank(b), "g": erank(g), "u": erank(u)}


# --------------------------------------------------------------------------
# post-processing


def energy(u_blocks, a_list) -> float:
    """Discrete Dirichlet energy ``sum_m u_m^T A_m u_m``."""
    if len(u_blocks) != len(a_list):
        raise ShapeError(f"{len(u_blocks)} solution blocks for {len(a_list)} matrices")
    total = 0.0
    for u, a in zip(u_blocks, a_list):
        if isinstance(u, TTVector):
            total += tt_quadratic_form(a, u)
        else:
            u = np.asarray(u, dtype=float)
            total += float(u @ (a @ u))
    return total


def split_blocks(u: TTVector, q: int) -> list[TTVector]:
    """Per-subdomain solution vectors (the subdomain index is the last core)."""
    if u.mode_sizes[-1] != q:
        raise ShapeError(f"last mode {u.mode_sizes[-1]} is not the subdomain count {q}")
    return [tt_fix_last(u, m) for m in range(q)]


@dataclass(frozen=True)
class Extrapolation:
    e_star: float
    order: float | None


def richardson(energies) -> Extrapolation:
    """Order-2 Richardson limit from the two finest levels, plus the observed order."""
    e = [float(v) for v in energies]
    if len(e) < 2:
        raise ValueError("Richardson extrapolation needs at least two levels")
    e_star = (4.0 * e[-1] - e[-2]) / 3.0
    order = None
    if len(e) >= 3:
        num = e[-3] - e[-2]
        den = e[-2] - e[-1]
        with np.errstate(all="ignore"):
            ratio = num / den if den != 0.0 else math.nan
        order = math.log2(ratio) if ratio > 0 else math.nan
    return Extrapolation(e_star=e_star, order=order)
