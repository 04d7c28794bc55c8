import numpy as np
import pytest

from oracles import psi_dense
from qttfem.assembly import build_subdomain_system
from qttfem.coupling import (
    InterfaceSpec,
    SIDES,
    apply_dirichlet,
    boundary_mask,
    build_blocks,
    gamma_estimate,
    global_assemble,
    pi_diag,
    pi_offdiag,
    psi_side,
    psi_vertex,
    swap_rows,
)
from qttfem.errors import ConfigError
from qttfem.geometry import Quadrangle
from qttfem.tt import tt_diag_part, tt_to_dense
from qttfem.zorder import z_coords, z_index


@pytest.mark.parametrize("d", [1, 2, 3, 4])
@pytest.mark.parametrize("side", SIDES)
def test_psi_side(side, d):
    psi = psi_side(side, d)
    assert psi.max_rank == 1
    assert np.array_equal(tt_to_dense(psi), psi_dense(side, d))
    assert np.array_equal(tt_to_dense(swap_rows(psi)), psi_dense(side, d)[::-1])


def test_psi_vertex():
    assert np.flatnonzero(tt_to_dense(psi_vertex("RB", 2)))[0] == 5
    for corner, (i, j) in {"LB": (0, 0), "RB": (3, 0), "LT": (0, 3), "RT": (3, 3)}.items():
        assert np.flatnonzero(tt_to_dense(psi_vertex(corner, 2)))[0] == z_index(i, j, 2)
    with pytest.raises(ConfigError):
        psi_vertex("XX", 2)


def test_pi_offdiag_pairs_nodes():
    d = 2
    spec = InterfaceSpec(0, 1, "side", side_m="right", side_p="left", reversed=True)
    pi = tt_to_dense(pi_offdiag(spec, d))
    i, j = z_coords(d)
    for r, c in zip(*np.nonzero(pi)):
        assert i[r] == 3 and i[c] == 0 and j[r] == j[c]
    assert pi.sum() == 4


def test_pi_diag_counts_links():
    d = 2
    side = InterfaceSpec(0, 1, "side", side_m="right", side_p="left")
    vert = InterfaceSpec(0, 2, "vertex", corner_m="RT", corner_p="LB")
    diag = tt_to_dense(pi_diag(0, [side, vert], d))
    assert np.allclose(diag, np.diag(np.diag(diag)))
    rt = z_index(3, 3, 2)
    assert diag[rt, rt] == -2.0
    assert diag[z_index(3, 1, 2), z_index(3, 1, 2)] == -1.0
    assert diag[0, 0] == 0.0


def test_interface_validation():
    with pytest.raises(ConfigError):
        InterfaceSpec(1, 1, "side", side_m="left", side_p="right")
    with pytest.raises(ConfigError):
        InterfaceSpec(0, 1, "edge")
    s = InterfaceSpec(0, 1, "vertex", corner_m="LB", corner_p="RT")
    assert s.oriented(1) == s.mirrored()
    with pytest.raises(ValueError):
        s.oriented(5)


@pytest.mark.parametrize("d", [1, 2, 3])
def test_boundary_mask(d):
    n = 1 << d
    i, j = z_coords(d)
    m = tt_to_dense(boundary_mask(["left", "top"], d))
    assert np.array_equal(m, ((i > 0) & (j < n - 1)).astype(float))
    full = boundary_mask(SIDES, d)
    inner = (i > 0) & (i < n - 1) & (j > 0) & (j < n - 1)
    assert np.array_equal(tt_to_dense(full), inner.astype(float))
    if d >= 2:
        # rank 3 in each direction, so up to 9 for the z-kron
        assert full.max_rank == 9
    assert np.array_equal(tt_to_dense(boundary_mask([], d)), np.ones(n * n))


def test_apply_dirichlet():
    q = Quadrangle(np.array([[0, 0], [1, 0], [1, 1], [0, 1]], dtype=float))
    s = build_subdomain_system(q, 2, 1e-12)
    mask = boundary_mask(SIDES, 2)
    a, f = apply_dirichlet(s.A, s.f, mask)
    mk = tt_to_dense(mask).astype(bool)
    ad = tt_to_dense(a)
    assert np.allclose(ad[~mk], np.eye(16)[~mk], atol=1e-14)
    assert np.allclose(ad[mk], tt_to_dense(s.A)[mk])
    assert np.allclose(tt_to_dense(f)[~mk], 0, atol=1e-15)


def test_gamma_is_mean_diagonal():
    q = Quadrangle(np.array([[0, 0], [2, 0], [3, 2], [0, 1]], dtype=float))
    s = build_subdomain_system(q, 2, 1e-12)
    assert gamma_estimate(s.A) == pytest.approx(np.mean(np.diag(tt_to_dense(s.A))))


def _dense_blocks(systems, interfaces, dirichlet, d):
    """Coupled blocks built with dense linear algebra."""
    q = len(systems)
    a = [tt_to_dense(s.A) for s in systems]
    f = [tt_to_dense(s.f) for s in systems]
    gam = [np.mean(np.diag(x)) for x in a]
    masks = [tt_to_dense(boundary_mask(dirichlet.get(m, ()), d)) for m in range(q)]
    n = 4**d
    big = np.zeros((q * n, q * n))
    rhs = np.zeros(q * n)
    for m in range(q):
        bmm = a[m].copy()
        g = f[m].copy()
        off = {}
        for spec in interfaces:
            if not spec.involves(m):
                continue
            s = spec.oriented(m)
            gm = 0.5 * (gam[m] + gam[s.p])
            pmp = tt_to_dense(pi_offdiag(s, d))
            ppm = tt_to_dense(pi_offdiag(s.mirrored(), d))
            bmm += gm * pmp @ ppm
            off[s.p] = off.get(s.p, 0) + pmp @ a[s.p] - gm * pmp
            g += pmp @ f[s.p]
        dm = np.diag(masks[m])
        big[m * n : (m + 1) * n, m * n : (m + 1) * n] = dm @ bmm + np.eye(n) - dm
        for p, blk in off.items():
            big[m * n : (m + 1) * n, p * n : (p + 1) * n] = dm @ blk
        rhs[m * n : (m + 1) * n] = masks[m] * g
    return big, rhs


def test_global_matches_dense_coupling():
    from qttfem.domain import load_config

    cfg = load_config("triangle")
    d = 2
    systems = [build_subdomain_system(q, d, 1e-12) for q in cfg.quads]
    blocks = build_blocks(systems, cfg.interfaces, cfg.dirichlet, d, 1e-12)
    b, g = global_assemble(blocks, cfg.q, 1e-12)
    rb, rg = _dense_blocks(systems, cfg.interfaces, cfg.dirichlet, d)
    assert np.allclose(tt_to_dense(b), rb, atol=1e-11)
    assert np.allclose(tt_to_dense(g), rg, atol=1e-12)
    # diagonal blocks are untouched identity rows on Dirichlet nodes
    assert np.all(np.isfinite(tt_to_dense(tt_diag_part(blocks.blocks[0, 0]))))
