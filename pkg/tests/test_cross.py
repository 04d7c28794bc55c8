import numpy as np

from qttfem.cross import maxvol, tt_cross
from qttfem.tt import tt_eval, tt_to_dense


def test_maxvol_dominance():
    rng = np.random.default_rng(0)
    a = rng.standard_normal((50, 5))
    idx = maxvol(a)
    assert len(set(idx.tolist())) == 5
    coeff = np.linalg.solve(a[idx].T, a.T).T
    assert np.abs(coeff).max() <= 1.05 + 1e-12


def test_cross_recovers_low_rank():
    d = 10
    w = 2.0 ** np.arange(d)

    def func(idx):
        x = idx @ w / 2**d
        return np.exp(-x) + x**2

    v = tt_cross(func, [2] * d, 1e-10)
    idx = np.array(np.unravel_index(np.arange(2**d), [2] * d, order="F")).T
    ref = func(idx)
    assert np.linalg.norm(tt_to_dense(v) - ref) <= 1e-8 * np.linalg.norm(ref)


def test_cross_deterministic():
    def func(idx):
        return 1.0 / (1.0 + idx.sum(axis=1))

    a = tt_cross(func, [3] * 6, 1e-8, seed=4)
    b = tt_cross(func, [3] * 6, 1e-8, seed=4)
    pts = np.array([[0, 1, 2, 0, 1, 2], [2, 2, 2, 2, 2, 2]])
    assert np.array_equal(tt_eval(a, pts), tt_eval(b, pts))
