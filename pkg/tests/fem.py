"""Linear finite-element discretisation of the coupled resonators (test oracle).

Cavity and detector nodes coincide over the overlap (aligned layout), where
the FBAR adds ``C_m`` times the mass matrix of ``Phi_c - Phi_d``.
"""

import numpy as np
from scipy.linalg import eigh


def _line(free_len, overlap_s, h_free):
    n_free = max(2, int(np.ceil(free_len / h_free)) + 1)
    free = np.linspace(0.0, free_len, n_free)
    # overlap nodes measured from the open tip; positions free_len + (L_m - s)
    ov = free_len + (overlap_s[-1] - overlap_s[::-1])
    return np.concatenate([free, ov[1:]])


def solve(spec, n_modes=2, h_free=2e-5, n_overlap=200):
    s = np.linspace(0.0, spec.L_m, n_overlap + 1)
    xc = _line(spec.L_c - spec.L_m, s, h_free)
    xd = _line(spec.L_d - spec.L_m, s, h_free)
    nc, nd = xc.size, xd.size
    n = nc + nd
    K = np.zeros((n, n))
    M = np.zeros((n, n))
    Mov = np.zeros((n, n))
    for off, x in ((0, xc), (nc, xd)):
        for i in range(x.size - 1):
            h = x[i + 1] - x[i]
            idx = [off + i, off + i + 1]
            K[np.ix_(idx, idx)] += np.array([[1, -1], [-1, 1]]) / (spec.ind_per_len * h)
            M[np.ix_(idx, idx)] += spec.cap_per_len * h / 6 * np.array([[2, 1], [1, 2]])
    # overlap element j joins the last n_overlap+1 nodes of each conductor
    c_idx = np.arange(nc - n_overlap - 1, nc)
    d_idx = nc + np.arange(nd - n_overlap - 1, nd)
    for j in range(n_overlap):
        h = xc[c_idx[j + 1]] - xc[c_idx[j]]
        e = spec.fbar_cap_per_len * h / 6 * np.array([[2, 1], [1, 2]])
        ci, di = c_idx[j:j + 2], d_idx[j:j + 2]
        for a, b, sgn in ((ci, ci, 1), (di, di, 1), (ci, di, -1), (di, ci, -1)):
            Mov[np.ix_(a, b)] += sgn * e
    M += Mov
    # uniform flux on either conductor costs no energy: two zero modes
    w2, vec = eigh(K, M, subset_by_index=[0, n_modes + 1])
    omega = np.sqrt(w2[2:])
    vec = vec[:, 2:]
    vec = vec * np.sign(vec[0])
    lam = 0.25 * vec.T @ Mov @ vec
    return omega, lam, vec, xc, xd
