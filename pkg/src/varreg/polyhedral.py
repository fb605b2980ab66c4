"""Nonzero solutions of homogeneous linear systems.

A homogeneous system ``E x = 0, G x <= 0`` describes a polyhedral cone.  It
contains a point with ``x[i] != 0`` for some probed ``i`` exactly when one of
the systems with ``x[i] = +1`` or ``x[i] = -1`` is feasible.  Equalities are
removed through a null-space parametrisation, and the remaining inequalities
go to Fourier-Motzkin elimination.
"""

from __future__ import annotations

import numpy as np
from scipy.linalg import null_space

from .kernels import fm_solve

FM_TOL = 1e-9


def _null(M, n):
    if M.shape[0] == 0:
        return np.eye(n)
    scale = max(1.0, float(np.max(np.abs(M))))
    return null_space(M / scale, rcond=1e-10)


def nonzero_solution(E, G, n, probe=None, tol=FM_TOL):
    """Find ``x`` with ``E x = 0``, ``G x <= 0`` and ``x[i] = ±1`` for a probed ``i``.

    Returns the first such ``x`` (probes in order, ``+1`` before ``-1``) or
    ``None`` when only vectors vanishing on the probe set are feasible.
    """
    E = np.asarray(E, dtype=float).reshape(-1, n)
    G = np.asarray(G, dtype=float).reshape(-1, n)
    probe = range(n) if probe is None else probe
    basis = _null(E, n)
    if basis.shape[1] == 0:
        return None
    GB = G @ basis
    for i in probe:
        row = basis[i]
        nrm2 = float(row @ row)
        if nrm2 <= 1e-20:
            continue
        rest = null_space(row[None, :] / np.sqrt(nrm2), rcond=1e-10)
        for s in (1.0, -1.0):
            y0 = s * row / nrm2
            if GB.shape[0] == 0:
                return basis @ y0
            rhs = -GB @ y0
            if rest.shape[1] == 0:
                if np.all(rhs >= -tol * (1.0 + np.abs(GB @ y0))):
                    return basis @ y0
                continue
            ok, u = fm_solve(GB @ rest, rhs, tol)
            if ok:
                return basis @ (y0 + rest @ u)
    return None


def check_solution(x, E, G, tol=1e-8):
    """Residual test used to certify witnesses after normalisation."""
    x = np.asarray(x, dtype=float)
    nrm = float(np.linalg.norm(x))
    if nrm == 0.0:
        return False
    u = x / nrm
    E = np.asarray(E, dtype=float).reshape(-1, x.size)
    G = np.asarray(G, dtype=float).reshape(-1, x.size)
    scale_e = np.linalg.norm(E, axis=1) if E.size else np.zeros(0)
    scale_g = np.linalg.norm(G, axis=1) if G.size else np.zeros(0)
    return bool(np.all(np.abs(E @ u) <= tol * (1 + scale_e)) and np.all(G @ u <= tol * (1 + scale_g)))
