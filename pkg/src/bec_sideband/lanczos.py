"""Block Lanczos with full reorthogonalization and thick restarts.

Only the lowest end of a real symmetric operator is targeted. The
operator is given as a callable acting on blocks of column vectors.
"""

from __future__ import annotations

import logging

import numpy as np

log = logging.getLogger(__name__)


class EigenConvergenceError(RuntimeError):
    def __init__(self, message, residuals=None):
        super().__init__(message)
        self.residuals = residuals


def _orthonormalize_against(W, V, rng):
    """Project ``W`` out of span(V) twice (DGKS) and QR it, replacing
    deflated directions by fresh random ones."""
    for _ in range(2):
        if V.shape[1]:
            W = W - V @ (V.T @ W)
    Q, R = np.linalg.qr(W)
    scale = np.abs(np.diag(R))
    bad = scale < 1e-10 * max(scale.max(), 1e-300)
    if bad.any():
        fresh = rng.standard_normal((W.shape[0], int(bad.sum())))
        basis = np.hstack([V, Q[:, ~bad]])
        for _ in range(2):
            fresh = fresh - basis @ (basis.T @ fresh)
        fq, _ = np.linalg.qr(fresh)
        Q = np.hstack([Q[:, ~bad], fq])
    return Q


def lanczos_lowest(apply, n, k, *, block=4, max_basis=None, tol=1e-10, scale=1.0,
                   max_restarts=500, seed=0, x0=None):
    """Lowest ``k`` eigenpairs of the symmetric operator ``apply``.

    Parameters
    ----------
    apply : callable
        Maps an ``(n, b)`` real array to ``A @ X``.
    n : int
        Problem dimension.
    k : int
        Number of wanted eigenpairs.
    block : int
        Block size; must be at least the largest multiplicity to be resolved.
    tol : float
        Convergence threshold on ``||A y - theta y|| / scale`` for unit ``y``.
    scale : float
        Energy scale used to make ``tol`` dimensionless.

    Returns
    -------
    energies : (k,) array
    vectors : (n, k) array, orthonormal columns
    residuals : (k,) array, absolute residual norms
    """
    rng = np.random.default_rng(seed)
    if max_basis is None:
        max_basis = max(5 * k + 4 * block, 60)
    max_basis = max(max_basis, k + 2 * block)

    if n <= max_basis + block:
        # Small problems: the Krylov space would exhaust the whole space anyway.
        A = apply(np.eye(n))
        A = 0.5 * (A + A.T)
        w, U = np.linalg.eigh(A)
        res = np.linalg.norm(A @ U[:, :k] - U[:, :k] * w[:k], axis=0)
        return w[:k], U[:, :k], res

    X = rng.standard_normal((n, block)) if x0 is None else np.array(x0, dtype=float)
    V = _orthonormalize_against(X, np.empty((n, 0)), rng)
    AV = apply(V)
    H = V.T @ AV
    keep = min(k + 2 * block, max_basis - 2 * block)
    res = None
    for restart in range(max_restarts):
        while V.shape[1] + block <= max_basis:
            Q = _orthonormalize_against(AV[:, -block:], V, rng)
            AQ = apply(Q)
            V = np.hstack([V, Q])
            AV = np.hstack([AV, AQ])
            col = V.T @ AQ
            H = np.block([[H, col[:-block]], [col[:-block].T, col[-block:]]])
        theta, S = np.linalg.eigh(0.5 * (H + H.T))
        Y = V @ S[:, :keep]
        AY = AV @ S[:, :keep]
        R = AY - Y * theta[:keep]
        res = np.linalg.norm(R, axis=0)
        if np.all(res[:k] < tol * scale):
            log.debug("lanczos converged after %d restarts", restart)
            return theta[:k], Y[:, :k], res[:k]
        # Ritz residuals all lie in span of the last block's A-image minus
        # its projection onto V; that block continues the Krylov sequence.
        F = _orthonormalize_against(AV[:, -block:], V, rng)
        AF = apply(F)
        V = np.hstack([Y, F])
        AV = np.hstack([AY, AF])
        YAF = Y.T @ AF
        H = np.block([[np.diag(theta[:keep]), YAF], [YAF.T, F.T @ AF]])
    raise EigenConvergenceError(
        f"block Lanczos did not converge in {max_restarts} restarts", res)
