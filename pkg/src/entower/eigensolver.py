"""Lanczos ground states with full reorthogonalization, plus a checked dense eigensolver."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence

import numpy as np

from .errors import ConvergenceError, NumericalError

logger = logging.getLogger(__name__)

# Krylov storage budget; above it the iteration restarts from the current Ritz vector
KRYLOV_MEMORY_BYTES = 1 << 30


@dataclass
class LanczosResult:
    e0: float
    ground_vector: np.ndarray
    iterations: int
    residual: float


def _orthogonalize(w, basis, deflate):
    # two passes of classical Gram-Schmidt ("twice is enough")
    for _ in range(2):
        if len(basis):
            w -= basis.T @ (basis @ w)
        for d in deflate:
            w -= (d @ w) * d


def lanczos_ground(apply: Callable[[np.ndarray], np.ndarray], dim: int, tol: float = 1e-10,
                   max_iter: int = 500, seed: int = 0, deflate: Sequence[np.ndarray] = (),
                   max_basis: Optional[int] = None) -> LanczosResult:
    """Lowest eigenpair of the symmetric operator ``apply``.

    Parameters
    ----------
    apply : callable
        Maps a length-``dim`` vector to its image under the operator.
    tol : float
        Required residual norm ``|H v - e0 v|`` of the returned unit vector.
    max_iter : int
        Budget of operator applications, restarts included.
    seed : int
        Seeds the random start vector; identical seeds give identical runs.
    deflate : sequence of arrays
        Orthonormal vectors whose span is excluded (used for excited states).
    max_basis : int, optional
        Cap on stored Krylov vectors. Defaults to a memory-derived cap; when
        it is reached the iteration restarts from the current Ritz vector.

    Raises
    ------
    ConvergenceError
        If the residual is still above ``tol`` after ``max_iter`` applications.
    """
    if dim < 1 or tol <= 0 or max_iter < 2:
        raise ValueError("need dim >= 1, tol > 0 and max_iter >= 2")
    deflate = [np.asarray(d, dtype=np.float64) for d in deflate]
    free_dim = dim - len(deflate)
    if free_dim < 1:
        raise ValueError("deflation space fills the whole space")
    if max_basis is None:
        max_basis = max(8, min(max_iter, KRYLOV_MEMORY_BYTES // (8 * dim)))
    max_basis = min(max_basis, free_dim)

    rng = np.random.default_rng(seed)
    x = rng.standard_normal(dim)
    _orthogonalize(x, (), deflate)
    x /= np.linalg.norm(x)

    V = np.empty((max_basis, dim))
    n_apply = 0
    best_residual = np.inf
    while n_apply < max_iter:
        V[0] = x
        alphas, betas = [], []
        k = 0
        while True:
            w = apply(V[k])
            n_apply += 1
            alphas.append(float(V[k] @ w))
            _orthogonalize(w, V[:k + 1], deflate)
            beta = float(np.linalg.norm(w))
            evals, evecs = np.linalg.eigh(_tridiag(alphas, betas))
            ritz_res = beta * abs(evecs[-1, 0])
            breakdown = beta < 1e-13 * max(1.0, abs(alphas[-1]))
            k += 1
            if ritz_res < 0.1 * tol or breakdown or k >= max_basis or n_apply + 1 >= max_iter:
                break
            betas.append(beta)
            V[k] = w / beta

        x = V[:k].T @ evecs[:, 0]
        _orthogonalize(x, (), deflate)
        x /= np.linalg.norm(x)
        hx = apply(x)
        n_apply += 1
        e0 = float(x @ hx)
        residual = float(np.linalg.norm(hx - e0 * x))
        logger.debug("lanczos cycle: %d applies, e0=%.15g, residual=%.3e", n_apply, e0, residual)
        best_residual = min(best_residual, residual)
        if residual <= tol:
            return LanczosResult(e0, x, n_apply, residual)
        if breakdown and free_dim > 1:
            # Krylov space closed without convergence: kick the restart vector
            x = x + 1e-3 * _orthonormal_noise(rng, dim, x, deflate)
            x /= np.linalg.norm(x)
    raise ConvergenceError(
        f"Lanczos did not reach residual {tol:.1e} within {max_iter} applications "
        f"(best residual {best_residual:.3e})", best_residual=best_residual, iterations=n_apply)


def _orthonormal_noise(rng, dim, x, deflate):
    r = rng.standard_normal(dim)
    _orthogonalize(r, x[None, :], deflate)
    return r / np.linalg.norm(r)


def _tridiag(alphas, betas):
    t = np.diag(alphas)
    if betas:
        off = np.array(betas)
        t += np.diag(off, 1) + np.diag(off, -1)
    return t


def lanczos_lowest(apply: Callable[[np.ndarray], np.ndarray], dim: int, k: int, tol: float = 1e-10,
                   max_iter: int = 500, seed: int = 0) -> List[LanczosResult]:
    """The ``k`` lowest eigenpairs, found one at a time by deflation."""
    found: List[LanczosResult] = []
    for level in range(min(k, dim)):
        res = lanczos_ground(apply, dim, tol=tol, max_iter=max_iter, seed=seed + level,
                             deflate=[r.ground_vector for r in found])
        found.append(res)
    return found


def dense_sym_eig(m: np.ndarray, atol: float = 1e-10):
    """Ascending eigenvalues and orthonormal eigenvectors of a symmetric matrix."""
    m = np.asarray(m, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {m.shape}")
    asym = np.max(np.abs(m - m.T)) if m.size else 0.0
    if asym > atol:
        raise NumericalError(f"matrix is not symmetric (max asymmetry {asym:.2e})")
    return np.linalg.eigh(0.5 * (m + m.T))
