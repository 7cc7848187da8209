"""One-sided (Hestenes) Jacobi SVD.

Columns of the smaller side are orthogonalised by plane rotations applied in
round-robin order, so each rotation sweep is a sequence of vectorised steps
over disjoint column pairs.  The accumulated rotations are exactly orthogonal
and give one factor; the normalised rotated columns give the other.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

EPS = np.finfo(np.float64).eps


@dataclass
class SvdResult:
    U: np.ndarray
    singular_values: np.ndarray
    V: np.ndarray

    def reconstruct(self) -> np.ndarray:
        k = len(self.singular_values)
        return (self.U[:, :k] * self.singular_values) @ self.V[:, :k].T


def _round_robin(k: int):
    """Disjoint column pairings covering every pair once (circle method)."""
    players = list(range(k + (k % 2)))
    n = len(players)
    rounds = []
    for _ in range(n - 1):
        pairs = [(players[i], players[n - 1 - i]) for i in range(n // 2)]
        pairs = [(min(p), max(p)) for p in pairs if max(p) < k]
        if pairs:
            rounds.append((np.array([p for p, _ in pairs]), np.array([q for _, q in pairs])))
        players = [players[0], players[-1]] + players[1:-1]
    return rounds


def _orthogonalise(B: np.ndarray, tol: float, max_sweeps: int):
    B = B.copy()
    k = B.shape[1]
    J = np.eye(k)
    rounds = _round_robin(k)
    floor = (EPS * max(1.0, np.linalg.norm(B))) ** 2
    for _ in range(max_sweeps):
        rotated = False
        for p, q in rounds:
            bp, bq = B[:, p], B[:, q]
            alpha = np.einsum("ij,ij->j", bp, bp)
            beta = np.einsum("ij,ij->j", bq, bq)
            gamma = np.einsum("ij,ij->j", bp, bq)
            active = (np.abs(gamma) > tol * np.sqrt(alpha * beta)) & (alpha > floor) & (beta > floor)
            if not active.any():
                continue
            rotated = True
            p, q = p[active], q[active]
            alpha, beta, gamma = alpha[active], beta[active], gamma[active]
            zeta = (beta - alpha) / (2.0 * gamma)
            t = np.where(zeta >= 0, 1.0, -1.0) / (np.abs(zeta) + np.sqrt(1.0 + zeta * zeta))
            c = 1.0 / np.sqrt(1.0 + t * t)
            s = c * t
            for X in (B, J):
                xp, xq = X[:, p], X[:, q]
                X[:, p] = c * xp - s * xq
                X[:, q] = s * xp + c * xq
        if not rotated:
            break
    return B, J


def _complete(Q: np.ndarray, good: np.ndarray) -> np.ndarray:
    """Replace the columns of ``Q`` not in ``good`` by an orthonormal completion."""
    if good.all():
        return Q
    n = Q.shape[0]
    kept = Q[:, good]
    basis, _ = np.linalg.qr(np.hstack([kept, np.eye(n)]))
    extra = basis[:, kept.shape[1]:]
    out = Q.copy()
    out[:, ~good] = extra[:, :(~good).sum()]
    return out


def svd(matrix, tol: float = 1e-15, max_sweeps: int = 80) -> SvdResult:
    """Thin SVD ``M = U diag(s) V^T`` with ``k = min(m, n)`` singular values.

    For ``m <= n`` (the usual case: fewer semantic units than words) ``U`` is
    ``m x m`` and ``V`` is ``n x m``.  Singular values are non-increasing;
    equal values keep their original column order.
    """
    M = np.asarray(matrix, dtype=np.float64)
    if M.ndim != 2 or min(M.shape) < 1:
        raise ValueError(f"expected a non-empty 2-d matrix, got shape {M.shape}")
    if not np.isfinite(M).all():
        raise ValueError("matrix has non-finite entries")
    m, n = M.shape
    wide = m <= n
    W, J = _orthogonalise(M.T if wide else M, tol, max_sweeps)
    sigma = np.linalg.norm(W, axis=0)
    order = np.argsort(-sigma, kind="stable")
    sigma, W, J = sigma[order], W[:, order], J[:, order]
    good = sigma > max(m, n) * EPS * (sigma[0] if len(sigma) else 0.0)
    Q = np.zeros_like(W)
    Q[:, good] = W[:, good] / sigma[good]
    Q = _complete(Q, good)
    if wide:
        return SvdResult(J, sigma, Q)
    return SvdResult(Q, sigma, J)
