# spectral.py
"""
Symmetric eigendecomposition (cyclic Jacobi) and fractional Laplacian powers.

L^gamma = U diag(lambda^gamma) U^T with 0^gamma = 0. For gamma in (0, 1) the
off-diagonal entries of L^gamma stay nonpositive, so A_gamma = diag(L^gamma) - L^gamma
is a valid weighted adjacency that links nodes far apart in the original graph.
"""

from dataclasses import dataclass

import numpy as np

from utils.errors import (
    GammaOutOfRange, GraphTooLarge, NegativeOffDiagonal, NoConvergence, NotPSD,
    NotSymmetric, ZeroTrace
)
from utils.graph_core import MAX_NODES, PSD_TOL, LaplacianMatrix, TransitionMatrix

INPUT_SYMMETRY_TOL = 1e-9
OFF_DIAGONAL_TOL = 1e-12     # Frobenius norm of the off-diagonal part, relative to ||A||_F (floor 1)
MAX_SWEEPS = 100
NEGATIVE_ENTRY_LIMIT = 1e-6  # below -this, A_gamma signals a solver failure
DEFAULT_GAMMA = 0.1


@dataclass(frozen=True, eq=False)
class SpectralDecomposition:
    """Ascending eigenvalues with orthonormal eigenvectors as columns."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def reconstruct(self, values=None) -> np.ndarray:
        lam = self.eigenvalues if values is None else values
        u = self.eigenvectors
        return (u * lam) @ u.T


@dataclass(frozen=True, eq=False)
class FractionalLaplacian:
    gamma: float
    matrix: np.ndarray


def _off_norm(a: np.ndarray) -> float:
    # summed directly; ||A||^2 - ||diag A||^2 cancels down to a ~1e-8 floor
    upper = np.triu(a, 1)
    return float(np.sqrt(2.0 * np.sum(upper * upper)))


def _apply_sign_convention(vectors: np.ndarray) -> np.ndarray:
    # largest-magnitude component of each eigenvector is made positive
    n = vectors.shape[0]
    if n == 0:
        return vectors
    pivots = np.argmax(np.abs(vectors), axis=0)
    signs = np.where(vectors[pivots, np.arange(vectors.shape[1])] < 0, -1.0, 1.0)
    return vectors * signs


def eigh(matrix, psd: bool = False) -> SpectralDecomposition:
    """
    Eigendecomposition of a dense symmetric matrix by cyclic Jacobi rotations.

    Pairs (p, q) are swept in row-major order until the off-diagonal Frobenius
    norm drops below OFF_DIAGONAL_TOL * max(1, ||A||_F).

    Args:
        matrix: symmetric n x n array
        psd: clamp eigenvalues in [-1e-9, 0) to 0 and reject anything lower

    Returns:
        SpectralDecomposition: ascending eigenvalues, sign-normalised eigenvectors

    Raises:
        NotSymmetric, NotPSD, NoConvergence, GraphTooLarge
    """
    a = np.array(matrix, dtype=np.float64, copy=True)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise NotSymmetric(float('inf'))
    n = a.shape[0]
    if n > MAX_NODES:
        raise GraphTooLarge(n, MAX_NODES)
    if n:
        asymmetry = float(np.max(np.abs(a - a.T)))
        if not asymmetry <= INPUT_SYMMETRY_TOL:
            raise NotSymmetric(asymmetry)
    a = 0.5 * (a + a.T)
    v = np.eye(n)

    threshold = OFF_DIAGONAL_TOL * max(1.0, float(np.linalg.norm(a)))
    converged = _off_norm(a) <= threshold
    sweeps = 0
    while not converged:
        if sweeps == MAX_SWEEPS:
            raise NoConvergence(MAX_SWEEPS, _off_norm(a))
        sweeps += 1
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                if abs(theta) > 1e150:
                    t = 0.5 / theta
                else:
                    t = (1.0 if theta >= 0 else -1.0) / (abs(theta) + np.sqrt(theta * theta + 1.0))
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c

                col_p = a[:, p].copy()
                col_q = a[:, q].copy()
                a[:, p] = c * col_p - s * col_q
                a[:, q] = s * col_p + c * col_q
                row_p = a[p, :].copy()
                row_q = a[q, :].copy()
                a[p, :] = c * row_p - s * row_q
                a[q, :] = s * row_p + c * row_q
                a[p, q] = 0.0
                a[q, p] = 0.0

                vec_p = v[:, p].copy()
                vec_q = v[:, q].copy()
                v[:, p] = c * vec_p - s * vec_q
                v[:, q] = s * vec_p + c * vec_q
        converged = _off_norm(a) <= threshold

    eigenvalues = np.diag(a).copy()
    order = np.argsort(eigenvalues, kind='stable')
    eigenvalues = eigenvalues[order]
    vectors = _apply_sign_convention(v[:, order])

    if psd and n:
        if eigenvalues[0] < -PSD_TOL:
            raise NotPSD(float(eigenvalues[0]))
        eigenvalues = np.where(eigenvalues < 0, 0.0, eigenvalues)

    return SpectralDecomposition(eigenvalues, vectors)


def check_gamma(gamma) -> float:
    gamma = float(gamma)
    if not (0.0 < gamma <= 1.0):
        raise GammaOutOfRange(gamma)
    return gamma


def fractional_laplacian(lap, gamma: float) -> FractionalLaplacian:
    """
    L^gamma = U diag(lambda^gamma) U^T.

    Args:
        lap: LaplacianMatrix or symmetric PSD array
        gamma: exponent in (0, 1]
    """
    gamma = check_gamma(gamma)
    matrix = lap.matrix if isinstance(lap, LaplacianMatrix) else np.asarray(lap, dtype=np.float64)
    decomposition = eigh(matrix, psd=True)
    lam = decomposition.eigenvalues
    powered = np.zeros_like(lam)
    positive = lam > 0
    powered[positive] = lam[positive] ** gamma
    result = decomposition.reconstruct(powered)
    return FractionalLaplacian(gamma, 0.5 * (result + result.T))


def gamma_adjacency(fl: FractionalLaplacian) -> np.ndarray:
    """
    A_gamma = diag(L^gamma) - L^gamma with a zero diagonal.

    Rounding noise below zero is clamped; anything under -1e-6 is an error.
    """
    adjacency = -np.array(fl.matrix, dtype=np.float64)
    np.fill_diagonal(adjacency, 0.0)
    adjacency = 0.5 * (adjacency + adjacency.T)
    if adjacency.size:
        lowest = float(adjacency.min())
        if lowest < -NEGATIVE_ENTRY_LIMIT:
            raise NegativeOffDiagonal(lowest)
    adjacency[adjacency < 0] = 0.0
    return adjacency


def gamma_stationary(fl: FractionalLaplacian) -> np.ndarray:
    """pi_gamma = diag(L^gamma) / trace(L^gamma)."""
    diagonal = np.diag(fl.matrix).copy()
    trace = diagonal.sum()
    if not trace > 0:
        raise ZeroTrace()
    return diagonal / trace


def gamma_transition(fl: FractionalLaplacian) -> TransitionMatrix:
    """M_gamma = diag(L^gamma)^-1 A_gamma."""
    diagonal = np.diag(fl.matrix)
    return TransitionMatrix(gamma_adjacency(fl) / diagonal[:, None])
