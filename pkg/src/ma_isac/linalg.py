"""Dense complex-matrix kernel shared by every other module.

Thin wrappers around LAPACK (via numpy) that add the contracts the rest of
the code relies on: Hermitian input checks, scale-free residual tolerances,
and column-stacking vectorization helpers.
"""
import numpy as np

# Hermitian deviation allowed relative to max|M|.
HERMITIAN_RTOL = 1e-12


def hermitian_deviation(mat: np.ndarray) -> float:
    """max|M - M^H| normalized by max|M| (0 for the zero matrix)."""
    scale = np.max(np.abs(mat))
    if scale == 0.0:
        return 0.0
    return float(np.max(np.abs(mat - mat.conj().T)) / scale)


def check_hermitian(mat: np.ndarray, rtol: float = HERMITIAN_RTOL) -> None:
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {mat.shape}")
    if not np.all(np.isfinite(mat)):
        raise ValueError("matrix has non-finite entries")
    dev = hermitian_deviation(mat)
    if dev > rtol:
        raise ValueError(f"matrix is not Hermitian (relative deviation {dev:.3e})")


def eigh(mat: np.ndarray):
    """Eigendecomposition of a Hermitian matrix.

    Returns (eigenvalues ascending, unitary eigenvector matrix) with
    M = U diag(w) U^H.  Raises ValueError on non-Hermitian input.
    """
    check_hermitian(mat)
    w, u = np.linalg.eigh(mat)
    return w, u


def herm_sqrt(mat: np.ndarray, shift: float = 0.0) -> np.ndarray:
    """(M + shift*I)^(1/2) for Hermitian PSD M."""
    w, u = eigh(mat)
    ws = w + shift
    if ws[0] < 0 and ws[0] > -1e-14 * max(1.0, abs(ws[-1])):
        ws = np.maximum(ws, 0.0)  # clip eigh round-off on PSD input
    if ws[0] < 0:
        raise ValueError(f"matrix is not PSD after shift (min eigenvalue {ws[0]:.3e})")
    return (u * np.sqrt(ws)) @ u.conj().T


def herm_sqrt_inv(mat: np.ndarray, shift: float = 0.0) -> np.ndarray:
    """(M + shift*I)^(-1/2) for Hermitian M with positive shifted spectrum.

    Raises ValueError when the smallest shifted eigenvalue is <= 0 (caller
    must increase the shift).
    """
    w, u = eigh(mat)
    ws = w + shift
    if ws[0] <= 0:
        raise ValueError(
            f"singular after shift: min eigenvalue {ws[0]:.3e} (increase shift)")
    return (u / np.sqrt(ws)) @ u.conj().T


def solve_hermitian(mat: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """Solve M x = rhs for Hermitian positive-definite M."""
    check_hermitian(mat)
    return np.linalg.solve(mat, rhs)


def vec(mat: np.ndarray) -> np.ndarray:
    """Column-stacking vectorization: vec(M) stacks the columns of M."""
    return mat.reshape(-1, order="F")


def unvec(v: np.ndarray, rows: int, cols: int) -> np.ndarray:
    """Inverse of vec()."""
    return v.reshape((rows, cols), order="F")
