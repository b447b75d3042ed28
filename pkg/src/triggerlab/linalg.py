"""Dense linear-algebra kernel for covariance bookkeeping.

Matrices are plain 2-D numpy arrays (row-major). Problem sizes here are
tiny (often scalar), so everything is dense and favours clarity plus
explicit numerical hygiene over raw speed. Covariances are kept symmetric
positive semidefinite by re-symmetrizing after every update and checking
the smallest eigenvalue against a relative tolerance.
"""
from __future__ import annotations

import numpy as np

# Smallest eigenvalue of a covariance may dip below zero by at most this
# fraction of its trace before the matrix is rejected as indefinite.
PSD_TOL = 1e-10

# Reciprocal condition number below which a symmetric solve is rejected.
RCOND_MIN = 1e-14


def as_matrix(a, name: str = "matrix") -> np.ndarray:
    m = np.asarray(a, dtype=float)
    if m.ndim != 2:
        raise ValueError(f"{name}: expected a 2-D array, got ndim={m.ndim}")
    if not np.all(np.isfinite(m)):
        raise ValueError(f"{name}: non-finite entries")
    return m


def _require_square(m: np.ndarray, name: str) -> np.ndarray:
    m = as_matrix(m, name)
    if m.shape[0] != m.shape[1]:
        raise ValueError(f"{name}: expected square matrix, got shape {m.shape}")
    return m


def multiply(a, b) -> np.ndarray:
    """Matrix product with explicit shape checking."""
    a = as_matrix(a, "a")
    b = as_matrix(b, "b")
    if a.shape[1] != b.shape[0]:
        raise ValueError(
            f"dimension mismatch: cannot multiply {a.shape[0]}x{a.shape[1]} "
            f"by {b.shape[0]}x{b.shape[1]}"
        )
    out = a @ b
    if not np.all(np.isfinite(out)):
        raise ValueError("multiply: non-finite entries in product")
    return out


def trace(p) -> float:
    p = _require_square(p, "trace")
    return float(np.trace(p))


def min_eigenvalue(p) -> float:
    p = _require_square(p, "min_eigenvalue")
    return float(np.linalg.eigvalsh(0.5 * (p + p.T)).min())


def psd_threshold(p: np.ndarray) -> float:
    """Lower bound allowed for the smallest eigenvalue of covariance `p`."""
    return -PSD_TOL * max(float(np.trace(p)), 1e-300)


def check_psd(p, name: str = "matrix") -> np.ndarray:
    """Reject matrices whose smallest eigenvalue is negative beyond tolerance."""
    p = _require_square(p, name)
    lam = float(np.linalg.eigvalsh(p).min())
    if lam < psd_threshold(p):
        raise ValueError(
            f"{name}: indefinite beyond tolerance (smallest eigenvalue {lam:.3e}, "
            f"allowed {psd_threshold(p):.3e})"
        )
    return p


def symmetrize(p) -> np.ndarray:
    """(P + P^T)/2 followed by a PSD check.

    Applied after every covariance-producing operation to scrub rounding
    asymmetry. Idempotent: symmetrizing a symmetric matrix is exact.
    """
    p = _require_square(p, "symmetrize")
    s = 0.5 * (p + p.T)
    return check_psd(s, "symmetrize")


def cholesky(p) -> np.ndarray:
    """Factor a PSD matrix as F F^T.

    Strictly positive definite inputs get the standard lower-triangular
    Cholesky factor. Singular-but-PSD inputs fall back to an eigenvalue
    factorization with negative round-off eigenvalues clamped to zero, so
    F F^T still reconstructs the input. Indefinite inputs beyond tolerance
    are rejected with the offending eigenvalue in the message.
    """
    p = _require_square(p, "cholesky")
    try:
        return np.linalg.cholesky(p)
    except np.linalg.LinAlgError:
        pass
    lam, vec = np.linalg.eigh(0.5 * (p + p.T))
    if lam.min() < psd_threshold(p):
        raise ValueError(
            f"cholesky: indefinite input (smallest eigenvalue {lam.min():.3e}, "
            f"allowed {psd_threshold(p):.3e})"
        )
    factor = vec * np.sqrt(np.clip(lam, 0.0, None))
    norm = np.linalg.norm(p, "fro")
    err = np.linalg.norm(factor @ factor.T - p, "fro")
    if err > 1e-10 * max(norm, 1e-300):
        raise ValueError(f"cholesky: reconstruction error {err:.3e} exceeds bound")
    return factor


def solve_symmetric(a, b) -> np.ndarray:
    """Solve a x = b for symmetric `a`, rejecting near-singular systems."""
    a = _require_square(a, "solve_symmetric")
    b = as_matrix(b, "b")
    if b.shape[0] != a.shape[0]:
        raise ValueError(f"solve_symmetric: rhs rows {b.shape[0]} != {a.shape[0]}")
    s = 0.5 * (a + a.T)
    lam = np.abs(np.linalg.eigvalsh(s))
    rcond = (lam.min() / lam.max()) if lam.max() > 0 else 0.0
    if rcond < RCOND_MIN:
        raise ValueError(
            f"solve_symmetric: matrix ill-conditioned (rcond estimate {rcond:.3e})"
        )
    return np.linalg.solve(s, b)
