"""Dense matrix kernel: exponential, inverse, norms, tolerance gates.

Matrices are plain numpy arrays (float64 or complex128), shape (d, d).
Every operation validates finiteness on the way in; invertibility gates
use the smallest singular value against ``SINGULAR_TOL``.
"""

import numpy as np
import scipy.linalg

from .errors import InvalidInputError, SingularMatrixError

# Smallest singular value below which a matrix counts as singular.
# Well above float64 round-off for the dimensions (d <= 8) this kernel targets.
SINGULAR_TOL = 1e-10


def as_endmap(m):
    """Validate and return a square, finite matrix as a float/complex ndarray."""
    a = np.asarray(m)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise InvalidInputError(f"expected a square matrix, got shape {a.shape}")
    if not np.issubdtype(a.dtype, np.number):
        raise InvalidInputError(f"expected numeric entries, got dtype {a.dtype}")
    if np.iscomplexobj(a):
        a = a.astype(np.complex128, copy=False)
    else:
        a = a.astype(np.float64, copy=False)
    if not np.all(np.isfinite(a)):
        raise InvalidInputError("matrix has non-finite entries")
    return a


def as_gaugemap(m, tol=SINGULAR_TOL):
    """Validate a matrix as invertible: smallest singular value must exceed tol."""
    a = as_endmap(m)
    if smallest_singular_value(a) <= tol:
        raise SingularMatrixError(
            f"matrix is singular within tolerance {tol:g} "
            f"(sigma_min = {smallest_singular_value(a):.3e})"
        )
    return a


def smallest_singular_value(m):
    """Smallest singular value of a square matrix."""
    return float(np.linalg.svd(np.asarray(m), compute_uv=False)[-1])


def matrix_exponential(m):
    """exp(m) by scaling-and-squaring (scipy's Pade kernel).

    Relative error stays below 1e-12 for ||m|| <= 10 at the dimensions
    this package works with.
    """
    a = as_endmap(m)
    if a.shape == (1, 1):
        return np.exp(a)
    return scipy.linalg.expm(a)


def matrix_inverse(m, tol=SINGULAR_TOL):
    """Inverse of an invertible matrix; raises SingularMatrixError below tol."""
    a = as_gaugemap(m, tol=tol)
    return np.linalg.inv(a)


def operator_distance(a, b, norm="fro"):
    """Norm of a - b; ``norm`` is "fro" (default) or "op2" (spectral).

    Raises InvalidInputError on a dimension mismatch.
    """
    x = as_endmap(a)
    y = as_endmap(b)
    if x.shape != y.shape:
        raise InvalidInputError(f"dimension mismatch: {x.shape} vs {y.shape}")
    if norm == "fro":
        return float(np.linalg.norm(x - y, "fro"))
    if norm == "op2":
        return float(np.linalg.norm(x - y, 2))
    raise InvalidInputError(f"unknown norm {norm!r} (use 'fro' or 'op2')")


def identity_distance(m, norm="fro"):
    """Distance from m to the identity of its own dimension."""
    a = as_endmap(m)
    return operator_distance(a, np.eye(a.shape[0], dtype=a.dtype), norm=norm)
