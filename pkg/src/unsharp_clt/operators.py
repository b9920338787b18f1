"""Dense complex operators on small Hilbert spaces.

Operators are plain ``numpy`` complex arrays of shape ``(d, d)``.  Local qubit
basis order is ``{|0>, |1>}`` throughout the package.
"""
from __future__ import annotations

import numpy as np

from .errors import InvalidInput

PSD_TOL = 1e-9

_PAULI = {
    "x": np.array([[0, 1], [1, 0]], dtype=complex),
    "y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "z": np.array([[1, 0], [0, -1]], dtype=complex),
}


def pauli(axis: str) -> np.ndarray:
    try:
        return _PAULI[axis].copy()
    except KeyError:
        raise InvalidInput(f"unknown Pauli axis {axis!r}") from None


def as_operator(op) -> np.ndarray:
    """Coerce to a finite square complex matrix."""
    a = np.asarray(op, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
        raise InvalidInput(f"operator must be a non-empty square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise InvalidInput("operator has non-finite entries")
    return a


def is_hermitian(op, tol: float = PSD_TOL) -> bool:
    a = as_operator(op)
    return bool(np.max(np.abs(a - a.conj().T)) <= tol)


def is_psd(op, tol: float = PSD_TOL) -> bool:
    """True iff ``op`` is Hermitian within ``tol`` and no eigenvalue is below ``-tol``."""
    a = as_operator(op)
    if not is_hermitian(a, tol):
        return False
    herm = 0.5 * (a + a.conj().T)
    return bool(np.linalg.eigvalsh(herm).min() >= -tol)


def psd_sqrt(op, tol: float = PSD_TOL) -> np.ndarray:
    """Positive square root of a PSD matrix; tiny negative eigenvalues are clamped."""
    a = as_operator(op)
    if not is_psd(a, tol):
        raise InvalidInput("psd_sqrt requires a positive semidefinite operator")
    herm = 0.5 * (a + a.conj().T)
    w, v = np.linalg.eigh(herm)
    w = np.sqrt(np.clip(w, 0.0, None))
    s = (v * w) @ v.conj().T
    return 0.5 * (s + s.conj().T)


def is_density_matrix(rho, tol: float = PSD_TOL) -> bool:
    a = as_operator(rho)
    return is_psd(a, tol) and abs(np.trace(a) - 1.0) <= tol


def bloch_density(x: float, y: float, z: float) -> np.ndarray:
    """Qubit density matrix ``(I + r.sigma)/2`` for Bloch vector ``r``."""
    if x * x + y * y + z * z > 1.0 + 1e-12:
        raise InvalidInput("Bloch vector lies outside the unit ball")
    return 0.5 * (np.eye(2) + x * _PAULI["x"] + y * _PAULI["y"] + z * _PAULI["z"])


def bloch_vector(rho) -> np.ndarray:
    a = as_operator(rho)
    if a.shape != (2, 2):
        raise InvalidInput("Bloch vector is defined for qubit operators only")
    return np.array([np.trace(a @ _PAULI[k]).real for k in "xyz"])


def ket_density(ket) -> np.ndarray:
    v = np.asarray(ket, dtype=complex).ravel()
    v = v / np.linalg.norm(v)
    return np.outer(v, v.conj())
