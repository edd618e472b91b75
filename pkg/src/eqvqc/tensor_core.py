"""Dense complex linear algebra for small (<= 2**8) matrices.

Matrices are plain ``numpy`` arrays of dtype ``complex128``.
"""

from __future__ import annotations

from functools import reduce

import numpy as np

UNITARY_TOL = 1e-10
HERMITIAN_TOL = 1e-10

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
CNOT_MATRIX = np.array(
    [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex
)
SWAP = np.array(
    [[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]], dtype=complex
)


def as_matrix(a) -> np.ndarray:
    m = np.asarray(a, dtype=complex)
    if m.ndim != 2 or m.size == 0:
        raise ValueError(f"expected a non-empty 2-D matrix, got shape {m.shape}")
    return m


def kron(*mats) -> np.ndarray:
    """Kronecker product of one or more matrices, left to right."""
    if not mats:
        raise ValueError("kron needs at least one operand")
    return reduce(np.kron, (as_matrix(m) for m in mats))


def dagger(a: np.ndarray) -> np.ndarray:
    return np.conj(np.swapaxes(a, -1, -2))


def hermiticity_defect(h) -> float:
    h = as_matrix(h)
    return float(np.linalg.norm(h - dagger(h)))


def is_hermitian(h, tol: float = HERMITIAN_TOL) -> bool:
    h = as_matrix(h)
    return h.shape[0] == h.shape[1] and hermiticity_defect(h) < tol


def unitarity_check(u, tol: float = UNITARY_TOL) -> bool:
    """True iff ``||U^dagger U - I||_F < tol``."""
    u = as_matrix(u)
    if u.shape[0] != u.shape[1]:
        raise ValueError(f"unitarity_check needs a square matrix, got {u.shape}")
    return bool(np.linalg.norm(dagger(u) @ u - np.eye(u.shape[0])) < tol)


def _check_square_pair(a: np.ndarray, b: np.ndarray) -> None:
    if a.shape[0] != a.shape[1] or a.shape != b.shape:
        raise ValueError(f"need square matrices of equal size, got {a.shape} and {b.shape}")


def commutator_norm(a, b) -> float:
    """Frobenius norm of ``AB - BA``."""
    a, b = as_matrix(a), as_matrix(b)
    _check_square_pair(a, b)
    return float(np.linalg.norm(a @ b - b @ a))


def herm_eigh(h) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of a Hermitian matrix, rejecting non-Hermitian input."""
    h = as_matrix(h)
    if h.shape[0] != h.shape[1]:
        raise ValueError(f"expected a square matrix, got {h.shape}")
    defect = hermiticity_defect(h)
    if defect >= HERMITIAN_TOL:
        raise ValueError(f"matrix is not Hermitian (||H - H^dagger||_F = {defect:.3e})")
    # symmetrize so eigh sees exactly Hermitian input
    return np.linalg.eigh(0.5 * (h + dagger(h)))


def expm_from_eigh(evals: np.ndarray, evecs: np.ndarray, phi) -> np.ndarray:
    """``exp(i phi H)`` from a precomputed eigendecomposition of ``H``.

    ``phi`` may be a scalar or an array of angles; an array yields a stack of
    matrices with the angle axes leading.
    """
    phases = np.exp(1j * np.multiply.outer(np.asarray(phi, dtype=float), evals))
    return (evecs * phases[..., None, :]) @ dagger(evecs)


def herm_expm(h, phi: float) -> np.ndarray:
    """Return ``exp(i * phi * h)`` for Hermitian ``h`` via eigendecomposition."""
    evals, evecs = herm_eigh(h)
    return expm_from_eigh(evals, evecs, phi)


def embed_operator(u, targets, num_qubits: int) -> np.ndarray:
    """Dense ``2**n x 2**n`` matrix acting as ``u`` on ``targets`` and identity elsewhere.

    Qubit 0 is the most significant bit. Built entrywise from bit masks, so it
    shares no code with the strided state update in :mod:`eqvqc.simulator`.
    """
    u = as_matrix(u)
    targets = list(targets)
    k = len(targets)
    if u.shape != (2**k, 2**k):
        raise ValueError(f"operator of shape {u.shape} does not fit {k} target qubits")
    if len(set(targets)) != k or any(not 0 <= t < num_qubits for t in targets):
        raise ValueError(f"bad targets {targets} for {num_qubits} qubits")
    dim = 2**num_qubits
    idx = np.arange(dim)
    shifts = [num_qubits - 1 - t for t in targets]
    # local index of each basis state restricted to the targets, targets[0] most significant
    local = np.zeros(dim, dtype=int)
    for s in shifts:
        local = (local << 1) | ((idx >> s) & 1)
    mask = sum(1 << s for s in shifts)
    rest = idx & ~mask
    same_rest = rest[:, None] == rest[None, :]
    return np.where(same_rest, u[local[:, None], local[None, :]], 0.0)
