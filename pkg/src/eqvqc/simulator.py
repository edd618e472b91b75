"""Exact statevector simulation.

A state on ``n`` qubits is a complex array whose last axis has length ``2**n``;
any leading axes are batch axes, so a whole batch of circuits can be pushed
through one gate at a time. Qubit 0 is the most significant bit of the basis
index, matching left-to-right tensor notation (``X (x) I (x) I`` acts on qubit 0).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from eqvqc.tensor_core import I2, X, Y, Z, kron

MAX_QUBITS = 8
NORM_TOL = 1e-10

PAULIS = {"I": I2, "X": X, "Y": Y, "Z": Z}


def num_qubits_of(state: np.ndarray) -> int:
    dim = state.shape[-1]
    n = dim.bit_length() - 1
    if dim != 1 << n or n < 1:
        raise ValueError(f"state dimension {dim} is not a power of two")
    return n


def init_state(n: int, batch: int | None = None) -> np.ndarray:
    """The all-zeros state ``|0...0>``, optionally replicated ``batch`` times."""
    if not 1 <= n <= MAX_QUBITS:
        raise ValueError(f"qubit count must be in [1, {MAX_QUBITS}], got {n}")
    shape = (2**n,) if batch is None else (batch, 2**n)
    state = np.zeros(shape, dtype=complex)
    state[..., 0] = 1.0
    return state


def norm_defect(state: np.ndarray) -> float:
    """Largest deviation of ``sum |amp|^2`` from one across the batch."""
    return float(np.max(np.abs(np.sum(np.abs(state) ** 2, axis=-1) - 1.0)))


def apply_unitary(state: np.ndarray, u: np.ndarray, targets) -> np.ndarray:
    """Apply ``u`` to the ordered ``targets`` of ``state`` (identity elsewhere).

    ``u`` is either one ``2**k x 2**k`` matrix or a stack whose leading shape
    matches the state's batch shape (one gate per batch entry).
    """
    targets = [int(t) for t in targets]
    n = num_qubits_of(state)
    k = len(targets)
    if len(set(targets)) != k:
        raise ValueError(f"repeated target in {targets}")
    if any(not 0 <= t < n for t in targets):
        raise ValueError(f"targets {targets} out of range for {n} qubits")
    u = np.asarray(u, dtype=complex)
    d = 2**k
    if u.shape[-2:] != (d, d):
        raise ValueError(f"gate of shape {u.shape[-2:]} does not fit {k} targets")
    batch = state.shape[:-1]
    nb = len(batch)
    psi = state.reshape(batch + (2,) * n)
    axes = [nb + t for t in targets]
    psi = np.moveaxis(psi, axes, range(nb + n - k, nb + n))
    moved_shape = psi.shape
    psi = psi.reshape(batch + (2 ** (n - k), d))
    psi = np.matmul(psi, np.swapaxes(u, -1, -2))
    psi = np.moveaxis(psi.reshape(moved_shape), range(nb + n - k, nb + n), axes)
    return psi.reshape(state.shape)


def append_zero_qubits(state: np.ndarray, count: int) -> np.ndarray:
    """``state (x) |0...0>`` with ``count`` fresh qubits appended after the last one."""
    if count == 0:
        return state
    out = np.zeros(state.shape[:-1] + (state.shape[-1] << count,), dtype=complex)
    out[..., :: 1 << count] = state
    return out


def _check_word(word: str) -> str:
    bad = set(word) - set(PAULIS)
    if not word or bad:
        raise ValueError(f"invalid Pauli string {word!r}")
    return word


def pauli_matrix(word: str, coefficient: float = 1.0) -> np.ndarray:
    """Dense matrix of ``coefficient * P_0 (x) P_1 (x) ...``."""
    word = _check_word(word)
    return coefficient * kron(*(PAULIS[c] for c in word))


@dataclass(frozen=True)
class PauliObservable:
    """Real linear combination of Pauli strings, Hermitian by construction."""

    terms: tuple[tuple[float, str], ...]

    def __post_init__(self):
        if not self.terms:
            raise ValueError("observable needs at least one term")
        terms = tuple((float(c), _check_word(w)) for c, w in self.terms)
        if len({len(w) for _, w in terms}) != 1:
            raise ValueError("all Pauli strings must have the same length")
        object.__setattr__(self, "terms", terms)

    @classmethod
    def from_string(cls, word: str, coefficient: float = 1.0) -> "PauliObservable":
        return cls(((coefficient, word),))

    @property
    def num_qubits(self) -> int:
        return len(self.terms[0][1])

    def matrix(self) -> np.ndarray:
        return sum(pauli_matrix(w, c) for c, w in self.terms)

    def __str__(self) -> str:
        return " + ".join(f"{c:.6g}*{w}" for c, w in self.terms)


def apply_pauli(state: np.ndarray, word: str) -> np.ndarray:
    """``P|psi>`` for a Pauli string, by axis flips and sign changes."""
    n = num_qubits_of(state)
    word = _check_word(word)
    if len(word) != n:
        raise ValueError(f"Pauli string of length {len(word)} on {n} qubits")
    batch = state.shape[:-1]
    nb = len(batch)
    psi = state.reshape(batch + (2,) * n)
    for q, c in enumerate(word):
        if c == "I":
            continue
        shape = [1] * (nb + n)
        shape[nb + q] = 2
        if c in "XY":
            psi = np.flip(psi, axis=nb + q)
        if c == "Z":
            psi = psi * np.array([1, -1]).reshape(shape)
        elif c == "Y":
            # after the flip, slot 0 holds the old |1> amplitude
            psi = psi * np.array([-1j, 1j]).reshape(shape)
    return psi.reshape(state.shape)


def expectation(state: np.ndarray, obs: PauliObservable | str):
    """``<psi|O|psi>``; returns a float, or an array over the batch axes."""
    if isinstance(obs, str):
        obs = PauliObservable.from_string(obs)
    n = num_qubits_of(state)
    if obs.num_qubits != n:
        raise ValueError(f"observable on {obs.num_qubits} qubits, state on {n}")
    total = np.zeros(state.shape[:-1])
    for coef, word in obs.terms:
        total = total + coef * np.real(np.sum(np.conj(state) * apply_pauli(state, word), axis=-1))
    return float(total) if total.ndim == 0 else total


def expectation_dense(state: np.ndarray, obs: PauliObservable):
    """Reference path: ``<psi|M|psi>`` with the full observable matrix ``M``."""
    m = obs.matrix()
    val = np.real(np.einsum("...i,ij,...j->...", np.conj(state), m, state))
    return float(val) if np.ndim(val) == 0 else val


def pauli_decompose(m, tol: float = 1e-12) -> PauliObservable:
    """Write a Hermitian ``2**n x 2**n`` matrix as a real combination of Pauli strings.

    Coefficients are ``Tr(P M) / 2**n``; terms with ``|c| <= tol`` are dropped
    (an all-zero matrix gives the single term ``0 * I...I``).
    """
    m = np.asarray(m, dtype=complex)
    n = m.shape[0].bit_length() - 1
    if m.shape != (2**n, 2**n) or n < 1:
        raise ValueError(f"expected a 2**n x 2**n matrix, got {m.shape}")
    # axes (r_0, c_0, r_1, c_1, ...), then fold each (r_k, c_k) pair into one index 2 r + c
    t = m.reshape([2] * (2 * n)).transpose([a for k in range(n) for a in (k, n + k)]).reshape([4] * n)
    # basis[p, 2 r + c] = sigma_p[c, r] / 2, so contracting gives Tr(P M) / 2**n
    basis = np.stack([PAULIS[p].T.reshape(4) for p in "IXYZ"]) / 2
    for k in range(n):
        t = np.moveaxis(np.tensordot(basis, t, axes=([1], [k])), 0, k)
    if np.max(np.abs(t.imag)) > 1e-9:
        raise ValueError("matrix is not Hermitian")
    coeffs = t.real
    terms = [
        (float(coeffs[idx]), "".join("IXYZ"[i] for i in idx))
        for idx in np.ndindex(coeffs.shape)
        if abs(coeffs[idx]) > tol
    ]
    return PauliObservable(tuple(terms) or ((0.0, "I" * n),))
