"""Circuit description and evaluation of the model estimate ``h_theta(x)``.

A circuit is: a (possibly parameterised) data embedding, optional variational
gates, a fixed G-invariant block, and a Pauli observable. Evaluation always
starts from ``|0...0>`` (or the amplitude-encoded data state) and returns the
exact expectation value; nothing is sampled.

Rotation conventions: ``RX/RY/RZ(t) = exp(-i t P / 2)`` and ``CRY(t)`` is the
controlled ``RY(t)``. ``generator-exp`` gates are ``exp(+i t H)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property, lru_cache
from typing import Sequence

import numpy as np

from eqvqc.groups import GroupPresentation, Representation, is_invariant
from eqvqc.simulator import (
    PauliObservable,
    append_zero_qubits,
    apply_unitary,
    expectation,
    expectation_dense,
    init_state,
    pauli_matrix,
)
from eqvqc.tensor_core import CNOT_MATRIX, SWAP, embed_operator, expm_from_eigh, herm_eigh, is_hermitian

# -- gate matrices -----------------------------------------------------------------


def rotation(axis: str, angle) -> np.ndarray:
    """``exp(-i angle P / 2)``; an array of angles gives a stack of 2x2 matrices."""
    t = np.asarray(angle, dtype=float) / 2
    c, s = np.cos(t), np.sin(t)
    out = np.zeros(t.shape + (2, 2), dtype=complex)
    if axis == "X":
        out[..., 0, 0] = out[..., 1, 1] = c
        out[..., 0, 1] = out[..., 1, 0] = -1j * s
    elif axis == "Y":
        out[..., 0, 0] = out[..., 1, 1] = c
        out[..., 0, 1] = -s
        out[..., 1, 0] = s
    elif axis == "Z":
        out[..., 0, 0] = np.exp(-1j * t)
        out[..., 1, 1] = np.exp(1j * t)
    else:
        raise ValueError(f"unknown rotation axis {axis!r}")
    return out


def controlled(u: np.ndarray) -> np.ndarray:
    """``|0><0| (x) I + |1><1| (x) U`` (control first), stack-aware."""
    u = np.asarray(u, dtype=complex)
    out = np.zeros(u.shape[:-2] + (4, 4), dtype=complex)
    out[..., 0, 0] = out[..., 1, 1] = 1.0
    out[..., 2:, 2:] = u
    return out


@dataclass(frozen=True, eq=False)
class GateSpec:
    """One gate of a circuit.

    kinds:
      ``fixed``               constant unitary ``matrix`` on ``targets``
      ``rotation``            ``R_axis(theta[param] + x[data])`` on one qubit;
                              either slot may be ``None``
      ``controlled-rotation`` ``C-R_axis(theta[param])``, ``targets = (control, target)``
      ``generator-exp``       ``exp(i theta[param] H)`` with Hermitian ``matrix = H``
    """

    kind: str
    targets: tuple[int, ...]
    axis: str | None = None
    param: int | None = None
    data: int | None = None
    matrix: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "targets", tuple(int(t) for t in self.targets))
        k = len(self.targets)
        if self.kind == "fixed":
            if self.matrix is None or np.shape(self.matrix) != (2**k, 2**k):
                raise ValueError("fixed gate needs a matrix matching its targets")
        elif self.kind == "rotation":
            if k != 1 or self.axis not in ("X", "Y", "Z"):
                raise ValueError("rotation gate acts on one qubit about X, Y or Z")
        elif self.kind == "controlled-rotation":
            if k != 2 or self.axis not in ("X", "Y", "Z") or self.param is None:
                raise ValueError("controlled rotation needs (control, target), an axis and a param slot")
        elif self.kind == "generator-exp":
            if self.param is None or self.matrix is None or not is_hermitian(self.matrix):
                raise ValueError("generator-exp gate needs a Hermitian matrix and a param slot")
            if np.shape(self.matrix) != (2**k, 2**k):
                raise ValueError("generator does not match its targets")
        else:
            raise ValueError(f"unknown gate kind {self.kind!r}")

    @cached_property
    def _eig(self):
        return herm_eigh(self.matrix)

    def unitary(self, theta=None, x=None) -> np.ndarray:
        """Gate matrix; a batch of data rows ``x`` gives a stack of matrices."""
        if self.kind == "fixed":
            return np.asarray(self.matrix, dtype=complex)
        angle = 0.0 if self.param is None else theta[self.param]
        if self.kind == "rotation":
            if self.data is not None:
                angle = angle + np.asarray(x, dtype=float)[..., self.data]
            return rotation(self.axis, angle)
        if self.kind == "controlled-rotation":
            return controlled(rotation(self.axis, angle))
        return expm_from_eigh(*self._eig, angle)


def apply_gates(state: np.ndarray, gates: Sequence[GateSpec], theta=None, x=None) -> np.ndarray:
    for gate in gates:
        state = apply_unitary(state, gate.unitary(theta, x), gate.targets)
    return state


def gates_matrix(gates: Sequence[GateSpec], num_qubits: int, theta=None, x=None) -> np.ndarray:
    """Dense product of a gate list for one data point (reference path)."""
    m = np.eye(2**num_qubits, dtype=complex)
    for gate in gates:
        m = embed_operator(gate.unitary(theta, x), gate.targets, num_qubits) @ m
    return m


def swap_gates(pairs) -> list[GateSpec]:
    return [GateSpec("fixed", pair, matrix=SWAP) for pair in pairs]


def tensor_power_gates(u: np.ndarray, num_qubits: int) -> list[GateSpec]:
    return [GateSpec("fixed", (q,), matrix=u) for q in range(num_qubits)]


# -- embeddings -----------------------------------------------------------------------


class Variant(str, Enum):
    PRODUCT_RY = "PRODUCT_RY"
    RZRY_2FEATURE = "RZRY_2FEATURE"
    GRAPH_CRY = "GRAPH_CRY"
    AMPLITUDE = "AMPLITUDE"
    AMPLITUDE_THEN_UNITARY = "AMPLITUDE_THEN_UNITARY"


@dataclass(frozen=True)
class EmbeddingArch:
    variant: Variant
    num_qubits: int
    layers: int = 0

    def __post_init__(self):
        object.__setattr__(self, "variant", Variant(self.variant))
        if self.num_qubits < 1:
            raise ValueError("embedding needs at least one qubit")
        if self.variant is Variant.AMPLITUDE_THEN_UNITARY and self.layers < 1:
            raise ValueError("AMPLITUDE_THEN_UNITARY needs layers >= 1")

    @property
    def num_params(self) -> int:
        v, n = self.variant, self.num_qubits
        if v in (Variant.PRODUCT_RY, Variant.GRAPH_CRY):
            return n
        if v is Variant.RZRY_2FEATURE:
            return 2 * n
        if v is Variant.AMPLITUDE:
            return 0
        return 2 * n * self.layers

    @property
    def data_shape(self) -> tuple[int, ...]:
        v, n = self.variant, self.num_qubits
        if v is Variant.PRODUCT_RY:
            return (n,)
        if v is Variant.RZRY_2FEATURE:
            return (2,)
        if v is Variant.GRAPH_CRY:
            return (n, n)
        return (2**n,)

    def gates(self) -> list[GateSpec]:
        """Gate list of the data-independent part, for the rotation-based variants.

        ``GRAPH_CRY`` depends on which edges are present and ``AMPLITUDE`` is a
        state preparation, so neither has a fixed gate list.
        """
        v, n = self.variant, self.num_qubits
        if v is Variant.PRODUCT_RY:
            return [GateSpec("rotation", (i,), axis="Y", param=i, data=i) for i in range(n)]
        if v is Variant.RZRY_2FEATURE:
            out = []
            for i in range(n):
                out.append(GateSpec("rotation", (i,), axis="Y", param=i, data=i % 2))
                out.append(GateSpec("rotation", (i,), axis="Z", param=i + n, data=(i + 1) % 2))
            return out
        if v is Variant.AMPLITUDE_THEN_UNITARY:
            return layered_ansatz(n, self.layers)
        if v is Variant.AMPLITUDE:
            return []
        raise ValueError(f"{v.value} has no data-independent gate list")


def layered_ansatz(num_qubits: int, layers: int, offset: int = 0) -> list[GateSpec]:
    """RY and RZ on every qubit per layer, followed by a CNOT chain."""
    gates = []
    p = offset
    for _ in range(layers):
        for q in range(num_qubits):
            gates.append(GateSpec("rotation", (q,), axis="Y", param=p))
            gates.append(GateSpec("rotation", (q,), axis="Z", param=p + 1))
            p += 2
        for q in range(num_qubits - 1):
            gates.append(GateSpec("fixed", (q, q + 1), matrix=CNOT_MATRIX))
    return gates


def graph_edges(adjacency: np.ndarray) -> list[tuple[int, int]]:
    """Edges of a single graph in the order the embedding applies them (lexicographic)."""
    a = np.asarray(adjacency, dtype=bool)
    return [(int(i), int(j)) for i, j in zip(*np.nonzero(a))]


def embedding_gates(arch: EmbeddingArch, theta, x) -> list[GateSpec]:
    """Concrete gate list of the embedding for one data point."""
    if arch.variant is Variant.GRAPH_CRY:
        out = []
        for i, j in graph_edges(x):
            if i == j:
                out.append(GateSpec("rotation", (i,), axis="Y", param=i))
            else:
                out.append(GateSpec("controlled-rotation", (i, j), axis="Y", param=i))
        return out
    return arch.gates()


def amplitude_state(x) -> np.ndarray:
    """Normalised amplitude encoding ``x / ||x||`` (batch-aware)."""
    x = np.asarray(x, dtype=complex)
    norms = np.linalg.norm(x, axis=-1, keepdims=True)
    if np.any(norms == 0):
        raise ValueError("amplitude embedding of the zero vector is undefined")
    return x / norms


def unnormalized_embed_vector(x) -> np.ndarray:
    """The linear map ``x -> sum_k x_k |k>`` (raw amplitudes, not a state)."""
    return np.asarray(x, dtype=complex).copy()


def _as_batch(arch: EmbeddingArch, x) -> tuple[np.ndarray, bool]:
    x = np.asarray(x)
    shape = arch.data_shape
    if x.shape == shape:
        return x[None], True
    if x.shape[1:] != shape:
        raise ValueError(f"{arch.variant.value} expects data of shape {shape}, got {x.shape}")
    return x, False


def _check_theta(theta, count: int) -> np.ndarray:
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (count,):
        raise ValueError(f"expected {count} parameters, got shape {theta.shape}")
    return theta


@lru_cache(maxsize=None)
def _pair_indices(n: int, control: int | None, target: int) -> tuple[np.ndarray, np.ndarray]:
    """Basis indices with the target bit 0 / 1 (and the control bit set, if any)."""
    idx = np.arange(2**n)
    keep = np.ones(2**n, dtype=bool)
    if control is not None:
        keep &= ((idx >> (n - 1 - control)) & 1) == 1
    tbit = (idx >> (n - 1 - target)) & 1
    return idx[keep & (tbit == 0)], idx[keep & (tbit == 1)]


def _graph_cry_batch(theta: np.ndarray, a: np.ndarray) -> np.ndarray:
    """Edge-conditioned RY / CRY network on ``|0...0>``; rows without an edge are untouched.

    RY and CRY are real, so the amplitudes are computed in real arithmetic.
    """
    n = a.shape[-1]
    state = np.zeros((len(a), 2**n))
    state[:, 0] = 1.0
    for i in range(n):
        c, s = np.cos(theta[i] / 2), np.sin(theta[i] / 2)
        for j in range(n):
            present = a[:, i, j]
            if not present.any():
                continue
            rows = np.nonzero(present)[0][:, None]
            i0, i1 = _pair_indices(n, None if i == j else i, j)
            a0, a1 = state[rows, i0], state[rows, i1]
            state[rows, i0] = c * a0 - s * a1
            state[rows, i1] = s * a0 + c * a1
    return state.astype(complex)


def _embed_batch(arch: EmbeddingArch, theta: np.ndarray, x: np.ndarray) -> np.ndarray:
    v, n = arch.variant, arch.num_qubits
    if v in (Variant.AMPLITUDE, Variant.AMPLITUDE_THEN_UNITARY):
        state = amplitude_state(x)
        return apply_gates(state, arch.gates(), theta)
    if v is Variant.GRAPH_CRY:
        return _graph_cry_batch(theta, x.astype(bool))
    state = init_state(n, batch=len(x))
    return apply_gates(state, arch.gates(), theta, x)


def embed(arch: EmbeddingArch, theta, x) -> np.ndarray:
    """State ``E_theta(x)|0>``; a batch of data gives a batch of states."""
    theta = _check_theta(theta, arch.num_params)
    xb, single = _as_batch(arch, x)
    state = _embed_batch(arch, theta, xb)
    return state[0] if single else state


# -- full circuits -------------------------------------------------------------------------


@dataclass(eq=False)
class CircuitSpec:
    """Embedding, variational gates, invariant block and observable.

    Parameter vector layout: the embedding's parameters first, then the slots
    used by ``gates`` (numbered from zero, shifted past the embedding block).
    Qubits beyond ``embedding.num_qubits`` are readout qubits starting in ``|0>``.
    When ``symmetry`` is given, the invariant block, the observable, and every
    variational generator are checked to commute with it.
    """

    embedding: EmbeddingArch
    observable: PauliObservable
    num_qubits: int | None = None
    gates: tuple[GateSpec, ...] = ()
    invariant: tuple[GateSpec, ...] = ()
    symmetry: Representation | None = None
    tol: float = 1e-9
    commutant_norms: dict = field(default_factory=dict, init=False)

    def __post_init__(self):
        if self.num_qubits is None:
            self.num_qubits = self.embedding.num_qubits
        if self.num_qubits < self.embedding.num_qubits:
            raise ValueError("circuit has fewer qubits than its embedding")
        if self.observable.num_qubits != self.num_qubits:
            raise ValueError("observable size does not match the circuit")
        self.gates = tuple(self.gates)
        self.invariant = tuple(self.invariant)
        for g in self.gates + self.invariant:
            if any(t >= self.num_qubits for t in g.targets):
                raise ValueError(f"gate targets {g.targets} out of range")
        for g in self.invariant:
            if g.kind != "fixed":
                raise ValueError("the invariant block must consist of fixed gates")
        if self.symmetry is not None:
            self._check_symmetry()

    def _check_symmetry(self):
        rep = self.symmetry
        if rep.dim != 2**self.num_qubits:
            raise ValueError("symmetry representation does not act on this circuit")
        checks = {
            "invariant_unitary": gates_matrix(self.invariant, self.num_qubits),
            "observable": self.observable.matrix(),
        }
        for k, g in enumerate(self.gates):
            if g.kind == "generator-exp":
                checks[f"generator_{k}"] = embed_operator(g.matrix, g.targets, self.num_qubits)
        for name, m in checks.items():
            ok, worst = is_invariant(rep, m, self.tol)
            self.commutant_norms[name] = worst
            if not ok:
                raise ValueError(f"{name} is not G-invariant (commutator norm {worst:.3e})")

    @property
    def num_params(self) -> int:
        slots = [g.param for g in self.gates if g.param is not None]
        return self.embedding.num_params + (max(slots) + 1 if slots else 0)

    def _variational_theta(self, theta: np.ndarray) -> np.ndarray:
        return theta[self.embedding.num_params :]

    def estimate_batch(self, theta, x) -> np.ndarray:
        theta = _check_theta(theta, self.num_params)
        xb, single = _as_batch(self.embedding, x)
        state = _embed_batch(self.embedding, theta[: self.embedding.num_params], xb)
        state = append_zero_qubits(state, self.num_qubits - self.embedding.num_qubits)
        state = apply_gates(state, self.gates, self._variational_theta(theta))
        state = apply_gates(state, self.invariant)
        vals = np.atleast_1d(expectation(state, self.observable))
        return vals[0] if single else vals

    def estimate_dense(self, theta, x) -> float:
        """Same quantity as :func:`estimate` via full matrices (reference path)."""
        theta = _check_theta(theta, self.num_params)
        arch = self.embedding
        n = self.num_qubits
        if arch.variant in (Variant.AMPLITUDE, Variant.AMPLITUDE_THEN_UNITARY):
            psi = amplitude_state(x)
        else:
            psi = np.zeros(2**arch.num_qubits, dtype=complex)
            psi[0] = 1.0
        psi = np.kron(psi, np.eye(2 ** (n - arch.num_qubits))[0])
        emb = embedding_gates(arch, theta[: arch.num_params], x)
        u = gates_matrix(emb, n, theta[: arch.num_params], x)
        u = gates_matrix(self.gates, n, self._variational_theta(theta)) @ u
        u = gates_matrix(self.invariant, n) @ u
        return expectation_dense(u @ psi, self.observable)


def estimate(spec: CircuitSpec, theta, x) -> float:
    """Model output ``h_theta(x)`` for one data point."""
    return float(spec.estimate_batch(theta, x))


# -- the 2x2 line classifier ------------------------------------------------------------

LINE_GENERATORS = {
    "g01": ((1.0, "IIZ"), (1.0, "IXX")),
    "g02": ((1.0, "IIZ"), (1.0, "XIX")),
}


def line_symmetry() -> Representation:
    """``C2 x C2`` acting on the two image qubits (rotation ``XXI``, flip ``IXI``)."""
    group = GroupPresentation("line2x2", ("rot", "flip"), known_order=4)
    return Representation(group, images={"rot": pauli_matrix("XXI"), "flip": pauli_matrix("IXI")})


def line_classifier_circuit(shared: bool = False, readout_prep: bool = True) -> CircuitSpec:
    """Three-qubit symmetric classifier for 2x2 line images.

    Amplitude-encodes the image on qubits 0-1 and keeps qubit 2 as a readout.
    With ``readout_prep`` a fixed ``RX(pi/2)`` first turns the readout into
    ``|-i>``; then ``exp(i phi_0 (IIZ + IXX))`` and ``exp(i phi_1 (IIZ + XIX))``
    act, and ``Z`` is measured on the readout. ``shared=True`` ties the two
    angles together.

    Both generators commute with ``X`` on either data qubit, so the readout
    only sees the probabilities of the four ``(X_0, X_1)`` sectors of the
    image state. From ``|0>`` the response is even in the sector signs and
    depends on ``<X_0 X_1>`` alone, which is near zero for both classes. From
    ``|-i>`` the response is odd, ``h = c_0 <X_0> + c_1 <X_1>``, and
    ``<X_0> - <X_1> = 2 (a - d)(c - b) / |x|^2`` is positive exactly for
    vertical lines ``(a, b, c, d)``.
    """
    gates = []
    if readout_prep:
        gates.append(GateSpec("fixed", (2,), matrix=rotation("X", np.pi / 2)))
    for k, terms in enumerate(LINE_GENERATORS.values()):
        h = PauliObservable(terms).matrix()
        gates.append(GateSpec("generator-exp", (0, 1, 2), param=0 if shared else k, matrix=h))
    return CircuitSpec(
        embedding=EmbeddingArch(Variant.AMPLITUDE, 2),
        observable=PauliObservable.from_string("IIZ"),
        num_qubits=3,
        gates=tuple(gates),
        symmetry=line_symmetry(),
    )
